use crate::scalar::Real;

/// Mean over bits of `o_i` where `b_i = 0` and `1 − o_i` where `b_i = 1`.
pub fn soft_ber_loss<T: Real>(o: &[T], b: &[u8]) -> T {
    if o.is_empty() {
        return T::zero();
    }
    let mut acc = T::zero();
    for (&oi, &bi) in o.iter().zip(b) {
        acc += if bi == 0 { oi } else { T::one() - oi };
    }
    acc / T::lit(o.len() as f64)
}

/// Normalized layer weights `η^(L−1−ℓ) / Σ_j η^(L−1−j)` for `ℓ = 0..L`.
pub fn layer_weights(l_max: usize, eta: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..l_max).map(|l| eta.powi((l_max - 1 - l) as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|a| a / total).collect()
}

/// Soft BER of every layer, combined with [`layer_weights`].
pub fn multiloss<T: Real>(o_layers: &[Vec<T>], b: &[u8], eta: f64) -> T {
    let a = layer_weights(o_layers.len(), eta);
    o_layers
        .iter()
        .zip(a)
        .fold(T::zero(), |acc, (o, w)| acc + T::lit(w) * soft_ber_loss(o, b))
}

/// Multiloss from per-layer soft BERs already computed.
pub fn combine_layer_losses(losses: &[f64], eta: f64) -> f64 {
    layer_weights(losses.len(), eta).iter().zip(losses).map(|(a, l)| a * l).sum()
}
