//! Single-node update rules. The unrolled engine inlines the same arithmetic;
//! these functions are the reference forms used by callers and tests.

use crate::msgpass::M_CLIP;
use crate::scalar::{clip, odd_atanh, sign, Real};

/// Largest product magnitude fed to `atanh`, so CN outputs stay finite.
#[inline]
pub fn product_limit<T: Real>() -> T {
    let t9 = T::lit(M_CLIP / 2.0).tanh();
    let cap = T::one() - T::epsilon();
    if t9 < cap {
        t9
    } else {
        cap
    }
}

/// Extrinsic minimum placeholder for a check with a single neighbour.
pub const EMPTY_MIN: f64 = 1e6;

/// `w_vc * (w_ch * mu_ch + sum(incoming))`.
pub fn vn_update<T: Real>(mu_ch: T, incoming: &[T], w_ch: T, w_vc: T) -> T {
    let mut acc = w_ch * mu_ch;
    for &m in incoming {
        acc += m;
    }
    w_vc * acc
}

/// `2 w_c atanh(prod tanh(mu / 2))`, output clipped to `±M_CLIP`.
pub fn cn_update_exact<T: Real>(incoming: &[T], w_c: T) -> T {
    if let [m] = incoming {
        return clip(w_c * clip(*m, T::lit(M_CLIP)), T::lit(M_CLIP));
    }
    let half = T::lit(0.5);
    let mut p = T::one();
    for &m in incoming {
        p *= (clip(m, T::lit(M_CLIP)) * half).tanh();
    }
    let lim = product_limit::<T>();
    let p = clip(p, lim);
    clip(w_c * T::lit(2.0) * odd_atanh(p), T::lit(M_CLIP))
}

fn min_and_sign<T: Real>(incoming: &[T]) -> (T, T) {
    let mut min = T::lit(EMPTY_MIN);
    let mut s = T::one();
    for &m in incoming {
        min = min.min(m.abs());
        s *= sign(m);
    }
    (min, s)
}

/// `min|mu| * prod sign(mu)`.
pub fn cn_update_minsum<T: Real>(incoming: &[T]) -> T {
    let (min, s) = min_and_sign(incoming);
    s * min
}

/// Offset min-sum with one offset per check.
pub fn cn_update_oms<T: Real>(incoming: &[T], beta: T) -> T {
    let (min, s) = min_and_sign(incoming);
    s * (min - beta).max(T::zero())
}

/// Offset min-sum with the offset of the outgoing edge.
pub fn cn_update_noms<T: Real>(incoming: &[T], beta_edge: T) -> T {
    cn_update_oms(incoming, beta_edge)
}

/// `w_ch * mu_ch + sum(incoming_all)`.
pub fn marginalize<T: Real>(mu_ch: T, incoming_all: &[T], w_ch: T) -> T {
    let mut acc = w_ch * mu_ch;
    for &m in incoming_all {
        acc += m;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vn_examples() {
        assert_eq!(vn_update(1.0, &[-0.25], 1.0, 1.0), 0.75);
        assert_eq!(vn_update(1.0, &[-0.25], 0.5, 2.0), 0.5);
        assert_eq!(vn_update(0.0, &[], 1.0, 1.0), 0.0);
    }

    #[test]
    fn exact_cn_examples() {
        let v = cn_update_exact(&[2.0, 2.0], 1.0);
        let want = 2.0 * (1.0f64.tanh() * 1.0f64.tanh()).atanh();
        assert!((v - want).abs() < 1e-12);
        assert!((v - 1.3250027).abs() < 1e-6);
        assert_eq!(cn_update_exact(&[3.7, 0.0], 1.0), 0.0);
        assert_eq!(cn_update_exact(&[2.0, 2.0], 0.0), 0.0);
    }

    #[test]
    fn exact_cn_saturates_finitely() {
        let v = cn_update_exact(&[100.0f64, 100.0, 100.0], 1.0);
        assert!(v.is_finite() && v > 0.0 && v <= M_CLIP);
        let v32 = cn_update_exact(&[100.0f32, 100.0], 1.0);
        assert!(v32.is_finite() && v32 > 0.0);
    }

    #[test]
    fn min_sum_family_examples() {
        assert_eq!(cn_update_minsum(&[2.0, -3.0]), -2.0);
        assert_eq!(cn_update_oms(&[2.0, -3.0], 0.5), -1.5);
        let v = cn_update_noms(&[2.0f64, -3.0], 2.5);
        assert_eq!(v.abs(), 0.0);
        assert_eq!(cn_update_minsum(&[0.0, -3.0]), -0.0);
    }

    #[test]
    fn marginalize_examples() {
        assert_eq!(marginalize(1.0, &[0.5, -0.25], 1.0), 1.25);
        assert_eq!(marginalize(0.7, &[], 1.0), 0.7);
        assert_eq!(marginalize(1.0, &[0.5], 0.0), 0.5);
    }
}
