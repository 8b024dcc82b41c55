use rayon::prelude::*;

use crate::msgpass::{engine, Decoder, Workspace};
use crate::scalar::{sigmoid, Real};
use crate::training::{layer_weights, TrainError};

/// Gradients of the batch loss, laid out like the weight values and the
/// flattened free quantizer levels.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T> {
    pub weights: Vec<T>,
    pub levels: Vec<T>,
}

impl<T: Real> GradientSet<T> {
    pub fn zeros(decoder: &Decoder<T>) -> Self {
        GradientSet {
            weights: vec![T::zero(); decoder.weights().len()],
            levels: vec![T::zero(); decoder.quantization().map_or(0, |q| q.n_level_params())],
        }
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += *b;
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            *a += *b;
        }
    }

    fn scale(&mut self, s: T) {
        self.weights.iter_mut().chain(self.levels.iter_mut()).for_each(|g| *g *= s);
    }

    /// Both blocks concatenated, weights first.
    pub fn flat(&self) -> Vec<T> {
        let mut v = self.weights.clone();
        v.extend_from_slice(&self.levels);
        v
    }
}

/// Samples per unit of parallel work. Fixed so the summation order, and hence
/// the result, does not depend on the number of threads.
pub const CHUNK: usize = 8;

fn sample_loss<T: Real>(ws: &Workspace<T>, l_max: usize, bits: Option<&[u8]>, a: &[f64]) -> T {
    let mut total = T::zero();
    for l in 0..l_max {
        let lam = &ws.posteriors()[l];
        let n = T::lit(lam.len() as f64);
        let mut s = T::zero();
        for (v, &x) in lam.iter().enumerate() {
            let o = sigmoid(-x);
            s += if bits.is_some_and(|b| b[v] == 1) { T::one() - o } else { o };
        }
        total += T::lit(a[l]) * s / n;
    }
    total
}

fn chunk_pass<T: Real>(
    decoder: &Decoder<T>,
    llrs: &[Vec<T>],
    bits: Option<&[Vec<u8>]>,
    a: &[f64],
    ws: &mut Workspace<T>,
) -> (T, GradientSet<T>) {
    let l_max = decoder.l_max();
    let n = decoder.n();
    let mut g = GradientSet::zeros(decoder);
    let mut loss = T::zero();
    let coef: Vec<T> = a.iter().map(|&w| T::lit(w / n as f64)).collect();
    for (i, mu) in llrs.iter().enumerate() {
        let b = bits.map(|b| b[i].as_slice());
        engine::forward(decoder, ws, mu, None);
        loss += sample_loss(ws, l_max, b, a);
        let seed = |l: usize, v: usize, x: T| {
            let o = sigmoid(-x);
            let d = -o * (T::one() - o);
            let d = if b.is_some_and(|b| b[v] == 1) { -d } else { d };
            coef[l] * d
        };
        engine::backward(decoder, ws, seed, &mut g.weights, &mut g.levels);
    }
    (loss, g)
}

/// Batch-mean multiloss and its exact gradient.
///
/// `bits` gives the transmitted words; `None` means all-zero. Gradients with
/// respect to weights pass through weight quantizers unchanged; level
/// gradients of all quantizers are included when a quantization plan is set.
pub fn loss_and_gradients<T: Real>(
    decoder: &Decoder<T>,
    llrs: &[Vec<T>],
    bits: Option<&[Vec<u8>]>,
    eta: f64,
) -> Result<(T, GradientSet<T>), TrainError> {
    for mu in llrs {
        if mu.len() != decoder.n() {
            return Err(TrainError::Dimension {
                expected: decoder.n(),
                found: mu.len(),
            });
        }
    }
    let mut total = GradientSet::zeros(decoder);
    if llrs.is_empty() {
        return Ok((T::zero(), total));
    }
    let a = layer_weights(decoder.l_max(), eta);
    let parts: Vec<(T, GradientSet<T>)> = llrs
        .par_chunks(CHUNK)
        .enumerate()
        .map_init(
            || decoder.workspace(),
            |ws, (ci, chunk)| {
                let b = bits.map(|b| &b[ci * CHUNK..ci * CHUNK + chunk.len()]);
                chunk_pass(decoder, chunk, b, &a, ws)
            },
        )
        .collect();
    let mut loss = T::zero();
    for (l, g) in &parts {
        loss += *l;
        total.add(g);
    }
    let inv = T::one() / T::lit(llrs.len() as f64);
    loss *= inv;
    total.scale(inv);
    decoder.accumulate_weight_level_grads(&total.weights, &mut total.levels);

    if !loss.is_finite() {
        return Err(TrainError::NonFiniteLoss);
    }
    if let Some(i) = total.weights.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient {
            index: i,
            param: decoder.weights().layout().locate(i),
        });
    }
    if let Some(i) = total.levels.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient {
            index: total.weights.len() + i,
            param: None,
        });
    }
    Ok((loss, total))
}

/// Batch-mean multiloss without gradients.
pub fn batch_loss<T: Real>(decoder: &Decoder<T>, llrs: &[Vec<T>], bits: Option<&[Vec<u8>]>, eta: f64) -> T {
    if llrs.is_empty() {
        return T::zero();
    }
    let a = layer_weights(decoder.l_max(), eta);
    let l_max = decoder.l_max();
    let parts: Vec<T> = llrs
        .par_chunks(CHUNK)
        .enumerate()
        .map_init(
            || decoder.workspace(),
            |ws, (ci, chunk)| {
                let mut s = T::zero();
                for (i, mu) in chunk.iter().enumerate() {
                    engine::forward(decoder, ws, mu, None);
                    s += sample_loss(ws, l_max, bits.map(|b| b[ci * CHUNK + i].as_slice()), &a);
                }
                s
            },
        )
        .collect();
    parts.into_iter().fold(T::zero(), |a, b| a + b) / T::lit(llrs.len() as f64)
}

