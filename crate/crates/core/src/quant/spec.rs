use serde::{Deserialize, Serialize};

use crate::quant::QuantError;
use crate::scalar::{sign, Real};

/// Smallest gap kept between neighbouring levels after a projection.
pub const MIN_LEVEL_GAP: f64 = 1e-6;

/// Symmetric mid-tread quantizer with `2^bits - 1` output values
/// `{0, ±q_1, ..., ±q_M}`, `M = 2^(bits-1) - 1`.
///
/// `levels[0]` is pinned to zero. Threshold `i` separates `levels[i]` and
/// `levels[i + 1]` and is always their midpoint; it is derived, never stored
/// independently of the levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr<T>", into = "SpecRepr<T>", bound = "T: Real")]
pub struct QuantizerSpec<T: Real> {
    bits: u32,
    levels: Vec<T>,
    thresholds: Vec<T>,
    trainable: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct SpecRepr<T: Real> {
    bits: u32,
    levels: Vec<T>,
    trainable: bool,
}

impl<T: Real> TryFrom<SpecRepr<T>> for QuantizerSpec<T> {
    type Error = QuantError;
    fn try_from(r: SpecRepr<T>) -> Result<Self, QuantError> {
        let mut s = QuantizerSpec::new(r.bits, r.levels)?;
        s.trainable = r.trainable;
        Ok(s)
    }
}

impl<T: Real> From<QuantizerSpec<T>> for SpecRepr<T> {
    fn from(s: QuantizerSpec<T>) -> Self {
        SpecRepr {
            bits: s.bits,
            levels: s.levels,
            trainable: s.trainable,
        }
    }
}

impl<T: Real> QuantizerSpec<T> {
    /// `levels` must hold `2^(bits-1)` strictly increasing values starting at 0.
    pub fn new(bits: u32, levels: Vec<T>) -> Result<Self, QuantError> {
        if !(2..=16).contains(&bits) {
            return Err(QuantError::BitWidth(bits));
        }
        let want = 1usize << (bits - 1);
        if levels.len() != want {
            return Err(QuantError::Levels(format!(
                "{bits}-bit quantizer needs {want} magnitude levels, got {}",
                levels.len()
            )));
        }
        if levels[0] != T::zero() {
            return Err(QuantError::Levels("the first level must be 0".into()));
        }
        if levels.iter().any(|l| !l.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QuantError::Levels("levels must be finite and strictly increasing".into()));
        }
        let thresholds = midpoints(&levels);
        Ok(QuantizerSpec {
            bits,
            levels,
            thresholds,
            trainable: false,
        })
    }

    /// Evenly spaced magnitude levels over `[0, max]`.
    pub fn uniform(bits: u32, max: T) -> Result<Self, QuantError> {
        if !(2..=16).contains(&bits) {
            return Err(QuantError::BitWidth(bits));
        }
        let count = (1usize << (bits - 1)) - 1;
        let max = if max > T::zero() { max } else { T::lit(MIN_LEVEL_GAP) * T::lit(count as f64) };
        let step = max / T::lit(count as f64);
        let mut levels: Vec<T> = (0..=count).map(|i| step * T::lit(i as f64)).collect();
        levels[count] = max;
        Self::new(bits, levels)
    }

    pub fn with_trainable(mut self, trainable: bool) -> Self {
        self.trainable = trainable;
        self
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn max_level(&self) -> T {
        *self.levels.last().expect("at least two levels")
    }

    /// Number of trainable magnitudes (`q_1 ..= q_M`).
    pub fn n_free_levels(&self) -> usize {
        self.levels.len() - 1
    }

    /// Index of the magnitude level `|x|` falls into (0 is the dead zone).
    #[inline]
    pub fn level_index(&self, x: T) -> usize {
        let ax = x.abs();
        self.thresholds.partition_point(|&t| t <= ax)
    }

    #[inline]
    pub fn quantize(&self, x: T) -> T {
        match self.level_index(x) {
            0 => T::zero(),
            i => sign(x) * self.levels[i],
        }
    }

    /// Straight-through derivative with respect to the input.
    #[inline]
    pub fn grad_input(&self, _x: T) -> T {
        T::one()
    }

    /// Derivative of `Q(x)` with respect to `q_1 ..= q_M`.
    pub fn grad_levels(&self, x: T) -> Vec<T> {
        let mut g = vec![T::zero(); self.n_free_levels()];
        let i = self.level_index(x);
        if i > 0 {
            g[i - 1] = sign(x);
        }
        g
    }

    /// Replaces `q_1 ..= q_M`, projecting them back to a strictly increasing
    /// positive sequence and recomputing the thresholds.
    pub fn set_free_levels(&mut self, free: &[T]) {
        assert_eq!(free.len(), self.n_free_levels());
        let gap = T::lit(MIN_LEVEL_GAP);
        let mut sorted: Vec<T> = free.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut prev = T::zero();
        for (slot, v) in self.levels[1..].iter_mut().zip(sorted) {
            let v = if v.is_finite() { v } else { prev + gap };
            let v = if v < prev + gap { prev + gap } else { v };
            *slot = v;
            prev = v;
        }
        self.thresholds = midpoints(&self.levels);
    }
}

fn midpoints<T: Real>(levels: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    levels.windows(2).map(|w| (w[0] + w[1]) * half).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuantizerSpec<f64> {
        QuantizerSpec::new(2, vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn three_level_example() {
        let q = QuantizerSpec::<f64>::new(3, vec![0.0, 1.0, 2.5, 4.0]).unwrap();
        assert_eq!(q.thresholds(), &[0.5, 1.75, 3.25]);
        assert_eq!(q.quantize(0.3), 0.0);
        assert_eq!(q.quantize(-2.0), -2.5);
        assert_eq!(q.quantize(1.0), 1.0);
        assert_eq!(q.grad_levels(1.0), vec![1.0, 0.0, 0.0]);
        assert_eq!(q.grad_levels(-5.0), vec![0.0, 0.0, -1.0]);
        assert_eq!(q.grad_levels(0.1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn straight_through_input_gradient() {
        let q = spec();
        assert_eq!(q.grad_input(0.0), 1.0);
        assert_eq!(q.grad_input(0.5), 1.0);
        assert_eq!(q.grad_input(100.0), 1.0);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(QuantizerSpec::<f64>::new(1, vec![0.0]).is_err());
        assert!(QuantizerSpec::<f64>::new(2, vec![0.5, 1.0]).is_err());
        assert!(QuantizerSpec::<f64>::new(2, vec![0.0, 0.0]).is_err());
        assert!(QuantizerSpec::<f64>::new(3, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn uniform_levels() {
        let q = QuantizerSpec::<f64>::uniform(3, 8.0).unwrap();
        let want = [0.0, 8.0 / 3.0, 16.0 / 3.0, 8.0];
        for (a, b) in q.levels().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_restores_order() {
        let mut q = QuantizerSpec::<f64>::new(3, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        q.set_free_levels(&[2.0, -1.0, 2.0]);
        let l = q.levels();
        assert_eq!(l[0], 0.0);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        for (i, t) in q.thresholds().iter().enumerate() {
            assert_eq!(*t, (l[i] + l[i + 1]) / 2.0);
        }
    }

    #[test]
    fn serde_round_trip() {
        let q = QuantizerSpec::<f64>::new(3, vec![0.0, 1.0, 2.5, 4.0]).unwrap().with_trainable(true);
        let s = serde_json::to_string(&q).unwrap();
        let back: QuantizerSpec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
