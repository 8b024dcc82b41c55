use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::msgpass::M_CLIP;
use crate::scalar::{clip, Real};

/// BPSK over AWGN at a given `Eb/N0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub ebn0_db: f64,
    pub rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(ebn0_db: f64, rate: f64, seed: u64) -> Self {
        ChannelConfig { ebn0_db, rate, seed }
    }

    pub fn sigma2(&self) -> f64 {
        noise_variance(self.ebn0_db, self.rate)
    }
}

/// `σ² = 1 / (2 R 10^(Eb/N0 / 10))` for unit-energy symbols.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))
}

/// LLR of one BPSK channel output.
#[inline]
pub fn output_llr(y: f64, sigma2: f64) -> f64 {
    2.0 * y / sigma2
}

/// Channel LLRs `2y/σ²` with `y = 1 − 2b + n`, without clipping.
pub fn awgn_llr_unclipped<R: Rng + ?Sized>(bits: &[u8], sigma2: f64, rng: &mut R, out: &mut [f64]) {
    let sigma = sigma2.sqrt();
    for (o, &b) in out.iter_mut().zip(bits) {
        let z: f64 = rng.sample(StandardNormal);
        let y = 1.0 - 2.0 * f64::from(b) + sigma * z;
        *o = output_llr(y, sigma2);
    }
}

/// Clipped channel LLRs written into `out`.
pub fn awgn_llr_into<T: Real, R: Rng + ?Sized>(bits: &[u8], sigma2: f64, rng: &mut R, out: &mut [T]) {
    let sigma = sigma2.sqrt();
    for (o, &b) in out.iter_mut().zip(bits) {
        let z: f64 = rng.sample(StandardNormal);
        let y = 1.0 - 2.0 * f64::from(b) + sigma * z;
        *o = T::lit(clip(output_llr(y, sigma2), M_CLIP));
    }
}

pub fn awgn_llr<T: Real, R: Rng + ?Sized>(bits: &[u8], cfg: &ChannelConfig, rng: &mut R) -> Vec<T> {
    let mut out = vec![T::zero(); bits.len()];
    awgn_llr_into(bits, cfg.sigma2(), rng, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_variance_at_3db() {
        let s2 = noise_variance(10.0 * 2f64.log10(), 0.5);
        assert!((s2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_output_llr() {
        assert_eq!(output_llr(1.0, 0.5), 4.0);
    }

    #[test]
    fn huge_snr_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ChannelConfig::new(200.0, 0.5, 0);
        let llr: Vec<f64> = awgn_llr(&[0, 1, 0], &cfg, &mut rng);
        assert_eq!(llr, vec![M_CLIP, -M_CLIP, M_CLIP]);
    }

    #[test]
    fn seeded_draws_repeat() {
        let cfg = ChannelConfig::new(2.0, 0.5, 0);
        let a: Vec<f32> = awgn_llr(&[0; 16], &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let b: Vec<f32> = awgn_llr(&[0; 16], &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}
