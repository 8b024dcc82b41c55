use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::msgpass::Decoder;
use crate::scalar::Real;
use crate::simulation::{awgn_llr_into, noise_variance};
use crate::training::{adam_step, loss_and_gradients, AdamConfig, AdamState, TrainError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub eta_init: f64,
    pub eta_decay: f64,
    pub eta_period: u64,
    pub max_batches: u64,
    pub plateau_window: usize,
    pub rel_improve: f64,
    pub train_ebn0_db: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            eta_init: 1.0,
            eta_decay: 0.8,
            eta_period: 3000,
            max_batches: 100_000,
            plateau_window: 100,
            rel_improve: 1e-3,
            train_ebn0_db: 4.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::Config(what.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.adam_eps > 0.0) {
            return bad("learning_rate and adam_eps must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.eta_init > 0.0 && self.eta_init <= 1.0) || !(self.eta_decay > 0.0 && self.eta_decay <= 1.0) {
            return bad("eta_init and eta_decay must lie in (0, 1]");
        }
        if self.eta_period == 0 || self.plateau_window == 0 {
            return bad("eta_period and plateau_window must be positive");
        }
        if self.rel_improve < 0.0 {
            return bad("rel_improve must be non-negative");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    /// η in force for batch `batch` (0-based).
    pub fn eta_at(&self, batch: u64) -> f64 {
        self.eta_init * self.eta_decay.powi((batch / self.eta_period) as i32)
    }
}

/// Channel LLRs of `cfg.batch_size` all-zero codewords at `cfg.train_ebn0_db`.
pub fn sample_batch<T: Real>(code: &LinearCode, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let sigma2 = noise_variance(cfg.train_ebn0_db, code.rate());
    let zeros = vec![0u8; code.n()];
    (0..cfg.batch_size)
        .map(|_| {
            let mut mu = vec![T::zero(); code.n()];
            awgn_llr_into(&zeros, sigma2, rng, &mut mu);
            mu
        })
        .collect()
}

/// Batch index, batch loss and η of one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub batch_index: u64,
    pub loss: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Plateau,
    MaxBatches,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Real> {
    /// The decoder at the best loss window (the input decoder if no step ran).
    pub decoder: Decoder<T>,
    pub history: Vec<LossRecord>,
    /// Best sliding-window mean loss, or the mean of all batches when fewer
    /// than one window ran. NaN when no batch ran.
    pub best_loss: f64,
    pub stop: StopReason,
    /// The error that ended training early, if any.
    pub divergence: Option<String>,
}

/// Trainable parameter vector of a decoder: weight values followed by the free
/// quantizer levels.
pub fn parameters<T: Real>(decoder: &Decoder<T>) -> (Vec<T>, Vec<bool>) {
    let mut p = decoder.weights().values().to_vec();
    let mut mask = vec![true; p.len()];
    if let Some(q) = decoder.quantization() {
        p.extend(q.free_levels());
        mask.extend(q.trainable_mask());
    }
    (p, mask)
}

pub fn set_parameters<T: Real>(decoder: &mut Decoder<T>, p: &[T]) {
    let nw = decoder.weights().len();
    decoder.set_weight_values(&p[..nw]);
    if decoder.quantization().is_some() {
        decoder.set_free_levels(&p[nw..]);
    }
}

/// Adam on the multiloss until the windowed loss stops improving or
/// `max_batches` is reached. η restarts at `eta_init` on every call.
///
/// A window improves when its mean drops below `(1 − rel_improve)` times the
/// best previous window mean; training stops after `plateau_window` batches
/// without improvement.
pub fn train_until_plateau<T: Real>(decoder: &Decoder<T>, code: &LinearCode, cfg: &TrainConfig) -> Result<TrainOutcome<T>, TrainError> {
    cfg.validate()?;
    if code.n() != decoder.n() {
        return Err(TrainError::Dimension {
            expected: decoder.n(),
            found: code.n(),
        });
    }
    let mut work = decoder.clone().without_early_stopping();
    let (mut params, mask) = parameters(&work);
    let mut state = AdamState::new(params.len());
    let adam = cfg.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut history = Vec::new();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(cfg.plateau_window);
    let mut window_sum = 0.0;
    let mut best: Option<(f64, Vec<T>)> = None;
    let mut last_improve = 0u64;
    let mut stop = StopReason::MaxBatches;
    let mut divergence = None;

    for b in 0..cfg.max_batches {
        let eta = cfg.eta_at(b);
        let batch = sample_batch::<T>(code, cfg, &mut rng);
        let (loss, grads) = match loss_and_gradients(&work, &batch, None, eta) {
            Ok(r) => r,
            Err(e) => {
                stop = StopReason::Diverged;
                divergence = Some(format!("batch {b}: {e}"));
                break;
            }
        };
        let loss = loss.as_f64();
        history.push(LossRecord {
            batch_index: b,
            loss,
            eta,
        });
        if window.len() == cfg.plateau_window {
            window_sum -= window.pop_front().unwrap_or(0.0);
        }
        window.push_back(loss);
        window_sum += loss;
        if window.len() == cfg.plateau_window {
            let mean = window_sum / cfg.plateau_window as f64;
            match &best {
                Some((bl, _)) if mean >= bl * (1.0 - cfg.rel_improve) => {
                    if b - last_improve >= cfg.plateau_window as u64 {
                        stop = StopReason::Plateau;
                        break;
                    }
                }
                _ => {
                    // the window's losses were measured before this step's update
                    best = Some((mean, params.clone()));
                    last_improve = b;
                }
            }
        }
        adam_step(&mut params, &grads.flat(), &mut state, &adam, Some(&mask));
        set_parameters(&mut work, &params);
        // projection may have moved levels
        params = parameters(&work).0;
    }

    let best_loss = match &best {
        Some((l, p)) => {
            set_parameters(&mut work, p);
            *l
        }
        None if history.is_empty() => {
            set_parameters(&mut work, &parameters(decoder).0);
            f64::NAN
        }
        None => history.iter().map(|r| r.loss).sum::<f64>() / history.len() as f64,
    };
    if let Some(h) = decoder.early_stopping() {
        work = work.with_early_stopping(h.clone())?;
    }
    Ok(TrainOutcome {
        decoder: work,
        history,
        best_loss,
        stop,
        divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::rm_code;
    use crate::msgpass::{CnMode, IterationPlan, OffsetMode, Variant, WeightSet, M_CLIP};

    fn small() -> (LinearCode, Decoder<f64>) {
        let code = rm_code(1, 3).unwrap();
        let plan = IterationPlan::uniform(code.h_std().clone(), 2).unwrap();
        let w = WeightSet::new(&plan, true, CnMode::Tied, OffsetMode::None, 0.0);
        (code, Decoder::new(plan, w, Variant::Exact).unwrap())
    }

    #[test]
    fn huge_snr_batches_saturate() {
        let code = rm_code(1, 3).unwrap();
        let cfg = TrainConfig {
            train_ebn0_db: 300.0,
            batch_size: 3,
            ..Default::default()
        };
        let b: Vec<Vec<f64>> = sample_batch(&code, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(b.iter().flatten().all(|&x| x == M_CLIP));
    }

    #[test]
    fn batches_repeat_for_a_seed() {
        let code = rm_code(1, 3).unwrap();
        let cfg = TrainConfig::default();
        let a: Vec<Vec<f32>> = sample_batch(&code, &cfg, &mut ChaCha8Rng::seed_from_u64(4));
        let b: Vec<Vec<f32>> = sample_batch(&code, &cfg, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_batches_leave_weights() {
        let (code, d) = small();
        let cfg = TrainConfig {
            max_batches: 0,
            ..Default::default()
        };
        let out = train_until_plateau(&d, &code, &cfg).unwrap();
        assert_eq!(out.decoder.weights().values(), d.weights().values());
        assert!(out.history.is_empty());
    }

    #[test]
    fn eta_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.eta_at(0), 1.0);
        assert_eq!(cfg.eta_at(2999), 1.0);
        assert!((cfg.eta_at(3000) - 0.8).abs() < 1e-15);
        assert!((cfg.eta_at(6001) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn plateau_on_flat_landscape() {
        // noiseless inputs: the loss is constant to machine precision
        let (code, d) = small();
        let cfg = TrainConfig {
            train_ebn0_db: 300.0,
            batch_size: 4,
            plateau_window: 10,
            max_batches: 1000,
            ..Default::default()
        };
        let out = train_until_plateau(&d, &code, &cfg).unwrap();
        assert_eq!(out.stop, StopReason::Plateau);
        assert_eq!(out.history.len(), 20);
    }

    #[test]
    fn deterministic_trajectories() {
        let (code, d) = small();
        let cfg = TrainConfig {
            batch_size: 16,
            max_batches: 30,
            plateau_window: 5,
            train_ebn0_db: 1.0,
            ..Default::default()
        };
        let a = train_until_plateau(&d, &code, &cfg).unwrap();
        let b = train_until_plateau(&d, &code, &cfg).unwrap();
        assert_eq!(a.decoder.weights().values(), b.decoder.weights().values());
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn rejects_bad_config() {
        let (code, d) = small();
        let cfg = TrainConfig {
            eta_init: 1.5,
            ..Default::default()
        };
        assert!(matches!(train_until_plateau(&d, &code, &cfg), Err(TrainError::Config(_))));
    }
}
