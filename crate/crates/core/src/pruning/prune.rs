use serde::{Deserialize, Serialize};

use crate::codes::{LinearCode, ParityCheckMatrix};
use crate::msgpass::{CnMode, Decoder, IterationPlan, OffsetMode, Variant, WeightSet};
use crate::pruning::{select_candidates, select_max_weight, select_random, PruneError};
use crate::scalar::Real;
use crate::simulation::{simulate_blocks, BlockOutcome};
use crate::training::{train_until_plateau, LossRecord, StopReason, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PruneStop {
    /// Stop once the retrained loss exceeds `(1 + slack)` times the best loss.
    LossIncrease { slack: f64 },
    /// Stop when this many checks remain.
    TargetCnCount { target: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    MinWeight,
    MaxWeight,
    Random { seed: u64 },
    /// Train once, keep the `count` largest-|w_c| checks, retrain once.
    OneShot { count: usize },
}

/// Checks pruned per step as a function of how many remain: the first entry
/// whose threshold is below the remaining count applies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupSchedule(pub Vec<(usize, usize)>);

impl Default for GroupSchedule {
    fn default() -> Self {
        GroupSchedule(vec![(10_000, 25), (2_000, 5), (0, 1)])
    }
}

impl GroupSchedule {
    pub fn per_step(&self, remaining: usize) -> usize {
        self.0
            .iter()
            .find(|(above, _)| remaining > *above)
            .map_or(1, |&(_, k)| k.max(1))
    }
}

/// Fixed-sample BLER measurement after each retraining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlerProbe {
    pub ebn0_db: f64,
    pub blocks: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub stop_rule: PruneStop,
    pub group_schedule: GroupSchedule,
    pub strategy: Strategy,
    pub probe: Option<BlerProbe>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            stop_rule: PruneStop::LossIncrease { slack: 0.05 },
            group_schedule: GroupSchedule::default(),
            strategy: Strategy::MinWeight,
            probe: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub step: usize,
    pub pruned: Vec<(usize, usize)>,
    pub loss_after_retrain: f64,
    pub remaining_cn: usize,
    pub bler_probe: Option<f64>,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneEnd {
    LossIncrease,
    Target,
    OneShot,
    /// No admissible candidate left.
    Exhausted,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome<T: Real> {
    /// Best snapshot (loss rule) or the decoder at the target.
    pub decoder: Decoder<T>,
    pub best_step: usize,
    pub history: Vec<PruneRecord>,
    pub end: PruneEnd,
    pub divergence: Option<String>,
    pub total_batches: usize,
}

/// Decoder families the loop can start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Exact CN rule, channel and VN→CN weights, one weight per CN.
    Nbp,
    /// Offset min-sum with per-edge offsets and one weight per CN.
    Noms,
}

/// All-ones starting point on `h` repeated over `l_max` iterations.
pub fn initial_decoder<T: Real>(h: ParityCheckMatrix, l_max: usize, family: Family) -> Result<Decoder<T>, PruneError> {
    let plan = IterationPlan::uniform(h, l_max)?;
    let d = match family {
        Family::Nbp => Decoder::new(plan.clone(), WeightSet::tied(&plan), Variant::Exact)?,
        Family::Noms => {
            let w = WeightSet::new(&plan, false, CnMode::Tied, OffsetMode::PerEdge, T::zero());
            Decoder::new(plan, w, Variant::Noms)?
        }
    };
    Ok(d)
}

/// Deactivates `victims` and drops their parameters.
pub fn apply_prune<T: Real>(decoder: &Decoder<T>, victims: &[(usize, usize)]) -> Result<Decoder<T>, PruneError> {
    let old = decoder.plan();
    let mut plan = old.clone();
    for &(l, c) in victims {
        plan.deactivate(l, c)?;
    }
    let weights = decoder.weights().restrict(old, &plan)?;
    let mut out = decoder.clone();
    out.replace_plan(plan, weights)?;
    Ok(out)
}

/// Fraction of `blocks` fixed blocks decoded wrongly.
pub fn probe_bler<T: Real>(decoder: &Decoder<T>, code: &LinearCode, probe: &BlerProbe) -> Result<f64, PruneError> {
    let d = decoder.clone().without_early_stopping();
    let out: Vec<BlockOutcome> = simulate_blocks(&d, code, probe.ebn0_db, probe.seed, 0..probe.blocks)?;
    Ok(out.iter().filter(|o| o.block_error).count() as f64 / probe.blocks.max(1) as f64)
}

fn retrain<T: Real>(
    d: &Decoder<T>,
    code: &LinearCode,
    tcfg: &TrainConfig,
    step: usize,
) -> Result<(Decoder<T>, f64, Vec<LossRecord>, Option<String>), PruneError> {
    let cfg = TrainConfig {
        seed: tcfg.seed.wrapping_add(step as u64),
        ..tcfg.clone()
    };
    let out = train_until_plateau(d, code, &cfg)?;
    let div = (out.stop == StopReason::Diverged).then(|| out.divergence.unwrap_or_default());
    Ok((out.decoder, out.best_loss, out.history, div))
}

/// Alternates retraining and check pruning, starting from `decoder`.
///
/// `on_step` sees every record together with the decoder it describes.
pub fn prune_loop<T: Real>(
    code: &LinearCode,
    decoder: &Decoder<T>,
    cfg: &PruneConfig,
    tcfg: &TrainConfig,
    mut on_step: impl FnMut(&PruneRecord, &Decoder<T>),
) -> Result<PruneOutcome<T>, PruneError> {
    if let PruneStop::LossIncrease { slack } = cfg.stop_rule {
        if !(slack >= 0.0) {
            return Err(PruneError::Config("loss_increase slack must be non-negative".into()));
        }
    }
    let mut history = Vec::new();
    let mut total_batches = 0;
    let (mut cur, loss0, h0, div) = retrain(decoder, code, tcfg, 0)?;
    total_batches += h0.len();
    let record = |step: usize, pruned: Vec<(usize, usize)>, loss: f64, d: &Decoder<T>, batches: usize| -> Result<PruneRecord, PruneError> {
        Ok(PruneRecord {
            step,
            pruned,
            loss_after_retrain: loss,
            remaining_cn: d.plan().total_active(),
            bler_probe: cfg.probe.as_ref().map(|p| probe_bler(d, code, p)).transpose()?,
            batches,
        })
    };
    if let Some(e) = div {
        return Ok(PruneOutcome {
            decoder: decoder.clone(),
            best_step: 0,
            history,
            end: PruneEnd::Diverged,
            divergence: Some(e),
            total_batches,
        });
    }
    let r = record(0, Vec::new(), loss0, &cur, h0.len())?;
    on_step(&r, &cur);
    history.push(r);

    let mut best = (loss0, cur.clone(), 0usize);
    let mut step = 0;
    let end = loop {
        step += 1;
        let remaining = cur.plan().total_active();
        let count = match (cfg.strategy, cfg.stop_rule) {
            (Strategy::OneShot { count }, _) => {
                if step > 1 {
                    break PruneEnd::OneShot;
                }
                remaining.saturating_sub(count)
            }
            (_, PruneStop::TargetCnCount { target }) => {
                if remaining <= target {
                    break PruneEnd::Target;
                }
                cfg.group_schedule.per_step(remaining).min(remaining - target)
            }
            _ => cfg.group_schedule.per_step(remaining),
        };
        let victims = match cfg.strategy {
            Strategy::MinWeight | Strategy::OneShot { .. } => select_candidates(cur.plan(), cur.weights(), count)?,
            Strategy::MaxWeight => select_max_weight(cur.plan(), cur.weights(), count)?,
            Strategy::Random { seed } => select_random(cur.plan(), count, seed, step as u64),
        };
        if victims.is_empty() {
            if matches!(cfg.strategy, Strategy::OneShot { .. }) {
                break PruneEnd::OneShot;
            }
            break PruneEnd::Exhausted;
        }
        let pruned = apply_prune(&cur, &victims)?;
        let (next, loss, h, div) = retrain(&pruned, code, tcfg, step)?;
        total_batches += h.len();
        if let Some(e) = div {
            return Ok(PruneOutcome {
                decoder: best.1,
                best_step: best.2,
                history,
                end: PruneEnd::Diverged,
                divergence: Some(e),
                total_batches,
            });
        }
        let r = record(step, victims, loss, &next, h.len())?;
        on_step(&r, &next);
        history.push(r);
        cur = next;
        if matches!(cfg.strategy, Strategy::OneShot { .. }) {
            best = (loss, cur.clone(), step);
            continue;
        }
        match cfg.stop_rule {
            PruneStop::LossIncrease { slack } => {
                if loss > (1.0 + slack) * best.0 {
                    break PruneEnd::LossIncrease;
                }
                if loss < best.0 {
                    best = (loss, cur.clone(), step);
                }
            }
            PruneStop::TargetCnCount { .. } => best = (loss, cur.clone(), step),
        }
    };
    Ok(PruneOutcome {
        decoder: best.1,
        best_step: best.2,
        history,
        end,
        divergence: None,
        total_batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::rm_code;

    #[test]
    fn schedule_thresholds() {
        let s = GroupSchedule::default();
        assert_eq!(s.per_step(20_000), 25);
        assert_eq!(s.per_step(10_000), 5);
        assert_eq!(s.per_step(2_001), 5);
        assert_eq!(s.per_step(2_000), 1);
        assert_eq!(s.per_step(1), 1);
    }

    #[test]
    fn pruning_one_check_reduces_evaluations() {
        let code = rm_code(1, 3).unwrap();
        let d = initial_decoder::<f64>(code.h_std().clone(), 3, Family::Nbp).unwrap();
        let before = d.cn_evals();
        let p = apply_prune(&d, &[(1, 0)]).unwrap();
        assert_eq!(p.cn_evals(), before - 1);
        assert!(matches!(apply_prune(&p, &[(1, 0)]), Err(PruneError::Decode(_))));
    }

    #[test]
    fn config_round_trips() {
        let cfg = PruneConfig {
            stop_rule: PruneStop::TargetCnCount { target: 100 },
            strategy: Strategy::Random { seed: 3 },
            ..Default::default()
        };
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PruneConfig>(&s).unwrap(), cfg);
        assert!(serde_json::from_str::<PruneConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn target_rule_reaches_target() {
        let code = rm_code(1, 3).unwrap();
        let d = initial_decoder::<f64>(code.h_std().clone(), 2, Family::Nbp).unwrap();
        let cfg = PruneConfig {
            stop_rule: PruneStop::TargetCnCount { target: 3 },
            group_schedule: GroupSchedule(vec![(0, 2)]),
            ..Default::default()
        };
        let tcfg = TrainConfig {
            batch_size: 8,
            max_batches: 5,
            plateau_window: 2,
            ..Default::default()
        };
        let mut seen = Vec::new();
        let out = prune_loop(&code, &d, &cfg, &tcfg, |r, _| seen.push(r.remaining_cn)).unwrap();
        assert_eq!(out.end, PruneEnd::Target);
        assert_eq!(out.decoder.plan().total_active(), 3);
        assert_eq!(seen, vec![8, 6, 4, 3]);
        assert!(out.decoder.plan().n_active(0) >= 1);
    }
}
