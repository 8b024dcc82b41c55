use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::msgpass::{Decoder, IterationPlan, Variant, WeightSet};
use crate::pruning::PruneError;
use crate::scalar::Real;
use crate::training::{train_until_plateau, TrainConfig, TrainOutcome};

/// How the pruned plan is turned into a deployed decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderKind {
    /// Pruned plan with its trained tied weights.
    D1,
    /// Pruned plan with all weights one.
    D2,
    /// Pruned plan with untied weights, retrained.
    D3,
}

/// Builds the D1/D2/D3 decoder from a pruned one. D3 also returns its training
/// run.
pub fn finalize_decoder<T: Real>(
    pruned: &Decoder<T>,
    kind: DecoderKind,
    code: &LinearCode,
    tcfg: &TrainConfig,
) -> Result<(Decoder<T>, Option<TrainOutcome<T>>), PruneError> {
    let plan = pruned.plan().clone();
    match kind {
        DecoderKind::D1 => Ok((pruned.clone(), None)),
        DecoderKind::D2 => {
            let variant = match pruned.variant() {
                Variant::Oms | Variant::Noms => Variant::MinSum,
                v => v,
            };
            let mut d = Decoder::new(plan.clone(), WeightSet::unit(&plan), variant)?;
            if let Some(h) = pruned.early_stopping() {
                d = d.with_early_stopping(h.clone())?;
            }
            Ok((d, None))
        }
        DecoderKind::D3 => {
            let untied = pruned.weights().untie(&plan)?;
            let mut d = pruned.clone();
            d.replace_weights(untied)?;
            let out = train_until_plateau(&d, code, tcfg)?;
            Ok((out.decoder.clone(), Some(out)))
        }
    }
}

/// Work of one decode: active edges (raw) and active checks (normalized by
/// the check degree).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complexity {
    pub raw: usize,
    pub normalized: usize,
}

pub fn complexity(plan: &IterationPlan) -> Complexity {
    Complexity {
        raw: (0..plan.l_max()).map(|l| plan.n_edges(l)).sum(),
        normalized: plan.total_active(),
    }
}

/// Stored trainable scalars; see [`WeightSet::count_parameters`].
pub fn count_parameters<T: Real>(weights: &WeightSet<T>) -> usize {
    weights.count_parameters()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{ccsds_ldpc_128_64, rm_code};
    use crate::pruning::{apply_prune, initial_decoder, Family};

    #[test]
    fn ccsds_bp_complexity() {
        let p25 = IterationPlan::uniform(ccsds_ldpc_128_64(), 25).unwrap();
        assert_eq!(complexity(&p25).raw, 12_800);
        let p100 = IterationPlan::uniform(ccsds_ldpc_128_64(), 100).unwrap();
        assert_eq!(complexity(&p100).raw, 51_200);
    }

    #[test]
    fn d2_has_no_parameters_and_d3_has_more_than_d1() {
        let code = rm_code(1, 3).unwrap();
        let d = initial_decoder::<f64>(code.h_std().clone(), 2, Family::Nbp).unwrap();
        let d = apply_prune(&d, &[(1, 2)]).unwrap();
        let tcfg = TrainConfig {
            max_batches: 2,
            batch_size: 4,
            ..Default::default()
        };
        let (d2, _) = finalize_decoder(&d, DecoderKind::D2, &code, &tcfg).unwrap();
        assert_eq!(count_parameters(d2.weights()), 0);
        let (d3, run) = finalize_decoder(&d, DecoderKind::D3, &code, &tcfg).unwrap();
        assert!(run.is_some());
        assert!(count_parameters(d3.weights()) > count_parameters(d.weights()));
        assert_eq!(complexity(d3.plan()), complexity(d.plan()));
    }

    #[test]
    fn empty_plan_layer_contributes_nothing() {
        let code = rm_code(1, 3).unwrap();
        let d = initial_decoder::<f64>(code.h_std().clone(), 2, Family::Nbp).unwrap();
        let all: Vec<_> = (0..4).map(|c| (1, c)).collect();
        let d = apply_prune(&d, &all).unwrap();
        assert_eq!(complexity(d.plan()).normalized, 4);
        assert_eq!(d.plan().n_edges(1), 0);
    }
}
