use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::msgpass::{CnMode, IterationPlan, WeightSet};
use crate::pruning::PruneError;
use crate::scalar::Real;

/// Active checks as `(iteration, pool row)` with their tied weight.
fn tied_weights<T: Real>(plan: &IterationPlan, weights: &WeightSet<T>) -> Result<Vec<(usize, usize, f64)>, PruneError> {
    if weights.cn_mode() != CnMode::Tied {
        return Err(PruneError::NeedsTiedWeights);
    }
    weights.check_plan(plan)?;
    let mut out = Vec::with_capacity(plan.total_active());
    for l in 0..plan.l_max() {
        for (i, c) in plan.active_checks(l).into_iter().enumerate() {
            out.push((l, c, weights.cn(l)[i].as_f64().abs()));
        }
    }
    Ok(out)
}

/// Takes up to `count` candidates in order, never emptying iteration 0.
fn take_protected(plan: &IterationPlan, order: impl Iterator<Item = (usize, usize)>, count: usize) -> Vec<(usize, usize)> {
    let mut left0 = plan.n_active(0);
    let mut out = Vec::with_capacity(count);
    for (l, c) in order {
        if out.len() == count {
            break;
        }
        if l == 0 {
            if left0 <= 1 {
                continue;
            }
            left0 -= 1;
        }
        out.push((l, c));
    }
    out
}

/// The `count` active checks with the smallest `|w_c|`, ties by `(ℓ, c)`.
pub fn select_candidates<T: Real>(plan: &IterationPlan, weights: &WeightSet<T>, count: usize) -> Result<Vec<(usize, usize)>, PruneError> {
    let mut w = tied_weights(plan, weights)?;
    w.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    Ok(take_protected(plan, w.into_iter().map(|(l, c, _)| (l, c)), count))
}

/// The `count` active checks with the largest `|w_c|`, ties by `(ℓ, c)`.
pub fn select_max_weight<T: Real>(plan: &IterationPlan, weights: &WeightSet<T>, count: usize) -> Result<Vec<(usize, usize)>, PruneError> {
    let mut w = tied_weights(plan, weights)?;
    w.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    Ok(take_protected(plan, w.into_iter().map(|(l, c, _)| (l, c)), count))
}

/// `count` active checks drawn uniformly; `stream` separates pruning steps.
pub fn select_random(plan: &IterationPlan, count: usize, seed: u64, stream: u64) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..plan.l_max())
        .flat_map(|l| plan.active_checks(l).into_iter().map(move |c| (l, c)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    all.shuffle(&mut rng);
    let mut out = take_protected(plan, all.into_iter(), count);
    out.sort_unstable();
    out
}
