use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codes::{CodeError, LinearCode, ParityCheckMatrix};
use crate::gf2::{cmp_support, BitVec};

/// Largest dual dimension the exhaustive enumeration accepts.
pub const MAX_DUAL_ENUMERATION_DIM: usize = 26;

/// All minimum-weight nonzero codewords of the dual code, as parity checks,
/// ordered lexicographically by their column-index sets.
pub fn min_weight_dual_checks(code: &LinearCode) -> Result<ParityCheckMatrix, CodeError> {
    let basis = code.h_std().to_bitvecs();
    let dim = basis.len();
    if dim > MAX_DUAL_ENUMERATION_DIM {
        return Err(CodeError::EnumerationBound {
            dim,
            bound: MAX_DUAL_ENUMERATION_DIM,
        });
    }
    if dim == 0 {
        return Err(CodeError::InvalidCode("the dual code is trivial".into()));
    }
    // Gray-code walk: consecutive combinations differ by one basis row.
    let mut current = BitVec::zeros(code.n());
    let mut best_weight = usize::MAX;
    let mut found: Vec<BitVec> = Vec::new();
    for i in 1u64..(1u64 << dim) {
        current.xor_assign(&basis[i.trailing_zeros() as usize]);
        let w = current.weight();
        if w < best_weight {
            best_weight = w;
            found.clear();
            found.push(current.clone());
        } else if w == best_weight {
            found.push(current.clone());
        }
    }
    found.sort_by(cmp_support);
    ParityCheckMatrix::from_bitvecs(code.n(), &found)
}

/// Knobs for [`sample_overcomplete`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    /// Each attempt XORs `j` distinct rows of `h_std`, `j` uniform in `1..=max_combination`.
    pub max_combination: usize,
    /// Attempts allowed before giving up.
    pub attempt_budget: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            max_combination: 4,
            attempt_budget: 2_000_000,
        }
    }
}

/// Draws `count` distinct dual codewords of weight at most `max_weight` by
/// random low-order combinations of the rows of `h_std`.
pub fn sample_overcomplete(
    code: &LinearCode,
    max_weight: usize,
    count: usize,
    seed: u64,
    options: SampleOptions,
) -> Result<ParityCheckMatrix, CodeError> {
    if count == 0 {
        return Err(CodeError::ParameterOutOfRange("count must be at least 1".into()));
    }
    let basis = code.h_std().to_bitvecs();
    if basis.is_empty() {
        return Err(CodeError::InvalidCode("the dual code is trivial".into()));
    }
    let max_comb = options.max_combination.clamp(1, basis.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<BitVec> = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == options.attempt_budget {
            return Err(CodeError::SamplingExhausted {
                found: out.len(),
                requested: count,
                attempts,
            });
        }
        attempts += 1;
        let j = rng.random_range(1..=max_comb);
        let mut v = BitVec::zeros(code.n());
        for r in index::sample(&mut rng, basis.len(), j) {
            v.xor_assign(&basis[r]);
        }
        let w = v.weight();
        if w == 0 || w > max_weight || seen.contains(&v) {
            continue;
        }
        seen.insert(v.clone());
        out.push(v);
    }
    ParityCheckMatrix::from_bitvecs(code.n(), &out)
}

/// Uniform random subset of `count` rows, kept in their original order.
pub fn subsample_checks(h: &ParityCheckMatrix, count: usize, seed: u64) -> Result<ParityCheckMatrix, CodeError> {
    if count > h.n_rows() {
        return Err(CodeError::ParameterOutOfRange(format!(
            "cannot select {count} of {} rows",
            h.n_rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, h.n_rows(), count).into_vec();
    picked.sort_unstable();
    Ok(h.select_rows(&picked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::rm_code;

    #[test]
    fn repetition_2_1_has_single_check() {
        let g = vec![BitVec::from_bits(&[1, 1])];
        let code = LinearCode::from_generator("rep2", 2, g).unwrap();
        let h = min_weight_dual_checks(&code).unwrap();
        assert_eq!(h.rows(), &[vec![0, 1]]);
    }

    #[test]
    fn rm_1_3_has_fourteen_weight_four_checks() {
        let code = rm_code(1, 3).unwrap();
        let h = min_weight_dual_checks(&code).unwrap();
        assert_eq!(h.n_rows(), 14);
        assert_eq!(h.regular_row_weight(), Some(4));
        assert!(h.rows().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_bound_is_enforced() {
        let code = rm_code(1, 5).unwrap(); // dual dimension 26 is allowed
        assert_eq!(code.n() - code.k(), 26);
        let big = rm_code(1, 6).unwrap();
        match min_weight_dual_checks(&big) {
            Err(CodeError::EnumerationBound { dim: 57, bound: 26 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_row_sampling_returns_h_std_rows() {
        let code = rm_code(2, 4).unwrap();
        let m = code.n() - code.k();
        let opts = SampleOptions {
            max_combination: 1,
            ..SampleOptions::default()
        };
        let h = sample_overcomplete(&code, code.n(), m, 3, opts).unwrap();
        let mut got = h.rows().to_vec();
        let mut want = code.h_std().rows().to_vec();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn sampling_reports_shortfall() {
        let code = rm_code(1, 3).unwrap();
        let opts = SampleOptions {
            max_combination: 4,
            attempt_budget: 5000,
        };
        match sample_overcomplete(&code, 4, 15, 1, opts) {
            Err(CodeError::SamplingExhausted { found: 14, requested: 15, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subsample_full_and_partial() {
        let code = rm_code(2, 5).unwrap();
        let h = min_weight_dual_checks(&code).unwrap();
        assert_eq!(subsample_checks(&h, 620, 9).unwrap(), h);
        let s = subsample_checks(&h, 100, 9).unwrap();
        assert_eq!(s.n_rows(), 100);
        assert!(!s.has_duplicate_rows());
        assert!(s.rows().iter().all(|r| h.rows().contains(r)));
        assert_eq!(s, subsample_checks(&h, 100, 9).unwrap());
        assert!(subsample_checks(&h, 621, 9).is_err());
    }
}
