use crate::codes::{CodeError, LinearCode};
use crate::gf2::BitVec;

/// Reed-Muller code RM(r, m) built from monomial evaluation vectors.
///
/// Evaluation point `j` assigns `x_i = bit (i-1) of j`. Generator rows are the
/// monomials of degree at most `r`, ordered by degree and then
/// lexicographically by their variable index tuple.
pub fn rm_code(r: usize, m: usize) -> Result<LinearCode, CodeError> {
    if r > m || m > 16 {
        return Err(CodeError::ParameterOutOfRange(format!(
            "RM({r},{m}) requires 0 <= r <= m <= 16"
        )));
    }
    let n = 1usize << m;
    let mut generator = Vec::new();
    for degree in 0..=r {
        for monomial in combinations(m, degree) {
            let mut row = BitVec::zeros(n);
            for j in 0..n {
                if monomial.iter().all(|&v| (j >> v) & 1 == 1) {
                    row.set(j, true);
                }
            }
            generator.push(row);
        }
    }
    LinearCode::from_generator(format!("RM({r},{m})"), n, generator)
}

/// All `size`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, m: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for v in start..m {
            current.push(v);
            rec(v + 1, m, size, current, out);
            current.pop();
        }
    }
    rec(0, m, size, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2;

    #[test]
    fn rm_2_5_dimensions() {
        let c = rm_code(2, 5).unwrap();
        assert_eq!((c.n(), c.k()), (32, 16));
        assert_eq!(c.h_std().n_rows(), 16);
    }

    #[test]
    fn rm_0_2_is_repetition() {
        let c = rm_code(0, 2).unwrap();
        assert_eq!((c.n(), c.k()), (4, 1));
        assert_eq!(c.generator()[0].indices(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rm_1_3_is_extended_hamming() {
        let c = rm_code(1, 3).unwrap();
        assert_eq!((c.n(), c.k()), (8, 4));
        let h = c.h_std().to_bitvecs();
        assert_eq!(gf2::rank(&h, 8), 4);
        assert!(c.is_dual_rows(&h));
    }

    #[test]
    fn monomial_order_is_degree_then_lex() {
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let c = rm_code(1, 2).unwrap();
        let rows: Vec<Vec<usize>> = c.generator().iter().map(|g| g.indices()).collect();
        assert_eq!(rows, vec![vec![0, 1, 2, 3], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(rm_code(3, 2).is_err());
        assert!(rm_code(1, 17).is_err());
    }
}
