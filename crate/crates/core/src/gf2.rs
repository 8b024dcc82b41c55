//! Dense GF(2) vectors and the handful of matrix routines the code
//! constructions need (rank, reduced row echelon form, null space).

use std::cmp::Ordering;
use std::fmt;

/// A packed binary vector of fixed length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in indices {
            v.set(i, true);
        }
        v
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    #[inline]
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// GF(2) inner product.
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones % 2 == 1
    }

    /// Indices of the set bits in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(wi * 64 + b);
                w &= w - 1;
            }
        }
        out
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Orders vectors lexicographically by their sorted support.
pub fn cmp_support(a: &BitVec, b: &BitVec) -> Ordering {
    a.indices().cmp(&b.indices())
}

/// Result of Gaussian elimination over GF(2).
#[derive(Debug, Clone)]
pub struct Echelon {
    /// Rows of the reduced row echelon form (only the nonzero ones).
    pub rows: Vec<BitVec>,
    /// Pivot column of each row.
    pub pivots: Vec<usize>,
}

/// Reduced row echelon form of the given rows.
pub fn rref(rows: &[BitVec], n_cols: usize) -> Echelon {
    let mut m: Vec<BitVec> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n_cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| m[i].get(col)) else {
            continue;
        };
        m.swap(r, p);
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
    }
    m.truncate(r);
    Echelon { rows: m, pivots }
}

pub fn rank(rows: &[BitVec], n_cols: usize) -> usize {
    rref(rows, n_cols).pivots.len()
}

/// Basis of `{x : rows · x = 0}` in original column order.
///
/// One basis vector per non-pivot column `f`: a one at `f` plus a one at every
/// pivot column whose echelon row has a one in column `f`.
pub fn null_space(rows: &[BitVec], n_cols: usize) -> Vec<BitVec> {
    let ech = rref(rows, n_cols);
    let mut is_pivot = vec![false; n_cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::with_capacity(n_cols - ech.pivots.len());
    for f in (0..n_cols).filter(|&c| !is_pivot[c]) {
        let mut v = BitVec::zeros(n_cols);
        v.set(f, true);
        for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
            if row.get(f) {
                v.set(p, true);
            }
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_hamming_parity_matrix() {
        let rows = vec![
            BitVec::from_bits(&[1, 0, 1, 0, 1, 0, 1]),
            BitVec::from_bits(&[0, 1, 1, 0, 0, 1, 1]),
            BitVec::from_bits(&[0, 0, 0, 1, 1, 1, 1]),
        ];
        assert_eq!(rank(&rows, 7), 3);
        let ns = null_space(&rows, 7);
        assert_eq!(ns.len(), 4);
        for v in &ns {
            for r in &rows {
                assert!(!v.dot(r));
            }
        }
        assert_eq!(rank(&ns, 7), 4);
    }

    #[test]
    fn dependent_rows_reduce_rank() {
        let a = BitVec::from_bits(&[1, 1, 0, 0]);
        let b = BitVec::from_bits(&[0, 1, 1, 0]);
        let mut c = a.clone();
        c.xor_assign(&b);
        assert_eq!(rank(&[a, b, c], 4), 2);
    }

    #[test]
    fn indices_span_word_boundaries() {
        let v = BitVec::from_indices(130, &[0, 63, 64, 129]);
        assert_eq!(v.indices(), vec![0, 63, 64, 129]);
        assert_eq!(v.weight(), 4);
    }
}
