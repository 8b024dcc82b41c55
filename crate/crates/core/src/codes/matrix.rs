use std::collections::HashSet;

use crate::codes::CodeError;
use crate::gf2::BitVec;

/// Binary parity-check matrix stored as sorted column-index sets, one per check node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
    row_weights: Vec<usize>,
    duplicate_rows: bool,
}

impl ParityCheckMatrix {
    /// Builds a matrix from row index lists. Rows are sorted; empty rows,
    /// repeated indices and out-of-range indices are rejected.
    pub fn new(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        let mut clean = Vec::with_capacity(rows.len());
        for (r, mut row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(CodeError::InvalidMatrix(format!("row {r} is empty")));
            }
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(CodeError::InvalidMatrix(format!(
                    "row {r} repeats a column index"
                )));
            }
            if let Some(&last) = row.last() {
                if last >= n_cols {
                    return Err(CodeError::InvalidMatrix(format!(
                        "row {r} references column {last} but the matrix has {n_cols} columns"
                    )));
                }
            }
            clean.push(row);
        }
        let row_weights = clean.iter().map(Vec::len).collect();
        let mut seen = HashSet::with_capacity(clean.len());
        let duplicate_rows = !clean.iter().all(|r| seen.insert(r.as_slice()));
        Ok(ParityCheckMatrix {
            n_cols,
            rows: clean,
            row_weights,
            duplicate_rows,
        })
    }

    pub fn from_bitvecs(n_cols: usize, rows: &[BitVec]) -> Result<Self, CodeError> {
        Self::new(n_cols, rows.iter().map(BitVec::indices).collect())
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    #[inline]
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    #[inline]
    pub fn row_weights(&self) -> &[usize] {
        &self.row_weights
    }

    /// Total number of ones (Tanner graph edges).
    pub fn n_edges(&self) -> usize {
        self.row_weights.iter().sum()
    }

    /// True when at least two rows are identical.
    pub fn has_duplicate_rows(&self) -> bool {
        self.duplicate_rows
    }

    /// Common row weight when every row has the same weight.
    pub fn regular_row_weight(&self) -> Option<usize> {
        let first = *self.row_weights.first()?;
        self.row_weights.iter().all(|&w| w == first).then_some(first)
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_cols];
        for row in &self.rows {
            for &c in row {
                deg[c] += 1;
            }
        }
        deg
    }

    /// Row index lists per column, ascending.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c].push(r);
            }
        }
        cols
    }

    pub fn to_bitvecs(&self) -> Vec<BitVec> {
        self.rows
            .iter()
            .map(|r| BitVec::from_indices(self.n_cols, r))
            .collect()
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> ParityCheckMatrix {
        let rows: Vec<Vec<usize>> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let row_weights = rows.iter().map(Vec::len).collect();
        let mut seen = HashSet::with_capacity(rows.len());
        let duplicate_rows = !rows.iter().all(|r| seen.insert(r.clone()));
        ParityCheckMatrix {
            n_cols: self.n_cols,
            rows,
            row_weights,
            duplicate_rows,
        }
    }

    /// True when every check is satisfied by `bits`.
    pub fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_sorted_and_weights_cached() {
        let h = ParityCheckMatrix::new(5, vec![vec![3, 0, 1], vec![4, 2]]).unwrap();
        assert_eq!(h.row(0), &[0, 1, 3]);
        assert_eq!(h.row_weights(), &[3, 2]);
        assert_eq!(h.n_edges(), 5);
        assert!(!h.has_duplicate_rows());
        assert_eq!(h.regular_row_weight(), None);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(ParityCheckMatrix::new(3, vec![vec![]]).is_err());
        assert!(ParityCheckMatrix::new(3, vec![vec![0, 3]]).is_err());
        assert!(ParityCheckMatrix::new(3, vec![vec![1, 1]]).is_err());
    }

    #[test]
    fn duplicates_are_flagged() {
        let h = ParityCheckMatrix::new(3, vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!(h.has_duplicate_rows());
    }
}
