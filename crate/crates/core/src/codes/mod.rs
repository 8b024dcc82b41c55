//! Linear block codes, their standard and overcomplete parity-check matrices,
//! and the file formats used to exchange them.

mod alist;
mod descriptor;
mod enumerate;
mod matrix;
mod rm;

use std::path::PathBuf;

use thiserror::Error;

use crate::gf2::{self, BitVec};

pub use alist::{parse_alist, read_alist, to_alist_string, write_alist};
pub use descriptor::{load_descriptor, save_descriptor, CodeDescriptor};
pub use enumerate::{
    min_weight_dual_checks, sample_overcomplete, subsample_checks, SampleOptions,
    MAX_DUAL_ENUMERATION_DIM,
};
pub use matrix::ParityCheckMatrix;
pub use rm::rm_code;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("dual dimension {dim} exceeds the brute-force enumeration bound of {bound}")]
    EnumerationBound { dim: usize, bound: usize },
    #[error("found only {found} of {requested} distinct checks within {attempts} attempts")]
    SamplingExhausted {
        found: usize,
        requested: usize,
        attempts: usize,
    },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("alist line {line}: {message}")]
    Alist { line: usize, message: String },
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("code descriptor: {0}")]
    Descriptor(#[from] serde_json::Error),
}

/// A binary linear block code with a generator matrix and a non-redundant
/// parity-check matrix.
#[derive(Debug, Clone)]
pub struct LinearCode {
    name: String,
    n: usize,
    k: usize,
    generator: Vec<BitVec>,
    h_std: ParityCheckMatrix,
}

impl LinearCode {
    /// Builds a code from full-rank generator rows; `h_std` is the null-space basis.
    pub fn from_generator(name: impl Into<String>, n: usize, generator: Vec<BitVec>) -> Result<Self, CodeError> {
        if generator.iter().any(|g| g.len() != n) {
            return Err(CodeError::InvalidCode("generator row length differs from n".into()));
        }
        let k = generator.len();
        if gf2::rank(&generator, n) != k {
            return Err(CodeError::InvalidCode("generator rows are linearly dependent".into()));
        }
        let h_rows = gf2::null_space(&generator, n);
        let h_std = ParityCheckMatrix::from_bitvecs(n, &h_rows)?;
        Ok(LinearCode {
            name: name.into(),
            n,
            k,
            generator,
            h_std,
        })
    }

    /// Builds a code as the null space of `h`. When `h` has redundant rows,
    /// `h_std` keeps the first linearly independent subset in order.
    pub fn from_parity_check(name: impl Into<String>, h: &ParityCheckMatrix) -> Result<Self, CodeError> {
        let n = h.n_cols();
        let rows = h.to_bitvecs();
        let generator = gf2::null_space(&rows, n);
        let mut kept = Vec::new();
        let mut basis: Vec<BitVec> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            basis.push(r.clone());
            if gf2::rank(&basis, n) == basis.len() {
                kept.push(i);
            } else {
                basis.pop();
            }
        }
        let h_std = h.select_rows(&kept);
        Ok(LinearCode {
            name: name.into(),
            n,
            k: generator.len(),
            generator,
            h_std,
        })
    }

    /// Generator plus an explicit parity-check matrix; the two must be orthogonal
    /// and have complementary ranks.
    pub fn with_parity_check(
        name: impl Into<String>,
        n: usize,
        generator: Vec<BitVec>,
        h_std: ParityCheckMatrix,
    ) -> Result<Self, CodeError> {
        let code = LinearCode::from_generator(name, n, generator)?;
        if h_std.n_cols() != n {
            return Err(CodeError::InvalidCode("h_std has the wrong number of columns".into()));
        }
        let h_rows = h_std.to_bitvecs();
        if gf2::rank(&h_rows, n) != n - code.k || h_std.n_rows() != n - code.k {
            return Err(CodeError::InvalidCode(format!(
                "h_std must have exactly n-k = {} independent rows",
                n - code.k
            )));
        }
        if !code.is_dual_rows(&h_rows) {
            return Err(CodeError::InvalidCode("h_std is not orthogonal to the generator".into()));
        }
        Ok(LinearCode { h_std, ..code })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn generator(&self) -> &[BitVec] {
        &self.generator
    }

    pub fn h_std(&self) -> &ParityCheckMatrix {
        &self.h_std
    }

    /// Codeword `u · G` for information bits `u` (length k).
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.k, "information word length");
        let mut acc = BitVec::zeros(self.n);
        for (g, &b) in self.generator.iter().zip(info) {
            if b & 1 == 1 {
                acc.xor_assign(g);
            }
        }
        acc.to_bits()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n && self.h_std.syndrome_is_zero(bits)
    }

    /// True when every row is orthogonal to every generator row.
    pub fn is_dual_rows(&self, rows: &[BitVec]) -> bool {
        rows.iter().all(|r| self.generator.iter().all(|g| !r.dot(g)))
    }
}

/// The (128, 64) CCSDS telecommand LDPC parity-check matrix shipped with the crate.
pub fn ccsds_ldpc_128_64() -> ParityCheckMatrix {
    parse_alist(include_str!("../../fixtures/ccsds_128_64.alist"))
        .expect("bundled CCSDS alist fixture is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming_7_4_h() -> ParityCheckMatrix {
        ParityCheckMatrix::new(7, vec![vec![0, 2, 4, 6], vec![1, 2, 5, 6], vec![3, 4, 5, 6]]).unwrap()
    }

    #[test]
    fn code_from_parity_check_round_trips() {
        let h = hamming_7_4_h();
        let code = LinearCode::from_parity_check("hamming", &h).unwrap();
        assert_eq!(code.k(), 4);
        assert_eq!(code.h_std(), &h);
        for info in 0..16u8 {
            let bits: Vec<u8> = (0..4).map(|i| (info >> i) & 1).collect();
            assert!(code.is_codeword(&code.encode(&bits)));
        }
    }

    #[test]
    fn redundant_rows_are_dropped_from_h_std() {
        let mut rows = hamming_7_4_h().rows().to_vec();
        rows.push(vec![0, 1, 4, 5]);
        let h = ParityCheckMatrix::new(7, rows).unwrap();
        let code = LinearCode::from_parity_check("hamming", &h).unwrap();
        assert_eq!(code.h_std().n_rows(), 3);
        assert_eq!(code.k(), 4);
    }

    #[test]
    fn ccsds_fixture_shape() {
        let h = ccsds_ldpc_128_64();
        assert_eq!((h.n_rows(), h.n_cols()), (64, 128));
        assert_eq!(h.regular_row_weight(), Some(8));
        let deg = h.column_degrees();
        assert_eq!(deg.iter().filter(|&&d| d == 3).count(), 64);
        assert_eq!(deg.iter().filter(|&&d| d == 5).count(), 64);
        let code = LinearCode::from_parity_check("ccsds", &h).unwrap();
        assert_eq!(code.k(), 64);
    }
}
