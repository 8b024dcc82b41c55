use crate::codes::LinearCode;
use crate::scalar::Real;
use crate::simulation::SimError;

/// Largest dimension the exhaustive ML decoder accepts.
pub const MAX_ML_DIM: usize = 24;

/// Exhaustive maximum-likelihood decoder for the AWGN channel.
///
/// Maximizes the correlation `Σ (1 − 2c_i) μ_i`, equivalently minimizes
/// `Σ_{i: c_i = 1} μ_i`. Codewords are visited in Gray-code order so each step
/// flips one generator row; the partial sums come from per-byte lookup tables.
/// Ties go to the smallest information index `Σ u_j 2^j`.
#[derive(Debug, Clone)]
pub struct MlDecoder {
    n: usize,
    k: usize,
    rows: Vec<Vec<u64>>,
}

/// Reusable buffers for [`MlDecoder::decode_into`].
#[derive(Debug, Clone, Default)]
pub struct MlScratch {
    tables: Vec<[f64; 256]>,
    cw: Vec<u64>,
}

impl MlDecoder {
    pub fn new(code: &LinearCode) -> Result<Self, SimError> {
        if code.k() > MAX_ML_DIM {
            return Err(SimError::MlBound {
                k: code.k(),
                bound: MAX_ML_DIM,
            });
        }
        let rows = code.generator().iter().map(|g| g.words().to_vec()).collect();
        Ok(MlDecoder {
            n: code.n(),
            k: code.k(),
            rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scratch(&self) -> MlScratch {
        MlScratch {
            tables: vec![[0.0; 256]; self.n.div_ceil(8)],
            cw: vec![0; self.n.div_ceil(64)],
        }
    }

    /// Writes the ML codeword for `llr` into `out`.
    pub fn decode_into<T: Real>(&self, llr: &[T], s: &mut MlScratch, out: &mut [u8]) {
        let n_bytes = self.n.div_ceil(8);
        if s.tables.len() != n_bytes {
            *s = self.scratch();
        }
        for (j, table) in s.tables.iter_mut().enumerate() {
            table[0] = 0.0;
            for bit in 0..8 {
                let i = 8 * j + bit;
                let mu = if i < self.n { llr[i].as_f64() } else { 0.0 };
                let step = 1usize << bit;
                for b in 0..step {
                    table[step + b] = table[b] + mu;
                }
            }
        }
        let cost = |cw: &[u64], tables: &[[f64; 256]]| -> f64 {
            let mut acc = 0.0;
            for (j, t) in tables.iter().enumerate() {
                let byte = (cw[j / 8] >> (8 * (j % 8))) & 0xff;
                acc += t[byte as usize];
            }
            acc
        };
        s.cw.iter_mut().for_each(|w| *w = 0);
        let mut best = cost(&s.cw, &s.tables);
        let mut best_u: u64 = 0;
        let mut best_cw = s.cw.clone();
        let mut gray: u64 = 0;
        for i in 1u64..(1u64 << self.k) {
            let r = i.trailing_zeros() as usize;
            gray ^= 1 << r;
            for (w, g) in s.cw.iter_mut().zip(&self.rows[r]) {
                *w ^= g;
            }
            let c = cost(&s.cw, &s.tables);
            if c < best || (c == best && gray < best_u) {
                best = c;
                best_u = gray;
                best_cw.copy_from_slice(&s.cw);
            }
        }
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = ((best_cw[i / 64] >> (i % 64)) & 1) as u8;
        }
    }

    pub fn decode<T: Real>(&self, llr: &[T]) -> Vec<u8> {
        let mut s = self.scratch();
        let mut out = vec![0u8; self.n];
        self.decode_into(llr, &mut s, &mut out);
        out
    }
}

/// Maximum-likelihood codeword of `code` for channel LLRs `mu_ch`.
pub fn ml_decode<T: Real>(code: &LinearCode, mu_ch: &[T]) -> Result<Vec<u8>, SimError> {
    Ok(MlDecoder::new(code)?.decode(mu_ch))
}
