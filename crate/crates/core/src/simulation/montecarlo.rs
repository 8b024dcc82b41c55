use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::msgpass::{Decoder, Workspace, M_CLIP};
use crate::scalar::{clip, Real};
use crate::simulation::{awgn_llr_unclipped, noise_variance, MlDecoder, MlScratch, SimError};

/// Anything that maps channel LLRs to a hard-decision word.
pub trait BlockDecoder: Sync {
    type Scratch: Send;

    fn block_len(&self) -> usize;

    fn scratch(&self) -> Self::Scratch;

    /// Decodes unclipped `f64` channel LLRs into `out`.
    fn decode_block(&self, llr: &[f64], scratch: &mut Self::Scratch, out: &mut [u8]) -> Result<(), SimError>;
}

impl<T: Real> BlockDecoder for Decoder<T> {
    type Scratch = (Workspace<T>, Vec<T>);

    fn block_len(&self) -> usize {
        self.n()
    }

    fn scratch(&self) -> Self::Scratch {
        (self.workspace(), vec![T::zero(); self.n()])
    }

    fn decode_block(&self, llr: &[f64], (ws, buf): &mut Self::Scratch, out: &mut [u8]) -> Result<(), SimError> {
        for (b, &x) in buf.iter_mut().zip(llr) {
            *b = T::lit(clip(x, M_CLIP));
        }
        self.decode_hard_into(buf, ws, out)?;
        Ok(())
    }
}

impl BlockDecoder for MlDecoder {
    type Scratch = MlScratch;

    fn block_len(&self) -> usize {
        self.n()
    }

    fn scratch(&self) -> MlScratch {
        MlDecoder::scratch(self)
    }

    fn decode_block(&self, llr: &[f64], scratch: &mut MlScratch, out: &mut [u8]) -> Result<(), SimError> {
        self.decode_into(llr, scratch, out);
        Ok(())
    }
}

/// When to stop simulating one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub min_block_errors: u64,
    pub max_blocks: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_block_errors: 100,
            max_blocks: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateEstimate {
    pub ebn0_db: f64,
    pub bler: f64,
    pub ber: f64,
    pub blocks: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    /// Binomial standard error of `bler`.
    pub std_err: f64,
}

impl ErrorRateEstimate {
    fn from_counts(ebn0_db: f64, n: usize, blocks: u64, block_errors: u64, bit_errors: u64) -> Self {
        let (bler, ber) = if blocks == 0 {
            (0.0, 0.0)
        } else {
            (block_errors as f64 / blocks as f64, bit_errors as f64 / (blocks as f64 * n as f64))
        };
        let std_err = if blocks == 0 {
            0.0
        } else {
            (bler * (1.0 - bler) / blocks as f64).sqrt()
        };
        ErrorRateEstimate {
            ebn0_db,
            bler,
            ber,
            blocks,
            block_errors,
            bit_errors,
            std_err,
        }
    }
}

/// Outcome of one transmitted block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockOutcome {
    pub block_error: bool,
    pub bit_errors: u32,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for block `block` of the SNR point `ebn0_db`.
pub fn block_rng(seed: u64, ebn0_db: f64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(ebn0_db.to_bits())));
    rng.set_stream(block);
    rng
}

/// Draws the transmitted codeword and channel LLRs of one block.
pub fn block_sample(code: &LinearCode, ebn0_db: f64, seed: u64, block: u64) -> (Vec<u8>, Vec<f64>) {
    let mut rng = block_rng(seed, ebn0_db, block);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let cw = code.encode(&info);
    let mut llr = vec![0.0; code.n()];
    awgn_llr_unclipped(&cw, noise_variance(ebn0_db, code.rate()), &mut rng, &mut llr);
    (cw, llr)
}

/// Decodes blocks `range` of one SNR point. Order matches `range`.
pub fn simulate_blocks<D: BlockDecoder>(
    decoder: &D,
    code: &LinearCode,
    ebn0_db: f64,
    seed: u64,
    range: std::ops::Range<u64>,
) -> Result<Vec<BlockOutcome>, SimError> {
    if decoder.block_len() != code.n() {
        return Err(SimError::Length {
            decoder: decoder.block_len(),
            code: code.n(),
        });
    }
    range
        .into_par_iter()
        .map_init(
            || (decoder.scratch(), vec![0u8; code.n()]),
            |(scratch, out), b| {
                let (cw, llr) = block_sample(code, ebn0_db, seed, b);
                decoder.decode_block(&llr, scratch, out)?;
                let bit_errors = cw.iter().zip(out.iter()).filter(|(a, b)| a != b).count() as u32;
                Ok(BlockOutcome {
                    block_error: bit_errors > 0,
                    bit_errors,
                })
            },
        )
        .collect()
}

const FIRST_ROUND: u64 = 256;
const MAX_ROUND: u64 = 1 << 16;

/// Estimates BLER and BER at each SNR point.
///
/// Blocks are processed in parallel rounds, then scanned in order so the stop
/// point and all counts depend only on `seed`, never on the number of threads.
pub fn monte_carlo<D: BlockDecoder>(
    decoder: &D,
    code: &LinearCode,
    ebn0_list: &[f64],
    stop: StopRule,
    seed: u64,
) -> Result<Vec<ErrorRateEstimate>, SimError> {
    let mut out = Vec::with_capacity(ebn0_list.len());
    for &ebn0 in ebn0_list {
        let (mut blocks, mut block_errors, mut bit_errors) = (0u64, 0u64, 0u64);
        let mut round = FIRST_ROUND;
        'point: while blocks < stop.max_blocks && block_errors < stop.min_block_errors {
            let end = (blocks + round).min(stop.max_blocks);
            for o in simulate_blocks(decoder, code, ebn0, seed, blocks..end)? {
                blocks += 1;
                bit_errors += u64::from(o.bit_errors);
                block_errors += u64::from(o.block_error);
                if block_errors >= stop.min_block_errors {
                    break 'point;
                }
            }
            round = (round * 2).min(MAX_ROUND);
        }
        out.push(ErrorRateEstimate::from_counts(ebn0, code.n(), blocks, block_errors, bit_errors));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::rm_code;
    use crate::msgpass::{IterationPlan, Variant};

    fn bp(code: &LinearCode, iters: usize) -> Decoder<f64> {
        let plan = IterationPlan::uniform(code.h_std().clone(), iters).unwrap();
        Decoder::unit(plan, Variant::Exact).unwrap()
    }

    #[test]
    fn noiseless_point_has_no_errors() {
        let code = rm_code(1, 3).unwrap();
        let stop = StopRule {
            min_block_errors: 1,
            max_blocks: 500,
        };
        let r = monte_carlo(&bp(&code, 3), &code, &[80.0], stop, 3).unwrap();
        assert_eq!((r[0].blocks, r[0].block_errors, r[0].bler), (500, 0, 0.0));
    }

    #[test]
    fn stops_at_error_target() {
        let code = rm_code(1, 3).unwrap();
        let stop = StopRule {
            min_block_errors: 37,
            max_blocks: 1_000_000,
        };
        let r = monte_carlo(&bp(&code, 3), &code, &[0.0], stop, 9).unwrap();
        assert_eq!(r[0].block_errors, 37);
        assert!(r[0].blocks < 1_000_000);
        assert!((r[0].bler - 37.0 / r[0].blocks as f64).abs() < 1e-15);
    }

    #[test]
    fn random_codewords_are_sent() {
        let code = rm_code(1, 3).unwrap();
        let nonzero = (0..20).filter(|&b| block_sample(&code, 3.0, 1, b).0.contains(&1)).count();
        assert!(nonzero > 10);
    }

    #[test]
    fn repeatable_and_prefix_consistent() {
        let code = rm_code(1, 3).unwrap();
        let d = bp(&code, 3);
        let a = simulate_blocks(&d, &code, 2.0, 4, 0..300).unwrap();
        let b = simulate_blocks(&d, &code, 2.0, 4, 100..200).unwrap();
        assert_eq!(&a[100..200], &b[..]);
    }

    #[test]
    fn ml_not_worse_than_bp_on_common_blocks() {
        let code = rm_code(1, 4).unwrap();
        let ml = MlDecoder::new(&code).unwrap();
        let a = simulate_blocks(&bp(&code, 5), &code, 1.0, 2, 0..2000).unwrap();
        let b = simulate_blocks(&ml, &code, 1.0, 2, 0..2000).unwrap();
        let count = |v: &[BlockOutcome]| v.iter().filter(|o| o.block_error).count();
        assert!(count(&b) <= count(&a));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let code = rm_code(1, 3).unwrap();
        let other = rm_code(1, 4).unwrap();
        assert!(matches!(
            simulate_blocks(&bp(&other, 2), &code, 1.0, 0, 0..1),
            Err(SimError::Length { decoder: 16, code: 8 })
        ));
    }
}
