use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pbnbp::codes::{
    ccsds_ldpc_128_64, load_descriptor, min_weight_dual_checks, read_alist, rm_code, sample_overcomplete,
    subsample_checks, LinearCode, ParityCheckMatrix, SampleOptions,
};
use pbnbp::pruning::{DecoderKind, Family, PruneConfig};
use pbnbp::quant::{BitWidths, QuantMode};
use pbnbp::simulation::StopRule;
use pbnbp::training::TrainConfig;
use serde::{Deserialize, Serialize};

/// Which code to work with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    Rm { r: usize, m: usize },
    Ccsds,
    /// Code defined by the parity-check matrix in an alist file.
    Alist { path: PathBuf },
    /// JSON code descriptor.
    Descriptor { path: PathBuf },
}

impl CodeSpec {
    /// Parses command-line tokens: `rm R M`, `ccsds`, `alist PATH`, `descriptor PATH`.
    pub fn from_tokens(tokens: &[String]) -> Result<Self> {
        let t: Vec<&str> = tokens.iter().map(String::as_str).collect();
        Ok(match t.as_slice() {
            ["rm", r, m] => CodeSpec::Rm {
                r: r.parse().context("RM order must be an integer")?,
                m: m.parse().context("RM length exponent must be an integer")?,
            },
            ["ccsds"] => CodeSpec::Ccsds,
            ["alist", p] => CodeSpec::Alist { path: p.into() },
            ["descriptor", p] => CodeSpec::Descriptor { path: p.into() },
            _ => bail!("unknown code spec {:?}; use `rm R M`, `ccsds`, `alist PATH` or `descriptor PATH`", tokens),
        })
    }

    pub fn build(&self, base: &Path) -> Result<LinearCode> {
        Ok(match self {
            CodeSpec::Rm { r, m } => rm_code(*r, *m)?,
            CodeSpec::Ccsds => LinearCode::from_parity_check("ccsds-128-64", &ccsds_ldpc_128_64())?,
            CodeSpec::Alist { path } => {
                let p = base.join(path);
                let h = read_alist(&p)?;
                LinearCode::from_parity_check(p.display().to_string(), &h)?
            }
            CodeSpec::Descriptor { path } => load_descriptor(base.join(path))?,
        })
    }
}

/// Which parity-check matrix the decoder starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ChecksSpec {
    /// The standard matrix of the code.
    Standard,
    /// Every minimum-weight dual codeword.
    AllMinWeight,
    /// Random low-weight dual codewords.
    Sample { max_weight: usize, count: usize, seed: u64 },
    /// Random subset of the minimum-weight dual codewords.
    Subsample { count: usize, seed: u64 },
    /// Rows read from an alist file.
    File { path: PathBuf },
}

impl ChecksSpec {
    pub fn build(&self, code: &LinearCode, base: &Path) -> Result<ParityCheckMatrix> {
        let h = match self {
            ChecksSpec::Standard => code.h_std().clone(),
            ChecksSpec::AllMinWeight => min_weight_dual_checks(code)?,
            ChecksSpec::Sample {
                max_weight,
                count,
                seed,
            } => sample_overcomplete(code, *max_weight, *count, *seed, SampleOptions::default())?,
            ChecksSpec::Subsample { count, seed } => subsample_checks(&min_weight_dual_checks(code)?, *count, *seed)?,
            ChecksSpec::File { path } => read_alist(base.join(path))?,
        };
        if h.n_cols() != code.n() {
            bail!("check matrix has {} columns, code length is {}", h.n_cols(), code.n());
        }
        if !code.is_dual_rows(&h.to_bitvecs()) {
            bail!("check matrix rows are not all dual codewords of the code");
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantSection {
    pub bits: BitWidths,
    pub mode: QuantMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub ebn0_db: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            ebn0_db: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            stop: StopRule::default(),
            seed: 0,
        }
    }
}

/// Declarative description of a training, pruning or quantization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub code: CodeSpec,
    #[serde(default = "default_checks")]
    pub checks: ChecksSpec,
    pub l_max: usize,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub prune: PruneConfig,
    #[serde(default = "default_kinds")]
    pub finalize: Vec<DecoderKind>,
    #[serde(default)]
    pub quant: Option<QuantSection>,
    #[serde(default)]
    pub eval: Option<EvalSection>,
    pub output_dir: PathBuf,
}

fn default_checks() -> ChecksSpec {
    ChecksSpec::AllMinWeight
}

fn default_family() -> Family {
    Family::Nbp
}

fn default_kinds() -> Vec<DecoderKind> {
    vec![DecoderKind::D1]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max == 0 {
            bail!("l_max must be at least 1");
        }
        self.train.validate()?;
        if let Some(q) = &self.quant {
            for b in [q.bits.q_ch, q.bits.q_m, q.bits.q_w] {
                if !(2..=16).contains(&b) {
                    bail!("bit width {b} is outside 2..=16");
                }
            }
        }
        if let Some(e) = &self.eval {
            if e.ebn0_db.is_empty() {
                bail!("eval.ebn0_db must list at least one point");
            }
        }
        Ok(())
    }
}
