use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pbnbp::simulation::ErrorRateEstimate;
use pbnbp::training::LossRecord;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const PARTIAL_SUFFIX: &str = ".partial";

pub fn partial(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(PARTIAL_SUFFIX);
    PathBuf::from(s)
}

/// Sibling file holding the effective configuration of a single-output command.
pub fn config_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash<S: Serialize>(cfg: &S) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(cfg)?.as_bytes()))
}

/// Digest of the exact loss values, in order.
pub fn loss_digest<'a>(losses: impl IntoIterator<Item = &'a f64>) -> String {
    let mut h = Sha256::new();
    for l in losses {
        h.update(l.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn write_estimates_csv(path: &Path, rows: &[ErrorRateEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["ebn0_db", "bler", "ber", "blocks", "block_errors", "std_err"])?;
    for r in rows {
        w.write_record([
            r.ebn0_db.to_string(),
            r.bler.to_string(),
            r.ber.to_string(),
            r.blocks.to_string(),
            r.block_errors.to_string(),
            r.std_err.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_csv(path: &Path, history: &[LossRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["batch_index", "loss", "eta"])?;
    for r in history {
        w.write_record([r.batch_index.to_string(), r.loss.to_string(), r.eta.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub struct PruneRow {
    pub step: usize,
    pub remaining_cn: usize,
    pub loss: f64,
    pub bler_probe: Option<f64>,
}

pub fn write_prune_csv(path: &Path, rows: &[PruneRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["step", "remaining_cn", "loss", "bler_probe"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.remaining_cn.to_string(),
            r.loss.to_string(),
            r.bler_probe.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
