use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use pbnbp::codes::{to_alist_string, LinearCode};
use pbnbp::model::{ModelFile, Provenance};
use pbnbp::msgpass::{Decoder, IterationPlan, Variant, WeightSet};
use pbnbp::pruning::{complexity, count_parameters, finalize_decoder, initial_decoder, prune_loop, PruneEnd, PruneError};
use pbnbp::quant::{quantize_decoder, BitWidths, QuantMode};
use pbnbp::simulation::{monte_carlo, ErrorRateEstimate, MlDecoder, StopRule};
use pbnbp::training::{train_until_plateau, StopReason, TrainConfig, TrainError};
use serde_json::json;

use crate::config::{ChecksSpec, CodeSpec, RunConfig};
use crate::output::{
    config_hash, config_sidecar, loss_digest, partial, write_estimates_csv, write_json, write_loss_csv,
    write_prune_csv, PruneRow,
};
use crate::{BaselineDecoder, ChecksArgs, EvalArgs, QuantizeArgs, RunArgs};

/// A failed command: configuration problems exit with 2, numerical ones with 3.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Numeric(e) => e,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

fn is_numeric(e: &TrainError) -> bool {
    matches!(e, TrainError::NonFiniteLoss | TrainError::NonFiniteGradient { .. })
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let numeric = e.chain().any(|c| {
            c.downcast_ref::<TrainError>().is_some_and(is_numeric)
                || matches!(c.downcast_ref::<PruneError>(), Some(PruneError::Train(t)) if is_numeric(t))
        });
        if numeric {
            Failure::Numeric(e)
        } else {
            Failure::Usage(e)
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn checks(a: &ChecksArgs) -> CmdResult {
    let code_spec = CodeSpec::from_tokens(&a.code)?;
    let code = code_spec.build(Path::new(""))?;
    let spec = if a.all_min_weight {
        ChecksSpec::AllMinWeight
    } else if let Some(s) = &a.sample {
        ChecksSpec::Sample {
            max_weight: s[0] as usize,
            count: s[1] as usize,
            seed: s[2],
        }
    } else if let Some(s) = &a.subsample {
        ChecksSpec::Subsample {
            count: s[0] as usize,
            seed: s[1],
        }
    } else {
        ChecksSpec::Standard
    };
    let h = spec.build(&code, Path::new(""))?;
    let text = to_alist_string(&h);
    match &a.output {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("cannot write {}", p.display()))?;
            write_json(
                &config_sidecar(p),
                &json!({"code": code_spec, "checks": spec, "rows": h.n_rows(), "columns": h.n_cols()}),
            )?;
        }
        None => print!("{text}"),
    }
    eprintln!("{}: {} checks over {} bits", code.name(), h.n_rows(), h.n_cols());
    Ok(())
}

/// Loads a run config, applies overrides and resolves paths against the
/// config file's directory.
fn load_run(a: &RunArgs) -> anyhow::Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&a.config)?;
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(m) = a.max_batches {
        cfg.train.max_batches = m;
    }
    cfg.output_dir = match &a.output_dir {
        Some(d) => d.clone(),
        None => base.join(&cfg.output_dir),
    };
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    write_json(&cfg.output_dir.join("effective_config.json"), &cfg)?;
    Ok((cfg, base))
}

fn provenance<'a>(
    cfg: &impl serde::Serialize,
    kind: &str,
    seed: u64,
    losses: impl IntoIterator<Item = &'a f64>,
) -> anyhow::Result<Provenance> {
    Ok(Provenance {
        kind: Some(kind.to_string()),
        config_hash: Some(config_hash(cfg)?),
        seed: Some(seed),
        loss_history_digest: Some(loss_digest(losses)),
    })
}

fn maybe_partial(path: PathBuf, diverged: bool) -> PathBuf {
    if diverged {
        partial(&path)
    } else {
        path
    }
}

pub fn train(a: &RunArgs) -> CmdResult {
    let (cfg, base) = load_run(a)?;
    let code = cfg.code.build(&base)?;
    let h = cfg.checks.build(&code, &base)?;
    let d0 = initial_decoder::<f64>(h, cfg.l_max, cfg.family)?;
    let out = train_until_plateau(&d0, &code, &cfg.train)?;
    let diverged = out.stop == StopReason::Diverged;
    let losses: Vec<f64> = out.history.iter().map(|r| r.loss).collect();
    let prov = provenance(&cfg, "trained", cfg.train.seed, &losses)?;
    let dir = &cfg.output_dir;
    ModelFile::new(&code, &out.decoder, prov)?.save(maybe_partial(dir.join("model.json"), diverged))?;
    write_loss_csv(&maybe_partial(dir.join("train_history.csv"), diverged), &out.history)?;
    if diverged {
        return Err(Failure::Numeric(anyhow!(
            "training diverged: {}",
            out.divergence.unwrap_or_default()
        )));
    }
    eprintln!(
        "trained {} batches, best loss {:.6} ({:?})",
        out.history.len(),
        out.best_loss,
        out.stop
    );
    Ok(())
}

pub fn prune(a: &RunArgs) -> CmdResult {
    let (cfg, base) = load_run(a)?;
    let code = cfg.code.build(&base)?;
    let h = cfg.checks.build(&code, &base)?;
    let d0 = initial_decoder::<f64>(h, cfg.l_max, cfg.family)?;
    let dir = cfg.output_dir.clone();
    let mut rows = Vec::new();
    let out = prune_loop(&code, &d0, &cfg.prune, &cfg.train, |rec, _| {
        eprintln!(
            "step {:>4}  remaining {:>5}  loss {:.6}  batches {}",
            rec.step, rec.remaining_cn, rec.loss_after_retrain, rec.batches
        );
        rows.push(PruneRow {
            step: rec.step,
            remaining_cn: rec.remaining_cn,
            loss: rec.loss_after_retrain,
            bler_probe: rec.bler_probe,
        });
    })?;
    let losses: Vec<f64> = rows.iter().map(|r| r.loss).collect();
    if out.end == PruneEnd::Diverged {
        let prov = provenance(&cfg, "D1", cfg.train.seed, &losses)?;
        ModelFile::new(&code, &out.decoder, prov)?.save(partial(&dir.join("model_D1.json")))?;
        write_prune_csv(&partial(&dir.join("prune_history.csv")), &rows)?;
        return Err(Failure::Numeric(anyhow!(
            "pruning diverged: {}",
            out.divergence.unwrap_or_default()
        )));
    }
    write_prune_csv(&dir.join("prune_history.csv"), &rows)?;

    let mut params = BTreeMap::new();
    let mut failure = None;
    for &kind in &cfg.finalize {
        let name = format!("{kind:?}");
        let (d, run) = finalize_decoder(&out.decoder, kind, &code, &cfg.train)?;
        let diverged = run.as_ref().is_some_and(|r| r.stop == StopReason::Diverged);
        let prov = match &run {
            Some(r) => provenance(&cfg, &name, cfg.train.seed, r.history.iter().map(|h| &h.loss))?,
            None => provenance(&cfg, &name, cfg.train.seed, &losses)?,
        };
        ModelFile::new(&code, &d, prov)?.save(maybe_partial(dir.join(format!("model_{name}.json")), diverged))?;
        params.insert(name.clone(), count_parameters(d.weights()));
        if diverged {
            let why = run.and_then(|r| r.divergence).unwrap_or_default();
            failure = Some(anyhow!("retraining {name} diverged: {why}"));
            continue;
        }
        if let Some(ev) = &cfg.eval {
            let est = monte_carlo(&d, &code, &ev.ebn0_db, ev.stop, ev.seed)?;
            write_estimates_csv(&dir.join(format!("eval_{name}.csv")), &est)?;
        }
    }
    let c = complexity(out.decoder.plan());
    write_json(
        &dir.join("complexity.json"),
        &json!({
            "remaining_cn": out.decoder.plan().total_active(),
            "raw": c.raw,
            "normalized": c.normalized,
            "parameters": params,
            "best_step": out.best_step,
            "end": out.end,
            "total_batches": out.total_batches,
        }),
    )?;
    if let Some(e) = failure {
        return Err(Failure::Numeric(e));
    }
    eprintln!(
        "pruned to {} checks ({:?}, best step {})",
        c.normalized, out.end, out.best_step
    );
    Ok(())
}

pub fn quantize(a: &QuantizeArgs) -> CmdResult {
    let model = ModelFile::<f64>::load(&a.model)?;
    let (code, dec) = model.build()?;
    let mut tcfg = match &a.train_config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<TrainConfig>(&text).with_context(|| format!("invalid training config {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(m) = a.max_batches {
        tcfg.max_batches = m;
    }
    tcfg.validate()?;
    let bits = BitWidths {
        q_ch: a.bits[0],
        q_m: a.bits[1],
        q_w: a.bits[2],
    };
    let mode = if a.joint {
        QuantMode::Joint
    } else if a.qat {
        QuantMode::Qat
    } else if a.post_uniform {
        QuantMode::PostUniform { clip: a.clip }
    } else {
        QuantMode::PostLloyd {
            calibration_batches: a.calibration_batches,
        }
    };
    let effective = json!({"model": a.model, "bits": bits, "mode": mode, "train": tcfg});
    let (q, run) = quantize_decoder(&dec, &code, bits, mode, &tcfg)?;
    let diverged = run.as_ref().is_some_and(|r| r.stop == StopReason::Diverged);
    let prov = Provenance {
        kind: Some(format!("quantized:{}", mode_name(mode))),
        config_hash: Some(config_hash(&effective)?),
        seed: Some(tcfg.seed),
        loss_history_digest: match &run {
            Some(r) => Some(loss_digest(r.history.iter().map(|h| &h.loss))),
            None => model.provenance.loss_history_digest.clone(),
        },
    };
    ModelFile::new(&code, &q, prov)?.save(maybe_partial(a.output.clone(), diverged))?;
    write_json(&config_sidecar(&a.output), &effective)?;
    if diverged {
        let why = run.and_then(|r| r.divergence).unwrap_or_default();
        return Err(Failure::Numeric(anyhow!("quantized training diverged: {why}")));
    }
    Ok(())
}

fn mode_name(mode: QuantMode) -> &'static str {
    match mode {
        QuantMode::Joint => "joint",
        QuantMode::Qat => "qat",
        QuantMode::PostUniform { .. } => "post_uniform",
        QuantMode::PostLloyd { .. } => "post_lloyd",
    }
}

fn ensure_same_code(given: &LinearCode, model: &LinearCode) -> anyhow::Result<()> {
    let same = given.n() == model.n() && given.k() == model.k() && model.is_dual_rows(&given.h_std().to_bitvecs());
    if !same {
        bail!(
            "model/code mismatch: model is for a [{}, {}] code that differs from the requested [{}, {}] code",
            model.n(),
            model.k(),
            given.n(),
            given.k()
        );
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> CmdResult {
    let stop = StopRule {
        min_block_errors: a.min_errors,
        max_blocks: a.max_blocks,
    };
    let code_spec = a.code.as_ref().map(|t| CodeSpec::from_tokens(t)).transpose()?;
    let given = code_spec.as_ref().map(|c| c.build(Path::new(""))).transpose()?;
    let rows: Vec<ErrorRateEstimate> = if let Some(p) = &a.model {
        if a.checks.is_some() || a.plan_from.is_some() || a.iters.is_some() {
            return Err(anyhow!("--checks, --plan-from and --iters only apply to --decoder bp|min-sum").into());
        }
        let (code, d) = ModelFile::<f64>::load(p)?.build()?;
        if let Some(g) = &given {
            ensure_same_code(g, &code)?;
        }
        monte_carlo(&d, &code, &a.snr, stop, a.seed)?
    } else {
        let kind = a.decoder.expect("clap enforces a source");
        let code = given.ok_or_else(|| anyhow!("--decoder needs --code"))?;
        match kind {
            BaselineDecoder::Ml => {
                if a.checks.is_some() || a.plan_from.is_some() || a.iters.is_some() {
                    return Err(anyhow!("--checks, --plan-from and --iters do not apply to the ML decoder").into());
                }
                monte_carlo(&MlDecoder::new(&code)?, &code, &a.snr, stop, a.seed)?
            }
            BaselineDecoder::Bp | BaselineDecoder::MinSum => {
                let plan = if let Some(mp) = &a.plan_from {
                    if a.iters.is_some() {
                        return Err(anyhow!("--iters conflicts with --plan-from").into());
                    }
                    let m = ModelFile::<f64>::load(mp)?;
                    ensure_same_code(&code, &m.code.to_code()?)?;
                    m.plan
                } else {
                    let iters = a.iters.ok_or_else(|| anyhow!("--decoder bp|min-sum needs --iters or --plan-from"))?;
                    let h = match &a.checks {
                        Some(p) => ChecksSpec::File { path: p.clone() }.build(&code, Path::new(""))?,
                        None => code.h_std().clone(),
                    };
                    IterationPlan::uniform(h, iters)?
                };
                let variant = if kind == BaselineDecoder::Bp {
                    Variant::Exact
                } else {
                    Variant::MinSum
                };
                let d = Decoder::<f64>::new(plan.clone(), WeightSet::unit(&plan), variant)?;
                monte_carlo(&d, &code, &a.snr, stop, a.seed)?
            }
        }
    };
    write_estimates_csv(&a.out, &rows)?;
    if let Some(j) = &a.json {
        write_json(j, &rows)?;
    }
    write_json(
        &config_sidecar(&a.out),
        &json!({
            "model": a.model,
            "decoder": a.decoder.map(|d| format!("{d:?}").to_lowercase()),
            "code": code_spec,
            "checks": a.checks,
            "plan_from": a.plan_from,
            "iters": a.iters,
            "ebn0_db": a.snr,
            "stop": stop,
            "seed": a.seed,
        }),
    )?;
    for r in &rows {
        eprintln!(
            "{:>5.2} dB  BLER {:.4e}  BER {:.4e}  ({} errors / {} blocks)",
            r.ebn0_db, r.bler, r.ber, r.block_errors, r.blocks
        );
    }
    Ok(())
}
