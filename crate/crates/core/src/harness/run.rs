//! Per-method training runs and the four-way comparison.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use super::report::{encode_summary, render_table, summarize, Report};
use super::results::{write_results, ResultRow};
use crate::error::{Error, Result};
use crate::gp::trace::{append_trace, read_trace, write_trace, TraceRecord};
use crate::gp::{bayes_opt_loop, BoOutcome};
use crate::mask::BandMask;
use crate::segnet::{save_checkpoint, train, UNetModel};
use crate::synthdata::RasterDataset;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for independent (method, seed) runs; 0 uses rayon's default.
    pub threads: usize,
    /// One checkpoint per result row is written here when set.
    pub checkpoint_dir: Option<PathBuf>,
    /// BO trace file, appended after every evaluation.
    pub trace_path: Option<PathBuf>,
    /// Replay the existing trace file instead of starting over.
    pub resume: bool,
}

#[derive(Clone, Debug, Default)]
pub struct MethodRun {
    pub rows: Vec<ResultRow>,
    /// Present for the `bayes_opt` method.
    pub bo_trace: Option<Vec<TraceRecord>>,
}

pub fn checkpoint_path(dir: &Path, method: Method, seed_or_rank: u64) -> PathBuf {
    dir.join(format!("{method}_{seed_or_rank}.ckpt"))
}

fn method_mask(config: &ExperimentConfig, method: Method, bands: usize) -> Result<BandMask> {
    match method {
        Method::Expert => config.expert_mask(bands),
        Method::AllBands | Method::Attention => Ok(BandMask::all(bands)),
        Method::BayesOpt => Err(Error::InvalidArgument("bayes_opt has no fixed mask".into())),
    }
}

/// Trains one model on `mask` with `seed` for initialisation and shuffling.
pub fn train_mask(
    config: &ExperimentConfig,
    dataset: &RasterDataset,
    mask: &BandMask,
    attention: bool,
    seed: u64,
) -> Result<(UNetModel, f64, f64)> {
    let in_ch = if attention { dataset.bands() } else { mask.popcount() };
    let model = UNetModel::new(config.unet_config(in_ch, attention, seed))?;
    let (model, report) = train(model, dataset, mask, &config.train_options(seed))?;
    Ok((model, report.test_dice, report.seconds))
}

fn timing(config: &ExperimentConfig, seconds: f64) -> f64 {
    if config.reproducible {
        0.0
    } else {
        seconds
    }
}

fn train_row(
    config: &ExperimentConfig,
    dataset: &RasterDataset,
    method: Method,
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<ResultRow> {
    let mask = method_mask(config, method, dataset.bands())?;
    let (model, dice, seconds) = train_mask(config, dataset, &mask, method == Method::Attention, seed)?;
    if let Some(dir) = checkpoint_dir {
        save_checkpoint(&model, checkpoint_path(dir, method, seed))?;
    }
    log::info!("{method} seed {seed}: dice {dice:.4} in {seconds:.1}s");
    let row = ResultRow { method, seed_or_rank: seed, mask, dice, seconds: timing(config, seconds) };
    row.validate()?;
    Ok(row)
}

fn run_bayes_opt(config: &ExperimentConfig, dataset: &RasterDataset, opts: &RunOptions) -> Result<MethodRun> {
    let bands = dataset.bands();
    let bo = config.bo.options();
    let resume = match (&opts.trace_path, opts.resume) {
        (Some(p), true) if p.exists() => read_trace(p)?,
        (None, true) => return Err(Error::Config("resume needs a trace path".into())),
        _ => Vec::new(),
    };
    if let Some(p) = &opts.trace_path {
        if resume.is_empty() {
            write_trace(&[], p)?;
        } else {
            // Rewrite so an interrupted final line does not linger.
            write_trace(&resume, p)?;
        }
    }
    let seed = config.bo.inner_seed;
    let mut trained: HashMap<BandMask, (Option<UNetModel>, f64)> = HashMap::new();
    let outcome: BoOutcome = bayes_opt_loop(
        |mask| {
            let (model, dice, _) = train_mask(config, dataset, mask, false, seed)?;
            let keep = opts.checkpoint_dir.is_some().then_some(model);
            trained.insert(mask.clone(), (keep, dice));
            Ok(1.0 - dice)
        },
        bands,
        &bo,
        &resume,
        |rec| match &opts.trace_path {
            Some(p) => {
                let rec = TraceRecord { seconds: timing(config, rec.seconds), ..rec.clone() };
                append_trace(&rec, p)
            }
            None => Ok(()),
        },
    )?;

    let seconds: HashMap<&BandMask, f64> = outcome.trace.iter().map(|r| (&r.mask, r.seconds)).collect();
    if outcome.ranked.len() < config.bo.top_k {
        log::warn!("only {} successful BO evaluations; reporting all of them", outcome.ranked.len());
    }
    let mut rows = Vec::new();
    for (i, obs) in outcome.ranked.iter().take(config.bo.top_k).enumerate() {
        let rank = i as u64 + 1;
        let mut entry = trained.remove(&obs.mask);
        if let Some(dir) = &opts.checkpoint_dir {
            // Replayed evaluations have no model in memory; training is deterministic, so redo it.
            if entry.is_none() {
                let (model, dice, _) = train_mask(config, dataset, &obs.mask, false, seed)?;
                entry = Some((Some(model), dice));
            }
            let model = entry.as_ref().and_then(|e| e.0.as_ref()).expect("model kept when checkpointing");
            save_checkpoint(model, checkpoint_path(dir, Method::BayesOpt, rank))?;
        }
        let dice = entry.map_or(1.0 - obs.y, |e| e.1);
        let row = ResultRow {
            method: Method::BayesOpt,
            seed_or_rank: rank,
            mask: obs.mask.clone(),
            dice,
            seconds: timing(config, seconds[&obs.mask]),
        };
        row.validate()?;
        rows.push(row);
    }
    let trace = outcome.trace.into_iter().map(|r| TraceRecord { seconds: timing(config, r.seconds), ..r }).collect();
    Ok(MethodRun { rows, bo_trace: Some(trace) })
}

fn check_compatible(config: &ExperimentConfig, dataset: &RasterDataset) -> Result<()> {
    config.validate()?;
    config.check_dataset(dataset)?;
    if dataset.test_rasters().is_empty() {
        return Err(Error::Config("dataset has no test rasters".into()));
    }
    Ok(())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

enum Job {
    Seed(Method, u64),
    Bo,
}

fn run_jobs(
    config: &ExperimentConfig,
    dataset: &RasterDataset,
    methods: &[Method],
    opts: &RunOptions,
) -> Result<Vec<MethodRun>> {
    check_compatible(config, dataset)?;
    if let Some(dir) = &opts.checkpoint_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut jobs = Vec::new();
    for &m in methods {
        if m == Method::BayesOpt {
            jobs.push((m, Job::Bo));
        } else {
            jobs.extend(config.seeds.iter().map(|&s| (m, Job::Seed(m, s))));
        }
    }
    let ckpt = opts.checkpoint_dir.as_deref();
    let outputs: Vec<Result<MethodRun>> = pool(opts.threads)?.install(|| {
        jobs.par_iter()
            .map(|(_, job)| match job {
                Job::Seed(m, s) => {
                    Ok(MethodRun { rows: vec![train_row(config, dataset, *m, *s, ckpt)?], bo_trace: None })
                }
                Job::Bo => run_bayes_opt(config, dataset, opts),
            })
            .collect()
    });
    let mut runs: Vec<MethodRun> = methods.iter().map(|_| MethodRun::default()).collect();
    for ((method, _), out) in jobs.iter().zip(outputs) {
        let out = out?;
        let slot = &mut runs[methods.iter().position(|m| m == method).expect("job method is listed")];
        slot.rows.extend(out.rows);
        if out.bo_trace.is_some() {
            slot.bo_trace = out.bo_trace;
        }
    }
    Ok(runs)
}

/// Runs one method: a model per seed, or one BO run reporting its `top_k` best masks.
pub fn run_method(
    config: &ExperimentConfig,
    dataset: &RasterDataset,
    method: Method,
    opts: &RunOptions,
) -> Result<MethodRun> {
    Ok(run_jobs(config, dataset, &[method], opts)?.remove(0))
}

#[derive(Clone, Debug)]
pub struct CompareOutput {
    pub rows: Vec<ResultRow>,
    pub report: Report,
    pub bo_trace: Option<Vec<TraceRecord>>,
}

pub const RESULTS_FILE: &str = "results.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";
pub const TABLE_FILE: &str = "table.txt";
pub const TRACE_FILE: &str = "bo_trace.tsv";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Runs every configured method and writes results, summary, table, BO
/// trace and checkpoints under `out_dir`.
pub fn compare(
    config: &ExperimentConfig,
    dataset: &RasterDataset,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<CompareOutput> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut methods: Vec<Method> = Method::ALL.into_iter().filter(|m| config.methods.contains(m)).collect();
    methods.dedup();
    let opts = RunOptions {
        threads: opts.threads,
        checkpoint_dir: Some(opts.checkpoint_dir.clone().unwrap_or_else(|| out_dir.join(CHECKPOINT_DIR))),
        trace_path: Some(opts.trace_path.clone().unwrap_or_else(|| out_dir.join(TRACE_FILE))),
        resume: opts.resume,
    };
    let runs = run_jobs(config, dataset, &methods, &opts)?;
    let bo_trace = runs.iter().find_map(|r| r.bo_trace.clone());
    let rows: Vec<ResultRow> = runs.into_iter().flat_map(|r| r.rows).collect();
    let report = summarize(&rows);
    write_results(&rows, out_dir.join(RESULTS_FILE))?;
    let write = |name: &str, text: String| {
        let p = out_dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write(SUMMARY_FILE, encode_summary(&report))?;
    write(TABLE_FILE, render_table(&report))?;
    if bo_trace.is_none() && !out_dir.join(TRACE_FILE).exists() {
        write_trace(&[], out_dir.join(TRACE_FILE))?;
    }
    Ok(CompareOutput { rows, report, bo_trace })
}
