use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandsel_core::gradcheck::{run_suite, SuiteOptions};
use bandsel_core::harness::{
    compare, encode_summary, load_report, render_table, run_method, write_results, ExperimentConfig, Method,
    RunOptions, CHECKPOINT_DIR, RESULTS_FILE, SUMMARY_FILE, TABLE_FILE, TRACE_FILE,
};
use bandsel_core::synthdata::{save_raster, write_manifest, ManifestEntry, Role};
use bandsel_core::{Error, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

/// Band selection for multiband raster segmentation.
#[derive(Parser, Debug)]
#[command(name = "bandsel", version)]
struct Cli {
    /// Experiment config (TOML). Without one the planted synthetic benchmark is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override: scene seed for gen-data, training seed for train, BO seed for optimize and compare.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent runs (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write zero timings so reruns produce identical files.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Log progress (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic rasters and a manifest from the config's scene spec.
    GenData,
    /// Train one model for a single method and seed.
    Train {
        /// Overrides the config's `method`.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Run Bayesian optimisation over band masks and write its trace.
    Optimize {
        /// Continue from the trace already in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Run every configured method and write results, table and BO trace.
    Compare {
        #[arg(long)]
        resume: bool,
    },
    /// Summarise a results (or summary) file as the comparison table.
    Report {
        /// Input file; defaults to results.tsv in the output directory.
        input: Option<PathBuf>,
    },
    /// Run the finite-difference gradient suite.
    Gradcheck,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::planted_benchmark(),
    };
    cfg.reproducible |= cli.reproducible;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn write_file(path: PathBuf, text: String) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn gen_data(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let mut bench = cfg
        .data
        .synthetic
        .clone()
        .ok_or_else(|| Error::Config("gen-data needs data.synthetic in the config".into()))?;
    if let Some(s) = cli.seed {
        bench.scene.seed = s;
    }
    let (train, test) = bench.generate()?;
    create_dir(&cli.out)?;
    let mut entries = Vec::new();
    for (role, rasters) in [(Role::Train, &train), (Role::Test, &test)] {
        for (i, r) in rasters.iter().enumerate() {
            let name = format!("{}_{i:03}.bsr", role.as_str());
            save_raster(r, cli.out.join(&name))?;
            entries.push(ManifestEntry { role, path: name.into() });
        }
    }
    write_manifest(&entries, cli.out.join("manifest.tsv"))?;
    println!("wrote {} train and {} test rasters to {}", train.len(), test.len(), cli.out.display());
    Ok(())
}

fn print_report_files(out: &Path) -> Result<()> {
    let report = load_report(out.join(RESULTS_FILE))?;
    print!("{}", render_table(&report));
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gradcheck => {
            let entries = run_suite(&SuiteOptions { seed: cli.seed.unwrap_or(0), ..SuiteOptions::default() });
            let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
            let mut ok = true;
            for e in &entries {
                let pass = e.report.passed();
                ok &= pass;
                println!(
                    "{:width$}  max_rel_err {:.3e}  tol {:.0e}  {}",
                    e.name,
                    e.report.max_rel_error,
                    e.report.tolerance,
                    if pass { "ok" } else { "FAIL" }
                );
            }
            return Ok(ok);
        }
        Command::Report { input } => {
            let path = input.clone().unwrap_or_else(|| cli.out.join(RESULTS_FILE));
            let report = load_report(&path)?;
            print!("{}", render_table(&report));
            if input.is_none() {
                write_file(cli.out.join(SUMMARY_FILE), encode_summary(&report))?;
                write_file(cli.out.join(TABLE_FILE), render_table(&report))?;
            }
            return Ok(true);
        }
        _ => {}
    }

    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::GenData => gen_data(cli, &cfg)?,
        Command::Train { method } => {
            let method = method
                .or(cfg.method)
                .ok_or_else(|| Error::Config("no method given; pass --method or set `method` in the config".into()))?;
            if method == Method::BayesOpt {
                return Err(Error::Config("bayes_opt is run with `optimize`".into()));
            }
            if let Some(s) = cli.seed {
                cfg.seeds = vec![s];
            } else {
                cfg.seeds.truncate(1);
            }
            cfg.methods = vec![method];
            cfg.validate()?;
            let ds = cfg.load_dataset()?;
            create_dir(&cli.out)?;
            let opts =
                RunOptions { threads: cli.threads, checkpoint_dir: Some(cli.out.clone()), ..RunOptions::default() };
            let run = run_method(&cfg, &ds, method, &opts)?;
            write_results(&run.rows, cli.out.join(RESULTS_FILE))?;
            for r in &run.rows {
                println!("{} seed {} mask {} dice {:.4}", r.method, r.seed_or_rank, r.mask, r.dice);
            }
        }
        Command::Optimize { resume } => {
            if let Some(s) = cli.seed {
                cfg.bo.seed = s;
            }
            cfg.methods = vec![Method::BayesOpt];
            let ds = cfg.load_dataset()?;
            create_dir(&cli.out)?;
            let opts = RunOptions {
                threads: cli.threads,
                checkpoint_dir: Some(cli.out.join(CHECKPOINT_DIR)),
                trace_path: Some(cli.out.join(TRACE_FILE)),
                resume: *resume,
            };
            let run = run_method(&cfg, &ds, Method::BayesOpt, &opts)?;
            write_results(&run.rows, cli.out.join(RESULTS_FILE))?;
            for r in &run.rows {
                println!("rank {:2}  {}  dice {:.4}", r.seed_or_rank, r.mask, r.dice);
            }
        }
        Command::Compare { resume } => {
            if let Some(s) = cli.seed {
                cfg.bo.seed = s;
            }
            let ds = cfg.load_dataset()?;
            let opts = RunOptions { threads: cli.threads, resume: *resume, ..RunOptions::default() };
            compare(&cfg, &ds, &cli.out, &opts)?;
            print_report_files(&cli.out)?;
        }
        Command::Report { .. } | Command::Gradcheck => unreachable!("handled above"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
