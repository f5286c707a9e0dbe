//! The `topolayer` command line: barcodes, batch topologization, classifier
//! training, weight sweeps and timing runs, written as JSON and CSV.
//!
//! Experiment commands resolve an [`ExperimentConfig`] from defaults, then an
//! optional `--config` file, then flags, and embed the resolved settings in
//! every file they write.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "topolayer", version, about = "Topological preprocessing experiments")]
pub struct Cli {
    /// Worker threads for per-image work; defaults to the core count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Barcode of a point list or of one image in an IDX file, as JSON.
    Barcode(BarcodeArgs),
    /// Topologize a training subset; writes trace.csv and IDX files.
    Topologize(ExperimentArgs),
    /// Train the classifier; writes metrics.csv and model.ckpt.
    Train(ExperimentArgs),
    /// Final accuracy for each integer weight pair (w0, w1).
    Sweep(ExperimentArgs),
    /// Per-image topologization time against space reduction.
    Bench(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct BarcodeArgs {
    /// `x y` lines (`#` comments) or an IDX image file, optionally gzipped.
    pub input: PathBuf,
    /// Image to read from an IDX input.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Binarization threshold for IDX input.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f32,
    /// Also list bars of length zero.
    #[arg(long)]
    pub keep_zero: bool,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Flat `key = value` file applied over the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Any configuration key; repeatable; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub data_dir: Option<String>,
    /// mnist, kmnist or fashion-mnist.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long)]
    pub test_subset: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub threshold: Option<String>,
    /// baseline, nonparametric, parametrized or weighted.
    #[arg(long, visible_alias = "preset")]
    pub loss: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    /// Topologization step size.
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    /// Inclusive range `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub w0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub w1: Option<String>,
    #[arg(long)]
    pub repetitions: Option<String>,
    /// Output directory (topologize, train) or file (sweep, bench).
    #[arg(short, long)]
    pub out: PathBuf,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("data_dir", &self.data_dir),
            ("dataset", &self.dataset),
            ("subset", &self.subset),
            ("test_subset", &self.test_subset),
            ("seed", &self.seed),
            ("threshold", &self.threshold),
            ("loss", &self.loss),
            ("steps", &self.steps),
            ("lr", &self.lr),
            ("epochs", &self.epochs),
            ("w0", &self.w0),
            ("w1", &self.w1),
            ("repetitions", &self.repetitions),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sizes the global worker pool. Without the `parallel` feature there is no
/// pool and the request is only logged.
pub fn init_workers(workers: Option<usize>) -> Result<(), CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.into()))?;
    }
    #[cfg(not(feature = "parallel"))]
    if workers.is_some() {
        log::warn!("built without the parallel feature; --workers ignored");
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    init_workers(cli.workers)?;
    match &cli.command {
        Command::Barcode(a) => commands::barcode::run(a),
        Command::Topologize(a) => commands::topologize::run(&a.resolve()?, &a.out),
        Command::Train(a) => commands::train::run(&a.resolve()?, &a.out),
        Command::Sweep(a) => commands::sweep::run(&a.resolve()?, &a.out),
        Command::Bench(a) => commands::bench::run(&a.resolve()?, &a.out),
    }
}
