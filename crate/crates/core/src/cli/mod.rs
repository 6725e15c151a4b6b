//! Command-line interface.
//!
//! Options come from three layers: built-in defaults, an optional
//! `key = value` file (`--config`), and flags. Later layers win.
//!
//! Exit codes: 0 success, 2 configuration error, 3 degenerate data,
//! 4 numerical failure.

mod commands;
mod config;

pub use config::{RunConfig, Transform};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "sensopt",
    version,
    about = "Goal-oriented sensitivity analysis and variable freezing for constrained optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Repeated HSIC-IT indices per quantile level, plus the screening.
    Sensitivity,
    /// Sobol indices of the thresholded output over the alpha grid.
    Sobol,
    /// Multistart optimization of the original and reduced problems.
    Study,
    /// Evaluated uniform design with its sublevel-set indicator.
    Sample,
}

/// Flag overrides; every flag also exists as a config-file key.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// `key = value` file applied before the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// dixon-price, linear2d, level, twisted-strip, gtcd or wb4.
    #[arg(long, global = true)]
    pub benchmark: Option<String>,
    /// CSV with x1..xd, f and g1..gm columns, used instead of a benchmark.
    #[arg(long, global = true)]
    pub design: Option<String>,
    /// Design size per repetition.
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Cap on the rows entering each Gram matrix.
    #[arg(long, global = true)]
    pub gram_subsample: Option<String>,
    /// Repetitions of the sensitivity analysis.
    #[arg(long, global = true)]
    pub reps: Option<String>,
    /// Comma-separated quantile levels.
    #[arg(long, global = true)]
    pub alphas: Option<String>,
    /// Relax the constraints until this many points are feasible.
    #[arg(long, global = true)]
    pub min_feasible: Option<String>,
    /// sum or cross.
    #[arg(long, global = true)]
    pub normalization: Option<String>,
    /// Screening threshold as a fraction of the largest index.
    #[arg(long, global = true)]
    pub factor: Option<String>,
    /// Quantile level used for screening.
    #[arg(long, global = true)]
    pub alpha_sel: Option<String>,
    /// Initial trust radius, in unit-box coordinates.
    #[arg(long, global = true)]
    pub rho_begin: Option<String>,
    /// Final trust radius, in unit-box coordinates.
    #[arg(long, global = true)]
    pub rho_end: Option<String>,
    /// Stop after a feasible step gaining less than this relative to |f|; 0 disables.
    #[arg(long, global = true)]
    pub ftol_rel: Option<String>,
    /// Objective evaluations per local run.
    #[arg(long, global = true)]
    pub budget: Option<String>,
    /// Local runs per study repetition.
    #[arg(long, global = true)]
    pub starts: Option<String>,
    /// Repetitions of the multistart study.
    #[arg(long, global = true)]
    pub study_reps: Option<String>,
    /// Comma-separated subset of original, greedy, random.
    #[arg(long, global = true)]
    pub versions: Option<String>,
    /// Frozen inputs set by hand, e.g. `x2=-1`; skips screening.
    #[arg(long, global = true)]
    pub fixed: Option<String>,
    /// zero or conditional (sobol only).
    #[arg(long, global = true)]
    pub transform: Option<String>,
    /// Bins of the given-data Sobol estimator.
    #[arg(long, global = true)]
    pub bins: Option<String>,
    /// Bins of the study histograms.
    #[arg(long, global = true)]
    pub hist_bins: Option<String>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("benchmark", &self.benchmark),
            ("design", &self.design),
            ("n", &self.n),
            ("gram_subsample", &self.gram_subsample),
            ("reps", &self.reps),
            ("alphas", &self.alphas),
            ("min_feasible", &self.min_feasible),
            ("normalization", &self.normalization),
            ("factor", &self.factor),
            ("alpha_sel", &self.alpha_sel),
            ("rho_begin", &self.rho_begin),
            ("rho_end", &self.rho_end),
            ("ftol_rel", &self.ftol_rel),
            ("budget", &self.budget),
            ("starts", &self.starts),
            ("study_reps", &self.study_reps),
            ("versions", &self.versions),
            ("fixed", &self.fixed),
            ("transform", &self.transform),
            ("bins", &self.bins),
            ("hist_bins", &self.hist_bins),
            ("seed", &self.seed),
            ("out", &self.out),
            ("workers", &self.workers),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

/// Defaults, then the config file, then the flags.
pub fn resolve(flags: &Flags) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        cfg.apply_file(path).map_err(|e| Error::InvalidArgument(format!("config file {}: {e}", path.display())))?;
    }
    for (k, v) in flags.pairs() {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_degenerate() => 3,
        Error::Numerical(_) | Error::NonFinite { .. } => 4,
        _ => 2,
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> crate::Result<String> {
    let run = || match command {
        Command::Sensitivity => commands::sensitivity(cfg),
        Command::Sobol => commands::sobol(cfg),
        Command::Study => commands::study(cfg),
        Command::Sample => commands::sample(cfg),
    };
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {w} workers: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = resolve(&cli.flags).and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
