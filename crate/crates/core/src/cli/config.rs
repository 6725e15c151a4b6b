//! Run configuration: defaults, overridden by a `key = value` file, then by
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::hsic::{Normalization, SensitivityConfig, DEFAULT_ALPHAS, DEFAULT_GRAM_SUBSAMPLE, DEFAULT_MIN_FEASIBLE};
use crate::optimize::{DfoOptions, StudyConfig, Version, DEFAULT_ALPHA_SEL, DEFAULT_FACTOR};
use crate::sobol::DEFAULT_BINS;
use crate::{Error, Result};

/// Output transform of the `sobol` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Pick-freeze on `f` inside the sublevel set and 0 outside.
    Zero,
    /// Given-data indices of `f` restricted to the sublevel set.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub benchmark: Option<String>,
    pub design: Option<PathBuf>,
    pub n: usize,
    pub gram_subsample: usize,
    pub reps: usize,
    pub alphas: Vec<f64>,
    pub min_feasible: usize,
    pub normalization: Normalization,
    pub factor: f64,
    pub alpha_sel: f64,
    pub rho_begin: f64,
    pub rho_end: f64,
    pub budget: usize,
    pub ftol_rel: f64,
    pub starts: usize,
    pub study_reps: usize,
    pub lhs_iters: usize,
    pub versions: Vec<Version>,
    /// Frozen inputs set by hand (0-based index, value); bypasses screening.
    pub fixed: Vec<(usize, f64)>,
    pub transform: Transform,
    pub bins: usize,
    pub hist_bins: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let dfo = DfoOptions::default();
        let study = StudyConfig::default();
        Self {
            benchmark: None,
            design: None,
            n: 50_000,
            gram_subsample: DEFAULT_GRAM_SUBSAMPLE,
            reps: 20,
            alphas: DEFAULT_ALPHAS.to_vec(),
            min_feasible: DEFAULT_MIN_FEASIBLE,
            normalization: Normalization::Sum,
            factor: DEFAULT_FACTOR,
            alpha_sel: DEFAULT_ALPHA_SEL,
            rho_begin: dfo.rho_begin,
            rho_end: dfo.rho_end,
            budget: dfo.budget,
            ftol_rel: dfo.ftol_rel,
            starts: study.n_starts,
            study_reps: study.n_reps,
            lhs_iters: study.lhs_iters,
            versions: vec![Version::Original, Version::Greedy, Version::Random],
            fixed: Vec::new(),
            transform: Transform::Zero,
            bins: DEFAULT_BINS,
            hist_bins: 20,
            seed: 0,
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{value}`")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

impl RunConfig {
    /// Sets one option from its textual value. Keys use the flag names with
    /// either `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "benchmark" => self.benchmark = Some(v.to_string()),
            "design" => self.design = Some(PathBuf::from(v)),
            "n" => self.n = num(&key, v)?,
            "gram_subsample" => self.gram_subsample = num(&key, v)?,
            "reps" => self.reps = num(&key, v)?,
            "alphas" => self.alphas = list(&key, v)?,
            "min_feasible" => self.min_feasible = num(&key, v)?,
            "normalization" => self.normalization = v.parse()?,
            "factor" => self.factor = num(&key, v)?,
            "alpha_sel" => self.alpha_sel = num(&key, v)?,
            "rho_begin" => self.rho_begin = num(&key, v)?,
            "rho_end" => self.rho_end = num(&key, v)?,
            "budget" => self.budget = num(&key, v)?,
            "ftol_rel" => self.ftol_rel = num(&key, v)?,
            "starts" => self.starts = num(&key, v)?,
            "study_reps" => self.study_reps = num(&key, v)?,
            "lhs_iters" => self.lhs_iters = num(&key, v)?,
            "versions" => {
                self.versions =
                    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect::<Result<_>>()?
            }
            "fixed" => self.fixed = parse_fixed(v)?,
            "transform" => {
                self.transform = match v {
                    "zero" => Transform::Zero,
                    "conditional" => Transform::Conditional,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "transform must be `zero` or `conditional`, got `{other}`"
                        )))
                    }
                }
            }
            "bins" => self.bins = num(&key, v)?,
            "hist_bins" => self.hist_bins = num(&key, v)?,
            "seed" => self.seed = num(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            "workers" => self.workers = Some(num(&key, v)?),
            other => return Err(Error::InvalidArgument(format!("unknown option `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected `key = value`", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.benchmark.is_some() && self.design.is_some() {
            return bad("give either a benchmark or a design, not both".into());
        }
        for (name, v) in [
            ("n", self.n),
            ("gram-subsample", self.gram_subsample),
            ("reps", self.reps),
            ("min-feasible", self.min_feasible),
            ("budget", self.budget),
            ("starts", self.starts),
            ("study-reps", self.study_reps),
            ("bins", self.bins),
            ("hist-bins", self.hist_bins),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.alphas.is_empty() {
            return bad("alphas must not be empty".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return bad(format!("alpha must lie in (0, 1], got {a}"));
        }
        if !self.alphas.iter().any(|a| (a - self.alpha_sel).abs() < 1e-9) {
            return bad(format!("alpha-sel {} is not one of the alphas {:?}", self.alpha_sel, self.alphas));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return bad(format!("factor must lie in (0, 1), got {}", self.factor));
        }
        if self.versions.is_empty() {
            return bad("versions must not be empty".into());
        }
        self.dfo_options().validate(1)?;
        Ok(())
    }

    pub fn sensitivity_config(&self) -> SensitivityConfig {
        SensitivityConfig {
            alphas: self.alphas.clone(),
            n: self.n,
            gram_subsample: self.gram_subsample,
            reps: self.reps,
            min_feasible: self.min_feasible,
            normalization: self.normalization,
        }
    }

    pub fn dfo_options(&self) -> DfoOptions {
        DfoOptions {
            rho_begin: self.rho_begin,
            rho_end: self.rho_end,
            budget: self.budget,
            ftol_rel: self.ftol_rel,
            ..DfoOptions::default()
        }
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            n_starts: self.starts,
            n_reps: self.study_reps,
            dfo: self.dfo_options(),
            lhs_iters: self.lhs_iters,
        }
    }
}

/// `x2=-1,x4=0.5` (1-based input names) to `(index, value)` pairs.
fn parse_fixed(v: &str) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for item in v.split(',').filter(|s| !s.trim().is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("fixed: expected `xK=value`, got `{item}`")))?;
        let k: usize = name
            .trim()
            .strip_prefix('x')
            .and_then(|s| s.parse().ok())
            .filter(|k| *k >= 1)
            .ok_or_else(|| Error::InvalidArgument(format!("fixed: bad input name `{}`", name.trim())))?;
        if out.iter().any(|(i, _)| *i == k - 1) {
            return Err(Error::InvalidArgument(format!("fixed: x{k} given twice")));
        }
        out.push((k - 1, num("fixed", value)?));
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(out)
}
