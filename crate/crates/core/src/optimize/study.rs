//! Multistart optimization studies over problem versions and their
//! histogram summaries.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cobyla::{dfo_minimize, DfoOptions, DfoStatus};
use super::{freeze_values, reduce, FreezeStrategy, Screening};
use crate::problem::ProblemSpec;
use crate::sampling::{lhs_maximin, uniform_sample, Seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Version {
    Original,
    Greedy,
    Random,
}

impl Version {
    pub fn as_str(&self) -> &'static str {
        match self {
            Version::Original => "original",
            Version::Greedy => "greedy",
            Version::Random => "random",
        }
    }
}

impl std::str::FromStr for Version {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Version::Original),
            "greedy" => Ok(Version::Greedy),
            "random" => Ok(Version::Random),
            other => Err(Error::InvalidArgument(format!("unknown version `{other}`"))),
        }
    }
}

/// One problem version of a study.
#[derive(Debug, Clone, PartialEq)]
pub enum VersionSetup {
    Original,
    /// Frozen values fixed once.
    Greedy(Screening),
    /// Frozen values redrawn uniformly at every repetition.
    Random(Screening),
}

impl VersionSetup {
    pub fn version(&self) -> Version {
        match self {
            VersionSetup::Original => Version::Original,
            VersionSetup::Greedy(_) => Version::Greedy,
            VersionSetup::Random(_) => Version::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_starts: usize,
    pub n_reps: usize,
    pub dfo: DfoOptions,
    /// Swap proposals of the maximin LHS search.
    pub lhs_iters: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { n_starts: 100, n_reps: 10, dfo: DfoOptions::default(), lhs_iters: 2000 }
    }
}

/// One local optimization run; coordinates are in the full input space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRecord {
    pub version: Version,
    pub rep: usize,
    pub start: Vec<f64>,
    #[serde(rename = "final")]
    pub final_x: Vec<f64>,
    pub f_final: f64,
    pub feasible: bool,
    pub n_calls: usize,
    pub status: DfoStatus,
}

struct Task {
    version: Version,
    rep: usize,
    problem: ProblemSpec,
    screening: Option<Screening>,
    starts: Vec<Vec<f64>>,
}

fn plan(
    problem: &ProblemSpec,
    setup: &VersionSetup,
    vi: usize,
    rep: usize,
    cfg: &StudyConfig,
    seed: Seed,
) -> Result<Task> {
    let rep_seed = seed.child(vi as u32).child(rep as u32);
    let screening = match setup {
        VersionSetup::Original => None,
        VersionSetup::Greedy(s) => {
            if s.values.is_none() {
                return Err(Error::InvalidArgument("greedy version needs frozen values".into()));
            }
            Some(s.clone())
        }
        VersionSetup::Random(s) => {
            Some(freeze_values(FreezeStrategy::Random, s, problem.domain(), None, rep_seed.child(1))?)
        }
    };
    let reduced = match &screening {
        Some(s) => reduce(problem, s)?,
        None => problem.clone(),
    };
    let x = if cfg.n_starts == 1 {
        uniform_sample(reduced.domain(), 1, rep_seed.child(0))?
    } else {
        lhs_maximin(reduced.domain(), cfg.n_starts, rep_seed.child(0), cfg.lhs_iters)?
    };
    let starts = x.rows().into_iter().map(|r| r.to_vec()).collect();
    Ok(Task { version: setup.version(), rep, problem: reduced, screening, starts })
}

/// Runs every version `n_reps` times from `n_starts` maximin LHS points of
/// its own box. Records come back ordered by version, repetition and start.
pub fn run_study(
    problem: &ProblemSpec,
    setups: &[VersionSetup],
    cfg: &StudyConfig,
    seed: Seed,
) -> Result<Vec<StudyRecord>> {
    if cfg.n_starts == 0 || cfg.n_reps == 0 {
        return Err(Error::InvalidArgument("a study needs at least one start and one repetition".into()));
    }
    let mut tasks = Vec::new();
    for (vi, setup) in setups.iter().enumerate() {
        for rep in 0..cfg.n_reps {
            tasks.push(plan(problem, setup, vi, rep, cfg, seed)?);
        }
    }
    let jobs: Vec<(usize, usize)> =
        tasks.iter().enumerate().flat_map(|(t, task)| (0..task.starts.len()).map(move |k| (t, k))).collect();
    jobs.par_iter()
        .map(|&(t, k)| {
            let task = &tasks[t];
            let y0 = &task.starts[k];
            let r = dfo_minimize(&task.problem, y0, &cfg.dfo)?;
            let full = |y: &[f64]| -> Result<Vec<f64>> {
                match &task.screening {
                    Some(s) => s.merge(y),
                    None => Ok(y.to_vec()),
                }
            };
            Ok(StudyRecord {
                version: task.version,
                rep: task.rep,
                start: full(y0)?,
                final_x: full(&r.x)?,
                f_final: r.f,
                feasible: r.feasible,
                n_calls: r.n_calls,
                status: r.status,
            })
        })
        .collect()
}

/// `version, rep, start_x1.., final_x1.., f_final, feasible, n_calls, status`.
pub fn write_records_csv<W: std::io::Write>(records: &[StudyRecord], w: W) -> Result<()> {
    let d = records.first().map_or(0, |r| r.start.len());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["version".to_string(), "rep".to_string()];
    header.extend((1..=d).map(|i| format!("start_x{i}")));
    header.extend((1..=d).map(|i| format!("final_x{i}")));
    header.extend(["f_final", "feasible", "n_calls", "status"].map(String::from));
    wtr.write_record(&header)?;
    for r in records {
        let mut rec = vec![r.version.as_str().to_string(), r.rep.to_string()];
        rec.extend(r.start.iter().map(|v| v.to_string()));
        rec.extend(r.final_x.iter().map(|v| v.to_string()));
        rec.push(r.f_final.to_string());
        rec.push(r.feasible.to_string());
        rec.push(r.n_calls.to_string());
        rec.push(r.status.as_str().to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]`; the last bin is closed.
    pub fn new(values: &[f64], n_bins: usize) -> Self {
        if values.is_empty() || n_bins == 0 {
            return Self { edges: vec![], counts: vec![] };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
        let edges = (0..=n_bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; n_bins];
        for v in values {
            let k = (((v - lo) / width) as usize).min(n_bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub version: Version,
    pub n_runs: usize,
    pub n_feasible: usize,
    /// Lowest feasible `f_final`.
    pub best_f: Option<f64>,
    pub mean_n_calls: f64,
    /// Most frequent `n_calls` (smallest on ties).
    pub modal_n_calls: usize,
    /// Median of the densest cluster of feasible `f_final` values: the run
    /// value with the most runs within 1% of it.
    pub modal_f_final: Option<f64>,
    pub f_final_hist: Histogram,
    pub n_calls_hist: Histogram,
}

fn modal_value(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(usize, usize, usize)> = None;
    for v in &sorted {
        let tol = 0.01 * v.abs();
        let lo = sorted.partition_point(|w| *w < v - tol);
        let hi = sorted.partition_point(|w| *w <= v + tol);
        if best.map_or(true, |(c, _, _)| hi - lo > c) {
            best = Some((hi - lo, lo, hi));
        }
    }
    best.map(|(_, lo, hi)| sorted[lo + (hi - lo - 1) / 2])
}

/// Per-version summaries, in the order versions first appear.
pub fn summarize(records: &[StudyRecord], n_bins: usize) -> Vec<StudySummary> {
    let mut order: Vec<Version> = Vec::new();
    let mut groups: BTreeMap<Version, Vec<&StudyRecord>> = BTreeMap::new();
    for r in records {
        if !groups.contains_key(&r.version) {
            order.push(r.version);
        }
        groups.entry(r.version).or_default().push(r);
    }
    order
        .into_iter()
        .map(|version| {
            let runs = &groups[&version];
            let feasible_f: Vec<f64> = runs.iter().filter(|r| r.feasible).map(|r| r.f_final).collect();
            let calls: Vec<f64> = runs.iter().map(|r| r.n_calls as f64).collect();
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for r in runs {
                *counts.entry(r.n_calls).or_default() += 1;
            }
            let modal_n_calls =
                counts.iter().fold((0, 0), |(bv, bc), (&v, &c)| if c > bc { (v, c) } else { (bv, bc) }).0;
            StudySummary {
                version,
                n_runs: runs.len(),
                n_feasible: feasible_f.len(),
                best_f: feasible_f.iter().copied().reduce(f64::min),
                mean_n_calls: calls.iter().sum::<f64>() / calls.len() as f64,
                modal_n_calls,
                modal_f_final: modal_value(&feasible_f),
                f_final_hist: Histogram::new(&feasible_f, n_bins),
                n_calls_hist: Histogram::new(&calls, n_bins),
            }
        })
        .collect()
}
