//! The four subcommands. Each writes its files into the output directory and
//! returns a short human-readable report.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::config::{RunConfig, Transform};
use crate::benchmarks::by_name;
use crate::hsic::{replicate_design, replicate_indices, DesignSource, IndexTable, ReplicateRecord};
use crate::optimize::{
    classify, freeze_values, run_study, summarize, write_records_csv, FreezeStrategy, Screening, StudySummary, Version,
    VersionSetup,
};
use crate::problem::{evaluate, EvaluatedDesign, ProblemSpec};
use crate::sampling::{uniform_sample, Seed, RNG_NAME};
use crate::sobol::{given_data_first_order, pick_freeze_thresholded, write_tables_csv, Estimator, SobolTable};
use crate::thresholding::{auto_relax, conditional_subset, sublevel_indicator, ThresholdSpec};
use crate::{Error, Result};

// Sub-seeds of the master seed, one per pipeline stage.
const SENSITIVITY_STREAM: u32 = 0;
const STUDY_STREAM: u32 = 1;
const SOBOL_STREAM: u32 = 2;
const SAMPLE_STREAM: u32 = 3;

fn master(cfg: &RunConfig) -> Seed {
    Seed::new(cfg.seed, 0)
}

fn problem(cfg: &RunConfig) -> Result<ProblemSpec> {
    match &cfg.benchmark {
        Some(name) => by_name(name),
        None => Err(Error::InvalidArgument("this command needs --benchmark".into())),
    }
}

fn load_design(path: &Path) -> Result<EvaluatedDesign> {
    EvaluatedDesign::read_csv(File::open(path)?)
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    master_seed: u64,
    rng: &'a str,
    config: &'a RunConfig,
}

fn provenance<'a>(command: &'a str, cfg: &'a RunConfig) -> Provenance<'a> {
    Provenance { command, master_seed: cfg.seed, rng: RNG_NAME, config: cfg }
}

#[derive(Serialize)]
struct ReplicateMeta<'a> {
    seed: Seed,
    t: &'a [f64],
    n_feasible: usize,
    q_values: &'a [f64],
    n_in_d: &'a [usize],
    degenerate_alphas: &'a [f64],
    bandwidths: &'a [f64],
}

impl<'a> From<&'a ReplicateRecord> for ReplicateMeta<'a> {
    fn from(r: &'a ReplicateRecord) -> Self {
        Self {
            seed: r.seed,
            t: &r.t,
            n_feasible: r.n_feasible,
            q_values: &r.q_values,
            n_in_d: &r.n_in_d,
            degenerate_alphas: &r.degenerate_alphas,
            bandwidths: &r.bandwidths,
        }
    }
}

/// Screening of `table` with greedy values from the first repetition's
/// design (`None` when that design has no feasible point).
fn screen(
    cfg: &RunConfig,
    source: DesignSource<'_>,
    table: &IndexTable,
    seed: Seed,
    domain: &crate::BoxDomain,
) -> Result<(Screening, Option<Screening>)> {
    let screening = classify(table, cfg.alpha_sel, cfg.factor)?;
    let design = replicate_design(source, cfg.n, seed, 0)?;
    let greedy = match freeze_values(FreezeStrategy::Greedy, &screening, domain, Some(&design), seed) {
        Ok(s) => Some(s),
        Err(Error::Infeasible(msg)) => {
            log::warn!("greedy freezing unavailable: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok((screening, greedy))
}

fn names(idx: &[usize]) -> String {
    let v: Vec<String> = idx.iter().map(|i| format!("x{}", i + 1)).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(", ")
    }
}

pub fn sensitivity(cfg: &RunConfig) -> Result<String> {
    let given;
    let bench;
    let source = match (&cfg.benchmark, &cfg.design) {
        (_, Some(path)) => {
            given = load_design(path)?;
            DesignSource::Given(&given)
        }
        (Some(_), None) => {
            bench = problem(cfg)?;
            DesignSource::Problem(&bench)
        }
        (None, None) => return Err(Error::InvalidArgument("give --benchmark or --design".into())),
    };
    let domain = match source {
        DesignSource::Problem(p) => p.domain().clone(),
        DesignSource::Given(d) => bounding_box(d)?,
    };
    let seed = master(cfg).child(SENSITIVITY_STREAM);
    let table = replicate_indices(source, &cfg.sensitivity_config(), seed)?;
    let (screening, greedy) = screen(cfg, source, &table, seed, &domain)?;

    table.write_csv(create(&cfg.out, "indices.csv")?)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        seed: Seed,
        mode: crate::hsic::DesignMode,
        alphas: &'a [f64],
        replicates: Vec<ReplicateMeta<'a>>,
        screening: &'a Screening,
        greedy_values: Option<&'a [f64]>,
    }
    write_json(
        &cfg.out,
        "sensitivity.json",
        &Meta {
            provenance: provenance("sensitivity", cfg),
            seed,
            mode: table.mode,
            alphas: &table.alphas,
            replicates: table.replicates.iter().map(ReplicateMeta::from).collect(),
            screening: &screening,
            greedy_values: greedy.as_ref().and_then(|g| g.values.as_deref()),
        },
    )?;

    let mut report = String::from("alpha");
    for i in 0..table.d {
        report.push_str(&format!("\tx{}", i + 1));
    }
    report.push('\n');
    for (k, alpha) in table.alphas.iter().enumerate() {
        report.push_str(&format!("{alpha}"));
        for i in 0..table.d {
            report.push_str(&format!("\t{:.4} ({:.4})", table.mean[k][i], table.std[k][i]));
        }
        report.push('\n');
    }
    report.push_str(&format!(
        "frozen at alpha = {} (tau = {:.4}): {}\n",
        cfg.alpha_sel,
        screening.tau,
        names(&screening.frozen)
    ));
    Ok(report)
}

/// Smallest box holding every row of a given design.
fn bounding_box(design: &EvaluatedDesign) -> Result<crate::BoxDomain> {
    let x = design.x();
    let lo: Vec<f64> = x.columns().into_iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = x.columns().into_iter().map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    // A constant column still needs a nonempty interval.
    let hi = hi.iter().zip(&lo).map(|(h, l)| if h > l { *h } else { l + 1.0 }).collect();
    crate::BoxDomain::new(lo, hi)
}

pub fn sobol(cfg: &RunConfig) -> Result<String> {
    let seed = master(cfg).child(SOBOL_STREAM);
    let mut tables: Vec<(f64, SobolTable)> = Vec::new();
    let t;
    match (cfg.transform, &cfg.benchmark, &cfg.design) {
        (Transform::Conditional, _, Some(path)) => {
            let design = load_design(path)?;
            t = relaxation(&design, cfg.min_feasible)?;
            for &alpha in &cfg.alphas {
                tables.push((alpha, given_data(&design, alpha, &t, cfg.bins)?));
            }
        }
        (_, Some(_), None) => {
            let p = problem(cfg)?;
            let x = uniform_sample(p.domain(), cfg.n, seed.child(1000))?;
            let design = evaluate(&p, x.view())?;
            t = relaxation(&design, cfg.min_feasible)?;
            for (k, &alpha) in cfg.alphas.iter().enumerate() {
                let spec = ThresholdSpec::new(alpha, t.clone())?;
                let table = match cfg.transform {
                    Transform::Zero => pick_freeze_thresholded(&p, &spec, cfg.n, seed.child(k as u32))?,
                    Transform::Conditional => {
                        let x = uniform_sample(p.domain(), cfg.n, seed.child(k as u32))?;
                        given_data(&evaluate(&p, x.view())?, alpha, &t, cfg.bins)?
                    }
                };
                tables.push((alpha, table));
            }
        }
        (Transform::Zero, _, Some(_)) => {
            return Err(Error::InvalidArgument(
                "pick-freeze needs --benchmark; use --transform conditional with a design".into(),
            ))
        }
        (_, None, None) => return Err(Error::InvalidArgument("give --benchmark or --design".into())),
    }

    let refs: Vec<(Option<f64>, &SobolTable)> = tables.iter().map(|(a, tab)| (Some(*a), tab)).collect();
    write_tables_csv(&refs, create(&cfg.out, "sobol.csv")?)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        seed: Seed,
        t: &'a [f64],
        transform: Transform,
        samples: Vec<usize>,
    }
    write_json(
        &cfg.out,
        "sobol.json",
        &Meta {
            provenance: provenance("sobol", cfg),
            seed,
            t: &t,
            transform: cfg.transform,
            samples: tables.iter().map(|(_, tab)| tab.n_samples).collect(),
        },
    )?;

    let mut report = String::from("alpha\tinput\tfirst\ttotal\n");
    for (alpha, tab) in &tables {
        for i in 0..tab.dim() {
            let total = tab.total.as_ref().map(|v| format!("{:.4}", v[i])).unwrap_or_else(|| "-".into());
            report.push_str(&format!("{alpha}\tx{}\t{:.4}\t{total}\n", i + 1, tab.first[i]));
        }
    }
    Ok(report)
}

/// No relaxation for unconstrained problems, else the automatic one.
fn relaxation(design: &EvaluatedDesign, min_feasible: usize) -> Result<Vec<f64>> {
    if design.n_constraints() == 0 {
        Ok(Vec::new())
    } else {
        auto_relax(design, min_feasible)
    }
}

fn given_data(design: &EvaluatedDesign, alpha: f64, t: &[f64], bins: usize) -> Result<SobolTable> {
    let spec = ThresholdSpec::new(alpha, t.to_vec())?;
    let (xd, fd) = conditional_subset(design, &spec)?;
    let first = given_data_first_order(xd.view(), &fd, bins)?;
    Ok(SobolTable { first, total: None, n_samples: xd.nrows(), estimator: Estimator::GivenData })
}

pub fn sample(cfg: &RunConfig) -> Result<String> {
    let p = problem(cfg)?;
    let seed = master(cfg).child(SAMPLE_STREAM);
    let x = uniform_sample(p.domain(), cfg.n, seed)?;
    let design = evaluate(&p, x.view())?;
    let t = relaxation(&design, cfg.min_feasible)?;
    let sub = sublevel_indicator(&design, &ThresholdSpec::new(cfg.alpha_sel, t.clone())?)?;
    let z: Vec<f64> = sub.z.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
    design.write_csv(create(&cfg.out, "design.csv")?, &[("z", z)])?;
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        seed: Seed,
        t: &'a [f64],
        alpha: f64,
        q_value: f64,
        n_feasible: usize,
        n_in_d: usize,
    }
    write_json(
        &cfg.out,
        "sample.json",
        &Meta {
            provenance: provenance("sample", cfg),
            seed,
            t: &t,
            alpha: cfg.alpha_sel,
            q_value: sub.q_value,
            n_feasible: sub.n_feasible,
            n_in_d: sub.n_in_d,
        },
    )?;
    Ok(format!(
        "{} points, {} feasible with t = {:?}, {} in the sublevel set at alpha = {} (q = {})\n",
        design.n(),
        sub.n_feasible,
        t,
        sub.n_in_d,
        cfg.alpha_sel,
        sub.q_value
    ))
}

pub fn study(cfg: &RunConfig) -> Result<String> {
    if cfg.design.is_some() {
        return Err(Error::InvalidArgument("a study needs --benchmark; a design cannot be optimized".into()));
    }
    let p = problem(cfg)?;
    let needs_screening = cfg.versions.iter().any(|v| *v != Version::Original);
    let seed = master(cfg).child(SENSITIVITY_STREAM);

    let mut means: Option<Vec<Vec<f64>>> = None;
    let (screening, greedy) = if !needs_screening {
        (None, None)
    } else if !cfg.fixed.is_empty() {
        let frozen: Vec<usize> = cfg.fixed.iter().map(|(i, _)| *i).collect();
        if let Some(&i) = frozen.iter().find(|&&i| i >= p.dim()) {
            return Err(Error::InvalidArgument(format!("fixed input x{} does not exist", i + 1)));
        }
        let active = (0..p.dim()).filter(|i| !frozen.contains(i)).collect();
        let values = cfg.fixed.iter().map(|(_, v)| *v).collect();
        let s = Screening { active, frozen, values: Some(values), tau: 0.0, alpha_sel: cfg.alpha_sel };
        (Some(Screening { values: None, ..s.clone() }), Some(s))
    } else {
        let source = DesignSource::Problem(&p);
        let table = replicate_indices(source, &cfg.sensitivity_config(), seed)?;
        let (s, g) = screen(cfg, source, &table, seed, p.domain())?;
        table.write_csv(create(&cfg.out, "indices.csv")?)?;
        means = Some(table.mean);
        (Some(s), g)
    };

    let mut setups = Vec::new();
    for v in &cfg.versions {
        setups.push(match v {
            Version::Original => VersionSetup::Original,
            Version::Greedy => VersionSetup::Greedy(
                greedy
                    .clone()
                    .ok_or_else(|| Error::Infeasible("no feasible design point to take greedy values from".into()))?,
            ),
            Version::Random => VersionSetup::Random(screening.clone().expect("screened above")),
        });
    }
    let study_seed = master(cfg).child(STUDY_STREAM);
    let records = run_study(&p, &setups, &cfg.study_config(), study_seed)?;
    let summaries = summarize(&records, cfg.hist_bins);

    write_records_csv(&records, create(&cfg.out, "study.csv")?)?;
    write_json(&cfg.out, "histograms.json", &summaries)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        #[serde(flatten)]
        provenance: Provenance<'a>,
        sensitivity_seed: Option<Seed>,
        study_seed: Seed,
        mean_indices: Option<&'a [Vec<f64>]>,
        screening: Option<&'a Screening>,
        greedy_values: Option<&'a [f64]>,
    }
    write_json(
        &cfg.out,
        "study.json",
        &Meta {
            provenance: provenance("study", cfg),
            sensitivity_seed: means.as_ref().map(|_| seed),
            study_seed,
            mean_indices: means.as_deref(),
            screening: screening.as_ref(),
            greedy_values: greedy.as_ref().and_then(|g| g.values.as_deref()),
        },
    )?;
    Ok(study_report(screening.as_ref(), greedy.as_ref(), &summaries))
}

fn study_report(screening: Option<&Screening>, greedy: Option<&Screening>, summaries: &[StudySummary]) -> String {
    let mut out = String::new();
    if let Some(s) = screening {
        out.push_str(&format!("frozen: {}", names(&s.frozen)));
        if let Some(v) = greedy.and_then(|g| g.values.as_ref()) {
            out.push_str(&format!(" (greedy values {v:?})"));
        }
        out.push('\n');
    }
    out.push_str("version\truns\tfeasible\tbest_f\tmodal_f\tmean_calls\tmodal_calls\n");
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    for s in summaries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.1}\t{}\n",
            s.version.as_str(),
            s.n_runs,
            s.n_feasible,
            fmt(s.best_f),
            fmt(s.modal_f_final),
            s.mean_n_calls,
            s.modal_n_calls
        ));
    }
    out
}
