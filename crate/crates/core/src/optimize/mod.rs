//! Variable screening from sensitivity indices, freezing of the screened-out
//! inputs, problem reduction, local optimization and multistart studies.

mod cobyla;
mod lp;
mod study;

pub use cobyla::{dfo_minimize, DfoOptions, DfoResult, DfoStatus};
pub use study::{
    run_study, summarize, write_records_csv, StudyConfig, StudyRecord, StudySummary, Version, VersionSetup,
};

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hsic::IndexTable;
use crate::problem::{feasible_mask, BoxDomain, EvaluatedDesign, ProblemSpec, ScalarFn};
use crate::sampling::Seed;
use crate::{Error, Result};

pub const DEFAULT_FACTOR: f64 = 0.1;
pub const DEFAULT_ALPHA_SEL: f64 = 0.1;

/// Partition of the inputs into active and frozen ones (0-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Screening {
    pub active: Vec<usize>,
    pub frozen: Vec<usize>,
    /// Fixed values of the frozen inputs, aligned with `frozen`.
    pub values: Option<Vec<f64>>,
    pub tau: f64,
    pub alpha_sel: f64,
}

impl Screening {
    pub fn dim(&self) -> usize {
        self.active.len() + self.frozen.len()
    }

    /// Full point from active coordinates `y` and the frozen values.
    pub fn merge(&self, y: &[f64]) -> Result<Vec<f64>> {
        let values = self.values.as_ref().ok_or_else(|| Error::InvalidArgument("frozen values are not set".into()))?;
        if y.len() != self.active.len() {
            return Err(Error::Shape(format!("{} active coordinates expected, got {}", self.active.len(), y.len())));
        }
        let mut x = vec![0.0; self.dim()];
        for (k, &i) in self.active.iter().enumerate() {
            x[i] = y[k];
        }
        for (k, &i) in self.frozen.iter().enumerate() {
            x[i] = values[k];
        }
        Ok(x)
    }
}

/// Screening from raw index values: `tau = factor * max`, inputs strictly
/// below `tau` are frozen; the argmax is always active.
pub fn classify_values(indices: &[f64], alpha_sel: f64, factor: f64) -> Result<Screening> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::InvalidArgument(format!("factor must lie in (0, 1), got {factor}")));
    }
    if indices.is_empty() {
        return Err(Error::InvalidArgument("no indices to classify".into()));
    }
    let argmax =
        (0..indices.len()).max_by(|&p, &q| indices[p].total_cmp(&indices[q]).then(q.cmp(&p))).expect("nonempty");
    let tau = factor * indices[argmax];
    let (frozen, active): (Vec<usize>, Vec<usize>) = (0..indices.len()).partition(|&i| i != argmax && indices[i] < tau);
    Ok(Screening { active, frozen, values: None, tau, alpha_sel })
}

/// Screening on the mean indices of `table` at quantile level `alpha_sel`.
pub fn classify(table: &IndexTable, alpha_sel: f64, factor: f64) -> Result<Screening> {
    let means = table.mean_at(alpha_sel).ok_or_else(|| {
        Error::InvalidArgument(format!("alpha_sel = {alpha_sel} is not one of the table's levels {:?}", table.alphas))
    })?;
    classify_values(means, alpha_sel, factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreezeStrategy {
    /// Uniform draw in each frozen coordinate's interval.
    Random,
    /// Coordinates of the best feasible design point.
    Greedy,
}

/// Row of the best feasible point (`T = 0`) of `design`; ties go to the
/// lowest row.
pub fn best_feasible_row(design: &EvaluatedDesign) -> Result<usize> {
    let mask = feasible_mask(design, &vec![0.0; design.n_constraints()])?;
    let mut best: Option<usize> = None;
    for (i, ok) in mask.iter().enumerate() {
        if *ok && best.map_or(true, |b| design.f()[i] < design.f()[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible("no feasible point in the design; rerun with a larger design or use random freezing".into())
    })
}

pub fn freeze_values(
    strategy: FreezeStrategy,
    screening: &Screening,
    domain: &BoxDomain,
    design: Option<&EvaluatedDesign>,
    seed: Seed,
) -> Result<Screening> {
    if screening.dim() != domain.dim() {
        return Err(Error::Shape(format!("screening covers {} inputs, box has {}", screening.dim(), domain.dim())));
    }
    let values = match strategy {
        FreezeStrategy::Random => {
            let mut rng = seed.rng();
            screening
                .frozen
                .iter()
                .map(|&i| {
                    let (lo, hi) = (domain.lower()[i], domain.upper()[i]);
                    lo + (hi - lo) * rng.gen::<f64>()
                })
                .collect()
        }
        FreezeStrategy::Greedy => {
            let design = design.ok_or_else(|| Error::InvalidArgument("greedy freezing needs a design".into()))?;
            if design.dim() != domain.dim() {
                return Err(Error::Shape("design does not match the box".into()));
            }
            let row = best_feasible_row(design)?;
            screening.frozen.iter().map(|&i| design.x()[[row, i]]).collect()
        }
    };
    Ok(Screening { values: Some(values), ..screening.clone() })
}

/// Problem over the active inputs, evaluating the original functions with
/// the frozen values injected.
pub fn reduce(problem: &ProblemSpec, screening: &Screening) -> Result<ProblemSpec> {
    if screening.active.is_empty() {
        return Err(Error::InvalidArgument("no active input left".into()));
    }
    if screening.dim() != problem.dim() {
        return Err(Error::Shape(format!(
            "screening covers {} inputs, problem has {}",
            screening.dim(),
            problem.dim()
        )));
    }
    screening.merge(&vec![0.0; screening.active.len()])?;
    let domain = problem.domain().restrict(&screening.active)?;
    let shared = Arc::new(screening.clone());
    let wrap = |g: ScalarFn| -> ScalarFn {
        let s = Arc::clone(&shared);
        Arc::new(move |y: &[f64]| g(&s.merge(y).expect("checked at reduction")))
    };
    let objective = wrap(Arc::clone(problem.objective_fn()));
    let constraints = problem.constraint_fns().iter().map(|g| wrap(Arc::clone(g))).collect();
    Ok(ProblemSpec::from_parts(format!("{}-reduced", problem.name()), domain, objective, constraints))
}
