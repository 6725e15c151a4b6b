//! Sublevel set `D = {g(x) <= T and f(x) <= q_alpha}` and the output
//! transforms built on it: zero (or constant) filling, conditioning and the
//! binary indicator.
//!
//! `q_alpha` is the empirical `alpha`-quantile of `f` over the points that
//! satisfy the relaxed constraints, so `|D|` is about `alpha` times the
//! number of relaxed-feasible points.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::problem::{feasible_mask, EvaluatedDesign};
use crate::sampling::{empirical_quantile, quantile_rank};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub alpha: f64,
    /// Per-constraint relaxation, `g_l(x) <= t[l]`.
    pub t: Vec<f64>,
    /// Value given to points outside `D` by [`zero_threshold`].
    pub zero_fill: f64,
}

impl ThresholdSpec {
    pub fn new(alpha: f64, t: Vec<f64>) -> Result<Self> {
        let spec = Self { alpha, t, zero_fill: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_fill(mut self, c: f64) -> Self {
        self.zero_fill = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if let Some(bad) = self.t.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("relaxation must be nonnegative, got {bad}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelResult {
    /// Membership in `D`.
    pub z: Vec<bool>,
    pub q_value: f64,
    pub n_feasible: usize,
    pub n_in_d: usize,
}

/// Smallest scalar relaxation `t >= 0` such that at least `min_feasible`
/// points satisfy `max_l G[i, l] <= t`, replicated to every constraint.
pub fn auto_relax(design: &EvaluatedDesign, min_feasible: usize) -> Result<Vec<f64>> {
    let n = design.n();
    if min_feasible > n {
        return Err(Error::InvalidArgument(format!(
            "cannot require {min_feasible} feasible points from a design of {n}"
        )));
    }
    let m = design.n_constraints();
    if m == 0 || min_feasible == 0 {
        return Ok(vec![0.0; m]);
    }
    let mut viol: Vec<f64> = (0..n).map(|i| design.max_violation(i).max(0.0)).collect();
    let (_, kth, _) = viol.select_nth_unstable_by(min_feasible - 1, f64::total_cmp);
    Ok(vec![*kth; m])
}

pub fn sublevel_indicator(design: &EvaluatedDesign, spec: &ThresholdSpec) -> Result<SublevelResult> {
    spec.validate()?;
    let mask = feasible_mask(design, &spec.t)?;
    let feasible_f: Vec<f64> = design.f().iter().zip(&mask).filter_map(|(f, ok)| ok.then_some(*f)).collect();
    if feasible_f.is_empty() {
        return Err(Error::DegenerateSet("no point satisfies the relaxed constraints; raise T".into()));
    }
    let q_value = empirical_quantile(&feasible_f, spec.alpha)?;
    let z: Vec<bool> = design.f().iter().zip(&mask).map(|(f, ok)| *ok && *f <= q_value).collect();
    let n_in_d = z.iter().filter(|b| **b).count();
    debug_assert!(n_in_d >= quantile_rank(spec.alpha, feasible_f.len()));
    Ok(SublevelResult { z, q_value, n_feasible: feasible_f.len(), n_in_d })
}

/// `Z = f` inside `D`, `spec.zero_fill` outside.
pub fn zero_threshold(design: &EvaluatedDesign, spec: &ThresholdSpec) -> Result<Vec<f64>> {
    let sub = sublevel_indicator(design, spec)?;
    Ok(design.f().iter().zip(&sub.z).map(|(f, inside)| if *inside { *f } else { spec.zero_fill }).collect())
}

/// Rows of `X` and `f` that belong to `D`, in their original order.
pub fn conditional_subset(design: &EvaluatedDesign, spec: &ThresholdSpec) -> Result<(Array2<f64>, Vec<f64>)> {
    let sub = sublevel_indicator(design, spec)?;
    let rows: Vec<usize> = sub.z.iter().enumerate().filter_map(|(i, b)| b.then_some(i)).collect();
    if rows.is_empty() {
        return Err(Error::DegenerateSet("sublevel set is empty".into()));
    }
    let x = design.x().select(Axis(0), &rows);
    let f = rows.iter().map(|&i| design.f()[i]).collect();
    Ok((x, f))
}
