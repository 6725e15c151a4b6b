//! Constrained minimization problems and batched evaluation.
//!
//! Constraints follow the `g(x) <= 0` feasibility convention throughout.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Error, Result};

/// Shared scalar function of a `d`-vector.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Axis-aligned search box `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument("domain needs at least one dimension".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Shape(format!("lower has {} bounds, upper has {}", lower.len(), upper.len())));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "dimension {}: need finite lower < upper, got [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Checks that `x` lies in the box, reporting the first offending
    /// dimension (1-based) against the given row index.
    pub fn check_point(&self, row: usize, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!("row {row} has {} coordinates, domain has {}", x.len(), self.dim())));
        }
        for (i, &v) in x.iter().enumerate() {
            if !(self.lower[i] <= v && v <= self.upper[i]) {
                return Err(Error::Domain { row, dim: i + 1, value: v, lower: self.lower[i], upper: self.upper[i] });
            }
        }
        Ok(())
    }

    /// Maps a point of the box to the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| (v - self.lower[i]) / self.width(i)).collect()
    }

    /// Maps a point of the unit cube to the box; the result is clamped so
    /// that round-off never leaves the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, v)| (self.lower[i] + v * self.width(i)).clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    /// Restriction of the box to the listed dimensions, in the given order.
    pub fn restrict(&self, dims: &[usize]) -> Result<BoxDomain> {
        if let Some(&bad) = dims.iter().find(|&&i| i >= self.dim()) {
            return Err(Error::InvalidArgument(format!("dimension index {bad} out of range")));
        }
        BoxDomain::new(dims.iter().map(|&i| self.lower[i]).collect(), dims.iter().map(|&i| self.upper[i]).collect())
    }
}

/// Objective, inequality constraints and box for a minimization problem.
/// Inputs are uniformly distributed over the box.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    domain: BoxDomain,
    objective: ScalarFn,
    constraints: Vec<ScalarFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("constraints", &self.constraints.len())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new<F>(name: impl Into<String>, domain: BoxDomain, objective: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), domain, objective: Arc::new(objective), constraints: Vec::new() }
    }

    pub fn from_parts(
        name: impl Into<String>,
        domain: BoxDomain,
        objective: ScalarFn,
        constraints: Vec<ScalarFn>,
    ) -> Self {
        Self { name: name.into(), domain, objective, constraints }
    }

    /// Adds a constraint `g(x) <= 0`.
    pub fn with_constraint<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.constraints.push(Arc::new(g));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_fn(&self) -> &ScalarFn {
        &self.objective
    }

    pub fn constraint_fns(&self) -> &[ScalarFn] {
        &self.constraints
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    pub fn constraint(&self, l: usize, x: &[f64]) -> f64 {
        (self.constraints[l])(x)
    }

    pub fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|g| g(x)).collect()
    }

    /// Largest constraint value at `x`, or `-inf` when unconstrained.
    pub fn max_constraint(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|g| g(x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `N x d` inputs with the aligned objective vector and `N x m` constraint values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedDesign {
    x: Array2<f64>,
    f: Vec<f64>,
    g: Array2<f64>,
}

impl EvaluatedDesign {
    pub fn new(x: Array2<f64>, f: Vec<f64>, g: Array2<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("design must have at least one row".into()));
        }
        if f.len() != n || g.nrows() != n {
            return Err(Error::Shape(format!("X has {n} rows, f has {}, G has {}", f.len(), g.nrows())));
        }
        Ok(Self { x, f, g })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_constraints(&self) -> usize {
        self.g.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> ArrayView2<'_, f64> {
        self.g.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    /// `max_l G[i, l]`, `-inf` when there are no constraints.
    pub fn max_violation(&self, i: usize) -> f64 {
        self.g.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// New design made of the listed rows (repetitions allowed).
    pub fn select_rows(&self, rows: &[usize]) -> EvaluatedDesign {
        EvaluatedDesign {
            x: self.x.select(Axis(0), rows),
            f: rows.iter().map(|&i| self.f[i]).collect(),
            g: self.g.select(Axis(0), rows),
        }
    }

    /// Writes `x1..xd, f, g1..gm` plus optional extra named columns.
    pub fn write_csv<W: Write>(&self, w: W, extra: &[(&str, Vec<f64>)]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("f".into());
        header.extend((1..=self.n_constraints()).map(|l| format!("g{l}")));
        for (name, col) in extra {
            if col.len() != self.n() {
                return Err(Error::Shape(format!(
                    "extra column {name} has {} rows, design has {}",
                    col.len(),
                    self.n()
                )));
            }
            header.push((*name).to_string());
        }
        wtr.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.f[i].to_string());
            rec.extend(self.g.row(i).iter().map(|v| v.to_string()));
            rec.extend(extra.iter().map(|(_, c)| c[i].to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a design written by [`EvaluatedDesign::write_csv`]. Columns other
    /// than `x*`, `f` and `g*` are ignored.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let xcols = indexed_columns(&header, 'x')?;
        let gcols = indexed_columns(&header, 'g')?;
        let fcol = header
            .iter()
            .position(|h| h.trim() == "f")
            .ok_or_else(|| Error::InvalidArgument("design CSV has no `f` column".into()))?;
        if xcols.is_empty() {
            return Err(Error::InvalidArgument("design CSV has no x columns".into()));
        }
        let (mut xs, mut fs, mut gs) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            for &c in &xcols {
                xs.push(parse_cell(&rec, c)?);
            }
            fs.push(parse_cell(&rec, fcol)?);
            for &c in &gcols {
                gs.push(parse_cell(&rec, c)?);
            }
        }
        let n = fs.len();
        let x = Array2::from_shape_vec((n, xcols.len()), xs).map_err(|e| Error::Shape(e.to_string()))?;
        let g = Array2::from_shape_vec((n, gcols.len()), gs).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(x, fs, g)
    }
}

fn indexed_columns(header: &csv::StringRecord, prefix: char) -> Result<Vec<usize>> {
    let mut cols: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(pos, h)| {
            let h = h.trim();
            h.strip_prefix(prefix).and_then(|rest| rest.parse::<usize>().ok()).map(|k| (k, pos))
        })
        .collect();
    cols.sort_unstable();
    for (expected, (k, _)) in cols.iter().enumerate() {
        if *k != expected + 1 {
            return Err(Error::InvalidArgument(format!("{prefix} columns must be numbered 1..k without gaps")));
        }
    }
    Ok(cols.into_iter().map(|(_, pos)| pos).collect())
}

fn parse_cell(rec: &csv::StringRecord, col: usize) -> Result<f64> {
    let cell = rec.get(col).unwrap_or("").trim();
    cell.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("cannot parse `{cell}` as a number")))
}

/// Writes an input-only design as `x1..xd` columns.
pub fn write_inputs_csv<W: Write>(x: ArrayView2<'_, f64>, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((1..=x.ncols()).map(|i| format!("x{i}")))?;
    for row in x.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Evaluates objective and constraints on every row of `x`.
///
/// Rows are processed in parallel; output order follows `x`.
pub fn evaluate(problem: &ProblemSpec, x: ArrayView2<'_, f64>) -> Result<EvaluatedDesign> {
    if x.ncols() != problem.dim() {
        return Err(Error::Shape(format!("design has {} columns, problem has dimension {}", x.ncols(), problem.dim())));
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("design must have at least one row".into()));
    }
    let m = problem.n_constraints();
    let rows: Vec<(f64, Vec<f64>)> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i).to_vec();
            problem.domain().check_point(i, &row)?;
            let f = problem.objective(&row);
            if !f.is_finite() {
                return Err(Error::NonFinite { row: i, what: "objective".into() });
            }
            let g = problem.constraints(&row);
            if let Some(l) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, what: format!("constraint g{}", l + 1) });
            }
            Ok((f, g))
        })
        .collect::<Result<_>>()?;
    let mut f = Vec::with_capacity(rows.len());
    let mut g = Array2::zeros((rows.len(), m));
    for (i, (fi, gi)) in rows.into_iter().enumerate() {
        f.push(fi);
        for (l, v) in gi.into_iter().enumerate() {
            g[[i, l]] = v;
        }
    }
    EvaluatedDesign::new(x.to_owned(), f, g)
}

/// `mask[i]` is true iff `G[i, l] <= t[l]` for every constraint.
pub fn feasible_mask(design: &EvaluatedDesign, t: &[f64]) -> Result<Vec<bool>> {
    if t.len() != design.n_constraints() {
        return Err(Error::Shape(format!(
            "relaxation vector has {} entries, design has {} constraints",
            t.len(),
            design.n_constraints()
        )));
    }
    if let Some(bad) = t.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("relaxation must be nonnegative, got {bad}")));
    }
    Ok(design.g().rows().into_iter().map(|row| row.iter().zip(t).all(|(g, t)| g <= t)).collect())
}
