//! Derivative-free constrained local minimization with linear models
//! (COBYLA structure).
//!
//! The method keeps a simplex of `d + 1` evaluated points and interpolates
//! linear models of the objective and of every constraint through them. Each
//! iteration minimizes the linear objective model over the box trust region
//! `|s_i| <= rho`, subject to the linearized constraints (or, if these cannot
//! be met, to the least achievable violation). A penalty merit
//! `f + mu * max(0, max_l g_l)` decides acceptance; `rho` is halved whenever
//! progress stalls, from `rho_begin` down to `rho_end`. A run also stops when
//! a successful feasible step gains less than `ftol_rel` relative to `|f|`,
//! which ends the long slow drifts linear models make along curved valleys.
//!
//! Work happens in unit coordinates: every input is rescaled to `[0, 1]`, so
//! `rho_begin` and `rho_end` are fractions of each coordinate's width. Box
//! bounds are linear constraints of the step problem and are never violated.

use serde::{Deserialize, Serialize};

use super::lp::{self, LpError};
use crate::problem::{BoxDomain, ProblemSpec};
use crate::{Error, Result};

const SIGMA_FACTOR: f64 = 0.25;
const ETA_FACTOR: f64 = 2.1;
const GEOMETRY_STEP: f64 = 0.5;
const EDGE_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfoOptions {
    /// Initial trust radius, as a fraction of each coordinate's width.
    pub rho_begin: f64,
    /// Final trust radius, same units.
    pub rho_end: f64,
    /// Maximum number of evaluations.
    pub budget: usize,
    /// A point is feasible when every `g_l <= feas_tol`.
    pub feas_tol: f64,
    /// Stop once an accepted feasible step lowers the merit by at most
    /// `ftol_rel * |f|`; `0` disables the test.
    pub ftol_rel: f64,
}

impl Default for DfoOptions {
    fn default() -> Self {
        Self { rho_begin: 0.1, rho_end: 1e-6, budget: 500, feas_tol: 1e-6, ftol_rel: 1e-7 }
    }
}

impl DfoOptions {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.rho_begin > 0.0 && self.rho_begin <= 0.5) {
            return Err(Error::InvalidArgument(format!("rho_begin must lie in (0, 0.5], got {}", self.rho_begin)));
        }
        if !(self.rho_end > 0.0 && self.rho_end < self.rho_begin) {
            return Err(Error::InvalidArgument(format!("rho_end must lie in (0, rho_begin), got {}", self.rho_end)));
        }
        if self.budget < d + 2 {
            return Err(Error::InvalidArgument(format!("budget must be at least {}, got {}", d + 2, self.budget)));
        }
        if !(self.ftol_rel >= 0.0) {
            return Err(Error::InvalidArgument("relative objective tolerance must be nonnegative".into()));
        }
        if !(self.feas_tol >= 0.0) {
            return Err(Error::InvalidArgument("feasibility tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfoStatus {
    Converged,
    BudgetExhausted,
    Degenerate,
}

impl DfoStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DfoStatus::Converged => "converged",
            DfoStatus::BudgetExhausted => "budget-exhausted",
            DfoStatus::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DfoResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// `max(0, max_l g_l(x))`.
    pub max_violation: f64,
    pub feasible: bool,
    pub n_calls: usize,
    pub status: DfoStatus,
}

#[derive(Debug, Clone)]
struct Point {
    u: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    viol: f64,
}

struct Evaluator<'a> {
    problem: &'a ProblemSpec,
    domain: &'a BoxDomain,
    budget: usize,
    feas_tol: f64,
    n_calls: usize,
    best: Option<Point>,
}

impl Evaluator<'_> {
    /// `None` once the budget is spent.
    fn eval(&mut self, u: Vec<f64>) -> Result<Option<Point>> {
        if self.n_calls >= self.budget {
            return Ok(None);
        }
        self.n_calls += 1;
        let x = self.domain.from_unit(&u);
        let f = self.problem.objective(&x);
        let g = self.problem.constraints(&x);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: self.n_calls, what: format!("evaluation at {x:?}") });
        }
        let viol = g.iter().fold(0.0f64, |a, b| a.max(*b));
        let p = Point { u, f, g, viol };
        if self.best.as_ref().map_or(true, |b| self.better(&p, b)) {
            self.best = Some(p.clone());
        }
        Ok(Some(p))
    }

    /// Feasible beats infeasible; then lower `f` among feasible points and
    /// lower violation among infeasible ones.
    fn better(&self, a: &Point, b: &Point) -> bool {
        let fa = a.viol <= self.feas_tol;
        let fb = b.viol <= self.feas_tol;
        match (fa, fb) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => a.f < b.f,
            (false, false) => a.viol < b.viol || (a.viol == b.viol && a.f < b.f),
        }
    }

    fn finish(&self, status: DfoStatus) -> DfoResult {
        let best = self.best.as_ref().expect("at least one evaluation");
        DfoResult {
            x: self.domain.from_unit(&best.u),
            f: best.f,
            max_violation: best.viol,
            feasible: best.viol <= self.feas_tol,
            n_calls: self.n_calls,
            status,
        }
    }
}

/// Inverse of a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting; `None` when a pivot is negligible.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r][col];
                if factor != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= factor * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Simplex {
    /// `v[0]` is the current optimal vertex.
    v: Vec<Point>,
    /// Inverse of the edge matrix `E[i][j] = v[j+1].u[i] - v[0].u[i]`;
    /// row `j` gives the barycentric-like coordinate of vertex `j + 1`.
    simi: Vec<Vec<f64>>,
}

impl Simplex {
    fn d(&self) -> usize {
        self.v.len() - 1
    }

    fn edge(&self, j: usize) -> Vec<f64> {
        self.v[j + 1].u.iter().zip(&self.v[0].u).map(|(a, b)| a - b).collect()
    }

    /// Recomputes the inverse edge matrix; `false` if it is singular.
    fn refresh(&mut self) -> bool {
        let d = self.d();
        let edges: Vec<Vec<f64>> = (0..d).map(|j| self.edge(j)).collect();
        let e: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| edges[j][i]).collect()).collect();
        match invert(&e) {
            Some(inv) => {
                self.simi = inv;
                true
            }
            None => false,
        }
    }

    fn phi(&self, j: usize, mu: f64) -> f64 {
        self.v[j].f + mu * self.v[j].viol
    }

    /// Vertex with the lowest merit (ties at `mu = 0` go to the lower
    /// violation).
    fn optimal_vertex(&self, mu: f64) -> usize {
        let mut best = 0;
        let mut phimin = self.phi(0, mu);
        for j in 1..self.v.len() {
            let t = self.phi(j, mu);
            if t < phimin || (t == phimin && mu == 0.0 && self.v[j].viol < self.v[best].viol) {
                best = j;
                phimin = t;
            }
        }
        best
    }

    /// Gradient of the linear interpolant of `values` (one per vertex).
    fn gradient(&self, values: impl Fn(&Point) -> f64) -> Vec<f64> {
        let d = self.d();
        let base = values(&self.v[0]);
        let delta: Vec<f64> = (1..=d).map(|j| values(&self.v[j]) - base).collect();
        (0..d).map(|i| (0..d).map(|j| self.simi[j][i] * delta[j]).sum()).collect()
    }

    /// `(vsig, veta)`: distance of each vertex from the opposite face and
    /// edge length from the optimal vertex.
    fn shape(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d();
        let vsig = (0..d).map(|j| 1.0 / norm(&self.simi[j])).collect();
        let veta = (0..d).map(|j| norm(&self.edge(j))).collect();
        (vsig, veta)
    }
}

/// Step from `u0` minimizing `c . s` over `lo <= s <= hi` subject to
/// `g0 + A s <= 0`, or to the smallest achievable uniform violation.
fn trust_step(c: &[f64], a: &[Vec<f64>], g0: &[f64], lo: &[f64], hi: &[f64], resmax: f64) -> Result<Vec<f64>> {
    let d = c.len();
    let lp_err = |e: LpError| Error::Numerical(format!("trust-region step problem: {e:?}"));
    // Rows scaled by max(|a_l|, |g0_l|); constant constraints are skipped.
    let scaled: Vec<(Vec<f64>, f64, f64)> = a
        .iter()
        .zip(g0)
        .filter(|(row, _)| norm(row) > 0.0)
        .map(|(row, g)| {
            let scale = norm(row).max(g.abs());
            (row.iter().map(|v| v / scale).collect(), g / scale, scale)
        })
        .collect();

    // Least achievable violation of the linearized constraints.
    let mut target = 0.0;
    let mut phase1 = None;
    if resmax > 0.0 {
        let mut cost = vec![0.0; d];
        cost.push(1.0);
        let mut lo1 = lo.to_vec();
        lo1.push(0.0);
        let mut hi1 = hi.to_vec();
        hi1.push(f64::INFINITY);
        let (mat, rhs): (Vec<Vec<f64>>, Vec<f64>) = scaled
            .iter()
            .map(|(r, g, scale)| {
                let mut r = r.clone();
                r.push(-1.0 / scale);
                (r, -g)
            })
            .unzip();
        let sol = lp::solve(&cost, &mat, &rhs, &lo1, &hi1).map_err(lp_err)?;
        target = sol[d].max(0.0);
        phase1 = Some(sol[..d].to_vec());
    }

    let cn = norm(c);
    let cost: Vec<f64> = c.iter().map(|v| if cn > 0.0 { v / cn } else { 0.0 }).collect();
    let (mat, rhs): (Vec<Vec<f64>>, Vec<f64>) = scaled
        .iter()
        .map(|(r, g, scale)| {
            let b = target / scale - g;
            (r.clone(), b + 1e-10 * b.abs().max(1e-3))
        })
        .unzip();
    match lp::solve(&cost, &mat, &rhs, lo, hi) {
        Ok(s) => Ok(s),
        Err(e) => phase1.ok_or_else(|| lp_err(e)),
    }
}

enum Flow {
    Continue,
    Stop(DfoStatus),
}

/// Minimizes `problem` from `x0` (which must lie in the box).
pub fn dfo_minimize(problem: &ProblemSpec, x0: &[f64], opts: &DfoOptions) -> Result<DfoResult> {
    let domain = problem.domain();
    let d = domain.dim();
    opts.validate(d)?;
    if x0.len() != d {
        return Err(Error::Shape(format!("start has {} coordinates, problem has {d}", x0.len())));
    }
    domain.check_point(0, x0)?;
    let mut ev = Evaluator { problem, domain, budget: opts.budget, feas_tol: opts.feas_tol, n_calls: 0, best: None };
    let u0 = domain.to_unit(x0);
    let Some(p0) = ev.eval(u0)? else { unreachable!("budget >= d + 2") };
    let mut rho = opts.rho_begin;
    let mut simplex = match build_simplex(&mut ev, p0, rho)? {
        Some(s) => s,
        None => return Ok(ev.finish(DfoStatus::BudgetExhausted)),
    };
    if !simplex.refresh() {
        return Ok(ev.finish(DfoStatus::Degenerate));
    }
    let mut restarted = false;
    let mut mu = 0.0f64;
    let mut check_geometry = true;
    let m = problem.n_constraints();

    loop {
        let jopt = simplex.optimal_vertex(mu);
        if jopt != 0 {
            simplex.v.swap(0, jopt);
            if !simplex.refresh() {
                match restart(&mut ev, &mut simplex, rho, &mut restarted)? {
                    Flow::Continue => continue,
                    Flow::Stop(s) => return Ok(ev.finish(s)),
                }
            }
        }
        let (vsig, veta) = simplex.shape();
        let acceptable = vsig.iter().all(|s| *s >= SIGMA_FACTOR * rho) && veta.iter().all(|e| *e <= ETA_FACTOR * rho);
        let c = simplex.gradient(|p| p.f);
        let a: Vec<Vec<f64>> = (0..m).map(|l| simplex.gradient(|p| p.g[l])).collect();
        let base = simplex.v[0].clone();

        if check_geometry && !acceptable {
            let jdrop =
                match (0..d).filter(|&j| veta[j] > ETA_FACTOR * rho).max_by(|&p, &q| veta[p].total_cmp(&veta[q])) {
                    Some(j) => j,
                    None => (0..d)
                        .filter(|&j| vsig[j] < SIGMA_FACTOR * rho)
                        .min_by(|&p, &q| vsig[p].total_cmp(&vsig[q]))
                        .expect("unacceptable simplex has a bad vertex"),
                };
            let scale = GEOMETRY_STEP * rho * vsig[jdrop];
            let mut dx: Vec<f64> = simplex.simi[jdrop].iter().map(|v| scale * v).collect();
            let cdx = dot(&c, &dx);
            let pred = |sign: f64, dx: &[f64]| -> f64 {
                (0..m).fold(0.0f64, |acc, l| acc.max(base.g[l] + sign * dot(&a[l], dx)))
            };
            if 2.0 * cdx + mu * (pred(1.0, &dx) - pred(-1.0, &dx)) > 0.0 {
                dx.iter_mut().for_each(|v| *v = -*v);
            }
            let inside = |dx: &[f64]| base.u.iter().zip(dx).all(|(u, s)| (0.0..=1.0).contains(&(u + s)));
            if !inside(&dx) {
                let flipped: Vec<f64> = dx.iter().map(|v| -v).collect();
                if inside(&flipped) {
                    dx = flipped;
                } else {
                    let row = &simplex.simi[jdrop];
                    let k = (0..d).max_by(|&p, &q| row[p].abs().total_cmp(&row[q].abs())).unwrap_or(0);
                    let mut step = GEOMETRY_STEP * rho * row[k].signum();
                    if !(0.0..=1.0).contains(&(base.u[k] + step)) {
                        step = -step;
                    }
                    dx = vec![0.0; d];
                    dx[k] = step;
                }
            }
            let u: Vec<f64> = base.u.iter().zip(&dx).map(|(u, s)| (u + s).clamp(0.0, 1.0)).collect();
            let Some(p) = ev.eval(u)? else { return Ok(ev.finish(DfoStatus::BudgetExhausted)) };
            simplex.v[jdrop + 1] = p;
            if !simplex.refresh() {
                match restart(&mut ev, &mut simplex, rho, &mut restarted)? {
                    Flow::Continue => continue,
                    Flow::Stop(s) => return Ok(ev.finish(s)),
                }
            }
            continue;
        }

        let lo: Vec<f64> = base.u.iter().map(|u| (-rho).max(-u)).collect();
        let hi: Vec<f64> = base.u.iter().map(|u| rho.min(1.0 - u)).collect();
        let s = trust_step(&c, &a, &base.g, &lo, &hi, base.viol)?;

        let mut improved = false;
        if norm(&s) >= 0.5 * rho {
            let resnew = (0..m).fold(0.0f64, |acc, l| acc.max(base.g[l] + dot(&a[l], &s)));
            let prerec = base.viol - resnew;
            let cs = dot(&c, &s);
            let barmu = if prerec > 0.0 { cs / prerec } else { 0.0 };
            if mu < 1.5 * barmu {
                mu = 2.0 * barmu;
                if simplex.optimal_vertex(mu) != 0 {
                    continue;
                }
            }
            let mut prerem = mu * prerec - cs;
            let u: Vec<f64> = base.u.iter().zip(&s).map(|(u, s)| (u + s).clamp(0.0, 1.0)).collect();
            let Some(p) = ev.eval(u)? else { return Ok(ev.finish(DfoStatus::BudgetExhausted)) };
            check_geometry = false;
            let mut trured = (base.f + mu * base.viol) - (p.f + mu * p.viol);
            if mu == 0.0 && p.f == base.f {
                prerem = prerec;
                trured = base.viol - p.viol;
            }
            if opts.ftol_rel > 0.0
                && p.viol == 0.0
                && trured > 0.0
                && trured >= 0.1 * prerem
                && trured <= opts.ftol_rel * base.f.abs()
            {
                return Ok(ev.finish(DfoStatus::Converged));
            }

            let sigma: Vec<f64> = (0..d).map(|j| dot(&simplex.simi[j], &s)).collect();
            let mut ratio = if trured <= 0.0 { 1.0 } else { 0.0 };
            let mut jdrop = None;
            for (j, sj) in sigma.iter().enumerate() {
                if sj.abs() > ratio {
                    jdrop = Some(j);
                    ratio = sj.abs();
                }
            }
            let mut edgmax = EDGE_FACTOR * rho;
            let mut far = None;
            for j in 0..d {
                let sigbar = sigma[j].abs() * vsig[j];
                if sigbar >= SIGMA_FACTOR * rho || sigbar >= vsig[j] {
                    let t = if trured > 0.0 {
                        norm(&p.u.iter().zip(&simplex.v[j + 1].u).map(|(a, b)| a - b).collect::<Vec<_>>())
                    } else {
                        veta[j]
                    };
                    if t > edgmax {
                        far = Some(j);
                        edgmax = t;
                    }
                }
            }
            if far.is_some() {
                jdrop = far;
            }
            if let Some(j) = jdrop {
                let old = std::mem::replace(&mut simplex.v[j + 1], p);
                if !simplex.refresh() {
                    simplex.v[j + 1] = old;
                    simplex.refresh();
                } else if trured > 0.0 && trured >= 0.1 * prerem {
                    improved = true;
                }
            }
        }
        if improved {
            continue;
        }

        if !acceptable {
            check_geometry = true;
            continue;
        }
        if rho <= opts.rho_end {
            return Ok(ev.finish(DfoStatus::Converged));
        }
        rho *= 0.5;
        if rho <= 1.5 * opts.rho_end {
            rho = opts.rho_end;
        }
        if mu > 0.0 {
            mu = reduce_penalty(&simplex, mu, m);
        }
    }
}

/// Lowers the penalty parameter after a trust-radius reduction, to the
/// smallest value that still separates the vertices' objective spread from
/// their constraint spread.
fn reduce_penalty(simplex: &Simplex, mu: f64, m: usize) -> f64 {
    let mut denom = 0.0f64;
    for l in 0..m {
        // Constraints as `-g >= 0`.
        let cmin = simplex.v.iter().map(|p| -p.g[l]).fold(f64::INFINITY, f64::min);
        let cmax = simplex.v.iter().map(|p| -p.g[l]).fold(f64::NEG_INFINITY, f64::max);
        if cmin < 0.5 * cmax {
            let t = cmax.max(0.0) - cmin;
            denom = if denom <= 0.0 { t } else { denom.min(t) };
        }
    }
    if denom == 0.0 {
        return 0.0;
    }
    let fmin = simplex.v.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
    let fmax = simplex.v.iter().map(|p| p.f).fold(f64::NEG_INFINITY, f64::max);
    if fmax - fmin < mu * denom {
        (fmax - fmin) / denom
    } else {
        mu
    }
}

/// Axis-aligned simplex around `p0`, stepping inward at the box faces.
fn build_simplex(ev: &mut Evaluator<'_>, p0: Point, rho: f64) -> Result<Option<Simplex>> {
    let d = p0.u.len();
    let mut v = vec![p0];
    for i in 0..d {
        let mut u = v[0].u.clone();
        u[i] = if u[i] + rho <= 1.0 { u[i] + rho } else { u[i] - rho };
        match ev.eval(u)? {
            Some(p) => v.push(p),
            None => return Ok(None),
        }
    }
    Ok(Some(Simplex { v, simi: vec![vec![0.0; d]; d] }))
}

fn restart(ev: &mut Evaluator<'_>, simplex: &mut Simplex, rho: f64, restarted: &mut bool) -> Result<Flow> {
    if *restarted {
        return Ok(Flow::Stop(DfoStatus::Degenerate));
    }
    *restarted = true;
    let p0 = simplex.v[0].clone();
    match build_simplex(ev, p0, rho)? {
        Some(s) => {
            *simplex = s;
            if simplex.refresh() {
                Ok(Flow::Continue)
            } else {
                Ok(Flow::Stop(DfoStatus::Degenerate))
            }
        }
        None => Ok(Flow::Stop(DfoStatus::BudgetExhausted)),
    }
}
