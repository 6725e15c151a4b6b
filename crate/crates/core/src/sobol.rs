//! First-order and total Sobol indices by pick-freeze, on raw or
//! zero-thresholded outputs, and a binning given-data first-order estimator
//! for filtered samples.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::Serialize;

use crate::problem::{evaluate, BoxDomain, ProblemSpec};
use crate::sampling::{uniform_sample, Seed};
use crate::thresholding::{conditional_subset, sublevel_indicator, ThresholdSpec};
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    PickFreeze,
    GivenData,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::PickFreeze => "pick-freeze",
            Estimator::GivenData => "given-data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolTable {
    pub first: Vec<f64>,
    /// Not available from the given-data estimator.
    pub total: Option<Vec<f64>>,
    pub n_samples: usize,
    pub estimator: Estimator,
}

impl SobolTable {
    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// `input, first, total, estimator, N`; `total` is empty when unavailable.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        write_tables_csv(&[(None, self)], w)
    }
}

/// Several tables in one CSV; rows with an `alpha` get an extra column.
pub fn write_tables_csv<W: std::io::Write>(tables: &[(Option<f64>, &SobolTable)], w: W) -> Result<()> {
    let with_alpha = tables.iter().any(|(a, _)| a.is_some());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["input", "first", "total", "estimator", "N"];
    if with_alpha {
        header.push("alpha");
    }
    wtr.write_record(&header)?;
    for (alpha, table) in tables {
        for i in 0..table.dim() {
            let mut rec = vec![
                format!("x{}", i + 1),
                table.first[i].to_string(),
                table.total.as_ref().map(|t| t[i].to_string()).unwrap_or_default(),
                table.estimator.as_str().to_string(),
                table.n_samples.to_string(),
            ];
            if with_alpha {
                rec.push(alpha.map(|a| a.to_string()).unwrap_or_default());
            }
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn eval_rows<F>(f: &F, x: ArrayView2<'_, f64>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let ys: Vec<f64> = (0..x.nrows()).into_par_iter().map(|i| f(&x.row(i).to_vec())).collect();
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return Err(Error::NonFinite { row: i + 1, what: "output".into() });
    }
    Ok(ys)
}

/// Pick-freeze indices of `f` under the uniform law on `domain`.
///
/// Uses `N (d + 2)` evaluations: two independent `N`-point designs `A`, `B`
/// and, per input `i`, `AB_i` (`A` with column `i` taken from `B`). Outputs are
/// centered by the pooled mean of `f(A)` and `f(B)`.
pub fn pick_freeze_indices<F>(f: &F, domain: &BoxDomain, n: usize, seed: Seed) -> Result<SobolTable>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if n < 100 {
        return Err(Error::InvalidArgument(format!("pick-freeze needs N >= 100, got {n}")));
    }
    let d = domain.dim();
    let a = uniform_sample(domain, n, seed.child(0))?;
    let b = uniform_sample(domain, n, seed.child(1))?;
    let fa = eval_rows(f, a.view())?;
    let fb = eval_rows(f, b.view())?;

    let nf = n as f64;
    let mean = (fa.iter().sum::<f64>() + fb.iter().sum::<f64>()) / (2.0 * nf);
    let var = (fa.iter().chain(&fb).map(|y| (y - mean).powi(2)).sum::<f64>()) / (2.0 * nf);
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance("output variance is zero".into()));
    }
    let mut first = Vec::with_capacity(d);
    let mut total = Vec::with_capacity(d);
    for i in 0..d {
        let mut ab = a.clone();
        ab.column_mut(i).assign(&b.column(i));
        let fab = eval_rows(f, ab.view())?;
        let mut s1 = 0.0;
        let mut st = 0.0;
        for k in 0..n {
            s1 += (fb[k] - mean) * ((fab[k] - mean) - (fa[k] - mean));
            st += (fa[k] - fab[k]).powi(2);
        }
        first.push(s1 / nf / var);
        total.push(st / (2.0 * nf) / var);
    }
    Ok(SobolTable { first, total: Some(total), n_samples: n, estimator: Estimator::PickFreeze })
}

/// Pick-freeze indices of `Z = f` on `D` and `spec.zero_fill` elsewhere.
///
/// `q_alpha` is calibrated once on an `N`-point uniform design and then held
/// fixed, so `D` does not move during the pick-freeze sampling.
pub fn pick_freeze_thresholded(
    problem: &ProblemSpec,
    spec: &ThresholdSpec,
    n: usize,
    seed: Seed,
) -> Result<SobolTable> {
    spec.validate()?;
    if spec.t.len() != problem.n_constraints() {
        return Err(Error::Shape(format!("{} relaxations for {} constraints", spec.t.len(), problem.n_constraints())));
    }
    let calib_x = uniform_sample(problem.domain(), n, seed.child(100))?;
    let calib = evaluate(problem, calib_x.view())?;
    let sub = sublevel_indicator(&calib, spec)?;
    if sub.n_in_d == 0 {
        return Err(Error::DegenerateSet("sublevel set is empty".into()));
    }
    let q = sub.q_value;
    let fill = spec.zero_fill;
    let t = spec.t.clone();
    let z = move |x: &[f64]| -> f64 {
        let fx = problem.objective(x);
        let inside = fx <= q && problem.constraint_fns().iter().zip(&t).all(|(g, tl)| g(x) <= *tl);
        if inside {
            fx
        } else {
            fill
        }
    };
    pick_freeze_indices(&z, problem.domain(), n, seed)
}

/// Binning first-order estimator: per column, `n_bins` equal-count bins,
/// returning `Var(bin means of y) / Var(y)` (bins weighted by size).
pub fn given_data_first_order(x: ArrayView2<'_, f64>, y: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::Shape(format!("{} outputs for {n} rows", y.len())));
    }
    if n_bins == 0 || n < 10 * n_bins {
        return Err(Error::InvalidArgument(format!(
            "given-data estimator needs at least {} samples, got {n}",
            10 * n_bins.max(1)
        )));
    }
    let nf = n as f64;
    let mean = y.iter().sum::<f64>() / nf;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance("output variance is zero".into()));
    }
    Ok((0..d)
        .map(|i| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&p, &q| x[[p, i]].total_cmp(&x[[q, i]]).then(p.cmp(&q)));
            let mut between = 0.0;
            for b in 0..n_bins {
                let lo = b * n / n_bins;
                let hi = (b + 1) * n / n_bins;
                let cnt = (hi - lo) as f64;
                let bin_mean = order[lo..hi].iter().map(|&k| y[k]).sum::<f64>() / cnt;
                between += cnt * (bin_mean - mean).powi(2);
            }
            between / nf / var
        })
        .collect())
}

/// Given-data first-order indices of `f` restricted to `D`, from an
/// `N`-point uniform design.
pub fn conditional_first_order(
    problem: &ProblemSpec,
    spec: &ThresholdSpec,
    n: usize,
    n_bins: usize,
    seed: Seed,
) -> Result<SobolTable> {
    let x = uniform_sample(problem.domain(), n, seed)?;
    let design = evaluate(problem, x.view())?;
    let (xd, fd) = conditional_subset(&design, spec)?;
    let first = given_data_first_order(xd.view(), &fd, n_bins)?;
    Ok(SobolTable { first, total: None, n_samples: xd.nrows(), estimator: Estimator::GivenData })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{dixon_price, linear2d};

    #[test]
    fn linear_indices() {
        let p = linear2d();
        let t = pick_freeze_indices(p.objective_fn().as_ref(), p.domain(), 10_000, Seed::new(1, 0)).unwrap();
        assert!((t.first[0] - 0.2).abs() < 0.03 && (t.first[1] - 0.8).abs() < 0.03);
        let total = t.total.unwrap();
        for i in 0..2 {
            assert!((total[i] - t.first[i]).abs() < 0.03);
        }
        assert!((t.first.iter().sum::<f64>() - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_variance_is_rejected() {
        let dom = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let err = pick_freeze_indices(&|_: &[f64]| 3.0, &dom, 200, Seed::new(0, 0)).unwrap_err();
        assert!(err.is_degenerate());
        assert!(pick_freeze_indices(&|x: &[f64]| x[0], &dom, 50, Seed::new(0, 0)).is_err());
    }

    #[test]
    fn full_alpha_matches_raw_indices() {
        let p = dixon_price();
        let seed = Seed::new(4, 0);
        let raw = pick_freeze_indices(p.objective_fn().as_ref(), p.domain(), 10_000, seed).unwrap();
        let thr = pick_freeze_thresholded(&p, &ThresholdSpec::new(1.0, vec![]).unwrap(), 10_000, seed).unwrap();
        for i in 0..2 {
            assert!((raw.first[i] - thr.first[i]).abs() < 0.02);
        }
    }

    #[test]
    fn given_data_cases() {
        let dom = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        let x = uniform_sample(&dom, 10_000, Seed::new(2, 0)).unwrap();
        let y: Vec<f64> = x.column(0).to_vec();
        let s = given_data_first_order(x.view(), &y, 20).unwrap();
        assert!(s[0] >= 0.95 && s[1] <= 0.05);
        assert!(given_data_first_order(x.view(), &y[..100], 20).is_err());
        assert!(given_data_first_order(x.view(), &vec![1.0; 10_000], 20).unwrap_err().is_degenerate());
    }

    #[test]
    fn csv_layout() {
        let t = SobolTable { first: vec![0.2, 0.8], total: None, n_samples: 10, estimator: Estimator::GivenData };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "input,first,total,estimator,N");
        assert_eq!(s.lines().nth(1).unwrap(), "x1,0.2,,given-data,10");
    }
}
