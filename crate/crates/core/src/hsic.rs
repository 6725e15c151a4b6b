//! Kernel dependence measures and the HSIC-IT sensitivity index.
//!
//! All estimators are biased V-statistics. For a binary output `z` with the
//! linear kernel `l(z, z') = z z'`, the sample HSIC satisfies
//!
//! ```text
//!   tr(K H L H) / n^2 = p^2 * MMD^2(P_{X | Z = 1}, P_X),   p = mean(z)
//! ```
//!
//! exactly, with both sides computed on the same sample. [`replicate_indices`]
//! uses the right-hand side so that the conditional sample (often a few
//! dozen points) and the marginal sample can be capped at `M` points
//! independently, while `p` and the sublevel set itself come from the full
//! design.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::{center, gram_1d, median_bandwidth_seeded, KernelSpec};
use crate::problem::{evaluate, EvaluatedDesign, ProblemSpec};
use crate::sampling::{uniform_sample, Seed};
use crate::thresholding::{auto_relax, sublevel_indicator, ThresholdSpec};
use crate::{Error, Result};

/// Default quantile levels of a sensitivity sweep.
pub const DEFAULT_ALPHAS: [f64; 4] = [0.10, 0.40, 0.70, 1.00];
pub const DEFAULT_MIN_FEASIBLE: usize = 100;
pub const DEFAULT_GRAM_SUBSAMPLE: usize = 2000;

/// `tr(K H L H) / n^2`.
pub fn hsic_biased(k: &Array2<f64>, l: &Array2<f64>) -> Result<f64> {
    let n = k.nrows();
    if k.ncols() != n || l.nrows() != n || l.ncols() != n {
        return Err(Error::Shape(format!(
            "HSIC needs two square matrices of equal size, got {:?} and {:?}",
            k.dim(),
            l.dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("HSIC of an empty sample".into()));
    }
    // tr(HKH L) = sum_ij (HKH)_ij L_ji
    let kc = center(k)?;
    // Row sums in parallel, added in row order so the result does not depend
    // on the thread count.
    let rows: Vec<f64> =
        (0..n).into_par_iter().map(|i| kc.row(i).iter().enumerate().map(|(j, v)| v * l[[j, i]]).sum::<f64>()).collect();
    let total: f64 = rows.iter().sum();
    Ok(total / (n * n) as f64)
}

/// Biased squared MMD between two samples (rows are points).
pub fn mmd2_biased(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>, kernel: &KernelSpec) -> Result<f64> {
    if p.nrows() == 0 || q.nrows() == 0 {
        return Err(Error::InvalidArgument("MMD needs two nonempty samples".into()));
    }
    if p.ncols() != q.ncols() {
        return Err(Error::Shape(format!("samples have dimensions {} and {}", p.ncols(), q.ncols())));
    }
    kernel.validate()?;
    let mean_k = |a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>| -> f64 {
        let rows_b: Vec<Vec<f64>> = b.rows().into_iter().map(|r| r.to_vec()).collect();
        let s: f64 = a
            .rows()
            .into_iter()
            .map(|ra| {
                let ra = ra.to_vec();
                rows_b.iter().map(|rb| kernel.eval(&ra, rb)).sum::<f64>()
            })
            .sum();
        s / (a.nrows() * b.nrows()) as f64
    };
    Ok(mean_k(p, p) + mean_k(q, q) - 2.0 * mean_k(p, q))
}

/// Raw HSIC-IT indices of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HsicIt {
    pub raw: Vec<f64>,
    /// True when `z` is constant; `raw` is then all zeros.
    pub degenerate: bool,
}

/// `HSIC(X_i, z)` for every column, with the given input kernels and the
/// linear kernel on `z`.
pub fn hsic_it(x: ArrayView2<'_, f64>, z: &[bool], kernels: &[KernelSpec]) -> Result<HsicIt> {
    let (n, d) = x.dim();
    if z.len() != n {
        return Err(Error::Shape(format!("z has {} entries, X has {n} rows", z.len())));
    }
    if kernels.len() != d {
        return Err(Error::Shape(format!("{} kernels for {d} inputs", kernels.len())));
    }
    if is_constant(z) {
        log::warn!("indicator output is constant; HSIC-IT indices set to zero");
        return Ok(HsicIt { raw: vec![0.0; d], degenerate: true });
    }
    let zf: Vec<f64> = z.iter().map(|b| f64::from(u8::from(*b))).collect();
    let l = gram_1d(&KernelSpec::Linear, &zf, &zf)?;
    let raw = (0..d)
        .map(|i| {
            let col = x.column(i).to_vec();
            let k = gram_1d(&kernels[i], &col, &col)?;
            hsic_biased(&k, &l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HsicIt { raw, degenerate: false })
}

/// [`hsic_it`] with Gaussian kernels whose bandwidths come from the median
/// heuristic on each column.
pub fn hsic_it_median(x: ArrayView2<'_, f64>, z: &[bool]) -> Result<HsicIt> {
    let kernels = (0..x.ncols())
        .map(|i| {
            let col = x.column(i).to_vec();
            KernelSpec::rbf(median_bandwidth_seeded(&col, Seed::new(0, i as u32))?)
        })
        .collect::<Result<Vec<_>>>()?;
    hsic_it(x, z, &kernels)
}

fn is_constant(z: &[bool]) -> bool {
    z.iter().all(|b| *b) || z.iter().all(|b| !*b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Divide by the sum over inputs.
    Sum,
    /// Divide by `sqrt(HSIC(X_i, X_i) HSIC(Z, Z))`.
    Cross,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::Sum => "sum",
            Normalization::Cross => "cross",
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Normalization::Sum),
            "cross" => Ok(Normalization::Cross),
            other => Err(Error::InvalidArgument(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Self-dependence terms needed by [`Normalization::Cross`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTerms {
    pub hsic_xx: Vec<f64>,
    pub hsic_zz: f64,
}

pub fn normalize(raw: &[f64], mode: Normalization, aux: Option<&CrossTerms>) -> Result<Vec<f64>> {
    if let Some(bad) = raw.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("raw indices must be nonnegative, got {bad}")));
    }
    match mode {
        Normalization::Sum => {
            let total: f64 = raw.iter().sum();
            if total <= 0.0 {
                return Err(Error::DegenerateSet("all raw indices are zero".into()));
            }
            Ok(raw.iter().map(|v| v / total).collect())
        }
        Normalization::Cross => {
            let aux = aux.ok_or_else(|| {
                Error::InvalidArgument("cross normalization needs HSIC(X_i, X_i) and HSIC(Z, Z)".into())
            })?;
            if aux.hsic_xx.len() != raw.len() {
                return Err(Error::Shape(format!("{} self terms for {} indices", aux.hsic_xx.len(), raw.len())));
            }
            raw.iter()
                .zip(&aux.hsic_xx)
                .map(|(r, xx)| {
                    let denom = (xx * aux.hsic_zz).sqrt();
                    if denom > 0.0 {
                        Ok(r / denom)
                    } else {
                        Err(Error::DegenerateVariance("zero self-dependence term".into()))
                    }
                })
                .collect()
        }
    }
}

/// Per-column kernel data of the marginal (capped) sample.
struct ColumnCache {
    kernel: KernelSpec,
    marginal: Vec<f64>,
    /// Mean of `k` over all ordered pairs of the marginal sample.
    mean_marginal: f64,
}

fn mean_gram_sym(kernel: &KernelSpec, a: &[f64]) -> f64 {
    let n = a.len();
    let mut off = 0.0;
    for i in 0..n {
        let ai = a[i];
        off += a[i + 1..].iter().map(|&b| kernel.eval1(ai, b)).sum::<f64>();
    }
    let diag: f64 = a.iter().map(|&v| kernel.eval1(v, v)).sum();
    (2.0 * off + diag) / (n * n) as f64
}

fn mean_gram(kernel: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().map(|&x| b.iter().map(|&y| kernel.eval1(x, y)).sum::<f64>()).sum();
    s / (a.len() * b.len()) as f64
}

/// HSIC-IT estimator for large designs, via `p^2 MMD^2(P_{X|Z=1}, P_X)`.
///
/// The marginal sample is a uniform subsample of at most `m` rows; the
/// conditional sample is all rows with `z = 1`, subsampled to `m` when larger.
/// When the design has at most `m` rows and at most `m` members, the result
/// equals [`hsic_it`] on the full design up to round-off.
pub struct SplitEstimator {
    columns: Vec<ColumnCache>,
    cap: usize,
    n: usize,
}

impl SplitEstimator {
    pub fn new(x: ArrayView2<'_, f64>, cap: usize, seed: Seed) -> Result<Self> {
        let (n, d) = x.dim();
        if cap < 2 {
            return Err(Error::InvalidArgument("Gram subsample must have at least 2 points".into()));
        }
        let rows: Vec<usize> = if n > cap {
            let mut idx = sample(&mut seed.rng(), n, cap).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..n).collect()
        };
        let columns = (0..d)
            .into_par_iter()
            .map(|i| {
                let marginal: Vec<f64> = rows.iter().map(|&r| x[[r, i]]).collect();
                let sigma = median_bandwidth_seeded(&marginal, seed.child(1).with_stream(i as u32))?;
                let kernel = KernelSpec::rbf(sigma)?;
                let mean_marginal = mean_gram_sym(&kernel, &marginal);
                Ok(ColumnCache { kernel, marginal, mean_marginal })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns, cap, n })
    }

    pub fn bandwidths(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match c.kernel {
                KernelSpec::GaussianRbf { sigma } => sigma,
                _ => unreachable!("split estimator uses Gaussian kernels"),
            })
            .collect()
    }

    pub fn raw(&self, x: ArrayView2<'_, f64>, z: &[bool], seed: Seed) -> Result<HsicIt> {
        if z.len() != self.n || x.nrows() != self.n {
            return Err(Error::Shape("indicator does not match the design".into()));
        }
        let d = self.columns.len();
        if is_constant(z) {
            return Ok(HsicIt { raw: vec![0.0; d], degenerate: true });
        }
        let mut members: Vec<usize> = z.iter().enumerate().filter_map(|(i, b)| b.then_some(i)).collect();
        let p = members.len() as f64 / self.n as f64;
        if members.len() > self.cap {
            let mut pick = sample(&mut seed.rng(), members.len(), self.cap).into_vec();
            pick.sort_unstable();
            members = pick.into_iter().map(|k| members[k]).collect();
        }
        let raw = self
            .columns
            .par_iter()
            .enumerate()
            .map(|(i, col)| {
                let cond: Vec<f64> = members.iter().map(|&r| x[[r, i]]).collect();
                let mmd2 = mean_gram_sym(&col.kernel, &cond) + col.mean_marginal
                    - 2.0 * mean_gram(&col.kernel, &cond, &col.marginal);
                // Cancellation can leave a tiny negative value.
                p * p * mmd2.max(0.0)
            })
            .collect();
        Ok(HsicIt { raw, degenerate: false })
    }

    /// `HSIC(X_i, X_i)` on the marginal sample and `HSIC(Z, Z) = p^2 (1-p)^2`.
    pub fn cross_terms(&self, z: &[bool]) -> Result<CrossTerms> {
        let p = z.iter().filter(|b| **b).count() as f64 / z.len() as f64;
        let hsic_xx = self
            .columns
            .iter()
            .map(|c| {
                let k = gram_1d(&c.kernel, &c.marginal, &c.marginal)?;
                hsic_biased(&k, &k)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CrossTerms { hsic_xx, hsic_zz: (p * (1.0 - p)).powi(2) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    /// A fresh uniform design per repetition.
    Fresh,
    /// Bootstrap resamples of a supplied design.
    Bootstrap,
}

/// Where the designs of [`replicate_indices`] come from.
#[derive(Debug, Clone, Copy)]
pub enum DesignSource<'a> {
    Problem(&'a ProblemSpec),
    Given(&'a EvaluatedDesign),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    pub alphas: Vec<f64>,
    /// Design size per repetition.
    pub n: usize,
    /// Cap on the conditional and marginal Gram samples.
    pub gram_subsample: usize,
    pub reps: usize,
    pub min_feasible: usize,
    pub normalization: Normalization,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            alphas: DEFAULT_ALPHAS.to_vec(),
            n: 50_000,
            gram_subsample: DEFAULT_GRAM_SUBSAMPLE,
            reps: 20,
            min_feasible: DEFAULT_MIN_FEASIBLE,
            normalization: Normalization::Sum,
        }
    }
}

/// What one repetition saw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub seed: Seed,
    pub t: Vec<f64>,
    pub n_feasible: usize,
    /// Indexed like the table's `alphas`.
    pub q_values: Vec<f64>,
    pub n_in_d: Vec<usize>,
    pub normalized: Vec<Vec<f64>>,
    /// Quantile levels whose indicator was constant (indices set to zero).
    pub degenerate_alphas: Vec<f64>,
    pub bandwidths: Vec<f64>,
}

/// Normalized HSIC-IT indices, mean and standard deviation over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexTable {
    pub alphas: Vec<f64>,
    pub d: usize,
    /// `mean[a][i]` for quantile level `alphas[a]` and input `i`.
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation over repetitions.
    pub std: Vec<Vec<f64>>,
    pub reps: usize,
    pub n: usize,
    pub gram_subsample: usize,
    pub normalization: Normalization,
    pub mode: DesignMode,
    pub replicates: Vec<ReplicateRecord>,
}

impl IndexTable {
    pub fn alpha_position(&self, alpha: f64) -> Option<usize> {
        self.alphas.iter().position(|a| (a - alpha).abs() < 1e-9)
    }

    pub fn mean_at(&self, alpha: f64) -> Option<&[f64]> {
        self.alpha_position(alpha).map(|k| self.mean[k].as_slice())
    }

    /// `input, alpha, mean, std, reps, N, M, normalization`, one row per
    /// `(input, alpha)`, inputs outermost.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["input", "alpha", "mean", "std", "reps", "N", "M", "normalization"])?;
        for i in 0..self.d {
            for (k, alpha) in self.alphas.iter().enumerate() {
                wtr.write_record([
                    format!("x{}", i + 1),
                    alpha.to_string(),
                    self.mean[k][i].to_string(),
                    self.std[k][i].to_string(),
                    self.reps.to_string(),
                    self.n.to_string(),
                    self.gram_subsample.to_string(),
                    self.normalization.as_str().to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn validate_config(cfg: &SensitivityConfig) -> Result<()> {
    if cfg.reps < 2 {
        return Err(Error::InvalidArgument("need at least 2 repetitions".into()));
    }
    if cfg.alphas.is_empty() {
        return Err(Error::InvalidArgument("need at least one quantile level".into()));
    }
    if let Some(a) = cfg.alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidArgument(format!("quantile level {a} outside (0, 1]")));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidArgument("design size must be positive".into()));
    }
    if cfg.gram_subsample > cfg.n {
        return Err(Error::InvalidArgument(format!(
            "Gram subsample {} exceeds design size {}",
            cfg.gram_subsample, cfg.n
        )));
    }
    if cfg.min_feasible > cfg.n {
        return Err(Error::InvalidArgument(format!(
            "cannot require {} feasible points from {} samples",
            cfg.min_feasible, cfg.n
        )));
    }
    Ok(())
}

/// The design drawn by repetition `rep`; also used to pick greedy values.
pub fn replicate_design(source: DesignSource<'_>, n: usize, seed: Seed, rep: usize) -> Result<EvaluatedDesign> {
    let rep_seed = seed.child(rep as u32);
    match source {
        DesignSource::Problem(problem) => {
            let x = uniform_sample(problem.domain(), n, rep_seed.child(0))?;
            evaluate(problem, x.view())
        }
        DesignSource::Given(design) => {
            use rand::Rng;
            let mut rng = rep_seed.child(0).rng();
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..design.n())).collect();
            Ok(design.select_rows(&rows))
        }
    }
}

fn one_replicate(source: DesignSource<'_>, cfg: &SensitivityConfig, seed: Seed, rep: usize) -> Result<ReplicateRecord> {
    let design = replicate_design(source, cfg.n, seed, rep)?;
    let rep_seed = seed.child(rep as u32);
    let t = auto_relax(&design, cfg.min_feasible)?;
    let estimator = SplitEstimator::new(design.x(), cfg.gram_subsample, rep_seed.child(1))?;
    let mut record = ReplicateRecord {
        seed: rep_seed,
        t: t.clone(),
        n_feasible: 0,
        q_values: Vec::with_capacity(cfg.alphas.len()),
        n_in_d: Vec::with_capacity(cfg.alphas.len()),
        normalized: Vec::with_capacity(cfg.alphas.len()),
        degenerate_alphas: Vec::new(),
        bandwidths: estimator.bandwidths(),
    };
    for (k, &alpha) in cfg.alphas.iter().enumerate() {
        let spec = ThresholdSpec::new(alpha, t.clone())?;
        let sub = sublevel_indicator(&design, &spec)?;
        record.n_feasible = sub.n_feasible;
        record.q_values.push(sub.q_value);
        record.n_in_d.push(sub.n_in_d);
        let est = estimator.raw(design.x(), &sub.z, rep_seed.child(2).with_stream(k as u32))?;
        let normalized = if est.degenerate || est.raw.iter().all(|v| *v == 0.0) {
            log::debug!("replicate {rep}: indicator at alpha = {alpha} is constant; indices set to zero");
            record.degenerate_alphas.push(alpha);
            vec![0.0; design.dim()]
        } else {
            let aux = match cfg.normalization {
                Normalization::Cross => Some(estimator.cross_terms(&sub.z)?),
                Normalization::Sum => None,
            };
            normalize(&est.raw, cfg.normalization, aux.as_ref())?
        };
        record.normalized.push(normalized);
    }
    if record.n_feasible == 0 {
        return Err(Error::DegenerateSet("no feasible point even after relaxation".into()));
    }
    Ok(record)
}

/// Repeats the HSIC-IT analysis `reps` times and aggregates the normalized
/// indices per `(alpha, input)`.
///
/// Each repetition draws its own design (a fresh uniform sample, or a
/// bootstrap resample of a given design), relaxes the constraints until at
/// least `min_feasible` points are feasible, thresholds at every `alpha` and
/// estimates the indices. Repetitions run in parallel on derived seeds and
/// are merged in repetition order.
pub fn replicate_indices(source: DesignSource<'_>, cfg: &SensitivityConfig, seed: Seed) -> Result<IndexTable> {
    validate_config(cfg)?;
    let d = match source {
        DesignSource::Problem(p) => p.dim(),
        DesignSource::Given(design) => design.dim(),
    };
    let replicates =
        (0..cfg.reps).into_par_iter().map(|rep| one_replicate(source, cfg, seed, rep)).collect::<Result<Vec<_>>>()?;

    let na = cfg.alphas.len();
    let reps = cfg.reps as f64;
    let mut mean = vec![vec![0.0; d]; na];
    let mut std = vec![vec![0.0; d]; na];
    for k in 0..na {
        for i in 0..d {
            let vals: Vec<f64> = replicates.iter().map(|r| r.normalized[k][i]).collect();
            let mu = vals.iter().sum::<f64>() / reps;
            let var = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (reps - 1.0);
            mean[k][i] = mu;
            std[k][i] = var.sqrt();
        }
    }
    Ok(IndexTable {
        alphas: cfg.alphas.clone(),
        d,
        mean,
        std,
        reps: cfg.reps,
        n: cfg.n,
        gram_subsample: cfg.gram_subsample,
        normalization: cfg.normalization,
        mode: match source {
            DesignSource::Problem(_) => DesignMode::Fresh,
            DesignSource::Given(_) => DesignMode::Bootstrap,
        },
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn constant_output_kernel_gives_zero() {
        let k = Array2::from_shape_fn((4, 4), |(i, j)| (-((i as f64 - j as f64).powi(2))).exp());
        let l = Array2::from_elem((4, 4), 3.0);
        assert!(hsic_biased(&k, &l).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_grams() {
        let i2 = Array2::<f64>::eye(2);
        assert_relative_eq!(hsic_biased(&i2, &i2).unwrap(), 0.25, epsilon = 1e-15);
        assert!(hsic_biased(&i2, &Array2::eye(3)).is_err());
    }

    #[test]
    fn mmd_examples() {
        let k = KernelSpec::rbf(1.0).unwrap();
        let p = array![[0.0], [1.5], [-2.0]];
        assert!(mmd2_biased(p.view(), p.view(), &k).unwrap().abs() < 1e-12);
        let v = mmd2_biased(array![[0.0]].view(), array![[1.0]].view(), &k).unwrap();
        assert_relative_eq!(v, 2.0 - 2.0 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(v, 0.786939, epsilon = 1e-6);
        let empty = Array2::<f64>::zeros((0, 1));
        assert!(mmd2_biased(empty.view(), p.view(), &k).is_err());
    }

    #[test]
    fn constant_indicator_is_degenerate() {
        let x = array![[0.0, 1.0], [0.5, 2.0], [0.9, 0.1]];
        let r = hsic_it_median(x.view(), &[true, true, true]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.raw, vec![0.0, 0.0]);
    }

    #[test]
    fn normalization_modes() {
        assert_eq!(normalize(&[3.0, 1.0], Normalization::Sum, None).unwrap(), vec![0.75, 0.25]);
        let u = normalize(&[0.2; 5], Normalization::Sum, None).unwrap();
        assert!(u.iter().all(|v| (*v - 0.2).abs() < 1e-15));
        assert!(normalize(&[0.0, 0.0], Normalization::Sum, None).is_err());
        assert!(normalize(&[-0.1, 0.2], Normalization::Sum, None).is_err());
        let aux = CrossTerms { hsic_xx: vec![4.0, 1.0], hsic_zz: 1.0 };
        assert_eq!(normalize(&[1.0, 1.0], Normalization::Cross, Some(&aux)).unwrap(), vec![0.5, 1.0]);
        assert!(normalize(&[1.0, 1.0], Normalization::Cross, None).is_err());
    }

    #[test]
    fn split_estimator_matches_gram_route_on_small_designs() {
        let x = crate::sampling::uniform_sample(
            &crate::problem::BoxDomain::cube(3, -1.0, 1.0).unwrap(),
            150,
            Seed::new(9, 0),
        )
        .unwrap();
        let z: Vec<bool> = x.rows().into_iter().map(|r| r[0] + 0.3 * r[1] < 0.2).collect();
        let est = SplitEstimator::new(x.view(), 200, Seed::new(1, 0)).unwrap();
        let split = est.raw(x.view(), &z, Seed::new(2, 0)).unwrap();
        let kernels: Vec<KernelSpec> = est.bandwidths().into_iter().map(|s| KernelSpec::rbf(s).unwrap()).collect();
        let direct = hsic_it(x.view(), &z, &kernels).unwrap();
        for (a, b) in split.raw.iter().zip(&direct.raw) {
            assert_relative_eq!(a, b, epsilon = 1e-13, max_relative = 1e-10);
        }
        assert!(split.raw[0] > split.raw[1] && split.raw[1] > split.raw[2]);
    }

    #[test]
    fn config_validation() {
        let p = crate::benchmarks::linear2d();
        let mut cfg = SensitivityConfig { n: 500, gram_subsample: 200, reps: 1, ..Default::default() };
        assert!(replicate_indices(DesignSource::Problem(&p), &cfg, Seed::new(0, 0)).is_err());
        cfg.reps = 2;
        cfg.gram_subsample = 600;
        assert!(replicate_indices(DesignSource::Problem(&p), &cfg, Seed::new(0, 0)).is_err());
    }
}
