//! Kernels, Gram matrices, double centering and the median-distance
//! bandwidth heuristic.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampling::Seed;
use crate::{Error, Result};

/// Largest sample used by the median heuristic.
pub const MEDIAN_SUBSAMPLE: usize = 2000;

const MEDIAN_SEED: Seed = Seed::new(0x6d65_6469_616e, 0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    GaussianRbf { sigma: f64 },
    /// `<x, y>`
    Linear,
    /// `(1 + <x, y>)^p`
    Polynomial { degree: u32 },
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        let k = KernelSpec::GaussianRbf { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::GaussianRbf { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidArgument(format!("RBF bandwidth must be positive, got {sigma}")))
            }
            KernelSpec::Polynomial { degree: 0 } => {
                Err(Error::InvalidArgument("polynomial degree must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::GaussianRbf { sigma } => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Linear => a.iter().zip(b).map(|(p, q)| p * q).sum(),
            KernelSpec::Polynomial { degree } => {
                let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                (1.0 + dot).powi(degree as i32)
            }
        }
    }

    /// Scalar version of [`KernelSpec::eval`].
    #[inline]
    pub fn eval1(&self, a: f64, b: f64) -> f64 {
        match *self {
            KernelSpec::GaussianRbf { sigma } => (-(a - b) * (a - b) / (2.0 * sigma * sigma)).exp(),
            KernelSpec::Linear => a * b,
            KernelSpec::Polynomial { degree } => (1.0 + a * b).powi(degree as i32),
        }
    }
}

/// `K[i, j] = k(a_i, b_j)` over the rows of `a` and `b`.
pub fn gram(kernel: &KernelSpec, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    kernel.validate()?;
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!("samples have dimensions {} and {}", a.ncols(), b.ncols())));
    }
    let rows_b: Vec<Vec<f64>> = b.rows().into_iter().map(|r| r.to_vec()).collect();
    let data: Vec<f64> = (0..a.nrows())
        .into_par_iter()
        .flat_map_iter(|i| {
            let ai = a.row(i).to_vec();
            rows_b.iter().map(move |bj| kernel.eval(&ai, bj)).collect::<Vec<_>>()
        })
        .collect();
    Array2::from_shape_vec((a.nrows(), b.nrows()), data).map_err(|e| Error::Shape(e.to_string()))
}

/// Gram matrix of scalar samples.
pub fn gram_1d(kernel: &KernelSpec, a: &[f64], b: &[f64]) -> Result<Array2<f64>> {
    kernel.validate()?;
    let data: Vec<f64> = a.par_iter().flat_map_iter(|&x| b.iter().map(move |&y| kernel.eval1(x, y))).collect();
    Array2::from_shape_vec((a.len(), b.len()), data).map_err(|e| Error::Shape(e.to_string()))
}

/// `H G H` with `H = I - 11^T / n`.
pub fn center(g: &Array2<f64>) -> Result<Array2<f64>> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::Shape(format!("centering needs a square matrix, got {}x{}", n, g.ncols())));
    }
    if n == 0 {
        return Ok(g.clone());
    }
    let nf = n as f64;
    let row_means: Vec<f64> = g.rows().into_iter().map(|r| r.sum() / nf).collect();
    let col_means: Vec<f64> = g.columns().into_iter().map(|c| c.sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| g[[i, j]] - row_means[i] - col_means[j] + grand))
}

/// Median of pairwise distances between distinct scalar samples.
///
/// Inputs longer than [`MEDIAN_SUBSAMPLE`] are subsampled without
/// replacement from a fixed seed. The median is the lower order statistic
/// (`ceil(0.5 * P)`-th of the `P` pair distances).
pub fn median_bandwidth(samples: &[f64]) -> Result<f64> {
    median_bandwidth_seeded(samples, MEDIAN_SEED)
}

pub fn median_bandwidth_seeded(samples: &[f64], seed: Seed) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("median heuristic needs at least two samples".into()));
    }
    let picked: Vec<f64> = if samples.len() > MEDIAN_SUBSAMPLE {
        let mut rng = seed.rng();
        sample(&mut rng, samples.len(), MEDIAN_SUBSAMPLE).into_iter().map(|i| samples[i]).collect()
    } else {
        samples.to_vec()
    };
    let n = picked.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push((picked[i] - picked[j]).abs());
        }
    }
    median_of_distances(dists)
}

/// Multivariate version over the rows of `x` (Euclidean distances).
pub fn median_bandwidth_rows(x: ArrayView2<'_, f64>) -> Result<f64> {
    let n = x.nrows().min(MEDIAN_SUBSAMPLE);
    if n < 2 {
        return Err(Error::InvalidArgument("median heuristic needs at least two samples".into()));
    }
    let idx: Vec<usize> = if x.nrows() > MEDIAN_SUBSAMPLE {
        sample(&mut MEDIAN_SEED.rng(), x.nrows(), MEDIAN_SUBSAMPLE).into_vec()
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let d2: f64 = x.row(idx[a]).iter().zip(x.row(idx[b]).iter()).map(|(p, q)| (p - q) * (p - q)).sum();
            dists.push(d2.sqrt());
        }
    }
    median_of_distances(dists)
}

fn median_of_distances(mut dists: Vec<f64>) -> Result<f64> {
    if dists.iter().all(|d| *d == 0.0) {
        return Err(Error::DegenerateScale);
    }
    let k = crate::sampling::quantile_rank(0.5, dists.len());
    let (_, med, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    if *med > 0.0 {
        return Ok(*med);
    }
    // More than half of the pairs are ties; fall back to the positive pairs.
    let mut positive: Vec<f64> = dists.into_iter().filter(|d| *d > 0.0).collect();
    let k = crate::sampling::quantile_rank(0.5, positive.len());
    let (_, med, _) = positive.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*med)
}
