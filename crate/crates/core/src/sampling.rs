//! Seeded designs of experiments and empirical quantiles.
//!
//! Every stochastic procedure in the crate draws from a [`Seed`]: a
//! ChaCha8 generator keyed by the 64-bit `master` value and positioned on
//! the ChaCha stream `stream`. Distinct `(master, stream)` pairs give
//! non-overlapping sequences. Child seeds for parallel tasks are derived with
//! [`Seed::child`], so no generator state is ever shared between tasks.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::problem::BoxDomain;
use crate::{Error, Result};

/// Name of the generator recorded in output metadata.
pub const RNG_NAME: &str = "chacha8 (rand_chacha 0.3), key = seed_from_u64(master), stream = stream";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u32,
}

impl Seed {
    pub const fn new(master: u64, stream: u32) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream as u64);
        rng
    }

    /// Same master, different stream.
    pub fn with_stream(&self, stream: u32) -> Self {
        Self { master: self.master, stream }
    }

    /// Derives an independent seed for sub-task `tag`. The child master is a
    /// splitmix64 hash of `(master, stream)`, so children of different
    /// parents do not collide.
    pub fn child(&self, tag: u32) -> Self {
        let mixed = splitmix64(self.master ^ splitmix64(self.stream as u64 ^ 0xA076_1D64_78BD_642F));
        Self { master: mixed, stream: tag }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` points drawn independently and uniformly in the box, row by row.
pub fn uniform_sample(domain: &BoxDomain, n: usize, seed: Seed) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let d = domain.dim();
    let mut x = Array2::zeros((n, d));
    for mut row in x.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = domain.lower()[j] + rng.gen::<f64>() * domain.width(j);
        }
    }
    Ok(x)
}

/// Latin hypercube of `n` points improved towards the maximin criterion.
///
/// The search swaps two entries of a random column and keeps the swap only
/// when the minimum pairwise distance (measured in unit-cube coordinates)
/// strictly increases; `opt_iters` swaps are proposed. Swaps permute values
/// within a column, so every column keeps exactly one point per stratum.
pub fn lhs_maximin(domain: &BoxDomain, n: usize, seed: Seed, opt_iters: usize) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument("maximin LHS needs at least 2 points".into()));
    }
    let d = domain.dim();
    let mut rng = seed.rng();
    let mut unit = Array2::<f64>::zeros((n, d));
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(&mut rng);
        for i in 0..n {
            unit[[i, j]] = (perm[i] as f64 + rng.gen::<f64>()) / n as f64;
        }
    }

    if opt_iters > 0 {
        let mut dist = pairwise_sq_distances(unit.view());
        let mut best = min_offdiag(&dist);
        let mut row_a = vec![0.0; n];
        let mut row_b = vec![0.0; n];
        for _ in 0..opt_iters {
            let col = rng.gen_range(0..d);
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            swap_entries(&mut unit, a, b, col);
            for k in 0..n {
                row_a[k] = sq_dist(unit.view(), a, k);
                row_b[k] = sq_dist(unit.view(), b, k);
            }
            let candidate = (0..n)
                .flat_map(|k| {
                    let ra = if k != a { row_a[k] } else { f64::INFINITY };
                    let rb = if k != b { row_b[k] } else { f64::INFINITY };
                    [ra, rb]
                })
                .fold(f64::INFINITY, f64::min);
            // Pairs not touching a or b keep their distance.
            let untouched = min_offdiag_excluding(&dist, a, b);
            let new_min = candidate.min(untouched);
            if new_min > best {
                best = new_min;
                for k in 0..n {
                    dist[a * n + k] = row_a[k];
                    dist[k * n + a] = row_a[k];
                    dist[b * n + k] = row_b[k];
                    dist[k * n + b] = row_b[k];
                }
            } else {
                swap_entries(&mut unit, a, b, col);
            }
        }
    }

    let mut x = unit;
    for mut row in x.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (domain.lower()[j] + *v * domain.width(j)).min(domain.upper()[j]);
        }
    }
    Ok(x)
}

fn swap_entries(x: &mut Array2<f64>, a: usize, b: usize, col: usize) {
    let tmp = x[[a, col]];
    x[[a, col]] = x[[b, col]];
    x[[b, col]] = tmp;
}

fn sq_dist(x: ArrayView2<'_, f64>, a: usize, b: usize) -> f64 {
    x.row(a).iter().zip(x.row(b).iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn pairwise_sq_distances(x: ArrayView2<'_, f64>) -> Vec<f64> {
    let n = x.nrows();
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = sq_dist(x, a, b);
            out[a * n + b] = v;
            out[b * n + a] = v;
        }
    }
    out
}

fn min_offdiag(dist: &[f64]) -> f64 {
    let n = (dist.len() as f64).sqrt() as usize;
    let mut m = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            m = m.min(dist[a * n + b]);
        }
    }
    m
}

fn min_offdiag_excluding(dist: &[f64], skip_a: usize, skip_b: usize) -> f64 {
    let n = (dist.len() as f64).sqrt() as usize;
    let mut m = f64::INFINITY;
    for a in 0..n {
        if a == skip_a || a == skip_b {
            continue;
        }
        for b in a + 1..n {
            if b == skip_a || b == skip_b {
                continue;
            }
            m = m.min(dist[a * n + b]);
        }
    }
    m
}

/// Minimum pairwise Euclidean distance of the rows, in unit-cube coordinates.
pub fn min_pairwise_distance(domain: &BoxDomain, x: ArrayView2<'_, f64>) -> f64 {
    let unit: Vec<Vec<f64>> = x.rows().into_iter().map(|r| domain.to_unit(&r.to_vec())).collect();
    let mut best = f64::INFINITY;
    for a in 0..unit.len() {
        for b in a + 1..unit.len() {
            let d: f64 = unit[a].iter().zip(&unit[b]).map(|(p, q)| (p - q) * (p - q)).sum();
            best = best.min(d);
        }
    }
    best.sqrt()
}

/// Rank of the order statistic used as the `alpha`-quantile of `n` values:
/// `ceil(alpha * n)`, clamped to `1..=n`.
///
/// The product is nudged down by a relative `1e-12` before rounding up so
/// that e.g. `0.7 * 10` (which is `7.000000000000001` in binary) gives 7.
pub fn quantile_rank(alpha: f64, n: usize) -> usize {
    let raw = alpha * n as f64;
    let k = (raw - raw.abs() * 1e-12).ceil() as usize;
    k.clamp(1, n)
}

/// The `ceil(alpha * n)`-th smallest value, with no interpolation.
pub fn empirical_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty vector".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level must lie in (0, 1], got {alpha}")));
    }
    let k = quantile_rank(alpha, values.len());
    let mut v = values.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}
