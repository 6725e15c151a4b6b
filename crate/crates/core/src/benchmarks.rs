//! Closed-form test problems.
//!
//! | Name | d | m | Box |
//! |------|---|---|-----|
//! | `dixon-price` | 2 | 0 | `[-10, 10]^2` |
//! | `linear2d` | 2 | 0 | `[-10, 10]^2` |
//! | `level` | 2 | 0 | `[-5, 5]^2` |
//! | `twisted-strip` | 2 | 0 | `[-1, 1]^2` |
//! | `gtcd` | 4 | 1 | gas transmission compressor design |
//! | `wb4` | 4 | 5 | welded beam |

use serde::Serialize;

use crate::problem::{BoxDomain, ProblemSpec};
use crate::{Error, Result};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 6] = ["dixon-price", "linear2d", "level", "twisted-strip", "gtcd", "wb4"];

/// Reference data for a catalog entry.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkInfo {
    pub name: &'static str,
    pub d: usize,
    pub m: usize,
    pub best_f: Option<f64>,
    pub best_x: Option<Vec<f64>>,
    /// Percentage of the box volume that is feasible.
    pub feasible_volume_pct: Option<f64>,
}

pub fn by_name(name: &str) -> Result<ProblemSpec> {
    match name {
        "dixon-price" => Ok(dixon_price()),
        "linear2d" => Ok(linear2d()),
        "level" => Ok(level_fn(2.3)),
        "twisted-strip" => Ok(twisted_strip(TwistedStrip::default())),
        "gtcd" => Ok(gtcd()),
        "wb4" => Ok(wb4()),
        other => {
            Err(Error::InvalidArgument(format!("unknown benchmark `{other}`; expected one of {}", NAMES.join(", "))))
        }
    }
}

pub fn info(name: &str) -> Result<BenchmarkInfo> {
    let (d, m, best_f, best_x, vol) = match name {
        // Analytic optimum; both squared terms vanish at (1, 2^-1/2).
        "dixon-price" => (2, 0, Some(0.0), Some(vec![1.0, std::f64::consts::FRAC_1_SQRT_2]), None),
        "linear2d" => (2, 0, Some(-30.0), Some(vec![-10.0, -10.0]), None),
        "level" => (2, 0, Some(-6.0), Some(vec![0.0, 2.0]), None),
        "twisted-strip" => (2, 0, None, Some(vec![-1.0, -1.0]), None),
        "gtcd" => (4, 1, Some(2_964_893.85), Some(vec![49.99, 1.178, 24.59, 0.389]), Some(52.38)),
        "wb4" => (4, 5, Some(1.7250), Some(vec![0.206, 3.473, 9.037, 0.206]), Some(5.6e-2)),
        other => return Err(Error::InvalidArgument(format!("unknown benchmark `{other}`"))),
    };
    let name = NAMES.iter().copied().find(|n| *n == name).expect("matched above");
    Ok(BenchmarkInfo { name, d, m, best_f, best_x, feasible_volume_pct: vol })
}

pub fn dixon_price_value(x: &[f64]) -> f64 {
    let a = x[0] - 1.0;
    let b = 2.0 * x[1] * x[1] - x[0];
    a * a + 2.0 * b * b
}

pub fn dixon_price() -> ProblemSpec {
    ProblemSpec::new("dixon-price", cube(2, -10.0, 10.0), dixon_price_value)
}

pub fn linear2d() -> ProblemSpec {
    ProblemSpec::new("linear2d", cube(2, -10.0, 10.0), |x| x[0] + 2.0 * x[1])
}

/// Depends on `x1` only where `|x1| > q`, and on `x2` only elsewhere.
pub fn level_value(x: &[f64], q: f64) -> f64 {
    if x[0].abs() > q {
        x[0].abs()
    } else {
        (x[1] - 2.0).abs() - 6.0
    }
}

pub fn level_fn(q: f64) -> ProblemSpec {
    ProblemSpec::new("level", cube(2, -5.0, 5.0), move |x| level_value(x, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistedStrip {
    pub c: [f64; 2],
    pub a: f64,
    pub eps: f64,
    /// Half-width of the square domain `[-h, h]^2`.
    pub half_width: f64,
}

impl Default for TwistedStrip {
    fn default() -> Self {
        Self { c: [0.1, 0.1], a: 0.2, eps: 0.1, half_width: 1.0 }
    }
}

impl TwistedStrip {
    /// The branch test uses the unshifted `|x1|`; the branch values use the
    /// shifted coordinates `x - c`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let s1 = x[0] - self.c[0];
        let s2 = x[1] - self.c[1];
        let twist = self.eps * s2 * s1;
        if x[0].abs() >= self.a {
            let r = s1.abs() - self.a;
            10.0 - r * r - twist
        } else {
            10.0 - twist
        }
    }
}

pub fn twisted_strip(params: TwistedStrip) -> ProblemSpec {
    let h = params.half_width;
    ProblemSpec::new("twisted-strip", cube(2, -h, h), move |x| params.value(x))
}

pub fn gtcd_objective(x: &[f64]) -> f64 {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    8.61e5 * x1.sqrt() * x2 * x3.powf(-2.0 / 3.0) / x4.sqrt() + 7.72e8 / x1 * x2.powf(0.219) - 765.43e6 / x1
        + 3.69e4 * x3
}

pub fn gtcd_g1(x: &[f64]) -> f64 {
    let inv_sq = 1.0 / (x[1] * x[1]);
    x[3] * inv_sq + inv_sq - 1.0
}

/// Gas transmission compressor design.
pub fn gtcd() -> ProblemSpec {
    let domain = BoxDomain::new(vec![20.0, 1.0, 20.0, 0.1], vec![50.0, 10.0, 50.0, 60.0]).expect("static bounds");
    ProblemSpec::new("gtcd", domain, gtcd_objective).with_constraint(gtcd_g1)
}

/// Intermediate welded-beam quantities.
pub mod weld {
    const SQRT2: f64 = std::f64::consts::SQRT_2;

    /// `sqrt(0.25 (x2^2 + (x1 + x3)^2))`, shared by `tau2` and `tau`.
    pub fn radius(x: &[f64]) -> f64 {
        (0.25 * (x[1] * x[1] + (x[0] + x[2]).powi(2))).sqrt()
    }

    pub fn tau1(x: &[f64]) -> f64 {
        6000.0 / (SQRT2 * x[0] * x[1])
    }

    pub fn tau2(x: &[f64]) -> f64 {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let inertia = SQRT2 * x1 * x2 * (x2 * x2 / 12.0 + 0.25 * (x1 + x3).powi(2));
        6000.0 * (14.0 + 0.5 * x2) * radius(x) / (2.0 * inertia)
    }

    pub fn tau(x: &[f64]) -> f64 {
        let t1 = tau1(x);
        let t2 = tau2(x);
        (t1 * t1 + t2 * t2 + x[1] * t1 * t2 / radius(x)).sqrt()
    }

    pub fn sigma(x: &[f64]) -> f64 {
        504_000.0 / (x[2] * x[2] * x[3])
    }

    pub fn buckling_load(x: &[f64]) -> f64 {
        102_372.4 * (1.0 - 0.028_234_6 * x[2]) * x[2] * x[3].powi(3)
    }

    pub fn delta(x: &[f64]) -> f64 {
        2.1952 / (x[2].powi(3) * x[3])
    }
}

pub fn wb4_objective(x: &[f64]) -> f64 {
    1.10471 * x[0] * x[0] * x[1] + 0.04811 * x[2] * x[3] * (14.0 + x[1])
}

/// Welded beam design.
pub fn wb4() -> ProblemSpec {
    let domain = BoxDomain::new(vec![0.125, 0.1, 0.1, 0.1], vec![10.0; 4]).expect("static bounds");
    ProblemSpec::new("wb4", domain, wb4_objective)
        .with_constraint(|x| weld::tau(x) - 13_600.0)
        .with_constraint(|x| weld::sigma(x) - 30_000.0)
        .with_constraint(|x| x[0] - x[3])
        .with_constraint(|x| 6000.0 - weld::buckling_load(x))
        .with_constraint(|x| weld::delta(x) - 0.25)
}

fn cube(d: usize, lo: f64, hi: f64) -> BoxDomain {
    BoxDomain::cube(d, lo, hi).expect("static bounds")
}
