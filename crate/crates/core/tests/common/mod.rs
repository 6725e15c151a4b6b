//! Property checks shared by the property suite and the acceptance target.
//! None of them evaluates a catalog benchmark.

#![allow(dead_code)]

use ndarray::Array2;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use sensopt::hsic::{replicate_indices, DesignSource, Normalization, SensitivityConfig};
use sensopt::optimize::{reduce, Screening};
use sensopt::sampling::empirical_quantile;
use sensopt::{BoxDomain, EvaluatedDesign, ProblemSpec, Seed};

/// Design with inputs in `[0, 1]^d`, objective values on a `1e-3` grid (so
/// `exp` keeps them distinct) and one constraint column.
#[derive(Debug, Clone)]
pub struct DesignCase {
    pub x: Vec<Vec<f64>>,
    pub f_steps: Vec<i32>,
    pub g: Vec<f64>,
    pub seed: u64,
}

pub fn design_case() -> impl Strategy<Value = DesignCase> {
    (2usize..=3, 60usize..=120, any::<u64>()).prop_flat_map(|(d, n, seed)| {
        (
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, d), n),
            proptest::collection::vec(-2000i32..2000, n),
            proptest::collection::vec(-1.0f64..0.5, n),
            Just(seed),
        )
            .prop_map(|(x, f_steps, g, seed)| DesignCase { x, f_steps, g, seed })
    })
}

fn build(case: &DesignCase, map: impl Fn(f64) -> f64) -> EvaluatedDesign {
    let n = case.x.len();
    let d = case.x[0].len();
    let x = Array2::from_shape_vec((n, d), case.x.concat()).unwrap();
    let f = case.f_steps.iter().map(|k| map(f64::from(*k) * 1e-3)).collect();
    let g = Array2::from_shape_vec((n, 1), case.g.clone()).unwrap();
    EvaluatedDesign::new(x, f, g).unwrap()
}

/// Indices computed from `f` and from `exp(f)` agree bit for bit.
pub fn check_monotone_invariance(case: &DesignCase) -> Result<(), TestCaseError> {
    let cfg = SensitivityConfig {
        alphas: vec![0.2, 0.5, 1.0],
        n: case.x.len(),
        gram_subsample: 40,
        reps: 3,
        min_feasible: 10,
        normalization: Normalization::Sum,
    };
    let seed = Seed::new(case.seed, 0);
    let plain = build(case, |v| v);
    let mapped = build(case, f64::exp);
    let a = replicate_indices(DesignSource::Given(&plain), &cfg, seed);
    let b = replicate_indices(DesignSource::Given(&mapped), &cfg, seed);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            for (ra, rb) in a.mean.iter().zip(&b.mean) {
                for (va, vb) in ra.iter().zip(rb) {
                    prop_assert_eq!(va.to_bits(), vb.to_bits());
                }
            }
            for (ra, rb) in a.replicates.iter().zip(&b.replicates) {
                prop_assert_eq!(&ra.n_in_d, &rb.n_in_d);
            }
        }
        (Err(ea), Err(eb)) => prop_assert_eq!(ea.to_string(), eb.to_string()),
        (a, b) => prop_assert!(false, "one side failed: {:?} / {:?}", a.err(), b.err()),
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ReduceCase {
    pub lower: Vec<f64>,
    pub width: Vec<f64>,
    pub frozen_mask: Vec<bool>,
    pub point: Vec<f64>,
}

pub fn reduce_case() -> impl Strategy<Value = ReduceCase> {
    (2usize..=6).prop_flat_map(|d| {
        (
            proptest::collection::vec(-50.0f64..50.0, d),
            proptest::collection::vec(0.1f64..20.0, d),
            proptest::collection::vec(any::<bool>(), d),
            proptest::collection::vec(0.0f64..1.0, d),
        )
            .prop_map(|(lower, width, frozen_mask, point)| ReduceCase { lower, width, frozen_mask, point })
    })
}

fn synthetic_problem(lower: &[f64], width: &[f64]) -> ProblemSpec {
    let upper: Vec<f64> = lower.iter().zip(width).map(|(l, w)| l + w).collect();
    let domain = BoxDomain::new(lower.to_vec(), upper).unwrap();
    ProblemSpec::new("synthetic", domain, |x: &[f64]| {
        x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v.sin() + v * v).sum()
    })
    .with_constraint(|x: &[f64]| x.iter().product::<f64>().cos() - 0.5)
}

/// The reduced problem evaluates exactly like the original at the merged point.
pub fn check_reduce_round_trip(case: &ReduceCase) -> Result<(), TestCaseError> {
    let d = case.lower.len();
    let mut frozen: Vec<usize> = (0..d).filter(|&i| case.frozen_mask[i]).collect();
    if frozen.len() == d {
        frozen.pop();
    }
    let active: Vec<usize> = (0..d).filter(|i| !frozen.contains(i)).collect();
    let full: Vec<f64> = (0..d).map(|i| case.lower[i] + case.width[i] * case.point[i]).collect();
    let values: Vec<f64> = frozen.iter().map(|&i| full[i]).collect();
    let problem = synthetic_problem(&case.lower, &case.width);
    let screening = Screening { active: active.clone(), frozen, values: Some(values), tau: 0.0, alpha_sel: 0.1 };
    let reduced = reduce(&problem, &screening).unwrap();
    let y: Vec<f64> = active.iter().map(|&i| full[i]).collect();

    prop_assert_eq!(screening.merge(&y).unwrap(), full.clone());
    prop_assert_eq!(reduced.objective(&y).to_bits(), problem.objective(&full).to_bits());
    prop_assert_eq!(reduced.constraint(0, &y).to_bits(), problem.constraint(0, &full).to_bits());
    for (k, &i) in active.iter().enumerate() {
        prop_assert_eq!(reduced.domain().lower()[k], problem.domain().lower()[i]);
        prop_assert_eq!(reduced.domain().upper()[k], problem.domain().upper()[i]);
    }
    Ok(())
}

pub fn quantile_case() -> impl Strategy<Value = (Vec<f64>, u32)> {
    (proptest::collection::vec(-1e3f64..1e3, 1..300), 1u32..=1000)
}

/// The `alpha`-quantile is the `ceil(alpha n)`-th order statistic, computed
/// here in integer arithmetic with `alpha = p / 1000`.
pub fn check_quantile_convention(values: &[f64], permille: u32) -> Result<(), TestCaseError> {
    let n = values.len();
    let alpha = f64::from(permille) / 1000.0;
    let k = (permille as usize * n).div_ceil(1000).max(1);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = empirical_quantile(values, alpha).unwrap();
    prop_assert_eq!(q, sorted[k - 1]);
    prop_assert!(values.iter().filter(|v| **v <= q).count() >= k);
    prop_assert!(values.iter().filter(|v| **v < q).count() < k);
    Ok(())
}
