mod common;

use ndarray::Array2;
use proptest::prelude::*;

use sensopt::hsic::{hsic_biased, normalize, Normalization};
use sensopt::kernels::{center, gram, KernelSpec};
use sensopt::optimize::{dfo_minimize, DfoOptions};
use sensopt::sampling::{lhs_maximin, uniform_sample};
use sensopt::{BoxDomain, ProblemSpec, Seed};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn indices_unchanged_by_monotone_output_map(case in common::design_case()) {
        common::check_monotone_invariance(&case)?;
    }
}

proptest! {
    #[test]
    fn reduced_problem_matches_original(case in common::reduce_case()) {
        common::check_reduce_round_trip(&case)?;
    }

    #[test]
    fn quantile_is_an_order_statistic((values, permille) in common::quantile_case()) {
        common::check_quantile_convention(&values, permille)?;
    }

    #[test]
    fn sum_normalization_sums_to_one(raw in proptest::collection::vec(0.0f64..10.0, 1..8)) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-9);
        let s = normalize(&raw, Normalization::Sum, None).unwrap();
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn centered_gram_rows_sum_to_zero(
        pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 2..30),
        sigma in 0.1f64..5.0,
    ) {
        let n = pts.len();
        let x = Array2::from_shape_vec((n, 2), pts.concat()).unwrap();
        let k = gram(&KernelSpec::rbf(sigma).unwrap(), x.view(), x.view()).unwrap();
        let kc = center(&k).unwrap();
        for row in kc.rows() {
            prop_assert!(row.sum().abs() < 1e-12);
        }
        prop_assert!(hsic_biased(&k, &k).unwrap() >= -1e-15);
    }

    #[test]
    fn designs_stay_in_the_box(lo in -10.0f64..10.0, w in 0.5f64..5.0, n in 2usize..40, seed in any::<u64>()) {
        let b = BoxDomain::new(vec![lo, lo - 1.0], vec![lo + w, lo - 1.0 + 2.0 * w]).unwrap();
        let u = uniform_sample(&b, n, Seed::new(seed, 0)).unwrap();
        let l = lhs_maximin(&b, n, Seed::new(seed, 0), 50).unwrap();
        for x in [u, l] {
            prop_assert!(x.rows().into_iter().all(|r| b.contains(&r.to_vec())));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optimizer_respects_box_and_budget(
        x0 in proptest::collection::vec(0.0f64..1.0, 3),
        shift in proptest::collection::vec(-1.0f64..2.0, 3),
        budget in 5usize..80,
    ) {
        let target = shift.clone();
        let p = ProblemSpec::new("bowl", BoxDomain::cube(3, 0.0, 1.0).unwrap(), move |x: &[f64]| {
            x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()
        })
        .with_constraint(|x: &[f64]| x[0] + x[1] - 1.5);
        let opts = DfoOptions { budget, ..DfoOptions::default() };
        let r = dfo_minimize(&p, &x0, &opts).unwrap();
        prop_assert!(r.n_calls <= budget);
        prop_assert!(p.domain().contains(&r.x));
        prop_assert_eq!(r, dfo_minimize(&p, &x0, &opts).unwrap());
    }
}
