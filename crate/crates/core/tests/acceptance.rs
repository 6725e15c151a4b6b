//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.
//!
//! Runs with `cargo test --test acceptance` (release-level optimization is
//! configured for the test profile).

mod common;

use std::time::Instant;

use ndarray::Array2;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

use sensopt::benchmarks::{dixon_price, gtcd, level_fn, linear2d, twisted_strip, wb4, TwistedStrip};
use sensopt::hsic::{
    hsic_biased, hsic_it, replicate_design, replicate_indices, DesignSource, IndexTable, SensitivityConfig,
};
use sensopt::kernels::KernelSpec;
use sensopt::optimize::{
    classify, dfo_minimize, freeze_values, reduce, run_study, summarize, DfoOptions, FreezeStrategy, Screening,
    StudyConfig, StudySummary, Version, VersionSetup,
};
use sensopt::problem::evaluate;
use sensopt::sampling::{uniform_sample, Seed};
use sensopt::sobol::{given_data_first_order, pick_freeze_indices, pick_freeze_thresholded};
use sensopt::thresholding::{conditional_subset, ThresholdSpec};

const SEED: u64 = 0;

/// Seeds derived the same way as the command-line `sensitivity` and `study`
/// commands, so `--seed 0` reproduces the screening runs below.
fn sensitivity_seed() -> Seed {
    Seed::new(SEED, 0).child(0)
}

fn study_seed() -> Seed {
    Seed::new(SEED, 0).child(1)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

/// `(1/n^2) sum_ij Kc_ij Lc_ij` with both matrices double-centered by
/// explicit row, column and grand means.
fn naive_centered_hsic(k: &[Vec<f64>], l: &[Vec<f64>]) -> f64 {
    let n = k.len();
    let centered = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let row: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j]).sum::<f64>() / n as f64).collect();
        let col: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m[i][j]).sum::<f64>() / n as f64).collect();
        let all = row.iter().sum::<f64>() / n as f64;
        (0..n).map(|i| (0..n).map(|j| m[i][j] - row[i] - col[j] + all).collect()).collect()
    };
    let (kc, lc) = (centered(k), centered(l));
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += kc[i][j] * lc[i][j];
        }
    }
    s / (n * n) as f64
}

fn gauss(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

// ------------------------------------------------------------- criteria

fn c1_hsic_oracle() -> Outcome {
    let mut rng = Seed::new(SEED, 1).rng();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=200);
        let d = rng.gen_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let sigma = rng.gen_range(0.2..3.0);
        let k: Vec<Vec<f64>> = pts.iter().map(|a| pts.iter().map(|b| gauss(a, b, sigma)).collect()).collect();
        // Second kernel: either another Gaussian or linear on a 0/1 label.
        let l: Vec<Vec<f64>> = if rng.gen_bool(0.5) {
            let z: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.gen_bool(0.3)))).collect();
            z.iter().map(|a| z.iter().map(|b| a * b).collect()).collect()
        } else {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            w.iter().map(|a| w.iter().map(|b| gauss(&[*a], &[*b], 0.7)).collect()).collect()
        };
        let to_array = |m: &[Vec<f64>]| Array2::from_shape_vec((n, n), m.concat()).unwrap();
        let fast = hsic_biased(&to_array(&k), &to_array(&l)).unwrap();
        worst = worst.max((fast - naive_centered_hsic(&k, &l)).abs());
    }
    outcome(worst <= 1e-12, format!("max |trace form - double sum| = {worst:.2e} over 50 instances (tol 1e-12)"))
}

fn c2_hsic_mmd_identity() -> Outcome {
    let mut rng = Seed::new(SEED, 2).rng();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let support_size = rng.gen_range(2..=10);
        let support: Vec<f64> = (0..support_size).map(|k| k as f64 + rng.gen_range(-0.3..0.3)).collect();
        let counts: Vec<usize> = (0..support_size).map(|_| rng.gen_range(1..=12)).collect();
        let mut selected: Vec<bool> = (0..support_size).map(|_| rng.gen_bool(0.4)).collect();
        if selected.iter().all(|s| !s) || selected.iter().all(|s| *s) {
            selected[0] = !selected[0];
        }
        let sigma = rng.gen_range(0.3..3.0);

        // The sample is the discrete law itself: support point k repeated counts[k] times.
        let mut xs = Vec::new();
        let mut z = Vec::new();
        for k in 0..support_size {
            for _ in 0..counts[k] {
                xs.push(support[k]);
                z.push(selected[k]);
            }
        }
        let n = xs.len() as f64;
        let x = Array2::from_shape_vec((xs.len(), 1), xs).unwrap();
        let hsic = hsic_it(x.view(), &z, &[KernelSpec::rbf(sigma).unwrap()]).unwrap().raw[0];

        // Exact MMD^2 between P(X | Z = 1) and P(X) by enumeration of the support.
        let p_marg: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();
        let p1: f64 = (0..support_size).filter(|&k| selected[k]).map(|k| p_marg[k]).sum();
        let p_cond: Vec<f64> = (0..support_size).map(|k| if selected[k] { p_marg[k] / p1 } else { 0.0 }).collect();
        let mut gamma2 = 0.0;
        for a in 0..support_size {
            for b in 0..support_size {
                gamma2 +=
                    (p_cond[a] - p_marg[a]) * (p_cond[b] - p_marg[b]) * gauss(&[support[a]], &[support[b]], sigma);
            }
        }
        worst = worst.max((hsic - p1 * p1 * gamma2).abs());
    }
    outcome(worst <= 1e-12, format!("max |HSIC - p^2 MMD^2| = {worst:.2e} over 20 discrete laws (tol 1e-12)"))
}

fn c3_sobol_analytics() -> Outcome {
    let lin = linear2d();
    let a = pick_freeze_indices(lin.objective_fn().as_ref(), lin.domain(), 10_000, Seed::new(SEED, 3)).unwrap();
    let dp = dixon_price();
    let b = pick_freeze_indices(dp.objective_fn().as_ref(), dp.domain(), 10_000, Seed::new(SEED, 3).child(1)).unwrap();
    let lin_ok = (a.first[0] - 0.2).abs() <= 0.03 && (a.first[1] - 0.8).abs() <= 0.03;
    let dp_ok = b.first[0] <= 0.05 && b.first[1] >= 0.9 - 0.05;
    outcome(
        lin_ok && dp_ok,
        format!(
            "linear2d S = ({:.4}, {:.4}) vs (0.2, 0.8) +- 0.03; dixon-price S1 = {:.4} (<= 0.05), S2 = {:.4} (>= 0.85)",
            a.first[0], a.first[1], b.first[0], b.first[1]
        ),
    )
}

fn c4_zero_threshold_signature() -> Outcome {
    let dp = dixon_price();
    let n = 50_000;
    let seed = Seed::new(SEED, 4);
    let low = pick_freeze_thresholded(&dp, &ThresholdSpec::new(0.2, vec![]).unwrap(), n, seed).unwrap();
    let full = pick_freeze_thresholded(&dp, &ThresholdSpec::new(1.0, vec![]).unwrap(), n, seed.child(1)).unwrap();
    let (t_low, t_full) = (low.total.unwrap()[1], full.total.unwrap()[1]);
    let pass = low.first[1] < full.first[1] - 0.1 && (t_low - t_full).abs() <= 0.1;
    outcome(
        pass,
        format!(
            "S2(0.2) = {:.4} < S2(1.0) - 0.1 = {:.4}; |S2T(0.2) - S2T(1.0)| = |{t_low:.4} - {t_full:.4}| = {:.4} (<= 0.1)",
            low.first[1],
            full.first[1] - 0.1,
            (t_low - t_full).abs()
        ),
    )
}

fn c5_conditional_plateau() -> Outcome {
    let lin = linear2d();
    let x = uniform_sample(lin.domain(), 100_000, Seed::new(SEED, 5)).unwrap();
    let design = evaluate(&lin, x.view()).unwrap();
    let at = |alpha: f64| -> Vec<f64> {
        let (xd, fd) = conditional_subset(&design, &ThresholdSpec::new(alpha, vec![]).unwrap()).unwrap();
        given_data_first_order(xd.view(), &fd, 20).unwrap()
    };
    let (a, b) = (at(0.25), at(0.10));
    let across_alpha = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    let across_inputs = (a[0] - a[1]).abs().max((b[0] - b[1]).abs());
    outcome(
        across_alpha <= 0.05 && across_inputs <= 0.05,
        format!(
            "S(0.25) = ({:.4}, {:.4}), S(0.10) = ({:.4}, {:.4}); max gap across alpha {across_alpha:.4}, across inputs {across_inputs:.4} (tol 0.05)",
            a[0], a[1], b[0], b[1]
        ),
    )
}

fn c6_level_set() -> Outcome {
    let q = 2.3;
    let p = level_fn(q);
    let alphas = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let cfg = SensitivityConfig { alphas: alphas.clone(), n: 20_000, reps: 20, ..SensitivityConfig::default() };
    let table = replicate_indices(DesignSource::Problem(&p), &cfg, Seed::new(SEED, 6)).unwrap();
    // Below the crossing the sublevel set lies inside |x1| <= q; above it, D = {|x1| <= q_alpha}.
    let crossing = q / 5.0;
    let above = alphas.iter().position(|a| *a > crossing).unwrap();
    let x2_above = table.mean[above][1];
    let below_min = (0..above).flat_map(|k| table.mean[k].iter().copied()).fold(f64::INFINITY, f64::min);
    outcome(
        x2_above <= 0.05 && below_min >= 0.1,
        format!(
            "crossing at alpha = {crossing:.2}; X2 at alpha = {} is {x2_above:.4} (<= 0.05); smallest index below is {below_min:.4} (>= 0.1)",
            alphas[above]
        ),
    )
}

fn screening_run(p: &sensopt::ProblemSpec, n: usize) -> (IndexTable, Screening) {
    let cfg = SensitivityConfig { n, reps: 20, gram_subsample: 2000, ..SensitivityConfig::default() };
    let table = replicate_indices(DesignSource::Problem(p), &cfg, sensitivity_seed()).unwrap();
    let screening = classify(&table, 0.1, 0.1).unwrap();
    (table, screening)
}

fn greedy_values(p: &sensopt::ProblemSpec, n: usize, screening: &Screening) -> Screening {
    let design = replicate_design(DesignSource::Problem(p), n, sensitivity_seed(), 0).unwrap();
    freeze_values(FreezeStrategy::Greedy, screening, p.domain(), Some(&design), sensitivity_seed()).unwrap()
}

fn fmt_means(table: &IndexTable, alpha: f64) -> String {
    let m = table.mean_at(alpha).unwrap();
    m.iter().enumerate().map(|(i, v)| format!("x{}={v:.4}", i + 1)).collect::<Vec<_>>().join(" ")
}

fn c7_gtcd_screening(table: &IndexTable, screening: &Screening) -> Outcome {
    outcome(
        screening.frozen == vec![2],
        format!(
            "frozen = {:?} (expect [x3]); tau = {:.4}; {}",
            names(&screening.frozen),
            screening.tau,
            fmt_means(table, 0.1)
        ),
    )
}

fn c8_wb4_screening(table: &IndexTable, screening: &Screening) -> Outcome {
    let min_feasible = table.replicates.iter().map(|r| r.n_feasible).min().unwrap();
    outcome(
        screening.frozen == vec![1, 2] && min_feasible >= 100,
        format!(
            "frozen = {:?} (expect [x2, x3]); fewest relaxed-feasible points {min_feasible} (>= 100); {}",
            names(&screening.frozen),
            fmt_means(table, 0.1)
        ),
    )
}

fn names(idx: &[usize]) -> Vec<String> {
    idx.iter().map(|i| format!("x{}", i + 1)).collect()
}

fn study(p: &sensopt::ProblemSpec, greedy: &Screening) -> Vec<StudySummary> {
    let cfg = StudyConfig { n_starts: 100, n_reps: 10, ..StudyConfig::default() };
    let setups = [VersionSetup::Original, VersionSetup::Greedy(greedy.clone())];
    let records = run_study(p, &setups, &cfg, study_seed()).unwrap();
    summarize(&records, 20)
}

fn by_version(s: &[StudySummary], v: Version) -> &StudySummary {
    s.iter().find(|x| x.version == v).unwrap()
}

fn c9_gtcd_study(greedy: &Screening) -> Outcome {
    let s = study(&gtcd(), greedy);
    let (orig, gr) = (by_version(&s, Version::Original), by_version(&s, Version::Greedy));
    let g_best = gr.best_f.unwrap_or(f64::INFINITY);
    let o_best = orig.best_f.unwrap_or(f64::INFINITY);
    let g_rel = (g_best - 2_966_731.0).abs() / 2_966_731.0;
    let o_rel = (o_best - 2_964_893.85).abs() / 2_964_893.85;
    let calls_ok = gr.mean_n_calls < 0.6 * orig.mean_n_calls;
    outcome(
        g_rel <= 2e-3 && o_rel <= 1e-3 && calls_ok,
        format!(
            "greedy x3 = {:.4}: best {g_best:.2} ({:.3}% from 2966731, tol 0.2%); original best {o_best:.2} ({:.3}% from 2964893.85, tol 0.1%); mean calls greedy {:.1} vs 0.6 x original {:.1}",
            greedy.values.as_ref().unwrap()[0],
            100.0 * g_rel,
            100.0 * o_rel,
            gr.mean_n_calls,
            0.6 * orig.mean_n_calls
        ),
    )
}

fn c10_wb4_study(greedy: &Screening) -> Outcome {
    let s = study(&wb4(), greedy);
    let (orig, gr) = (by_version(&s, Version::Original), by_version(&s, Version::Greedy));
    let modal_f = gr.modal_f_final.unwrap_or(f64::NAN);
    let f_rel = (modal_f - 1.97).abs() / 1.97;
    outcome(
        orig.modal_n_calls == 500 && f_rel <= 0.05 && gr.mean_n_calls <= 100.0,
        format!(
            "original modal calls {} (expect 500); greedy values {:?}: modal f {modal_f:.4} ({:.2}% from 1.97, tol 5%), mean calls {:.1} (<= 100)",
            orig.modal_n_calls,
            greedy.values.as_ref().unwrap(),
            100.0 * f_rel,
            gr.mean_n_calls
        ),
    )
}

fn c11_twisted_strip() -> Outcome {
    let p = twisted_strip(TwistedStrip::default());
    let starts = uniform_sample(&sensopt::BoxDomain::cube(1, -1.0, 1.0).unwrap(), 1000, Seed::new(SEED, 11)).unwrap();
    let frequency = |x2: f64| -> f64 {
        let s = Screening { active: vec![0], frozen: vec![1], values: Some(vec![x2]), tau: 0.0, alpha_sel: 0.1 };
        let reduced = reduce(&p, &s).unwrap();
        let hits = starts
            .column(0)
            .iter()
            .filter(|x0| {
                let r = dfo_minimize(&reduced, &[**x0], &DfoOptions::default()).unwrap();
                (r.x[0] + 1.0).abs() < 1e-3
            })
            .count();
        hits as f64 / 1000.0
    };
    let (minus, plus) = (frequency(-1.0), frequency(1.0));
    outcome(
        minus > plus,
        format!(
            "share of runs ending at x1 = -1: {:.1}% with x2 = -1, {:.1}% with x2 = +1",
            100.0 * minus,
            100.0 * plus
        ),
    )
}

fn c12_properties() -> Outcome {
    let mut failures = Vec::new();
    let mut runner = TestRunner::new(Config { cases: 64, failure_persistence: None, ..Config::default() });
    if let Err(e) = runner.run(&common::design_case(), |c| common::check_monotone_invariance(&c)) {
        failures.push(format!("monotone invariance: {e}"));
    }
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    if let Err(e) = runner.run(&common::reduce_case(), |c| common::check_reduce_round_trip(&c)) {
        failures.push(format!("reduce round trip: {e}"));
    }
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    if let Err(e) = runner.run(&common::quantile_case(), |(v, p)| common::check_quantile_convention(&v, p)) {
        failures.push(format!("quantile convention: {e}"));
    }
    let detail = if failures.is_empty() {
        "monotone invariance (64 cases), reduce round trip (256), quantile order statistic (256): all hold".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        println!("{} [{id:>2}] {name}: {} ({secs:.1}s)", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };

    record(1, "HSIC trace form vs centered double sum", &mut c1_hsic_oracle);
    record(2, "HSIC equals p^2 times MMD^2 on discrete laws", &mut c2_hsic_mmd_identity);
    record(3, "Sobol indices of linear2d and dixon-price", &mut c3_sobol_analytics);
    record(4, "zero-thresholded dixon-price sweep", &mut c4_zero_threshold_signature);
    record(5, "conditional linear2d plateau", &mut c5_conditional_plateau);
    record(6, "level-set screening", &mut c6_level_set);

    // The studies reuse the screening of criteria 7 and 8.
    let (g, w) = (gtcd(), wb4());
    let mut g_screen = None;
    record(7, "gtcd screening", &mut || {
        let (table, screening) = screening_run(&g, 20_000);
        let o = c7_gtcd_screening(&table, &screening);
        g_screen = Some(screening);
        o
    });
    let mut w_screen = None;
    record(8, "wb4 screening", &mut || {
        let (table, screening) = screening_run(&w, 50_000);
        let o = c8_wb4_screening(&table, &screening);
        w_screen = Some(screening);
        o
    });

    let g_greedy = greedy_values(&g, 20_000, &g_screen.unwrap());
    record(9, "gtcd multistart study", &mut || c9_gtcd_study(&g_greedy));
    let w_greedy = greedy_values(&w, 50_000, &w_screen.unwrap());
    record(10, "wb4 multistart study", &mut || c10_wb4_study(&w_greedy));

    record(11, "twisted strip basin frequencies", &mut c11_twisted_strip);
    record(12, "property suites", &mut c12_properties);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
