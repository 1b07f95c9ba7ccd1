//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so the report is printed even when every check
//! passes. The process exits non-zero if any criterion fails.

use std::time::Instant;

use linucbpp::bandit::{Environment, PullSource, RegretTrace};
use linucbpp::harness::{
    make_sparse_model, render_table, run_experiment, run_sweep, run_trial, sample_sphere_arms,
    write_results, Algorithm, DStar, ExperimentConfig, Format, RunOptions, TrialOutcome,
};
use linucbpp::lowerbound::{
    build_adversarial_family, gaussian_kl, kl_decomposition_audit, regret_floor, FamilyParams,
    FAMILY_NOISE_STD,
};
use linucbpp::plusplus::{build_schedule, run_linucb_plus_plus, PlusPlusConfig};
use linucbpp::policies::{run_linucb, LinUcbParams, RidgeState};
use linucbpp::rates::{compare_rates, RateFunction, RateOrdering};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn c1_schedule() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 0..1000 {
        let horizon: u64 = if n % 2 == 0 {
            rng.random_range(2..=1_000_000)
        } else {
            // log-uniform so small horizons are well represented
            2f64.powf(rng.random_range(1.0..(1e6f64).log2())).round() as u64
        };
        let beta: f64 = rng.random_range(0.5..0.99);
        let d = 1usize << rng.random_range(0..12);
        let s = match build_schedule(horizon, beta, d) {
            Ok(s) => s,
            Err(e) => return verdict(false, format!("T={horizon} beta={beta}: {e}")),
        };
        // p is the least integer with 2^p >= T^beta (up to float snapping)
        let target = beta * (horizon as f64).log2();
        let mut p = 1u32;
        while (p as f64) < target - 1e-9 {
            p += 1;
        }
        if s.iterations() != p {
            return verdict(false, format!("T={horizon} beta={beta}: p={} want {p}", s.iterations()));
        }
        let dims: Vec<usize> = (1..=p).map(|i| 2usize.pow(p + 2 - i).min(d)).collect();
        let lens: Vec<u64> = (1..=p).map(|i| 2u64.saturating_pow(p + i).min(horizon)).collect();
        if s.dims() != dims.as_slice() || s.lengths() != lens.as_slice() {
            return verdict(false, format!("T={horizon} beta={beta}: formula mismatch"));
        }
        if lens.iter().sum::<u64>() < horizon {
            return verdict(false, format!("T={horizon} beta={beta}: does not cover T"));
        }
    }
    let s = build_schedule(2500, 0.5, 500).unwrap();
    let ok = s.iterations() == 6
        && s.dims() == [128, 64, 32, 16, 8, 4]
        && s.lengths() == [128, 256, 512, 1024, 2048, 2500];
    verdict(ok, format!("1000 samples; T=2500: d={:?} dT={:?}", s.dims(), s.lengths()))
}

fn c2_ridge() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=20);
        let len = rng.random_range(1..=200);
        let lambda = rng.random_range(0.01..1.0);
        let mut ridge = RidgeState::new(m, lambda).unwrap();
        let mut xs = Vec::with_capacity(len);
        let mut ys = Vec::with_capacity(len);
        for _ in 0..len {
            let x = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = &x * (rng.random_range(0.05..1.0) / x.norm());
            let y: f64 = rng.sample(StandardNormal);
            ridge.update(&x, y).unwrap();
            xs.push(x);
            ys.push(y);
        }
        let design = DMatrix::from_fn(len, m, |r, c| xs[r][c]);
        let gram = design.transpose() * &design + DMatrix::identity(m, m) * lambda;
        let rhs = design.transpose() * DVector::from_vec(ys);
        let dense = gram.cholesky().expect("positive definite").solve(&rhs);
        worst = worst.max((ridge.theta_hat() - &dense).norm() / dense.norm());
    }
    verdict(worst < 1e-8, format!("100 sequences, max relative error {worst:.2e} (tol 1e-8)"))
}

fn c3_mixture_mean() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let actions = sample_sphere_arms(200, 300, &mut rng).unwrap();
    let model = make_sparse_model(200, 12, 0.1).unwrap();
    let env = Environment::new(&actions, &model, 33).unwrap();
    let run = run_linucb_plus_plus(&env, 2000, &PlusPlusConfig::default(), 7).unwrap();
    let n = 100_000;
    let mut worst = 0.0f64;
    for summary in &run.iterations {
        let j = summary.plan.index;
        let draws: Vec<f64> = (0..n)
            .map(|_| env.means()[run.registry.resolve(j, &mut rng).unwrap()])
            .collect();
        let m = mean(&draws);
        let var = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt().max(1e-12);
        let z = (m - summary.conditional_mean_reward).abs() / se;
        worst = worst.max(z);
        if j == 1 && summary.realized_mean_reward != summary.conditional_mean_reward {
            return verdict(false, "iteration 1 has virtual pulls");
        }
    }
    verdict(
        worst <= 4.0,
        format!("{} frozen mixtures x 1e5 draws, worst deviation {worst:.2} SE (tol 4)", run.iterations.len()),
    )
}

fn quadrature_kl(m1: f64, m2: f64) -> f64 {
    let s = FAMILY_NOISE_STD;
    let log_pdf = |x: f64, m: f64| -(x - m).powi(2) / (2.0 * s * s) - (s * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let (lo, hi) = (m1.min(m2) - 14.0 * s, m1.max(m2) + 14.0 * s);
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let f = |x: f64| log_pdf(x, m1).exp() * (log_pdf(x, m1) - log_pdf(x, m2));
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn c4_kl() -> Verdict {
    let grid: Vec<f64> = (0..20).map(|i| -1.0 + 2.0 * i as f64 / 19.0).collect();
    let mut worst = 0.0f64;
    for &a in &grid {
        for &b in &grid {
            worst = worst.max((gaussian_kl(a, b) - quadrature_kl(a, b)).abs());
        }
    }
    let family = build_adversarial_family(&FamilyParams::new(2500, 0.25, 0.5, 50.0)).unwrap();
    let model0 = family.model(0).unwrap();
    let env = Environment::new(family.actions(), &model0, 0).unwrap();
    let mut unequal = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trace_no in 0..50 {
        let trace: RegretTrace = if trace_no % 2 == 0 {
            let env = Environment::new(family.actions(), &model0, trace_no).unwrap();
            run_linucb(&env, 400, family.dim(), &LinUcbParams::default()).unwrap()
        } else {
            let mut t = RegretTrace::new(family.actions().len());
            for step in 0..400 {
                let arm = rng.random_range(0..family.actions().len());
                env.pull(&mut t, step, arm, PullSource::Direct).unwrap();
            }
            t
        };
        let i = rng.random_range(1..=family.k());
        let (lhs, rhs) = kl_decomposition_audit(&trace, &family, i).unwrap();
        if lhs != rhs {
            unequal += 1;
        }
    }
    verdict(
        worst < 1e-6 && unequal == 0,
        format!("20x20 grid max |KL - quadrature| {worst:.2e} (tol 1e-6); audit unequal pairs {unequal}/50"),
    )
}

fn c5_family() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut built = 0;
    let mut tries = 0;
    while built < 50 && tries < 100_000 {
        tries += 1;
        let horizon: u64 = rng.random_range(16..=50_000);
        let ln_t = (horizon as f64).ln();
        let alpha = rng.random_range(0.05..(800f64.ln() / ln_t).min(1.0));
        let alpha_prime = rng.random_range(0.0..alpha);
        let ta = (horizon as f64).powf(alpha);
        let tap = (horizon as f64).powf(alpha_prime);
        let budget = ta * rng.random_range(1.0..3.0);
        let k = (ta / 2.0).floor();
        if k < (ta / 4.0).max(tap).max(2.0) || tap < 1.0 {
            continue;
        }
        let family = match build_adversarial_family(&FamilyParams::new(horizon, alpha_prime, alpha, budget)) {
            Ok(f) => f,
            Err(e) => return verdict(false, format!("T={horizon} a'={alpha_prime} a={alpha} B={budget}: {e}")),
        };
        let k = k as usize;
        let delta = k as f64 / (32.0 * budget);
        if family.k() != k || (family.delta() - delta).abs() > 1e-15 || delta > 1.0 / 32.0 {
            return verdict(false, format!("T={horizon}: K or Delta mismatch"));
        }
        let a = family.actions();
        let m0 = a.means(family.theta(0).unwrap()).unwrap();
        for i in 1..=k {
            let theta = family.theta(i).unwrap();
            if theta.norm() > 1.0 || (theta.norm() - (1.25f64).sqrt() * delta).abs() > 1e-12 {
                return verdict(false, format!("||theta_{i}|| = {}", theta.norm()));
            }
            let mi = a.means(theta).unwrap();
            let best = mi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let arm = family.arm_of(i);
            // a_i earns Delta, a_0 earns Delta / 2, everything else 0
            if mi[arm] != best || (mi[arm] - delta).abs() > 1e-15 || (mi[0] - 0.5 * delta).abs() > 1e-15 {
                return verdict(false, format!("instance {i}: wrong optimal arm or gap"));
            }
            let support: Vec<usize> = (0..family.dim()).filter(|&c| theta[c] != 0.0).collect();
            if support.len() != 2 || support[1] < tap.floor() as usize {
                return verdict(false, format!("instance {i}: support {support:?}"));
            }
            if m0[arm] != 0.0 {
                return verdict(false, format!("theta_0 rewards arm {arm}"));
            }
        }
        if a.matrix().row_iter().any(|r| (r.norm() - 1.0).abs() > 1e-15) {
            return verdict(false, "non-unit action");
        }
        built += 1;
    }
    let floor = regret_floor(2500, 0.5, 50.0).unwrap();
    let want = 2500f64.powf(1.5) / 1024.0 / 50.0;
    let floor_ok = (floor - want).abs() <= 1e-9 * want;
    verdict(
        built == 50 && floor_ok,
        format!("{built} families valid; regret_floor(2500, 0.5, 50) = {floor} (want {want})"),
    )
}

fn c6_pareto() -> Verdict {
    let a = RateFunction::pareto(0.5).unwrap();
    let b = RateFunction::pareto(0.7).unwrap();
    let ord = compare_rates(&a, &b, &[0.0, 0.1, 0.4, 0.7, 1.0]).unwrap();
    let ok = ord == RateOrdering::Incomparable && a.eval(0.0) == 0.5 && a.eval(0.4) == 0.9 && a.eval(0.0) < 0.7 && a.eval(0.4) > 0.7;
    verdict(ok, format!("{ord:?}; theta_0.5(0) = {}, theta_0.5(0.4) = {}", a.eval(0.0), a.eval(0.4)))
}

fn reference_config() -> ExperimentConfig {
    ExperimentConfig {
        algorithms: vec![
            Algorithm::LinUcbPlusPlus,
            Algorithm::LinUcb,
            Algorithm::SmoothCorral,
            Algorithm::Oracle,
        ],
        trials: 20,
        ..Default::default()
    }
}

fn fast_config() -> ExperimentConfig {
    ExperimentConfig {
        horizon: 2000,
        arms: 300,
        dim: 200,
        trials: 10,
        algorithms: vec![Algorithm::LinUcbPlusPlus, Algorithm::LinUcb, Algorithm::SmoothCorral],
        ..Default::default()
    }
}

fn trials(config: &ExperimentConfig) -> Vec<TrialOutcome> {
    (0..config.trials)
        .map(|t| run_trial(config, 12, t).expect("trial runs"))
        .collect()
}

/// Column `a` of the per-trial terminal regrets, and of the last-500-step increments.
fn terminal(outcomes: &[TrialOutcome], a: usize) -> (f64, f64) {
    let ends: Vec<f64> = outcomes.iter().map(|o| o.traces[a].terminal_regret()).collect();
    let tails: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            let c = o.traces[a].cumulative();
            c[c.len() - 1] - c[c.len() - 501]
        })
        .collect();
    (mean(&ends), mean(&tails))
}

fn ordering(outcomes: &[TrialOutcome], label: &str) -> Verdict {
    let (pp, pp_tail) = terminal(outcomes, 0);
    let (lin, lin_tail) = terminal(outcomes, 1);
    let (corral, _) = terminal(outcomes, 2);
    verdict(
        pp < lin && pp < corral && pp_tail < lin_tail,
        format!(
            "{label}: LinUCB++ {pp:.1}, LinUCB {lin:.1}, Smooth Corral {corral:.1}; last-500 increment LinUCB++ {pp_tail:.1} vs LinUCB {lin_tail:.1}"
        ),
    )
}

fn c8_sweep() -> Verdict {
    let config = ExperimentConfig {
        d_star: DStar::Many(vec![5, 15, 25, 35]),
        trials: 10,
        algorithms: vec![Algorithm::LinUcbPlusPlus, Algorithm::LinUcb],
        ..Default::default()
    };
    let result = run_sweep(&config, &RunOptions::default()).expect("sweep runs");
    let col = |name: &str| -> Vec<f64> {
        result
            .sweep
            .iter()
            .filter(|r| r.algorithm == name)
            .map(|r| r.mean_terminal_regret)
            .collect()
    };
    let (pp, lin) = (col("linucb++"), col("linucb"));
    let lo = lin.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi / lo - 1.0;
    let below = pp.iter().zip(&lin).all(|(a, b)| a < b);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join("/");
    verdict(
        spread < 0.15 && below,
        format!(
            "d* = 5/15/25/35: LinUCB {} (max/min - 1 = {:.1}%, tol 15%), LinUCB++ {}",
            fmt(&lin),
            100.0 * spread,
            fmt(&pp)
        ),
    )
}

fn c9_oracle(outcomes: &[TrialOutcome]) -> Verdict {
    let wins = outcomes
        .iter()
        .filter(|o| o.traces[3].terminal_regret() < o.traces[1].terminal_regret())
        .count();
    verdict(
        wins * 5 >= outcomes.len() * 4,
        format!("oracle beats LinUCB in {wins}/{} paired trials (need 80%)", outcomes.len()),
    )
}

fn c10_determinism() -> Verdict {
    let config = fast_config();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (n, par) in [(0, Some(1)), (1, None)] {
        let options = RunOptions {
            parallelism: par,
            ..Default::default()
        };
        let result = run_experiment(&config, &options).unwrap();
        let path = dir.path().join(format!("run{n}.csv"));
        write_results(&result, Format::Table, &path, false).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
        assert_eq!(render_table(&result).unwrap().into_bytes(), bytes[n]);
    }
    verdict(
        bytes[0] == bytes[1],
        format!("two fast-mode runs, {} bytes each, identical = {}", bytes[0].len(), bytes[0] == bytes[1]),
    )
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |n: u32, title: &str, run: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = run();
        let status = if v.ok { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {title} ({:.1}s): {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.ok {
            failed.push(n);
        }
    };
    report(1, "schedule validity", &mut c1_schedule);
    report(2, "ridge oracle equivalence", &mut c2_ridge);
    report(3, "mixture-arm mean identity", &mut c3_mixture_mean);
    report(4, "KL identity", &mut c4_kl);
    report(5, "adversarial family validity", &mut c5_family);
    report(6, "Pareto incomparability", &mut c6_pareto);
    let mut full = Vec::new();
    report(7, "reference-setup ordering", &mut || {
        full = trials(&reference_config());
        let fast = trials(&fast_config());
        let (a, b) = (ordering(&full, "full, 20 trials"), ordering(&fast, "fast, 10 trials"));
        verdict(a.ok && b.ok, format!("{}; {}", a.detail, b.detail))
    });
    report(8, "sweep: LinUCB flat, LinUCB++ below", &mut c8_sweep);
    report(9, "oracle sandwich", &mut || c9_oracle(&full));
    report(10, "determinism", &mut c10_determinism);
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
