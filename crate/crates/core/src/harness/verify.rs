//! Quick randomized property checks behind the `verify` subcommand.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{aggregate_series, run_experiment, RunOptions};
use super::export::render_table;
use crate::bandit::{PullSource, RegretTrace, TraceStep};
use crate::error::Result;
use crate::lowerbound::{
    build_adversarial_family, gaussian_kl, kl_decomposition_audit, regret_floor, FamilyParams,
    FAMILY_NOISE_STD,
};
use crate::plusplus::{build_schedule, finalize_mixture_arm, MixtureRegistry};
use crate::policies::RidgeState;
use crate::rates::{compare_rates, RateFunction, RateOrdering};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<std::result::Result<String, String>>) -> Check {
    match outcome {
        Ok(Ok(detail)) => Check { name, passed: true, detail },
        Ok(Err(detail)) => Check { name, passed: false, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

type Outcome = Result<std::result::Result<String, String>>;

fn schedule_formulas(rng: &mut ChaCha8Rng) -> Outcome {
    let n = 300;
    for _ in 0..n {
        let horizon = rng.random_range(2..=1_000_000u64);
        let beta = rng.random_range(0.5..0.99);
        let d = rng.random_range(1..=2000usize);
        let s = build_schedule(horizon, beta, d)?;
        let p = s.iterations();
        let covered: u64 = s.lengths().iter().sum();
        if covered < horizon {
            return Ok(Err(format!("T={horizon} beta={beta}: covers {covered}")));
        }
        for i in 1..=p {
            let want_d = (1u64 << (p + 2 - i)).min(d as u64) as usize;
            let want_t = (1u64 << (p + i)).min(horizon);
            if s.dims()[i as usize - 1] != want_d || s.lengths()[i as usize - 1] != want_t {
                return Ok(Err(format!("T={horizon} beta={beta} iteration {i}")));
            }
        }
    }
    let s = build_schedule(2500, 0.5, 500)?;
    if s.dims() != [128, 64, 32, 16, 8, 4] || s.lengths() != [128, 256, 512, 1024, 2048, 2500] {
        return Ok(Err(format!("T=2500: {:?} {:?}", s.dims(), s.lengths())));
    }
    Ok(Ok(format!("{n} random schedules")))
}

fn ridge_oracle(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let m = rng.random_range(1..=12);
        let len = rng.random_range(1..=100);
        let lambda = rng.random_range(0.05..2.0);
        let mut ridge = RidgeState::new(m, lambda)?;
        let mut gram = DMatrix::identity(m, m) * lambda;
        let mut moment = DVector::zeros(m);
        for _ in 0..len {
            let x = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = &x * (rng.random_range(0.1..1.0) / x.norm().max(1e-12));
            let y: f64 = rng.sample(StandardNormal);
            ridge.update(&x, y)?;
            gram += &x * x.transpose();
            moment += &x * y;
        }
        let dense = gram.lu().solve(&moment).expect("positive definite");
        let err = (ridge.theta_hat() - &dense).norm() / dense.norm().max(1e-12);
        worst = worst.max(err);
    }
    Ok(if worst < 1e-8 {
        Ok(format!("max relative error {worst:.2e}"))
    } else {
        Err(format!("relative error {worst:.2e}"))
    })
}

fn mixture_resolution(rng: &mut ChaCha8Rng) -> Outcome {
    let k = 4;
    let mut reg = MixtureRegistry::new(k);
    for j in 1..=3 {
        let counts: Vec<u64> = (0..k + j - 1).map(|_| rng.random_range(0..5)).collect();
        let mut counts = counts;
        counts[0] += 1;
        let len = counts.iter().sum();
        reg.push(finalize_mixture_arm(counts, len, j)?)?;
    }
    let flat = reg.flatten(3)?;
    let n = 50_000;
    let mut hits = vec![0usize; k];
    for _ in 0..n {
        hits[reg.resolve(3, rng)?] += 1;
    }
    for (h, p) in hits.iter().zip(&flat) {
        let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
        if (*h as f64 / n as f64 - p).abs() > 5.0 * se {
            return Ok(Err(format!("frequency {} vs {p}", *h as f64 / n as f64)));
        }
    }
    Ok(Ok(format!("{n} draws through 3 nested mixtures")))
}

fn kl_quadrature() -> Outcome {
    let s = FAMILY_NOISE_STD;
    let pdf = |x: f64, m: f64| (-(x - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let mut worst = 0.0f64;
    for &m1 in &[-0.5f64, 0.0, 0.3] {
        for &m2 in &[-0.2, 0.1, 0.6] {
            let (lo, hi, n) = (m1.min(m2) - 10.0 * s, m1.max(m2) + 10.0 * s, 4000);
            let h = (hi - lo) / n as f64;
            let f = |x: f64| pdf(x, m1) * (pdf(x, m1) / pdf(x, m2)).ln();
            let mut sum = f(lo) + f(hi);
            for i in 1..n {
                sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            worst = worst.max((sum * h / 3.0 - gaussian_kl(m1, m2)).abs());
        }
    }
    Ok(if worst < 1e-6 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("error {worst:.2e}"))
    })
}

fn family_invariants(rng: &mut ChaCha8Rng) -> Outcome {
    let mut built = 0;
    for _ in 0..200 {
        let horizon = rng.random_range(100..=100_000u64);
        // keep T^alpha (and with it the dense K x d action matrix) small
        let cap = 600f64.ln() / (horizon as f64).ln();
        let alpha = rng.random_range(0.3f64.min(cap / 2.0)..cap.min(1.0));
        let alpha_prime = rng.random_range(0.0..alpha);
        let t_alpha = (horizon as f64).powf(alpha);
        let budget = t_alpha * rng.random_range(1.0..4.0);
        let params = FamilyParams::new(horizon, alpha_prime, alpha, budget);
        let Ok(family) = build_adversarial_family(&params) else { continue };
        family.validate()?;
        if family.delta() > 1.0 / 32.0 + 1e-15 {
            return Ok(Err(format!("Delta = {} > 2^-5", family.delta())));
        }
        let trace = simulate_arms(rng, family.actions().len(), 200);
        for i in [1, family.k()] {
            let (lhs, rhs) = kl_decomposition_audit(&trace, &family, i)?;
            if (lhs - rhs).abs() > 1e-12 * rhs.max(1e-300) {
                return Ok(Err(format!("audit {lhs} vs {rhs}")));
            }
        }
        built += 1;
        if built == 30 {
            break;
        }
    }
    let floor = regret_floor(2500, 0.5, 50.0)?;
    let want = 2500f64.powf(1.5) / 1024.0 / 50.0;
    if (floor - want).abs() > 1e-9 * want {
        return Ok(Err(format!("regret_floor = {floor}, want {want}")));
    }
    Ok(Ok(format!("{built} families")))
}

fn simulate_arms(rng: &mut ChaCha8Rng, arms: usize, len: usize) -> RegretTrace {
    let mut trace = RegretTrace::new(arms);
    for _ in 0..len {
        trace.push(TraceStep {
            arm: rng.random_range(0..arms),
            reward: 0.0,
            regret: 0.0,
            source: PullSource::Direct,
        });
    }
    trace
}

fn pareto_incomparable() -> Outcome {
    let a = RateFunction::pareto(0.5)?;
    let b = RateFunction::pareto(0.7)?;
    let ord = compare_rates(&a, &b, &[0.0, 0.2, 0.4, 0.8])?;
    Ok(if ord == RateOrdering::Incomparable && a.eval(0.0) == 0.5 && a.eval(0.4) == 0.9 {
        Ok("theta_0.5 vs theta_0.7 incomparable".into())
    } else {
        Err(format!("{ord:?}"))
    })
}

fn aggregation_oracle(rng: &mut ChaCha8Rng) -> Outcome {
    let n = rng.random_range(2..=10);
    let len = 50;
    let series: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..len)
                .scan(0.0, |acc, _| {
                    *acc += rng.random_range(0.0..1.0);
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
    let stats = aggregate_series(&refs)?;
    for t in 0..len {
        let col: Vec<f64> = series.iter().map(|s| s[t]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if stats.mean[t] != mean || stats.band[t] != 2.0 * var.sqrt() {
            return Ok(Err(format!("step {t}")));
        }
    }
    Ok(Ok(format!("{n} traces of length {len}")))
}

fn tiny_determinism() -> Outcome {
    let config = ExperimentConfig {
        horizon: 300,
        arms: 30,
        dim: 16,
        d_star: super::config::DStar::One(3),
        trials: 2,
        ..Default::default()
    };
    let options = RunOptions {
        parallelism: Some(1),
        ..Default::default()
    };
    let a = render_table(&run_experiment(&config, &options)?)?;
    let b = render_table(&run_experiment(&config, &options)?)?;
    Ok(if a == b {
        Ok(format!("{} identical bytes", a.len()))
    } else {
        Err("tables differ".into())
    })
}

/// Runs every check; each one is seeded from `seed`.
pub fn run_verify(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("schedule formulas", schedule_formulas(&mut rng)),
        check("ridge vs dense solve", ridge_oracle(&mut rng)),
        check("mixture resolution", mixture_resolution(&mut rng)),
        check("gaussian KL vs quadrature", kl_quadrature()),
        check("adversarial family and KL audit", family_invariants(&mut rng)),
        check("Pareto incomparability", pareto_incomparable()),
        check("aggregation vs naive", aggregation_oracle(&mut rng)),
        check("determinism", tiny_determinism()),
    ]
}
