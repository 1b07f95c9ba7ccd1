use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::export::{write_results, Format};
use super::instance::{make_sparse_model, sample_sphere_arms};
use crate::bandit::{expressive_closure, ActionSet, Environment, RegretTrace};
use crate::corral::{run_corral_within_schedule, run_smooth_corral};
use crate::error::{Error, Result};
use crate::plusplus::{build_schedule, run_linucb_plus_plus};
use crate::policies::run_linucb;
use crate::rates::hardness_level;
use crate::seed::derive_seed;

const ARMS_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const ALGORITHM_STREAM: u64 = 3;

/// Per-step mean and band of cumulative regret across trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub mean: Vec<f64>,
    /// `2 x` sample standard deviation (n - 1 denominator).
    pub band: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub algorithm: String,
    pub stats: CurveStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub d_star: usize,
    pub alpha: f64,
    pub mean_terminal_regret: f64,
    pub band_halfwidth: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub config_hash: String,
    /// Seed of every trial, in trial order.
    pub seeds: Vec<u64>,
    pub curves: Vec<Curve>,
    pub sweep: Vec<SweepRow>,
}

impl AggregateResult {
    pub fn curve(&self, algorithm: &str) -> Option<&CurveStats> {
        self.curves
            .iter()
            .find(|c| c.algorithm == algorithm)
            .map(|c| &c.stats)
    }
}

/// Mean and `2 sigma` band of a set of equally long series.
pub fn aggregate_series(series: &[&[f64]]) -> Result<CurveStats> {
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::invalid(format!(
            "traces of mixed lengths {len} and {}",
            bad.len()
        )));
    }
    let n = series.len() as f64;
    let mut mean = vec![0.0; len];
    let mut band = vec![0.0; len];
    for t in 0..len {
        let m = series.iter().map(|s| s[t]).sum::<f64>() / n;
        mean[t] = m;
        if series.len() > 1 {
            let ss = series.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>();
            band[t] = 2.0 * (ss / (n - 1.0)).sqrt();
        }
    }
    Ok(CurveStats { mean, band })
}

/// Aggregates the cumulative regret of several traces of one algorithm.
pub fn aggregate_trials(traces: &[RegretTrace]) -> Result<CurveStats> {
    let series: Vec<&[f64]> = traces.iter().map(|t| t.cumulative()).collect();
    aggregate_series(&series)
}

/// Knobs that shape execution but not results.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` lets rayon decide.
    pub parallelism: Option<usize>,
    /// Where completed trials are written if a trial fails.
    pub partial_output: Option<PathBuf>,
}

/// Traces of every configured algorithm in one trial, in configuration order.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub seed: u64,
    pub traces: Vec<RegretTrace>,
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[trial as u64])
}

fn trial_arms(config: &ExperimentConfig, seed: u64) -> Result<ActionSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ARMS_STREAM]));
    let arms = sample_sphere_arms(config.dim, config.arms, &mut rng)?;
    if config.expressive {
        let schedule = build_schedule(config.horizon as u64, config.beta, config.dim)?;
        expressive_closure(&arms, schedule.dims())
    } else {
        Ok(arms)
    }
}

fn run_algorithm(
    algorithm: Algorithm,
    env: &Environment<'_>,
    config: &ExperimentConfig,
    d_star: usize,
    seed: u64,
) -> Result<RegretTrace> {
    let t = config.horizon;
    let s = derive_seed(seed, &[ALGORITHM_STREAM, algorithm as u64]);
    match algorithm {
        Algorithm::LinUcbPlusPlus => Ok(run_linucb_plus_plus(env, t, &config.plus_plus(), s)?.trace),
        Algorithm::LinUcb => run_linucb(env, t, config.dim, &config.linucb()),
        Algorithm::Oracle => run_linucb(env, t, d_star, &config.linucb()),
        Algorithm::SmoothCorral => Ok(run_smooth_corral(env, t, &config.smooth_corral(), s)?.trace),
        Algorithm::CorralSchedule => {
            Ok(run_corral_within_schedule(env, t, &config.corral_schedule(), s)?.trace)
        }
    }
}

/// One paired trial: fresh arms, shared noise stream, every algorithm.
pub fn run_trial(config: &ExperimentConfig, d_star: usize, trial: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(config.seed, trial);
    let wrap = |algorithm: &str, e: Error| Error::TrialFailed {
        trial,
        algorithm: algorithm.to_string(),
        source: Box::new(e),
    };
    let arms = trial_arms(config, seed).map_err(|e| wrap("instance", e))?;
    let model = make_sparse_model(config.dim, d_star, config.noise_std).map_err(|e| wrap("instance", e))?;
    let env = Environment::new(&arms, &model, derive_seed(seed, &[NOISE_STREAM]))
        .map_err(|e| wrap("instance", e))?;
    let traces = config
        .algorithms
        .iter()
        .map(|&a| run_algorithm(a, &env, config, d_star, seed).map_err(|e| wrap(a.name(), e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { seed, traces })
}

fn in_pool<T: Send>(parallelism: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match parallelism {
        None => Ok(job()),
        Some(0) => Err(Error::Config("parallelism must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs `trials` units through `runner` in parallel, returning outcomes in
/// trial order. On failure the completed trials are handed to `on_failure`
/// before the first error (lowest trial index) is returned.
pub fn run_trials_with<F>(
    trials: usize,
    parallelism: Option<usize>,
    runner: F,
    on_failure: impl FnOnce(&[TrialOutcome]) -> Result<()>,
) -> Result<Vec<TrialOutcome>>
where
    F: Fn(usize) -> Result<TrialOutcome> + Sync + Send,
{
    let results: Vec<Result<TrialOutcome>> =
        in_pool(parallelism, || (0..trials).into_par_iter().map(&runner).collect())?;
    if results.iter().all(|r| r.is_ok()) {
        return Ok(results.into_iter().map(|r| r.expect("checked")).collect());
    }
    let mut done = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(o) => done.push(o),
            Err(e) if first_err.is_none() => first_err = Some(e),
            Err(_) => {}
        }
    }
    on_failure(&done)?;
    Err(first_err.expect("at least one failure"))
}

fn curves_from(config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Result<Vec<Curve>> {
    if outcomes.is_empty() {
        return Ok(Vec::new());
    }
    config
        .algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let series: Vec<&[f64]> = outcomes.iter().map(|o| o.traces[i].cumulative()).collect();
            Ok(Curve {
                algorithm: a.name().to_string(),
                stats: aggregate_series(&series)?,
            })
        })
        .collect()
}

fn persist_partial(options: &RunOptions, build: impl FnOnce() -> Result<AggregateResult>) -> Result<()> {
    if let Some(path) = &options.partial_output {
        write_results(&build()?, Format::Table, path, true)?;
    }
    Ok(())
}

/// Multi-trial run at the first configured `d_star`.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<AggregateResult> {
    config.validate()?;
    let d_star = config.d_star.values()[0];
    let hash = config.hash();
    let outcomes = run_trials_with(
        config.trials,
        options.parallelism,
        |trial| run_trial(config, d_star, trial),
        |done| {
            persist_partial(options, || {
                Ok(AggregateResult {
                    config_hash: hash.clone(),
                    seeds: done.iter().map(|o| o.seed).collect(),
                    curves: curves_from(config, done)?,
                    sweep: Vec::new(),
                })
            })
        },
    )?;
    Ok(AggregateResult {
        config_hash: hash.clone(),
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        curves: curves_from(config, &outcomes)?,
        sweep: Vec::new(),
    })
}

fn sweep_rows(config: &ExperimentConfig, d_star: usize, outcomes: &[TrialOutcome]) -> Result<Vec<SweepRow>> {
    let alpha = hardness_level(config.horizon as u64, d_star as u64)?;
    config
        .algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let terminal: Vec<f64> = outcomes.iter().map(|o| o.traces[i].terminal_regret()).collect();
            let stats = aggregate_series(&terminal.iter().map(std::slice::from_ref).collect::<Vec<_>>())?;
            Ok(SweepRow {
                algorithm: a.name().to_string(),
                d_star,
                alpha,
                mean_terminal_regret: stats.mean[0],
                band_halfwidth: stats.band[0],
            })
        })
        .collect()
}

/// Terminal regret against hardness level over the `d_star` grid. Trials at
/// different `d_star` share seeds, so arms and noise are paired across the grid.
pub fn run_sweep(config: &ExperimentConfig, options: &RunOptions) -> Result<AggregateResult> {
    config.validate()?;
    let hash = config.hash();
    let mut rows = Vec::new();
    let mut seeds = Vec::new();
    for d_star in config.d_star.values() {
        let outcomes = run_trials_with(
            config.trials,
            options.parallelism,
            |trial| run_trial(config, d_star, trial),
            |done| {
                persist_partial(options, || {
                    let mut partial = rows.clone();
                    if !done.is_empty() {
                        partial.extend(sweep_rows(config, d_star, done)?);
                    }
                    Ok(AggregateResult {
                        config_hash: hash.clone(),
                        seeds: done.iter().map(|o| o.seed).collect(),
                        curves: Vec::new(),
                        sweep: partial,
                    })
                })
            },
        )?;
        seeds = outcomes.iter().map(|o| o.seed).collect();
        rows.extend(sweep_rows(config, d_star, &outcomes)?);
    }
    Ok(AggregateResult {
        config_hash: hash,
        seeds,
        curves: Vec::new(),
        sweep: rows,
    })
}
