use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::extended::{extend_action_set, RowSource};
use super::mixture::{finalize_mixture_arm, MixtureRegistry};
use super::schedule::{build_schedule, IterationPlan, Schedule};
use crate::bandit::{truncation_index, Environment, PullSource, RegretTrace};
use crate::error::{Error, Result};
use crate::policies::{LinUcb, LinUcbParams};
use crate::seed::derive_seed;

const RESOLVE_STREAM: u64 = 0x5649_5254;

/// Bound on the lifted parameter norm `||theta^<d_i>||` used in the bias term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum NormBound {
    /// `1 + (i - 1)` in iteration `i`: one unit per coordinate block, each
    /// mixture mean being at most 1.
    Iteration,
    /// `2 ln T`, valid for every iteration at once.
    Log,
    Fixed(f64),
}

impl NormBound {
    pub fn value(&self, iteration: usize, horizon: u64) -> f64 {
        match *self {
            NormBound::Iteration => iteration as f64,
            NormBound::Log => 2.0 * (horizon as f64).ln(),
            NormBound::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlusPlusConfig {
    pub beta: f64,
    pub linucb: LinUcbParams,
    pub norm_bound: NormBound,
    /// Play truncated arms themselves (requires an expressive action set).
    pub expressive: bool,
}

impl Default for PlusPlusConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            linucb: LinUcbParams::default(),
            norm_bound: NormBound::Iteration,
            expressive: false,
        }
    }
}

/// Per-iteration audit data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationSummary {
    pub plan: IterationPlan,
    /// `sum_t <theta*, A_t> / dT_i` over the real arms actually pulled.
    pub realized_mean_reward: f64,
    /// Same average with each virtual pull replaced by its mixture mean.
    pub conditional_mean_reward: f64,
    pub virtual_pulls: u64,
}

#[derive(Clone, Debug)]
pub struct PlusPlusRun {
    pub trace: RegretTrace,
    pub schedule: Schedule,
    pub registry: MixtureRegistry,
    pub iterations: Vec<IterationSummary>,
}

/// LinUCB++ on `env` for `horizon` steps.
///
/// Each iteration runs a fresh LinUCB on the lifted problem whose rows are the
/// truncated real arms plus one unit row per earlier mixture-arm.
pub fn run_linucb_plus_plus(
    env: &Environment<'_>,
    horizon: usize,
    config: &PlusPlusConfig,
    seed: u64,
) -> Result<PlusPlusRun> {
    let actions = env.actions();
    let k = actions.len();
    let schedule = build_schedule(horizon as u64, config.beta, actions.dim())?;
    if !(0.5..1.0).contains(&config.beta) {
        return Err(Error::invalid(format!("beta = {} outside [1/2, 1)", config.beta)));
    }
    let noise_std = env.model().noise_std();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[RESOLVE_STREAM]));
    let mut registry = MixtureRegistry::new(k);
    let mut trace = RegretTrace::with_capacity(k, horizon);
    let mut iterations = Vec::new();

    for plan in schedule.executed() {
        let played = if config.expressive {
            truncation_index(actions, plan.dim)?
        } else {
            (0..k).collect()
        };
        let ext = extend_action_set(actions, plan.dim, registry.arms())?;
        let sources = ext.sources().to_vec();
        let width = config.linucb.width(horizon as u64, sources.len(), noise_std)?;
        let norm_bonus = config
            .linucb
            .norm_bonus(config.norm_bound.value(plan.index, horizon as u64))?;
        let mut learner = LinUcb::new(ext.into_matrix(), config.linucb.lambda, width, norm_bonus)?;
        let virtual_means = (1..=registry.len())
            .map(|j| registry.mixture_mean(j, env.means()))
            .collect::<Result<Vec<_>>>()?;

        let mut counts = vec![0u64; sources.len()];
        let (mut realized, mut conditional, mut virtual_pulls) = (0.0, 0.0, 0u64);
        for offset in 0..plan.length {
            let step = (plan.start + offset) as usize;
            let row = learner.select();
            let (arm, source) = match sources[row] {
                RowSource::Real(r) => {
                    let arm = played[r];
                    counts[arm] += 1;
                    conditional += env.means()[arm];
                    (arm, PullSource::Direct)
                }
                RowSource::Virtual(j) => {
                    counts[row] += 1;
                    virtual_pulls += 1;
                    conditional += virtual_means[j - 1];
                    (registry.resolve(j, &mut rng)?, PullSource::Virtual { iteration: j })
                }
            };
            realized += env.means()[arm];
            let reward = env.pull(&mut trace, step, arm, source)?;
            learner.update(row, reward)?;
        }

        let len = plan.length as f64;
        registry.push(finalize_mixture_arm(counts, plan.length, plan.index)?)?;
        iterations.push(IterationSummary {
            plan,
            realized_mean_reward: realized / len,
            conditional_mean_reward: conditional / len,
            virtual_pulls,
        });
    }

    debug_assert_eq!(trace.len(), horizon);
    Ok(PlusPlusRun {
        trace,
        schedule,
        registry,
        iterations,
    })
}
