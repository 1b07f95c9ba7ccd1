use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::master::{corral_step, BaseLearner, CorralState, MasterConstants, Pick, SmoothedBase};
use crate::bandit::{Environment, PullSource, RegretTrace};
use crate::error::{Error, Result};
use crate::plusplus::{build_schedule, finalize_mixture_arm, MixtureRegistry, Schedule};
use crate::policies::{LinUcb, LinUcbParams, UcbState, DEFAULT_UCB_SCALE};
use crate::seed::derive_seed;

const MASTER_STREAM: u64 = 0x434f_5252;

/// LinUCB on the first `dim` coordinates of the real arms.
pub struct LinUcbBase {
    learner: LinUcb,
    last: Option<usize>,
}

impl LinUcbBase {
    pub fn new(env: &Environment<'_>, horizon: u64, dim: usize, params: &LinUcbParams) -> Result<Self> {
        let actions = env.actions();
        if dim == 0 || dim > actions.dim() {
            return Err(Error::invalid(format!(
                "base dimension {dim} outside 1..={}",
                actions.dim()
            )));
        }
        let width = params.width(horizon, actions.len(), env.model().noise_std())?;
        let bonus = params.norm_bonus(1.0)?;
        Ok(Self {
            learner: LinUcb::new(actions.truncated(dim), params.lambda, width, bonus)?,
            last: None,
        })
    }
}

impl BaseLearner for LinUcbBase {
    fn select(&mut self, _: &mut dyn RngCore) -> Result<Pick> {
        let arm = self.learner.select();
        self.last = Some(arm);
        Ok(Pick::direct(arm))
    }

    fn update(&mut self, reward: f64) -> Result<()> {
        let arm = self
            .last
            .take()
            .ok_or_else(|| Error::invalid("update without a pending selection"))?;
        self.learner.update(arm, reward)
    }
}

/// UCB over the virtual mixture-arms registered so far.
pub struct VirtualUcbBase<'a> {
    ucb: UcbState,
    registry: &'a MixtureRegistry,
    last: Option<usize>,
}

impl<'a> VirtualUcbBase<'a> {
    pub fn new(registry: &'a MixtureRegistry) -> Result<Self> {
        if registry.is_empty() {
            return Err(Error::invalid("no virtual arms to play"));
        }
        Ok(Self {
            ucb: UcbState::new(registry.len(), DEFAULT_UCB_SCALE)?,
            registry,
            last: None,
        })
    }
}

impl BaseLearner for VirtualUcbBase<'_> {
    fn select(&mut self, rng: &mut dyn RngCore) -> Result<Pick> {
        let v = self.ucb.select(self.ucb.rounds() + 1)?;
        self.last = Some(v);
        let arm = self.registry.resolve(v + 1, rng)?;
        Ok(Pick {
            arm,
            via: Some(v + 1),
        })
    }

    fn update(&mut self, reward: f64) -> Result<()> {
        let v = self
            .last
            .take()
            .ok_or_else(|| Error::invalid("update without a pending selection"))?;
        self.ucb.update(v, reward)
    }
}

/// How the master learning rate is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum EtaRule {
    /// `1 / sqrt(M T)` with `M = ceil(log2 d)`.
    LogDim,
    /// `T^(-beta)`.
    PowerOfHorizon(f64),
    Fixed(f64),
}

impl EtaRule {
    pub fn eta(&self, horizon: u64, ambient_dim: usize) -> Result<f64> {
        let t = horizon as f64;
        let eta = match *self {
            EtaRule::LogDim => 1.0 / (log2_dims(ambient_dim).max(1) as f64 * t).sqrt(),
            EtaRule::PowerOfHorizon(beta) => t.powf(-beta),
            EtaRule::Fixed(v) => v,
        };
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("learning rate {eta} must be > 0")));
        }
        Ok(eta)
    }
}

fn log2_dims(d: usize) -> u32 {
    if d <= 1 {
        0
    } else {
        usize::BITS - (d - 1).leading_zeros()
    }
}

/// `{2^0, ..., 2^M}` capped at `d`, `M = ceil(log2 d)`, duplicates removed.
pub fn default_base_dims(d: usize) -> Vec<usize> {
    let mut dims: Vec<usize> = (0..=log2_dims(d)).map(|e| (1usize << e).min(d)).collect();
    dims.dedup();
    dims
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothCorralConfig {
    /// `None` means [`default_base_dims`] of the ambient dimension.
    pub base_dims: Option<Vec<usize>>,
    pub eta: EtaRule,
    pub master: MasterConstants,
    pub linucb: LinUcbParams,
}

impl Default for SmoothCorralConfig {
    fn default() -> Self {
        Self {
            base_dims: None,
            eta: EtaRule::LogDim,
            master: MasterConstants::default(),
            linucb: LinUcbParams::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorralRun {
    pub trace: RegretTrace,
    pub base_dims: Vec<usize>,
    pub eta: f64,
    /// Master sampling distribution after the last step.
    pub final_probabilities: Vec<f64>,
    pub selections: Vec<u64>,
}

/// Smooth Corral over truncated-dimension LinUCB bases.
pub fn run_smooth_corral(
    env: &Environment<'_>,
    horizon: usize,
    config: &SmoothCorralConfig,
    seed: u64,
) -> Result<CorralRun> {
    let d = env.actions().dim();
    let base_dims = config
        .base_dims
        .clone()
        .unwrap_or_else(|| default_base_dims(d));
    if base_dims.is_empty() {
        return Err(Error::invalid("no base dimensions"));
    }
    let t = horizon as u64;
    let eta = config.eta.eta(t, d)?;
    let mut bases = base_dims
        .iter()
        .map(|&m| {
            LinUcbBase::new(env, t, m, &config.linucb)
                .map(|b| SmoothedBase::new(Box::new(b) as Box<dyn BaseLearner>))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut state = CorralState::new(bases.len(), t, eta, &config.master)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[MASTER_STREAM]));
    let mut trace = RegretTrace::with_capacity(env.actions().len(), horizon);
    let mut selections = vec![0u64; bases.len()];
    for step in 0..horizon {
        let out = corral_step(
            &mut state,
            &mut bases,
            &mut |base, pick| env.pull(&mut trace, step, pick.arm, PullSource::Base { index: base }),
            &mut rng,
        )?;
        selections[out.base] += 1;
    }
    Ok(CorralRun {
        trace,
        base_dims,
        eta,
        final_probabilities: state.probabilities().to_vec(),
        selections,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledCorralConfig {
    pub beta: f64,
    pub master: MasterConstants,
    pub linucb: LinUcbParams,
}

impl Default for ScheduledCorralConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            master: MasterConstants::default(),
            linucb: LinUcbParams::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScheduledCorralRun {
    pub trace: RegretTrace,
    pub schedule: Schedule,
    pub registry: MixtureRegistry,
    /// Learning rate used in each executed iteration.
    pub etas: Vec<f64>,
}

/// LinUCB++ schedule without the expressiveness requirement: each iteration
/// corrals a truncated LinUCB with a UCB over the earlier mixture-arms.
pub fn run_corral_within_schedule(
    env: &Environment<'_>,
    horizon: usize,
    config: &ScheduledCorralConfig,
    seed: u64,
) -> Result<ScheduledCorralRun> {
    let actions = env.actions();
    let k = actions.len();
    let schedule = build_schedule(horizon as u64, config.beta, actions.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[MASTER_STREAM]));
    let mut registry = MixtureRegistry::new(k);
    let mut trace = RegretTrace::with_capacity(k, horizon);
    let mut etas = Vec::new();

    for plan in schedule.executed() {
        let eta = 1.0 / ((plan.dim as u64 * plan.planned) as f64).sqrt();
        let mut counts = vec![0u64; k + registry.len()];
        {
            let mut bases = vec![SmoothedBase::new(Box::new(LinUcbBase::new(
                env,
                horizon as u64,
                plan.dim,
                &config.linucb,
            )?) as Box<dyn BaseLearner>)];
            if !registry.is_empty() {
                bases.push(SmoothedBase::new(Box::new(VirtualUcbBase::new(&registry)?)));
            }
            let mut state = CorralState::new(bases.len(), plan.length, eta, &config.master)?;
            for offset in 0..plan.length {
                let step = (plan.start + offset) as usize;
                corral_step(
                    &mut state,
                    &mut bases,
                    &mut |base, pick| {
                        let source = match pick.via {
                            Some(j) => {
                                counts[k + j - 1] += 1;
                                PullSource::Virtual { iteration: j }
                            }
                            None => {
                                counts[pick.arm] += 1;
                                PullSource::Base { index: base }
                            }
                        };
                        env.pull(&mut trace, step, pick.arm, source)
                    },
                    &mut rng,
                )?;
            }
        }
        registry.push(finalize_mixture_arm(counts, plan.length, plan.index)?)?;
        etas.push(eta);
    }
    Ok(ScheduledCorralRun {
        trace,
        schedule,
        registry,
        etas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{make_sparse_model, sample_sphere_arms};
    use crate::policies::run_linucb;

    #[test]
    fn default_bases_for_ambient_500() {
        assert_eq!(default_base_dims(500), vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 500]);
        assert_eq!(default_base_dims(512), vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512]);
        assert_eq!(default_base_dims(1), vec![1]);
        assert_eq!(default_base_dims(3), vec![1, 2, 3]);
    }

    #[test]
    fn eta_rules() {
        let reference = EtaRule::LogDim.eta(2500, 500).unwrap();
        assert!((reference - 1.0 / (9.0f64 * 2500.0).sqrt()).abs() < 1e-15);
        assert!((EtaRule::PowerOfHorizon(0.5).eta(2500, 500).unwrap() - 0.02).abs() < 1e-15);
        assert!(EtaRule::Fixed(0.0).eta(10, 2).is_err());
    }

    #[test]
    fn single_ambient_base_reproduces_linucb() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arms = sample_sphere_arms(20, 40, &mut rng).unwrap();
        let model = make_sparse_model(20, 4, 0.1).unwrap();
        let env = Environment::new(&arms, &model, 17).unwrap();
        let config = SmoothCorralConfig {
            base_dims: Some(vec![20]),
            ..Default::default()
        };
        let corral = run_smooth_corral(&env, 300, &config, 3).unwrap();
        let plain = run_linucb(&env, 300, 20, &config.linucb).unwrap();
        for (a, b) in corral.trace.steps().iter().zip(plain.steps()) {
            assert_eq!(a.arm, b.arm);
            assert_eq!(a.reward, b.reward);
        }
        assert_eq!(corral.trace.cumulative(), plain.cumulative());
    }

    #[test]
    fn scheduled_corral_first_iteration_is_linucb_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let arms = sample_sphere_arms(30, 50, &mut rng).unwrap();
        let model = make_sparse_model(30, 5, 0.1).unwrap();
        let env = Environment::new(&arms, &model, 1).unwrap();
        let run = run_corral_within_schedule(&env, 400, &ScheduledCorralConfig::default(), 9).unwrap();
        assert_eq!(run.trace.len(), 400);
        let first = run.schedule.executed()[0];
        assert!(run.trace.steps()[..first.length as usize]
            .iter()
            .all(|s| s.source == PullSource::Base { index: 0 }));
        assert_eq!(run.registry.len(), run.schedule.executed().len());
        assert!(run.trace.cumulative().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn scheduled_eta_at_first_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let arms = sample_sphere_arms(500, 20, &mut rng).unwrap();
        let model = make_sparse_model(500, 12, 0.1).unwrap();
        let env = Environment::new(&arms, &model, 1).unwrap();
        let run = run_corral_within_schedule(&env, 2500, &ScheduledCorralConfig::default(), 0).unwrap();
        assert_eq!(run.etas[0], 1.0 / 128.0);
    }
}
