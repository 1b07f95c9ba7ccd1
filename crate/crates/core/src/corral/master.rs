//! Log-barrier mirror-descent master with smoothed bases.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplex tolerance before renormalization.
const SIMPLEX_TOL: f64 = 1e-9;
const BISECTION_STEPS: usize = 200;

/// Master constants. `None` fields take their defaults for `m` bases and
/// horizon `T`: initial step `m * eta`, step growth `exp(1 / ln T)` on every
/// threshold crossing, probability floor `1 / (2 m T)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterConstants {
    pub step_multiplier: Option<f64>,
    pub growth: Option<f64>,
    pub floor: Option<f64>,
}

/// Master state over `M` bases.
#[derive(Clone, Debug, Serialize)]
pub struct CorralState {
    /// Sampling distribution: `weights` mixed with the uniform floor.
    probabilities: Vec<f64>,
    /// Mirror-descent iterate.
    weights: Vec<f64>,
    steps: Vec<f64>,
    thresholds: Vec<f64>,
    losses: Vec<f64>,
    gamma: f64,
    growth: f64,
    rounds: u64,
}

impl CorralState {
    pub fn new(bases: usize, horizon: u64, eta: f64, params: &MasterConstants) -> Result<Self> {
        if bases == 0 {
            return Err(Error::invalid("corral needs at least one base"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("eta = {eta} must be > 0")));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        let m = bases as f64;
        let t = horizon as f64;
        let multiplier = params.step_multiplier.unwrap_or(m);
        let growth = params
            .growth
            .unwrap_or_else(|| if horizon > 1 { (1.0 / t.ln()).exp() } else { 1.0 });
        let floor = params.floor.unwrap_or(1.0 / (2.0 * m * t));
        if !(multiplier > 0.0 && growth >= 1.0 && floor >= 0.0 && floor * m < 1.0) {
            return Err(Error::invalid(format!(
                "bad corral constants: multiplier {multiplier}, growth {growth}, floor {floor}"
            )));
        }
        let gamma = floor * m;
        let weights = vec![1.0 / m; bases];
        Ok(Self {
            probabilities: weights.clone(),
            weights,
            steps: vec![multiplier * eta; bases],
            thresholds: vec![2.0 * m; bases],
            losses: vec![0.0; bases],
            gamma,
            growth,
            rounds: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.steps
    }

    /// Cumulative importance-weighted losses.
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Lower bound every sampling probability respects.
    pub fn floor(&self) -> f64 {
        self.gamma / self.len() as f64
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.len() - 1
    }

    /// Feeds the loss in `[0, 1]` observed for `base`.
    pub fn update(&mut self, base: usize, loss: f64) -> Result<()> {
        if base >= self.len() {
            return Err(Error::invalid(format!("base {base} out of range")));
        }
        let loss = loss.clamp(0.0, 1.0);
        let m = self.len();
        let mut est = vec![0.0; m];
        est[base] = loss / self.probabilities[base];
        self.losses[base] += est[base];
        if m > 1 {
            self.weights = log_barrier_step(&self.weights, &est, &self.steps)?;
        }
        let floor = self.gamma / m as f64;
        for i in 0..m {
            self.probabilities[i] = (1.0 - self.gamma) * self.weights[i] + floor;
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL || self.probabilities.iter().any(|p| !p.is_finite()) {
            return Err(Error::SimplexCorrupted { sum });
        }
        self.probabilities.iter_mut().for_each(|p| *p /= sum);
        for i in 0..m {
            if 1.0 / self.probabilities[i] > self.thresholds[i] {
                self.thresholds[i] = 2.0 / self.probabilities[i];
                self.steps[i] *= self.growth;
            }
        }
        self.rounds += 1;
        Ok(())
    }
}

/// One mirror-descent step with the weighted log-barrier
/// `-sum_i ln(p_i) / eta_i`:
/// `1 / p'_i = 1 / p_i + eta_i (l_i - mu)` with `mu` chosen so `p'` sums to one.
pub fn log_barrier_step(weights: &[f64], losses: &[f64], steps: &[f64]) -> Result<Vec<f64>> {
    let n = weights.len();
    if losses.len() != n || steps.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: losses.len().min(steps.len()),
        });
    }
    let inv = |mu: f64, i: usize| 1.0 / weights[i] + steps[i] * (losses[i] - mu);
    let total = |mu: f64| -> f64 {
        (0..n)
            .map(|i| {
                let d = inv(mu, i);
                if d > 0.0 {
                    1.0 / d
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    };
    let pole = (0..n)
        .map(|i| losses[i] + 1.0 / (weights[i] * steps[i]))
        .fold(f64::INFINITY, f64::min);
    let mut lo = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = losses
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .min(pole);
    if !(lo <= hi) {
        return Err(Error::Numerical("empty bracket in mirror step".into()));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let out: Vec<f64> = (0..n).map(|i| 1.0 / inv(lo, i)).collect();
    if out.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::Numerical("mirror step left the open simplex".into()));
    }
    let sum: f64 = out.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::SimplexCorrupted { sum });
    }
    Ok(out.into_iter().map(|p| p / sum).collect())
}

/// What a base decided to play.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pick {
    /// Real arm pulled.
    pub arm: usize,
    /// Iteration of the virtual mixture-arm the pull was resolved from.
    pub via: Option<usize>,
}

impl Pick {
    pub fn direct(arm: usize) -> Self {
        Self { arm, via: None }
    }
}

/// A learner the master can delegate a step to.
pub trait BaseLearner {
    fn select(&mut self, rng: &mut dyn RngCore) -> Result<Pick>;
    /// Reward for the arm returned by the last `select`.
    fn update(&mut self, reward: f64) -> Result<()>;
}

/// A base wrapped with the smoothing replay: when chosen it plays its current
/// policy, and the master is told the reward of a policy drawn uniformly from
/// the base's own history.
pub struct SmoothedBase<'a> {
    inner: Box<dyn BaseLearner + 'a>,
    history: Vec<f64>,
}

impl<'a> SmoothedBase<'a> {
    pub fn new(inner: Box<dyn BaseLearner + 'a>) -> Self {
        Self {
            inner,
            history: Vec::new(),
        }
    }

    pub fn plays(&self) -> usize {
        self.history.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorralOutcome {
    pub base: usize,
    pub pick: Pick,
    pub reward: f64,
    /// Reward reported to the master.
    pub replayed: f64,
}

/// Master loss for a reward in `[-1, 1]`.
pub fn reward_to_loss(reward: f64) -> f64 {
    ((1.0 - reward) / 2.0).clamp(0.0, 1.0)
}

/// One master round: sample a base, let it act through `env_step(base, pick)`,
/// update it, then update the master with the smoothed replay.
pub fn corral_step<R: Rng>(
    state: &mut CorralState,
    bases: &mut [SmoothedBase<'_>],
    env_step: &mut dyn FnMut(usize, Pick) -> Result<f64>,
    rng: &mut R,
) -> Result<CorralOutcome> {
    if bases.len() != state.len() {
        return Err(Error::DimensionMismatch {
            expected: state.len(),
            found: bases.len(),
        });
    }
    let base = state.sample(rng);
    let chosen = &mut bases[base];
    let pick = chosen.inner.select(rng)?;
    let reward = env_step(base, pick)?;
    chosen.inner.update(reward)?;
    chosen.history.push(reward);
    let replayed = chosen.history[rng.random_range(0..chosen.history.len())];
    state.update(base, reward_to_loss(replayed))?;
    Ok(CorralOutcome {
        base,
        pick,
        reward,
        replayed,
    })
}
