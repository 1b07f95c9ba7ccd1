//! Domain types shared by every learner: the fixed action set, the hidden
//! linear reward model, the environment that samples noisy rewards, and the
//! per-step regret trace.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Absolute tolerance used to detect ties between expected rewards and rates.
pub const TIE_TOL: f64 = 1e-12;

/// Slack allowed on unit-norm constraints to absorb normalization round-off.
pub const NORM_TOL: f64 = 1e-9;

/// A finite action set: `K` arms in ambient dimension `d`, each with norm at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSet {
    // K x d, one arm per row.
    arms: DMatrix<f64>,
}

impl ActionSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::invalid("action set must contain at least one arm"));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::invalid("arms must have positive dimension"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let arms = DMatrix::from_fn(k, d, |i, j| rows[i][j]);
        Self::from_matrix(arms)
    }

    /// Builds an action set from a `K x d` matrix whose rows are the arms.
    pub fn from_matrix(arms: DMatrix<f64>) -> Result<Self> {
        if arms.nrows() == 0 || arms.ncols() == 0 {
            return Err(Error::invalid("action set must be non-empty"));
        }
        for (k, row) in arms.row_iter().enumerate() {
            let norm = row.norm();
            if !norm.is_finite() || norm > 1.0 + NORM_TOL {
                return Err(Error::invalid(format!(
                    "arm {k} has norm {norm} > 1"
                )));
            }
        }
        Ok(Self { arms })
    }

    pub fn len(&self) -> usize {
        self.arms.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.arms.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.arms
    }

    pub fn arm(&self, k: usize) -> DVector<f64> {
        self.arms.row(k).transpose()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.arms
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// The `K x m` matrix of arms truncated to their first `m` coordinates.
    pub fn truncated(&self, m: usize) -> DMatrix<f64> {
        let m = m.min(self.dim());
        self.arms.columns(0, m).into_owned()
    }

    /// Expected rewards `<theta, a_k>` for every arm.
    pub fn means(&self, theta: &DVector<f64>) -> Result<Vec<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: theta.len(),
            });
        }
        Ok((&self.arms * theta).iter().copied().collect())
    }
}

/// Hidden linear reward parameter with its intrinsic dimension and noise scale.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    theta_star: DVector<f64>,
    intrinsic_dim: usize,
    noise_std: f64,
}

impl RewardModel {
    /// The intrinsic dimension is the 1-based index of the last nonzero
    /// coordinate of `theta_star` (zero for the all-zero parameter).
    pub fn new(theta_star: DVector<f64>, noise_std: f64) -> Result<Self> {
        if theta_star.is_empty() {
            return Err(Error::invalid("reward parameter must be non-empty"));
        }
        let norm = theta_star.norm();
        if !norm.is_finite() || norm > 1.0 + NORM_TOL {
            return Err(Error::invalid(format!(
                "reward parameter norm {norm} exceeds 1"
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::invalid(format!("noise_std {noise_std} must be >= 0")));
        }
        let intrinsic_dim = theta_star
            .iter()
            .rposition(|&x| x != 0.0)
            .map_or(0, |i| i + 1);
        Ok(Self {
            theta_star,
            intrinsic_dim,
            noise_std,
        })
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn with_noise(mut self, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::invalid(format!("noise_std {noise_std} must be >= 0")));
        }
        self.noise_std = noise_std;
        Ok(self)
    }
}

/// Index of the best arm (lowest index among ties) and the gap of every arm.
///
/// Gaps within [`TIE_TOL`] of the maximum are reported as exactly zero.
pub fn best_arm_and_gap(actions: &ActionSet, model: &RewardModel) -> Result<(usize, Vec<f64>)> {
    let means = actions.means(model.theta_star())?;
    Ok(best_and_gaps_from_means(&means))
}

pub(crate) fn best_and_gaps_from_means(means: &[f64]) -> (usize, Vec<f64>) {
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = means
        .iter()
        .position(|&m| m >= max - TIE_TOL)
        .unwrap_or(0);
    let gaps = means
        .iter()
        .map(|&m| {
            let g = max - m;
            if g <= TIE_TOL {
                0.0
            } else {
                g
            }
        })
        .collect();
    (best, gaps)
}

/// Augments `actions` with the truncate-and-pad image `[a^(m); 0]` of every arm
/// for every `m` in `dims`. Original arms keep their positions; new vectors are
/// appended in arm-major order and exact duplicates are skipped.
pub fn expressive_closure(actions: &ActionSet, dims: &[usize]) -> Result<ActionSet> {
    let d = actions.dim();
    if actions.is_empty() {
        return Err(Error::invalid("cannot close an empty action set"));
    }
    if let Some(&bad) = dims.iter().find(|&&m| m == 0 || m > d) {
        return Err(Error::invalid(format!(
            "truncation dimension {bad} outside 1..={d}"
        )));
    }
    let key = |v: &[f64]| -> Vec<u64> {
        // -0.0 and 0.0 are the same vector for closure purposes.
        v.iter().map(|&x| (x + 0.0).to_bits()).collect()
    };
    let mut rows = actions.rows();
    let mut seen: HashSet<Vec<u64>> = rows.iter().map(|r| key(r)).collect();
    let originals = rows.len();
    for k in 0..originals {
        for &m in dims {
            let mut t = rows[k].clone();
            t[m..].iter_mut().for_each(|x| *x = 0.0);
            if seen.insert(key(&t)) {
                rows.push(t);
            }
        }
    }
    ActionSet::new(rows)
}

/// For every arm `a`, the index of `[a^(m); 0]` inside `actions`.
///
/// Fails when the set is not closed under truncation at `m`.
pub fn truncation_index(actions: &ActionSet, m: usize) -> Result<Vec<usize>> {
    let d = actions.dim();
    if m == 0 || m > d {
        return Err(Error::invalid(format!("truncation dimension {m} outside 1..={d}")));
    }
    let key = |v: &[f64]| -> Vec<u64> { v.iter().map(|&x| (x + 0.0).to_bits()).collect() };
    let rows = actions.rows();
    let mut lookup = std::collections::HashMap::new();
    for (k, r) in rows.iter().enumerate() {
        lookup.entry(key(r)).or_insert(k);
    }
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            let mut t = r.clone();
            t[m..].iter_mut().for_each(|x| *x = 0.0);
            lookup.get(&key(&t)).copied().ok_or_else(|| {
                Error::Precondition(format!(
                    "action set is not expressive: truncation of arm {k} at dimension {m} is missing"
                ))
            })
        })
        .collect()
}

/// How the pulled real arm was reached at a given step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PullSource {
    /// A real arm chosen directly.
    Direct,
    /// Resolved from the virtual mixture-arm of the given (1-based) iteration.
    Virtual { iteration: usize },
    /// Played by the given base learner of a master algorithm.
    Base { index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub arm: usize,
    pub reward: f64,
    pub regret: f64,
    pub source: PullSource,
}

/// Per-step record of a run with its cumulative pseudo-regret.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    arm_count: usize,
    steps: Vec<TraceStep>,
    cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn new(arm_count: usize) -> Self {
        Self {
            arm_count,
            steps: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    pub fn with_capacity(arm_count: usize, horizon: usize) -> Self {
        Self {
            arm_count,
            steps: Vec::with_capacity(horizon),
            cumulative: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, step: TraceStep) {
        debug_assert!(step.regret >= 0.0, "negative pseudo-regret {}", step.regret);
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.push(prev + step.regret);
        self.steps.push(step);
    }

    /// Number of arms in the action set this trace was recorded on.
    pub fn arm_count(&self) -> usize {
        self.arm_count
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn terminal_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// A bandit instance bound to a noise stream.
///
/// Noise is keyed by `(seed, step, arm)`, so two learners pulling the same arm
/// at the same step observe the same reward.
#[derive(Clone, Debug)]
pub struct Environment<'a> {
    actions: &'a ActionSet,
    model: &'a RewardModel,
    means: Vec<f64>,
    best: usize,
    gaps: Vec<f64>,
    noise_seed: u64,
}

impl<'a> Environment<'a> {
    pub fn new(actions: &'a ActionSet, model: &'a RewardModel, noise_seed: u64) -> Result<Self> {
        let means = actions.means(model.theta_star())?;
        let (best, gaps) = best_and_gaps_from_means(&means);
        Ok(Self {
            actions,
            model,
            means,
            best,
            gaps,
            noise_seed,
        })
    }

    pub fn actions(&self) -> &'a ActionSet {
        self.actions
    }

    pub fn model(&self) -> &'a RewardModel {
        self.model
    }

    pub fn best_arm(&self) -> usize {
        self.best
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gap(&self, arm: usize) -> f64 {
        self.gaps[arm]
    }

    pub fn noise(&self, step: usize, arm: usize) -> f64 {
        let std = self.model.noise_std();
        if std == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            self.noise_seed,
            &[step as u64, arm as u64],
        ));
        let z: f64 = StandardNormal.sample(&mut rng);
        std * z
    }

    /// Pulls `arm` at `step` (0-based), appends the outcome to `trace` and
    /// returns the realized reward.
    pub fn pull(
        &self,
        trace: &mut RegretTrace,
        step: usize,
        arm: usize,
        source: PullSource,
    ) -> Result<f64> {
        if arm >= self.means.len() {
            return Err(Error::invalid(format!(
                "arm {arm} out of range for {} arms",
                self.means.len()
            )));
        }
        let reward = self.means[arm] + self.noise(step, arm);
        trace.push(TraceStep {
            arm,
            reward,
            regret: self.gaps[arm],
            source,
        });
        Ok(reward)
    }
}
