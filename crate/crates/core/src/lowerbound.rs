//! The adversarial instance family behind the cost-of-adaptivity lower bound.
//!
//! Instance `theta_0` is `(Delta / 2) e_c` for a coordinate `c` among the first
//! `floor(T^a')`; instance `theta_i` adds `Delta` on coordinate
//! `rho(i) = floor(T^a / 2) + i`. The shared action set is
//! `{e_c} U {e_rho(i)}`, optionally with the all-zero action.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bandit::{ActionSet, RegretTrace, RewardModel};
use crate::error::{Error, Result};
use crate::harness::InstanceFile;

/// Noise standard deviation of the construction (variance 1/4).
pub const FAMILY_NOISE_STD: f64 = 0.5;

/// `T^a`, snapped onto a nearby integer so exact powers survive round-off.
fn horizon_power(horizon: u64, a: f64) -> f64 {
    let x = (horizon as f64).powf(a);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x
    }
}

/// KL divergence between `N(mu1, 1/4)` and `N(mu2, 1/4)`.
pub fn gaussian_kl(mu1: f64, mu2: f64) -> f64 {
    2.0 * (mu1 - mu2).powi(2)
}

/// Guaranteed worst-case regret `2^-10 T^(1 + alpha) / B` over the harder class.
pub fn regret_floor(horizon: u64, alpha: f64, budget: f64) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::Precondition(format!("T = {horizon} < 2")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} outside (0, 1]")));
    }
    let t_alpha = horizon_power(horizon, alpha);
    if !(t_alpha <= budget) {
        return Err(Error::Precondition(format!(
            "T^alpha <= B fails: {t_alpha} > {budget}"
        )));
    }
    Ok(horizon_power(horizon, 1.0 + alpha) / (1024.0 * budget))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub horizon: u64,
    pub alpha_prime: f64,
    pub alpha: f64,
    pub budget: f64,
    #[serde(default)]
    pub expressive: bool,
    /// 1-based support coordinate of `theta_0`.
    #[serde(default = "first_coordinate")]
    pub support: usize,
    /// Ambient dimension; `None` means `ceil(T^alpha)`.
    pub dim: Option<usize>,
}

fn first_coordinate() -> usize {
    1
}

impl FamilyParams {
    pub fn new(horizon: u64, alpha_prime: f64, alpha: f64, budget: f64) -> Self {
        Self {
            horizon,
            alpha_prime,
            alpha,
            budget,
            expressive: false,
            support: 1,
            dim: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdversarialFamily {
    params: FamilyParams,
    k: usize,
    rho_offset: usize,
    delta: f64,
    dim: usize,
    thetas: Vec<DVector<f64>>,
    actions: ActionSet,
}

/// Whole family as structured text: parameters, derived constants and every
/// instance in the harness replay format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyExport {
    pub params: FamilyParams,
    pub k: usize,
    pub rho_offset: usize,
    pub delta: f64,
    pub regret_floor: f64,
    pub instances: Vec<InstanceFile>,
}

pub fn build_adversarial_family(params: &FamilyParams) -> Result<AdversarialFamily> {
    let FamilyParams {
        horizon,
        alpha_prime,
        alpha,
        budget,
        support,
        ..
    } = *params;
    let fail = |msg: String| Err(Error::Precondition(msg));
    if horizon < 2 {
        return fail(format!("T = {horizon} < 2"));
    }
    if !(0.0 <= alpha_prime && alpha_prime < alpha && alpha <= 1.0) {
        return fail(format!(
            "0 <= alpha' < alpha <= 1 fails: alpha' = {alpha_prime}, alpha = {alpha}"
        ));
    }
    let t_alpha = horizon_power(horizon, alpha);
    let t_alpha_prime = horizon_power(horizon, alpha_prime);
    if !(t_alpha <= budget) {
        return fail(format!("T^alpha <= B fails: {t_alpha} > {budget}"));
    }
    let k = (t_alpha / 2.0).floor() as usize;
    let need = (t_alpha / 4.0).max(t_alpha_prime).max(2.0);
    if (k as f64) < need {
        return fail(format!(
            "floor(T^alpha / 2) >= max(T^alpha / 4, T^alpha', 2) fails: {k} < {need}"
        ));
    }
    let dim = params.dim.unwrap_or(t_alpha.ceil() as usize);
    if (dim as f64) < t_alpha {
        return fail(format!("d >= T^alpha fails: {dim} < {t_alpha}"));
    }
    let support_limit = t_alpha_prime.floor() as usize;
    if support == 0 || support > support_limit {
        return fail(format!(
            "support coordinate {support} outside 1..={support_limit} (floor(T^alpha'))"
        ));
    }
    let delta = k as f64 / (32.0 * budget);
    let rho_offset = k;

    let mut theta0 = DVector::zeros(dim);
    theta0[support - 1] = delta / 2.0;
    let mut thetas = vec![theta0.clone()];
    let mut rows = Vec::with_capacity(k + 2);
    let mut a0 = vec![0.0; dim];
    a0[support - 1] = 1.0;
    rows.push(a0);
    for i in 1..=k {
        let coord = rho_offset + i - 1;
        let mut theta = theta0.clone();
        theta[coord] += delta;
        thetas.push(theta);
        let mut e = vec![0.0; dim];
        e[coord] = 1.0;
        rows.push(e);
    }
    if params.expressive {
        rows.push(vec![0.0; dim]);
    }
    let family = AdversarialFamily {
        params: params.clone(),
        k,
        rho_offset,
        delta,
        dim,
        thetas,
        actions: ActionSet::new(rows)?,
    };
    family.validate()?;
    Ok(family)
}

impl AdversarialFamily {
    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    /// Number of alternative instances `K = floor(T^alpha / 2)`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho_offset(&self) -> usize {
        self.rho_offset
    }

    /// 1-based coordinate `rho(i)`.
    pub fn rho(&self, i: usize) -> usize {
        self.rho_offset + i
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    /// `theta_0 ..= theta_K`.
    pub fn thetas(&self) -> &[DVector<f64>] {
        &self.thetas
    }

    pub fn theta(&self, i: usize) -> Result<&DVector<f64>> {
        self.thetas
            .get(i)
            .ok_or_else(|| Error::invalid(format!("instance {i} outside 0..={}", self.k)))
    }

    /// Reward model of instance `i` with the construction's `N(0, 1/4)` noise.
    pub fn model(&self, i: usize) -> Result<RewardModel> {
        RewardModel::new(self.theta(i)?.clone(), FAMILY_NOISE_STD)
    }

    /// Action index of `a_i` (`a_0` is the support arm).
    pub fn arm_of(&self, i: usize) -> usize {
        i
    }

    /// Index of the all-zero action when present.
    pub fn zero_arm(&self) -> Option<usize> {
        self.params.expressive.then_some(self.k + 1)
    }

    pub fn regret_floor(&self) -> Result<f64> {
        regret_floor(self.params.horizon, self.params.alpha, self.params.budget)
    }

    /// Re-checks the construction's norm, support and gap invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        if !(self.delta <= 1.0 / 32.0) {
            return bad(format!("Delta = {} exceeds 2^-5", self.delta));
        }
        let support_limit = horizon_power(self.params.horizon, self.params.alpha_prime).floor() as usize;
        let theta0 = &self.thetas[0];
        let nonzero: Vec<usize> = (0..self.dim).filter(|&j| theta0[j] != 0.0).collect();
        if nonzero.len() != 1 || nonzero[0] >= support_limit {
            return bad(format!("theta_0 support {nonzero:?} not a single coordinate below {support_limit}"));
        }
        if (theta0.norm() - self.delta / 2.0).abs() > 1e-15 {
            return bad(format!("||theta_0|| = {} != Delta / 2", theta0.norm()));
        }
        if self.rho_offset < support_limit {
            return bad("alternative coordinates overlap the support of theta_0".into());
        }
        let cap = 5f64.sqrt() * self.delta / 2.0;
        for (i, theta) in self.thetas.iter().enumerate() {
            let n = theta.norm();
            if n > cap * (1.0 + 1e-12) || n > 1.0 {
                return bad(format!("||theta_{i}|| = {n} exceeds sqrt(5) Delta / 2"));
            }
        }
        for row in self.actions.matrix().row_iter() {
            if row.norm() > 1.0 + 1e-12 {
                return bad("action norm exceeds 1".into());
            }
        }
        Ok(())
    }

    pub fn export(&self) -> Result<FamilyExport> {
        Ok(FamilyExport {
            params: self.params.clone(),
            k: self.k,
            rho_offset: self.rho_offset,
            delta: self.delta,
            regret_floor: self.regret_floor()?,
            instances: (0..=self.k)
                .map(|i| self.instance_file(i))
                .collect::<Result<_>>()?,
        })
    }

    /// Instance `i` in the harness replay format.
    pub fn instance_file(&self, i: usize) -> Result<InstanceFile> {
        Ok(InstanceFile {
            label: format!("lowerbound-theta{i}"),
            arms: self.actions.rows(),
            theta_star: self.theta(i)?.iter().copied().collect(),
            noise_std: FAMILY_NOISE_STD,
        })
    }
}

/// Both sides of the KL decomposition for a trace generated under `theta_0`:
/// `(sum_t KL(N(<theta_0, A_t>, 1/4), N(<theta_i, A_t>, 1/4)), 2 N_i(T) Delta^2)`.
pub fn kl_decomposition_audit(
    trace: &RegretTrace,
    family: &AdversarialFamily,
    i: usize,
) -> Result<(f64, f64)> {
    if trace.arm_count() != family.actions.len() {
        return Err(Error::invalid(format!(
            "trace recorded on {} arms, family has {}",
            trace.arm_count(),
            family.actions.len()
        )));
    }
    if i == 0 || i > family.k {
        return Err(Error::invalid(format!("instance {i} outside 1..={}", family.k)));
    }
    let m0 = family.actions.means(&family.thetas[0])?;
    let mi = family.actions.means(&family.thetas[i])?;
    let mut lhs = 0.0;
    let mut pulls = 0u64;
    for step in trace.steps() {
        if step.arm >= m0.len() {
            return Err(Error::invalid(format!("arm {} outside the family", step.arm)));
        }
        lhs += gaussian_kl(m0[step.arm], mi[step.arm]);
        if step.arm == family.arm_of(i) {
            pulls += 1;
        }
    }
    let rhs = 2.0 * pulls as f64 * family.delta * family.delta;
    Ok((lhs, rhs))
}
