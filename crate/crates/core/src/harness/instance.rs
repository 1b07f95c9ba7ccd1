use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bandit::{ActionSet, RewardModel};
use crate::error::{Error, Result};

/// A bandit instance as structured text, for export and replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub label: String,
    /// One arm per entry.
    pub arms: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
    pub noise_std: f64,
}

impl InstanceFile {
    pub fn new(label: impl Into<String>, actions: &ActionSet, model: &RewardModel) -> Self {
        Self {
            label: label.into(),
            arms: actions.rows(),
            theta_star: model.theta_star().iter().copied().collect(),
            noise_std: model.noise_std(),
        }
    }

    pub fn materialize(&self) -> Result<(ActionSet, RewardModel)> {
        let actions = ActionSet::new(self.arms.clone())?;
        let model = RewardModel::new(DVector::from_vec(self.theta_star.clone()), self.noise_std)?;
        if model.dim() != actions.dim() {
            return Err(Error::DimensionMismatch {
                expected: actions.dim(),
                found: model.dim(),
            });
        }
        Ok((actions, model))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// `k` arms drawn uniformly from the unit sphere in `R^d`.
pub fn sample_sphere_arms<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<ActionSet> {
    if d == 0 || k == 0 {
        return Err(Error::invalid("sphere sampling needs d >= 1 and K >= 1"));
    }
    let mut m = DMatrix::zeros(k, d);
    for mut row in m.row_iter_mut() {
        loop {
            row.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let n = row.norm();
            if n > 1e-300 {
                row /= n;
                break;
            }
        }
    }
    ActionSet::from_matrix(m)
}

/// `theta* = (1/sqrt(d*), ..., 1/sqrt(d*), 0, ..., 0)` with noise `noise_std`.
pub fn make_sparse_model(d: usize, d_star: usize, noise_std: f64) -> Result<RewardModel> {
    if d_star == 0 || d_star > d {
        return Err(Error::invalid(format!("d_star {d_star} outside 1..={d}")));
    }
    let v = 1.0 / (d_star as f64).sqrt();
    let theta = DVector::from_fn(d, |i, _| if i < d_star { v } else { 0.0 });
    RewardModel::new(theta, noise_std)
}
