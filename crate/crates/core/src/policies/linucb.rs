use nalgebra::{DMatrix, DVector};

use super::ridge::RidgeState;
use crate::error::{Error, Result};

/// Confidence multiplier `2 sqrt(ln(2 T K / delta))`.
pub fn confidence_width(horizon: u64, arms: usize, delta: f64) -> Result<f64> {
    if horizon == 0 || arms == 0 {
        return Err(Error::invalid("horizon and arm count must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(2.0 * (2.0 * horizon as f64 * arms as f64 / delta).ln().sqrt())
}

/// `delta = T^(-1/2)`, the choice that turns the high-probability width into
/// an expected-regret width.
pub fn expected_regret_delta(horizon: u64) -> f64 {
    (horizon as f64).powf(-0.5)
}

fn argmax(scores: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// One LinUCB decision computed from scratch:
/// `argmax <theta_hat, a> + (width + norm_bonus) * sqrt(a^T V^-1 a)`, ties to the lowest index.
pub fn linucb_select(
    state: &RidgeState,
    candidates: &[DVector<f64>],
    width: f64,
    norm_bonus: f64,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate arms"));
    }
    if !(width >= 0.0 && norm_bonus >= 0.0) {
        return Err(Error::invalid("width and norm bonus must be >= 0"));
    }
    if let Some(bad) = candidates.iter().find(|a| a.len() != state.dim()) {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: bad.len(),
        });
    }
    let scale = width + norm_bonus;
    let scores = candidates
        .iter()
        .map(|a| state.predict(a.as_view()) + scale * state.quad_form(a.as_view()).sqrt());
    Ok(argmax(scores).expect("non-empty candidates"))
}

/// LinUCB over a fixed candidate matrix.
///
/// Keeps `a^T V^-1 a` for every candidate up to date through the same rank-one
/// correction applied to `V^-1`, so a decision costs `O(n m)` instead of `O(n m^2)`.
#[derive(Clone, Debug)]
pub struct LinUcb {
    ridge: RidgeState,
    // n x m, one candidate per row.
    candidates: DMatrix<f64>,
    quad: DVector<f64>,
    exploration: f64,
}

impl LinUcb {
    pub fn new(candidates: DMatrix<f64>, lambda: f64, width: f64, norm_bonus: f64) -> Result<Self> {
        if candidates.nrows() == 0 {
            return Err(Error::invalid("no candidate arms"));
        }
        if !(width >= 0.0 && norm_bonus >= 0.0) {
            return Err(Error::invalid("width and norm bonus must be >= 0"));
        }
        let ridge = RidgeState::new(candidates.ncols(), lambda)?;
        let quad = DVector::from_iterator(
            candidates.nrows(),
            candidates.row_iter().map(|r| r.norm_squared() / lambda),
        );
        Ok(Self {
            ridge,
            candidates,
            quad,
            exploration: width + norm_bonus,
        })
    }

    pub fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    pub fn candidates(&self) -> &DMatrix<f64> {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.nrows() == 0
    }

    pub fn select(&self) -> usize {
        let preds = &self.candidates * self.ridge.theta_hat();
        let c = self.exploration;
        argmax(
            preds
                .iter()
                .zip(self.quad.iter())
                .map(|(p, q)| p + c * q.max(0.0).sqrt()),
        )
        .expect("non-empty candidates")
    }

    /// Feeds back the reward observed for candidate `row`.
    pub fn update(&mut self, row: usize, reward: f64) -> Result<()> {
        if row >= self.candidates.nrows() {
            return Err(Error::invalid(format!("candidate {row} out of range")));
        }
        let arm = self.candidates.row(row).transpose();
        let step = self.ridge.update(&arm, reward)?;
        let proj = &self.candidates * &step.direction;
        let inv = 1.0 / step.denominator;
        self.quad
            .iter_mut()
            .zip(proj.iter())
            .for_each(|(q, p)| *q = (*q - p * p * inv).max(0.0));
        Ok(())
    }
}
