use nalgebra::{DMatrix, DVector, DVectorView};

use crate::bandit::NORM_TOL;
use crate::error::{Error, Result};

/// Smallest admissible rank-one denominator `1 + a^T V^-1 a`.
const MIN_DENOMINATOR: f64 = 1e-12;

/// Ridge-regression state `V = lambda I + sum a a^T`, maintained through its inverse.
#[derive(Clone, Debug)]
pub struct RidgeState {
    lambda: f64,
    gram_inverse: DMatrix<f64>,
    moment: DVector<f64>,
    theta_hat: DVector<f64>,
    t: usize,
}

/// The rank-one correction applied by the last update:
/// `V_new^-1 = V^-1 - u u^T / denominator` with `u = V^-1 a`.
#[derive(Clone, Debug)]
pub struct RankOneStep {
    pub direction: DVector<f64>,
    pub denominator: f64,
}

impl RidgeState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ridge dimension must be positive"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("ridge lambda {lambda} must be > 0")));
        }
        Ok(Self {
            lambda,
            gram_inverse: DMatrix::identity(dim, dim) / lambda,
            moment: DVector::zeros(dim),
            theta_hat: DVector::zeros(dim),
            t: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.gram_inverse
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    pub fn updates(&self) -> usize {
        self.t
    }

    /// `a^T V^-1 a`.
    pub fn quad_form(&self, arm: DVectorView<'_, f64>) -> f64 {
        (&self.gram_inverse * arm).dot(&arm).max(0.0)
    }

    pub fn predict(&self, arm: DVectorView<'_, f64>) -> f64 {
        self.theta_hat.dot(&arm)
    }

    pub fn update(&mut self, arm: &DVector<f64>, reward: f64) -> Result<RankOneStep> {
        self.update_view(arm.as_view(), reward)
    }

    /// Folds `(arm, reward)` into the state via the Sherman-Morrison identity.
    pub fn update_view(&mut self, arm: DVectorView<'_, f64>, reward: f64) -> Result<RankOneStep> {
        if arm.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: arm.len(),
            });
        }
        if arm.norm() > 1.0 + NORM_TOL {
            return Err(Error::invalid(format!("arm norm {} exceeds 1", arm.norm())));
        }
        let direction = &self.gram_inverse * arm;
        let denominator = 1.0 + arm.dot(&direction);
        if !(denominator >= MIN_DENOMINATOR) {
            return Err(Error::Numerical(format!(
                "rank-one denominator {denominator} below {MIN_DENOMINATOR}; gram inverse is not positive definite"
            )));
        }
        self.gram_inverse
            .ger(-1.0 / denominator, &direction, &direction, 1.0);
        symmetrize(&mut self.gram_inverse);
        self.moment.axpy(reward, &arm, 1.0);
        self.theta_hat = &self.gram_inverse * &self.moment;
        self.t += 1;
        Ok(RankOneStep {
            direction,
            denominator,
        })
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
