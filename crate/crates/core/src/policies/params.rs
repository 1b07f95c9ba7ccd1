use serde::{Deserialize, Serialize};

use super::linucb::{confidence_width, expected_regret_delta};
use crate::error::{Error, Result};

/// Knobs shared by every LinUCB instance in a run.
///
/// The exploration coefficient is `s * sigma * 2 sqrt(ln(2 T K / delta)) + sqrt(lambda) * S`
/// where `sigma` is the noise scale (1 when `noise_scaled` is off) and `S`
/// bounds the parameter norm of the problem the learner works on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinUcbParams {
    /// Ridge regularizer; `V_0 = lambda I`.
    pub lambda: f64,
    /// Failure probability in the width; `None` means `T^(-1/2)`.
    pub delta: Option<f64>,
    /// Multiplier `s` on the noise term.
    pub width_scale: f64,
    /// Multiply the noise term by the reward noise standard deviation.
    pub noise_scaled: bool,
}

impl Default for LinUcbParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            delta: None,
            width_scale: 1.0,
            noise_scaled: true,
        }
    }
}

impl LinUcbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {} must be > 0", self.lambda)));
        }
        if !(self.width_scale >= 0.0 && self.width_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "width_scale {} must be >= 0",
                self.width_scale
            )));
        }
        Ok(())
    }

    /// Noise term of the exploration coefficient.
    pub fn width(&self, horizon: u64, arms: usize, noise_std: f64) -> Result<f64> {
        self.validate()?;
        let delta = self.delta.unwrap_or_else(|| expected_regret_delta(horizon));
        let sigma = if self.noise_scaled { noise_std } else { 1.0 };
        Ok(self.width_scale * sigma * confidence_width(horizon, arms, delta)?)
    }

    /// Bias term `sqrt(lambda) * norm_bound` of the exploration coefficient.
    pub fn norm_bonus(&self, norm_bound: f64) -> Result<f64> {
        if !(norm_bound >= 0.0 && norm_bound.is_finite()) {
            return Err(Error::invalid(format!("norm bound {norm_bound} must be >= 0")));
        }
        Ok(self.lambda.sqrt() * norm_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noise_scaling() {
        let p = LinUcbParams::default();
        let raw = confidence_width(2500, 1000, 0.02).unwrap();
        assert_relative_eq!(p.width(2500, 1000, 0.1).unwrap(), 0.1 * raw, epsilon = 1e-12);
        let unscaled = LinUcbParams {
            noise_scaled: false,
            ..p
        };
        assert_relative_eq!(unscaled.width(2500, 1000, 0.1).unwrap(), raw, epsilon = 1e-12);
        assert_relative_eq!(p.norm_bonus(2.0).unwrap(), 2.0 * 0.1f64.sqrt(), epsilon = 1e-15);
        assert!(p.norm_bonus(-1.0).is_err());
        assert!(LinUcbParams { lambda: 0.0, ..p }.width(10, 2, 1.0).is_err());
    }
}
