//! Hardness levels and the rate-function calculus.
//!
//! A rate function maps a hardness level `alpha = log_T(d_star)` to the
//! exponent of `T` in an algorithm's worst-case regret. The frontier family
//! `theta_beta(alpha) = min(max(beta, 1 + alpha - beta), 1)` is achieved by
//! LinUCB++ run with parameter `beta`, and the same expression with
//! `beta = theta(0)` lower-bounds every achievable rate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bandit::TIE_TOL;
use crate::error::{Error, Result};

/// `log_T(d_star)`, the hardness level of a problem with horizon `T`.
pub fn hardness_level(horizon: u64, d_star: u64) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::invalid(format!(
            "horizon {horizon} < 2 makes the logarithm base degenerate"
        )));
    }
    if d_star == 0 || d_star > horizon {
        return Err(Error::invalid(format!(
            "intrinsic dimension {d_star} outside 1..={horizon}"
        )));
    }
    if d_star == 1 {
        return Ok(0.0);
    }
    Ok((d_star as f64).ln() / (horizon as f64).ln())
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

// Written as alpha + (1 - beta) so that decimal inputs such as
// (0.5, 0.4) land exactly on 0.9.
fn frontier(anchor: f64, alpha: f64) -> f64 {
    anchor.max(alpha + (1.0 - anchor)).min(1.0)
}

/// The rate `min(max(beta, 1 + alpha - beta), 1)` achieved by LinUCB++ with parameter `beta`.
pub fn pareto_rate(beta: f64, alpha: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta = {beta} outside [1/2, 1)")));
    }
    check_unit("alpha", alpha)?;
    Ok(frontier(beta, alpha))
}

/// Lower bound on any achievable rate with value `theta0` at `alpha = 0`.
pub fn rate_lower_bound(theta0: f64, alpha: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&theta0) {
        return Err(Error::invalid(format!(
            "theta(0) = {theta0} outside [1/2, 1]"
        )));
    }
    check_unit("alpha", alpha)?;
    Ok(frontier(theta0, alpha))
}

/// A labelled map from hardness level to regret exponent.
#[derive(Clone)]
pub struct RateFunction {
    label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RateFunction {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn pareto(beta: f64) -> Result<Self> {
        pareto_rate(beta, 0.0)?;
        Ok(Self::new(format!("pareto(beta={beta})"), move |a| frontier(beta, a)))
    }

    pub fn lower_bound(theta0: f64) -> Result<Self> {
        rate_lower_bound(theta0, 0.0)?;
        Ok(Self::new(format!("lower_bound(theta0={theta0})"), move |a| {
            frontier(theta0, a)
        }))
    }

    pub fn constant(value: f64) -> Result<Self> {
        check_unit("rate", value)?;
        Ok(Self::new(format!("constant({value})"), move |_| value))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        (self.eval)(alpha)
    }
}

impl fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateFunction").field("label", &self.label).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateOrdering {
    AStrictlySmaller,
    BStrictlySmaller,
    Equal,
    Incomparable,
}

/// Pointwise comparison of two rate functions on `grid`.
pub fn compare_rates(a: &RateFunction, b: &RateFunction, grid: &[f64]) -> Result<RateOrdering> {
    if grid.is_empty() {
        return Err(Error::invalid("comparison grid is empty"));
    }
    for &x in grid {
        check_unit("grid point", x)?;
    }
    let (mut a_wins, mut b_wins) = (false, false);
    for &x in grid {
        let diff = a.eval(x) - b.eval(x);
        if diff < -TIE_TOL {
            a_wins = true;
        } else if diff > TIE_TOL {
            b_wins = true;
        }
    }
    Ok(match (a_wins, b_wins) {
        (true, true) => RateOrdering::Incomparable,
        (true, false) => RateOrdering::AStrictlySmaller,
        (false, true) => RateOrdering::BStrictlySmaller,
        (false, false) => RateOrdering::Equal,
    })
}
