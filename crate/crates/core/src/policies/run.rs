use super::linucb::LinUcb;
use super::params::LinUcbParams;
use crate::bandit::{Environment, PullSource, RegretTrace};
use crate::error::{Error, Result};

/// Plain LinUCB on the first `working_dim` coordinates of every arm, with
/// `||theta*|| <= 1` in the bias term.
///
/// `working_dim = d` is the ambient learner; `working_dim = d_star` is the
/// oracle that knows the intrinsic dimension.
pub fn run_linucb(
    env: &Environment<'_>,
    horizon: usize,
    working_dim: usize,
    params: &LinUcbParams,
) -> Result<RegretTrace> {
    let actions = env.actions();
    if working_dim == 0 || working_dim > actions.dim() {
        return Err(Error::invalid(format!(
            "working dimension {working_dim} outside 1..={}",
            actions.dim()
        )));
    }
    let width = params.width(horizon as u64, actions.len(), env.model().noise_std())?;
    let bonus = params.norm_bonus(1.0)?;
    let mut learner = LinUcb::new(actions.truncated(working_dim), params.lambda, width, bonus)?;
    let mut trace = RegretTrace::with_capacity(actions.len(), horizon);
    for step in 0..horizon {
        let arm = learner.select();
        let reward = env.pull(&mut trace, step, arm, PullSource::Direct)?;
        learner.update(arm, reward)?;
    }
    Ok(trace)
}
