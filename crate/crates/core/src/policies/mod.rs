//! Base learners: ridge regression, LinUCB and UCB.

mod linucb;
mod params;
mod ridge;
mod run;
mod ucb;

pub use linucb::{confidence_width, expected_regret_delta, linucb_select, LinUcb};
pub use params::LinUcbParams;
pub use ridge::{RankOneStep, RidgeState};
pub use run::run_linucb;
pub use ucb::{UcbState, DEFAULT_UCB_SCALE};
