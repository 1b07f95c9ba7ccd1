//! Smooth Corral: a log-barrier master over smoothed base learners, used
//! standalone and inside the LinUCB++ schedule.

mod master;
mod run;

pub use master::{
    corral_step, log_barrier_step, reward_to_loss, BaseLearner, CorralOutcome, CorralState,
    MasterConstants, Pick, SmoothedBase,
};
pub use run::{
    default_base_dims, run_corral_within_schedule, run_smooth_corral, CorralRun, EtaRule,
    LinUcbBase, ScheduledCorralConfig, ScheduledCorralRun, SmoothCorralConfig, VirtualUcbBase,
};
