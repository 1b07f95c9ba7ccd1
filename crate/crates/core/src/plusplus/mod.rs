//! LinUCB++: geometric dimension schedule with virtual mixture-arms.

mod extended;
mod mixture;
mod run;
mod schedule;

pub use extended::{extend_action_set, ExtendedActionSet, RowSource};
pub use mixture::{finalize_mixture_arm, resolve_virtual_arm, MixtureRegistry, VirtualMixtureArm};
pub use run::{run_linucb_plus_plus, IterationSummary, NormBound, PlusPlusConfig, PlusPlusRun};
pub use schedule::{build_schedule, IterationPlan, Schedule};
