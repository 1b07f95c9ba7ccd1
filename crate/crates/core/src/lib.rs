//! Model selection for linear bandits: LinUCB++, a Smooth Corral baseline,
//! the lower-bound construction and an experiment harness.

pub mod bandit;
pub mod corral;
pub mod error;
pub mod harness;
pub mod lowerbound;
pub mod plusplus;
pub mod policies;
pub mod rates;
pub mod seed;

pub use error::{Error, Result};
