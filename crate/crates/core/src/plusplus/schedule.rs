use serde::Serialize;

use crate::error::{Error, Result};

/// Iteration plan of LinUCB++: `p = ceil(log2 T^beta)` iterations, the i-th
/// working in `d_i = min(2^(p+2-i), d)` truncated coordinates for
/// `dT_i = min(2^(p+i), T)` steps.
///
/// `dims` and `lengths` hold the formulas for all `p` iterations; the run
/// stops at step `T`, which [`Schedule::executed`] reflects.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    horizon: u64,
    beta: f64,
    iterations: u32,
    dims: Vec<usize>,
    lengths: Vec<u64>,
    boundaries: Vec<u64>,
}

/// One iteration as actually executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IterationPlan {
    /// 1-based iteration index.
    pub index: usize,
    pub dim: usize,
    /// Planned length `dT_i`.
    pub planned: u64,
    /// Steps executed before the horizon is reached.
    pub length: u64,
    /// 0-based global step of the first step of this iteration.
    pub start: u64,
}

/// `ceil(beta * log2 T)`, snapping products within 1e-9 of an integer onto it
/// so exact powers of two are not pushed up by round-off.
fn iteration_count(horizon: u64, beta: f64) -> u32 {
    let x = beta * (horizon as f64).log2();
    let r = x.round();
    let p = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    p.max(1.0) as u32
}

fn pow2(e: u32) -> u64 {
    1u64.checked_shl(e).unwrap_or(u64::MAX)
}

pub fn build_schedule(horizon: u64, beta: f64, ambient_dim: usize) -> Result<Schedule> {
    if horizon < 2 {
        return Err(Error::invalid(format!("horizon {horizon} < 2")));
    }
    if !(0.5..1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta = {beta} outside [1/2, 1)")));
    }
    if ambient_dim == 0 {
        return Err(Error::invalid("ambient dimension must be positive"));
    }
    let p = iteration_count(horizon, beta);
    let mut dims = Vec::with_capacity(p as usize);
    let mut lengths = Vec::with_capacity(p as usize);
    let mut boundaries = Vec::with_capacity(p as usize);
    let mut total = 0u64;
    for i in 1..=p {
        let d_i = pow2(p + 2 - i).min(ambient_dim as u64) as usize;
        let dt_i = pow2(p + i).min(horizon);
        total = total.saturating_add(dt_i);
        dims.push(d_i);
        lengths.push(dt_i);
        boundaries.push(total);
    }
    if total < horizon {
        return Err(Error::Numerical(format!(
            "schedule covers {total} < {horizon} steps"
        )));
    }
    Ok(Schedule {
        horizon,
        beta,
        iterations: p,
        dims,
        lengths,
        boundaries,
    })
}

impl Schedule {
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `p`.
    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    /// Cumulative ends `T_i = dT_1 + ... + dT_i`.
    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    /// Iterations that run before step `T`, the last one cut short if needed.
    pub fn executed(&self) -> Vec<IterationPlan> {
        let mut out = Vec::new();
        let mut start = 0u64;
        for (i, (&dim, &planned)) in self.dims.iter().zip(&self.lengths).enumerate() {
            if start >= self.horizon {
                break;
            }
            let length = planned.min(self.horizon - start);
            out.push(IterationPlan {
                index: i + 1,
                dim,
                planned,
                length,
                start,
            });
            start += length;
        }
        out
    }
}
