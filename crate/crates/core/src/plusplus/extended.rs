use nalgebra::DMatrix;
use serde::Serialize;

use super::mixture::VirtualMixtureArm;
use crate::bandit::ActionSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowSource {
    /// Truncated real arm `k`.
    Real(usize),
    /// Virtual mixture-arm of (1-based) iteration `j`.
    Virtual(usize),
}

/// Action matrix of the lifted problem in iteration `i`: the `K` truncated real
/// arms padded with `i - 1` zeros, stacked over the `(i - 1) x (i - 1)` identity
/// block of the virtual arms.
#[derive(Clone, Debug)]
pub struct ExtendedActionSet {
    matrix: DMatrix<f64>,
    sources: Vec<RowSource>,
    working_dim: usize,
}

impl ExtendedActionSet {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn sources(&self) -> &[RowSource] {
        &self.sources
    }

    pub fn source(&self, row: usize) -> RowSource {
        self.sources[row]
    }

    pub fn working_dim(&self) -> usize {
        self.working_dim
    }

    pub fn virtual_count(&self) -> usize {
        self.matrix.ncols() - self.working_dim
    }
}

pub fn extend_action_set(
    actions: &ActionSet,
    working_dim: usize,
    virtual_arms: &[VirtualMixtureArm],
) -> Result<ExtendedActionSet> {
    if working_dim == 0 || working_dim > actions.dim() {
        return Err(Error::invalid(format!(
            "working dimension {working_dim} outside 1..={}",
            actions.dim()
        )));
    }
    for (pos, arm) in virtual_arms.iter().enumerate() {
        if arm.iteration() != pos + 1 {
            return Err(Error::invalid(format!(
                "virtual arms must be iterations 1..{} in order; found {} at position {}",
                virtual_arms.len(),
                arm.iteration(),
                pos + 1
            )));
        }
    }
    let k = actions.len();
    let v = virtual_arms.len();
    let mut matrix = DMatrix::zeros(k + v, working_dim + v);
    matrix
        .view_mut((0, 0), (k, working_dim))
        .copy_from(&actions.matrix().columns(0, working_dim));
    for j in 0..v {
        matrix[(k + j, working_dim + j)] = 1.0;
    }
    let sources = (0..k)
        .map(RowSource::Real)
        .chain((1..=v).map(RowSource::Virtual))
        .collect();
    Ok(ExtendedActionSet {
        matrix,
        sources,
        working_dim,
    })
}
