//! Mean-field variational inference by block coordinate ascent.
//!
//! Every latent coordinate gets an independent Gaussian `q`. The log of the
//! Poisson rate at observed cells is bounded with per-observation simplex
//! weights (see [`phi`]); unobserved cells enter only through the expected
//! rate sums of [`sums`], which keeps a sweep at `O(T (R + NK + MK))`.

pub mod blocks;
pub mod elbo;
mod fit;
pub mod lbfgs;
pub mod obs;
pub mod phi;
mod state;
pub mod sums;

use core::fmt;

pub use blocks::BlockObjective;
pub use elbo::elbo;
pub use fit::{fit, FitResult, Fitter};
pub use obs::Observations;
pub use phi::{update_phi, AuxWeights};
pub use state::{init_variational, GaussianField, Side, VariationalState};
pub use sums::ExpectedRateSums;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub max_sweeps: usize,
    /// Stop once `|ΔL| / |L|` over one sweep falls below this.
    pub tolerance: f64,
    /// Quasi-Newton iterations per block update.
    pub inner_iters: usize,
    pub lbfgs_memory: usize,
    /// Half-width of the uniform draw for initial variational means.
    pub init_scale: f64,
    /// Initial variational standard deviation.
    pub init_sd: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            tolerance: 1e-6,
            inner_iters: 15,
            lbfgs_memory: 5,
            init_scale: 0.01,
            init_sd: 0.1,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.inner_iters == 0 || self.lbfgs_memory == 0 {
            return Err(Error::InvalidConfig("inner_iters and lbfgs_memory must be positive".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidConfig("init_scale must be finite and nonnegative".into()));
        }
        if !(self.init_sd > 0.0 && self.init_sd.is_finite()) {
            return Err(Error::InvalidConfig("init_sd must be positive".into()));
        }
        Ok(())
    }
}

/// Identifies one block of variational parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockId {
    Dynamic { side: Side, entity: usize, step: usize },
    Global { side: Side, entity: usize },
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockId::Dynamic { side, entity, step } => {
                write!(f, "{side}-dynamic[{entity}, t={step}]")
            }
            BlockId::Global { side, entity } => write!(f, "{side}-global[{entity}]"),
        }
    }
}
