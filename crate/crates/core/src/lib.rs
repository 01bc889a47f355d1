//! Poisson factorization with time-varying latent factors.
//!
//! Users and items carry log-space latent factors that combine a static
//! (global) component with a Gaussian random-walk correction per time step.
//! Clicks are Poisson with rate `Σ_k exp(u_{nk,t} + ū_{nk}) exp(v_{mk,t} + v̄_{mk})`.
//! The posterior is approximated with a fully factorized Gaussian family fitted
//! by block coordinate ascent; the resulting predictive means rank items.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel execution is
//! pluggable through [`exec::Executor`]; the default runs sequentially.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod inference;
pub mod ingest;
pub mod math;
pub mod metrics;
pub mod model;
pub mod predict;
pub mod protocol;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use inference::{fit, FitConfig, FitResult, Fitter, VariationalState};
pub use model::{Hyperparams, LatentState};
pub use tensor::{Entry, InteractionTensor};
