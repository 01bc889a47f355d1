//! Auxiliary simplex weights for the observed cells.
//!
//! For an observed cell, `log Σ_k e^{x_k} ≥ Σ_k φ_k (x_k − log φ_k)` for any
//! point `φ` of the simplex. Taking the expectation under `q` turns each
//! `x_k` into its variational mean, and the bound is tight at the softmax of
//! those means.

use alloc::vec::Vec;

use super::VariationalState;
use crate::exec::Executor;
use crate::math;
use crate::tensor::{Entry, InteractionTensor};

/// `φ_{nm·,t}` for every nonzero of a tensor, laid out `[entry * K + k]` in
/// the tensor's entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxWeights {
    pub k: usize,
    pub weights: Vec<f64>,
}

impl AuxWeights {
    pub fn uniform(nnz: usize, k: usize) -> Self {
        Self { k, weights: alloc::vec![1.0 / k as f64; nnz * k] }
    }

    #[inline]
    pub fn of(&self, entry: usize) -> &[f64] {
        &self.weights[entry * self.k..(entry + 1) * self.k]
    }

    pub fn len(&self) -> usize {
        self.weights.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[inline]
pub(crate) fn fill_weights(state: &VariationalState, e: &Entry, out: &mut [f64]) {
    let (n, m, t) = (e.user as usize, e.item as usize, e.step as usize);
    let du = state.dyn_offset(n, t);
    let dv = state.dyn_offset(m, t);
    let gu = state.glob_offset(n);
    let gv = state.glob_offset(m);
    for (k, w) in out.iter_mut().enumerate() {
        *w = state.user_dyn.mean[du + k]
            + state.user_glob.mean[gu + k]
            + state.item_dyn.mean[dv + k]
            + state.item_glob.mean[gv + k];
    }
    math::softmax_in_place(out);
}

/// Recompute every weight from the current variational means.
pub fn update_phi(state: &VariationalState, tensor: &InteractionTensor) -> AuxWeights {
    let k = state.k;
    let mut phi = AuxWeights::uniform(tensor.nnz(), k);
    for (e, out) in tensor.entries().iter().zip(phi.weights.chunks_mut(k)) {
        fill_weights(state, e, out);
    }
    phi
}

/// Recompute the weights of the entries at step `t`.
pub fn refresh_step<E: Executor>(
    state: &VariationalState,
    tensor: &InteractionTensor,
    t: usize,
    phi: &mut AuxWeights,
    exec: &E,
) {
    let k = phi.k;
    let range = tensor.step_range(t);
    let entries = &tensor.entries()[range.clone()];
    let slice = &mut phi.weights[range.start * k..range.end * k];
    exec.for_each_chunk(slice, k, |i, out| fill_weights(state, &entries[i], out));
}
