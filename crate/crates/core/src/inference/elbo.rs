//! The evidence lower bound with the auxiliary-weight bound on `log λ`.

use super::{AuxWeights, ExpectedRateSums, GaussianField, Side, VariationalState};
use crate::error::{Error, Result};
use crate::math;
use crate::model::Hyperparams;
use crate::tensor::InteractionTensor;

/// `E_q[log N(x | prior_mean, σ²)]` summed over a field with a fixed prior.
fn fixed_prior_term(field: &GaussianField, range: core::ops::Range<usize>, prior_mean: f64, sigma: f64) -> f64 {
    let inv2 = 1.0 / (2.0 * sigma * sigma);
    let norm = math::gaussian_log_norm(sigma);
    range
        .map(|i| {
            let d = field.mean[i] - prior_mean;
            -(d * d + field.var(i)) * inv2 - norm
        })
        .sum()
}

/// Prior and transition terms of one side's chains.
fn chain_term(state: &VariationalState, side: Side, prior_mean: f64, sigma: f64) -> f64 {
    let f = state.dynamic(side);
    let inv2 = 1.0 / (2.0 * sigma * sigma);
    let norm = math::gaussian_log_norm(sigma);
    let k = state.k;
    let mut total = 0.0;
    for e in 0..state.count(side) {
        let first = state.dyn_offset(e, 0);
        total += fixed_prior_term(f, first..first + k, prior_mean, sigma);
        for t in 1..state.n_steps {
            let cur = state.dyn_offset(e, t);
            let prev = cur - k;
            for kk in 0..k {
                let d = f.mean[cur + kk] - f.mean[prev + kk];
                total += -(d * d + f.var(cur + kk) + f.var(prev + kk)) * inv2 - norm;
            }
        }
    }
    total
}

fn entropy(field: &GaussianField) -> f64 {
    field.log_sd.iter().map(|&ls| math::gaussian_entropy(ls)).sum()
}

/// Poisson data term: bound on the observed cells minus all expected rates.
pub fn poisson_term(state: &VariationalState, phi: &AuxWeights, tensor: &InteractionTensor) -> f64 {
    let k = state.k;
    let mut total = 0.0;
    for (i, e) in tensor.entries().iter().enumerate() {
        let (n, m, t) = (e.user as usize, e.item as usize, e.step as usize);
        let du = state.dyn_offset(n, t);
        let dv = state.dyn_offset(m, t);
        let w = phi.of(i);
        let mut bound = 0.0;
        for (kk, &wk) in w.iter().enumerate() {
            if wk > 0.0 {
                let s = state.user_dyn.mean[du + kk]
                    + state.user_glob.mean[n * k + kk]
                    + state.item_dyn.mean[dv + kk]
                    + state.item_glob.mean[m * k + kk];
                bound += wk * (s - math::ln(wk));
            }
        }
        total += e.count as f64 * bound - math::ln_factorial(e.count);
    }
    let sums = ExpectedRateSums::compute(state);
    for t in 0..state.n_steps {
        total -= sums.total_rate(t);
    }
    total
}

/// Full ELBO. Fails if the value is not finite.
pub fn elbo(state: &VariationalState, phi: &AuxWeights, tensor: &InteractionTensor, hp: &Hyperparams) -> Result<f64> {
    let value = fixed_prior_term(&state.user_glob, 0..state.user_glob.len(), hp.mu_ubar, hp.sigma_ubar)
        + fixed_prior_term(&state.item_glob, 0..state.item_glob.len(), hp.mu_vbar, hp.sigma_vbar)
        + chain_term(state, Side::User, hp.mu_u, hp.sigma_u)
        + chain_term(state, Side::Item, hp.mu_v, hp.sigma_v)
        + poisson_term(state, phi, tensor)
        + entropy(&state.user_dyn)
        + entropy(&state.item_dyn)
        + entropy(&state.user_glob)
        + entropy(&state.item_glob);
    if !value.is_finite() {
        return Err(Error::Diverged { block: None, sweep: 0 });
    }
    Ok(value)
}
