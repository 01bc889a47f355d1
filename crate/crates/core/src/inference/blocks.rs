//! Per-block pieces of the ELBO and their gradients.
//!
//! A block is the `K` factors of one entity at one step (dynamic) or its `K`
//! global factors. Holding everything else fixed, the ELBO restricted to a
//! block is, up to an additive constant,
//!
//! ```text
//! Σ_k [ Σ_a −((m_k − a_k)² + s_k² + va_k) / (2σ²)      Gaussian anchors
//!       + l_k m_k                                      observed cells via φ
//!       − c_k exp(m_k + s_k²/2)                        all cells via E_q[λ]
//!       + log s_k ]                                    entropy
//! ```
//!
//! with coordinates `x = [m_1..m_K, log s_1..log s_K]`. Anchors are the prior
//! mean (first step or global block) and the neighbouring chain states at
//! `t − 1` and `t + 1`.

use alloc::vec::Vec;

use super::{AuxWeights, ExpectedRateSums, Observations, Side, VariationalState};
use crate::math;
use crate::model::Hyperparams;

#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockObjective {
    pub k: usize,
    pub sigma: f64,
    pub anchors: Vec<Anchor>,
    /// `l_k = Σ_obs y φ_k`.
    pub linear: Vec<f64>,
    /// `c_k`, the expected-rate multiplier of `exp(m_k + s_k²/2)`.
    pub exp_coef: Vec<f64>,
}

impl BlockObjective {
    pub fn dim(&self) -> usize {
        2 * self.k
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut g = alloc::vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }

    /// Objective value, writing the gradient into `grad`.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.k;
        let inv_s2 = 1.0 / (self.sigma * self.sigma);
        let mut value = 0.0;
        for kk in 0..k {
            let m = x[kk];
            let rho = x[k + kk];
            let s2 = math::exp(2.0 * rho);
            let mut gm = 0.0;
            let mut grho = 1.0;
            value += rho;
            for a in &self.anchors {
                let d = m - a.mean[kk];
                value -= (d * d + s2 + a.var[kk]) * 0.5 * inv_s2;
                gm -= d * inv_s2;
                grho -= s2 * inv_s2;
            }
            value += self.linear[kk] * m;
            gm += self.linear[kk];
            let ex = self.exp_coef[kk] * math::exp(m + 0.5 * s2);
            value -= ex;
            gm -= ex;
            grho -= ex * s2;
            grad[kk] = gm;
            grad[k + kk] = grho;
        }
        value
    }
}

/// `l_k` summed over the observations of `entity` at step `t`.
pub fn linear_terms(obs: &Observations<'_>, phi: &AuxWeights, side: Side, entity: usize, t: usize, out: &mut [f64]) {
    let entries = obs.tensor().entries();
    for &i in obs.of(side, entity, t) {
        let y = entries[i as usize].count as f64;
        for (o, w) in out.iter_mut().zip(phi.of(i as usize)) {
            *o += y * w;
        }
    }
}

fn dynamic_params(hp: &Hyperparams, side: Side) -> (f64, f64) {
    match side {
        Side::User => (hp.mu_u, hp.sigma_u),
        Side::Item => (hp.mu_v, hp.sigma_v),
    }
}

fn global_params(hp: &Hyperparams, side: Side) -> (f64, f64) {
    match side {
        Side::User => (hp.mu_ubar, hp.sigma_ubar),
        Side::Item => (hp.mu_vbar, hp.sigma_vbar),
    }
}

/// Dynamic block of `entity` at `t`, given precomputed `linear` terms and the
/// other side's sums at `t`.
pub fn dynamic_block(
    state: &VariationalState,
    hp: &Hyperparams,
    side: Side,
    entity: usize,
    t: usize,
    linear: &[f64],
    other_sums: &[f64],
) -> BlockObjective {
    let k = state.k;
    let (mu, sigma) = dynamic_params(hp, side);
    let f = state.dynamic(side);
    let mut anchors = Vec::with_capacity(2);
    if t == 0 {
        anchors.push(Anchor { mean: alloc::vec![mu; k], var: alloc::vec![0.0; k] });
    } else {
        let o = state.dyn_offset(entity, t - 1);
        anchors.push(Anchor { mean: f.mean[o..o + k].to_vec(), var: (o..o + k).map(|i| f.var(i)).collect() });
    }
    if t + 1 < state.n_steps {
        let o = state.dyn_offset(entity, t + 1);
        anchors.push(Anchor { mean: f.mean[o..o + k].to_vec(), var: (o..o + k).map(|i| f.var(i)).collect() });
    }
    let g = state.global(side);
    let go = state.glob_offset(entity);
    let exp_coef = (0..k).map(|kk| g.lognormal_mean(go + kk) * other_sums[kk]).collect();
    BlockObjective { k, sigma, anchors, linear: linear.to_vec(), exp_coef }
}

/// Global block of `entity`, given `linear` terms summed over all steps and
/// the other side's sums for every step.
pub fn global_block(
    state: &VariationalState,
    hp: &Hyperparams,
    side: Side,
    entity: usize,
    linear: &[f64],
    other_sums: &[f64],
) -> BlockObjective {
    let k = state.k;
    let (mu, sigma) = global_params(hp, side);
    let f = state.dynamic(side);
    let mut exp_coef = alloc::vec![0.0; k];
    for t in 0..state.n_steps {
        let o = state.dyn_offset(entity, t);
        for kk in 0..k {
            exp_coef[kk] += f.lognormal_mean(o + kk) * other_sums[t * k + kk];
        }
    }
    BlockObjective {
        k,
        sigma,
        anchors: alloc::vec![Anchor { mean: alloc::vec![mu; k], var: alloc::vec![0.0; k] }],
        linear: linear.to_vec(),
        exp_coef,
    }
}

/// ELBO block in `(mû_{un·,t}, log σ̂_{un·,t})` with `φ` and item sums fixed.
pub fn block_objective_user(
    state: &VariationalState,
    hp: &Hyperparams,
    obs: &Observations<'_>,
    phi: &AuxWeights,
    sums: &ExpectedRateSums,
    n: usize,
    t: usize,
) -> BlockObjective {
    let mut lin = alloc::vec![0.0; state.k];
    linear_terms(obs, phi, Side::User, n, t, &mut lin);
    dynamic_block(state, hp, Side::User, n, t, &lin, sums.at(Side::Item, t))
}

/// Item mirror of [`block_objective_user`].
pub fn block_objective_item(
    state: &VariationalState,
    hp: &Hyperparams,
    obs: &Observations<'_>,
    phi: &AuxWeights,
    sums: &ExpectedRateSums,
    m: usize,
    t: usize,
) -> BlockObjective {
    let mut lin = alloc::vec![0.0; state.k];
    linear_terms(obs, phi, Side::Item, m, t, &mut lin);
    dynamic_block(state, hp, Side::Item, m, t, &lin, sums.at(Side::User, t))
}

/// Global block of a user or item with `φ` and the other side's sums fixed.
pub fn block_objective_global(
    state: &VariationalState,
    hp: &Hyperparams,
    obs: &Observations<'_>,
    phi: &AuxWeights,
    sums: &ExpectedRateSums,
    side: Side,
    entity: usize,
) -> BlockObjective {
    let mut lin = alloc::vec![0.0; state.k];
    for t in 0..state.n_steps {
        linear_terms(obs, phi, side, entity, t, &mut lin);
    }
    global_block(state, hp, side, entity, &lin, sums.side(side.other()))
}
