//! Expected rate sums over all users (or items) at a step.
//!
//! `Σ_{n,m} E_q[λ_{nm,t}] = Σ_k A_{kt} B_{kt}` where
//! `A_{kt} = Σ_n E_q[exp(u_{nk,t} + ū_{nk})]` and `B_{kt}` is the item analogue,
//! so the zero cells never need to be enumerated.

use alloc::vec::Vec;

use super::{Side, VariationalState};

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedRateSums {
    pub k: usize,
    pub n_steps: usize,
    /// `A`, laid out `[t * K + k]`.
    pub user: Vec<f64>,
    /// `B`, laid out `[t * K + k]`.
    pub item: Vec<f64>,
}

impl ExpectedRateSums {
    pub fn compute(state: &VariationalState) -> Self {
        let mut sums = Self {
            k: state.k,
            n_steps: state.n_steps,
            user: alloc::vec![0.0; state.n_steps * state.k],
            item: alloc::vec![0.0; state.n_steps * state.k],
        };
        for t in 0..state.n_steps {
            sums.refresh(state, Side::User, t);
            sums.refresh(state, Side::Item, t);
        }
        sums
    }

    pub fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::User => &self.user,
            Side::Item => &self.item,
        }
    }

    /// Sums of `side` at step `t`, length `K`.
    pub fn at(&self, side: Side, t: usize) -> &[f64] {
        &self.side(side)[t * self.k..(t + 1) * self.k]
    }

    /// Recompute the sums for one side and step. Entities are added in index
    /// order so the result does not depend on how blocks were scheduled.
    pub fn refresh(&mut self, state: &VariationalState, side: Side, t: usize) {
        let k = self.k;
        let out = match side {
            Side::User => &mut self.user[t * k..(t + 1) * k],
            Side::Item => &mut self.item[t * k..(t + 1) * k],
        };
        out.iter_mut().for_each(|x| *x = 0.0);
        let dynf = state.dynamic(side);
        let glob = state.global(side);
        for e in 0..state.count(side) {
            let d = state.dyn_offset(e, t);
            let g = state.glob_offset(e);
            for (kk, acc) in out.iter_mut().enumerate() {
                let mean = dynf.mean[d + kk] + glob.mean[g + kk];
                let var = dynf.var(d + kk) + glob.var(g + kk);
                *acc += crate::math::exp(mean + 0.5 * var);
            }
        }
    }

    /// `Σ_k A_{kt} B_{kt}`.
    pub fn total_rate(&self, t: usize) -> f64 {
        self.at(Side::User, t).iter().zip(self.at(Side::Item, t)).map(|(a, b)| a * b).sum()
    }
}
