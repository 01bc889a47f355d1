use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BlockId, FitConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::model::Hyperparams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::User => Side::Item,
            Side::Item => Side::User,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::User => "user",
            Side::Item => "item",
        })
    }
}

/// Means and log standard deviations of a family of independent Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    pub mean: Vec<f64>,
    pub log_sd: Vec<f64>,
}

impl GaussianField {
    pub fn filled(len: usize, mean: f64, log_sd: f64) -> Self {
        Self { mean: alloc::vec![mean; len], log_sd: alloc::vec![log_sd; len] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    #[inline]
    pub fn sd(&self, i: usize) -> f64 {
        math::exp(self.log_sd[i])
    }

    #[inline]
    pub fn var(&self, i: usize) -> f64 {
        math::exp(2.0 * self.log_sd[i])
    }

    /// `E_q[exp(x_i)]`.
    #[inline]
    pub fn lognormal_mean(&self, i: usize) -> f64 {
        math::exp(self.mean[i] + 0.5 * self.var(i))
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(&self.log_sd).all(|x| x.is_finite())
    }
}

/// Variational parameters for every latent factor.
///
/// Dynamic fields are indexed `[(entity * T + t) * K + k]` and global fields
/// `[entity * K + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub n_users: usize,
    pub n_items: usize,
    pub n_steps: usize,
    pub k: usize,
    pub user_dyn: GaussianField,
    pub item_dyn: GaussianField,
    pub user_glob: GaussianField,
    pub item_glob: GaussianField,
}

impl VariationalState {
    /// Every mean set to `mean` and every standard deviation to `sd`.
    pub fn constant(n_users: usize, n_items: usize, n_steps: usize, k: usize, mean: f64, sd: f64) -> Self {
        let ls = math::ln(sd);
        Self {
            n_users,
            n_items,
            n_steps,
            k,
            user_dyn: GaussianField::filled(n_users * n_steps * k, mean, ls),
            item_dyn: GaussianField::filled(n_items * n_steps * k, mean, ls),
            user_glob: GaussianField::filled(n_users * k, mean, ls),
            item_glob: GaussianField::filled(n_items * k, mean, ls),
        }
    }

    pub fn count(&self, side: Side) -> usize {
        match side {
            Side::User => self.n_users,
            Side::Item => self.n_items,
        }
    }

    pub fn dynamic(&self, side: Side) -> &GaussianField {
        match side {
            Side::User => &self.user_dyn,
            Side::Item => &self.item_dyn,
        }
    }

    pub fn dynamic_mut(&mut self, side: Side) -> &mut GaussianField {
        match side {
            Side::User => &mut self.user_dyn,
            Side::Item => &mut self.item_dyn,
        }
    }

    pub fn global(&self, side: Side) -> &GaussianField {
        match side {
            Side::User => &self.user_glob,
            Side::Item => &self.item_glob,
        }
    }

    pub fn global_mut(&mut self, side: Side) -> &mut GaussianField {
        match side {
            Side::User => &mut self.user_glob,
            Side::Item => &mut self.item_glob,
        }
    }

    #[inline]
    pub fn dyn_offset(&self, entity: usize, t: usize) -> usize {
        (entity * self.n_steps + t) * self.k
    }

    #[inline]
    pub fn glob_offset(&self, entity: usize) -> usize {
        entity * self.k
    }

    /// Sum of variational means `mû_dyn + mû_glob` for one factor.
    #[inline]
    pub fn expression(&self, side: Side, entity: usize, t: usize, k: usize) -> f64 {
        self.dynamic(side).mean[self.dyn_offset(entity, t) + k] + self.global(side).mean[self.glob_offset(entity) + k]
    }

    fn block_range(&self, id: BlockId) -> (Side, bool, core::ops::Range<usize>) {
        match id {
            BlockId::Dynamic { side, entity, step } => {
                let o = self.dyn_offset(entity, step);
                (side, true, o..o + self.k)
            }
            BlockId::Global { side, entity } => {
                let o = self.glob_offset(entity);
                (side, false, o..o + self.k)
            }
        }
    }

    /// Block coordinates as `[means..., log_sds...]`.
    pub fn block_params(&self, id: BlockId) -> Vec<f64> {
        let (side, dynamic, r) = self.block_range(id);
        let f = if dynamic { self.dynamic(side) } else { self.global(side) };
        f.mean[r.clone()].iter().chain(&f.log_sd[r]).copied().collect()
    }

    pub fn set_block_params(&mut self, id: BlockId, x: &[f64]) {
        let k = self.k;
        let (side, dynamic, r) = self.block_range(id);
        let f = if dynamic { self.dynamic_mut(side) } else { self.global_mut(side) };
        f.mean[r.clone()].copy_from_slice(&x[..k]);
        f.log_sd[r].copy_from_slice(&x[k..]);
    }

    /// Swap the roles of users and items.
    pub fn transpose(&self) -> Self {
        Self {
            n_users: self.n_items,
            n_items: self.n_users,
            n_steps: self.n_steps,
            k: self.k,
            user_dyn: self.item_dyn.clone(),
            item_dyn: self.user_dyn.clone(),
            user_glob: self.item_glob.clone(),
            item_glob: self.user_glob.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.user_dyn.is_finite()
            && self.item_dyn.is_finite()
            && self.user_glob.is_finite()
            && self.item_glob.is_finite()
    }
}

/// Initial variational state.
///
/// Means are i.i.d. uniform on `[-init_scale, init_scale]` per `(entity, k)`
/// and dynamic means repeat the same draw at every step. Standard deviations
/// start at `init_sd`.
pub fn init_variational(
    hp: &Hyperparams,
    n_users: usize,
    n_items: usize,
    n_steps: usize,
    config: &FitConfig,
) -> Result<VariationalState> {
    if n_users == 0 || n_items == 0 || n_steps == 0 || hp.k == 0 {
        return Err(Error::InvalidDimensions(alloc::format!("N={n_users}, M={n_items}, T={n_steps}, K={}", hp.k)));
    }
    let k = hp.k;
    let mut state = VariationalState::constant(n_users, n_items, n_steps, k, 0.0, config.init_sd);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = config.init_scale;
    let draw = |rng: &mut ChaCha8Rng| scale * (2.0 * rng.random::<f64>() - 1.0);
    for side in [Side::User, Side::Item] {
        let count = state.count(side);
        for e in 0..count {
            for kk in 0..k {
                let x = draw(&mut rng);
                for t in 0..n_steps {
                    let o = state.dyn_offset(e, t);
                    state.dynamic_mut(side).mean[o + kk] = x;
                }
            }
        }
    }
    for side in [Side::User, Side::Item] {
        for i in 0..state.count(side) * k {
            state.global_mut(side).mean[i] = draw(&mut rng);
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_repeats_means_across_time() {
        let hp = Hyperparams::with_k(4);
        let s = init_variational(&hp, 3, 5, 6, &FitConfig::default()).unwrap();
        for side in [Side::User, Side::Item] {
            for e in 0..s.count(side) {
                for k in 0..4 {
                    let first = s.dynamic(side).mean[s.dyn_offset(e, 0) + k];
                    assert!(first.abs() <= 0.01);
                    for t in 1..6 {
                        assert_eq!(s.dynamic(side).mean[s.dyn_offset(e, t) + k], first);
                    }
                }
            }
        }
        assert!((s.user_dyn.sd(0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_scale_gives_zero_means() {
        let hp = Hyperparams::with_k(2);
        let cfg = FitConfig { init_scale: 0.0, ..FitConfig::default() };
        let s = init_variational(&hp, 2, 2, 3, &cfg).unwrap();
        for f in [&s.user_dyn, &s.item_dyn, &s.user_glob, &s.item_glob] {
            assert!(f.mean.iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn init_is_deterministic() {
        let hp = Hyperparams::with_k(3);
        let cfg = FitConfig { seed: 11, ..FitConfig::default() };
        let a = init_variational(&hp, 4, 4, 2, &cfg).unwrap();
        let b = init_variational(&hp, 4, 4, 2, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn block_params_round_trip() {
        let mut s = VariationalState::constant(2, 2, 2, 3, 0.0, 1.0);
        let id = BlockId::Dynamic { side: Side::Item, entity: 1, step: 1 };
        let x = [1.0, 2.0, 3.0, -1.0, -2.0, -3.0];
        s.set_block_params(id, &x);
        assert_eq!(s.block_params(id), x);
        assert_eq!(s.item_dyn.mean[s.dyn_offset(1, 1) + 2], 3.0);
    }
}
