//! The generative model: hyperparameters, latent state, rates and a simulator.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{Entry, InteractionTensor};

/// Prior hyperparameters. All `sigma_*` fields are standard deviations.
///
/// The dynamic standard deviation is shared between the first-step prior and
/// the random-walk transitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub k: usize,
    pub mu_u: f64,
    pub sigma_u: f64,
    pub mu_v: f64,
    pub sigma_v: f64,
    pub mu_ubar: f64,
    pub sigma_ubar: f64,
    pub mu_vbar: f64,
    pub sigma_vbar: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        let sd = math::sqrt(10.0);
        Self {
            k: 20,
            mu_u: 0.0,
            sigma_u: sd,
            mu_v: 0.0,
            sigma_v: sd,
            mu_ubar: 0.0,
            sigma_ubar: sd,
            mu_vbar: 0.0,
            sigma_vbar: sd,
        }
    }
}

impl Hyperparams {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    /// Set every prior variance (not standard deviation) to `variance`.
    pub fn with_variance(self, variance: f64) -> Self {
        let sd = math::sqrt(variance);
        Self { sigma_u: sd, sigma_v: sd, sigma_ubar: sd, sigma_vbar: sd, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidHyperparams("K must be at least 1".into()));
        }
        let sigmas = [
            ("sigma_u", self.sigma_u),
            ("sigma_v", self.sigma_v),
            ("sigma_ubar", self.sigma_ubar),
            ("sigma_vbar", self.sigma_vbar),
        ];
        for (name, s) in sigmas {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidHyperparams(format!("{name} = {s} must be positive")));
            }
        }
        let means = [self.mu_u, self.mu_v, self.mu_ubar, self.mu_vbar];
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidHyperparams("prior means must be finite".into()));
        }
        Ok(())
    }
}

/// A draw of all latent factors. Dynamic factors are laid out
/// `[(entity * T + t) * K + k]`, global factors `[entity * K + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub n_users: usize,
    pub n_items: usize,
    pub n_steps: usize,
    pub k: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub ubar: Vec<f64>,
    pub vbar: Vec<f64>,
}

impl LatentState {
    pub fn zeros(n_users: usize, n_items: usize, n_steps: usize, k: usize) -> Self {
        Self {
            n_users,
            n_items,
            n_steps,
            k,
            u: alloc::vec![0.0; n_users * n_steps * k],
            v: alloc::vec![0.0; n_items * n_steps * k],
            ubar: alloc::vec![0.0; n_users * k],
            vbar: alloc::vec![0.0; n_items * k],
        }
    }

    pub fn dyn_offset(&self, entity: usize, t: usize) -> usize {
        (entity * self.n_steps + t) * self.k
    }

    fn check(&self, n: usize, m: usize, t: usize) -> Result<()> {
        if n >= self.n_users {
            return Err(Error::IndexOutOfRange { what: "user", index: n, len: self.n_users });
        }
        if m >= self.n_items {
            return Err(Error::IndexOutOfRange { what: "item", index: m, len: self.n_items });
        }
        if t >= self.n_steps {
            return Err(Error::IndexOutOfRange { what: "step", index: t, len: self.n_steps });
        }
        Ok(())
    }

    /// Per-factor log rates `u_{nk,t} + ū_{nk} + v_{mk,t} + v̄_{mk}`.
    pub fn log_factor_rates(&self, n: usize, m: usize, t: usize) -> Result<Vec<f64>> {
        self.check(n, m, t)?;
        let (du, dv) = (self.dyn_offset(n, t), self.dyn_offset(m, t));
        Ok((0..self.k)
            .map(|k| self.u[du + k] + self.ubar[n * self.k + k] + self.v[dv + k] + self.vbar[m * self.k + k])
            .collect())
    }

    /// Poisson rate `λ(n, m, t) = Σ_k exp(u + ū) exp(v + v̄)`.
    pub fn rate(&self, n: usize, m: usize, t: usize) -> Result<f64> {
        Ok(self.log_factor_rates(n, m, t)?.into_iter().map(math::exp).sum())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> Result<f64> {
    if sd == 0.0 {
        return Ok(mean);
    }
    let d = Normal::new(mean, sd).map_err(|e| Error::Sampling(format!("{e}")))?;
    Ok(d.sample(rng))
}

const USER_STREAM: u64 = 1;
const ITEM_STREAM: u64 = 1 << 40;
const CLICK_STREAM: u64 = 2 << 40;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw the global factors and Gaussian chains for every user and item.
///
/// Unlike [`Hyperparams::validate`], zero dynamic standard deviations are
/// accepted here and give constant chains.
pub fn sample_latent(
    hp: &Hyperparams,
    n_users: usize,
    n_items: usize,
    n_steps: usize,
    seed: u64,
) -> Result<LatentState> {
    if n_users == 0 || n_items == 0 || n_steps == 0 || hp.k == 0 {
        return Err(Error::InvalidDimensions(format!(
            "N={n_users}, M={n_items}, T={n_steps}, K={}; all must be positive",
            hp.k
        )));
    }
    let k = hp.k;
    let mut state = LatentState::zeros(n_users, n_items, n_steps, k);
    let sides = [
        (n_users, USER_STREAM, hp.mu_ubar, hp.sigma_ubar, hp.mu_u, hp.sigma_u),
        (n_items, ITEM_STREAM, hp.mu_vbar, hp.sigma_vbar, hp.mu_v, hp.sigma_v),
    ];
    for (side, &(count, stream, mu_g, sd_g, mu_d, sd_d)) in sides.iter().enumerate() {
        let (glob, dynamic) = if side == 0 { (&mut state.ubar, &mut state.u) } else { (&mut state.vbar, &mut state.v) };
        for e in 0..count {
            let mut rng = stream_rng(seed, stream + e as u64);
            for kk in 0..k {
                glob[e * k + kk] = gaussian(&mut rng, mu_g, sd_g)?;
                let mut x = gaussian(&mut rng, mu_d, sd_d)?;
                dynamic[e * n_steps * k + kk] = x;
                for t in 1..n_steps {
                    x = gaussian(&mut rng, x, sd_d)?;
                    dynamic[(e * n_steps + t) * k + kk] = x;
                }
            }
        }
    }
    Ok(state)
}

/// Draw `y_{nm,t} ~ Poisson(λ(n, m, t))` for every cell, keeping the nonzeros.
pub fn sample_clicks(state: &LatentState, seed: u64) -> Result<InteractionTensor> {
    let mut entries = Vec::new();
    for t in 0..state.n_steps {
        for n in 0..state.n_users {
            let mut rng = stream_rng(seed, CLICK_STREAM + (t * state.n_users + n) as u64);
            for m in 0..state.n_items {
                let y = poisson(&mut rng, state.rate(n, m, t)?)?;
                if y > 0 {
                    entries.push(Entry { step: t as u32, user: n as u32, item: m as u32, count: y });
                }
            }
        }
    }
    InteractionTensor::from_entries(state.n_users, state.n_items, state.n_steps, entries)
}

/// One Poisson draw.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> Result<u32> {
    let d = Poisson::new(rate).map_err(|e| Error::Sampling(format!("rate {rate}: {e}")))?;
    let y: f64 = d.sample(rng);
    if y > u32::MAX as f64 {
        return Err(Error::Sampling(format!("count {y} overflows u32")));
    }
    Ok(y as u32)
}

/// Sample a latent state and clicks from the model. Deterministic in `seed`.
pub fn simulate(
    hp: &Hyperparams,
    n_users: usize,
    n_items: usize,
    n_steps: usize,
    seed: u64,
) -> Result<(InteractionTensor, LatentState)> {
    let state = sample_latent(hp, n_users, n_items, n_steps, seed)?;
    let tensor = sample_clicks(&state, seed)?;
    Ok((tensor, state))
}
