#![allow(dead_code)]

use dpf_core::{Entry, Hyperparams, InteractionTensor, VariationalState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Variational state with means in `[-1, 1]` and sds in `[e^-2, 1]`.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize, m: usize, t: usize, k: usize) -> VariationalState {
    let mut s = VariationalState::constant(n, m, t, k, 0.0, 1.0);
    for f in [&mut s.user_dyn, &mut s.item_dyn, &mut s.user_glob, &mut s.item_glob] {
        for x in f.mean.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        for x in f.log_sd.iter_mut() {
            *x = rng.random_range(-2.0..0.0);
        }
    }
    s
}

/// Tensor with each cell nonzero with probability `density`, counts in `1..=3`.
pub fn random_tensor(rng: &mut ChaCha8Rng, n: usize, m: usize, t: usize, density: f64) -> InteractionTensor {
    let mut entries = Vec::new();
    for step in 0..t {
        for u in 0..n {
            for i in 0..m {
                if rng.random::<f64>() < density {
                    entries.push(Entry {
                        step: step as u32,
                        user: u as u32,
                        item: i as u32,
                        count: rng.random_range(1..=3),
                    });
                }
            }
        }
    }
    InteractionTensor::from_entries(n, m, t, entries).unwrap()
}

pub fn random_hyper(rng: &mut ChaCha8Rng, k: usize) -> Hyperparams {
    let mut sd = || rng.random_range(0.3..3.0);
    let (a, b, c, d) = (sd(), sd(), sd(), sd());
    Hyperparams {
        k,
        mu_u: rng.random_range(-0.5..0.5),
        sigma_u: a,
        mu_v: rng.random_range(-0.5..0.5),
        sigma_v: b,
        mu_ubar: rng.random_range(-0.5..0.5),
        sigma_ubar: c,
        mu_vbar: rng.random_range(-0.5..0.5),
        sigma_vbar: d,
    }
}

/// `E_q[λ(n, m, t)]` computed directly from the Gaussian moments.
pub fn brute_expected_rate(s: &VariationalState, n: usize, m: usize, t: usize) -> f64 {
    let k = s.k;
    (0..k)
        .map(|kk| {
            let du = (n * s.n_steps + t) * k + kk;
            let dv = (m * s.n_steps + t) * k + kk;
            let gu = n * k + kk;
            let gv = m * k + kk;
            let mean = s.user_dyn.mean[du] + s.user_glob.mean[gu] + s.item_dyn.mean[dv] + s.item_glob.mean[gv];
            let var = [s.user_dyn.log_sd[du], s.user_glob.log_sd[gu], s.item_dyn.log_sd[dv], s.item_glob.log_sd[gv]]
                .iter()
                .map(|l| (2.0 * l).exp())
                .sum::<f64>();
            (mean + var / 2.0).exp()
        })
        .sum()
}

/// Largest per-coordinate `|a − b| / max(|a|, |b|, 1)` between an analytic
/// gradient and central differences with step `h`.
pub fn max_fd_error(f: impl Fn(&[f64]) -> f64, x: &[f64], grad: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let down = f(&xp);
        xp[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1.0);
        worst = worst.max(err);
    }
    worst
}
