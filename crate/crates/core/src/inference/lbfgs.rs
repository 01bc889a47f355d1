//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! The search direction comes from the usual two-loop recursion over the
//! last `memory` curvature pairs. A step is only accepted when it satisfies
//! sufficient decrease, so the returned point is never worse than `x0`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the largest gradient component is below this.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { memory: 5, max_iters: 100, grad_tol: 1e-10, c1: 1e-4, max_backtracks: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Minimize `f`, which returns the value and writes the gradient.
///
/// If `f(x0)` is not finite the start point is returned unchanged.
pub fn minimize<F>(mut f: F, x0: &[f64], config: &LbfgsConfig) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = alloc::vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum { x, value: fx, iterations: 0, converged: false };
    }
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(config.memory);
    let mut d = alloc::vec![0.0; n];
    let mut alpha_buf = alloc::vec![0.0; config.memory];
    let mut x_new = alloc::vec![0.0; n];
    let mut g_new = alloc::vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        if inf_norm(&g) <= config.grad_tol {
            converged = true;
            break;
        }
        // Two-loop recursion: d = −H g.
        d.copy_from_slice(&g);
        for (i, p) in history.iter().enumerate().rev() {
            let a = p.rho * dot(&p.s, &d);
            alpha_buf[i] = a;
            d.iter_mut().zip(&p.y).for_each(|(di, yi)| *di -= a * yi);
        }
        let gamma = match history.back() {
            Some(p) => dot(&p.s, &p.y) / dot(&p.y, &p.y),
            None => 1.0 / f64::max(1.0, crate::math::sqrt(dot(&g, &g))),
        };
        d.iter_mut().for_each(|di| *di *= gamma);
        for (i, p) in history.iter().enumerate() {
            let b = p.rho * dot(&p.y, &d);
            let a = alpha_buf[i];
            d.iter_mut().zip(&p.s).for_each(|(di, si)| *di += (a - b) * si);
        }
        d.iter_mut().for_each(|di| *di = -*di);
        let mut slope = dot(&d, &g);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            let scale = 1.0 / f64::max(1.0, crate::math::sqrt(dot(&g, &g)));
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -scale * gi);
            slope = dot(&d, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..config.max_backtracks {
            x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + step * di);
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && g_new.iter().all(|v| v.is_finite()) && f_new <= fx + config.c1 * step * slope {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            break;
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let progress = fx - f_new;
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if sy > 1e-12 * crate::math::sqrt(dot(&s, &s)) * crate::math::sqrt(dot(&y, &y)) && sy > 0.0 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        if progress == 0.0 {
            break;
        }
    }
    Minimum { x, value: fx, iterations, converged }
}
