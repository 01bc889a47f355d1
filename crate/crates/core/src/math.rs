//! Scalar helpers on top of `libm` so the crate stays `no_std`.

pub use core::f64::consts::PI;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `log(y!)`.
pub fn ln_factorial(y: u32) -> f64 {
    libm::lgamma(y as f64 + 1.0)
}

/// `E[exp(X)]` for `X ~ N(mean, sd²)`.
#[inline]
pub fn lognormal_mean(mean: f64, sd: f64) -> f64 {
    exp(mean + 0.5 * sd * sd)
}

/// Entropy of a univariate Gaussian given its log standard deviation.
#[inline]
pub fn gaussian_entropy(log_sd: f64) -> f64 {
    log_sd + 0.5 * ln(2.0 * PI * core::f64::consts::E)
}

/// `log(σ √(2π))`, the normalizer of a Gaussian log density.
#[inline]
pub fn gaussian_log_norm(sd: f64) -> f64 {
    ln(sd) + 0.5 * ln(2.0 * PI)
}

/// Numerically stable `log Σ exp(x_i)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = xs.iter().map(|&x| exp(x - max)).sum();
    max + ln(s)
}

/// In-place softmax with max subtraction.
pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in xs.iter_mut() {
        *x = exp(*x - max);
        total += *x;
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
}
