//! Rank-based metrics for implicit feedback.
//!
//! Each function takes, per evaluated user, the 1-based ranks of that user's
//! test items, and averages the per-user sums over users. Scores never enter:
//! the metrics depend on the ranking only.

use crate::error::{Error, Result};
use crate::math;

pub const DEFAULT_RECALL_CUTOFF: usize = 50;

fn check(ranks: &[impl AsRef<[u32]>]) -> Result<()> {
    if ranks.is_empty() || ranks.iter().any(|r| r.as_ref().is_empty()) {
        return Err(Error::EmptyTestSet);
    }
    Ok(())
}

fn mean_over_users(ranks: &[impl AsRef<[u32]>], per_item: impl Fn(u32) -> f64) -> Result<f64> {
    check(ranks)?;
    let total: f64 = ranks.iter().map(|r| r.as_ref().iter().map(|&x| per_item(x)).sum::<f64>()).sum();
    Ok(total / ranks.len() as f64)
}

/// `1/N Σ_i |{j : rank(i,j) ≤ T}| / min(T, |y_i|)`.
pub fn recall_at(ranks: &[impl AsRef<[u32]>], cutoff: usize) -> Result<f64> {
    check(ranks)?;
    let total: f64 = ranks
        .iter()
        .map(|r| {
            let r = r.as_ref();
            let hits = r.iter().filter(|&&x| x as usize <= cutoff).count();
            hits as f64 / cutoff.min(r.len()) as f64
        })
        .sum();
    Ok(total / ranks.len() as f64)
}

/// `1/N Σ_i Σ_j 1 / log₂(rank + 1)`; unnormalized, so it can exceed 1.
pub fn ndcg(ranks: &[impl AsRef<[u32]>]) -> Result<f64> {
    mean_over_users(ranks, |x| 1.0 / math::log2(x as f64 + 1.0))
}

/// `1/N Σ_i Σ_j 1 / rank`.
pub fn mrr(ranks: &[impl AsRef<[u32]>]) -> Result<f64> {
    mean_over_users(ranks, |x| 1.0 / x as f64)
}

/// `1/N Σ_i Σ_j rank`; lower is better.
pub fn mar(ranks: &[impl AsRef<[u32]>]) -> Result<f64> {
    mean_over_users(ranks, |x| x as f64)
}

/// All four metrics for one set of rankings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricValues {
    pub recall: f64,
    pub ndcg: f64,
    pub mrr: f64,
    pub mar: f64,
}

impl MetricValues {
    pub fn compute(ranks: &[impl AsRef<[u32]>], cutoff: usize) -> Result<Self> {
        Ok(Self { recall: recall_at(ranks, cutoff)?, ndcg: ndcg(ranks)?, mrr: mrr(ranks)?, mar: mar(ranks)? })
    }
}
