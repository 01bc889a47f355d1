//! Posterior predictive scores and per-user rankings.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inference::{Side, VariationalState};
use crate::math;
use crate::model::Hyperparams;

/// How to score the step right after the fitted range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Horizon {
    /// Carry the last fitted mean forward and add one transition variance.
    #[default]
    Extrapolate,
    /// Reuse the last fitted step's factors unchanged.
    LastFitted,
}

/// Mean and variance of one dynamic factor at step `t`, which may be one
/// past the fitted range.
fn dynamic_moments(
    state: &VariationalState,
    hp: &Hyperparams,
    side: Side,
    entity: usize,
    t: usize,
    k: usize,
    horizon: Horizon,
) -> (f64, f64) {
    let f = state.dynamic(side);
    if t < state.n_steps {
        let i = state.dyn_offset(entity, t) + k;
        return (f.mean[i], f.var(i));
    }
    let i = state.dyn_offset(entity, state.n_steps - 1) + k;
    let grow = match (horizon, side) {
        (Horizon::LastFitted, _) => 0.0,
        (Horizon::Extrapolate, Side::User) => hp.sigma_u * hp.sigma_u,
        (Horizon::Extrapolate, Side::Item) => hp.sigma_v * hp.sigma_v,
    };
    (f.mean[i], f.var(i) + grow)
}

fn check(state: &VariationalState, n: usize, m: usize, t: usize) -> Result<()> {
    if n >= state.n_users {
        return Err(Error::IndexOutOfRange { what: "user", index: n, len: state.n_users });
    }
    if m >= state.n_items {
        return Err(Error::IndexOutOfRange { what: "item", index: m, len: state.n_items });
    }
    if t > state.n_steps {
        return Err(Error::IndexOutOfRange { what: "step", index: t, len: state.n_steps + 1 });
    }
    Ok(())
}

/// Per-factor log expected rates; their log-sum-exp is the log score.
fn factor_log_means(
    state: &VariationalState,
    hp: &Hyperparams,
    n: usize,
    m: usize,
    t: usize,
    horizon: Horizon,
    out: &mut [f64],
) {
    let k = state.k;
    for (kk, o) in out.iter_mut().enumerate() {
        let (mu, vu) = dynamic_moments(state, hp, Side::User, n, t, kk, horizon);
        let (mv, vv) = dynamic_moments(state, hp, Side::Item, m, t, kk, horizon);
        let gu = n * k + kk;
        let gv = m * k + kk;
        let mean = mu + mv + state.user_glob.mean[gu] + state.item_glob.mean[gv];
        let var = vu + vv + state.user_glob.var(gu) + state.item_glob.var(gv);
        *o = mean + 0.5 * var;
    }
}

/// `log E_q[λ(n, m, t)]`.
pub fn predict_log_score(
    state: &VariationalState,
    hp: &Hyperparams,
    n: usize,
    m: usize,
    t: usize,
    horizon: Horizon,
) -> Result<f64> {
    check(state, n, m, t)?;
    let mut buf = alloc::vec![0.0; state.k];
    factor_log_means(state, hp, n, m, t, horizon, &mut buf);
    Ok(math::log_sum_exp(&buf))
}

/// `E_q[λ(n, m, t)] = Σ_k exp(Σ means + Σ variances / 2)`.
///
/// `t` may equal the number of fitted steps, in which case the dynamic
/// factors are projected one step ahead according to `horizon`.
pub fn predict_score(
    state: &VariationalState,
    hp: &Hyperparams,
    n: usize,
    m: usize,
    t: usize,
    horizon: Horizon,
) -> Result<f64> {
    check(state, n, m, t)?;
    let mut buf = alloc::vec![0.0; state.k];
    factor_log_means(state, hp, n, m, t, horizon, &mut buf);
    Ok(buf.into_iter().map(math::exp).sum())
}

/// Items for one user at one step in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    pub user: usize,
    pub step: usize,
    pub items: Vec<u32>,
    pub scores: Vec<f64>,
    /// Natural logs of `scores`, used for ordering so overflow cannot tie items.
    pub log_scores: Vec<f64>,
}

impl ScoredList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `rank_of[item] = Some(1-based rank)` for every ranked item.
    pub fn rank_table(&self, n_items: usize) -> Vec<Option<u32>> {
        let mut table = alloc::vec![None; n_items];
        for (pos, &item) in self.items.iter().enumerate() {
            table[item as usize] = Some(pos as u32 + 1);
        }
        table
    }
}

/// Rank `candidates` minus `exclude` by predicted score.
///
/// Ties are broken by ascending item index. Duplicate candidates are ranked once.
pub fn rank_items(
    state: &VariationalState,
    hp: &Hyperparams,
    n: usize,
    t: usize,
    candidates: &[u32],
    exclude: &[u32],
    horizon: Horizon,
) -> Result<ScoredList> {
    let mut excluded = alloc::vec![false; state.n_items];
    for &m in exclude {
        if let Some(slot) = excluded.get_mut(m as usize) {
            *slot = true;
        }
    }
    let mut items: Vec<u32> = Vec::with_capacity(candidates.len());
    for &m in candidates {
        if (m as usize) >= state.n_items {
            return Err(Error::IndexOutOfRange { what: "item", index: m as usize, len: state.n_items });
        }
        if !excluded[m as usize] {
            excluded[m as usize] = true;
            items.push(m);
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    check(state, n, 0, t)?;
    let mut buf = alloc::vec![0.0; state.k];
    let mut scored: Vec<(f64, u32)> = items
        .iter()
        .map(|&m| {
            factor_log_means(state, hp, n, m as usize, t, horizon, &mut buf);
            (math::log_sum_exp(&buf), m)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(ScoredList {
        user: n,
        step: t,
        items: scored.iter().map(|s| s.1).collect(),
        scores: scored.iter().map(|s| math::exp(s.0)).collect(),
        log_scores: scored.iter().map(|s| s.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn zero_state(k: usize, items: usize) -> VariationalState {
        let mut s = VariationalState::constant(1, items, 1, k, 0.0, 1.0);
        for f in [&mut s.user_dyn, &mut s.item_dyn, &mut s.user_glob, &mut s.item_glob] {
            f.log_sd.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        }
        s
    }

    #[test]
    fn unit_factors_score_k() {
        let s = zero_state(20, 1);
        let hp = Hyperparams::default();
        assert!((predict_score(&s, &hp, 0, 0, 0, Horizon::Extrapolate).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn lognormal_moment_in_score() {
        let mut s = zero_state(1, 1);
        s.item_glob.log_sd[0] = 0.5 * 2f64.ln();
        let hp = Hyperparams::with_k(1);
        let v = predict_score(&s, &hp, 0, 0, 0, Horizon::Extrapolate).unwrap();
        assert!((v - core::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn increasing_a_mean_increases_score() {
        let mut s = VariationalState::constant(2, 2, 2, 3, 0.1, 0.5);
        let hp = Hyperparams::with_k(3);
        let before = predict_score(&s, &hp, 1, 0, 1, Horizon::Extrapolate).unwrap();
        let o = s.dyn_offset(0, 1);
        s.item_dyn.mean[o + 1] += 0.01;
        let after = predict_score(&s, &hp, 1, 0, 1, Horizon::Extrapolate).unwrap();
        assert!(after > before);
    }

    #[test]
    fn extrapolation_adds_transition_variance() {
        let s = zero_state(1, 1);
        let hp = Hyperparams { sigma_u: 1.0, sigma_v: 0.5, ..Hyperparams::with_k(1) };
        let v = predict_score(&s, &hp, 0, 0, 1, Horizon::Extrapolate).unwrap();
        assert!((v - (0.5 * (1.0 + 0.25f64)).exp()).abs() < 1e-14);
        let w = predict_score(&s, &hp, 0, 0, 1, Horizon::LastFitted).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert!(predict_score(&s, &hp, 0, 0, 2, Horizon::Extrapolate).is_err());
    }

    #[test]
    fn ranking_order_and_ties() {
        let mut s = zero_state(1, 4);
        let hp = Hyperparams::with_k(1);
        s.item_glob.mean[2] = 5f64.ln();
        s.item_glob.mean[1] = 3f64.ln();
        let r = rank_items(&s, &hp, 0, 0, &[0, 1, 2, 3], &[], Horizon::Extrapolate).unwrap();
        assert_eq!(r.items, vec![2, 1, 0, 3]);
        assert!((r.scores[0] - 5.0).abs() < 1e-12);
        let table = r.rank_table(4);
        assert_eq!(table[2], Some(1));
        assert_eq!(table[3], Some(4));
    }

    #[test]
    fn exclusion_and_empty_candidates() {
        let s = zero_state(1, 3);
        let hp = Hyperparams::with_k(1);
        let r = rank_items(&s, &hp, 0, 0, &[0, 1, 2], &[1], Horizon::Extrapolate).unwrap();
        assert!(!r.items.contains(&1));
        let err = rank_items(&s, &hp, 0, 0, &[1], &[1], Horizon::Extrapolate).unwrap_err();
        assert_eq!(err, Error::EmptyCandidates);
    }
}
