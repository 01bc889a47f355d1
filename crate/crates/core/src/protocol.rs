//! Rolling one-step-ahead evaluation and the static baselines.
//!
//! For each evaluation step `t` a model is trained on data before `t` and
//! asked to rank items for the users active at `t`. The static baselines are
//! the same model restricted to a single time step: `PfAll` collapses every
//! step before `t`, `PfLast` keeps only step `t − 1`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::inference::{fit, FitConfig};
use crate::metrics::{MetricValues, DEFAULT_RECALL_CUTOFF};
use crate::model::Hyperparams;
use crate::predict::{rank_items, Horizon};
use crate::tensor::{rolling_split, InteractionTensor, RollingSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dpf,
    PfAll,
    PfLast,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dpf => "dPF",
            ModelKind::PfAll => "PF-all",
            ModelKind::PfLast => "PF-last",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dpf" => Ok(ModelKind::Dpf),
            "pf-all" | "pfall" | "pf_all" => Ok(ModelKind::PfAll),
            "pf-last" | "pflast" | "pf_last" => Ok(ModelKind::PfLast),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown model kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub hp: Hyperparams,
    pub fit: FitConfig,
    pub recall_cutoff: usize,
    pub horizon: Horizon,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            hp: Hyperparams::default(),
            fit: FitConfig::default(),
            recall_cutoff: DEFAULT_RECALL_CUTOFF,
            horizon: Horizon::Extrapolate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub step: usize,
    pub metrics: MetricValues,
    pub users_evaluated: usize,
    /// Test users left with no scorable item.
    pub users_skipped: usize,
    /// Test entries dropped because the user or item never occurs in training.
    pub cold_entries: usize,
    pub cold_users: usize,
    pub cold_items: usize,
    /// Test items the user already clicked during training; these are
    /// excluded from the candidate set and therefore cannot be ranked.
    pub repeat_entries: usize,
    pub final_elbo: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub kind: ModelKind,
    pub recall_cutoff: usize,
    pub folds: Vec<FoldReport>,
    /// Unweighted mean over folds.
    pub mean: MetricValues,
    /// Requested steps that had no scorable user.
    pub empty_folds: Vec<usize>,
}

/// Training tensor for `kind` on a split.
pub fn training_tensor(split: &RollingSplit, kind: ModelKind) -> Result<InteractionTensor> {
    let t = split.eval_step;
    match kind {
        ModelKind::Dpf => Ok(split.train.clone()),
        ModelKind::PfAll => split.train.collapse_steps(0..t),
        ModelKind::PfLast => split.train.collapse_steps(t - 1..t),
    }
}

/// Fit on one split and score its test entries. Returns `None` if no user
/// has a rankable test item.
pub fn evaluate_fold<E: Executor>(
    split: &RollingSplit,
    kind: ModelKind,
    config: &EvalConfig,
    exec: &E,
) -> Result<Option<FoldReport>> {
    let train = training_tensor(split, kind)?;
    let n_users = train.n_users();
    let mut seen: Vec<Vec<u32>> = alloc::vec![Vec::new(); n_users];
    for e in split.train.entries() {
        seen[e.user as usize].push(e.item);
    }
    for s in &mut seen {
        s.sort_unstable();
        s.dedup();
    }
    let (_, active_items) = split.train.active_entities();
    let candidates: Vec<u32> = active_items.into_iter().collect();

    let mut tests: Vec<(u32, Vec<u32>)> = Vec::new();
    let mut repeat_entries = 0;
    for e in split.test.entries() {
        if seen[e.user as usize].binary_search(&e.item).is_ok() {
            repeat_entries += 1;
            continue;
        }
        match tests.last_mut() {
            Some((u, items)) if *u == e.user => items.push(e.item),
            _ => tests.push((e.user, alloc::vec![e.item])),
        }
    }
    let test_users: usize = {
        let mut us: Vec<u32> = split.test.entries().iter().map(|e| e.user).collect();
        us.dedup();
        us.len()
    };
    if tests.is_empty() {
        return Ok(None);
    }

    let result = fit(&train, &config.hp, &config.fit, exec)?;
    let state = &result.state;
    let score_step = train.n_steps();
    let n_items = train.n_items();
    let ranked: Vec<Result<Vec<u32>>> = exec.map(tests.len(), |i| {
        let (user, items) = &tests[i];
        let list = rank_items(
            state,
            &config.hp,
            *user as usize,
            score_step,
            &candidates,
            &seen[*user as usize],
            config.horizon,
        )?;
        let table = list.rank_table(n_items);
        Ok(items.iter().map(|&m| table[m as usize].expect("test item is a candidate")).collect())
    });
    let ranks: Vec<Vec<u32>> = ranked.into_iter().collect::<Result<_>>()?;
    let metrics = MetricValues::compute(&ranks, config.recall_cutoff)?;
    Ok(Some(FoldReport {
        step: split.eval_step,
        metrics,
        users_evaluated: ranks.len(),
        users_skipped: test_users - ranks.len(),
        cold_entries: split.dropped_entries,
        cold_users: split.dropped_users,
        cold_items: split.dropped_items,
        repeat_entries,
        final_elbo: result.elbo_trace.last().copied().unwrap_or(f64::NAN),
        sweeps: result.elbo_trace.len(),
    }))
}

/// Run the rolling protocol over `eval_steps`.
pub fn evaluate_rolling<E: Executor>(
    tensor: &InteractionTensor,
    kind: ModelKind,
    eval_steps: &[usize],
    config: &EvalConfig,
    exec: &E,
) -> Result<MetricReport> {
    let mut folds = Vec::new();
    let mut empty_folds = Vec::new();
    for &t in eval_steps {
        let split = rolling_split(tensor, t)?;
        match evaluate_fold(&split, kind, config, exec)? {
            Some(f) => folds.push(f),
            None => empty_folds.push(t),
        }
    }
    if folds.is_empty() {
        return Err(Error::NoValidFolds);
    }
    let n = folds.len() as f64;
    let mut mean = MetricValues::default();
    for f in &folds {
        mean.recall += f.metrics.recall / n;
        mean.ndcg += f.metrics.ndcg / n;
        mean.mrr += f.metrics.mrr / n;
        mean.mar += f.metrics.mar / n;
    }
    Ok(MetricReport { kind, recall_cutoff: config.recall_cutoff, folds, mean, empty_folds })
}
