//! Sparse user × item × time count tensors.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One nonzero cell `y_{nm,t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub step: u32,
    pub user: u32,
    pub item: u32,
    pub count: u32,
}

/// Sparse counts over `n_users × n_items × n_steps`.
///
/// Entries are kept sorted by `(step, user, item)` with unique keys and
/// strictly positive counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionTensor {
    n_users: usize,
    n_items: usize,
    n_steps: usize,
    entries: Vec<Entry>,
    step_offsets: Vec<usize>,
}

impl InteractionTensor {
    /// Build a tensor, summing duplicate keys and discarding zero counts.
    pub fn from_entries(n_users: usize, n_items: usize, n_steps: usize, mut entries: Vec<Entry>) -> Result<Self> {
        if n_users == 0 || n_items == 0 || n_steps == 0 {
            return Err(Error::InvalidDimensions(format!(
                "N={n_users}, M={n_items}, T={n_steps}; all must be positive"
            )));
        }
        for e in &entries {
            check_index("user", e.user as usize, n_users)?;
            check_index("item", e.item as usize, n_items)?;
            check_index("step", e.step as usize, n_steps)?;
        }
        entries.sort_unstable_by_key(|e| (e.step, e.user, e.item));
        let mut merged: Vec<Entry> = Vec::with_capacity(entries.len());
        for e in entries {
            if e.count == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if (last.step, last.user, last.item) == (e.step, e.user, e.item) => {
                    last.count += e.count;
                }
                _ => merged.push(e),
            }
        }
        Ok(Self::from_sorted(n_users, n_items, n_steps, merged))
    }

    fn from_sorted(n_users: usize, n_items: usize, n_steps: usize, entries: Vec<Entry>) -> Self {
        let mut step_offsets = alloc::vec![0usize; n_steps + 1];
        for e in &entries {
            step_offsets[e.step as usize + 1] += 1;
        }
        for t in 0..n_steps {
            step_offsets[t + 1] += step_offsets[t];
        }
        Self { n_users, n_items, n_steps, entries, step_offsets }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries at step `t`, sorted by `(user, item)`.
    pub fn step_entries(&self, t: usize) -> &[Entry] {
        &self.entries[self.step_offsets[t]..self.step_offsets[t + 1]]
    }

    /// Index range of step `t` in [`entries`](Self::entries).
    pub fn step_range(&self, t: usize) -> core::ops::Range<usize> {
        self.step_offsets[t]..self.step_offsets[t + 1]
    }

    /// Number of nonzeros per step, `R_t`.
    pub fn step_nnz(&self) -> Vec<usize> {
        self.step_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|e| e.count as u64).sum()
    }

    /// Replace every count with 1.
    pub fn binarize(&self) -> Self {
        let entries = self.entries.iter().map(|e| Entry { count: 1, ..*e }).collect();
        Self::from_sorted(self.n_users, self.n_items, self.n_steps, entries)
    }

    /// Sum over steps `range` into a single-step tensor.
    pub fn collapse_steps(&self, range: core::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n_steps {
            return Err(Error::InvalidDimensions(format!(
                "cannot collapse steps {}..{} of a {}-step tensor",
                range.start, range.end, self.n_steps
            )));
        }
        let entries = self.entries[self.step_offsets[range.start]..self.step_offsets[range.end]]
            .iter()
            .map(|e| Entry { step: 0, ..*e })
            .collect();
        Self::from_entries(self.n_users, self.n_items, 1, entries)
    }

    /// Distinct users and items with at least one entry.
    pub fn active_entities(&self) -> (BTreeSet<u32>, BTreeSet<u32>) {
        let users = self.entries.iter().map(|e| e.user).collect();
        let items = self.entries.iter().map(|e| e.item).collect();
        (users, items)
    }

    /// Swap the roles of users and items.
    pub fn transpose(&self) -> Self {
        let entries = self.entries.iter().map(|e| Entry { user: e.item, item: e.user, ..*e }).collect();
        Self::from_entries(self.n_items, self.n_users, self.n_steps, entries).expect("transposed indices stay in range")
    }
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::IndexOutOfRange { what, index, len });
    }
    Ok(())
}

/// Train/test pair for one fold of the rolling protocol.
#[derive(Debug, Clone)]
pub struct RollingSplit {
    /// Entries at steps `< eval_step`; `n_steps == eval_step`.
    pub train: InteractionTensor,
    /// Entries at `eval_step` whose user and item both occur in `train`.
    /// Keeps the full step range `eval_step + 1`.
    pub test: InteractionTensor,
    pub eval_step: usize,
    /// Test entries discarded because the user or the item is cold.
    pub dropped_entries: usize,
    pub dropped_users: usize,
    pub dropped_items: usize,
}

/// Train on all steps before `eval_step`, test on `eval_step`.
pub fn rolling_split(tensor: &InteractionTensor, eval_step: usize) -> Result<RollingSplit> {
    if eval_step == 0 || eval_step >= tensor.n_steps {
        return Err(Error::EvalStepOutOfRange { step: eval_step, n_steps: tensor.n_steps });
    }
    let train_entries = tensor.entries[..tensor.step_offsets[eval_step]].to_vec();
    let train = InteractionTensor::from_sorted(tensor.n_users, tensor.n_items, eval_step, train_entries);
    let (warm_users, warm_items) = train.active_entities();
    let mut cold_users = BTreeSet::new();
    let mut cold_items = BTreeSet::new();
    let mut kept = Vec::new();
    for e in tensor.step_entries(eval_step) {
        let user_ok = warm_users.contains(&e.user);
        let item_ok = warm_items.contains(&e.item);
        if !user_ok {
            cold_users.insert(e.user);
        }
        if !item_ok {
            cold_items.insert(e.item);
        }
        if user_ok && item_ok {
            kept.push(*e);
        }
    }
    let dropped_entries = tensor.step_entries(eval_step).len() - kept.len();
    let test = InteractionTensor::from_sorted(tensor.n_users, tensor.n_items, eval_step + 1, kept);
    Ok(RollingSplit {
        train,
        test,
        eval_step,
        dropped_entries,
        dropped_users: cold_users.len(),
        dropped_items: cold_items.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn e(step: u32, user: u32, item: u32, count: u32) -> Entry {
        Entry { step, user, item, count }
    }

    #[test]
    fn duplicates_are_summed() {
        let t = InteractionTensor::from_entries(2, 2, 1, vec![e(0, 0, 1, 1), e(0, 0, 1, 2)]).unwrap();
        assert_eq!(t.entries(), &[e(0, 0, 1, 3)]);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = InteractionTensor::from_entries(2, 2, 1, vec![e(0, 2, 0, 1)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { what: "user", .. }));
    }

    #[test]
    fn binarize_clamps_and_preserves_pattern() {
        let t = InteractionTensor::from_entries(3, 3, 2, vec![e(0, 0, 0, 3), e(0, 1, 2, 1), e(1, 2, 1, 7)]).unwrap();
        let b = t.binarize();
        assert!(b.entries().iter().all(|x| x.count == 1));
        assert_eq!(t.step_nnz(), b.step_nnz());
        let empty = InteractionTensor::from_entries(1, 1, 1, vec![]).unwrap();
        assert_eq!(empty.binarize(), empty);
    }

    #[test]
    fn rolling_split_basic() {
        let t =
            InteractionTensor::from_entries(3, 3, 3, vec![e(0, 0, 0, 1), e(1, 1, 1, 1), e(2, 0, 1, 1), e(2, 2, 0, 1)])
                .unwrap();
        let s = rolling_split(&t, 2).unwrap();
        assert_eq!(s.train.n_steps(), 2);
        assert_eq!(s.train.nnz(), 2);
        assert!(s.train.entries().iter().all(|x| x.step < 2));
        // user 2 never appears in training
        assert_eq!(s.test.entries(), &[e(2, 0, 1, 1)]);
        assert_eq!(s.dropped_entries, 1);
        assert_eq!(s.dropped_users, 1);
        assert_eq!(s.dropped_items, 0);
    }

    #[test]
    fn rolling_split_first_step_is_static() {
        let t =
            InteractionTensor::from_entries(2, 2, 3, vec![e(0, 0, 0, 1), e(0, 1, 1, 1), e(1, 0, 1, 1), e(2, 1, 0, 1)])
                .unwrap();
        let s = rolling_split(&t, 1).unwrap();
        assert_eq!(s.train.n_steps(), 1);
        assert_eq!(s.train.entries(), &[e(0, 0, 0, 1), e(0, 1, 1, 1)]);
        assert_eq!(s.test.entries(), &[e(1, 0, 1, 1)]);
    }

    #[test]
    fn rolling_split_range_checked() {
        let t = InteractionTensor::from_entries(1, 1, 3, vec![e(0, 0, 0, 1)]).unwrap();
        assert!(rolling_split(&t, 0).is_err());
        assert!(rolling_split(&t, 3).is_err());
    }

    #[test]
    fn repeat_clicks_are_kept_in_test() {
        let t = InteractionTensor::from_entries(1, 1, 2, vec![e(0, 0, 0, 1), e(1, 0, 0, 1)]).unwrap();
        let s = rolling_split(&t, 1).unwrap();
        assert_eq!(s.test.nnz(), 1);
    }

    #[test]
    fn collapse_sums_counts() {
        let t = InteractionTensor::from_entries(1, 2, 3, vec![e(0, 0, 0, 1), e(1, 0, 0, 2), e(2, 0, 1, 1)]).unwrap();
        let c = t.collapse_steps(0..2).unwrap();
        assert_eq!(c.n_steps(), 1);
        assert_eq!(c.entries(), &[e(0, 0, 0, 3)]);
    }
}
