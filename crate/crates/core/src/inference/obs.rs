//! Per-entity views of the nonzero observations.

use alloc::vec::Vec;

use super::Side;
use crate::tensor::InteractionTensor;

/// Index from `(side, entity, step)` to positions in the tensor's entry list.
#[derive(Debug, Clone)]
pub struct Observations<'a> {
    tensor: &'a InteractionTensor,
    user_perm: Vec<u32>,
    user_offsets: Vec<usize>,
    item_perm: Vec<u32>,
    item_offsets: Vec<usize>,
}

impl<'a> Observations<'a> {
    pub fn new(tensor: &'a InteractionTensor) -> Self {
        let (n, m, steps) = (tensor.n_users(), tensor.n_items(), tensor.n_steps());
        let (user_perm, user_offsets) = build(tensor, n, steps, |e| e.user);
        let (item_perm, item_offsets) = build(tensor, m, steps, |e| e.item);
        Self { tensor, user_perm, user_offsets, item_perm, item_offsets }
    }

    pub fn tensor(&self) -> &'a InteractionTensor {
        self.tensor
    }

    /// Entry positions for `entity` at step `t`.
    #[inline]
    pub fn of(&self, side: Side, entity: usize, t: usize) -> &[u32] {
        let (perm, offsets, count) = match side {
            Side::User => (&self.user_perm, &self.user_offsets, self.tensor.n_users()),
            Side::Item => (&self.item_perm, &self.item_offsets, self.tensor.n_items()),
        };
        let base = t * (count + 1) + entity;
        &perm[offsets[base]..offsets[base + 1]]
    }
}

/// Counting sort of entry positions by `(step, key)`.
fn build(
    tensor: &InteractionTensor,
    count: usize,
    steps: usize,
    key: impl Fn(&crate::tensor::Entry) -> u32,
) -> (Vec<u32>, Vec<usize>) {
    let stride = count + 1;
    let mut offsets = alloc::vec![0usize; steps * stride];
    for e in tensor.entries() {
        offsets[e.step as usize * stride + key(e) as usize + 1] += 1;
    }
    let mut running = 0;
    for t in 0..steps {
        for j in 0..stride {
            let slot = t * stride + j;
            if j == 0 {
                offsets[slot] = running;
            } else {
                running += offsets[slot];
                offsets[slot] = running;
            }
        }
    }
    let mut cursor: Vec<usize> = (0..steps * stride).map(|i| offsets[i]).collect();
    let mut perm = alloc::vec![0u32; tensor.nnz()];
    for (pos, e) in tensor.entries().iter().enumerate() {
        let slot = e.step as usize * stride + key(e) as usize;
        perm[cursor[slot]] = pos as u32;
        cursor[slot] += 1;
    }
    (perm, offsets)
}
