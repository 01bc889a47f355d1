//! Bucketing of raw timestamped events into discrete time steps.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{Entry, InteractionTensor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub user_id: String,
    pub item_id: String,
    /// Seconds since the epoch.
    pub timestamp: i64,
    pub count: u32,
}

impl RawEvent {
    pub fn new(user_id: impl Into<String>, item_id: impl Into<String>, timestamp: i64) -> Self {
        Self { user_id: user_id.into(), item_id: item_id.into(), timestamp, count: 1 }
    }
}

/// `step(ts) = floor((ts - origin) / granularity)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeBucketing {
    pub origin: i64,
    pub granularity: u64,
}

impl TimeBucketing {
    pub fn new(origin: i64, granularity: u64) -> Result<Self> {
        if granularity == 0 {
            return Err(Error::InvalidDimensions("granularity must be positive".into()));
        }
        Ok(Self { origin, granularity })
    }

    pub fn step_index(&self, timestamp: i64) -> Result<usize> {
        if timestamp < self.origin {
            return Err(Error::TimestampBeforeOrigin { timestamp, origin: self.origin });
        }
        let offset = (timestamp as i128 - self.origin as i128) as u128;
        Ok((offset / self.granularity as u128) as usize)
    }
}

/// Bijection between opaque ids and dense indices, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl IdMap {
    pub fn from_ids(ids: Vec<String>) -> Result<Self> {
        let mut map = Self::default();
        for id in ids {
            let before = map.len();
            if map.intern(&id) as usize != before {
                return Err(Error::InvalidDimensions(alloc::format!("duplicate id {id:?}")));
            }
        }
        Ok(map)
    }

    /// Dense ids `"0", "1", ...`.
    pub fn sequential(n: usize) -> Self {
        Self::from_ids((0..n).map(|i| alloc::format!("{i}")).collect()).expect("unique")
    }

    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.into());
        self.index.insert(id.into(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> Option<&str> {
        self.ids.get(index).map(String::as_str)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Events turned into a tensor, with the id maps needed to go back.
#[derive(Debug, Clone)]
pub struct BucketedData {
    pub tensor: InteractionTensor,
    pub users: IdMap,
    pub items: IdMap,
}

/// Assign events to time steps and sum counts per `(user, item, step)`.
///
/// `T` is the largest step index plus one; steps without events are kept.
pub fn bucket_events(events: &[RawEvent], bucketing: TimeBucketing) -> Result<BucketedData> {
    if events.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    let mut entries = Vec::with_capacity(events.len());
    let mut max_step = 0;
    for ev in events {
        let step = bucketing.step_index(ev.timestamp)?;
        max_step = max_step.max(step);
        let user = users.intern(&ev.user_id);
        let item = items.intern(&ev.item_id);
        entries.push(Entry { step: step as u32, user, item, count: ev.count });
    }
    let tensor = InteractionTensor::from_entries(users.len(), items.len(), max_step + 1, entries)?;
    Ok(BucketedData { tensor, users, items })
}
