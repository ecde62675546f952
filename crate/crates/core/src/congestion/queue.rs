use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::QueueError;
use crate::routing::TuId;
use crate::time::SimTime;

/// Default per-direction queue limit.
pub const DEFAULT_QUEUE_LIMIT: Amount = Amount::from_whole_tokens(8000);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulingPolicy {
    #[default]
    Fifo,
    Lifo,
    /// Smallest payment first.
    Spf,
    /// Earliest deadline first.
    Edf,
}

impl std::str::FromStr for SchedulingPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" => Ok(SchedulingPolicy::Fifo),
            "lifo" => Ok(SchedulingPolicy::Lifo),
            "spf" => Ok(SchedulingPolicy::Spf),
            "edf" => Ok(SchedulingPolicy::Edf),
            other => Err(format!("unknown scheduling policy `{other}`")),
        }
    }
}

impl std::fmt::Display for SchedulingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchedulingPolicy::Fifo => "fifo",
            SchedulingPolicy::Lifo => "lifo",
            SchedulingPolicy::Spf => "spf",
            SchedulingPolicy::Edf => "edf",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueueEntry {
    pub tuid: TuId,
    pub amount: Amount,
    pub enqueued_at: SimTime,
    /// Parent demand deadline.
    pub deadline: SimTime,
    pub marked: bool,
}

impl SchedulingPolicy {
    /// `Less` means `a` is served before `b`.
    pub fn compare(self, a: &QueueEntry, b: &QueueEntry) -> Ordering {
        let fallback = a.enqueued_at.cmp(&b.enqueued_at).then(a.tuid.cmp(&b.tuid));
        match self {
            SchedulingPolicy::Fifo => fallback,
            SchedulingPolicy::Lifo => b.enqueued_at.cmp(&a.enqueued_at).then(a.tuid.cmp(&b.tuid)),
            SchedulingPolicy::Spf => a.amount.cmp(&b.amount).then(fallback),
            SchedulingPolicy::Edf => a.deadline.cmp(&b.deadline).then(fallback),
        }
    }
}

/// Waiting TUs for one channel direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelQueue {
    entries: Vec<QueueEntry>,
    volume: Amount,
    limit: Amount,
}

impl Default for ChannelQueue {
    fn default() -> Self {
        ChannelQueue::new(DEFAULT_QUEUE_LIMIT)
    }
}

impl ChannelQueue {
    pub fn new(limit: Amount) -> Self {
        ChannelQueue { entries: Vec::new(), volume: Amount::ZERO, limit }
    }

    pub fn volume(&self) -> Amount {
        self.volume
    }

    pub fn limit(&self) -> Amount {
        self.limit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in arrival order.
    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn enqueue(&mut self, tuid: TuId, amount: Amount, deadline: SimTime, now: SimTime) -> Result<(), QueueError> {
        if self.volume + amount > self.limit {
            return Err(QueueError::QueueOverflow { volume: self.volume, amount, limit: self.limit });
        }
        self.volume += amount;
        self.entries.push(QueueEntry { tuid, amount, enqueued_at: now, deadline, marked: false });
        Ok(())
    }

    /// Removes and returns the best entry under `policy` that fits in `funds`.
    pub fn dequeue_next(&mut self, policy: SchedulingPolicy, funds: Amount) -> Option<QueueEntry> {
        let idx = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.amount <= funds)
            .min_by(|(_, a), (_, b)| policy.compare(a, b))
            .map(|(i, _)| i)?;
        Some(self.take(idx))
    }

    /// Marks entries waiting strictly longer than `threshold`; returns the
    /// newly marked ones.
    pub fn mark_overdue(&mut self, now: SimTime, threshold: SimTime) -> Vec<TuId> {
        let mut newly = Vec::new();
        for e in &mut self.entries {
            if !e.marked && now.saturating_sub(e.enqueued_at) > threshold {
                e.marked = true;
                newly.push(e.tuid);
            }
        }
        newly
    }

    pub fn remove(&mut self, tuid: TuId) -> Option<QueueEntry> {
        let idx = self.entries.iter().position(|e| e.tuid == tuid)?;
        Some(self.take(idx))
    }

    fn take(&mut self, idx: usize) -> QueueEntry {
        let e = self.entries.remove(idx);
        self.volume -= e.amount;
        e
    }
}
