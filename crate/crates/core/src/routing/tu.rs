use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::RoutingError;
use crate::network::{DemandId, NodeId, PaymentDemand};

/// Identifies a TU by its parent demand and position in the split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TuId {
    pub parent: DemandId,
    pub index: u32,
}

impl fmt::Display for TuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.parent.0, self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TuState {
    Pending,
    InFlight,
    Queued,
    Completed,
    Aborted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransactionUnit {
    pub tuid: TuId,
    pub amount: Amount,
    /// Index into the demand's path set.
    pub path_slot: usize,
    pub path: Vec<NodeId>,
    marked: bool,
    pub state: TuState,
}

impl TransactionUnit {
    pub fn new(tuid: TuId, amount: Amount, path_slot: usize) -> Self {
        TransactionUnit { tuid, amount, path_slot, path: Vec::new(), marked: false, state: TuState::Pending }
    }

    pub fn parent(&self) -> DemandId {
        self.tuid.parent
    }

    pub fn is_marked(&self) -> bool {
        self.marked
    }

    /// Marks the TU. There is no way back.
    pub fn mark(&mut self) {
        self.marked = true;
    }
}

/// TU sizes for a value: greedy Max-TU fill, with an undersized remainder
/// merged into the last unit and the pair split evenly.
pub fn split_amounts(value: Amount, min_tu: Amount, max_tu: Amount) -> Result<Vec<Amount>, RoutingError> {
    if !min_tu.is_positive() || min_tu > max_tu {
        return Err(RoutingError::InvalidBounds(format!("need 0 < min ({min_tu}) <= max ({max_tu})")));
    }
    if value < min_tu {
        return Err(RoutingError::ValueTooSmall { value, min_tu });
    }
    let (v, lo, hi) = (value.milli(), min_tu.milli(), max_tu.milli());
    let full = v / hi;
    let rem = v % hi;
    let mut out = vec![max_tu; full as usize];
    if rem == 0 {
        return Ok(out);
    }
    if rem >= lo {
        out.push(Amount::from_milli(rem));
        return Ok(out);
    }
    // full >= 1 here since v >= lo > rem.
    let merged = hi + rem;
    let first = merged - merged / 2;
    let second = merged / 2;
    if second >= lo {
        out.pop();
        out.push(Amount::from_milli(first));
        out.push(Amount::from_milli(second));
        return Ok(out);
    }
    // Fall back to the fewest equal-ish units that fit.
    let count = full + 1;
    if count * lo <= v {
        let base = v / count;
        let extra = v % count;
        return Ok((0..count).map(|i| Amount::from_milli(base + i64::from(i < extra))).collect());
    }
    Err(RoutingError::Unsplittable { value, min_tu, max_tu })
}

/// Splits a demand and assigns the units round-robin to `k` path slots.
pub fn split_demand(d: &PaymentDemand, min_tu: Amount, max_tu: Amount, k: usize) -> Result<Vec<TransactionUnit>, RoutingError> {
    if k == 0 {
        return Err(RoutingError::InvalidBounds("k must be at least 1".into()));
    }
    let amounts = split_amounts(d.value, min_tu, max_tu)?;
    Ok(amounts
        .into_iter()
        .enumerate()
        .map(|(i, a)| TransactionUnit::new(TuId { parent: d.id, index: i as u32 }, a, i % k))
        .collect())
}
