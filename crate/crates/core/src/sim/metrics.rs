use serde::Serialize;

use crate::amount::Amount;
use crate::error::SimError;
use crate::network::{ChannelId, DemandId, Direction, Network, NodeId};
use crate::placement::{AssignmentPlan, PlacementPlan, PlacementProblem};
use crate::time::SimTime;

/// Run summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SimMetrics {
    pub demands: usize,
    pub completed: usize,
    /// Completed over generated demands; 1 when nothing was generated.
    pub tsr: f64,
    /// Completed value over generated value.
    pub normalized_throughput: f64,
    pub generated_value: f64,
    pub completed_value: f64,
    /// Mean creation-to-settlement time of completed demands, seconds.
    pub avg_delay: f64,
    pub fees_paid: f64,
    pub deadlock_events: usize,
    pub control_messages: u64,
    pub control_hops: u64,
    /// Token-hops moved by settled payments.
    pub token_hops: f64,
    pub queue_overflows: usize,
    pub tus_sent: usize,
    pub tus_aborted: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Completed { at: SimTime },
    Failed { at: SimTime, reason: FailReason },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailReason {
    Timeout,
    QueueOverflow,
    InsufficientFunds,
    NoPath,
    Unsplittable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemandRecord {
    pub id: DemandId,
    pub source: NodeId,
    pub dest: NodeId,
    pub value: Amount,
    pub created_at: SimTime,
    pub outcome: Outcome,
    /// Hops whose transfer became final, in settlement order. Empty for
    /// failed demands.
    pub settled: Vec<(ChannelId, Direction, Amount)>,
    pub fees: f64,
}

impl DemandRecord {
    pub fn completed_at(&self) -> Option<SimTime> {
        match self.outcome {
            Outcome::Completed { at } => Some(at),
            Outcome::Failed { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeadlockEvent {
    pub at: SimTime,
    pub node: NodeId,
}

/// One row of the per-interval channel trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub time_s: f64,
    pub channel: usize,
    pub direction: &'static str,
    pub lambda: f64,
    pub mu: f64,
    pub xi: f64,
    pub rate: f64,
    pub queue_len: usize,
    pub window: f64,
}

pub const TRACE_SCHEMA_VERSION: u32 = 1;
pub const TRACE_HEADER: [&str; 9] = ["time_s", "channel", "direction", "lambda", "mu", "xi", "rate", "queue_len", "window"];

/// Settled volume per channel direction inside the steady-state window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelFlow {
    pub channel: ChannelId,
    pub volume: [Amount; 2],
}

impl ChannelFlow {
    /// `|r_ab - r_ba|` in tokens/sec over a window of `span_s` seconds.
    pub fn rate_gap(&self, span_s: f64) -> f64 {
        (self.volume[0] - self.volume[1]).tokens().abs() / span_s
    }

    pub fn is_active(&self) -> bool {
        self.volume[0].is_positive() || self.volume[1].is_positive()
    }
}

/// Static delay and control-traffic model of a placement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommCosts {
    /// Mean client -> hub -> hub -> client latency over ordered client pairs, seconds.
    pub avg_delay_s: f64,
    /// Hop-messages per epoch for clients reporting to their hubs.
    pub management_overhead: u64,
    /// Hop-messages per epoch for all-pairs hub synchronisation.
    pub sync_overhead: u64,
    pub sync_messages: u64,
}

impl CommCosts {
    pub fn total_overhead(&self) -> u64 {
        self.management_overhead + self.sync_overhead
    }
}

/// Delay and overhead of routing every client pair through its assigned hubs.
pub fn communication_costs(
    net: &Network,
    problem: &PlacementProblem,
    plan: &PlacementPlan,
    assignment: &AssignmentPlan,
    hop_latency: SimTime,
) -> Result<CommCosts, SimError> {
    let clients = problem.clients();
    let cands = problem.candidates();
    if assignment.hubs().len() != clients.len() || plan.len() != cands.len() {
        return Err(SimError::Config("plan does not match the problem dimensions".into()));
    }
    let hub = |m: usize| cands[assignment.hub_of(m)];
    let mut management = 0u64;
    for (m, &c) in clients.iter().enumerate() {
        management += u64::from(net.hop_distance(c, hub(m))?);
    }
    let placed: Vec<NodeId> = plan.placed().map(|n| cands[n]).collect();
    let mut sync = 0u64;
    for &a in &placed {
        for &b in &placed {
            if a != b {
                sync += u64::from(net.hop_distance(a, b)?);
            }
        }
    }
    let mut total_hops = 0u64;
    let mut pairs = 0u64;
    for m1 in 0..clients.len() {
        for m2 in 0..clients.len() {
            if m1 == m2 {
                continue;
            }
            let (h1, h2) = (hub(m1), hub(m2));
            total_hops += u64::from(net.hop_distance(clients[m1], h1)?)
                + u64::from(net.hop_distance(h1, h2)?)
                + u64::from(net.hop_distance(h2, clients[m2])?);
            pairs += 1;
        }
    }
    let avg_delay_s = if pairs == 0 { 0.0 } else { total_hops as f64 / pairs as f64 * hop_latency.secs() };
    let k = placed.len() as u64;
    Ok(CommCosts {
        avg_delay_s,
        management_overhead: management,
        sync_overhead: sync,
        sync_messages: k * k.saturating_sub(1),
    })
}
