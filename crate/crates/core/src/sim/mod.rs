//! Deterministic tick-driven simulation of payments over a channel network.

pub mod config;
pub mod deadlock;
pub mod engine;
pub mod metrics;
pub mod trace;
pub mod workload;

pub use config::{
    apply_override, CongestionConfig, PlacementConfig, PlacementMode, Preset, RoutingConfig, RoutingScheme,
    SimConfig, TimingConfig, TraceConfig,
};
pub use deadlock::{detect_deadlock, Needs};
pub use engine::{prepare, run, run_scenario, Scenario, SimReport};
pub use trace::{summary_text, write_records, write_traces};
pub use metrics::{
    communication_costs, ChannelFlow, CommCosts, DeadlockEvent, DemandRecord, FailReason, Outcome, SimMetrics,
    TraceRow, TRACE_HEADER, TRACE_SCHEMA_VERSION,
};
pub use workload::{generate_workload, Flow, PairProfile, PoissonWorkload, SymmetricWorkload, ValueDist, Workload, WorkloadConfig};
