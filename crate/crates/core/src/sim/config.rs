use serde::{Deserialize, Serialize};

use crate::congestion::SchedulingPolicy;
use crate::error::SimError;
use crate::network::NetworkSpec;
use crate::placement::{CostModel, VisitOrder};
use crate::routing::{PathKind, RateRule};

use super::workload::WorkloadConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    None,
    /// Three nodes A(0) - C(2) - B(1), 10 tokens each way, with the flows
    /// A->B 1/s, C->B 2/s and B->A 2/s of 1-token payments.
    Deadlock,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    Exact,
    #[default]
    DoubleGreedy,
    /// Hubs listed in `fixed_hubs`.
    Fixed,
    /// No hubs; sources route for themselves.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    pub mode: PlacementMode,
    pub omega: f64,
    pub order: VisitOrder,
    pub cost: CostModel,
    pub fixed_hubs: Vec<u32>,
    pub exact_limit: usize,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            mode: PlacementMode::DoubleGreedy,
            omega: 0.04,
            order: VisitOrder::Ascending,
            cost: CostModel::default(),
            fixed_hubs: Vec::new(),
            exact_limit: crate::placement::EXACT_LIMIT,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingScheme {
    /// Price-driven rates, windows and queues.
    #[default]
    Price,
    /// Multi-path source routing without prices; each TU takes the path
    /// with the most spendable funds right now.
    Waterfilling,
    /// Whole payment on one shortest path, failing at once if any hop is short.
    Instant,
}

impl std::str::FromStr for RoutingScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "price" => Ok(RoutingScheme::Price),
            "waterfilling" => Ok(RoutingScheme::Waterfilling),
            "instant" => Ok(RoutingScheme::Instant),
            other => Err(format!("unknown routing scheme `{other}`")),
        }
    }
}

impl std::fmt::Display for RoutingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RoutingScheme::Price => "price",
            RoutingScheme::Waterfilling => "waterfilling",
            RoutingScheme::Instant => "instant",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingConfig {
    pub scheme: RoutingScheme,
    pub path_kind: PathKind,
    pub k: usize,
    pub min_tu: f64,
    pub max_tu: f64,
    pub kappa: f64,
    pub eta: f64,
    pub alpha: f64,
    pub rate_rule: RateRule,
    pub t_fee: f64,
    /// Tolerated directional rate gap, tokens/sec.
    pub balance_epsilon: f64,
    /// Starting rate of a fresh path, tokens/sec.
    pub initial_rate: f64,
    /// Weight of a new sample in the ack-delay average.
    pub ack_weight: f64,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig {
            scheme: RoutingScheme::Price,
            path_kind: PathKind::Edw,
            k: 5,
            min_tu: 1.0,
            max_tu: 4.0,
            kappa: 0.01,
            eta: 2.0,
            alpha: 0.2,
            rate_rule: RateRule::Proportional,
            t_fee: 0.1,
            balance_epsilon: 0.1,
            initial_rate: 1.0,
            ack_weight: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CongestionConfig {
    pub scheduler: SchedulingPolicy,
    /// Tokens.
    pub queue_limit: f64,
    pub mark_threshold_ms: u64,
    pub beta: f64,
    pub gamma: f64,
    pub w_init: f64,
    pub w_min: f64,
}

impl Default for CongestionConfig {
    fn default() -> Self {
        CongestionConfig {
            scheduler: SchedulingPolicy::Fifo,
            queue_limit: 8000.0,
            mark_threshold_ms: 400,
            beta: crate::congestion::DEFAULT_BETA,
            gamma: crate::congestion::DEFAULT_GAMMA,
            w_init: crate::congestion::W_INIT,
            w_min: crate::congestion::W_MIN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Price update interval.
    pub tau_ms: u64,
    /// Hub synchronisation period; deadlock checks run on this clock.
    pub epoch_ms: u64,
    /// One hop of message latency; also the simulation tick.
    pub hop_latency_ms: u64,
    pub timeout_ms: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { tau_ms: 200, epoch_ms: 200, hop_latency_ms: 10, timeout_ms: 3000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub enabled: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { enabled: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Drives the workload and randomised placement. The topology has its own
    /// seed under `network`.
    pub seed: u64,
    /// Demands are generated in `[0, duration_s)`; the run continues one
    /// timeout past that so every demand resolves.
    pub duration_s: f64,
    /// Start of the steady-state window used for throughput and balance.
    pub steady_from_s: f64,
    pub preset: Preset,
    /// Multiplies every channel's funds after generation.
    pub capacity_scale: i64,
    pub network: NetworkSpec,
    pub placement: PlacementConfig,
    pub routing: RoutingConfig,
    pub congestion: CongestionConfig,
    pub timing: TimingConfig,
    pub workload: WorkloadConfig,
    pub trace: TraceConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            duration_s: 60.0,
            steady_from_s: 30.0,
            preset: Preset::None,
            capacity_scale: 1,
            network: NetworkSpec::default(),
            placement: PlacementConfig::default(),
            routing: RoutingConfig::default(),
            congestion: CongestionConfig::default(),
            timing: TimingConfig::default(),
            workload: WorkloadConfig::default(),
            trace: TraceConfig::default(),
        }
    }
}

impl SimConfig {
    /// The three-node deadlock scenario with the given routing scheme.
    pub fn deadlock_preset(scheme: RoutingScheme) -> Self {
        let mut cfg = SimConfig { preset: Preset::Deadlock, ..SimConfig::default() };
        cfg.routing.scheme = scheme;
        cfg.placement.mode = PlacementMode::Exact;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses TOML, applies `a.b.c=value` overrides, then validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, SimError> {
        let mut table: toml::Table = text.parse().map_err(|e| SimError::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: SimConfig = toml::Value::Table(table).try_into().map_err(|e| SimError::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.duration_s >= 0.0) || !self.duration_s.is_finite() {
            return bad(format!("duration_s must be >= 0, got {}", self.duration_s));
        }
        if !(self.steady_from_s >= 0.0) {
            return bad("steady_from_s must be >= 0".into());
        }
        if self.capacity_scale < 1 {
            return bad("capacity_scale must be >= 1".into());
        }
        let t = &self.timing;
        if t.hop_latency_ms == 0 || t.tau_ms == 0 || t.epoch_ms == 0 || t.timeout_ms == 0 {
            return bad("timing values must be positive".into());
        }
        if t.tau_ms % t.hop_latency_ms != 0 || t.epoch_ms % t.hop_latency_ms != 0 {
            return bad("tau_ms and epoch_ms must be multiples of hop_latency_ms".into());
        }
        let r = &self.routing;
        if r.k == 0 {
            return bad("routing.k must be >= 1".into());
        }
        if !(r.min_tu > 0.0) || r.min_tu > r.max_tu {
            return bad(format!("need 0 < min_tu <= max_tu, got {} and {}", r.min_tu, r.max_tu));
        }
        for (name, v) in [("kappa", r.kappa), ("eta", r.eta), ("alpha", r.alpha), ("balance_epsilon", r.balance_epsilon)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("routing.{name} must be positive, got {v}"));
            }
        }
        if !(r.t_fee > 0.0 && r.t_fee < 1.0) {
            return bad(format!("routing.t_fee must lie in (0, 1), got {}", r.t_fee));
        }
        if !(r.initial_rate > 0.0) || !(r.ack_weight > 0.0 && r.ack_weight <= 1.0) {
            return bad("routing.initial_rate must be positive and ack_weight in (0, 1]".into());
        }
        let c = &self.congestion;
        if !(c.queue_limit > 0.0) || !(c.beta > 0.0) || !(c.gamma > 0.0) || !(c.w_min >= 1.0) || c.w_init < c.w_min {
            return bad("congestion parameters must be positive with 1 <= w_min <= w_init".into());
        }
        if c.mark_threshold_ms == 0 {
            return bad("congestion.mark_threshold_ms must be positive".into());
        }
        if !(self.placement.omega >= 0.0) {
            return bad("placement.omega must be >= 0".into());
        }
        if self.preset == Preset::None {
            self.network.validate()?;
        }
        self.workload.validate()?;
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `path.to.key = value` inside a TOML table, creating tables as needed.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), SimError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SimError::Config(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(SimError::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| SimError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
