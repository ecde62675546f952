use serde::{Deserialize, Serialize};

use super::paths::Path;

/// Lowest rate an active path may be throttled to, tokens/sec.
pub const RATE_FLOOR: f64 = 1e-3;

/// Rate, window and ack-delay state for one path of a source-destination pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub path: Path,
    /// Sending rate, tokens/sec.
    pub rate: f64,
    /// Price from the most recent probe.
    pub price: f64,
    /// Maximum number of unfinished TUs.
    pub window: f64,
    pub outstanding: usize,
    /// Smoothed acknowledgment delay, seconds.
    pub ack_delay: f64,
    /// Upper rate bound: smallest channel capacity on the path over `ack_delay`.
    pub ceiling: f64,
}

impl PathState {
    pub fn new(path: Path, rate: f64, window: f64, ack_delay: f64, min_capacity: f64) -> Self {
        let mut ps = PathState { path, rate, price: 0.0, window, outstanding: 0, ack_delay, ceiling: f64::INFINITY };
        ps.set_capacity(min_capacity);
        ps.rate = ps.rate.clamp(RATE_FLOOR, ps.ceiling);
        ps
    }

    pub fn set_capacity(&mut self, min_capacity: f64) {
        self.ceiling = (min_capacity / self.ack_delay).max(RATE_FLOOR);
    }

    /// Folds one observed ack delay into the running average.
    pub fn observe_ack(&mut self, delay_secs: f64, weight: f64, min_capacity: f64) {
        self.ack_delay = (1.0 - weight) * self.ack_delay + weight * delay_secs;
        self.set_capacity(min_capacity);
    }

    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

/// Derivative of `log(total)`.
pub fn marginal_utility(total_rate: f64) -> f64 {
    1.0 / total_rate.max(RATE_FLOOR)
}

/// `r + alpha * (U'(total) - rho)` clamped to `[floor, ceiling]`.
pub fn rate_step(rate: f64, alpha: f64, total_rate: f64, rho: f64, floor: f64, ceiling: f64) -> f64 {
    (rate + alpha * (marginal_utility(total_rate) - rho)).clamp(floor, ceiling.max(floor))
}

/// Applies one rate update from a fresh probe price.
pub fn update_rate(ps: &mut PathState, alpha: f64, total_rate: f64, rho: f64) -> f64 {
    ps.price = rho;
    ps.rate = rate_step(ps.rate, alpha, total_rate, rho, RATE_FLOOR, ps.ceiling);
    ps.rate
}

/// How a probe price moves a path's rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRule {
    /// `r + alpha * (U' - rho)`.
    Additive,
    /// `r + alpha * r * (U' - rho)`: same fixed point, step scaled by the
    /// current rate so a path sitting at the floor does not leap back.
    #[default]
    Proportional,
}

impl std::str::FromStr for RateRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "additive" => Ok(RateRule::Additive),
            "proportional" => Ok(RateRule::Proportional),
            other => Err(format!("unknown rate rule `{other}`")),
        }
    }
}

/// Rate-scaled variant of [`update_rate`].
pub fn update_rate_proportional(ps: &mut PathState, alpha: f64, total_rate: f64, rho: f64) -> f64 {
    ps.price = rho;
    let r = ps.rate;
    ps.rate = (r + alpha * r * (marginal_utility(total_rate) - rho)).clamp(RATE_FLOOR, ps.ceiling.max(RATE_FLOOR));
    ps.rate
}

/// Applies one probe under the given rule.
pub fn apply_rate_rule(rule: RateRule, ps: &mut PathState, alpha: f64, total_rate: f64, rho: f64) -> f64 {
    match rule {
        RateRule::Additive => update_rate(ps, alpha, total_rate, rho),
        RateRule::Proportional => update_rate_proportional(ps, alpha, total_rate, rho),
    }
}

/// Scales a pair's path rates down so their total does not exceed the
/// offered demand rate. Rates never go below the floor.
pub fn apply_demand_cap(rates: &mut [f64], demand_rate: f64) {
    let total: f64 = rates.iter().sum();
    let cap = demand_rate.max(RATE_FLOOR * rates.len() as f64);
    if total > cap {
        let scale = cap / total;
        for r in rates.iter_mut() {
            *r = (*r * scale).max(RATE_FLOOR);
        }
    }
}
