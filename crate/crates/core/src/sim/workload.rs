use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::SimError;
use crate::network::{DemandId, Network, NodeId, PaymentDemand};
use crate::time::SimTime;

/// Payment values in tokens: `min + LogNormal(mu, sigma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueDist {
    pub min: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Default for ValueDist {
    fn default() -> Self {
        ValueDist { min: 1.0, mu: 5f64.ln(), sigma: 1.0 }
    }
}

impl ValueDist {
    pub fn mean(&self) -> f64 {
        self.min + (self.mu + self.sigma * self.sigma / 2.0).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Amount {
        let ln = LogNormal::new(self.mu, self.sigma).expect("validated sigma");
        Amount::from_tokens(self.min + ln.sample(rng))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoissonWorkload {
    /// Unordered client pairs that trade; both directions are active.
    pub pairs: usize,
    /// Mean payments per second per direction.
    pub rate: f64,
    /// Share of pairs whose directions are skewed.
    pub skew_fraction: f64,
    /// A skewed pair sends at `rate * skew` one way and `rate / skew` back.
    pub skew: f64,
    pub value: ValueDist,
}

impl Default for PoissonWorkload {
    fn default() -> Self {
        PoissonWorkload { pairs: 200, rate: 0.1, skew_fraction: 0.3, skew: 3.0, value: ValueDist::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetricWorkload {
    pub pairs: usize,
    /// Seconds between payments, the same in both directions.
    pub interval_s: f64,
    /// Tokens per payment.
    pub value: f64,
}

impl Default for SymmetricWorkload {
    fn default() -> Self {
        SymmetricWorkload { pairs: 10, interval_s: 1.0, value: 1.0 }
    }
}

/// A fixed-size payment repeated every `interval_s` from `offset_s` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    pub source: u32,
    pub dest: u32,
    pub interval_s: f64,
    pub value: f64,
    #[serde(default)]
    pub offset_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadConfig {
    Poisson(PoissonWorkload),
    Symmetric(SymmetricWorkload),
    Periodic { flows: Vec<Flow> },
    Empty,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig::Poisson(PoissonWorkload::default())
    }
}

impl WorkloadConfig {
    /// A -> B at 1 token/sec, C -> B and B -> A at 2 tokens/sec, with
    /// A = 0, B = 1, C = 2.
    pub fn deadlock_flows() -> Self {
        let f = |s, d, i| Flow { source: s, dest: d, interval_s: i, value: 1.0, offset_s: 0.0 };
        WorkloadConfig::Periodic { flows: vec![f(0, 1, 1.0), f(2, 1, 0.5), f(1, 0, 0.5)] }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        match self {
            WorkloadConfig::Poisson(p) => {
                if !(p.rate >= 0.0) || !(0.0..=1.0).contains(&p.skew_fraction) || !(p.skew >= 1.0) {
                    return bad("poisson workload needs rate >= 0, skew_fraction in [0, 1] and skew >= 1");
                }
                if !(p.value.sigma > 0.0) || !(p.value.min >= 0.0) || !p.value.mu.is_finite() {
                    return bad("value distribution needs sigma > 0, min >= 0 and finite mu");
                }
            }
            WorkloadConfig::Symmetric(s) => {
                if !(s.interval_s > 0.0) || !(s.value > 0.0) {
                    return bad("symmetric workload needs positive interval_s and value");
                }
            }
            WorkloadConfig::Periodic { flows } => {
                for f in flows {
                    if f.source == f.dest || !(f.interval_s > 0.0) || !(f.value > 0.0) || !(f.offset_s >= 0.0) {
                        return bad("each flow needs distinct endpoints, positive interval and value, offset >= 0");
                    }
                }
            }
            WorkloadConfig::Empty => {}
        }
        Ok(())
    }
}

/// Offered load for one ordered pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairProfile {
    pub source: NodeId,
    pub dest: NodeId,
    /// Payments per second.
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Workload {
    /// Ordered by creation time, then source, then destination.
    pub demands: Vec<PaymentDemand>,
    pub profile: Vec<PairProfile>,
}

impl Workload {
    pub fn total_value(&self) -> Amount {
        self.demands.iter().map(|d| d.value).sum()
    }
}

fn periodic_times(offset: f64, interval: f64, duration: f64) -> Vec<SimTime> {
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let t = offset + i as f64 * interval;
        if t >= duration {
            return out;
        }
        out.push(SimTime::from_secs_f64(t));
        i += 1;
    }
}

fn poisson_times<R: Rng + ?Sized>(rng: &mut R, rate: f64, duration: f64) -> Vec<SimTime> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = exp.sample(rng);
    while t < duration {
        out.push(SimTime::from_secs_f64(t));
        t += exp.sample(rng);
    }
    out
}

fn client_pairs<R: Rng + ?Sized>(net: &Network, rng: &mut R, want: usize) -> Vec<(NodeId, NodeId)> {
    let clients = net.clients();
    let mut all = Vec::new();
    for (i, &a) in clients.iter().enumerate() {
        for &b in &clients[i + 1..] {
            all.push((a, b));
        }
    }
    let n = want.min(all.len());
    let mut picked: Vec<usize> = sample(rng, all.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| all[i]).collect()
}

/// Draws the demand list for a run. Deterministic in `rng`'s seed.
pub fn generate_workload<R: Rng + ?Sized>(
    cfg: &WorkloadConfig,
    net: &Network,
    duration_s: f64,
    timeout: SimTime,
    rng: &mut R,
) -> Result<Workload, SimError> {
    cfg.validate()?;
    // (time, source, dest, value)
    let mut raw: Vec<(SimTime, NodeId, NodeId, Amount)> = Vec::new();
    let mut profile = Vec::new();
    match cfg {
        WorkloadConfig::Empty => {}
        WorkloadConfig::Periodic { flows } => {
            for f in flows {
                let (s, d) = (NodeId(f.source), NodeId(f.dest));
                net.role(s)?;
                net.role(d)?;
                profile.push(PairProfile { source: s, dest: d, rate: 1.0 / f.interval_s });
                let v = Amount::from_tokens(f.value);
                raw.extend(periodic_times(f.offset_s, f.interval_s, duration_s).into_iter().map(|t| (t, s, d, v)));
            }
        }
        WorkloadConfig::Symmetric(w) => {
            let v = Amount::from_tokens(w.value);
            for (a, b) in client_pairs(net, rng, w.pairs) {
                let offset = rng.random_range(0.0..w.interval_s);
                for (s, d) in [(a, b), (b, a)] {
                    profile.push(PairProfile { source: s, dest: d, rate: 1.0 / w.interval_s });
                    raw.extend(periodic_times(offset, w.interval_s, duration_s).into_iter().map(|t| (t, s, d, v)));
                }
            }
        }
        WorkloadConfig::Poisson(w) => {
            for (a, b) in client_pairs(net, rng, w.pairs) {
                let skewed = rng.random::<f64>() < w.skew_fraction;
                let (fwd, back) = if skewed {
                    if rng.random::<bool>() {
                        (w.rate * w.skew, w.rate / w.skew)
                    } else {
                        (w.rate / w.skew, w.rate * w.skew)
                    }
                } else {
                    (w.rate, w.rate)
                };
                for (s, d, r) in [(a, b, fwd), (b, a, back)] {
                    profile.push(PairProfile { source: s, dest: d, rate: r });
                    for t in poisson_times(rng, r, duration_s) {
                        raw.push((t, s, d, w.value.sample(rng)));
                    }
                }
            }
        }
    }
    raw.sort_by_key(|&(t, s, d, _)| (t, s, d));
    let demands = raw
        .into_iter()
        .enumerate()
        .map(|(i, (t, s, d, v))| PaymentDemand::new(DemandId(i as u64), s, d, v, t, t + timeout))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Workload { demands, profile })
}
