use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::amount::Amount;
use crate::congestion::{admit, window_on_abort, window_on_success, ChannelQueue};
use crate::error::SimError;
use crate::network::{build_network, ChannelId, Direction, Network, NodeId, NodeRole, PaymentDemand};
use crate::placement::{
    greedy_solution, optimal_assignment, solve_exact, PlacementPlan, PlacementProblem, PlacementSolution,
};
use crate::routing::{
    bottleneck, compute_paths, path_price, split_amounts, apply_rate_rule, ChannelPriceState,
    PathKind, PathState, TuId, TuState,
};
use crate::time::SimTime;

use super::config::{PlacementMode, Preset, RoutingScheme, SimConfig};
use super::deadlock::{detect_deadlock, Needs};
use super::metrics::{
    communication_costs, ChannelFlow, CommCosts, DeadlockEvent, DemandRecord, FailReason, Outcome, SimMetrics,
    TraceRow,
};
use super::workload::{generate_workload, Workload, WorkloadConfig};

const WORKLOAD_STREAM: u64 = 1;
const PLACEMENT_STREAM: u64 = 2;

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct SimReport {
    pub metrics: SimMetrics,
    pub records: Vec<DemandRecord>,
    pub deadlocks: Vec<DeadlockEvent>,
    pub traces: Vec<TraceRow>,
    /// Settled volume per channel direction over `[steady_from, duration]`.
    pub flows: Vec<ChannelFlow>,
    pub steady_from: SimTime,
    pub duration: SimTime,
    pub hubs: Vec<NodeId>,
    pub placement_cost: Option<f64>,
    pub comm: Option<CommCosts>,
    pub initial: Network,
    pub final_net: Network,
    /// Smallest and largest total channel value seen at any tick.
    pub funds_range: (Amount, Amount),
}

impl SimReport {
    /// Completed value between `a` and `b` (both directions) settling in
    /// `[from, to)`, per second.
    pub fn throughput_between(&self, a: NodeId, b: NodeId, from: SimTime, to: SimTime) -> f64 {
        let span = to.saturating_sub(from).secs();
        if span <= 0.0 {
            return 0.0;
        }
        let v: Amount = self
            .records
            .iter()
            .filter(|r| (r.source == a && r.dest == b) || (r.source == b && r.dest == a))
            .filter(|r| r.completed_at().is_some_and(|t| t >= from && t < to))
            .map(|r| r.value)
            .sum();
        v.tokens() / span
    }

    /// Completed value of all demands settling in `[from, to)`, per second.
    pub fn throughput(&self, from: SimTime, to: SimTime) -> f64 {
        let span = to.saturating_sub(from).secs();
        if span <= 0.0 {
            return 0.0;
        }
        let v: Amount = self
            .records
            .iter()
            .filter(|r| r.completed_at().is_some_and(|t| t >= from && t < to))
            .map(|r| r.value)
            .sum();
        v.tokens() / span
    }

    /// Share of active channels whose steady-state directional rates differ
    /// by at most `eps` tokens/sec. 1 when no channel carried traffic.
    pub fn balanced_fraction(&self, eps: f64) -> f64 {
        let span = self.duration.saturating_sub(self.steady_from).secs();
        let active: Vec<&ChannelFlow> = self.flows.iter().filter(|f| f.is_active()).collect();
        if active.is_empty() || span <= 0.0 {
            return 1.0;
        }
        let ok = active.iter().filter(|f| f.rate_gap(span) <= eps).count();
        ok as f64 / active.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    /// The TU reached the next node on its path.
    Hop(usize),
    /// The TU reached its destination in one go (all hops locked at send).
    Deliver(usize),
    Ack(usize),
}

#[derive(Clone, Debug)]
struct Tu {
    demand: usize,
    index: u32,
    amount: Amount,
    slot: usize,
    path: Option<usize>,
    pos: usize,
    locks: Vec<(ChannelId, Direction)>,
    queued: Option<(ChannelId, Direction)>,
    state: TuState,
    marked: bool,
    sent_at: SimTime,
    /// Counted in its path's `outstanding`.
    outstanding: bool,
}

#[derive(Clone, Debug)]
struct DemandState {
    pair: Option<usize>,
    tu_base: usize,
    tu_count: usize,
    delivered: usize,
    done: bool,
    fees: f64,
}

#[derive(Clone, Debug)]
struct Pair {
    paths: Vec<PathState>,
    hops: Vec<Vec<(ChannelId, Direction)>>,
    min_cap: Vec<f64>,
    credit: Vec<f64>,
    sent: Vec<f64>,
    /// TUs split so far; spreads successive TUs over the paths.
    rotation: usize,
    backlog: VecDeque<usize>,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    net: Network,
    demands: Vec<PaymentDemand>,
    dstate: Vec<DemandState>,
    records: Vec<Option<DemandRecord>>,
    tus: Vec<Tu>,
    pairs: Vec<Pair>,
    pair_index: BTreeMap<(NodeId, NodeId), usize>,
    path_cache: BTreeMap<(NodeId, NodeId), Vec<Vec<NodeId>>>,
    path_net: Network,
    queues: Vec<[ChannelQueue; 2]>,
    /// Processing credit per channel, tokens.
    service: Vec<f64>,
    /// Acknowledgment delay seen by the channel's users, seconds.
    channel_delay: Vec<f64>,
    active_queues: BTreeSet<(usize, usize)>,
    prices: Vec<ChannelPriceState>,
    /// (pair, path) users of each channel direction.
    users: Vec<[Vec<(usize, usize)>; 2]>,
    events: BinaryHeap<Reverse<(SimTime, u64, Ev)>>,
    seq: u64,
    needs: Needs,
    deadlocked: BTreeSet<NodeId>,
    deadlocks: Vec<DeadlockEvent>,
    traces: Vec<TraceRow>,
    flows: Vec<[Amount; 2]>,
    metrics: SimMetrics,
    hub_of_client: BTreeMap<NodeId, NodeId>,
    hubs: Vec<NodeId>,
    tick: SimTime,
    steady_from: SimTime,
    duration: SimTime,
    delays: Vec<f64>,
}

fn tokens(a: Amount) -> f64 {
    a.tokens()
}

/// Network, hubs and workload for a config, before any routing happens.
pub struct Scenario {
    pub network: Network,
    pub workload: Workload,
    pub hubs: Vec<NodeId>,
    pub placement: Option<(PlacementProblem, PlacementSolution)>,
}

fn deadlock_network() -> Network {
    let t = Amount::from_whole_tokens(10);
    Network::from_parts(
        vec![NodeRole::Client, NodeRole::Client, NodeRole::CandidateSmoothNode],
        vec![(NodeId(0), NodeId(2), t, t), (NodeId(2), NodeId(1), t, t)],
    )
    .expect("static preset")
}

/// Builds the network, places hubs and draws the workload.
pub fn prepare(cfg: &SimConfig) -> Result<Scenario, SimError> {
    cfg.validate()?;
    let (mut net, wl_cfg) = match cfg.preset {
        Preset::Deadlock => (deadlock_network(), WorkloadConfig::deadlock_flows()),
        Preset::None => (build_network(&cfg.network)?, cfg.workload.clone()),
    };
    if cfg.capacity_scale > 1 {
        net = net.scaled(cfg.capacity_scale);
    }
    let mut prng = ChaCha8Rng::seed_from_u64(cfg.seed);
    prng.set_stream(PLACEMENT_STREAM);
    let pc = &cfg.placement;
    let placement = match pc.mode {
        PlacementMode::None => None,
        mode => {
            let problem = PlacementProblem::from_network(&net, &pc.cost, pc.omega)?;
            let sol = match mode {
                PlacementMode::Exact => solve_exact(&problem, pc.exact_limit)?,
                PlacementMode::DoubleGreedy => greedy_solution(&problem, &mut prng, pc.order)?,
                PlacementMode::Fixed => {
                    let mut idx = Vec::new();
                    for &h in &pc.fixed_hubs {
                        let i = problem
                            .candidate_index(NodeId(h))
                            .ok_or_else(|| SimError::Config(format!("fixed hub {h} is not a candidate")))?;
                        idx.push(i);
                    }
                    let placement = PlacementPlan::from_indices(problem.candidate_count(), &idx)?;
                    let assignment = optimal_assignment(&problem, &placement)?;
                    let cost = crate::placement::balance_cost(&problem, &placement, &assignment)?;
                    PlacementSolution { placement, assignment, cost }
                }
                PlacementMode::None => unreachable!(),
            };
            Some((problem, sol))
        }
    };
    let mut hubs = Vec::new();
    if let Some((problem, sol)) = &placement {
        for n in sol.placement.placed() {
            let h = problem.candidates()[n];
            net.set_role(h, NodeRole::ActiveSmoothNode)?;
            hubs.push(h);
        }
    }
    let mut wrng = ChaCha8Rng::seed_from_u64(cfg.seed);
    wrng.set_stream(WORKLOAD_STREAM);
    let timeout = SimTime::from_millis(cfg.timing.timeout_ms);
    let workload = generate_workload(&wl_cfg, &net, cfg.duration_s, timeout, &mut wrng)?;
    Ok(Scenario { network: net, workload, hubs, placement })
}

/// Runs one simulation to completion.
pub fn run(cfg: &SimConfig) -> Result<SimReport, SimError> {
    let scenario = prepare(cfg)?;
    run_scenario(cfg, scenario)
}

/// Runs a prepared scenario; lets callers swap in their own workload.
pub fn run_scenario(cfg: &SimConfig, scenario: Scenario) -> Result<SimReport, SimError> {
    let Scenario { network, workload, hubs, placement } = scenario;
    let comm = match &placement {
        Some((problem, sol)) => Some(communication_costs(
            &network,
            problem,
            &sol.placement,
            &sol.assignment,
            SimTime::from_millis(cfg.timing.hop_latency_ms),
        )?),
        None => None,
    };
    let mut hub_of_client = BTreeMap::new();
    if let Some((problem, sol)) = &placement {
        for (m, &c) in problem.clients().iter().enumerate() {
            hub_of_client.insert(c, problem.candidates()[sol.assignment.hub_of(m)]);
        }
    }
    let placement_cost = placement.as_ref().map(|(_, s)| s.cost);
    let initial = network.clone();
    let mut engine = Engine::new(cfg, network, workload.demands, hubs.clone(), hub_of_client);
    let funds_range = engine.run()?;
    let flows = engine
        .flows
        .iter()
        .enumerate()
        .map(|(i, v)| ChannelFlow { channel: ChannelId(i), volume: *v })
        .collect();
    let records = engine.records.into_iter().map(|r| r.expect("every demand resolved")).collect();
    Ok(SimReport {
        metrics: engine.metrics,
        records,
        deadlocks: engine.deadlocks,
        traces: engine.traces,
        flows,
        steady_from: engine.steady_from,
        duration: engine.duration,
        hubs,
        placement_cost,
        comm,
        initial,
        final_net: engine.net,
        funds_range,
    })
}

impl<'a> Engine<'a> {
    fn new(
        cfg: &'a SimConfig,
        net: Network,
        demands: Vec<PaymentDemand>,
        hubs: Vec<NodeId>,
        hub_of_client: BTreeMap<NodeId, NodeId>,
    ) -> Self {
        let nch = net.channels().len();
        let limit = Amount::from_tokens(cfg.congestion.queue_limit);
        let n = demands.len();
        let duration = SimTime::from_secs_f64(cfg.duration_s);
        Engine {
            cfg,
            path_net: net.clone(),
            net,
            dstate: Vec::with_capacity(n),
            records: vec![None; n],
            demands,
            tus: Vec::new(),
            pairs: Vec::new(),
            pair_index: BTreeMap::new(),
            path_cache: BTreeMap::new(),
            queues: (0..nch).map(|_| [ChannelQueue::new(limit), ChannelQueue::new(limit)]).collect(),
            active_queues: BTreeSet::new(),
            service: vec![0.0; nch],
            channel_delay: vec![2.0 * cfg.timing.hop_latency_ms as f64 / 1000.0; nch],
            prices: vec![ChannelPriceState::default(); nch],
            users: (0..nch).map(|_| [Vec::new(), Vec::new()]).collect(),
            events: BinaryHeap::new(),
            seq: 0,
            needs: Needs::new(),
            deadlocked: BTreeSet::new(),
            deadlocks: Vec::new(),
            traces: Vec::new(),
            flows: vec![[Amount::ZERO; 2]; nch],
            metrics: SimMetrics::default(),
            hub_of_client,
            hubs,
            tick: SimTime::from_millis(cfg.timing.hop_latency_ms),
            steady_from: SimTime::from_secs_f64(cfg.steady_from_s.min(cfg.duration_s)),
            duration,
            delays: Vec::new(),
        }
    }

    fn schedule(&mut self, at: SimTime, ev: Ev) {
        self.seq += 1;
        self.events.push(Reverse((at, self.seq, ev)));
    }

    fn run(&mut self) -> Result<(Amount, Amount), SimError> {
        let tick = self.tick.millis();
        let tau = self.cfg.timing.tau_ms;
        let epoch = self.cfg.timing.epoch_ms;
        let end = self.duration.millis() + self.cfg.timing.timeout_ms + tick;
        let total0 = self.net.total_funds();
        let mut range = (total0, total0);
        let mut next_arrival = 0usize;
        let mut next_deadline = 0usize;
        let mut now_ms = 0u64;
        while now_ms <= end {
            let now = SimTime(now_ms);
            self.process_events(now);
            while next_deadline < self.dstate.len() && self.demands[next_deadline].deadline <= now {
                if !self.dstate[next_deadline].done {
                    self.abort(next_deadline, now, FailReason::Timeout);
                }
                next_deadline += 1;
            }
            while next_arrival < self.demands.len() && self.demands[next_arrival].created_at <= now {
                self.arrive(next_arrival, now);
                next_arrival += 1;
            }
            match self.cfg.routing.scheme {
                RoutingScheme::Price => {
                    self.send_price(now);
                    self.serve_queues(now);
                }
                RoutingScheme::Waterfilling => self.send_waterfilling(now),
                RoutingScheme::Instant => {}
            }
            if now_ms > 0 && now_ms % tau == 0 {
                self.price_interval(now);
            }
            if now_ms > 0 && now_ms % epoch == 0 {
                self.epoch(now);
            }
            let total = self.net.total_funds();
            range = (range.0.min(total), range.1.max(total));
            now_ms += tick;
        }
        let last = SimTime(now_ms);
        for d in 0..self.dstate.len() {
            if !self.dstate[d].done {
                self.abort(d, last, FailReason::Timeout);
            }
        }
        while next_arrival < self.demands.len() {
            // Only reachable with demands created after the run window.
            self.arrive(next_arrival, last);
            self.abort(next_arrival, last, FailReason::Timeout);
            next_arrival += 1;
        }
        self.finish();
        Ok(range)
    }

    fn paths_for(&mut self, s: NodeId, e: NodeId) -> Vec<Vec<NodeId>> {
        let (lo, hi) = if s < e { (s, e) } else { (e, s) };
        let r = &self.cfg.routing;
        let (k, kind) = match r.scheme {
            RoutingScheme::Instant => (1, PathKind::Eds),
            _ => (r.k, r.path_kind),
        };
        let net = &self.path_net;
        let canon = self
            .path_cache
            .entry((lo, hi))
            .or_insert_with(|| compute_paths(net, lo, hi, k, kind).unwrap_or_default())
            .clone();
        if s == lo {
            canon
        } else {
            canon
                .into_iter()
                .map(|mut p| {
                    p.reverse();
                    p
                })
                .collect()
        }
    }

    fn pair_for(&mut self, s: NodeId, e: NodeId) -> usize {
        if let Some(&i) = self.pair_index.get(&(s, e)) {
            return i;
        }
        let paths = self.paths_for(s, e);
        let r = &self.cfg.routing;
        let c = &self.cfg.congestion;
        let lat = self.tick.secs();
        let idx = self.pairs.len();
        let mut states = Vec::new();
        let mut hops = Vec::new();
        let mut caps = Vec::new();
        for (pi, p) in paths.into_iter().enumerate() {
            let mut hp = Vec::new();
            let mut min_cap = f64::INFINITY;
            for w in p.windows(2) {
                let (ch, dir) = self.net.channel_between(w[0], w[1]).expect("path follows channels");
                min_cap = min_cap.min(tokens(self.net.channel(ch).capacity()));
                self.users[ch.0][dir.index()].push((idx, pi));
                hp.push((ch, dir));
            }
            let rtt = 2.0 * lat * hp.len() as f64;
            states.push(PathState::new(p, r.initial_rate, c.w_init, rtt, min_cap));
            hops.push(hp);
            caps.push(min_cap);
        }
        let credit = vec![0.0; states.len()];
        self.pairs.push(Pair {
            paths: states,
            hops,
            min_cap: caps,
            sent: vec![0.0; credit.len()],
            rotation: 0,
            credit,
            backlog: VecDeque::new(),
        });
        self.pair_index.insert((s, e), idx);
        idx
    }

    fn record(&mut self, d: usize, outcome: Outcome, settled: Vec<(ChannelId, Direction, Amount)>) {
        let dm = &self.demands[d];
        self.records[d] = Some(DemandRecord {
            id: dm.id,
            source: dm.source,
            dest: dm.dest,
            value: dm.value,
            created_at: dm.created_at,
            outcome,
            settled,
            fees: self.dstate[d].fees,
        });
    }

    fn fail_now(&mut self, d: usize, now: SimTime, reason: FailReason) {
        self.dstate[d].done = true;
        self.record(d, Outcome::Failed { at: now, reason }, Vec::new());
    }

    fn add_need(&mut self, node: NodeId, ch: ChannelId, dir: Direction, amount: Amount, now: SimTime) {
        self.needs.note(node, ch, dir, amount, now);
    }

    fn arrive(&mut self, d: usize, now: SimTime) {
        let dm = self.demands[d].clone();
        let tu_base = self.tus.len();
        self.dstate.push(DemandState { pair: None, tu_base, tu_count: 0, delivered: 0, done: false, fees: 0.0 });
        if let Some(h) = self.hub_of_client.get(&dm.source) {
            let hops = self.net.hop_distance(dm.source, *h).unwrap_or(0);
            self.metrics.control_messages += 1;
            self.metrics.control_hops += u64::from(hops);
        }
        let p = self.pair_for(dm.source, dm.dest);
        self.dstate[d].pair = Some(p);
        if self.pairs[p].paths.is_empty() {
            self.fail_now(d, now, FailReason::NoPath);
            return;
        }
        if self.cfg.routing.scheme == RoutingScheme::Instant {
            self.instant(d, p, now);
            return;
        }
        let r = &self.cfg.routing;
        let amounts = match split_amounts(dm.value, Amount::from_tokens(r.min_tu), Amount::from_tokens(r.max_tu)) {
            Ok(a) => a,
            Err(_) => {
                self.fail_now(d, now, FailReason::Unsplittable);
                return;
            }
        };
        let np = self.pairs[p].paths.len();
        self.dstate[d].tu_count = amounts.len();
        for (i, a) in amounts.into_iter().enumerate() {
            let idx = self.tus.len();
            self.tus.push(Tu {
                demand: d,
                index: i as u32,
                amount: a,
                slot: (self.pairs[p].rotation + i) % np,
                path: None,
                pos: 0,
                locks: Vec::new(),
                queued: None,
                state: TuState::Pending,
                marked: false,
                sent_at: now,
                outstanding: false,
            });
            self.pairs[p].backlog.push_back(idx);
        }
        self.pairs[p].rotation += self.dstate[d].tu_count;
    }

    fn instant(&mut self, d: usize, p: usize, now: SimTime) {
        let value = self.demands[d].value;
        let path = self.pairs[p].paths[0].path.clone();
        for w in path.windows(2) {
            let f = self.net.funds(w[0], w[1]).expect("path follows channels");
            if f < value {
                let (ch, dir) = self.net.channel_between(w[0], w[1]).expect("channel");
                self.add_need(w[0], ch, dir, value, now);
                self.fail_now(d, now, FailReason::InsufficientFunds);
                return;
            }
        }
        let mut settled = Vec::new();
        for w in path.windows(2) {
            self.net.apply_transfer(w[0], w[1], value).expect("checked above");
            let (ch, dir) = self.net.channel_between(w[0], w[1]).expect("channel");
            settled.push((ch, dir, value));
        }
        let hops = (path.len() - 1) as u64;
        let at = now + SimTime(hops * self.tick.millis());
        self.dstate[d].done = true;
        self.finish_success(d, at, settled);
        self.metrics.control_messages += 1;
        self.metrics.control_hops += hops;
    }

    fn finish_success(&mut self, d: usize, at: SimTime, settled: Vec<(ChannelId, Direction, Amount)>) {
        let dm = &self.demands[d];
        self.delays.push(at.saturating_sub(dm.created_at).secs());
        if at >= self.steady_from && at <= self.duration {
            for &(ch, dir, a) in &settled {
                self.flows[ch.0][dir.index()] += a;
            }
        }
        for &(_, _, a) in &settled {
            self.metrics.token_hops += tokens(a);
        }
        self.metrics.fees_paid += self.dstate[d].fees;
        self.record(d, Outcome::Completed { at }, settled);
    }

    fn fee(&self, ch: ChannelId, dir: Direction) -> f64 {
        self.prices[ch.0].fee(dir, self.cfg.routing.t_fee).unwrap_or(0.0)
    }

    fn send(&mut self, t: usize, p: usize, path: usize, now: SimTime) {
        let tu = &mut self.tus[t];
        tu.path = Some(path);
        tu.pos = 0;
        tu.sent_at = now;
        tu.state = TuState::InFlight;
        self.metrics.tus_sent += 1;
        if self.cfg.routing.scheme == RoutingScheme::Price {
            tu.outstanding = true;
            self.pairs[p].paths[path].outstanding += 1;
            let amount = tu.amount;
            self.pairs[p].credit[path] -= tokens(amount);
            self.pairs[p].sent[path] += tokens(amount);
            self.enqueue_at(t, now);
        }
    }

    fn send_price(&mut self, now: SimTime) {
        let tick = self.tick.secs();
        let tau = self.cfg.timing.tau_ms as f64 / 1000.0;
        for p in 0..self.pairs.len() {
            let pair = &mut self.pairs[p];
            for (i, ps) in pair.paths.iter().enumerate() {
                pair.credit[i] = (pair.credit[i] + ps.rate * tick).min(ps.rate * tau);
            }
            if pair.backlog.is_empty() {
                continue;
            }
            let np = pair.paths.len();
            let mut keep = VecDeque::new();
            let backlog = std::mem::take(&mut self.pairs[p].backlog);
            for t in backlog {
                if self.tus[t].state != TuState::Pending {
                    continue;
                }
                let pair = &self.pairs[p];
                let slot = self.tus[t].slot;
                let open = |i: usize| pair.credit[i] > 0.0 && admit(&pair.paths[i]);
                let choice = if open(slot) { Some(slot) } else { (0..np)
                    .filter(|&i| open(i))
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if pair.credit[b] >= pair.credit[i] => Some(b),
                        _ => Some(i),
                    }) };
                match choice {
                    Some(i) => self.send(t, p, i, now),
                    None => keep.push_back(t),
                }
            }
            self.pairs[p].backlog = keep;
        }
    }

    fn send_waterfilling(&mut self, now: SimTime) {
        for p in 0..self.pairs.len() {
            if self.pairs[p].backlog.is_empty() {
                continue;
            }
            let backlog = std::mem::take(&mut self.pairs[p].backlog);
            let mut keep = VecDeque::new();
            for t in backlog {
                if self.tus[t].state != TuState::Pending {
                    continue;
                }
                let amount = self.tus[t].amount;
                let mut best: Option<(Amount, usize)> = None;
                for (i, ps) in self.pairs[p].paths.iter().enumerate() {
                    let b = bottleneck(&self.net, &ps.path).expect("path follows channels");
                    if b >= amount && best.is_none_or(|(w, _)| b > w) {
                        best = Some((b, i));
                    }
                }
                match best {
                    Some((_, i)) => {
                        let path = self.pairs[p].paths[i].path.clone();
                        let mut fees = 0.0;
                        for w in path.windows(2) {
                            let (ch, dir) = self.net.lock(w[0], w[1], amount).expect("bottleneck checked");
                            fees += self.fee(ch, dir);
                            self.tus[t].locks.push((ch, dir));
                        }
                        let d = self.tus[t].demand;
                        self.dstate[d].fees += fees;
                        self.send(t, p, i, now);
                        let hops = (path.len() - 1) as u64;
                        self.schedule(now + SimTime(hops * self.tick.millis()), Ev::Deliver(t));
                    }
                    None => {
                        let slot = self.tus[t].slot;
                        let path = &self.pairs[p].paths[slot].path;
                        if let Some(w) = path.windows(2).find(|w| self.net.funds(w[0], w[1]).map(|f| f < amount).unwrap_or(false)) {
                            let (a, b) = (w[0], w[1]);
                            let (ch, dir) = self.net.channel_between(a, b).expect("channel");
                            self.add_need(a, ch, dir, amount, now);
                        }
                        keep.push_back(t);
                    }
                }
            }
            self.pairs[p].backlog = keep;
        }
    }

    fn enqueue_at(&mut self, t: usize, now: SimTime) {
        let d = self.tus[t].demand;
        let p = self.dstate[d].pair.expect("paired");
        let pi = self.tus[t].path.expect("sent");
        let pos = self.tus[t].pos;
        let (ch, dir) = self.pairs[p].hops[pi][pos];
        let amount = self.tus[t].amount;
        self.prices[ch.0].record_arrival(dir, tokens(amount));
        let tuid = TuId { parent: self.demands[d].id, index: self.tus[t].index };
        let deadline = self.demands[d].deadline;
        match self.queues[ch.0][dir.index()].enqueue(tuid, amount, deadline, now) {
            Ok(()) => {
                self.tus[t].queued = Some((ch, dir));
                self.tus[t].state = TuState::Queued;
                self.active_queues.insert((ch.0, dir.index()));
            }
            Err(_) => {
                self.metrics.queue_overflows += 1;
                self.abort(d, now, FailReason::QueueOverflow);
            }
        }
    }

    fn tu_of(&self, tuid: TuId) -> usize {
        self.dstate[tuid.parent.0 as usize].tu_base + tuid.index as usize
    }

    fn serve_queues(&mut self, now: SimTime) {
        let policy = self.cfg.congestion.scheduler;
        let lat = self.tick;
        let active: Vec<(usize, usize)> = self.active_queues.iter().copied().collect();
        for (c, di) in active {
            let ch = ChannelId(c);
            let dir = Direction::ALL[di];
            let (from, to) = self.net.channel(ch).oriented(dir);
            // Processing limit c / delta, shared by both directions.
            let cap = tokens(self.net.channel(ch).capacity());
            let per_tick = cap * lat.secs() / self.channel_delay[c];
            self.service[c] = (self.service[c] + per_tick).min(per_tick.max(self.cfg.routing.max_tu));
            while self.service[c] > 0.0 {
                let funds = self.net.channel(ch).funds(dir);
                let Some(e) = self.queues[c][di].dequeue_next(policy, funds) else { break };
                let t = self.tu_of(e.tuid);
                self.net.lock(from, to, e.amount).expect("dequeued within funds");
                self.service[c] -= tokens(e.amount);
                let fee = self.fee(ch, dir);
                let d = self.tus[t].demand;
                self.dstate[d].fees += fee;
                let tu = &mut self.tus[t];
                tu.locks.push((ch, dir));
                tu.queued = None;
                tu.state = TuState::InFlight;
                self.schedule(now + lat, Ev::Hop(t));
            }
            if self.queues[c][di].is_empty() {
                self.active_queues.remove(&(c, di));
            }
        }
    }

    fn process_events(&mut self, now: SimTime) {
        while let Some(Reverse((at, _, ev))) = self.events.peek().copied() {
            if at > now {
                break;
            }
            self.events.pop();
            match ev {
                Ev::Hop(t) => {
                    if self.tus[t].state != TuState::InFlight {
                        continue;
                    }
                    self.tus[t].pos += 1;
                    let d = self.tus[t].demand;
                    let p = self.dstate[d].pair.expect("paired");
                    let pi = self.tus[t].path.expect("sent");
                    if self.tus[t].pos == self.pairs[p].hops[pi].len() {
                        self.deliver(t, now);
                    } else {
                        self.enqueue_at(t, now);
                    }
                }
                Ev::Deliver(t) => {
                    if self.tus[t].state == TuState::InFlight {
                        self.deliver(t, now);
                    }
                }
                Ev::Ack(t) => self.ack(t, now),
            }
        }
    }

    fn deliver(&mut self, t: usize, now: SimTime) {
        self.tus[t].state = TuState::Completed;
        let d = self.tus[t].demand;
        let hops = self.tus[t].locks.len() as u64;
        self.schedule(now + SimTime(hops * self.tick.millis()), Ev::Ack(t));
        self.dstate[d].delivered += 1;
        if self.dstate[d].delivered == self.dstate[d].tu_count {
            self.complete(d, now);
        }
    }

    fn complete(&mut self, d: usize, now: SimTime) {
        let ds = &self.dstate[d];
        let mut settled = Vec::new();
        for t in ds.tu_base..ds.tu_base + ds.tu_count {
            let amount = self.tus[t].amount;
            for &(ch, dir) in &self.tus[t].locks {
                self.net.settle(ch, dir, amount);
                settled.push((ch, dir, amount));
            }
        }
        self.dstate[d].done = true;
        self.finish_success(d, now, settled);
    }

    fn ack(&mut self, t: usize, now: SimTime) {
        let hops = self.tus[t].locks.len() as u64;
        self.metrics.control_messages += 1;
        self.metrics.control_hops += hops;
        if !self.tus[t].outstanding {
            return;
        }
        self.tus[t].outstanding = false;
        let d = self.tus[t].demand;
        let p = self.dstate[d].pair.expect("paired");
        let pi = self.tus[t].path.expect("sent");
        let delay = now.saturating_sub(self.tus[t].sent_at).secs();
        let w = self.cfg.routing.ack_weight;
        let pair = &mut self.pairs[p];
        pair.paths[pi].outstanding -= 1;
        let min_cap = pair.min_cap[pi];
        pair.paths[pi].observe_ack(delay, w, min_cap);
        if !self.tus[t].marked {
            window_on_success(&mut pair.paths, pi, self.cfg.congestion.gamma);
        }
    }

    fn abort(&mut self, d: usize, now: SimTime, reason: FailReason) {
        if self.dstate[d].done {
            return;
        }
        self.dstate[d].done = true;
        let (base, count) = (self.dstate[d].tu_base, self.dstate[d].tu_count);
        let pair = self.dstate[d].pair;
        for t in (base..base + count).rev() {
            let tu = &mut self.tus[t];
            if let Some((ch, dir)) = tu.queued.take() {
                let tuid = TuId { parent: self.demands[d].id, index: tu.index };
                self.queues[ch.0][dir.index()].remove(tuid);
                if self.queues[ch.0][dir.index()].is_empty() {
                    self.active_queues.remove(&(ch.0, dir.index()));
                }
            }
            let amount = tu.amount;
            for &(ch, dir) in tu.locks.iter().rev() {
                self.net.release(ch, dir, amount);
            }
            tu.locks.clear();
            if tu.state != TuState::Pending {
                self.metrics.tus_aborted += 1;
            }
            tu.state = TuState::Aborted;
            if tu.outstanding {
                tu.outstanding = false;
                let (p, pi) = (pair.expect("paired"), tu.path.expect("sent"));
                let marked = tu.marked;
                let ps = &mut self.pairs[p].paths[pi];
                ps.outstanding -= 1;
                if marked {
                    window_on_abort(ps, self.cfg.congestion.beta, self.cfg.congestion.w_min);
                }
            }
        }
        self.record(d, Outcome::Failed { at: now, reason }, Vec::new());
    }

    fn price_interval(&mut self, now: SimTime) {
        let cfg = self.cfg;
        let r = &cfg.routing;
        let tau = cfg.timing.tau_ms as f64 / 1000.0;
        let threshold = SimTime::from_millis(cfg.congestion.mark_threshold_ms);
        for &(c, di) in &self.active_queues {
            for tuid in self.queues[c][di].mark_overdue(now, threshold) {
                let t = self.dstate[tuid.parent.0 as usize].tu_base + tuid.index as usize;
                self.tus[t].marked = true;
            }
        }
        if r.scheme == RoutingScheme::Price {
            let mut need = vec![[0.0f64; 2]; self.prices.len()];
            let mut dsum = vec![(0.0f64, 0usize); self.prices.len()];
            for pair in &self.pairs {
                for (ps, hops) in pair.paths.iter().zip(&pair.hops) {
                    for &(ch, _) in hops {
                        dsum[ch.0].0 += ps.ack_delay;
                        dsum[ch.0].1 += 1;
                    }
                }
            }
            for (c, (s, n)) in dsum.into_iter().enumerate() {
                if n > 0 {
                    self.channel_delay[c] = s / n as f64;
                }
            }
            let mut busy = vec![false; self.pairs.len()];
            for (p, pair) in self.pairs.iter_mut().enumerate() {
                busy[p] = !pair.backlog.is_empty();
                for ((ps, hops), sent) in pair.paths.iter().zip(&pair.hops).zip(pair.sent.iter_mut()) {
                    busy[p] |= *sent > 0.0 || ps.outstanding > 0;
                    let r = *sent / tau;
                    *sent = 0.0;
                    for &(ch, dir) in hops {
                        need[ch.0][dir.index()] += r * ps.ack_delay;
                    }
                }
            }
            for (i, st) in self.prices.iter_mut().enumerate() {
                st.set_required(Direction::AtoB, need[i][0]);
                st.set_required(Direction::BtoA, need[i][1]);
                let cap = tokens(self.net.channels()[i].capacity());
                st.step(cap, r.kappa, r.eta, tau);
            }
            // Probes go out only on pairs with traffic; idle pairs keep their rates.
            for (pair, _) in self.pairs.iter_mut().zip(&busy).filter(|(_, &b)| b) {
                let total: f64 = pair.paths.iter().map(|ps| ps.rate).sum();
                for (ps, hops) in pair.paths.iter_mut().zip(&pair.hops) {
                    let xis: Vec<f64> = hops.iter().map(|&(ch, dir)| self.prices[ch.0].routing_price(dir)).collect();
                    let rho = path_price(&xis, r.t_fee);
                    apply_rate_rule(r.rate_rule, ps, r.alpha, total, rho);
                    self.metrics.control_messages += 1;
                    self.metrics.control_hops += 2 * hops.len() as u64;
                }
            }
        } else {
            for st in &mut self.prices {
                st.close_interval(tau);
            }
        }
        if cfg.trace.enabled {
            for (i, st) in self.prices.iter().enumerate() {
                for dir in Direction::ALL {
                    let window: f64 = self.users[i][dir.index()]
                        .iter()
                        .map(|&(p, pi)| self.pairs[p].paths[pi].window)
                        .sum();
                    self.traces.push(TraceRow {
                        time_s: now.secs(),
                        channel: i,
                        direction: if dir == Direction::AtoB { "ab" } else { "ba" },
                        lambda: st.lambda,
                        mu: st.mu[dir.index()],
                        xi: st.routing_price(dir),
                        rate: st.rate[dir.index()],
                        queue_len: self.queues[i][dir.index()].len(),
                        window,
                    });
                }
            }
        }
    }

    fn epoch(&mut self, now: SimTime) {
        let k = self.hubs.len() as u64;
        self.metrics.control_messages += k * k.saturating_sub(1);
        for &a in &self.hubs {
            for &b in &self.hubs {
                if a != b {
                    self.metrics.control_hops += u64::from(self.net.hop_distance(a, b).unwrap_or(0));
                }
            }
        }
        for &(c, di) in &self.active_queues {
            let q = &self.queues[c][di];
            if let Some(min) = q.entries().iter().map(|e| e.amount).min() {
                let dir = Direction::ALL[di];
                let node = self.net.channel(ChannelId(c)).oriented(dir).0;
                self.needs.note(node, ChannelId(c), dir, min, now);
            }
        }
        let stale = SimTime::from_millis(self.cfg.timing.timeout_ms);
        self.needs.expire(now, stale);
        let current: BTreeSet<NodeId> = detect_deadlock(&self.net, &self.needs).into_iter().collect();
        for &n in current.difference(&self.deadlocked) {
            self.deadlocks.push(DeadlockEvent { at: now, node: n });
        }
        self.deadlocked = current;
    }

    fn finish(&mut self) {
        let m = &mut self.metrics;
        m.demands = self.demands.len();
        m.deadlock_events = self.deadlocks.len();
        let mut gen = Amount::ZERO;
        let mut done = Amount::ZERO;
        for r in self.records.iter().flatten() {
            gen += r.value;
            if r.completed_at().is_some() {
                m.completed += 1;
                done += r.value;
            }
        }
        m.generated_value = gen.tokens();
        m.completed_value = done.tokens();
        m.tsr = if m.demands == 0 { 1.0 } else { m.completed as f64 / m.demands as f64 };
        m.normalized_throughput = if gen.is_positive() { done.tokens() / gen.tokens() } else { 0.0 };
        m.avg_delay = if self.delays.is_empty() { 0.0 } else { self.delays.iter().sum::<f64>() / self.delays.len() as f64 };
    }
}
