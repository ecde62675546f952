//! Network data model: nodes, bidirectional channels with per-direction funds,
//! and the fund-movement primitives every other module builds on.
//!
//! Channel funds follow HTLC-like semantics. A hop that is forwarded but not
//! yet settled holds its amount in `locked`; settlement credits the far side
//! and release refunds the near side. For every channel, at every instant,
//! `funds_ab + funds_ba + locked_ab + locked_ba == capacity`. With nothing in
//! flight this reduces to `funds_ab + funds_ba == capacity`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::NetworkError;
use crate::time::SimTime;

/// Hop count returned for node pairs in different components.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Client,
    CandidateSmoothNode,
    /// A candidate that a placement decision turned into a hub.
    ActiveSmoothNode,
}

impl NodeRole {
    pub fn is_candidate(self) -> bool {
        matches!(self, NodeRole::CandidateSmoothNode | NodeRole::ActiveSmoothNode)
    }

    fn as_str(self) -> &'static str {
        match self {
            NodeRole::Client => "client",
            NodeRole::CandidateSmoothNode => "candidate",
            NodeRole::ActiveSmoothNode => "hub",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "client" => Some(NodeRole::Client),
            "candidate" => Some(NodeRole::CandidateSmoothNode),
            "hub" => Some(NodeRole::ActiveSmoothNode),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub usize);

/// Direction of travel on a channel whose endpoints are stored as `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    AtoB,
    BtoA,
}

impl Direction {
    pub const fn index(self) -> usize {
        match self {
            Direction::AtoB => 0,
            Direction::BtoA => 1,
        }
    }

    pub const fn reverse(self) -> Direction {
        match self {
            Direction::AtoB => Direction::BtoA,
            Direction::BtoA => Direction::AtoB,
        }
    }

    pub const ALL: [Direction; 2] = [Direction::AtoB, Direction::BtoA];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    a: NodeId,
    b: NodeId,
    capacity: Amount,
    funds: [Amount; 2],
    locked: [Amount; 2],
}

impl Channel {
    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn capacity(&self) -> Amount {
        self.capacity
    }

    /// Spendable funds in the given direction.
    pub fn funds(&self, dir: Direction) -> Amount {
        self.funds[dir.index()]
    }

    pub fn locked(&self, dir: Direction) -> Amount {
        self.locked[dir.index()]
    }

    pub fn funds_ab(&self) -> Amount {
        self.funds[0]
    }

    pub fn funds_ba(&self) -> Amount {
        self.funds[1]
    }

    pub fn direction_from(&self, from: NodeId) -> Option<Direction> {
        if from == self.a {
            Some(Direction::AtoB)
        } else if from == self.b {
            Some(Direction::BtoA)
        } else {
            None
        }
    }

    /// `(sender, receiver)` for a direction.
    pub fn oriented(&self, dir: Direction) -> (NodeId, NodeId) {
        match dir {
            Direction::AtoB => (self.a, self.b),
            Direction::BtoA => (self.b, self.a),
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.funds[0] + self.funds[1] + self.locked[0] + self.locked[1] == self.capacity
    }
}

/// A client payment request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentDemand {
    pub id: DemandId,
    pub source: NodeId,
    pub dest: NodeId,
    pub value: Amount,
    pub created_at: SimTime,
    pub deadline: SimTime,
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct DemandId(pub u64);

impl PaymentDemand {
    pub fn new(
        id: DemandId,
        source: NodeId,
        dest: NodeId,
        value: Amount,
        created_at: SimTime,
        deadline: SimTime,
    ) -> Result<Self, NetworkError> {
        if source == dest {
            return Err(NetworkError::InvalidDemand(format!(
                "source and destination are both {source}"
            )));
        }
        if !value.is_positive() {
            return Err(NetworkError::InvalidDemand(format!("non-positive value {value}")));
        }
        if deadline <= created_at {
            return Err(NetworkError::InvalidDemand(format!(
                "deadline {deadline} not after creation {created_at}"
            )));
        }
        Ok(PaymentDemand { id, source, dest, value, created_at, deadline })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    #[default]
    SmallWorld,
    /// Chain `0 - 1 - ... - (n-1)`.
    Line,
}

/// Channel-size distribution in tokens.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelDist {
    Lognormal { mu: f64, sigma: f64, floor: f64 },
    Fixed { capacity: f64 },
}

impl ChannelDist {
    /// Log-normal pinned by a median of 152 tokens and a mean of 403 tokens,
    /// floored at 10 tokens.
    pub fn heavy_tailed() -> Self {
        let median: f64 = 152.0;
        let mean: f64 = 403.0;
        ChannelDist::Lognormal {
            mu: median.ln(),
            sigma: (2.0 * (mean / median).ln()).sqrt(),
            floor: 10.0,
        }
    }
}

impl Default for ChannelDist {
    fn default() -> Self {
        ChannelDist::heavy_tailed()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: usize,
    pub clients: usize,
    pub candidates: usize,
    pub topology: Topology,
    pub ring_degree: usize,
    pub rewire_prob: f64,
    pub channel_dist: ChannelDist,
    pub seed: u64,
    /// Regeneration attempts before giving up on connectivity.
    pub max_attempts: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            nodes: 100,
            clients: 88,
            candidates: 12,
            topology: Topology::SmallWorld,
            ring_degree: 8,
            rewire_prob: 0.1,
            channel_dist: ChannelDist::default(),
            seed: 1,
            max_attempts: 16,
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |msg: String| Err(NetworkError::InvalidSpec(msg));
        if self.nodes < 2 {
            return bad(format!("need at least 2 nodes, got {}", self.nodes));
        }
        if self.clients + self.candidates != self.nodes {
            return bad(format!(
                "clients ({}) + candidates ({}) must equal nodes ({})",
                self.clients, self.candidates, self.nodes
            ));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        if self.topology == Topology::SmallWorld {
            if self.ring_degree < 2 || self.ring_degree % 2 != 0 {
                return bad(format!("ring_degree must be even and >= 2, got {}", self.ring_degree));
            }
            if self.ring_degree >= self.nodes {
                return bad(format!(
                    "ring_degree {} must be below node count {}",
                    self.ring_degree, self.nodes
                ));
            }
            if !(0.0..=1.0).contains(&self.rewire_prob) {
                return bad(format!("rewire_prob {} outside [0, 1]", self.rewire_prob));
            }
        }
        match self.channel_dist {
            ChannelDist::Lognormal { sigma, floor, mu } => {
                if !(sigma > 0.0) || !(floor > 0.0) || !mu.is_finite() {
                    return bad("lognormal needs sigma > 0, floor > 0 and finite mu".into());
                }
            }
            ChannelDist::Fixed { capacity } => {
                if !(capacity > 0.0) {
                    return bad(format!("fixed capacity must be positive, got {capacity}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    roles: Vec<NodeRole>,
    channels: Vec<Channel>,
    adjacency: Vec<Vec<(NodeId, ChannelId)>>,
    hops: Vec<Vec<u32>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.roles == other.roles && self.channels == other.channels
    }
}

/// Builds a connected network from a spec. A pure function of the spec.
pub fn build_network(spec: &NetworkSpec) -> Result<Network, NetworkError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = match spec.topology {
        Topology::Line => (0..spec.nodes as u32 - 1).map(|i| (i, i + 1)).collect(),
        Topology::SmallWorld => {
            let mut attempt = 0;
            loop {
                let edges = small_world_edges(spec.nodes, spec.ring_degree, spec.rewire_prob, &mut rng);
                if is_connected(spec.nodes, &edges) {
                    break edges;
                }
                attempt += 1;
                if attempt >= spec.max_attempts {
                    return Err(NetworkError::DisconnectedTopology { attempts: attempt });
                }
            }
        }
    };

    let capacity_sampler = CapacitySampler::new(spec.channel_dist)?;
    let channels: Vec<(NodeId, NodeId, Amount, Amount)> = edges
        .iter()
        .map(|&(a, b)| {
            let cap = capacity_sampler.sample(&mut rng);
            let ab = Amount::from_milli(cap.milli() / 2);
            (NodeId(a), NodeId(b), ab, cap - ab)
        })
        .collect();

    // Candidates are the best-connected nodes (degree desc, id asc).
    let mut degree = vec![0usize; spec.nodes];
    for &(a, b) in &edges {
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    let mut order: Vec<usize> = (0..spec.nodes).collect();
    order.sort_by(|&x, &y| degree[y].cmp(&degree[x]).then(x.cmp(&y)));
    let mut roles = vec![NodeRole::Client; spec.nodes];
    for &n in order.iter().take(spec.candidates) {
        roles[n] = NodeRole::CandidateSmoothNode;
    }

    Network::from_parts(roles, channels)
}

struct CapacitySampler {
    dist: ChannelDist,
    lognormal: Option<LogNormal<f64>>,
}

impl CapacitySampler {
    fn new(dist: ChannelDist) -> Result<Self, NetworkError> {
        let lognormal = match dist {
            ChannelDist::Lognormal { mu, sigma, .. } => Some(
                LogNormal::new(mu, sigma)
                    .map_err(|e| NetworkError::InvalidSpec(format!("lognormal: {e}")))?,
            ),
            ChannelDist::Fixed { .. } => None,
        };
        Ok(CapacitySampler { dist, lognormal })
    }

    /// Whole-token capacities so the initial even split is exact.
    fn sample<R: Rng>(&self, rng: &mut R) -> Amount {
        let tokens = match (self.dist, &self.lognormal) {
            (ChannelDist::Lognormal { floor, .. }, Some(ln)) => ln.sample(rng).max(floor),
            (ChannelDist::Fixed { capacity }, _) => capacity,
            _ => unreachable!(),
        };
        Amount::from_whole_tokens(tokens.round().max(1.0) as i64)
    }
}

/// Watts-Strogatz ring lattice with random rewiring. Edges are `(lo, hi)`.
fn small_world_edges<R: Rng>(n: usize, k: usize, p: f64, rng: &mut R) -> Vec<(u32, u32)> {
    let norm = |a: u32, b: u32| if a < b { (a, b) } else { (b, a) };
    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut lattice = Vec::with_capacity(n * k / 2);
    for i in 0..n {
        for j in 1..=k / 2 {
            let e = norm(i as u32, ((i + j) % n) as u32);
            if edges.insert(e) {
                lattice.push((i as u32, ((i + j) % n) as u32));
            }
        }
    }
    for (u, v) in lattice {
        if rng.random::<f64>() >= p {
            continue;
        }
        let degree_u = edges.iter().filter(|&&(a, b)| a == u || b == u).count();
        if degree_u >= n - 1 {
            continue;
        }
        loop {
            let w = rng.random_range(0..n as u32);
            if w != u && !edges.contains(&norm(u, w)) {
                edges.remove(&norm(u, v));
                edges.insert(norm(u, w));
                break;
            }
        }
    }
    edges.into_iter().collect()
}

fn is_connected(n: usize, edges: &[(u32, u32)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

impl Network {
    /// Assembles a network from explicit roles and `(a, b, funds_ab, funds_ba)`
    /// channel tuples. Node ids are the indices into `roles`.
    pub fn from_parts(
        roles: Vec<NodeRole>,
        channels: Vec<(NodeId, NodeId, Amount, Amount)>,
    ) -> Result<Self, NetworkError> {
        let n = roles.len();
        let mut adjacency: Vec<Vec<(NodeId, ChannelId)>> = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        let mut built = Vec::with_capacity(channels.len());
        for (x, y, fxy, fyx) in channels {
            for node in [x, y] {
                if node.index() >= n {
                    return Err(NetworkError::UnknownNode(node));
                }
            }
            if x == y {
                return Err(NetworkError::InvalidSpec(format!("self-loop on {x}")));
            }
            let (a, b, fab, fba) = if x < y { (x, y, fxy, fyx) } else { (y, x, fyx, fxy) };
            if !seen.insert((a, b)) {
                return Err(NetworkError::InvalidSpec(format!("duplicate channel {a}-{b}")));
            }
            if fab < Amount::ZERO || fba < Amount::ZERO {
                return Err(NetworkError::InvalidSpec(format!("negative funds on {a}-{b}")));
            }
            let capacity = fab + fba;
            if !capacity.is_positive() {
                return Err(NetworkError::InvalidSpec(format!("zero capacity on {a}-{b}")));
            }
            let id = ChannelId(built.len());
            adjacency[a.index()].push((b, id));
            adjacency[b.index()].push((a, id));
            built.push(Channel { a, b, capacity, funds: [fab, fba], locked: [Amount::ZERO; 2] });
        }
        for list in &mut adjacency {
            list.sort();
        }
        let hops = all_pairs_hops(&adjacency);
        Ok(Network { roles, channels: built, adjacency, hops })
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeRole)> + '_ {
        self.roles.iter().enumerate().map(|(i, &r)| (NodeId(i as u32), r))
    }

    pub fn role(&self, n: NodeId) -> Result<NodeRole, NetworkError> {
        self.roles.get(n.index()).copied().ok_or(NetworkError::UnknownNode(n))
    }

    /// Promotes candidates to hubs (or demotes hubs back to candidates).
    pub fn set_role(&mut self, n: NodeId, role: NodeRole) -> Result<(), NetworkError> {
        let current = self.role(n)?;
        if current.is_candidate() != role.is_candidate() {
            return Err(NetworkError::InvalidSpec(format!(
                "node {n} cannot change between client and candidate"
            )));
        }
        self.roles[n.index()] = role;
        Ok(())
    }

    pub fn clients(&self) -> Vec<NodeId> {
        self.nodes().filter(|(_, r)| *r == NodeRole::Client).map(|(n, _)| n).collect()
    }

    pub fn candidates(&self) -> Vec<NodeId> {
        self.nodes().filter(|(_, r)| r.is_candidate()).map(|(n, _)| n).collect()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, id: ChannelId) -> &Channel {
        &self.channels[id.0]
    }

    /// Neighbours of `n` in ascending id order with the connecting channel.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, ChannelId)] {
        &self.adjacency[n.index()]
    }

    /// The channel joining `from` and `to` and the direction `from -> to`.
    pub fn channel_between(&self, from: NodeId, to: NodeId) -> Option<(ChannelId, Direction)> {
        let list = self.adjacency.get(from.index())?;
        let pos = list.binary_search_by(|(nb, _)| nb.cmp(&to)).ok()?;
        let id = list[pos].1;
        let dir = self.channels[id.0].direction_from(from)?;
        Some((id, dir))
    }

    fn oriented_channel(&self, a: NodeId, b: NodeId) -> Result<(ChannelId, Direction), NetworkError> {
        for n in [a, b] {
            if n.index() >= self.roles.len() {
                return Err(NetworkError::UnknownNode(n));
            }
        }
        self.channel_between(a, b).ok_or(NetworkError::NoChannel(a, b))
    }

    /// Spendable funds in direction `a -> b`.
    pub fn funds(&self, a: NodeId, b: NodeId) -> Result<Amount, NetworkError> {
        let (id, dir) = self.oriented_channel(a, b)?;
        Ok(self.channels[id.0].funds(dir))
    }

    /// Moves `amount` from `a`'s side of the channel to `b`'s side. Either the
    /// whole amount moves or nothing does.
    pub fn apply_transfer(&mut self, a: NodeId, b: NodeId, amount: Amount) -> Result<(), NetworkError> {
        let (id, dir) = self.lock(a, b, amount)?;
        self.settle(id, dir, amount);
        Ok(())
    }

    /// Reserves `amount` of `a -> b` funds for an in-flight hop.
    pub fn lock(&mut self, a: NodeId, b: NodeId, amount: Amount) -> Result<(ChannelId, Direction), NetworkError> {
        if !amount.is_positive() {
            return Err(NetworkError::NonPositiveAmount(amount));
        }
        let (id, dir) = self.oriented_channel(a, b)?;
        let ch = &mut self.channels[id.0];
        let available = ch.funds[dir.index()];
        if available < amount {
            return Err(NetworkError::InsufficientFunds { from: a, to: b, available, requested: amount });
        }
        ch.funds[dir.index()] -= amount;
        ch.locked[dir.index()] += amount;
        Ok((id, dir))
    }

    /// Completes a locked hop: the receiver's side gains the amount.
    ///
    /// Panics if less than `amount` is locked; callers only settle what they
    /// previously locked.
    pub fn settle(&mut self, id: ChannelId, dir: Direction, amount: Amount) {
        let ch = &mut self.channels[id.0];
        assert!(ch.locked[dir.index()] >= amount, "settling more than is locked");
        ch.locked[dir.index()] -= amount;
        ch.funds[dir.reverse().index()] += amount;
    }

    /// Cancels a locked hop: the sender's side gets the amount back.
    pub fn release(&mut self, id: ChannelId, dir: Direction, amount: Amount) {
        let ch = &mut self.channels[id.0];
        assert!(ch.locked[dir.index()] >= amount, "releasing more than is locked");
        ch.locked[dir.index()] -= amount;
        ch.funds[dir.index()] += amount;
    }

    /// Unweighted shortest-path hop count, [`UNREACHABLE`] across components.
    pub fn hop_distance(&self, m: NodeId, n: NodeId) -> Result<u32, NetworkError> {
        for x in [m, n] {
            if x.index() >= self.roles.len() {
                return Err(NetworkError::UnknownNode(x));
            }
        }
        Ok(self.hops[m.index()][n.index()])
    }

    /// Total channel value including in-flight locks.
    pub fn total_capacity(&self) -> Amount {
        self.channels.iter().map(|c| c.capacity).sum()
    }

    pub fn total_funds(&self) -> Amount {
        self.channels
            .iter()
            .map(|c| c.funds[0] + c.funds[1] + c.locked[0] + c.locked[1])
            .sum()
    }

    /// A copy of the network with every capacity (and both directions' funds)
    /// multiplied by `factor`.
    pub fn scaled(&self, factor: i64) -> Network {
        let mut out = self.clone();
        for ch in &mut out.channels {
            ch.capacity = Amount::from_milli(ch.capacity.milli() * factor);
            for d in 0..2 {
                ch.funds[d] = Amount::from_milli(ch.funds[d].milli() * factor);
                ch.locked[d] = Amount::from_milli(ch.locked[d].milli() * factor);
            }
        }
        out
    }

    /// Line-oriented text dump: `node id role` then `chan a b funds_ab funds_ba`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, role) in self.nodes() {
            let _ = writeln!(out, "node {} {}", id, role.as_str());
        }
        for ch in &self.channels {
            let _ = writeln!(
                out,
                "chan {} {} {} {}",
                ch.a,
                ch.b,
                ch.funds[0] + ch.locked[0],
                ch.funds[1] + ch.locked[1]
            );
        }
        out
    }

    /// Parses the format written by [`Network::dump`].
    pub fn parse_dump(text: &str) -> Result<Network, NetworkError> {
        let mut roles: Vec<Option<NodeRole>> = Vec::new();
        let mut channels = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: &str| NetworkError::Parse { line: line_no, reason: reason.to_string() };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["node", id, role] => {
                    let id: usize = id.parse().map_err(|_| err("bad node id"))?;
                    let role = NodeRole::parse(role).ok_or_else(|| err("unknown role"))?;
                    if roles.len() <= id {
                        roles.resize(id + 1, None);
                    }
                    if roles[id].replace(role).is_some() {
                        return Err(err("duplicate node"));
                    }
                }
                ["chan", a, b, fab, fba] => {
                    let a: u32 = a.parse().map_err(|_| err("bad endpoint"))?;
                    let b: u32 = b.parse().map_err(|_| err("bad endpoint"))?;
                    let fab: Amount = fab.parse().map_err(|e: String| err(&e))?;
                    let fba: Amount = fba.parse().map_err(|e: String| err(&e))?;
                    channels.push((NodeId(a), NodeId(b), fab, fba));
                }
                _ => return Err(err("unrecognised line")),
            }
        }
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or(NetworkError::Parse { line: 0, reason: format!("node {i} missing") }))
            .collect::<Result<Vec<_>, _>>()?;
        Network::from_parts(roles, channels)
    }
}

fn all_pairs_hops(adjacency: &[Vec<(NodeId, ChannelId)>]) -> Vec<Vec<u32>> {
    let n = adjacency.len();
    let mut out = vec![vec![UNREACHABLE; n]; n];
    let mut queue = VecDeque::new();
    for (src, row) in out.iter_mut().enumerate() {
        row[src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for &(v, _) in &adjacency[u] {
                if row[v.index()] == UNREACHABLE {
                    row[v.index()] = du + 1;
                    queue.push_back(v.index());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_acb() -> Network {
        // A=0, B=1, C=2 wired A - C - B.
        let ten = Amount::from_whole_tokens(10);
        Network::from_parts(
            vec![NodeRole::Client; 3],
            vec![(NodeId(0), NodeId(2), ten, ten), (NodeId(2), NodeId(1), ten, ten)],
        )
        .unwrap()
    }

    #[test]
    fn line_spec_splits_capacity_evenly() {
        let spec = NetworkSpec {
            nodes: 3,
            clients: 3,
            candidates: 0,
            topology: Topology::Line,
            channel_dist: ChannelDist::Fixed { capacity: 20.0 },
            ..NetworkSpec::default()
        };
        let net = build_network(&spec).unwrap();
        assert_eq!(net.channels().len(), 2);
        for ch in net.channels() {
            assert_eq!(ch.funds_ab(), Amount::from_whole_tokens(10));
            assert_eq!(ch.funds_ba(), Amount::from_whole_tokens(10));
        }
    }

    #[test]
    fn single_node_spec_is_invalid() {
        let spec = NetworkSpec { nodes: 1, clients: 1, candidates: 0, ..NetworkSpec::default() };
        assert!(matches!(build_network(&spec), Err(NetworkError::InvalidSpec(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = NetworkSpec { seed: 7, ..NetworkSpec::default() };
        let a = build_network(&spec).unwrap();
        let b = build_network(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dump(), b.dump());
        assert_eq!(a.candidates().len(), 12);
    }

    #[test]
    fn disconnected_generator_reports_error() {
        // A fully rewired sparse ring disconnects for some seeds; with a single
        // attempt allowed the generator must report it rather than retry.
        let hit = (0..200u64).any(|seed| {
            let spec = NetworkSpec {
                nodes: 12,
                clients: 12,
                candidates: 0,
                ring_degree: 2,
                rewire_prob: 1.0,
                max_attempts: 1,
                seed,
                ..NetworkSpec::default()
            };
            matches!(build_network(&spec), Err(NetworkError::DisconnectedTopology { attempts: 1 }))
        });
        assert!(hit);
    }

    #[test]
    fn transfer_moves_funds_and_round_trips() {
        let mut net = line_acb();
        let (a, c) = (NodeId(0), NodeId(2));
        net.apply_transfer(a, c, Amount::from_whole_tokens(5)).unwrap();
        assert_eq!(net.funds(a, c).unwrap(), Amount::from_whole_tokens(5));
        assert_eq!(net.funds(c, a).unwrap(), Amount::from_whole_tokens(15));

        let mut net = line_acb();
        let before = net.clone();
        net.apply_transfer(a, c, Amount::from_whole_tokens(10)).unwrap();
        net.apply_transfer(c, a, Amount::from_whole_tokens(10)).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn transfer_from_empty_direction_fails_without_partial_move() {
        let net0 = Network::from_parts(
            vec![NodeRole::Client; 2],
            vec![(NodeId(0), NodeId(1), Amount::ZERO, Amount::from_whole_tokens(20))],
        )
        .unwrap();
        let mut net = net0.clone();
        let err = net.apply_transfer(NodeId(0), NodeId(1), Amount::from_milli(1)).unwrap_err();
        assert!(matches!(err, NetworkError::InsufficientFunds { .. }));
        assert_eq!(net, net0);
    }

    #[test]
    fn lock_release_and_settle_conserve_capacity() {
        let mut net = line_acb();
        let amt = Amount::from_milli(2500);
        let (id, dir) = net.lock(NodeId(2), NodeId(1), amt).unwrap();
        assert!(net.channel(id).is_conserved());
        assert_eq!(net.funds(NodeId(2), NodeId(1)).unwrap(), Amount::from_milli(7500));
        net.release(id, dir, amt);
        assert_eq!(net, line_acb());
        let (id, dir) = net.lock(NodeId(2), NodeId(1), amt).unwrap();
        net.settle(id, dir, amt);
        assert_eq!(net.funds(NodeId(1), NodeId(2)).unwrap(), Amount::from_milli(12500));
        assert!(net.channels().iter().all(Channel::is_conserved));
    }

    #[test]
    fn hop_distances_on_line() {
        let net = line_acb();
        assert_eq!(net.hop_distance(NodeId(0), NodeId(1)).unwrap(), 2);
        assert_eq!(net.hop_distance(NodeId(0), NodeId(0)).unwrap(), 0);
        assert!(matches!(net.hop_distance(NodeId(0), NodeId(9)), Err(NetworkError::UnknownNode(_))));
    }

    #[test]
    fn disconnected_pair_is_unreachable() {
        let one = Amount::from_whole_tokens(1);
        let net = Network::from_parts(
            vec![NodeRole::Client; 4],
            vec![(NodeId(0), NodeId(1), one, one), (NodeId(2), NodeId(3), one, one)],
        )
        .unwrap();
        assert_eq!(net.hop_distance(NodeId(0), NodeId(3)).unwrap(), UNREACHABLE);
    }

    #[test]
    fn dump_round_trips() {
        let net = build_network(&NetworkSpec { nodes: 30, clients: 25, candidates: 5, ..NetworkSpec::default() }).unwrap();
        let parsed = Network::parse_dump(&net.dump()).unwrap();
        assert_eq!(parsed, net);
    }

    #[test]
    fn demand_validation() {
        let ok = PaymentDemand::new(DemandId(1), NodeId(0), NodeId(1), Amount::from_whole_tokens(1), SimTime(0), SimTime(10));
        assert!(ok.is_ok());
        assert!(PaymentDemand::new(DemandId(1), NodeId(0), NodeId(0), Amount::from_whole_tokens(1), SimTime(0), SimTime(10)).is_err());
        assert!(PaymentDemand::new(DemandId(1), NodeId(0), NodeId(1), Amount::from_whole_tokens(1), SimTime(10), SimTime(10)).is_err());
    }
}
