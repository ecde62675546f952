use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::error::{NetworkError, RoutingError};
use crate::network::{ChannelId, Network, NodeId};

pub type Path = Vec<NodeId>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// k shortest by hop count.
    Ksp,
    /// Shortest-path pool ranked by bottleneck funds.
    Heuristic,
    /// Edge-disjoint widest.
    #[default]
    Edw,
    /// Edge-disjoint shortest.
    Eds,
}

impl std::str::FromStr for PathKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ksp" => Ok(PathKind::Ksp),
            "heuristic" => Ok(PathKind::Heuristic),
            "edw" => Ok(PathKind::Edw),
            "eds" => Ok(PathKind::Eds),
            other => Err(format!("unknown path kind `{other}`")),
        }
    }
}

impl std::fmt::Display for PathKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PathKind::Ksp => "ksp",
            PathKind::Heuristic => "heuristic",
            PathKind::Edw => "edw",
            PathKind::Eds => "eds",
        };
        f.write_str(s)
    }
}

/// Lowest spendable balance along the path.
pub fn bottleneck(net: &Network, path: &[NodeId]) -> Result<Amount, NetworkError> {
    let mut min: Option<Amount> = None;
    for hop in path.windows(2) {
        let f = net.funds(hop[0], hop[1])?;
        min = Some(min.map_or(f, |m| m.min(f)));
    }
    Ok(min.unwrap_or(Amount::ZERO))
}

/// Lexicographically smallest among the shortest `s -> e` paths using only
/// edges accepted by `edge_ok(from, to, channel)` and avoiding `banned`
/// nodes.
fn lex_shortest<F>(net: &Network, s: NodeId, e: NodeId, banned: &HashSet<NodeId>, edge_ok: F) -> Option<Path>
where
    F: Fn(NodeId, NodeId, ChannelId) -> bool,
{
    if banned.contains(&s) || banned.contains(&e) {
        return None;
    }
    let n = net.node_count();
    let mut dist = vec![u32::MAX; n];
    dist[e.index()] = 0;
    let mut queue = VecDeque::from([e]);
    while let Some(v) = queue.pop_front() {
        for &(u, ch) in net.neighbors(v) {
            if dist[u.index()] == u32::MAX && !banned.contains(&u) && edge_ok(u, v, ch) {
                dist[u.index()] = dist[v.index()] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[s.index()] == u32::MAX {
        return None;
    }
    let mut path = vec![s];
    let mut cur = s;
    while cur != e {
        let d = dist[cur.index()];
        let next = net
            .neighbors(cur)
            .iter()
            .find(|&&(nb, ch)| dist[nb.index()] == d - 1 && edge_ok(cur, nb, ch))
            .map(|&(nb, _)| nb)?;
        path.push(next);
        cur = next;
    }
    Some(path)
}

fn check_endpoints(net: &Network, s: NodeId, e: NodeId) -> Result<(), RoutingError> {
    for n in [s, e] {
        if n.index() >= net.node_count() {
            return Err(NetworkError::UnknownNode(n).into());
        }
    }
    if s == e {
        return Err(RoutingError::NoPath(s, e));
    }
    Ok(())
}

/// Yen's k shortest simple paths, ordered by (hops, node sequence).
pub fn k_shortest(net: &Network, s: NodeId, e: NodeId, k: usize) -> Result<Vec<Path>, RoutingError> {
    check_endpoints(net, s, e)?;
    let none = HashSet::new();
    let first = lex_shortest(net, s, e, &none, |_, _, _| true).ok_or(RoutingError::NoPath(s, e))?;
    let mut found: Vec<Path> = vec![first];
    let mut pool: BTreeSet<(usize, Path)> = BTreeSet::new();
    while found.len() < k {
        let last = found.last().expect("nonempty").clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let mut cut: HashSet<ChannelId> = HashSet::new();
            for p in &found {
                if p.len() > i + 1 && &p[..=i] == root {
                    if let Some((ch, _)) = net.channel_between(p[i], p[i + 1]) {
                        cut.insert(ch);
                    }
                }
            }
            let banned: HashSet<NodeId> = root[..i].iter().copied().collect();
            if let Some(tail) = lex_shortest(net, spur, e, &banned, |_, _, ch| !cut.contains(&ch)) {
                let mut cand: Path = root[..i].to_vec();
                cand.extend(tail);
                if !found.contains(&cand) {
                    pool.insert((cand.len(), cand));
                }
            }
        }
        match pool.pop_first() {
            Some((_, p)) => found.push(p),
            None => break,
        }
    }
    Ok(found)
}

fn edge_disjoint<F>(net: &Network, s: NodeId, e: NodeId, k: usize, mut pick: F) -> Result<Vec<Path>, RoutingError>
where
    F: FnMut(&HashSet<ChannelId>) -> Option<Path>,
{
    check_endpoints(net, s, e)?;
    let mut used: HashSet<ChannelId> = HashSet::new();
    let mut out = Vec::new();
    while out.len() < k {
        let Some(p) = pick(&used) else { break };
        for hop in p.windows(2) {
            let (ch, _) = net.channel_between(hop[0], hop[1]).expect("path follows channels");
            used.insert(ch);
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(RoutingError::NoPath(s, e));
    }
    Ok(out)
}

fn widest_disjoint(net: &Network, s: NodeId, e: NodeId, k: usize) -> Result<Vec<Path>, RoutingError> {
    let none = HashSet::new();
    let funds = |a: NodeId, b: NodeId| net.funds(a, b).expect("adjacent");
    edge_disjoint(net, s, e, k, |used| {
        let mut levels: Vec<Amount> = net
            .channels()
            .iter()
            .enumerate()
            .filter(|(i, _)| !used.contains(&ChannelId(*i)))
            .flat_map(|(_, c)| [c.funds_ab(), c.funds_ba()])
            .collect();
        levels.push(Amount::ZERO);
        levels.sort();
        levels.dedup();
        let reach = |w: Amount| lex_shortest(net, s, e, &none, |a, b, ch| !used.contains(&ch) && funds(a, b) >= w);
        // Reachability is monotone in the width threshold.
        reach(Amount::ZERO)?;
        let (mut lo, mut hi) = (0, levels.len() - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if reach(levels[mid]).is_some() {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        reach(levels[lo])
    })
}

/// Up to `k` paths of the requested kind. Ties break on node sequence.
pub fn compute_paths(net: &Network, s: NodeId, e: NodeId, k: usize, kind: PathKind) -> Result<Vec<Path>, RoutingError> {
    if k == 0 {
        return Err(RoutingError::InvalidBounds("k must be at least 1".into()));
    }
    match kind {
        PathKind::Ksp => k_shortest(net, s, e, k),
        PathKind::Heuristic => {
            let mut pool = k_shortest(net, s, e, (4 * k).max(16))?;
            let mut keyed = Vec::with_capacity(pool.len());
            for p in pool.drain(..) {
                keyed.push((bottleneck(net, &p)?, p));
            }
            keyed.sort_by(|(wa, pa), (wb, pb)| wb.cmp(wa).then(pa.len().cmp(&pb.len())).then(pa.cmp(pb)));
            Ok(keyed.into_iter().take(k).map(|(_, p)| p).collect())
        }
        PathKind::Edw => widest_disjoint(net, s, e, k),
        PathKind::Eds => {
            let none = HashSet::new();
            edge_disjoint(net, s, e, k, |used| lex_shortest(net, s, e, &none, |_, _, ch| !used.contains(&ch)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeRole;

    fn net(n: u32, edges: &[(u32, u32, i64, i64)]) -> Network {
        let roles = vec![NodeRole::Client; n as usize];
        let chans = edges
            .iter()
            .map(|&(a, b, x, y)| (NodeId(a), NodeId(b), Amount::from_whole_tokens(x), Amount::from_whole_tokens(y)))
            .collect();
        Network::from_parts(roles, chans).unwrap()
    }

    fn ids(v: &[u32]) -> Path {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn line_has_a_single_path() {
        let g = net(3, &[(0, 2, 10, 10), (2, 1, 10, 10)]);
        for kind in [PathKind::Ksp, PathKind::Heuristic, PathKind::Edw, PathKind::Eds] {
            assert_eq!(compute_paths(&g, NodeId(0), NodeId(1), 5, kind).unwrap(), vec![ids(&[0, 2, 1])], "{kind}");
        }
    }

    #[test]
    fn diamond_widest_first() {
        // 0-1-3 narrow, 0-2-3 wide.
        let g = net(4, &[(0, 1, 3, 3), (1, 3, 3, 3), (0, 2, 9, 9), (2, 3, 7, 7)]);
        let p = compute_paths(&g, NodeId(0), NodeId(3), 5, PathKind::Edw).unwrap();
        assert_eq!(p, vec![ids(&[0, 2, 3]), ids(&[0, 1, 3])]);
        let p = compute_paths(&g, NodeId(0), NodeId(3), 5, PathKind::Eds).unwrap();
        assert_eq!(p, vec![ids(&[0, 1, 3]), ids(&[0, 2, 3])]);
    }

    #[test]
    fn no_path_between_components() {
        let g = net(4, &[(0, 1, 1, 1), (2, 3, 1, 1)]);
        assert_eq!(compute_paths(&g, NodeId(0), NodeId(3), 2, PathKind::Ksp), Err(RoutingError::NoPath(NodeId(0), NodeId(3))));
        assert_eq!(compute_paths(&g, NodeId(0), NodeId(3), 2, PathKind::Edw), Err(RoutingError::NoPath(NodeId(0), NodeId(3))));
    }
}
