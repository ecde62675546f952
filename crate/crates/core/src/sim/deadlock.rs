use std::collections::BTreeMap;

use crate::amount::Amount;
use crate::network::{ChannelId, Direction, Network, NodeId};
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Need {
    /// Smallest amount some pending payment wants to push this way.
    amount: Amount,
    last_seen: SimTime,
}

/// Outgoing channel directions that pending payments are waiting on, per node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Needs {
    by_node: BTreeMap<NodeId, BTreeMap<(ChannelId, Direction), Need>>,
}

impl Needs {
    pub fn new() -> Self {
        Needs::default()
    }

    /// Records that `node` wants to push `amount` through `(ch, dir)`.
    pub fn note(&mut self, node: NodeId, ch: ChannelId, dir: Direction, amount: Amount, now: SimTime) {
        let slot = self.by_node.entry(node).or_default();
        slot.entry((ch, dir))
            .and_modify(|n| {
                if n.last_seen == now {
                    n.amount = n.amount.min(amount);
                } else {
                    n.amount = amount;
                }
                n.last_seen = now;
            })
            .or_insert(Need { amount, last_seen: now });
    }

    /// Forgets needs not refreshed within `ttl`.
    pub fn expire(&mut self, now: SimTime, ttl: SimTime) {
        for slot in self.by_node.values_mut() {
            slot.retain(|_, n| now.saturating_sub(n.last_seen) <= ttl);
        }
        self.by_node.retain(|_, s| !s.is_empty());
    }

    pub fn is_empty(&self) -> bool {
        self.by_node.is_empty()
    }
}

/// Nodes that have pending needs and cannot serve any of them: every needed
/// outgoing direction holds less than the smallest amount waiting on it.
pub fn detect_deadlock(net: &Network, needs: &Needs) -> Vec<NodeId> {
    needs
        .by_node
        .iter()
        .filter(|(_, slot)| {
            !slot.is_empty() && slot.iter().all(|(&(ch, dir), n)| net.channel(ch).funds(dir) < n.amount)
        })
        .map(|(&node, _)| node)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeRole;

    fn tok(x: i64) -> Amount {
        Amount::from_whole_tokens(x)
    }

    #[test]
    fn balanced_idle_network_has_none() {
        let net = Network::from_parts(vec![NodeRole::Client; 2], vec![(NodeId(0), NodeId(1), tok(10), tok(10))]).unwrap();
        assert!(detect_deadlock(&net, &Needs::new()).is_empty());
        let mut needs = Needs::new();
        needs.note(NodeId(0), ChannelId(0), Direction::AtoB, tok(1), SimTime(0));
        assert!(detect_deadlock(&net, &needs).is_empty());
    }

    #[test]
    fn one_servable_direction_clears_the_node() {
        let net = Network::from_parts(
            vec![NodeRole::Client; 3],
            vec![(NodeId(0), NodeId(1), tok(0), tok(10)), (NodeId(0), NodeId(2), tok(5), tok(5))],
        )
        .unwrap();
        let mut needs = Needs::new();
        needs.note(NodeId(0), ChannelId(0), Direction::AtoB, tok(1), SimTime(0));
        assert_eq!(detect_deadlock(&net, &needs), vec![NodeId(0)]);
        needs.note(NodeId(0), ChannelId(1), Direction::AtoB, tok(2), SimTime(0));
        assert!(detect_deadlock(&net, &needs).is_empty());
        needs.note(NodeId(0), ChannelId(1), Direction::AtoB, tok(6), SimTime(5));
        assert_eq!(detect_deadlock(&net, &needs), vec![NodeId(0)]);
        needs.expire(SimTime(5000), SimTime(3000));
        assert!(needs.is_empty());
    }
}
