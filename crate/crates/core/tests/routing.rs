use std::collections::HashSet;

use pcnsim::network::DemandId;
use pcnsim::routing::*;
use pcnsim::{Amount, Network, NodeId, NodeRole, PaymentDemand, RoutingError, SimTime};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(n: u32, edges: &[(u32, u32, i64, i64)]) -> Network {
    let chans = edges
        .iter()
        .map(|&(a, b, x, y)| (NodeId(a), NodeId(b), Amount::from_whole_tokens(x), Amount::from_whole_tokens(y)))
        .collect();
    Network::from_parts(vec![NodeRole::Client; n as usize], chans).unwrap()
}

fn random_graph(seed: u64, n: u32, p: f64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b, rng.random_range(0..20), rng.random_range(1..20)));
            }
        }
    }
    graph(n, &edges)
}

/// Every simple path by DFS.
fn all_simple_paths(net: &Network, s: NodeId, e: NodeId) -> Vec<Path> {
    fn go(net: &Network, cur: NodeId, e: NodeId, stack: &mut Path, out: &mut Vec<Path>) {
        if cur == e {
            out.push(stack.clone());
            return;
        }
        for &(nb, _) in net.neighbors(cur) {
            if !stack.contains(&nb) {
                stack.push(nb);
                go(net, nb, e, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, s, e, &mut vec![s], &mut out);
    out
}

fn is_valid_path(net: &Network, p: &[NodeId], s: NodeId, e: NodeId) -> bool {
    let distinct: HashSet<_> = p.iter().collect();
    p.first() == Some(&s) && p.last() == Some(&e) && distinct.len() == p.len() && p.windows(2).all(|h| net.channel_between(h[0], h[1]).is_some())
}

fn channels_of(net: &Network, p: &[NodeId]) -> Vec<usize> {
    p.windows(2).map(|h| net.channel_between(h[0], h[1]).unwrap().0 .0).collect()
}

#[test]
fn ksp_finds_three_parallel_routes() {
    let g = graph(5, &[(0, 1, 5, 5), (1, 4, 5, 5), (0, 2, 5, 5), (2, 4, 5, 5), (0, 3, 5, 5), (3, 4, 5, 5)]);
    let p = compute_paths(&g, NodeId(0), NodeId(4), 3, PathKind::Ksp).unwrap();
    let want: Vec<Path> = [[0, 1, 4], [0, 2, 4], [0, 3, 4]].iter().map(|v| v.iter().map(|&i| NodeId(i)).collect()).collect();
    assert_eq!(p, want);
}

#[test]
fn unknown_node_is_an_error() {
    let g = graph(2, &[(0, 1, 1, 1)]);
    assert!(matches!(compute_paths(&g, NodeId(0), NodeId(7), 1, PathKind::Ksp), Err(RoutingError::Network(_))));
    assert!(matches!(compute_paths(&g, NodeId(0), NodeId(1), 0, PathKind::Ksp), Err(RoutingError::InvalidBounds(_))));
}

#[test]
fn split_examples_and_demand() {
    let t = Amount::from_tokens;
    let d = PaymentDemand::new(DemandId(1), NodeId(0), NodeId(1), t(10.0), SimTime(0), SimTime(3000)).unwrap();
    let tus = split_demand(&d, t(1.0), t(4.0), 5).unwrap();
    assert_eq!(tus.iter().map(|u| u.amount).collect::<Vec<_>>(), vec![t(4.0), t(4.0), t(2.0)]);
    let small = PaymentDemand::new(DemandId(2), NodeId(0), NodeId(1), t(0.5), SimTime(0), SimTime(3000)).unwrap();
    assert!(matches!(split_demand(&small, t(1.0), t(4.0), 5), Err(RoutingError::ValueTooSmall { .. })));
}

#[test]
fn two_node_prices_settle_with_rates_at_demand() {
    // Symmetric pair a<->b, each direction offering 1 token/sec on a 20-token channel.
    let (kappa, eta, alpha, t_fee, tau) = (0.01, 0.5, 0.2, 0.1, 0.2);
    let delta = 0.04;
    let demand = 1.0;
    let mut st = ChannelPriceState::default();
    let mut r = [0.2, 0.2];
    for _ in 0..500 {
        for d in 0..2 {
            let xi = if d == 0 { st.routing_price(pcnsim::network::Direction::AtoB) } else { st.routing_price(pcnsim::network::Direction::BtoA) };
            r[d] = rate_step(r[d], alpha, r[d], path_price(&[xi], t_fee), RATE_FLOOR, 20.0 / delta);
            let mut one = [r[d]];
            apply_demand_cap(&mut one, demand);
            r[d] = one[0];
        }
        st.n_required = [r[0] * delta, r[1] * delta];
        st.m_arrived = [r[0] * tau, r[1] * tau];
        st.step(20.0, kappa, eta, tau);
    }
    assert_eq!(st.lambda, 0.0);
    assert!((r[0] - demand).abs() < 1e-3 && (r[1] - demand).abs() < 1e-3, "{r:?}");
}

#[test]
fn overloaded_channel_raises_capacity_price() {
    let mut st = ChannelPriceState::default();
    st.n_required = [15.0, 15.0];
    st.update_capacity_price(20.0, 0.1);
    assert!((st.lambda - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn split_conserves_value_within_bounds(milli in 1_000i64..200_000, lo in 1i64..=4, span in 0i64..=4) {
        let min = Amount::from_whole_tokens(lo);
        let max = Amount::from_whole_tokens(lo + span);
        let value = Amount::from_milli(milli.max(min.milli()));
        match split_amounts(value, min, max) {
            Ok(parts) => {
                prop_assert_eq!(parts.iter().copied().sum::<Amount>(), value);
                prop_assert!(parts.iter().all(|&p| p >= min && p <= max));
            }
            Err(RoutingError::Unsplittable { .. }) => {
                // Oracle: no count c with c*min <= v <= c*max.
                let v = value.milli();
                let feasible = (1..=v / min.milli()).any(|c| c * min.milli() <= v && v <= c * max.milli());
                prop_assert!(!feasible);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn ksp_lengths_match_enumeration(seed in 0u64..10_000, k in 1usize..6) {
        let g = random_graph(seed, 7, 0.45);
        let (s, e) = (NodeId(0), NodeId(6));
        let mut all = all_simple_paths(&g, s, e);
        match compute_paths(&g, s, e, k, PathKind::Ksp) {
            Err(RoutingError::NoPath(..)) => prop_assert!(all.is_empty()),
            Err(other) => prop_assert!(false, "unexpected {other}"),
            Ok(found) => {
                all.sort_by_key(|p| p.len());
                let want: Vec<usize> = all.iter().take(k).map(|p| p.len()).collect();
                let got: Vec<usize> = found.iter().map(|p| p.len()).collect();
                prop_assert_eq!(got, want);
                let distinct: HashSet<_> = found.iter().collect();
                prop_assert_eq!(distinct.len(), found.len());
                for p in &found {
                    prop_assert!(is_valid_path(&g, p, s, e));
                }
            }
        }
    }

    #[test]
    fn edw_first_path_is_widest_and_paths_disjoint(seed in 0u64..10_000, k in 1usize..5) {
        let g = random_graph(seed, 7, 0.45);
        let (s, e) = (NodeId(0), NodeId(6));
        let all = all_simple_paths(&g, s, e);
        prop_assume!(!all.is_empty());
        let widest = all.iter().map(|p| bottleneck(&g, p).unwrap()).max().unwrap();
        let found = compute_paths(&g, s, e, k, PathKind::Edw).unwrap();
        prop_assert_eq!(bottleneck(&g, &found[0]).unwrap(), widest);
        let mut used = HashSet::new();
        for p in &found {
            prop_assert!(is_valid_path(&g, p, s, e));
            for c in channels_of(&g, p) {
                prop_assert!(used.insert(c), "channel reused");
            }
        }
        let eds = compute_paths(&g, s, e, k, PathKind::Eds).unwrap();
        let shortest = all.iter().map(|p| p.len()).min().unwrap();
        prop_assert_eq!(eds[0].len(), shortest);
    }

    #[test]
    fn heuristic_ranks_by_bottleneck(seed in 0u64..10_000) {
        let g = random_graph(seed, 7, 0.5);
        let (s, e) = (NodeId(0), NodeId(6));
        if let Ok(found) = compute_paths(&g, s, e, 5, PathKind::Heuristic) {
            let widths: Vec<Amount> = found.iter().map(|p| bottleneck(&g, p).unwrap()).collect();
            prop_assert!(widths.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn imbalance_update_is_antisymmetric(mu_ab in 0.0f64..10.0, mu_ba in 0.0f64..10.0, m_a in 0.0f64..50.0, m_b in 0.0f64..50.0, eta in 0.0f64..1.0) {
        let (ab, ba) = imbalance_price_step(mu_ab, mu_ba, m_a, m_b, eta);
        prop_assert!(ab >= 0.0 && ba >= 0.0);
        let d = eta * (m_a - m_b);
        if mu_ab + d >= 0.0 && mu_ba - d >= 0.0 {
            prop_assert!(((ab - mu_ab) + (ba - mu_ba)).abs() < 1e-9);
        }
    }

    #[test]
    fn prices_and_rates_stay_in_range(lambda in 0.0f64..5.0, n in 0.0f64..100.0, c in 1.0f64..100.0, kappa in 0.0f64..1.0, r in RATE_FLOOR..10.0, rho in -100.0f64..100.0) {
        prop_assert!(capacity_price_step(lambda, n, n, c, kappa) >= 0.0);
        let next = rate_step(r, 0.1, r, rho, RATE_FLOOR, 10.0);
        prop_assert!((RATE_FLOOR..=10.0).contains(&next));
    }
}
