use pcnsim::network::{Direction, NodeRole};
use pcnsim::placement::{AssignmentPlan, CostModel, PlacementPlan, PlacementProblem};
use pcnsim::sim::{
    communication_costs, generate_workload, run, run_scenario, summary_text, write_records, write_traces, Flow,
    Outcome, PoissonWorkload, RoutingScheme, Scenario, SimConfig, SimReport, SymmetricWorkload, Workload,
    WorkloadConfig,
};
use pcnsim::{Amount, Network, NodeId, SimTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tok(x: i64) -> Amount {
    Amount::from_whole_tokens(x)
}

fn secs(s: u64) -> SimTime {
    SimTime::from_millis(s * 1000)
}

fn small_cfg(seed: u64) -> SimConfig {
    let mut cfg = SimConfig { seed, duration_s: 30.0, steady_from_s: 10.0, ..SimConfig::default() };
    cfg.network.nodes = 30;
    cfg.network.clients = 26;
    cfg.network.candidates = 4;
    cfg.network.seed = seed;
    cfg.workload = WorkloadConfig::Poisson(PoissonWorkload { pairs: 40, rate: 0.2, ..PoissonWorkload::default() });
    cfg
}

fn check_conservation(r: &SimReport) {
    let total = r.initial.total_funds();
    assert_eq!(r.funds_range, (total, total));
    assert_eq!(r.final_net.total_funds(), total);
    let initial = &r.initial;
    for rec in &r.records {
        match rec.outcome {
            Outcome::Completed { .. } => assert!(!rec.settled.is_empty()),
            Outcome::Failed { .. } => assert!(rec.settled.is_empty(), "failed demand {:?} moved funds", rec.id),
        }
        let mut net_out = Amount::ZERO;
        for &(ch, dir, a) in &rec.settled {
            let (x, y) = initial.channel(ch).oriented(dir);
            if x == rec.source {
                net_out += a;
            }
            if y == rec.source {
                net_out -= a;
            }
        }
        if rec.completed_at().is_some() {
            assert_eq!(net_out, rec.value, "source of {:?} paid a different amount", rec.id);
        }
    }
    let mut delta = vec![[Amount::ZERO; 2]; initial.channels().len()];
    for rec in &r.records {
        for &(ch, dir, a) in &rec.settled {
            delta[ch.0][dir.index()] -= a;
            delta[ch.0][dir.reverse().index()] += a;
        }
    }
    for (i, ch) in r.final_net.channels().iter().enumerate() {
        let init = initial.channel(pcnsim::network::ChannelId(i));
        assert_eq!(ch.locked(Direction::AtoB), Amount::ZERO);
        assert_eq!(ch.locked(Direction::BtoA), Amount::ZERO);
        assert_eq!(ch.funds_ab(), init.funds_ab() + delta[i][0]);
        assert_eq!(ch.funds_ba(), init.funds_ba() + delta[i][1]);
    }
}

#[test]
fn deadlock_preset_separates_schemes() {
    let instant = run(&SimConfig::deadlock_preset(RoutingScheme::Instant)).unwrap();
    assert_eq!(instant.throughput_between(NodeId(0), NodeId(1), secs(15), secs(60)), 0.0);
    assert!(instant.deadlocks.iter().any(|e| e.node == NodeId(2) && e.at <= secs(15)));

    let price = run(&SimConfig::deadlock_preset(RoutingScheme::Price)).unwrap();
    let tp = price.throughput_between(NodeId(0), NodeId(1), secs(30), secs(60));
    assert!((tp - 2.0).abs() <= 0.2, "throughput {tp}");
    assert!(price.deadlocks.is_empty());
    check_conservation(&instant);
    check_conservation(&price);
}

#[test]
fn one_way_flow_drains_at_most_the_sender_side() {
    let net = Network::from_parts(vec![NodeRole::Client; 2], vec![(NodeId(0), NodeId(1), tok(5), tok(5))]).unwrap();
    for scheme in [RoutingScheme::Price, RoutingScheme::Waterfilling, RoutingScheme::Instant] {
        let mut cfg = SimConfig { duration_s: 20.0, steady_from_s: 0.0, ..SimConfig::default() };
        cfg.routing.scheme = scheme;
        cfg.placement.mode = pcnsim::sim::PlacementMode::None;
        let flow = Flow { source: 0, dest: 1, interval_s: 1.0, value: 1.0, offset_s: 0.0 };
        let wl = WorkloadConfig::Periodic { flows: vec![flow] };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let workload = generate_workload(&wl, &net, 20.0, SimTime::from_millis(3000), &mut rng).unwrap();
        let scenario = Scenario { network: net.clone(), workload, hubs: vec![], placement: None };
        let r = run_scenario(&cfg, scenario).unwrap();
        assert_eq!(r.metrics.demands, 20);
        assert_eq!(r.metrics.completed, 5, "{scheme:?}");
        assert_eq!(r.final_net.channel(pcnsim::network::ChannelId(0)).funds_ab(), Amount::ZERO);
        check_conservation(&r);
    }
}

#[test]
fn empty_workload_leaves_network_untouched() {
    let mut cfg = small_cfg(3);
    cfg.workload = WorkloadConfig::Empty;
    let r = run(&cfg).unwrap();
    assert_eq!(r.metrics.demands, 0);
    assert_eq!(r.metrics.tsr, 1.0);
    assert!(r.records.is_empty());
    assert_eq!(r.initial, r.final_net);
    assert_eq!(r.balanced_fraction(0.1), 1.0);
}

#[test]
fn funds_are_conserved_and_aborts_net_zero() {
    for seed in 1..=20 {
        let mut cfg = small_cfg(seed);
        cfg.duration_s = 60.0;
        cfg.routing.scheme = [RoutingScheme::Price, RoutingScheme::Waterfilling, RoutingScheme::Instant][seed as usize % 3];
        let r = run(&cfg).unwrap();
        assert!(r.metrics.demands > 0);
        check_conservation(&r);
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let bytes = |r: &SimReport| {
        let mut a = Vec::new();
        write_records(r, &mut a).unwrap();
        write_traces(&r.traces, &mut a).unwrap();
        a.extend(summary_text(r).into_bytes());
        a
    };
    let cfg = small_cfg(7);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    let c = run(&small_cfg(8)).unwrap();
    assert_ne!(bytes(&a), bytes(&c));
}

#[test]
fn more_capacity_does_not_lower_success() {
    let mean = |scale: i64| {
        (1..=5)
            .map(|seed| {
                let mut cfg = SimConfig { seed, duration_s: 30.0, steady_from_s: 10.0, ..SimConfig::default() };
                cfg.network.seed = seed;
                cfg.capacity_scale = scale;
                run(&cfg).unwrap().metrics.tsr
            })
            .sum::<f64>()
            / 5.0
    };
    let (base, rich) = (mean(1), mean(10));
    assert!(rich >= base, "x1 {base} vs x10 {rich}");
}

#[test]
fn symmetric_demand_balances_channels() {
    let mut cfg = SimConfig { seed: 2, duration_s: 250.0, steady_from_s: 100.0, ..SimConfig::default() };
    cfg.network.nodes = 20;
    cfg.network.clients = 16;
    cfg.network.candidates = 4;
    cfg.network.seed = 2;
    cfg.workload = WorkloadConfig::Symmetric(SymmetricWorkload::default());
    cfg.trace.enabled = false;
    let r = run(&cfg).unwrap();
    assert!(r.flows.iter().any(|f| f.is_active()));
    assert!(r.balanced_fraction(0.1) >= 0.95, "{}", r.balanced_fraction(0.1));
}

#[test]
fn poisson_arrivals_match_their_rates() {
    let cfg = SimConfig::default();
    let net = pcnsim::build_network(&cfg.network).unwrap();
    let wl = WorkloadConfig::Poisson(PoissonWorkload { pairs: 50, rate: 0.5, ..PoissonWorkload::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let duration = 400.0;
    let w: Workload = generate_workload(&wl, &net, duration, SimTime::from_millis(3000), &mut rng).unwrap();
    let expected: f64 = w.profile.iter().map(|p| p.rate * duration).sum();
    let got = w.demands.len() as f64;
    assert!((got - expected).abs() / expected < 0.05, "{got} vs {expected}");
    assert!(w.demands.windows(2).all(|d| d[0].created_at <= d[1].created_at));
    assert!(w.demands.iter().all(|d| d.source != d.dest));
}

#[test]
fn communication_costs_on_a_line() {
    let roles = vec![NodeRole::Client, NodeRole::CandidateSmoothNode, NodeRole::CandidateSmoothNode, NodeRole::Client];
    let chans = (0..3).map(|i| (NodeId(i), NodeId(i + 1), tok(5), tok(5))).collect();
    let net = Network::from_parts(roles, chans).unwrap();
    let problem = PlacementProblem::from_network(&net, &CostModel::default(), 1.0).unwrap();
    let both = PlacementPlan::new(vec![true, true]).unwrap();
    let split = AssignmentPlan::new(vec![0, 1]);
    let c = communication_costs(&net, &problem, &both, &split, SimTime::from_millis(10)).unwrap();
    assert_eq!(c.management_overhead, 2);
    assert_eq!(c.sync_messages, 2);
    assert_eq!(c.sync_overhead, 2);
    assert!((c.avg_delay_s - 0.03).abs() < 1e-12);

    let one = PlacementPlan::new(vec![true, false]).unwrap();
    let shared = AssignmentPlan::new(vec![0, 0]);
    let c1 = communication_costs(&net, &problem, &one, &shared, SimTime::from_millis(10)).unwrap();
    assert_eq!(c1.sync_messages, 0);
    assert_eq!(c1.sync_overhead, 0);
    assert_eq!(c1.management_overhead, 1 + 2);
    assert!((c1.avg_delay_s - 0.03).abs() < 1e-12);
    assert!(communication_costs(&net, &problem, &one, &AssignmentPlan::new(vec![0]), SimTime::from_millis(10)).is_err());
}
