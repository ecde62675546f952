use pcnsim::placement::*;
use pcnsim::{NodeId, PlacementError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Costs are multiples of 1/64 and omega a multiple of 1/8, so every sum
// below is exact in f64 regardless of summation order.
fn dyadic<R: Rng>(rng: &mut R, max: u32) -> f64 {
    rng.random_range(0..=max) as f64 / 64.0
}

fn random_problem(seed: u64, nm: usize, nc: usize, uniform: bool) -> PlacementProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeta = (0..nm).map(|_| (0..nc).map(|_| dyadic(&mut rng, 256)).collect()).collect();
    let mut delta = vec![vec![0.0; nc]; nc];
    let mut eps = vec![vec![0.0; nc]; nc];
    let d_bar = dyadic(&mut rng, 64);
    for n in 0..nc {
        for l in n + 1..nc {
            let d = if uniform { d_bar } else { dyadic(&mut rng, 64) };
            delta[n][l] = d;
            delta[l][n] = d;
            let e = dyadic(&mut rng, 64);
            eps[n][l] = e;
            eps[l][n] = e;
        }
    }
    let omega = rng.random_range(0..=16) as f64 / 8.0;
    PlacementProblem::new(
        (0..nm as u32).map(NodeId).collect(),
        (0..nc as u32).map(|i| NodeId(1000 + i)).collect(),
        zeta,
        delta,
        eps,
        omega,
    )
    .unwrap()
}

fn subsets(nc: usize) -> impl Iterator<Item = Vec<bool>> {
    (1u32..(1 << nc)).map(move |mask| (0..nc).map(|i| mask >> i & 1 == 1).collect())
}

/// All assignments of `nm` clients to the placed hubs.
fn all_assignments(placed: &[usize], nm: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..nm {
        out = out.into_iter().flat_map(|prefix| placed.iter().map(move |&n| {
            let mut v = prefix.clone();
            v.push(n);
            v
        })).collect();
    }
    out
}

fn naive_management(p: &PlacementProblem, y: &[Vec<bool>]) -> f64 {
    let mut total = 0.0;
    for m in 0..p.client_count() {
        for n in 0..p.candidate_count() {
            if y[m][n] {
                total += p.zeta(m, n);
            }
        }
    }
    total
}

fn naive_sync(p: &PlacementProblem, x: &[bool], y: &[Vec<bool>]) -> f64 {
    let nc = p.candidate_count();
    let mut total = 0.0;
    for n in 0..nc {
        for l in 0..nc {
            if x[n] && x[l] {
                let mut load = 0.0;
                for row in y {
                    if row[n] {
                        load += 1.0;
                    }
                }
                total += p.delta(n, l) * load + p.epsilon(n, l);
            }
        }
    }
    total
}

fn brute_balance(p: &PlacementProblem, x: &[bool]) -> f64 {
    let placed: Vec<usize> = (0..x.len()).filter(|&n| x[n]).collect();
    all_assignments(&placed, p.client_count())
        .into_iter()
        .map(|hubs| {
            let y = AssignmentPlan::new(hubs).to_matrix(p.candidate_count());
            naive_management(p, &y) + p.omega() * naive_sync(p, x, &y)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn costs_match_naive_loops() {
    let p = random_problem(11, 10, 4, false);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let x: Vec<bool> = loop {
            let x: Vec<bool> = (0..4).map(|_| rng.random()).collect();
            if x.iter().any(|&b| b) {
                break x;
            }
        };
        let placed: Vec<usize> = (0..4).filter(|&n| x[n]).collect();
        let hubs: Vec<usize> = (0..10).map(|_| placed[rng.random_range(0..placed.len())]).collect();
        let y = AssignmentPlan::new(hubs);
        let ym = y.to_matrix(4);
        let plan = PlacementPlan::new(x.clone()).unwrap();
        assert_eq!(management_cost(&p, &y).unwrap(), naive_management(&p, &ym));
        assert_eq!(synchronization_cost(&p, &plan, &y).unwrap(), naive_sync(&p, &x, &ym));
        let zero = p.with_omega(0.0).unwrap();
        assert_eq!(balance_cost(&zero, &plan, &y).unwrap(), management_cost(&p, &y).unwrap());
    }
}

#[test]
fn single_hub_has_no_sync_cost() {
    let p = random_problem(3, 5, 3, false);
    let plan = PlacementPlan::from_indices(3, &[1]).unwrap();
    let y = optimal_assignment(&p, &plan).unwrap();
    assert!(y.hubs().iter().all(|&h| h == 1));
    assert_eq!(synchronization_cost(&p, &plan, &y).unwrap(), 0.0);
    let expected: f64 = (0..5).map(|m| p.zeta(m, 1)).sum();
    assert_eq!(set_function_f(&p, plan.x()).unwrap(), expected);
}

#[test]
fn closed_form_assignment_matches_exhaustive_three_by_six() {
    for seed in 0..20 {
        let p = random_problem(seed, 6, 3, false);
        let x = vec![true; 3];
        let plan = PlacementPlan::new(x.clone()).unwrap();
        let y = optimal_assignment(&p, &plan).unwrap();
        assert_eq!(balance_cost(&p, &plan, &y).unwrap(), brute_balance(&p, &x));
    }
}

#[test]
fn milp_exhaustive_two_by_two() {
    let p = random_problem(5, 2, 2, false);
    let model = MilpModel::build(&p);
    let nv = model.var_count();
    assert_eq!(nv, 2 + 4 + 4 + 8);
    let mut feasible = 0;
    for bits in 0u32..(1 << nv) {
        let v: Vec<bool> = (0..nv).map(|i| bits >> i & 1 == 1).collect();
        let x: Vec<bool> = (0..2).map(|n| v[model.x(n)]).collect();
        let rows: Vec<Vec<bool>> = (0..2).map(|m| (0..2).map(|n| v[model.y(m, n)]).collect()).collect();
        let valid_y = AssignmentPlan::from_matrix(&rows).ok().filter(|y| y.hubs().iter().all(|&h| x[h]));
        let expected = valid_y.as_ref().map(|y| model.complete(&x, y.hubs()));
        let is_completion = expected.as_deref() == Some(&v[..]);
        assert_eq!(model.is_feasible(&v), is_completion, "point {bits:#b}");
        if is_completion {
            feasible += 1;
            let plan = PlacementPlan::new(x).unwrap();
            let cb = balance_cost(&p, &plan, valid_y.as_ref().unwrap()).unwrap();
            assert!((model.evaluate(&v) - cb).abs() <= 1e-9);
        }
    }
    // {0}: 1 assignment, {1}: 1, {0,1}: 4.
    assert_eq!(feasible, 6);
}

#[test]
fn milp_theta_logic() {
    let p = random_problem(1, 1, 2, false);
    let model = MilpModel::build(&p);
    let v = model.complete(&[true, true], &[0]);
    assert!(model.is_feasible(&v));
    let mut off = v.clone();
    off[model.theta(0, 1)] = false;
    assert!(!model.is_feasible(&off));
    let v = model.complete(&[false, true], &[1]);
    let mut on = v.clone();
    on[model.theta(0, 1)] = true;
    assert!(!model.is_feasible(&on));
}

#[test]
fn milp_lp_export_is_stable() {
    let p = random_problem(8, 3, 3, false);
    assert_eq!(MilpModel::build(&p).to_lp(), MilpModel::build(&p).to_lp());
}

#[test]
fn exact_matches_brute_force_six_by_twelve() {
    for seed in 0..5 {
        let p = random_problem(100 + seed, 12, 6, false);
        let sol = solve_exact(&p, EXACT_LIMIT).unwrap();
        let mut best = f64::INFINITY;
        for x in subsets(6) {
            let plan = PlacementPlan::new(x).unwrap();
            let y = optimal_assignment(&p, &plan).unwrap();
            best = best.min(balance_cost(&p, &plan, &y).unwrap());
        }
        assert_eq!(sol.cost, best);
        assert_eq!(balance_cost(&p, &sol.placement, &sol.assignment).unwrap(), sol.cost);
    }
}

#[test]
fn dominant_candidate_wins_alone() {
    let nc = 4;
    let zeta = vec![vec![1.0, 1.0, 0.0, 1.0]; 5];
    let delta = vec![vec![0.0; nc]; nc];
    let eps: Vec<Vec<f64>> = (0..nc).map(|n| (0..nc).map(|l| if n == l { 0.0 } else { 0.5 }).collect()).collect();
    let p = PlacementProblem::new((0..5).map(NodeId).collect(), (5..9).map(NodeId).collect(), zeta, delta, eps, 1.0).unwrap();
    let sol = solve_exact(&p, EXACT_LIMIT).unwrap();
    assert_eq!(sol.placement.x(), &[false, false, true, false]);
    assert_eq!(sol.cost, 0.0);
}

#[test]
fn huge_omega_places_one_hub() {
    for seed in 0..10 {
        let mut p = random_problem(seed, 8, 5, false);
        p = p.with_omega(1e9).unwrap();
        let positive = (0..5).all(|n| (0..5).all(|l| n == l || p.epsilon(n, l) > 0.0));
        if positive {
            assert_eq!(solve_exact(&p, EXACT_LIMIT).unwrap().placement.hub_count(), 1);
        }
    }
}

#[test]
fn f_landscape_and_upper_bound_on_five_candidates() {
    for seed in 0..5 {
        let p = random_problem(200 + seed, 5, 5, false);
        let ub = f_upper_bound(&p);
        let mut min = f64::INFINITY;
        for x in subsets(5) {
            let f = set_function_f(&p, &x).unwrap();
            assert_eq!(f, brute_balance(&p, &x));
            assert!(f <= ub);
            min = min.min(f);
        }
        assert_eq!(solve_exact(&p, EXACT_LIMIT).unwrap().cost, min);
    }
}

#[test]
fn zero_costs_give_zero_bound() {
    let p = PlacementProblem::new(vec![NodeId(0)], vec![NodeId(1), NodeId(2)], vec![vec![0.0; 2]], vec![vec![0.0; 2]; 2], vec![vec![0.0; 2]; 2], 3.0).unwrap();
    assert_eq!(f_upper_bound(&p), 0.0);
    for x in subsets(2) {
        assert_eq!(set_function_f(&p, &x).unwrap(), 0.0);
    }
}

#[test]
fn too_many_candidates_for_exact() {
    let p = random_problem(0, 2, 21, false);
    assert_eq!(solve_exact(&p, EXACT_LIMIT), Err(PlacementError::TooLarge { candidates: 21, limit: 20 }));
}

#[test]
fn greedy_takes_every_strictly_useful_hub() {
    // Client u is served at zero cost only by hub u.
    let nc = 5;
    let zeta: Vec<Vec<f64>> = (0..nc).map(|m| (0..nc).map(|n| if m == n { 0.0 } else { 1.0 }).collect()).collect();
    let p = PlacementProblem::new((0..5).map(NodeId).collect(), (5..10).map(NodeId).collect(), zeta, vec![vec![0.0; nc]; nc], vec![vec![0.0; nc]; nc], 0.0).unwrap();
    for seed in 0..10 {
        let out = double_greedy(&p, &mut ChaCha8Rng::seed_from_u64(seed), VisitOrder::Ascending).unwrap();
        assert_eq!(out.placement.x(), &[true; 5]);
    }
}

#[test]
fn greedy_mean_reaches_half_of_optimum() {
    for inst in 0..5 {
        let p = random_problem(300 + inst, 10, 8, true);
        let ub = f_upper_bound(&p);
        let opt = ub - solve_exact(&p, EXACT_LIMIT).unwrap().cost;
        let runs = 40;
        let mut total = 0.0;
        for seed in 0..runs {
            let out = double_greedy(&p, &mut ChaCha8Rng::seed_from_u64(seed), VisitOrder::Ascending).unwrap();
            assert_eq!(out.lower, out.upper);
            assert!(out.gain >= 0.0);
            total += out.gain;
        }
        assert!(total / runs as f64 >= 0.5 * opt, "instance {inst}");
    }
}

#[test]
fn from_network_uses_hop_costs() {
    let spec = pcnsim::NetworkSpec { nodes: 30, clients: 24, candidates: 6, seed: 4, ..Default::default() };
    let net = pcnsim::build_network(&spec).unwrap();
    let model = CostModel::default();
    let p = PlacementProblem::from_network(&net, &model, 0.5).unwrap();
    let m = p.clients()[0];
    let n = p.candidates()[0];
    let hops = net.hop_distance(m, n).unwrap() as f64;
    assert!((p.zeta(0, 0) - 0.02 * hops).abs() < 1e-12);
    assert!(!p.has_uniform_delta() || p.candidate_count() < 3);
    let u = PlacementProblem::from_network(&net, &CostModel { uniform_delta: true, ..model }, 0.5).unwrap();
    assert!(u.has_uniform_delta());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_assignment_is_optimal(seed in 0u64..1_000_000, nm in 1usize..=6, nc in 1usize..=4, mask in 1u32..16) {
        let p = random_problem(seed, nm, nc, false);
        let mask = mask & ((1 << nc) - 1);
        prop_assume!(mask != 0);
        let x: Vec<bool> = (0..nc).map(|i| mask >> i & 1 == 1).collect();
        let plan = PlacementPlan::new(x.clone()).unwrap();
        let y = optimal_assignment(&p, &plan).unwrap();
        prop_assert_eq!(balance_cost(&p, &plan, &y).unwrap(), brute_balance(&p, &x));
    }

    #[test]
    fn supermodular_under_uniform_delta(seed in 0u64..1_000_000, nm in 1usize..=8, nc in 2usize..=7, a in 0u32..128, b in 0u32..128, i in 0usize..7) {
        let p = random_problem(seed, nm, nc, true);
        let full = (1u32 << nc) - 1;
        let i = i % nc;
        let bmask = (a | b) & full & !(1 << i);
        let amask = a & bmask;
        let ub = f_upper_bound(&p);
        let f = |mask: u32| {
            let set: Vec<bool> = (0..nc).map(|k| mask >> k & 1 == 1).collect();
            set_function_f_total(&p, &set, ub).unwrap()
        };
        let gain_a = f(amask | 1 << i) - f(amask);
        let gain_b = f(bmask | 1 << i) - f(bmask);
        prop_assert!(gain_a <= gain_b, "A={amask:#b} B={bmask:#b} i={i}: {gain_a} > {gain_b}");
    }

    #[test]
    fn exact_is_relabeling_invariant(seed in 0u64..1_000_000, shift in 1u32..50) {
        let p = random_problem(seed, 5, 4, false);
        let sol = solve_exact(&p, EXACT_LIMIT).unwrap();
        // Reverse the id order: candidate k gets the id that sorts last.
        let ids: Vec<NodeId> = (0..4u32).map(|k| NodeId(5000 + shift - k)).collect();
        let zeta = (0..5).map(|m| (0..4).map(|n| p.zeta(m, n)).collect()).collect();
        let delta = (0..4).map(|n| (0..4).map(|l| p.delta(n, l)).collect()).collect();
        let eps = (0..4).map(|n| (0..4).map(|l| p.epsilon(n, l)).collect()).collect();
        let q = PlacementProblem::new(p.clients().to_vec(), ids.clone(), zeta, delta, eps, p.omega()).unwrap();
        let relabeled = solve_exact(&q, EXACT_LIMIT).unwrap();
        prop_assert_eq!(relabeled.cost, sol.cost);
        // Without ties the chosen hub set maps across the relabeling.
        let optimal_sets = subsets(4).filter(|x| set_function_f(&p, x).unwrap() == sol.cost).count();
        if optimal_sets == 1 {
            let hubs_p: Vec<NodeId> = sol.placement.placed().map(|k| ids[k]).collect();
            let mut hubs_q: Vec<NodeId> = relabeled.placement.placed().map(|k| q.candidates()[k]).collect();
            hubs_q.sort();
            let mut hubs_p = hubs_p;
            hubs_p.sort();
            prop_assert_eq!(hubs_p, hubs_q);
        }
    }

    #[test]
    fn greedy_is_deterministic_and_coincides(seed in 0u64..1_000_000, rseed in 0u64..1000) {
        let p = random_problem(seed, 6, 6, false);
        let a = double_greedy(&p, &mut ChaCha8Rng::seed_from_u64(rseed), VisitOrder::Ascending).unwrap();
        let b = double_greedy(&p, &mut ChaCha8Rng::seed_from_u64(rseed), VisitOrder::Ascending).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.lower, &a.upper);
        prop_assert!(a.gain >= 0.0);
    }
}
