use crate::error::PlacementError;

use super::problem::{balance_cost, AssignmentPlan, PlacementPlan, PlacementProblem};

/// Cheapest assignment for a fixed placement.
///
/// The balance cost separates per client once `x` is fixed, so each client
/// independently picks the placed hub minimising
/// `omega * sum_{l placed} delta[n][l] + zeta[m][n]`. Ties go to the lowest
/// candidate index.
pub fn optimal_assignment(problem: &PlacementProblem, x: &PlacementPlan) -> Result<AssignmentPlan, PlacementError> {
    if x.len() != problem.candidate_count() {
        return Err(PlacementError::DimensionMismatch(format!(
            "placement has {} entries, problem has {} candidates",
            x.len(),
            problem.candidate_count()
        )));
    }
    let placed: Vec<usize> = x.placed().collect();
    let sync: Vec<f64> = placed
        .iter()
        .map(|&n| problem.omega() * placed.iter().map(|&l| problem.delta(n, l)).sum::<f64>())
        .collect();
    let hub_of = (0..problem.client_count())
        .map(|m| {
            let mut best = placed[0];
            let mut best_cost = sync[0] + problem.zeta(m, placed[0]);
            for (i, &n) in placed.iter().enumerate().skip(1) {
                let c = sync[i] + problem.zeta(m, n);
                if c < best_cost {
                    best = n;
                    best_cost = c;
                }
            }
            best
        })
        .collect();
    Ok(AssignmentPlan::new(hub_of))
}

/// Balance cost of a hub set under its optimal assignment.
pub fn set_function_f(problem: &PlacementProblem, set: &[bool]) -> Result<f64, PlacementError> {
    if set.len() != problem.candidate_count() {
        return Err(PlacementError::DimensionMismatch(format!(
            "set has {} entries, problem has {} candidates",
            set.len(),
            problem.candidate_count()
        )));
    }
    let x = PlacementPlan::new(set.to_vec()).map_err(|_| PlacementError::EmptySet)?;
    let y = optimal_assignment(problem, &x)?;
    balance_cost(problem, &x, &y)
}

/// Upper bound on the balance cost of any placement: every client at its
/// worst candidate plus synchronisation as if all candidates were placed and
/// each carried every client.
pub fn f_upper_bound(problem: &PlacementProblem) -> f64 {
    let nc = problem.candidate_count();
    let worst_mgmt: f64 = (0..problem.client_count())
        .map(|m| (0..nc).map(|n| problem.zeta(m, n)).fold(0.0, f64::max))
        .sum();
    let clients = problem.client_count() as f64;
    let mut sync = 0.0;
    for n in 0..nc {
        for l in 0..nc {
            sync += problem.delta(n, l) * clients + problem.epsilon(n, l);
        }
    }
    worst_mgmt + problem.omega() * sync
}

/// Set function extended to the empty set with `f(empty) = f_upper_bound`.
pub fn set_function_f_total(problem: &PlacementProblem, set: &[bool], f_ub: f64) -> Result<f64, PlacementError> {
    if set.iter().any(|&b| b) {
        set_function_f(problem, set)
    } else if set.len() == problem.candidate_count() {
        Ok(f_ub)
    } else {
        Err(PlacementError::DimensionMismatch(format!("set has {} entries", set.len())))
    }
}
