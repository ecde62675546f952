use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlacementError;

use super::assign::{f_upper_bound, optimal_assignment, set_function_f, set_function_f_total};
use super::problem::{PlacementPlan, PlacementProblem};

/// Order in which the double greedy visits candidates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitOrder {
    /// Ascending NodeId.
    #[default]
    Ascending,
    /// A permutation drawn from the same RNG.
    Shuffled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub placement: PlacementPlan,
    /// Balance cost of `placement` under its optimal assignment.
    pub cost: f64,
    /// `f_upper_bound - cost`.
    pub gain: f64,
    /// The loop ended on the empty set and the best single hub was used.
    pub repaired: bool,
    /// Final growing set before any repair.
    pub lower: Vec<bool>,
    /// Final shrinking set. Always equal to `lower`.
    pub upper: Vec<bool>,
}

/// Randomised double greedy maximising `f_hat = f_ub - f`.
///
/// Starts from `X = {}` and `Y = all`, then for each candidate `u` compares
/// the gain of adding `u` to `X` against the gain of dropping it from `Y`,
/// adding with probability `a' / (a' + b')` (1 if both are zero).
pub fn double_greedy<R: Rng + ?Sized>(problem: &PlacementProblem, rng: &mut R, order: VisitOrder) -> Result<GreedyOutcome, PlacementError> {
    let nc = problem.candidate_count();
    let f_ub = f_upper_bound(problem);
    let f_hat = |set: &[bool]| -> Result<f64, PlacementError> { Ok(f_ub - set_function_f_total(problem, set, f_ub)?) };

    let mut visit: Vec<usize> = (0..nc).collect();
    if order == VisitOrder::Shuffled {
        visit.shuffle(rng);
    }
    let mut x = vec![false; nc];
    let mut y = vec![true; nc];
    let mut fx = f_hat(&x)?;
    let mut fy = f_hat(&y)?;
    for u in visit {
        x[u] = true;
        let fx_add = f_hat(&x)?;
        x[u] = false;
        y[u] = false;
        let fy_drop = f_hat(&y)?;
        y[u] = true;

        let a = (fx_add - fx).max(0.0);
        let b = (fy_drop - fy).max(0.0);
        let p = if a + b == 0.0 { 1.0 } else { a / (a + b) };
        let r: f64 = rng.random();
        if r < p {
            x[u] = true;
            fx = fx_add;
        } else {
            y[u] = false;
            fy = fy_drop;
        }
    }
    let lower = x.clone();
    let upper = y;
    let repaired = !x.iter().any(|&b| b);
    if repaired {
        let mut best = (f64::INFINITY, 0);
        for n in 0..nc {
            let mut single = vec![false; nc];
            single[n] = true;
            let c = set_function_f(problem, &single)?;
            if c < best.0 {
                best = (c, n);
            }
        }
        x[best.1] = true;
    }
    let placement = PlacementPlan::new(x)?;
    let cost = set_function_f(problem, placement.x())?;
    Ok(GreedyOutcome { placement, cost, gain: f_ub - cost, repaired, lower, upper })
}

/// Convenience: greedy placement plus its optimal assignment.
pub fn greedy_solution<R: Rng + ?Sized>(problem: &PlacementProblem, rng: &mut R, order: VisitOrder) -> Result<super::exact::PlacementSolution, PlacementError> {
    let out = double_greedy(problem, rng, order)?;
    let assignment = optimal_assignment(problem, &out.placement)?;
    Ok(super::exact::PlacementSolution { placement: out.placement, assignment, cost: out.cost })
}
