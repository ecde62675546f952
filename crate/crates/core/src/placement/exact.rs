use crate::error::PlacementError;

use super::assign::{optimal_assignment, set_function_f};
use super::problem::{AssignmentPlan, PlacementPlan, PlacementProblem};

/// Largest candidate count `solve_exact` enumerates by default.
pub const EXACT_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementSolution {
    pub placement: PlacementPlan,
    pub assignment: AssignmentPlan,
    pub cost: f64,
}

/// Minimum balance cost over every nonempty hub set.
///
/// Optimal assignment is closed-form per placement, so enumerating `x` alone
/// is exhaustive. Among equal costs the lexicographically smallest `x`
/// (with `false < true`, candidate 0 first) wins.
pub fn solve_exact(problem: &PlacementProblem, limit: usize) -> Result<PlacementSolution, PlacementError> {
    let nc = problem.candidate_count();
    if nc > limit || nc >= usize::BITS as usize {
        return Err(PlacementError::TooLarge { candidates: nc, limit });
    }
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut set = vec![false; nc];
    for mask in 1u64..(1u64 << nc) {
        for (i, s) in set.iter_mut().enumerate() {
            *s = mask >> i & 1 == 1;
        }
        let cost = set_function_f(problem, &set)?;
        let better = match &best {
            None => true,
            Some((c, x)) => cost < *c || (cost == *c && set < *x),
        };
        if better {
            best = Some((cost, set.clone()));
        }
    }
    let (cost, x) = best.expect("at least one candidate");
    let placement = PlacementPlan::new(x)?;
    let assignment = optimal_assignment(problem, &placement)?;
    Ok(PlacementSolution { placement, assignment, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeId;

    #[test]
    fn too_large_is_reported() {
        let nc = 3;
        let p = PlacementProblem::new(
            vec![NodeId(0)],
            (1..=nc as u32).map(NodeId).collect(),
            vec![vec![1.0; nc]],
            vec![vec![0.0; nc]; nc],
            vec![vec![0.0; nc]; nc],
            0.0,
        )
        .unwrap();
        assert_eq!(solve_exact(&p, 2), Err(PlacementError::TooLarge { candidates: 3, limit: 2 }));
        // All sets of one hub tie; [false, false, true] is lexicographically smallest.
        let sol = solve_exact(&p, EXACT_LIMIT).unwrap();
        assert_eq!(sol.placement.x(), &[false, false, true]);
        assert_eq!(sol.cost, 1.0);
    }
}
