//! Hub placement.

mod assign;
mod exact;
mod greedy;
pub mod milp;
mod problem;

pub use assign::{f_upper_bound, optimal_assignment, set_function_f, set_function_f_total};
pub use exact::{solve_exact, PlacementSolution, EXACT_LIMIT};
pub use greedy::{double_greedy, greedy_solution, GreedyOutcome, VisitOrder};
pub use milp::MilpModel;
pub use problem::{
    balance_cost, management_cost, synchronization_cost, uniformize, AssignmentPlan, CostModel, PlacementPlan,
    PlacementProblem,
};
