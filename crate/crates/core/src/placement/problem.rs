use serde::{Deserialize, Serialize};

use crate::error::{NetworkError, PlacementError};
use crate::network::{Network, NodeId, UNREACHABLE};

/// How cost matrices are derived from hop distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// Management cost per client-to-hub hop.
    pub zeta_per_hop: f64,
    /// Synchronisation cost per hub-to-hub hop, scaled by the hub's client count.
    pub delta_per_hop: f64,
    /// Constant synchronisation cost per hub-to-hub hop.
    pub epsilon_per_hop: f64,
    /// Replace every off-diagonal delta by their mean. Supermodularity of the
    /// set objective is only guaranteed in this mode.
    pub uniform_delta: bool,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { zeta_per_hop: 0.02, delta_per_hop: 0.01, epsilon_per_hop: 0.05, uniform_delta: false }
    }
}

/// A hub placement instance: clients, candidate hubs and the cost matrices.
///
/// Candidates are kept sorted by `NodeId`, so candidate index order is also
/// NodeId order and "lowest index" tie-breaks mean "lowest NodeId".
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementProblem {
    clients: Vec<NodeId>,
    candidates: Vec<NodeId>,
    /// `zeta[m][n]`: client `m` managed by candidate `n`.
    zeta: Vec<Vec<f64>>,
    /// `delta[n][l]`: per-client synchronisation cost between hubs.
    delta: Vec<Vec<f64>>,
    /// `epsilon[n][l]`: constant synchronisation cost between hubs.
    epsilon: Vec<Vec<f64>>,
    omega: f64,
}

impl PlacementProblem {
    pub fn new(
        clients: Vec<NodeId>,
        candidates: Vec<NodeId>,
        zeta: Vec<Vec<f64>>,
        delta: Vec<Vec<f64>>,
        epsilon: Vec<Vec<f64>>,
        omega: f64,
    ) -> Result<Self, PlacementError> {
        let nc = candidates.len();
        let nm = clients.len();
        if nc == 0 {
            return Err(PlacementError::DimensionMismatch("no candidates".into()));
        }
        if zeta.len() != nm || zeta.iter().any(|r| r.len() != nc) {
            return Err(PlacementError::DimensionMismatch(format!("zeta must be {nm}x{nc}")));
        }
        for (name, mat) in [("delta", &delta), ("epsilon", &epsilon)] {
            if mat.len() != nc || mat.iter().any(|r| r.len() != nc) {
                return Err(PlacementError::DimensionMismatch(format!("{name} must be {nc}x{nc}")));
            }
            for n in 0..nc {
                if mat[n][n] != 0.0 {
                    return Err(PlacementError::InvalidCosts(format!("{name} diagonal must be zero")));
                }
                for l in 0..nc {
                    if mat[n][l] != mat[l][n] {
                        return Err(PlacementError::InvalidCosts(format!("{name} must be symmetric")));
                    }
                }
            }
        }
        let all = zeta.iter().chain(&delta).chain(&epsilon).flatten();
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PlacementError::InvalidCosts("costs must be finite and non-negative".into()));
        }
        if !omega.is_finite() || omega < 0.0 {
            return Err(PlacementError::InvalidCosts(format!("omega must be >= 0, got {omega}")));
        }
        let mut dedup = candidates.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != nc {
            return Err(PlacementError::InvalidCosts("duplicate candidate ids".into()));
        }

        // Reorder candidates by NodeId, permuting the matrices to match.
        let mut perm: Vec<usize> = (0..nc).collect();
        perm.sort_by_key(|&i| candidates[i]);
        let candidates = perm.iter().map(|&i| candidates[i]).collect();
        let zeta = zeta.iter().map(|row| perm.iter().map(|&i| row[i]).collect()).collect();
        let square = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            perm.iter().map(|&i| perm.iter().map(|&j| m[i][j]).collect()).collect()
        };
        let delta = square(&delta);
        let epsilon = square(&epsilon);
        Ok(PlacementProblem { clients, candidates, zeta, delta, epsilon, omega })
    }

    /// Derives costs from hop distances between the network's clients and
    /// candidates.
    pub fn from_network(net: &Network, model: &CostModel, omega: f64) -> Result<Self, PlacementError> {
        let clients = net.clients();
        let candidates = net.candidates();
        let hops = |a: NodeId, b: NodeId| -> Result<f64, PlacementError> {
            match net.hop_distance(a, b) {
                Ok(UNREACHABLE) => Err(PlacementError::InvalidCosts(format!("{a} and {b} are disconnected"))),
                Ok(h) => Ok(h as f64),
                Err(NetworkError::UnknownNode(n)) => Err(PlacementError::InvalidCosts(format!("unknown node {n}"))),
                Err(e) => Err(PlacementError::InvalidCosts(e.to_string())),
            }
        };
        let mut zeta = Vec::with_capacity(clients.len());
        for &m in &clients {
            let row = candidates.iter().map(|&n| Ok(model.zeta_per_hop * hops(m, n)?)).collect::<Result<Vec<_>, _>>()?;
            zeta.push(row);
        }
        let nc = candidates.len();
        let mut delta = vec![vec![0.0; nc]; nc];
        let mut epsilon = vec![vec![0.0; nc]; nc];
        for n in 0..nc {
            for l in 0..nc {
                if n != l {
                    let h = hops(candidates[n], candidates[l])?;
                    delta[n][l] = model.delta_per_hop * h;
                    epsilon[n][l] = model.epsilon_per_hop * h;
                }
            }
        }
        if model.uniform_delta {
            uniformize(&mut delta);
        }
        PlacementProblem::new(clients, candidates, zeta, delta, epsilon, omega)
    }

    pub fn clients(&self) -> &[NodeId] {
        &self.clients
    }

    pub fn candidates(&self) -> &[NodeId] {
        &self.candidates
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn zeta(&self, m: usize, n: usize) -> f64 {
        self.zeta[m][n]
    }

    pub fn delta(&self, n: usize, l: usize) -> f64 {
        self.delta[n][l]
    }

    pub fn epsilon(&self, n: usize, l: usize) -> f64 {
        self.epsilon[n][l]
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self, PlacementError> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(PlacementError::InvalidCosts(format!("omega must be >= 0, got {omega}")));
        }
        Ok(PlacementProblem { omega, ..self.clone() })
    }

    /// True when every off-diagonal delta holds the same value.
    pub fn has_uniform_delta(&self) -> bool {
        let nc = self.candidates.len();
        let mut first = None;
        for n in 0..nc {
            for l in 0..nc {
                if n != l {
                    match first {
                        None => first = Some(self.delta[n][l]),
                        Some(v) if v != self.delta[n][l] => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    pub fn candidate_index(&self, node: NodeId) -> Option<usize> {
        self.candidates.binary_search(&node).ok()
    }
}

/// Replaces each off-diagonal entry with the off-diagonal mean.
pub fn uniformize(delta: &mut [Vec<f64>]) {
    let nc = delta.len();
    if nc < 2 {
        return;
    }
    let total: f64 = (0..nc).flat_map(|n| (0..nc).map(move |l| (n, l))).filter(|(n, l)| n != l).map(|(n, l)| delta[n][l]).sum();
    let mean = total / (nc * (nc - 1)) as f64;
    for (n, row) in delta.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            *v = if n == l { 0.0 } else { mean };
        }
    }
}

/// Binary placement vector over the candidates (`x`). At least one hub is
/// always placed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlacementPlan {
    x: Vec<bool>,
}

impl PlacementPlan {
    pub fn new(x: Vec<bool>) -> Result<Self, PlacementError> {
        if !x.iter().any(|&b| b) {
            return Err(PlacementError::NoHubPlaced);
        }
        Ok(PlacementPlan { x })
    }

    pub fn from_indices(candidate_count: usize, placed: &[usize]) -> Result<Self, PlacementError> {
        let mut x = vec![false; candidate_count];
        for &i in placed {
            if i >= candidate_count {
                return Err(PlacementError::DimensionMismatch(format!("candidate index {i} out of range")));
            }
            x[i] = true;
        }
        PlacementPlan::new(x)
    }

    pub fn x(&self) -> &[bool] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_placed(&self, n: usize) -> bool {
        self.x[n]
    }

    pub fn placed(&self) -> impl Iterator<Item = usize> + '_ {
        self.x.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn hub_count(&self) -> usize {
        self.x.iter().filter(|&&b| b).count()
    }
}

/// Client-to-hub assignment (`y`), stored as the chosen candidate index per
/// client so every row of the binary matrix sums to exactly one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AssignmentPlan {
    hub_of: Vec<usize>,
}

impl AssignmentPlan {
    pub fn new(hub_of: Vec<usize>) -> Self {
        AssignmentPlan { hub_of }
    }

    /// Builds from a 0/1 matrix `y[m][n]`, rejecting rows that do not sum to 1.
    pub fn from_matrix(y: &[Vec<bool>]) -> Result<Self, PlacementError> {
        let mut hub_of = Vec::with_capacity(y.len());
        for (m, row) in y.iter().enumerate() {
            let ones: Vec<usize> = row.iter().enumerate().filter(|(_, &b)| b).map(|(n, _)| n).collect();
            if ones.len() != 1 {
                return Err(PlacementError::InvalidPlan(format!("client {m} row sums to {}", ones.len())));
            }
            hub_of.push(ones[0]);
        }
        Ok(AssignmentPlan { hub_of })
    }

    pub fn to_matrix(&self, candidate_count: usize) -> Vec<Vec<bool>> {
        self.hub_of
            .iter()
            .map(|&h| (0..candidate_count).map(|n| n == h).collect())
            .collect()
    }

    pub fn hub_of(&self, m: usize) -> usize {
        self.hub_of[m]
    }

    pub fn hubs(&self) -> &[usize] {
        &self.hub_of
    }

    /// Clients assigned to each candidate.
    pub fn loads(&self, candidate_count: usize) -> Vec<usize> {
        let mut loads = vec![0; candidate_count];
        for &h in &self.hub_of {
            loads[h] += 1;
        }
        loads
    }
}

fn check_assignment(problem: &PlacementProblem, y: &AssignmentPlan) -> Result<(), PlacementError> {
    if y.hub_of.len() != problem.client_count() {
        return Err(PlacementError::DimensionMismatch(format!(
            "assignment covers {} clients, problem has {}",
            y.hub_of.len(),
            problem.client_count()
        )));
    }
    if let Some(&bad) = y.hub_of.iter().find(|&&h| h >= problem.candidate_count()) {
        return Err(PlacementError::DimensionMismatch(format!("candidate index {bad} out of range")));
    }
    Ok(())
}

fn check_pair(problem: &PlacementProblem, x: &PlacementPlan, y: &AssignmentPlan) -> Result<(), PlacementError> {
    check_assignment(problem, y)?;
    if x.len() != problem.candidate_count() {
        return Err(PlacementError::DimensionMismatch(format!(
            "placement has {} entries, problem has {} candidates",
            x.len(),
            problem.candidate_count()
        )));
    }
    for (m, &h) in y.hub_of.iter().enumerate() {
        if !x.is_placed(h) {
            return Err(PlacementError::InvalidPlan(format!("client {m} assigned to unplaced candidate {h}")));
        }
    }
    Ok(())
}

/// Total management cost: sum of `zeta[m][n]` over assigned pairs.
pub fn management_cost(problem: &PlacementProblem, y: &AssignmentPlan) -> Result<f64, PlacementError> {
    check_assignment(problem, y)?;
    Ok(y.hub_of.iter().enumerate().map(|(m, &n)| problem.zeta[m][n]).sum())
}

/// Total synchronisation cost over ordered hub pairs `(n, l)`:
/// `delta[n][l] * clients(n) + epsilon[n][l]`.
pub fn synchronization_cost(problem: &PlacementProblem, x: &PlacementPlan, y: &AssignmentPlan) -> Result<f64, PlacementError> {
    check_pair(problem, x, y)?;
    let nc = problem.candidate_count();
    let loads = y.loads(nc);
    let mut total = 0.0;
    for n in x.placed() {
        for l in x.placed() {
            total += problem.delta[n][l] * loads[n] as f64 + problem.epsilon[n][l];
        }
    }
    Ok(total)
}

/// `management + omega * synchronisation`.
pub fn balance_cost(problem: &PlacementProblem, x: &PlacementPlan, y: &AssignmentPlan) -> Result<f64, PlacementError> {
    let cm = management_cost(problem, y)?;
    let cs = synchronization_cost(problem, x, y)?;
    Ok(cm + problem.omega * cs)
}
