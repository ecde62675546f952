//! Linearised mixed-integer program for hub placement.
//!
//! Products `x_n x_l` become `theta_nl` and `theta_nl y_mn` become
//! `phi_nlm`, each pinned by the usual three linking rows.

use std::fmt::Write as _;

use super::problem::PlacementProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    X { n: usize },
    Y { m: usize, n: usize },
    Theta { n: usize, l: usize },
    Phi { n: usize, l: usize, m: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn lp_token(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    fn holds(&self, values: &[bool]) -> bool {
        let lhs: f64 = self.terms.iter().map(|&(v, c)| if values[v] { c } else { 0.0 }).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

/// All variables are binary.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    clients: usize,
    candidates: usize,
    kinds: Vec<VarKind>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn build(problem: &PlacementProblem) -> MilpModel {
        let nc = problem.candidate_count();
        let nm = problem.client_count();
        let omega = problem.omega();
        let mut model = MilpModel { clients: nm, candidates: nc, kinds: Vec::new(), objective: Vec::new(), constraints: Vec::new() };

        for n in 0..nc {
            model.kinds.push(VarKind::X { n });
            model.objective.push(0.0);
        }
        for m in 0..nm {
            for n in 0..nc {
                model.kinds.push(VarKind::Y { m, n });
                model.objective.push(problem.zeta(m, n));
            }
        }
        for n in 0..nc {
            for l in 0..nc {
                model.kinds.push(VarKind::Theta { n, l });
                model.objective.push(omega * problem.epsilon(n, l));
            }
        }
        for n in 0..nc {
            for l in 0..nc {
                for m in 0..nm {
                    model.kinds.push(VarKind::Phi { n, l, m });
                    model.objective.push(omega * problem.delta(n, l));
                }
            }
        }

        for m in 0..nm {
            let terms = (0..nc).map(|n| (model.y(m, n), 1.0)).collect();
            model.push(format!("assign_{m}"), terms, Sense::Eq, 1.0);
        }
        for m in 0..nm {
            for n in 0..nc {
                model.push(format!("open_{m}_{n}"), vec![(model.y(m, n), 1.0), (model.x(n), -1.0)], Sense::Le, 0.0);
            }
        }
        for n in 0..nc {
            for l in 0..nc {
                let t = model.theta(n, l);
                model.push(format!("th_a_{n}_{l}"), vec![(t, 1.0), (model.x(n), -1.0)], Sense::Le, 0.0);
                model.push(format!("th_b_{n}_{l}"), vec![(t, 1.0), (model.x(l), -1.0)], Sense::Le, 0.0);
                let lower = if n == l {
                    vec![(t, 1.0), (model.x(n), -2.0)]
                } else {
                    vec![(t, 1.0), (model.x(n), -1.0), (model.x(l), -1.0)]
                };
                model.push(format!("th_c_{n}_{l}"), lower, Sense::Ge, -1.0);
            }
        }
        for n in 0..nc {
            for l in 0..nc {
                for m in 0..nm {
                    let p = model.phi(n, l, m);
                    let t = model.theta(n, l);
                    let y = model.y(m, n);
                    model.push(format!("ph_a_{n}_{l}_{m}"), vec![(p, 1.0), (t, -1.0)], Sense::Le, 0.0);
                    model.push(format!("ph_b_{n}_{l}_{m}"), vec![(p, 1.0), (y, -1.0)], Sense::Le, 0.0);
                    model.push(format!("ph_c_{n}_{l}_{m}"), vec![(p, 1.0), (t, -1.0), (y, -1.0)], Sense::Ge, -1.0);
                }
            }
        }
        model
    }

    fn push(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { name, terms, sense, rhs });
    }

    pub fn clients(&self) -> usize {
        self.clients
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn x(&self, n: usize) -> usize {
        n
    }

    pub fn y(&self, m: usize, n: usize) -> usize {
        self.candidates + m * self.candidates + n
    }

    pub fn theta(&self, n: usize, l: usize) -> usize {
        self.candidates * (1 + self.clients) + n * self.candidates + l
    }

    pub fn phi(&self, n: usize, l: usize, m: usize) -> usize {
        let nc = self.candidates;
        nc * (1 + self.clients + nc) + (n * nc + l) * self.clients + m
    }

    pub fn var_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var_name(&self, v: usize) -> String {
        match self.kinds[v] {
            VarKind::X { n } => format!("x_{n}"),
            VarKind::Y { m, n } => format!("y_{m}_{n}"),
            VarKind::Theta { n, l } => format!("th_{n}_{l}"),
            VarKind::Phi { n, l, m } => format!("ph_{n}_{l}_{m}"),
        }
    }

    pub fn is_feasible(&self, values: &[bool]) -> bool {
        values.len() == self.var_count() && self.constraints.iter().all(|c| c.holds(values))
    }

    /// Index of the first violated row, if any.
    pub fn first_violation(&self, values: &[bool]) -> Option<usize> {
        self.constraints.iter().position(|c| !c.holds(values))
    }

    pub fn evaluate(&self, values: &[bool]) -> f64 {
        self.objective.iter().zip(values).filter(|(_, &v)| v).map(|(c, _)| c).sum()
    }

    /// Fills in `theta` and `phi` implied by a placement and assignment.
    pub fn complete(&self, x: &[bool], hub_of: &[usize]) -> Vec<bool> {
        let mut values = vec![false; self.var_count()];
        for n in 0..self.candidates {
            values[self.x(n)] = x[n];
        }
        for (m, &h) in hub_of.iter().enumerate() {
            values[self.y(m, h)] = true;
        }
        for n in 0..self.candidates {
            for l in 0..self.candidates {
                let t = x[n] && x[l];
                values[self.theta(n, l)] = t;
                for (m, &h) in hub_of.iter().enumerate() {
                    values[self.phi(n, l, m)] = t && h == n;
                }
            }
        }
        values
    }

    /// CPLEX LP text.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ hub placement\nMinimize\n obj:");
        let obj: Vec<(usize, f64)> = self.objective.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
        if obj.is_empty() {
            out.push_str(" 0 x_0");
        }
        write_terms(&mut out, &obj, |v| self.var_name(v));
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            write_terms(&mut out, &c.terms, |v| self.var_name(v));
            let _ = writeln!(out, " {} {}", c.sense.lp_token(), c.rhs);
        }
        out.push_str("Binary\n");
        for v in 0..self.var_count() {
            let _ = writeln!(out, " {}", self.var_name(v));
        }
        out.push_str("End\n");
        out
    }
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], name: impl Fn(usize) -> String) {
    for (i, &(v, c)) in terms.iter().enumerate() {
        if i > 0 && i % 8 == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let mag = c.abs();
        if i == 0 && sign == '+' {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag == 1.0 {
            out.push_str(&name(v));
        } else {
            let _ = write!(out, "{mag} {}", name(v));
        }
    }
}
