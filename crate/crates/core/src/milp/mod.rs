//! Small linear and mixed-integer programming substrate.
//!
//! [`solve_lp`] is a dense bounded-variable tableau simplex (two phases,
//! Dantzig pricing with a Bland fallback on degenerate stalls).
//! [`solve_milp`] runs depth-first branch and bound over LP relaxations.
//! Both are deterministic: ties are always broken by variable index.
//!
//! Sized for desk-scale problems of a few hundred integer variables; bigger
//! models should go through [`export_mps`] to an external solver.

mod branch;
mod mps;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use branch::solve_milp;
pub use mps::export_mps;
pub use simplex::solve_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrality {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

impl Variable {
    pub fn is_integer(&self) -> bool {
        self.integrality != Integrality::Continuous
    }

    /// Bounds after intersecting binaries with `[0, 1]`.
    pub fn effective_bounds(&self) -> (f64, f64) {
        match self.integrality {
            Integrality::Binary => (self.lower.max(0.0), self.upper.min(1.0)),
            _ => (self.lower, self.upper),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub cmp: Comparator,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(VarId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MilpError {
    #[error("variable {0} has lower bound above upper bound")]
    InvertedBounds(usize),
    #[error("variable {0} has a NaN bound")]
    NanBound(usize),
    #[error("constraint {constraint} references undeclared variable {var}")]
    UnknownVariable { constraint: usize, var: usize },
    #[error("objective references undeclared variable {0}")]
    UnknownObjectiveVariable(usize),
    #[error("non-finite coefficient or right-hand side in constraint {0}")]
    NonFinite(usize),
    #[error("problem has no variables")]
    Empty,
    #[error("numeric failure: {0}")]
    Numeric(&'static str),
}

impl MilpProblem {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        MilpProblem {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { sense, terms: Vec::new() },
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integrality: Integrality) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper, integrality });
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, cmp: Comparator, rhs: f64) {
        self.constraints.push(Constraint { name: name.into(), terms, cmp, rhs });
    }

    pub fn set_objective_coef(&mut self, var: VarId, coef: f64) {
        self.objective.terms.retain(|(v, _)| *v != var);
        if coef != 0.0 {
            self.objective.terms.push((var, coef));
        }
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.is_integer()).count()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        for (i, v) in self.variables.iter().enumerate() {
            let (lo, hi) = v.effective_bounds();
            if lo.is_nan() || hi.is_nan() {
                return Err(MilpError::NanBound(i));
            }
            if lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(MilpError::InvertedBounds(i));
            }
        }
        let n = self.variables.len();
        for (ci, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(MilpError::NonFinite(ci));
            }
            for (v, a) in &c.terms {
                if v.0 >= n {
                    return Err(MilpError::UnknownVariable { constraint: ci, var: v.0 });
                }
                if !a.is_finite() {
                    return Err(MilpError::NonFinite(ci));
                }
            }
        }
        for (v, a) in &self.objective.terms {
            if v.0 >= n || !a.is_finite() {
                return Err(MilpError::UnknownObjectiveVariable(v.0));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.terms.iter().map(|(v, a)| a * values[v.0]).sum()
    }

    /// Largest violation of any bound or row by `values`, with rows measured
    /// relative to `1 + |rhs|`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            let (lo, hi) = v.effective_bounds();
            worst = worst.max(lo - x).max(x - hi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[v.0]).sum();
            let scale = 1.0 + crate::math::abs(c.rhs);
            let viol = match c.cmp {
                Comparator::Le => lhs - c.rhs,
                Comparator::Ge => c.rhs - lhs,
                Comparator::Eq => crate::math::abs(lhs - c.rhs),
            };
            worst = worst.max(viol / scale);
        }
        worst
    }

    /// Largest distance of an integer variable from the nearest integer.
    pub fn max_integrality_violation(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.is_integer())
            .map(|(_, &x)| crate::math::abs(x - crate::math::round(x)))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped once the relative gap fell under `gap_tol`.
    GapLimit,
    /// Node budget exhausted; the incumbent (if any) is returned.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Incumbent values; empty when no integer-feasible point was found.
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Relative gap between the best bound and the incumbent.
    pub gap: f64,
    pub nodes_explored: usize,
    /// Objective of the root LP relaxation.
    pub root_bound: Option<f64>,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    pub integrality_tol: f64,
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { integrality_tol: 1e-6, feasibility_tol: 1e-8, gap_tol: 0.0, node_limit: 200_000 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_models() {
        let mut p = MilpProblem::new("bad", Sense::Maximize);
        let x = p.add_var("x", 1.0, 0.0, Integrality::Continuous);
        assert_eq!(p.validate(), Err(MilpError::InvertedBounds(0)));
        p.variables[0].upper = 2.0;
        p.add_constraint("c", alloc::vec![(VarId(3), 1.0)], Comparator::Le, 1.0);
        assert_eq!(p.validate(), Err(MilpError::UnknownVariable { constraint: 0, var: 3 }));
        p.constraints[0].terms = alloc::vec![(x, f64::NAN)];
        assert_eq!(p.validate(), Err(MilpError::NonFinite(0)));
    }

    #[test]
    fn binary_bounds_are_clipped() {
        let v = Variable { name: "b".into(), lower: -3.0, upper: 7.0, integrality: Integrality::Binary };
        assert_eq!(v.effective_bounds(), (0.0, 1.0));
    }
}
