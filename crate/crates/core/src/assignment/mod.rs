//! Resource assignment: which share of each worker's compute (`X`) and of
//! each sender's transmit time (`Y^LTE`, `Y^V2V`) goes to each task type.
//!
//! [`build_p1`] emits the linearized program, [`extract_assignment`] turns
//! a solver result back into shares and task counts, and
//! [`verify_assignment`] re-checks those against the original nonlinear
//! constraints. [`baseline_assignment`] provides the reference policies.

mod baseline;
mod extract;
mod p1;
mod verify;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::math::tasks_for_share;
pub use baseline::{baseline_assignment, Baseline};
pub use extract::extract_assignment;
pub use p1::{build_p1, LinearizationArtifacts, P1Options, PairScope, PairVars};
pub use verify::{verify_assignment, ConstraintFamily, FamilyReport, VerificationReport};

use crate::milp::{solve_milp, MilpError, MilpOptions, SolveStatus};
use crate::model::ValidatedInstance;

/// Shares and task counts for one period. Every matrix is indexed
/// `[task type][node position]`; columns of non-workers stay zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub x: Vec<Vec<f64>>,
    pub y_lte: Vec<Vec<f64>>,
    pub y_v2v: Vec<Vec<f64>>,
    /// `M_{k,w} = floor(T F_w x_{k,w} / c_k)`.
    pub tasks: Vec<Vec<u32>>,
    /// `L_k = sum_w M_{k,w}`.
    pub totals: Vec<u32>,
}

impl Assignment {
    pub fn zeros(task_types: usize, nodes: usize) -> Self {
        Assignment {
            x: vec![vec![0.0; nodes]; task_types],
            y_lte: vec![vec![0.0; nodes]; task_types],
            y_v2v: vec![vec![0.0; nodes]; task_types],
            tasks: vec![vec![0; nodes]; task_types],
            totals: vec![0; task_types],
        }
    }

    /// Recomputes `tasks` and `totals` from the compute shares.
    pub fn recompute_tasks(&mut self, instance: &ValidatedInstance) {
        for (k, tt) in instance.task_types.iter().enumerate() {
            for (w, node) in instance.nodes.iter().enumerate() {
                self.tasks[k][w] =
                    tasks_for_share(instance.period_s, node.compute_hz, self.x[k][w], tt.compute_cycles);
            }
            self.totals[k] = self.tasks[k].iter().sum();
        }
    }

    pub fn total_tasks(&self) -> u64 {
        self.totals.iter().map(|&l| l as u64).sum()
    }

    pub fn num_task_types(&self) -> usize {
        self.x.len()
    }

    /// Share of the sender's time given to pair `(k, w)` on whichever
    /// medium is non-zero.
    pub fn y(&self, k: usize, w: usize) -> f64 {
        self.y_lte[k][w].max(self.y_v2v[k][w])
    }

    pub fn has_shape(&self, task_types: usize, nodes: usize) -> bool {
        [&self.x, &self.y_lte, &self.y_v2v].iter().all(|m| m.len() == task_types && m.iter().all(|r| r.len() == nodes))
            && self.tasks.len() == task_types
            && self.tasks.iter().all(|r| r.len() == nodes)
            && self.totals.len() == task_types
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignmentError {
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("instance has no workers")]
    NoWorkers,
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error("solver returned {0:?} without an incumbent")]
    NoIncumbent(SolveStatus),
    #[error("recomputed task total {recomputed} disagrees with solver objective {objective}")]
    Inconsistent { recomputed: u64, objective: f64 },
    #[error("assignment shape does not match the instance")]
    Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub p1: P1Options,
    pub milp: MilpOptions,
}

/// Result of solving the linearized program for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub assignment: Assignment,
    pub status: SolveStatus,
    pub objective: f64,
    pub nodes_explored: usize,
    /// Set when the solver stopped early and the incumbent (or the empty
    /// assignment) was used instead of a proven optimum.
    pub flagged: bool,
}

/// Builds, solves and extracts the assignment program in one go.
pub fn optimize(instance: &ValidatedInstance, options: &OptimizeOptions) -> Result<Optimized, AssignmentError> {
    let (problem, artifacts) = build_p1(instance, &options.p1)?;
    let zero = Assignment::zeros(instance.num_task_types(), instance.nodes.len());
    if problem.variables.is_empty() {
        return Ok(Optimized {
            assignment: zero,
            status: SolveStatus::Optimal,
            objective: 0.0,
            nodes_explored: 0,
            flagged: false,
        });
    }
    let solution = solve_milp(&problem, &options.milp)?;
    if !solution.has_incumbent() {
        // the all-zero point is always feasible, so this is only a node limit
        return Ok(Optimized {
            assignment: zero,
            status: solution.status,
            objective: 0.0,
            nodes_explored: solution.nodes_explored,
            flagged: true,
        });
    }
    let assignment = extract_assignment(instance, &solution, &artifacts)?;
    Ok(Optimized {
        assignment,
        status: solution.status,
        objective: solution.objective_value,
        nodes_explored: solution.nodes_explored,
        flagged: solution.status != SolveStatus::Optimal,
    })
}
