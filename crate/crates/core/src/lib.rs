//! Resource assignment, scheduling and simulation for hybrid offloading of
//! cooperative-perception tasks from vehicles to edge servers (vertical,
//! over LTE) and to nearby vehicles (horizontal, over V2V).
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure
//! computation over in-memory values; file formats, the experiment runner
//! and the command line live in the `hybrid-offload` companion crate.
//!
//! Module map:
//!
//! * [`model`]: nodes, link table, task types, validated instances.
//! * [`milp`]: bounded dense simplex, branch and bound, MPS export.
//! * [`assignment`]: the linearized assignment program, extraction,
//!   nonlinear verification and the baseline policies.
//! * [`scheduler`]: arrival times and round-robin task placement.
//! * [`simulator`]: fluid-pipe discrete-event execution and metrics.
//! * [`scenario`]: role selection, compute mixture, rate models and
//!   synthetic timelines.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod assignment;
pub mod milp;
pub mod model;
pub mod scenario;
pub mod scheduler;
pub mod simulator;

mod math;

pub use math::{derive_seed, tasks_for_share};

pub use assignment::{
    baseline_assignment, build_p1, extract_assignment, optimize, verify_assignment, Assignment,
    AssignmentError, Baseline, ConstraintFamily, LinearizationArtifacts, OptimizeOptions,
    P1Options, PairScope, VerificationReport,
};
pub use milp::{
    export_mps, solve_lp, solve_milp, Comparator, Integrality, LpSolution, MilpError,
    MilpOptions, MilpProblem, MilpSolution, Sense, SolveStatus, VarId,
};
pub use model::{
    build_link_table, validate_instance, Instance, LinkTable, Medium, ModelError, Node, NodeId,
    NodeKind, Roles, Task, TaskType, ValidatedInstance,
};
pub use scheduler::{arrival_times, round_robin, Schedule, TaskTypeSchedule};
pub use simulator::{
    run_period, run_simulation, Carryover, MetricsSeries, PeriodMetrics, Policy,
    SimulationOptions, TaskTypeMetrics,
};
