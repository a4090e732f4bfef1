//! Discrete-event execution of scheduled frames, period after period.
//!
//! Links and processors are fluid pipes: a pair `(k, w)` with shares
//! `(x, y)` owns a channel of rate `R y` and a processor of rate `F x`.
//! Because these pipes are dedicated, a period's frames never interact with
//! another period's, so each period is drained to completion on its own and
//! every result is attributed to the period that generated the frame. Frames
//! still in flight at the boundary keep their old shares and are reported in
//! the [`Carryover`], which the next period logs as transient overdraft.

mod engine;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{per_pair_counts, trace_period, Event, EventKind, TaskRecord};

use crate::assignment::{baseline_assignment, optimize, Assignment, AssignmentError, Baseline, OptimizeOptions, PairScope};
use crate::math::{derive_seed, floor, FLOOR_GUARD};
use crate::model::{Medium, NodeId, ValidatedInstance};
use crate::scheduler::Schedule;

/// Slack on the deadline test `completion - t_l <= tau`.
pub const DEADLINE_TOL_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Hybrid,
    VerticalOnly,
    NoOffload,
    RandomHybrid,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Hybrid, Policy::VerticalOnly, Policy::NoOffload, Policy::RandomHybrid];

    pub fn label(self) -> &'static str {
        match self {
            Policy::Hybrid => "hybrid",
            Policy::VerticalOnly => "vertical_only",
            Policy::NoOffload => "no_offload",
            Policy::RandomHybrid => "random_hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskTypeMetrics {
    pub tt_id: String,
    pub sender: NodeId,
    pub generated: u32,
    pub in_time: u32,
    pub late: u32,
    /// Frames stuck behind a zero-rate channel; never delivered.
    pub stalled: u32,
    pub sum_tx_wait_s: f64,
    pub sum_tx_s: f64,
    pub sum_compute_wait_s: f64,
    pub sum_compute_s: f64,
    pub bytes_lte: f64,
    pub bytes_v2v: f64,
}

impl TaskTypeMetrics {
    pub fn delivered(&self) -> u32 {
        self.in_time + self.late
    }

    /// Mean time from capture to arrival at the worker, queueing included.
    pub fn mean_tx_delay_s(&self) -> f64 {
        mean(self.sum_tx_wait_s + self.sum_tx_s, self.delivered())
    }

    /// Mean time from arrival at the worker to completion, queueing included.
    pub fn mean_compute_delay_s(&self) -> f64 {
        mean(self.sum_compute_wait_s + self.sum_compute_s, self.delivered())
    }
}

fn mean(sum: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub period_start_s: f64,
    pub period_s: f64,
    pub num_senders: usize,
    pub task_types: Vec<TaskTypeMetrics>,
    /// Set when the assignment came from an early-stopped solve.
    pub flagged: bool,
    /// Frames of earlier periods still in flight at this period's start.
    pub carried_in: usize,
}

impl PeriodMetrics {
    pub fn generated(&self) -> u32 {
        self.task_types.iter().map(|t| t.generated).sum()
    }

    pub fn in_time(&self) -> u32 {
        self.task_types.iter().map(|t| t.in_time).sum()
    }

    pub fn delivered(&self) -> u32 {
        self.task_types.iter().map(|t| t.delivered()).sum()
    }

    pub fn bytes_lte(&self) -> f64 {
        self.task_types.iter().map(|t| t.bytes_lte).sum()
    }

    pub fn bytes_v2v(&self) -> f64 {
        self.task_types.iter().map(|t| t.bytes_v2v).sum()
    }

    fn per_sender(&self, count: u32) -> Option<f64> {
        (self.num_senders > 0).then(|| count as f64 / (self.period_s * self.num_senders as f64))
    }

    /// Tasks per second per sender finished within their deadline.
    pub fn in_time_rate(&self) -> Option<f64> {
        self.per_sender(self.in_time())
    }

    /// Tasks per second per sender finished at all.
    pub fn processed_rate(&self) -> Option<f64> {
        self.per_sender(self.delivered())
    }

    fn delay_sums(&self) -> (f64, f64, u32) {
        self.task_types.iter().fold((0.0, 0.0, 0), |(tx, cp, n), t| {
            (tx + t.sum_tx_wait_s + t.sum_tx_s, cp + t.sum_compute_wait_s + t.sum_compute_s, n + t.delivered())
        })
    }
}

/// Frame still running when its period ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InFlight {
    pub type_index: usize,
    pub worker: usize,
    pub finishes_at_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Carryover {
    /// Absolute time the previous period ended.
    pub boundary_s: f64,
    pub in_flight: Vec<InFlight>,
}

/// Runs one period starting at `period_start_s`. Frames are drained to
/// completion; those finishing after the period end go to the returned
/// carryover.
pub fn run_period(
    instance: &ValidatedInstance,
    assignment: &Assignment,
    schedule: &Schedule,
    period_start_s: f64,
    carryover: &Carryover,
) -> (PeriodMetrics, Carryover) {
    let (records, _) = trace_period(instance, assignment, schedule);
    let mut tts: Vec<TaskTypeMetrics> = instance
        .task_types
        .iter()
        .enumerate()
        .map(|(k, tt)| TaskTypeMetrics {
            tt_id: tt.id.clone(),
            sender: instance.nodes[instance.sender_of(k)].id.clone(),
            ..Default::default()
        })
        .collect();
    let period_end = period_start_s + instance.period_s;
    let mut next = Carryover { boundary_s: period_end, in_flight: Vec::new() };

    for r in &records {
        let tt = &instance.task_types[r.type_index];
        let m = &mut tts[r.type_index];
        m.generated += 1;
        if r.medium != Medium::Local && r.tx_done_s.is_some() {
            let bytes = tt.data_bits / 8.0;
            match r.medium {
                Medium::Lte => m.bytes_lte += bytes,
                _ => m.bytes_v2v += bytes,
            }
        }
        let (Some(done), Some(tx_start), Some(tx_done), Some(c_start)) =
            (r.done_s, r.tx_start_s.or(r.tx_done_s), r.tx_done_s, r.compute_start_s)
        else {
            m.stalled += 1;
            continue;
        };
        if r.delay_s().unwrap_or(f64::INFINITY) <= tt.max_delay_s + DEADLINE_TOL_S {
            m.in_time += 1;
        } else {
            m.late += 1;
        }
        m.sum_tx_wait_s += tx_start - r.arrival_s;
        m.sum_tx_s += tx_done - tx_start;
        m.sum_compute_wait_s += c_start - tx_done;
        m.sum_compute_s += done - c_start;
        if period_start_s + done > period_end {
            next.in_flight.push(InFlight {
                type_index: r.type_index,
                worker: r.worker,
                finishes_at_s: period_start_s + done,
            });
        }
    }

    let carried_in = carryover.in_flight.iter().filter(|f| f.finishes_at_s > period_start_s).count();
    if carried_in > 0 {
        log::debug!("{carried_in} frames overlap the period starting at {period_start_s} s");
    }
    let metrics = PeriodMetrics {
        period_start_s,
        period_s: instance.period_s,
        num_senders: instance.senders().len(),
        task_types: tts,
        flagged: false,
        carried_in,
    };
    (metrics, next)
}

/// Supplies the instance for each period of a simulation.
pub trait InstanceSource {
    type Error: core::fmt::Display;

    /// Instance valid during `[t, t + T)`, for the `period`-th period.
    fn snapshot(&mut self, period: usize, t: f64) -> Result<ValidatedInstance, Self::Error>;

    fn period_s(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub optimize: OptimizeOptions,
    pub duration_s: f64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("instance for period {period}: {message}")]
    Source { period: usize, message: String },
    #[error("assignment for period {period}: {source}")]
    Assignment { period: usize, source: AssignmentError },
}

/// Assignment a policy produces for one instance; the flag marks solves that
/// stopped before proving optimality.
pub fn policy_assignment(
    instance: &ValidatedInstance,
    policy: Policy,
    options: &OptimizeOptions,
    seed: u64,
) -> Result<(Assignment, bool), AssignmentError> {
    match policy {
        Policy::Hybrid | Policy::VerticalOnly => {
            let mut opts = *options;
            if policy == Policy::VerticalOnly {
                opts.p1.scope = PairScope::VerticalOnly;
            }
            let out = optimize(instance, &opts)?;
            if out.flagged {
                log::warn!("solver stopped with {:?}; using incumbent", out.status);
            }
            Ok((out.assignment, out.flagged))
        }
        Policy::NoOffload => Ok((baseline_assignment(instance, Baseline::NoOffload, seed, options)?, false)),
        Policy::RandomHybrid => Ok((baseline_assignment(instance, Baseline::RandomHybrid, seed, options)?, false)),
    }
}

const TAG_ASSIGN: u64 = 1;
const TAG_SCHEDULE: u64 = 2;

/// Snapshot, assign, schedule and run every period in `[0, duration)`.
pub fn run_simulation<S: InstanceSource>(
    source: &mut S,
    policy: Policy,
    options: &SimulationOptions,
) -> Result<MetricsSeries, SimulationError> {
    let period_s = source.period_s();
    let periods = floor(options.duration_s / period_s + FLOOR_GUARD) as usize;
    let mut carry = Carryover::default();
    let mut out = MetricsSeries { policy, periods: Vec::with_capacity(periods) };
    for p in 0..periods {
        let t = p as f64 * period_s;
        let instance = source
            .snapshot(p, t)
            .map_err(|e| SimulationError::Source { period: p, message: alloc::format!("{e}") })?;
        let (assignment, flagged) =
            policy_assignment(&instance, policy, &options.optimize, derive_seed(options.seed, TAG_ASSIGN, p as u64, 0))
                .map_err(|source| SimulationError::Assignment { period: p, source })?;
        let schedule = Schedule::build(&instance, &assignment, derive_seed(options.seed, TAG_SCHEDULE, p as u64, 0));
        let (mut metrics, next) = run_period(&instance, &assignment, &schedule, t, &carry);
        metrics.flagged = flagged;
        out.periods.push(metrics);
        carry = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub policy: Policy,
    pub periods: Vec<PeriodMetrics>,
}

impl MetricsSeries {
    /// Per-period in-time rates, skipping periods without senders.
    pub fn in_time_rates(&self) -> Vec<f64> {
        self.periods.iter().filter_map(PeriodMetrics::in_time_rate).collect()
    }

    pub fn processed_rates(&self) -> Vec<f64> {
        self.periods.iter().filter_map(PeriodMetrics::processed_rate).collect()
    }

    pub fn mean_in_time_rate(&self) -> f64 {
        mean_of(&self.in_time_rates())
    }

    pub fn mean_processed_rate(&self) -> f64 {
        mean_of(&self.processed_rates())
    }

    /// Mean transmit and compute delay over every delivered frame.
    pub fn mean_delays_s(&self) -> (f64, f64) {
        let (tx, cp, n) = self.periods.iter().map(PeriodMetrics::delay_sums).fold((0.0, 0.0, 0), |a, b| {
            (a.0 + b.0, a.1 + b.1, a.2 + b.2)
        });
        (mean(tx, n), mean(cp, n))
    }

    pub fn mean_bytes(&self) -> (f64, f64) {
        let n = self.periods.len().max(1) as f64;
        let lte: f64 = self.periods.iter().map(PeriodMetrics::bytes_lte).sum();
        let v2v: f64 = self.periods.iter().map(PeriodMetrics::bytes_v2v).sum();
        (lte / n, v2v / n)
    }

    pub fn flagged_periods(&self) -> usize {
        self.periods.iter().filter(|p| p.flagged).count()
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
