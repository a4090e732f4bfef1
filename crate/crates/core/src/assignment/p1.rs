//! The linearized assignment program.
//!
//! Objective: maximize `sum V_{k,w}`, where the integer `V_{k,w}` stands in
//! for `floor(T F_w X_{k,w} / c_k)` through the pair
//! `V <= T F X / c` and `T F X / c - eps <= V`.
//!
//! The two-term delay bound `d / (R Y) + c / (F X) <= tau` is replaced by a
//! grid of splits `alpha_n = n / N`, `n = 1..N-1`: each grid point has a
//! binary `U_n` that, when zero, enforces `c / (F X) <= alpha_n tau` and
//! `d / (R Y) <= (1 - alpha_n) tau`. At least one grid point must be active
//! whenever `X > 0`, which is tied to a binary indicator `B >= X`.
//!
//! Pairs that can never carry a task (no link, too slow to finish one frame
//! in a period, or no grid split meeting the deadline even at full shares)
//! get no variables at all: their shares are zero in every feasible point.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AssignmentError;
use crate::math::{floor, FLOOR_GUARD};
use crate::milp::{Comparator, Integrality, MilpProblem, Sense, VarId};
use crate::model::{Medium, ValidatedInstance};

/// Which worker/task-type pairs the program may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairScope {
    /// Every reachable worker: edge servers, V2V cars and the sender itself.
    #[default]
    Hybrid,
    /// Edge servers plus local processing at the sender.
    VerticalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Options {
    /// `N`; the grid uses `alpha_n = n / N` for `n = 1..N-1`.
    pub grid_size: usize,
    /// Slack of the floor linearization (`0.999`).
    pub floor_slack: f64,
    pub scope: PairScope,
}

impl Default for P1Options {
    fn default() -> Self {
        P1Options { grid_size: 5, floor_slack: 0.999, scope: PairScope::Hybrid }
    }
}

/// Variables created for one `(k, w)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVars {
    pub task_type: usize,
    pub worker: usize,
    /// [`Medium::Local`] for self-processing, else LTE or V2V.
    pub medium: Medium,
    pub x: VarId,
    pub v: VarId,
    /// Indicator `I(X > 0)`.
    pub b: VarId,
    pub y: Option<VarId>,
    /// `U^(n)` for `n = 1..N-1`; empty for local pairs.
    pub u: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationArtifacts {
    pub pairs: Vec<PairVars>,
    /// `alpha_n = n / N` for the instantiated grid points.
    pub alpha: Vec<f64>,
    pub grid_size: usize,
    pub floor_slack: f64,
}

impl LinearizationArtifacts {
    pub fn pair(&self, task_type: usize, worker: usize) -> Option<&PairVars> {
        self.pairs.iter().find(|p| p.task_type == task_type && p.worker == worker)
    }

    pub fn v(&self, task_type: usize, worker: usize) -> Option<VarId> {
        self.pair(task_type, worker).map(|p| p.v)
    }
}

fn max_tasks(period_s: f64, hz: f64, cycles: f64) -> f64 {
    floor(period_s * hz / cycles + FLOOR_GUARD)
}

/// Builds the linearized program for `instance`.
pub fn build_p1(
    instance: &ValidatedInstance,
    options: &P1Options,
) -> Result<(MilpProblem, LinearizationArtifacts), AssignmentError> {
    let n_grid = options.grid_size;
    if n_grid < 2 {
        return Err(AssignmentError::GridTooSmall(n_grid));
    }
    if instance.workers().is_empty() {
        return Err(AssignmentError::NoWorkers);
    }
    let alpha: Vec<f64> = (1..n_grid).map(|n| n as f64 / n_grid as f64).collect();
    let period = instance.period_s;
    let links = &instance.links;
    let mut p = MilpProblem::new("p1", Sense::Maximize);
    let mut pairs = Vec::new();

    for (k, tt) in instance.task_types.iter().enumerate() {
        let s = instance.sender_of(k);
        let (d, c, tau) = (tt.data_bits, tt.compute_cycles, tt.max_delay_s);
        // a sender without the worker role may still process locally
        let mut candidates = instance.workers().to_vec();
        if !candidates.contains(&s) {
            candidates.push(s);
            candidates.sort_unstable();
        }
        for w in candidates {
            let node = &instance.nodes[w];
            let hz = node.compute_hz;
            let v_max = max_tasks(period, hz, c);
            if v_max < 1.0 {
                continue;
            }
            let compute_coef = tau * hz / c; // tau F / c
            let tag = format!("{k}_{w}");

            if w == s {
                if compute_coef < 1.0 {
                    continue;
                }
                let x = p.add_var(format!("x{tag}"), 0.0, 1.0, Integrality::Continuous);
                let v = p.add_var(format!("v{tag}"), 0.0, v_max, Integrality::Integer);
                let b = p.add_var(format!("b{tag}"), 0.0, 1.0, Integrality::Binary);
                floor_pair(&mut p, &tag, x, v, period * hz / c, options.floor_slack);
                p.add_constraint(format!("in{tag}"), vec![(x, 1.0), (b, -1.0)], Comparator::Le, 0.0);
                // (1 - B) + tau F / c X >= 1
                p.add_constraint(format!("ld{tag}"), vec![(b, 1.0), (x, -compute_coef)], Comparator::Le, 0.0);
                p.set_objective_coef(v, 1.0);
                pairs.push(PairVars { task_type: k, worker: w, medium: Medium::Local, x, v, b, y: None, u: Vec::new() });
                continue;
            }

            let medium = links.medium(s, w);
            let cap = match medium {
                Medium::Lte => instance.cap_lte_bps,
                Medium::V2v => instance.cap_v2v_bps,
                _ => continue,
            };
            if options.scope == PairScope::VerticalOnly && !node.is_edge() {
                continue;
            }
            let rate = links.rate(s, w);
            let tx_coef = tau * rate / d; // tau R / d
            let c1_coef = period * rate / d; // T R / d
            let grid_ok = alpha.iter().any(|a| a * compute_coef >= 1.0 && (1.0 - a) * tx_coef >= 1.0);
            if c1_coef < 1.0 || cap * period < d || !grid_ok {
                continue;
            }

            let x = p.add_var(format!("x{tag}"), 0.0, 1.0, Integrality::Continuous);
            let y = p.add_var(format!("y{tag}"), 0.0, 1.0, Integrality::Continuous);
            let v = p.add_var(format!("v{tag}"), 0.0, v_max, Integrality::Integer);
            let b = p.add_var(format!("b{tag}"), 0.0, 1.0, Integrality::Binary);
            let u: Vec<VarId> = (1..n_grid)
                .map(|n| p.add_var(format!("u{tag}_{n}"), 0.0, 1.0, Integrality::Binary))
                .collect();

            floor_pair(&mut p, &tag, x, v, period * hz / c, options.floor_slack);
            // C1 divided by d: V <= (T R / d) Y
            p.add_constraint(format!("c1{tag}"), vec![(v, 1.0), (y, -c1_coef)], Comparator::Le, 0.0);
            for (n, (&un, &a)) in u.iter().zip(&alpha).enumerate() {
                // (1 - U) <= alpha tau F / c X      <=>  U + alpha tau F / c X >= 1
                p.add_constraint(format!("gx{tag}_{}", n + 1), vec![(un, 1.0), (x, a * compute_coef)], Comparator::Ge, 1.0);
                // (1 - U) <= (1 - alpha) tau R / d Y
                p.add_constraint(format!("gy{tag}_{}", n + 1), vec![(un, 1.0), (y, (1.0 - a) * tx_coef)], Comparator::Ge, 1.0);
            }
            // sum U <= |grid| - I(X > 0)
            let mut sum: Vec<(VarId, f64)> = u.iter().map(|&un| (un, 1.0)).collect();
            sum.push((b, 1.0));
            p.add_constraint(format!("gs{tag}"), sum, Comparator::Le, alpha.len() as f64);
            p.add_constraint(format!("in{tag}"), vec![(x, 1.0), (b, -1.0)], Comparator::Le, 0.0);
            p.set_objective_coef(v, 1.0);
            pairs.push(PairVars { task_type: k, worker: w, medium, x, v, b, y: Some(y), u });
        }
    }

    // C6: compute budget per worker.
    let mut used: Vec<usize> = pairs.iter().map(|q| q.worker).collect();
    used.sort_unstable();
    used.dedup();
    for w in used {
        let terms: Vec<(VarId, f64)> = pairs.iter().filter(|q| q.worker == w).map(|q| (q.x, 1.0)).collect();
        if !terms.is_empty() {
            p.add_constraint(format!("c6_{w}"), terms, Comparator::Le, 1.0);
        }
    }
    // C7 / C8: transmit-time budget per distinct sender and medium.
    for s in instance.senders() {
        for (label, medium) in [("c7", Medium::Lte), ("c8", Medium::V2v)] {
            let terms: Vec<(VarId, f64)> = pairs
                .iter()
                .filter(|q| q.medium == medium && instance.sender_of(q.task_type) == s)
                .filter_map(|q| q.y.map(|y| (y, 1.0)))
                .collect();
            if !terms.is_empty() {
                p.add_constraint(format!("{label}_{s}"), terms, Comparator::Le, 1.0);
            }
        }
    }
    // C2 / C3: traffic caps, with V in place of the floor term.
    for (label, medium, cap) in [("c2", Medium::Lte, instance.cap_lte_bps), ("c3", Medium::V2v, instance.cap_v2v_bps)] {
        if !cap.is_finite() {
            continue;
        }
        let terms: Vec<(VarId, f64)> = pairs
            .iter()
            .filter(|q| q.medium == medium)
            .map(|q| (q.v, instance.task_types[q.task_type].data_bits))
            .collect();
        if terms.is_empty() {
            continue;
        }
        let scale = terms.iter().fold(0.0f64, |m, (_, d)| m.max(*d));
        let terms = terms.into_iter().map(|(v, d)| (v, d / scale)).collect();
        p.add_constraint(label, terms, Comparator::Le, cap * period / scale);
    }

    let artifacts = LinearizationArtifacts { pairs, alpha, grid_size: n_grid, floor_slack: options.floor_slack };
    Ok((p, artifacts))
}

fn floor_pair(p: &mut MilpProblem, tag: &str, x: VarId, v: VarId, coef: f64, slack: f64) {
    p.add_constraint(format!("fh{tag}"), vec![(v, 1.0), (x, -coef)], Comparator::Le, 0.0);
    p.add_constraint(format!("fl{tag}"), vec![(x, coef), (v, -1.0)], Comparator::Le, slack);
}
