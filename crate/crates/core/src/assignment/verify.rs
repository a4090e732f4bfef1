//! Re-checks an assignment against the original nonlinear constraints: the
//! true floor in task counts and the true delay sum `d/(R y) + c/(F x)`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{tasks_for_share, Assignment};
use crate::model::{Medium, ValidatedInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintFamily {
    /// `M = floor(T F x / c)` and `L = sum M`.
    TaskCounts,
    /// Shares only on existing links of the matching medium.
    MediumConsistency,
    /// C1: `d M <= T R y`.
    Rate,
    /// C2: LTE traffic cap.
    LteCap,
    /// C3: V2V traffic cap.
    V2vCap,
    /// C4: delay over V2V.
    V2vDelay,
    /// C5: delay over LTE.
    LteDelay,
    /// Compute-only delay of self-processed tasks.
    LocalDelay,
    /// C6: compute shares per worker.
    ComputeBudget,
    /// C7: LTE time shares per sender.
    LteBudget,
    /// C8: V2V time shares per sender.
    V2vBudget,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 11] = [
        ConstraintFamily::TaskCounts,
        ConstraintFamily::MediumConsistency,
        ConstraintFamily::Rate,
        ConstraintFamily::LteCap,
        ConstraintFamily::V2vCap,
        ConstraintFamily::V2vDelay,
        ConstraintFamily::LteDelay,
        ConstraintFamily::LocalDelay,
        ConstraintFamily::ComputeBudget,
        ConstraintFamily::LteBudget,
        ConstraintFamily::V2vBudget,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ConstraintFamily::TaskCounts => "task_counts",
            ConstraintFamily::MediumConsistency => "medium",
            ConstraintFamily::Rate => "C1_rate",
            ConstraintFamily::LteCap => "C2_lte_cap",
            ConstraintFamily::V2vCap => "C3_v2v_cap",
            ConstraintFamily::V2vDelay => "C4_v2v_delay",
            ConstraintFamily::LteDelay => "C5_lte_delay",
            ConstraintFamily::LocalDelay => "local_delay",
            ConstraintFamily::ComputeBudget => "C6_compute",
            ConstraintFamily::LteBudget => "C7_lte_time",
            ConstraintFamily::V2vBudget => "C8_v2v_time",
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            ConstraintFamily::ComputeBudget | ConstraintFamily::LteBudget | ConstraintFamily::V2vBudget => 1e-8,
            ConstraintFamily::V2vDelay | ConstraintFamily::LteDelay | ConstraintFamily::LocalDelay => 1e-9,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: ConstraintFamily,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `rhs - lhs` seen, in the family's natural unit (seconds for
    /// delays, shares for budgets, bits for traffic). Negative when violated.
    pub worst_slack: f64,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn worst_violation(&self) -> f64 {
        (-self.worst_slack).max(0.0)
    }

    fn record(&mut self, slack: f64) {
        self.checked += 1;
        if slack < self.worst_slack || slack.is_nan() {
            self.worst_slack = slack;
        }
        // NaN slack counts as a violation
        if slack.is_nan() || slack < -self.family.tolerance() {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub families: Vec<FamilyReport>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(FamilyReport::passed)
    }

    pub fn family(&self, family: ConstraintFamily) -> &FamilyReport {
        self.families.iter().find(|f| f.family == family).expect("every family is reported")
    }

    pub fn failures(&self) -> impl Iterator<Item = &FamilyReport> {
        self.families.iter().filter(|f| !f.passed())
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.families {
            writeln!(
                f,
                "{:<14} {:<4} checked={:<5} violations={:<5} worst_slack={:e}",
                r.family.label(),
                if r.passed() { "ok" } else { "FAIL" },
                r.checked,
                r.violations,
                r.worst_slack
            )?;
        }
        Ok(())
    }
}

/// Checks every constraint family of the assignment problem in its
/// original form. Never fails; violations are carried in the report.
pub fn verify_assignment(instance: &ValidatedInstance, assignment: &Assignment) -> VerificationReport {
    let mut reports: Vec<FamilyReport> = ConstraintFamily::ALL
        .iter()
        .map(|&family| FamilyReport { family, checked: 0, violations: 0, worst_slack: f64::INFINITY })
        .collect();
    let idx = |f: ConstraintFamily| ConstraintFamily::ALL.iter().position(|&g| g == f).unwrap();
    let mut rec = |f: ConstraintFamily, slack: f64| reports[idx(f)].record(slack);

    let n = instance.nodes.len();
    let kk = instance.num_task_types();
    if !assignment.has_shape(kk, n) {
        rec(ConstraintFamily::TaskCounts, f64::NEG_INFINITY);
        return VerificationReport { families: reports };
    }
    let period = instance.period_s;
    let links = &instance.links;
    let mut lte_bits = 0.0;
    let mut v2v_bits = 0.0;

    for (k, tt) in instance.task_types.iter().enumerate() {
        let s = instance.sender_of(k);
        let (d, c, tau) = (tt.data_bits, tt.compute_cycles, tt.max_delay_s);
        let mut total = 0u64;
        for w in 0..n {
            let node = &instance.nodes[w];
            let x = assignment.x[k][w];
            let m = assignment.tasks[k][w];
            total += m as u64;
            let expect = tasks_for_share(period, node.compute_hz, x, c);
            rec(ConstraintFamily::TaskCounts, if expect == m { 0.0 } else { -1.0 });

            let y_lte = assignment.y_lte[k][w];
            let y_v2v = assignment.y_v2v[k][w];
            let medium = links.medium(s, w);
            let shares_ok = (0.0..=1.0).contains(&x)
                && (y_lte == 0.0 || medium == Medium::Lte)
                && (y_v2v == 0.0 || medium == Medium::V2v)
                && y_lte >= 0.0
                && y_v2v >= 0.0
                && (x == 0.0 || node.roles.worker || w == s);
            rec(ConstraintFamily::MediumConsistency, if shares_ok { 0.0 } else { -1.0 });

            if x <= 0.0 && m == 0 {
                continue;
            }
            let compute_delay = if x > 0.0 && node.compute_hz > 0.0 { c / (node.compute_hz * x) } else { f64::INFINITY };
            if w == s {
                rec(ConstraintFamily::LocalDelay, tau - compute_delay);
                continue;
            }
            let (family, y) = match medium {
                Medium::V2v => (ConstraintFamily::V2vDelay, y_v2v),
                Medium::Lte => (ConstraintFamily::LteDelay, y_lte),
                _ => {
                    // work placed on an unreachable worker
                    rec(ConstraintFamily::MediumConsistency, -1.0);
                    continue;
                }
            };
            let rate = links.rate(s, w);
            let tx_delay = if y > 0.0 { d / (rate * y) } else { f64::INFINITY };
            if x > 0.0 {
                rec(family, tau - (tx_delay + compute_delay));
            }
            let budget = period * rate * y;
            let used = d * m as f64;
            let slack = budget - used;
            rec(ConstraintFamily::Rate, if slack >= -1e-9 * budget.max(1.0) { slack.max(0.0) } else { slack });
            match medium {
                Medium::Lte => lte_bits += used,
                _ => v2v_bits += used,
            }
        }
        rec(
            ConstraintFamily::TaskCounts,
            if total == assignment.totals[k] as u64 { 0.0 } else { -1.0 },
        );
    }

    rec(ConstraintFamily::LteCap, instance.cap_lte_bps * period - lte_bits);
    rec(ConstraintFamily::V2vCap, instance.cap_v2v_bps * period - v2v_bits);

    for w in 0..n {
        let used: f64 = (0..kk).map(|k| assignment.x[k][w]).sum();
        if instance.nodes[w].roles.worker || used > 0.0 {
            rec(ConstraintFamily::ComputeBudget, 1.0 - used);
        }
    }
    for s in instance.senders() {
        let mine: Vec<usize> = (0..kk).filter(|&k| instance.sender_of(k) == s).collect();
        let lte: f64 = mine.iter().map(|&k| assignment.y_lte[k].iter().sum::<f64>()).sum();
        let v2v: f64 = mine.iter().map(|&k| assignment.y_v2v[k].iter().sum::<f64>()).sum();
        rec(ConstraintFamily::LteBudget, 1.0 - lte);
        rec(ConstraintFamily::V2vBudget, 1.0 - v2v);
    }

    VerificationReport { families: reports }
}
