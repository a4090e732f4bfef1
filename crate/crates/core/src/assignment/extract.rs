use super::{Assignment, AssignmentError, LinearizationArtifacts};
use crate::math::{abs, round};
use crate::milp::{MilpSolution, SolveStatus};
use crate::model::{Medium, ValidatedInstance};

/// Shares below this are treated as exactly zero.
const SHARE_EPS: f64 = 1e-12;

fn clamp_share(x: f64) -> f64 {
    if x < SHARE_EPS {
        0.0
    } else {
        x.min(1.0)
    }
}

/// Reads shares out of a solver result and recomputes the task counts.
///
/// `M_{k,w}` is always the recomputed `floor(T F x / c)`, never the raw
/// `V_{k,w}`: the floor linearization tolerates `V` one above the true
/// floor when the fractional part exceeds the slack, and the assignment
/// must not promise a task the worker cannot finish.
pub fn extract_assignment(
    instance: &ValidatedInstance,
    solution: &MilpSolution,
    artifacts: &LinearizationArtifacts,
) -> Result<Assignment, AssignmentError> {
    let usable = matches!(
        solution.status,
        SolveStatus::Optimal | SolveStatus::GapLimit | SolveStatus::NodeLimit
    ) && solution.has_incumbent();
    if !usable {
        return Err(AssignmentError::NoIncumbent(solution.status));
    }
    let values = &solution.values;
    let mut out = Assignment::zeros(instance.num_task_types(), instance.nodes.len());
    for pair in &artifacts.pairs {
        let (k, w) = (pair.task_type, pair.worker);
        if round(values[pair.b.0]) == 0.0 {
            continue;
        }
        out.x[k][w] = clamp_share(values[pair.x.0]);
        if let Some(y) = pair.y {
            let y = clamp_share(values[y.0]);
            match pair.medium {
                Medium::Lte => out.y_lte[k][w] = y,
                Medium::V2v => out.y_v2v[k][w] = y,
                _ => {}
            }
        }
    }
    out.recompute_tasks(instance);

    let recomputed = out.total_tasks();
    let slack = (instance.num_task_types() * instance.workers().len()) as f64;
    if abs(recomputed as f64 - solution.objective_value) > slack {
        return Err(AssignmentError::Inconsistent { recomputed, objective: solution.objective_value });
    }
    Ok(out)
}
