//! Depth-first branch and bound.
//!
//! Branches on the most fractional integer variable (lowest index on ties)
//! and explores the child nearer to the fractional value first. Nodes whose
//! relaxation bound cannot beat the incumbent are pruned; when the objective
//! is integral on every integer point the bound is rounded down first.

use alloc::vec::Vec;

use super::simplex::solve_with_bounds;
use super::{MilpError, MilpOptions, MilpProblem, MilpSolution, Sense, SolveStatus};
use crate::math::{abs, ceil, floor, round};

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Relaxation bound of the parent, in maximization form.
    parent_bound: f64,
}

/// Solves `problem` to optimality within `options`, or stops at the node
/// limit with the best incumbent found so far.
pub fn solve_milp(problem: &MilpProblem, options: &MilpOptions) -> Result<MilpSolution, MilpError> {
    problem.validate()?;
    if problem.variables.is_empty() {
        return Err(MilpError::Empty);
    }
    // Work internally in maximization form.
    let flip = match problem.objective.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let integral_objective = problem.objective.terms.iter().all(|(v, a)| {
        problem.variables[v.0].is_integer() && abs(*a - round(*a)) == 0.0
    });

    let (mut lower, mut upper): (Vec<f64>, Vec<f64>) =
        problem.variables.iter().map(|v| v.effective_bounds()).unzip();
    for (j, v) in problem.variables.iter().enumerate() {
        if v.is_integer() {
            lower[j] = ceil(lower[j] - options.integrality_tol);
            upper[j] = floor(upper[j] + options.integrality_tol);
        }
    }

    let mut stack = Vec::new();
    stack.push(Node { lower, upper, parent_bound: f64::INFINITY });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut root_bound = None;
    let mut nodes = 0usize;

    let prunable = |bound: f64, incumbent: &Option<(f64, Vec<f64>)>| -> bool {
        let Some((best, _)) = incumbent else { return false };
        let bound = if integral_objective { floor(bound + 1e-6) } else { bound };
        let slack = options.gap_tol * best.abs().max(1.0);
        bound <= best + slack + 1e-9
    };

    while let Some(node) = stack.pop() {
        if prunable(node.parent_bound, &incumbent) {
            continue;
        }
        if nodes >= options.node_limit {
            stack.push(node);
            break;
        }
        nodes += 1;
        let lp = solve_with_bounds(problem, &node.lower, &node.upper, options.feasibility_tol)?;
        match lp.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if nodes == 1 {
                    return Ok(MilpSolution {
                        status: SolveStatus::Unbounded,
                        values: Vec::new(),
                        objective_value: flip * f64::INFINITY,
                        gap: f64::INFINITY,
                        nodes_explored: nodes,
                        root_bound: None,
                    });
                }
                return Err(MilpError::Numeric("unbounded relaxation below a bounded root"));
            }
            _ => unreachable!("LP solves end optimal, infeasible or unbounded"),
        }
        let bound = flip * lp.objective_value;
        if nodes == 1 {
            root_bound = Some(lp.objective_value);
        }
        if prunable(bound, &incumbent) {
            continue;
        }

        let mut branch_on: Option<(usize, f64)> = None;
        let mut best_frac = options.integrality_tol;
        for (j, v) in problem.variables.iter().enumerate() {
            if !v.is_integer() {
                continue;
            }
            let x = lp.values[j];
            let frac = abs(x - round(x));
            if frac > best_frac + 1e-12 {
                best_frac = frac;
                branch_on = Some((j, x));
            }
        }

        match branch_on {
            None => {
                let values = polish(problem, &node, &lp.values, options)?;
                let value = flip * problem.objective_value(&values);
                if incumbent.as_ref().is_none_or(|(best, _)| value > *best + 1e-9) {
                    incumbent = Some((value, values));
                }
            }
            Some((j, x)) => {
                let mut down = Node { lower: node.lower.clone(), upper: node.upper.clone(), parent_bound: bound };
                down.upper[j] = floor(x);
                let mut up = Node { lower: node.lower, upper: node.upper, parent_bound: bound };
                up.lower[j] = ceil(x);
                // pushed last is explored first
                if x - floor(x) >= 0.5 {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }

    let open_bound = stack
        .iter()
        .filter(|n| !prunable(n.parent_bound, &incumbent))
        .map(|n| n.parent_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let exhausted = open_bound == f64::NEG_INFINITY;

    let Some((best, values)) = incumbent else {
        let status = if exhausted { SolveStatus::Infeasible } else { SolveStatus::NodeLimit };
        return Ok(MilpSolution {
            status,
            values: Vec::new(),
            objective_value: f64::NAN,
            gap: f64::INFINITY,
            nodes_explored: nodes,
            root_bound,
        });
    };
    let (status, gap) = if exhausted {
        (SolveStatus::Optimal, 0.0)
    } else {
        let gap = (open_bound - best).max(0.0) / best.abs().max(1.0);
        if gap <= options.gap_tol {
            (SolveStatus::GapLimit, gap)
        } else {
            (SolveStatus::NodeLimit, gap)
        }
    };
    Ok(MilpSolution {
        status,
        objective_value: flip * best,
        values,
        gap,
        nodes_explored: nodes,
        root_bound,
    })
}

/// Fixes integer variables at their rounded values and re-solves for the
/// continuous ones, so the incumbent is exactly integral.
fn polish(problem: &MilpProblem, node: &Node, values: &[f64], options: &MilpOptions) -> Result<Vec<f64>, MilpError> {
    let mut lower = node.lower.clone();
    let mut upper = node.upper.clone();
    let mut any_continuous = false;
    for (j, v) in problem.variables.iter().enumerate() {
        if v.is_integer() {
            let r = round(values[j]);
            lower[j] = r;
            upper[j] = r;
        } else {
            any_continuous = true;
        }
    }
    if !any_continuous {
        return Ok(lower);
    }
    let lp = solve_with_bounds(problem, &lower, &upper, options.feasibility_tol)?;
    if lp.status == SolveStatus::Optimal {
        Ok(lp.values)
    } else {
        let mut v = values.to_vec();
        for (j, var) in problem.variables.iter().enumerate() {
            if var.is_integer() {
                v[j] = round(v[j]);
            }
        }
        Ok(v)
    }
}
