//! Dense bounded-variable tableau simplex.
//!
//! Every row gets a slack with bounds encoding its comparator, so the
//! working system is `A x + s = b` with `lo <= (x, s) <= hi`. Nonbasic
//! columns rest at one of their bounds (or at zero when free). Rows whose
//! slack would start out of bounds receive an artificial column, which
//! phase one drives to zero.

use alloc::vec;
use alloc::vec::Vec;

use super::{Comparator, LpSolution, MilpError, MilpProblem, Sense, SolveStatus};
use crate::math::abs;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STALL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `B^-1 [A | I | art]`.
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    value: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.ncols..(i + 1) * self.ncols]
    }

    fn reprice(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
                for (dj, aij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let dj = self.d[j];
            let dir = match self.state[j] {
                ColState::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                ColState::AtLower if dj < -OPT_TOL => 1.0,
                ColState::AtUpper if dj > OPT_TOL => -1.0,
                ColState::FreeZero if abs(dj) > OPT_TOL => {
                    if dj < 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if abs(dj) > best_score {
                best_score = abs(dj);
                best = Some((j, dir));
            }
        }
        best
    }

    /// Returns `(step, leaving row)`; `None` row means a bound flip of the
    /// entering column. `None` overall means unbounded.
    fn ratio_test(&self, j: usize, dir: f64, bland: bool) -> Option<(f64, Option<usize>)> {
        let mut best_t = self.hi[j] - self.lo[j];
        let mut leave: Option<usize> = None;
        let mut best_alpha = 0.0;
        for i in 0..self.m {
            let alpha = dir * self.a[i * self.ncols + j];
            let q = self.basis[i];
            let limit = if alpha > PIVOT_TOL && self.lo[q].is_finite() {
                (self.beta[i] - self.lo[q]) / alpha
            } else if alpha < -PIVOT_TOL && self.hi[q].is_finite() {
                (self.hi[q] - self.beta[i]) / -alpha
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let better = match leave {
                _ if limit < best_t - 1e-12 => true,
                Some(r) if limit <= best_t + 1e-12 => {
                    if bland {
                        q < self.basis[r]
                    } else {
                        abs(alpha) > best_alpha
                    }
                }
                _ => false,
            };
            if better {
                best_t = limit;
                leave = Some(i);
                best_alpha = abs(alpha);
            }
        }
        if leave.is_none() && !best_t.is_finite() {
            None
        } else {
            Some((best_t, leave))
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let piv = self.a[r * n + j];
        for v in &mut self.a[r * n..(r + 1) * n] {
            *v /= piv;
        }
        let (before, rest) = self.a.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for row in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)) {
            let f = row[j];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (x, p) in self.d.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            self.d[j] = 0.0;
        }
    }

    fn run(&mut self) -> Result<Phase, MilpError> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(MilpError::Numeric("simplex iteration limit reached"));
            }
            let Some((j, dir)) = self.choose_entering(bland) else {
                return Ok(Phase::Optimal);
            };
            let Some((t, leave)) = self.ratio_test(j, dir, bland) else {
                return Ok(Phase::Unbounded);
            };
            self.iterations += 1;
            if t <= 1e-12 {
                degenerate += 1;
                if degenerate >= DEGENERATE_STALL {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            if t != 0.0 {
                for i in 0..self.m {
                    let aij = self.a[i * self.ncols + j];
                    if aij != 0.0 {
                        self.beta[i] -= dir * t * aij;
                    }
                }
            }
            let entering_value = self.value[j] + dir * t;
            match leave {
                None => {
                    // bound flip
                    if dir > 0.0 {
                        self.value[j] = self.hi[j];
                        self.state[j] = ColState::AtUpper;
                    } else {
                        self.value[j] = self.lo[j];
                        self.state[j] = ColState::AtLower;
                    }
                }
                Some(r) => {
                    let q = self.basis[r];
                    let alpha = dir * self.a[r * self.ncols + j];
                    if alpha > 0.0 {
                        self.value[q] = self.lo[q];
                        self.state[q] = ColState::AtLower;
                    } else {
                        self.value[q] = self.hi[q];
                        self.state[q] = ColState::AtUpper;
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = ColState::Basic;
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn column_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Basic => {
                let r = self.basis.iter().position(|&b| b == j).expect("basic column has a row");
                self.beta[r]
            }
            _ => self.value[j],
        }
    }
}

/// Solves the LP relaxation (integrality ignored) with default tolerances.
pub fn solve_lp(problem: &MilpProblem) -> Result<LpSolution, MilpError> {
    problem.validate()?;
    let (lo, hi): (Vec<f64>, Vec<f64>) = problem.variables.iter().map(|v| v.effective_bounds()).unzip();
    solve_with_bounds(problem, &lo, &hi, 1e-8)
}

/// LP relaxation with overridden variable bounds, as used by branch and bound.
pub(crate) fn solve_with_bounds(
    problem: &MilpProblem,
    lower: &[f64],
    upper: &[f64],
    feasibility_tol: f64,
) -> Result<LpSolution, MilpError> {
    let n = problem.variables.len();
    let infeasible = || LpSolution {
        status: SolveStatus::Infeasible,
        values: Vec::new(),
        objective_value: f64::NAN,
        iterations: 0,
    };
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Ok(infeasible());
    }

    // Dense scaled rows, skipping empty ones.
    let mut rows: Vec<(Vec<f64>, Comparator, f64)> = Vec::with_capacity(problem.constraints.len());
    for c in &problem.constraints {
        let mut dense = vec![0.0; n];
        for (v, a) in &c.terms {
            dense[v.0] += a;
        }
        let scale = dense.iter().fold(0.0f64, |m, a| m.max(abs(*a)));
        if scale == 0.0 {
            let ok = match c.cmp {
                Comparator::Le => 0.0 <= c.rhs + feasibility_tol,
                Comparator::Ge => 0.0 >= c.rhs - feasibility_tol,
                Comparator::Eq => abs(c.rhs) <= feasibility_tol,
            };
            if !ok {
                return Ok(infeasible());
            }
            continue;
        }
        for a in &mut dense {
            *a /= scale;
        }
        rows.push((dense, c.cmp, c.rhs / scale));
    }
    let m = rows.len();

    let mut lo = Vec::with_capacity(n + 2 * m);
    let mut hi = Vec::with_capacity(n + 2 * m);
    lo.extend_from_slice(lower);
    hi.extend_from_slice(upper);
    for (_, cmp, _) in &rows {
        let (l, h) = match cmp {
            Comparator::Le => (0.0, f64::INFINITY),
            Comparator::Ge => (f64::NEG_INFINITY, 0.0),
            Comparator::Eq => (0.0, 0.0),
        };
        lo.push(l);
        hi.push(h);
    }

    let initial = |l: f64, h: f64| -> (f64, ColState) {
        if l.is_finite() {
            (l, ColState::AtLower)
        } else if h.is_finite() {
            (h, ColState::AtUpper)
        } else {
            (0.0, ColState::FreeZero)
        }
    };
    let mut value = Vec::with_capacity(n + 2 * m);
    let mut state = Vec::with_capacity(n + 2 * m);
    for j in 0..n + m {
        let (v, s) = initial(lo[j], hi[j]);
        value.push(v);
        state.push(s);
    }

    // Decide, row by row, whether the slack can start basic.
    let mut art_rows = Vec::new();
    let mut beta = vec![0.0; m];
    let mut sign = vec![1.0; m];
    let mut basis = vec![0usize; m];
    for (i, (dense, _, b)) in rows.iter().enumerate() {
        let activity: f64 = dense.iter().zip(&value[..n]).map(|(a, x)| a * x).sum();
        let s = b - activity;
        let (sl, sh) = (lo[n + i], hi[n + i]);
        if s >= sl - feasibility_tol && s <= sh + feasibility_tol {
            basis[i] = n + i;
            state[n + i] = ColState::Basic;
            beta[i] = s;
        } else {
            let bound = if s < sl { sl } else { sh };
            value[n + i] = bound;
            state[n + i] = if bound == sl { ColState::AtLower } else { ColState::AtUpper };
            let r = s - bound;
            sign[i] = if r >= 0.0 { 1.0 } else { -1.0 };
            beta[i] = abs(r);
            art_rows.push(i);
        }
    }
    let first_art = n + m;
    let ncols = n + m + art_rows.len();
    for (k, &i) in art_rows.iter().enumerate() {
        lo.push(0.0);
        hi.push(f64::INFINITY);
        value.push(0.0);
        state.push(ColState::Basic);
        basis[i] = first_art + k;
    }

    let mut a = vec![0.0; m * ncols];
    for (i, (dense, _, _)) in rows.iter().enumerate() {
        let row = &mut a[i * ncols..(i + 1) * ncols];
        let sg = sign[i];
        for (dst, src) in row[..n].iter_mut().zip(dense) {
            *dst = sg * src;
        }
        row[n + i] = sg;
    }
    for (k, &i) in art_rows.iter().enumerate() {
        a[i * ncols + first_art + k] = 1.0;
    }

    let mut tab = Tableau {
        m,
        ncols,
        a,
        beta,
        basis,
        state,
        value,
        lo,
        hi,
        cost: vec![0.0; ncols],
        d: vec![0.0; ncols],
        iterations: 0,
        max_iterations: 50 * (ncols + m) + 1000,
    };

    if !art_rows.is_empty() {
        for j in first_art..ncols {
            tab.cost[j] = 1.0;
        }
        tab.reprice();
        tab.run()?;
        let infeasibility: f64 = (first_art..ncols).map(|j| tab.column_value(j)).sum();
        if infeasibility > PHASE1_TOL {
            return Ok(LpSolution { iterations: tab.iterations, ..infeasible() });
        }
        for j in first_art..ncols {
            tab.hi[j] = 0.0;
            tab.cost[j] = 0.0;
            if tab.state[j] != ColState::Basic {
                tab.value[j] = 0.0;
                tab.state[j] = ColState::AtLower;
            }
        }
        // Pivot remaining (zero-valued) artificials out where possible.
        for r in 0..m {
            if tab.basis[r] < first_art {
                continue;
            }
            let row = tab.row(r);
            let pick = (0..first_art)
                .filter(|&j| tab.state[j] != ColState::Basic)
                .max_by(|&x, &y| abs(row[x]).total_cmp(&abs(row[y])).then(y.cmp(&x)));
            if let Some(j) = pick {
                if abs(row[j]) > 1e-7 {
                    let q = tab.basis[r];
                    let entering_value = tab.value[j];
                    tab.value[q] = 0.0;
                    tab.state[q] = ColState::AtLower;
                    tab.pivot(r, j);
                    tab.basis[r] = j;
                    tab.state[j] = ColState::Basic;
                    tab.beta[r] = entering_value;
                }
            }
        }
    }

    let flip = match problem.objective.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };
    for c in tab.cost.iter_mut() {
        *c = 0.0;
    }
    for (v, coef) in &problem.objective.terms {
        tab.cost[v.0] += flip * coef;
    }
    tab.reprice();
    if let Phase::Unbounded = tab.run()? {
        return Ok(LpSolution {
            status: SolveStatus::Unbounded,
            values: Vec::new(),
            objective_value: if flip < 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
            iterations: tab.iterations,
        });
    }

    let mut values = tab.value[..n].to_vec();
    for (r, &q) in tab.basis.iter().enumerate() {
        if q < n {
            values[q] = tab.beta[r];
        }
    }
    // Snap values that sit within tolerance of a bound.
    for j in 0..n {
        if values[j] < lower[j] && values[j] > lower[j] - feasibility_tol {
            values[j] = lower[j];
        }
        if values[j] > upper[j] && values[j] < upper[j] + feasibility_tol {
            values[j] = upper[j];
        }
    }

    let residual = max_row_violation(problem, &values);
    let bound_violation = values
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (l, u))| (l - x).max(x - u))
        .fold(0.0f64, f64::max);
    if residual > 1e-6 || bound_violation > 1e-6 || values.iter().any(|v| !v.is_finite()) {
        return Err(MilpError::Numeric("solution fails residual check"));
    }

    Ok(LpSolution {
        status: SolveStatus::Optimal,
        objective_value: problem.objective_value(&values),
        values,
        iterations: tab.iterations,
    })
}

fn max_row_violation(problem: &MilpProblem, values: &[f64]) -> f64 {
    problem
        .constraints
        .iter()
        .map(|c| {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[v.0]).sum();
            let scale = 1.0 + abs(c.rhs) + c.terms.iter().map(|(v, a)| abs(a * values[v.0])).sum::<f64>();
            let viol = match c.cmp {
                Comparator::Le => lhs - c.rhs,
                Comparator::Ge => c.rhs - lhs,
                Comparator::Eq => abs(lhs - c.rhs),
            };
            viol / scale
        })
        .fold(0.0, f64::max)
}
