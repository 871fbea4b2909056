//! Dense two-phase tableau simplex for `min c·x  s.t.  A x = b, x ≥ 0`.
//!
//! Pricing is Dantzig's rule. Long runs of degenerate pivots switch to
//! Bland's rule (lowest-index entering column, lowest-index leaving basic
//! variable among ratio ties), which cannot cycle in exact arithmetic. An
//! iteration cap turns floating-point stalling into an error.
//!
//! The tableau is rebuilt from the original rows and the current basis with
//! an LU factorization every few pivots and before optimality is declared,
//! so rounding error does not compound across long degenerate runs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const DEGENERATE_RUN_LIMIT: usize = 50;
const REFACTOR_INTERVAL: usize = 200;
// largest constraint residual accepted in a returned solution
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Reduced costs above `-cost_tol` count as nonnegative.
    pub cost_tol: f64,
    /// Smallest admissible pivot magnitude. Tableau entries below this are
    /// treated as rounding noise.
    pub pivot_tol: f64,
    /// Largest phase-one residual still treated as feasible.
    pub feasibility_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            cost_tol: 1e-9,
            pivot_tol: 1e-7,
            feasibility_tol: 1e-9,
            max_iterations: 200_000,
        }
    }
}

/// One equality row in sparse form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    width: usize,
    // rows × width over the structural columns; the last column is the
    // right-hand side. Artificial variables (indices ≥ width - 1) only ever
    // leave the basis, so they get no column.
    cells: Vec<f64>,
    // reduced costs; last entry is minus the objective value
    cost: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    // sign-normalized input columns and right-hand side
    columns: Vec<Vec<(usize, f64)>>,
    rhs_in: Vec<f64>,
    // pivots since the tableau was last rebuilt
    since_refactor: usize,
    // objective of the current phase, artificials included
    phase_cost: Vec<f64>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, c);
        for v in &mut self.cells[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.cells[r * w + c] = 1.0;
        let pivot_row: Vec<(usize, f64)> = self.cells[r * w..(r + 1) * w]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let factor = self.cells[i * w + c];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.cells[i * w..(i + 1) * w];
            for &(j, p) in &pivot_row {
                row[j] -= factor * p;
            }
            row[c] = 0.0;
        }
        let factor = self.cost[c];
        if factor != 0.0 {
            for &(j, p) in &pivot_row {
                self.cost[j] -= factor * p;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.since_refactor += 1;
    }

    /// Recomputes reduced costs from `phase_cost` and the current rows.
    fn price(&mut self) {
        let w = self.width;
        let mut cost = self.phase_cost[..w - 1].to_vec();
        cost.push(0.0);
        for r in 0..self.rows {
            let cb = self.phase_cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for (v, t) in cost.iter_mut().zip(&self.cells[r * w..(r + 1) * w]) {
                *v -= cb * t;
            }
        }
        for &b in &self.basis {
            if b < w - 1 {
                cost[b] = 0.0;
            }
        }
        self.cost = cost;
    }

    /// Replaces the tableau by `B⁻¹ [A | b]` for the current basis `B`.
    /// Leaves it untouched and returns false when the basis is numerically
    /// singular.
    fn refactor(&mut self) -> bool {
        let (m, w) = (self.rows, self.width);
        let n = self.columns.len();
        if m == 0 {
            return true;
        }
        let mut basis_matrix = DMatrix::zeros(m, m);
        for (k, &var) in self.basis.iter().enumerate() {
            if var < n {
                for &(i, a) in &self.columns[var] {
                    basis_matrix[(i, k)] = a;
                }
            } else {
                basis_matrix[(var - n, k)] = 1.0;
            }
        }
        let Some(inv) = basis_matrix.try_inverse() else {
            return false;
        };
        if inv.iter().any(|v| !v.is_finite()) {
            return false;
        }
        self.cells.fill(0.0);
        for (j, column) in self.columns.iter().enumerate() {
            for &(i, a) in column {
                for (r, v) in inv.column(i).iter().enumerate() {
                    self.cells[r * w + j] += v * a;
                }
            }
        }
        for (i, &b) in self.rhs_in.iter().enumerate() {
            for (r, v) in inv.column(i).iter().enumerate() {
                self.cells[r * w + w - 1] += v * b;
            }
        }
        for r in 0..m {
            for (k, &other) in self.basis.iter().enumerate() {
                if other < n {
                    self.cells[r * w + other] = if k == r { 1.0 } else { 0.0 };
                }
            }
        }
        self.price();
        self.since_refactor = 0;
        true
    }

    /// Pivots over columns `0..allowed` until optimal or until the objective
    /// reaches `target`. Entering columns are chosen by most negative reduced
    /// cost; after a run of degenerate pivots the rule switches to Bland until
    /// the objective moves again.
    fn optimize(&mut self, allowed: usize, target: f64, opts: &SimplexOptions) -> Result<()> {
        let mut degenerate_run = 0usize;
        loop {
            if self.since_refactor >= REFACTOR_INTERVAL {
                self.refactor();
                self.since_refactor = 0;
            }
            if -self.cost[self.width - 1] <= target {
                return Ok(());
            }
            let bland = degenerate_run >= DEGENERATE_RUN_LIMIT;
            let entering = if bland {
                (0..allowed).find(|&j| self.cost[j] < -opts.cost_tol)
            } else {
                (0..allowed)
                    .filter(|&j| self.cost[j] < -opts.cost_tol)
                    .min_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]))
            };
            let Some(c) = entering else {
                if self.since_refactor == 0 {
                    return Ok(());
                }
                // confirm optimality on a fresh tableau
                if !self.refactor() {
                    return Ok(());
                }
                continue;
            };
            let Some((r, ratio)) = self.leaving_row(c, bland, opts) else {
                return Err(Error::SolverFailure("objective is unbounded below".into()));
            };
            self.iterations += 1;
            if self.iterations > opts.max_iterations {
                return Err(Error::SolverFailure(format!(
                    "no convergence after {} pivots",
                    opts.max_iterations
                )));
            }
            if ratio <= opts.pivot_tol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }

    /// Two-pass ratio test: the first pass bounds the step with every
    /// right-hand side relaxed (by the feasibility tolerance outside Bland
    /// mode), the second picks among rows within that bound the largest pivot
    /// (or, under Bland, the lowest basic index).
    fn leaving_row(&self, c: usize, bland: bool, opts: &SimplexOptions) -> Option<(usize, f64)> {
        let relax = if bland { 1e-12 } else { opts.feasibility_tol };
        let bound = (0..self.rows)
            .filter(|&r| self.at(r, c) > opts.pivot_tol)
            .map(|r| (self.rhs(r).max(0.0) + relax) / self.at(r, c))
            .fold(f64::INFINITY, f64::min);
        if bound == f64::INFINITY {
            return None;
        }
        let mut best: Option<usize> = None;
        for r in 0..self.rows {
            let a = self.at(r, c);
            if a <= opts.pivot_tol || self.rhs(r).max(0.0) / a > bound {
                continue;
            }
            best = match best {
                Some(b) if bland && self.basis[b] < self.basis[r] => Some(b),
                Some(b) if !bland && self.at(b, c) >= a => Some(b),
                _ => Some(r),
            };
        }
        best.map(|r| (r, self.rhs(r).max(0.0) / self.at(r, c)))
    }
}

/// Solves `min objective·x` subject to the equality rows and `x ≥ 0`.
///
/// Returns [`Error::Infeasible`] when phase one cannot reach zero and
/// [`Error::SolverFailure`] on unboundedness or when the pivot cap is hit.
pub fn solve(objective: &[f64], rows: &[SparseRow], opts: &SimplexOptions) -> Result<LpSolution> {
    let n = objective.len();
    let m = rows.len();
    let width = n + 1;
    let mut cells = vec![0.0; m * width];
    for (i, row) in rows.iter().enumerate() {
        let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        for &(j, a) in &row.coeffs {
            if j >= n {
                return Err(Error::SolverFailure(format!(
                    "row {i} references column {j} of {n}"
                )));
            }
            cells[i * width + j] += sign * a;
        }
        cells[i * width + width - 1] = sign * row.rhs;
    }

    // phase one: minimize the sum of artificials
    let mut phase_cost = vec![0.0; n + m];
    phase_cost[n..].fill(1.0);
    let mut columns = vec![Vec::new(); n];
    for i in 0..m {
        for (j, column) in columns.iter_mut().enumerate() {
            let a = cells[i * width + j];
            if a != 0.0 {
                column.push((i, a));
            }
        }
    }
    let rhs_in = (0..m).map(|i| cells[i * width + width - 1]).collect();
    let mut t = Tableau {
        rows: m,
        width,
        columns,
        rhs_in,
        since_refactor: 0,
        cells,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        iterations: 0,
        phase_cost,
    };
    t.price();
    let scale = rows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
    t.optimize(n, opts.feasibility_tol * scale, opts)?;
    if t.since_refactor > 0 {
        t.refactor();
    }

    let infeasibility = -t.cost[width - 1];
    if infeasibility > opts.feasibility_tol * scale {
        return Err(Error::Infeasible);
    }

    // drive artificials out of the basis; where that is impossible the row is
    // redundant and its artificial stays basic at zero, never to move again
    for r in 0..t.rows {
        if t.basis[r] >= n {
            let best = (0..n)
                .filter(|&j| t.at(r, j).abs() > opts.pivot_tol)
                .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
            if let Some(c) = best {
                t.pivot(r, c);
            }
        }
    }

    // phase two
    t.phase_cost[..n].copy_from_slice(objective);
    t.phase_cost[n..].fill(0.0);
    if t.since_refactor > 0 {
        t.refactor();
    }
    t.price();
    t.optimize(n, f64::NEG_INFINITY, opts)?;

    let mut x = vec![0.0; n];
    for r in 0..t.rows {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    let residual = rows
        .iter()
        .map(|row| (row.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - row.rhs).abs())
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::SolverFailure(format!(
            "final basis violates the constraints by {residual:e}"
        )));
    }
    let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        value,
        iterations: t.iterations,
    })
}
