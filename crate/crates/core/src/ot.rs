//! Exact finite optimal transport between two distributions.
//!
//! Small problems (both sides ≤ 3 symbols) are solved by enumerating every
//! vertex of the transport polytope, i.e. every spanning tree of the
//! bipartite support graph that carries a nonnegative flow. Larger ones go
//! through the dense Bland simplex. Neither route knows anything about the
//! structure of the cost matrix.

use crate::error::{Error, Result};
use crate::measure::Dist;
use crate::simplex::{self, SimplexOptions, SparseRow};

const FLOW_TOL: f64 = 1e-12;
const VALUE_TIE_TOL: f64 = 1e-12;
const MAX_ENUMERATED_SUBSETS: u128 = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} cost entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("non-finite cost {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self::new(rows, cols, data)
    }

    /// `scale · 1{i ≠ j}`.
    pub fn discrete_metric(size: usize, scale: f64) -> Self {
        Self::from_fn(size, size, |i, j| if i == j { 0.0 } else { scale }).expect("finite scale")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Optimal value together with a row-major plan.
#[derive(Debug, Clone, PartialEq)]
pub struct OtSolution {
    pub value: f64,
    pub plan: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl OtSolution {
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }
}

/// A generic exact solver for finite transport subproblems.
pub trait OtSolver {
    fn solve(&self, p: &Dist, q: &Dist, cost: &CostMatrix) -> Result<OtSolution>;
}

/// Vertex enumeration up to 3×3, simplex beyond.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactOt;

/// Exhaustive vertex enumeration at any size (combinatorial cost).
#[derive(Debug, Clone, Copy, Default)]
pub struct VertexEnumeration;

/// Dense two-phase simplex with Bland's rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexOt;

impl OtSolver for ExactOt {
    fn solve(&self, p: &Dist, q: &Dist, cost: &CostMatrix) -> Result<OtSolution> {
        if p.len() <= 3 && q.len() <= 3 {
            VertexEnumeration.solve(p, q, cost)
        } else {
            SimplexOt.solve(p, q, cost)
        }
    }
}

/// Exact optimal transport value and plan between `p` and `q`.
pub fn solve_discrete_ot(p: &Dist, q: &Dist, cost: &CostMatrix) -> Result<OtSolution> {
    ExactOt.solve(p, q, cost)
}

fn check_dims(p: &Dist, q: &Dist, cost: &CostMatrix) -> Result<()> {
    if cost.rows != p.len() || cost.cols != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "cost is {}x{}, marginals have {} and {} symbols",
            cost.rows,
            cost.cols,
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1, |acc, i| acc * (n as u128 - i) / (i + 1))
}

impl OtSolver for VertexEnumeration {
    fn solve(&self, p: &Dist, q: &Dist, cost: &CostMatrix) -> Result<OtSolution> {
        check_dims(p, q, cost)?;
        let (m, n) = (p.len(), q.len());
        let cells = m * n;
        let k = m + n - 1;
        if binomial(cells, k) > MAX_ENUMERATED_SUBSETS {
            return Err(Error::SolverFailure(format!(
                "{m}x{n} is too large for vertex enumeration"
            )));
        }

        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            if let Some(plan) = tree_flow(&subset, p.weights(), q.weights(), n) {
                let value: f64 = plan.iter().zip(&cost.data).map(|(x, c)| x * c).sum();
                let diag: f64 = (0..m.min(n)).map(|i| plan[i * n + i]).sum();
                let better = match &best {
                    None => true,
                    Some((bv, bd, _)) => {
                        value < bv - VALUE_TIE_TOL
                            || (value - bv).abs() <= VALUE_TIE_TOL && diag > bd + FLOW_TOL
                    }
                };
                if better {
                    best = Some((value, diag, plan));
                }
            }
            if !next_combination(&mut subset, cells) {
                break;
            }
        }
        let (value, _, plan) = best.ok_or_else(|| {
            Error::SolverFailure(
                "transport polytope has no vertex (marginals differ in mass)".into(),
            )
        })?;
        Ok(OtSolution {
            value,
            plan,
            rows: m,
            cols: n,
        })
    }
}

fn next_combination(subset: &mut [usize], universe: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < universe - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Flow on the spanning tree given by `subset` (cells `i * cols + j`), or
/// `None` when the cells contain a cycle or the flow goes negative.
fn tree_flow(subset: &[usize], p: &[f64], q: &[f64], cols: usize) -> Option<Vec<f64>> {
    let rows = p.len();
    let nodes = rows + cols;
    let edge = |cell: usize| (cell / cols, rows + cell % cols);

    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &cell in subset {
        let (a, b) = edge(cell);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }

    let mut supply: Vec<f64> = p.iter().chain(q).copied().collect();
    let mut degree = vec![0usize; nodes];
    for &cell in subset {
        let (a, b) = edge(cell);
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut alive = vec![true; subset.len()];
    let mut plan = vec![0.0; rows * cols];
    for _ in 0..subset.len() {
        let (e, leaf) = subset.iter().enumerate().find_map(|(e, &cell)| {
            if !alive[e] {
                return None;
            }
            let (a, b) = edge(cell);
            if degree[a] == 1 {
                Some((e, a))
            } else if degree[b] == 1 {
                Some((e, b))
            } else {
                None
            }
        })?;
        let (a, b) = edge(subset[e]);
        let other = if leaf == a { b } else { a };
        let flow = supply[leaf];
        if flow < -FLOW_TOL {
            return None;
        }
        let flow = flow.max(0.0);
        plan[subset[e]] = flow;
        supply[leaf] = 0.0;
        supply[other] -= flow;
        degree[a] -= 1;
        degree[b] -= 1;
        alive[e] = false;
    }
    Some(plan)
}

impl OtSolver for SimplexOt {
    fn solve(&self, p: &Dist, q: &Dist, cost: &CostMatrix) -> Result<OtSolution> {
        check_dims(p, q, cost)?;
        let (m, n) = (p.len(), q.len());
        let mut rows = Vec::with_capacity(m + n);
        for i in 0..m {
            rows.push(SparseRow {
                coeffs: (0..n).map(|j| (i * n + j, 1.0)).collect(),
                rhs: p.weights()[i],
            });
        }
        for j in 0..n {
            rows.push(SparseRow {
                coeffs: (0..m).map(|i| (i * n + j, 1.0)).collect(),
                rhs: q.weights()[j],
            });
        }
        let sol = simplex::solve(&cost.data, &rows, &SimplexOptions::default())?;
        Ok(OtSolution {
            value: sol.value,
            plan: sol.x,
            rows: m,
            cols: n,
        })
    }
}
