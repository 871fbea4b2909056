//! Adapted total variation between two process laws.
//!
//! Three routes are provided:
//!
//! * [`atv_recursive`] walks both kernel trees along common prefixes and
//!   accumulates `TV(μ^a, ν^a)` weighted by the iterated minimum measure
//!   `(μ_1 ∧ ν_1) ⊗ (μ^{x_1} ∧ ν^{x_1}) ⊗ …`.
//! * [`optimal_bicausal_coupling`] builds a coupling that puts the maximal
//!   possible mass on the diagonal at every node pair; its cost attains the
//!   value above.
//! * [`atv_dp`] is backward induction over prefix pairs where each stage is a
//!   plain transport problem with cost `2` off the diagonal and the
//!   continuation value on it, solved by a generic [`OtSolver`].

use std::collections::{BTreeMap, HashMap};

use crate::error::{shape, Error, Result};
use crate::measure::{meet, tv, tv_slices, KernelNode, PathSpace, ProcessLaw};
use crate::ot::{CostMatrix, ExactOt, OtSolver};

/// Per-stage contributions of the recursive formula and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct AtvBreakdown {
    /// `per_stage[k]` is the depth-`k` TV term integrated against the
    /// iterated minimum measure over prefixes of length `k`.
    pub per_stage: Vec<f64>,
    pub total: f64,
}

pub fn atv_recursive(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<AtvBreakdown> {
    mu.same_shape(nu)?;
    let mut per_stage = vec![0.0; mu.horizon()];
    recurse(mu.root(), nu.root(), 0, 1.0, &mut per_stage)?;
    let total = per_stage.iter().sum();
    Ok(AtvBreakdown { per_stage, total })
}

fn recurse(
    mu: &KernelNode,
    nu: &KernelNode,
    depth: usize,
    weight: f64,
    per_stage: &mut [f64],
) -> Result<()> {
    per_stage[depth] += weight * tv(mu.dist(), nu.dist())?;
    if mu.is_leaf() {
        return Ok(());
    }
    let common = meet(mu.dist(), nu.dist())?;
    for (s, &m) in common.weights().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        match (mu.child(s), nu.child(s)) {
            (Some(a), Some(b)) => recurse(a, b, depth + 1, weight * m, per_stage)?,
            _ => unreachable!("positive kernel weight without a child node"),
        }
    }
    Ok(())
}

/// A coupling of two process laws, stored sparsely by flat path indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<'a> {
    mu: &'a ProcessLaw,
    nu: &'a ProcessLaw,
    table: BTreeMap<(usize, usize), f64>,
}

/// Tolerance on total mass and marginals of a [`Coupling`].
pub const COUPLING_TOL: f64 = 1e-9;

impl<'a> Coupling<'a> {
    /// Validates nonnegativity, total mass and both marginals.
    pub fn new(
        mu: &'a ProcessLaw,
        nu: &'a ProcessLaw,
        table: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        mu.same_shape(nu)?;
        let (nx, ny) = (mu.space().num_paths(), nu.space().num_paths());
        let mut row = vec![0.0; nx];
        let mut col = vec![0.0; ny];
        for (index, (&(x, y), &p)) in table.iter().enumerate() {
            if x >= nx || y >= ny {
                return Err(shape(format!(
                    "coupling entry ({x}, {y}) outside {nx}x{ny}"
                )));
            }
            if p < 0.0 || !p.is_finite() {
                return Err(Error::NegativeMass { index, value: p });
            }
            row[x] += p;
            col[y] += p;
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > COUPLING_TOL {
            return Err(Error::BadNormalization {
                sum: total,
                tol: COUPLING_TOL,
            });
        }
        let residual =
            max_abs_diff(&row, &mu.joint_dense()).max(max_abs_diff(&col, &nu.joint_dense()));
        if residual > COUPLING_TOL {
            return Err(Error::MarginalMismatch {
                residual,
                tol: COUPLING_TOL,
            });
        }
        Ok(Self { mu, nu, table })
    }

    /// The identity coupling of a law with itself.
    pub fn diagonal(law: &'a ProcessLaw) -> Result<Self> {
        let table = law
            .joint_dense()
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .map(|(i, p)| ((i, i), p))
            .collect();
        Self::new(law, law, table)
    }

    /// The product coupling `μ ⊗ ν`.
    pub fn independent(mu: &'a ProcessLaw, nu: &'a ProcessLaw) -> Result<Self> {
        let (px, py) = (mu.joint_dense(), nu.joint_dense());
        let mut table = BTreeMap::new();
        for (x, &a) in px.iter().enumerate().filter(|(_, &a)| a > 0.0) {
            for (y, &b) in py.iter().enumerate().filter(|(_, &b)| b > 0.0) {
                table.insert((x, y), a * b);
            }
        }
        Self::new(mu, nu, table)
    }

    pub fn mu(&self) -> &'a ProcessLaw {
        self.mu
    }

    pub fn nu(&self) -> &'a ProcessLaw {
        self.nu
    }

    pub fn horizon(&self) -> usize {
        self.mu.horizon()
    }

    /// Nonzero entries keyed by `(x path index, y path index)`.
    pub fn entries(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.table
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.table.get(&(x, y)).copied().unwrap_or(0.0)
    }

    /// Dense row-major table, `x` major; this is the variable vector of the
    /// bicausal linear program.
    pub fn to_dense(&self) -> Vec<f64> {
        let ny = self.nu.space().num_paths();
        let mut out = vec![0.0; self.mu.space().num_paths() * ny];
        for (&(x, y), &p) in &self.table {
            out[x * ny + y] = p;
        }
        out
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `2 · π(x ≠ y)`: twice the discrete-metric transport cost.
pub fn coupling_cost(pi: &Coupling<'_>) -> f64 {
    2.0 * pi
        .table
        .iter()
        .filter(|((x, y), _)| x != y)
        .map(|(_, p)| p)
        .sum::<f64>()
}

/// Stagewise maximal-diagonal coupling. At each node pair the stage plan is
/// `p ∧ q` on the diagonal and the normalized product of the residuals
/// `p - p ∧ q`, `q - p ∧ q` off it.
pub fn optimal_bicausal_coupling<'a>(
    mu: &'a ProcessLaw,
    nu: &'a ProcessLaw,
) -> Result<Coupling<'a>> {
    mu.same_shape(nu)?;
    let mut table = BTreeMap::new();
    let space = mu.space();
    couple_rec(space, mu.root(), nu.root(), 0, 0, 0, 1.0, &mut table)?;
    Coupling::new(mu, nu, table)
}

fn stage_plan(p: &[f64], q: &[f64]) -> Vec<(usize, usize, f64)> {
    let common: Vec<f64> = p.iter().zip(q).map(|(a, b)| a.min(*b)).collect();
    let mut plan: Vec<(usize, usize, f64)> = common
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(i, &m)| (i, i, m))
        .collect();
    let rp: Vec<f64> = p.iter().zip(&common).map(|(a, m)| a - m).collect();
    let rq: Vec<f64> = q.iter().zip(&common).map(|(b, m)| b - m).collect();
    let residual = 0.5 * tv_slices(p, q);
    if residual > 0.0 {
        // residual supports are disjoint, so this adds nothing to the diagonal
        for (i, &a) in rp.iter().enumerate().filter(|(_, &a)| a > 0.0) {
            for (j, &b) in rq.iter().enumerate().filter(|(_, &b)| b > 0.0) {
                plan.push((i, j, a * b / residual));
            }
        }
    }
    plan
}

#[allow(clippy::too_many_arguments)]
fn couple_rec(
    space: &PathSpace,
    mu: &KernelNode,
    nu: &KernelNode,
    depth: usize,
    xa: usize,
    yb: usize,
    weight: f64,
    table: &mut BTreeMap<(usize, usize), f64>,
) -> Result<()> {
    let size = space.sizes()[depth];
    for (i, j, m) in stage_plan(mu.dist().weights(), nu.dist().weights()) {
        let w = weight * m;
        if w == 0.0 {
            continue;
        }
        let (x, y) = (xa * size + i, yb * size + j);
        if mu.is_leaf() {
            *table.entry((x, y)).or_insert(0.0) += w;
            continue;
        }
        let (Some(a), Some(b)) = (mu.child(i), nu.child(j)) else {
            unreachable!("positive stage mass without a child node");
        };
        couple_rec(space, a, b, depth + 1, x, y, w, table)?;
    }
    Ok(())
}

/// Backward induction over prefix pairs with the default exact solver.
pub fn atv_dp(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<f64> {
    atv_dp_with(mu, nu, &ExactOt)
}

/// Backward induction over prefix pairs `(a, b)` of equal length:
/// `V(a, b) = OT(μ^a, ν^b; c)` with `c(x, y) = 2` for `x ≠ y` and
/// `c(x, x) = V(ax, bx)`, and `V = 0` at full length.
///
/// Memoized on `(depth, a, b)`. The state space is up to `∏|X_k|²` per depth,
/// so this is meant for small horizons and alphabets.
pub fn atv_dp_with(mu: &ProcessLaw, nu: &ProcessLaw, solver: &dyn OtSolver) -> Result<f64> {
    mu.same_shape(nu)?;
    let mut dp = Dp {
        space: mu.space(),
        solver,
        memo: HashMap::new(),
    };
    dp.value(mu.root(), nu.root(), 0, 0, 0)
}

struct Dp<'s> {
    space: &'s PathSpace,
    solver: &'s dyn OtSolver,
    memo: HashMap<(usize, usize, usize), f64>,
}

impl Dp<'_> {
    fn value(
        &mut self,
        mu: &KernelNode,
        nu: &KernelNode,
        depth: usize,
        a: usize,
        b: usize,
    ) -> Result<f64> {
        if let Some(&v) = self.memo.get(&(depth, a, b)) {
            return Ok(v);
        }
        let size = self.space.sizes()[depth];
        let mut diag = vec![0.0; size];
        for (x, d) in diag.iter_mut().enumerate() {
            *d = if mu.is_leaf() {
                0.0
            } else {
                match (mu.child(x), nu.child(x)) {
                    (Some(cm), Some(cn)) => {
                        self.value(cm, cn, depth + 1, a * size + x, b * size + x)?
                    }
                    // the diagonal cell cannot carry mass; any finite cost will do
                    _ => 2.0,
                }
            };
        }
        let cost = CostMatrix::from_fn(size, size, |x, y| if x == y { diag[x] } else { 2.0 })?;
        let v = self.solver.solve(mu.dist(), nu.dist(), &cost)?.value;
        self.memo.insert((depth, a, b), v);
        Ok(v)
    }
}
