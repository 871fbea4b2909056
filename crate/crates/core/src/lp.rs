//! Bicausal couplings as a linear program over the full path-pair table.
//!
//! Variables are `π(x, y)` for every pair of full paths, indexed
//! `x · |Y paths| + y`. Besides both marginals, causality with respect to
//! `μ` is imposed through one-step-ahead equalities: for every depth
//! `1 ≤ k < n`, every `x`-prefix `a` with `μ(a) > 0`, every `y`-prefix `b`
//! and every next symbol `s`,
//!
//! ```text
//! π(X_{1:k+1} = a·s, Y_{1:k} = b) = μ^a(s) · π(X_{1:k} = a, Y_{1:k} = b)
//! ```
//!
//! i.e. `Y_{1:k}` is conditionally independent of `X_{k+1}` given `X_{1:k}`.
//! Chaining these over `k` gives the conditional independence of `Y_{1:k}`
//! and the whole future `X_{k+1:n}`. The mirror rows impose causality with
//! respect to `ν`. Rows are written per unit of prefix mass, i.e. the
//! `μ(a) · …` form divided through by `μ(a)`.

use crate::atv::Coupling;
use crate::error::{Error, Result};
use crate::measure::ProcessLaw;
use crate::simplex::{self, SimplexOptions, SparseRow};

pub const DEFAULT_MAX_VARS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    pub max_vars: usize,
    /// Without causality rows the program is plain optimal transport on paths.
    pub causality: bool,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            max_vars: DEFAULT_MAX_VARS,
            causality: true,
        }
    }
}

/// Which side of the coupling a causality row constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Mu,
    Nu,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    Marginal {
        side: Side,
        path: usize,
    },
    /// `depth` is `k`; `x_prefix` and `y_prefix` are flat indices of length-`k`
    /// prefixes; `next` is the symbol appended on the constrained side.
    Causality {
        side: Side,
        depth: usize,
        x_prefix: usize,
        y_prefix: usize,
        next: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub kind: RowKind,
    pub row: SparseRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub var_count: usize,
    /// Number of full paths of `μ` and of `ν`.
    pub dims: (usize, usize),
}

impl LpProblem {
    pub fn count(&self, pred: impl Fn(&RowKind) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(&r.kind)).count()
    }

    /// `A x - b` for every row.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.row.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - r.row.rhs)
            .collect()
    }

    /// Whether `x` satisfies every row and `x ≥ 0` within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.var_count
            && x.iter().all(|&v| v >= -tol)
            && self.residuals(x).iter().all(|r| r.abs() <= tol)
    }

    pub fn solve(&self) -> Result<simplex::LpSolution> {
        let rows: Vec<SparseRow> = self.rows.iter().map(|r| r.row.clone()).collect();
        simplex::solve(&self.objective, &rows, &SimplexOptions::default())
    }
}

pub fn build_bicausal_lp(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<LpProblem> {
    build_bicausal_lp_with(mu, nu, &LpConfig::default())
}

pub fn build_bicausal_lp_with(
    mu: &ProcessLaw,
    nu: &ProcessLaw,
    config: &LpConfig,
) -> Result<LpProblem> {
    mu.same_shape(nu)?;
    let space = mu.space();
    let n = space.horizon();
    let paths = space.num_paths();
    let var_count = paths * paths;
    if var_count > config.max_vars {
        return Err(Error::CapExceeded {
            vars: var_count,
            cap: config.max_vars,
        });
    }
    let var = |x: usize, y: usize| x * paths + y;

    let objective = (0..var_count)
        .map(|v| if v / paths != v % paths { 2.0 } else { 0.0 })
        .collect();

    let mut rows = Vec::new();
    let (px, py) = (mu.joint_dense(), nu.joint_dense());
    for x in 0..paths {
        rows.push(LpRow {
            kind: RowKind::Marginal {
                side: Side::Mu,
                path: x,
            },
            row: SparseRow {
                coeffs: (0..paths).map(|y| (var(x, y), 1.0)).collect(),
                rhs: px[x],
            },
        });
    }
    for y in 0..paths {
        rows.push(LpRow {
            kind: RowKind::Marginal {
                side: Side::Nu,
                path: y,
            },
            row: SparseRow {
                coeffs: (0..paths).map(|x| (var(x, y), 1.0)).collect(),
                rhs: py[y],
            },
        });
    }

    if config.causality {
        for depth in 1..n {
            let size = space.sizes()[depth];
            let block = space.suffix_len(depth);
            let sub = space.suffix_len(depth + 1);
            let prefixes = space.num_prefixes(depth);
            for side in [Side::Mu, Side::Nu] {
                let law = match side {
                    Side::Mu => mu,
                    Side::Nu => nu,
                };
                for a in 0..prefixes {
                    let prefix = space.unflat(a, depth);
                    let Some(kernel) = law.kernel(&prefix) else {
                        continue;
                    };
                    for b in 0..prefixes {
                        for s in 0..size {
                            let k = kernel.weights()[s];
                            // constrained side ranges over block(a), the other over block(b)
                            let mut coeffs = Vec::with_capacity(block * block);
                            for u in 0..block {
                                let c = if u / sub == s { 1.0 - k } else { -k };
                                if c == 0.0 {
                                    continue;
                                }
                                let p = a * block + u;
                                for w in 0..block {
                                    let o = b * block + w;
                                    let v = match side {
                                        Side::Mu => var(p, o),
                                        Side::Nu => var(o, p),
                                    };
                                    coeffs.push((v, c));
                                }
                            }
                            let (x_prefix, y_prefix) = match side {
                                Side::Mu => (a, b),
                                Side::Nu => (b, a),
                            };
                            rows.push(LpRow {
                                kind: RowKind::Causality {
                                    side,
                                    depth,
                                    x_prefix,
                                    y_prefix,
                                    next: s,
                                },
                                row: SparseRow { coeffs, rhs: 0.0 },
                            });
                        }
                    }
                }
            }
        }
    }

    Ok(LpProblem {
        objective,
        rows,
        var_count,
        dims: (paths, paths),
    })
}

/// `2 inf π(x ≠ y)` over bicausal couplings, by linear programming.
pub fn atv_lp(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<f64> {
    atv_lp_with(mu, nu, &LpConfig::default())
}

pub fn atv_lp_with(mu: &ProcessLaw, nu: &ProcessLaw, config: &LpConfig) -> Result<f64> {
    let lp = build_bicausal_lp_with(mu, nu, config)?;
    Ok(lp.solve()?.value)
}

/// The worst constraint found by [`is_bicausal`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: RowKind,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicausalityReport {
    pub bicausal: bool,
    /// Largest absolute residual over marginal and causality equalities.
    pub max_residual: f64,
    pub worst: Option<Violation>,
}

/// Checks the marginal and one-step causality equalities on a coupling,
/// aggregating prefix-pair masses directly from its table.
pub fn is_bicausal(pi: &Coupling<'_>, tol: f64) -> BicausalityReport {
    let (mu, nu) = (pi.mu(), pi.nu());
    let space = mu.space();
    let n = space.horizon();
    let paths = space.num_paths();

    let mut worst: Option<Violation> = None;
    let mut consider = |kind: RowKind, residual: f64| {
        if worst
            .as_ref()
            .map_or(true, |w| residual.abs() > w.residual.abs())
        {
            worst = Some(Violation { kind, residual });
        }
    };

    let mut row = vec![0.0; paths];
    let mut col = vec![0.0; paths];
    for (&(x, y), &p) in pi.entries() {
        row[x] += p;
        col[y] += p;
    }
    for (path, (r, m)) in row.iter().zip(mu.joint_dense()).enumerate() {
        consider(
            RowKind::Marginal {
                side: Side::Mu,
                path,
            },
            r - m,
        );
    }
    for (path, (c, m)) in col.iter().zip(nu.joint_dense()).enumerate() {
        consider(
            RowKind::Marginal {
                side: Side::Nu,
                path,
            },
            c - m,
        );
    }

    for depth in 1..n {
        let prefixes = space.num_prefixes(depth);
        let size = space.sizes()[depth];
        // joint[a][b] = π(X_{1:k} = a, Y_{1:k} = b)
        // ahead_x[a·s][b] = π(X_{1:k+1} = a·s, Y_{1:k} = b), ahead_y mirrored
        let mut joint = vec![0.0; prefixes * prefixes];
        let mut ahead_x = vec![0.0; prefixes * size * prefixes];
        let mut ahead_y = vec![0.0; prefixes * prefixes * size];
        for (&(x, y), &p) in pi.entries() {
            let (a, b) = (space.truncate(x, depth), space.truncate(y, depth));
            let (a1, b1) = (space.truncate(x, depth + 1), space.truncate(y, depth + 1));
            joint[a * prefixes + b] += p;
            ahead_x[a1 * prefixes + b] += p;
            ahead_y[a * prefixes * size + b1] += p;
        }
        for a in 0..prefixes {
            let prefix = space.unflat(a, depth);
            let kx = mu.kernel(&prefix);
            let ky = nu.kernel(&prefix);
            for b in 0..prefixes {
                let base = joint[a * prefixes + b];
                for s in 0..size {
                    if let Some(k) = kx {
                        let r = ahead_x[(a * size + s) * prefixes + b] - k.weights()[s] * base;
                        consider(
                            RowKind::Causality {
                                side: Side::Mu,
                                depth,
                                x_prefix: a,
                                y_prefix: b,
                                next: s,
                            },
                            r,
                        );
                    }
                }
            }
            // mirror: here `a` plays the y-prefix and `b` the x-prefix
            if let Some(k) = ky {
                for b in 0..prefixes {
                    let base = joint[b * prefixes + a];
                    for s in 0..size {
                        let r = ahead_y[b * prefixes * size + a * size + s] - k.weights()[s] * base;
                        consider(
                            RowKind::Causality {
                                side: Side::Nu,
                                depth,
                                x_prefix: b,
                                y_prefix: a,
                                next: s,
                            },
                            r,
                        );
                    }
                }
            }
        }
    }

    let max_residual = worst.as_ref().map_or(0.0, |w| w.residual.abs());
    BicausalityReport {
        bicausal: max_residual <= tol,
        max_residual,
        worst: worst.filter(|w| w.residual.abs() > tol),
    }
}
