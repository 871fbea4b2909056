//! Finite-alphabet process laws and the primitive quantities between them.
//!
//! A [`ProcessLaw`] on `X_1 × … × X_n` is stored through its successive
//! disintegration: the root holds the first-stage marginal and every node at
//! depth `k` holds the kernel of the next coordinate given the prefix that
//! leads to it. Prefixes of probability zero carry no node.
//!
//! Total variation uses the un-halved convention `TV(p, q) = Σ |p_i - q_i|`,
//! so values live in `[0, 2]` and `TV = 2 (1 - |p ∧ q|)`.
//!
//! Relative entropy is in nats.

use std::fmt;
use std::ops::Add;

use crate::error::{shape, Error, Result};

/// Tolerance on the total mass of an ingested joint table.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Tolerance on the total mass of a single kernel.
pub const DIST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(shape("alphabet size must be at least 1"));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(shape("alphabet needs at least one label"));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(shape(format!("duplicate alphabet label {label:?}")));
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn binary() -> Self {
        Self {
            size: 2,
            labels: None,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Nonnegative real extended with `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite case.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

/// A probability vector over one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist(Vec<f64>);

impl Dist {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(shape("distribution over an empty alphabet"));
        }
        for (index, &w) in weights.iter().enumerate() {
            if w < 0.0 || w.is_nan() {
                return Err(Error::NegativeMass { index, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL || weights.iter().any(|&w| w > 1.0 + DIST_TOL) {
            return Err(Error::BadNormalization { sum, tol: DIST_TOL });
        }
        Ok(Self(weights))
    }

    /// Normalizes a nonnegative vector with positive total mass.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::BadNormalization {
                sum: total,
                tol: DIST_TOL,
            });
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn point(size: usize, at: usize) -> Result<Self> {
        if at >= size {
            return Err(shape(format!(
                "point mass at {at} outside alphabet of size {size}"
            )));
        }
        let mut w = vec![0.0; size];
        w[at] = 1.0;
        Ok(Self(w))
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(shape("distribution over an empty alphabet"));
        }
        Ok(Self(vec![1.0 / size as f64; size]))
    }

    /// `(a, 1 - a)`; the complement is exact in floating point for `a ∈ [0.5, 1]`.
    pub fn bernoulli(a: f64) -> Result<Self> {
        Self::new(vec![a, 1.0 - a])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Relative entropy `H(self | other)`.
    pub fn kl(&self, other: &Dist) -> Result<ExtReal> {
        same_len(self, other)?;
        Ok(relative_entropy(self.weights(), other.weights()))
    }
}

/// A nonnegative vector with total mass at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct SubProb {
    weights: Vec<f64>,
    mass: f64,
}

impl SubProb {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (index, &w) in weights.iter().enumerate() {
            if w < 0.0 || w.is_nan() {
                return Err(Error::NegativeMass { index, value: w });
            }
        }
        let mass: f64 = weights.iter().sum();
        if mass > 1.0 + DIST_TOL {
            return Err(Error::BadNormalization {
                sum: mass,
                tol: DIST_TOL,
            });
        }
        Ok(Self { weights, mass })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

fn same_len(p: &Dist, q: &Dist) -> Result<()> {
    if p.len() != q.len() {
        return Err(shape(format!(
            "distributions over alphabets of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Total variation `Σ |p_i - q_i|`, in `[0, 2]`.
pub fn tv(p: &Dist, q: &Dist) -> Result<f64> {
    same_len(p, q)?;
    Ok(tv_slices(p.weights(), q.weights()))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Componentwise minimum `p ∧ q`.
pub fn meet(p: &Dist, q: &Dist) -> Result<SubProb> {
    same_len(p, q)?;
    let weights: Vec<f64> = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(a, b)| a.min(*b))
        .collect();
    let mass = weights.iter().sum();
    Ok(SubProb { weights, mass })
}

/// One summand of `H(p | q)` written as `p ln(p/q) - p + q`, which is
/// nonnegative and sums to the relative entropy when both vectors are
/// normalized. Near `p = q` the summand is `q φ(d)` with
/// `φ(d) = (1+d) ln(1+d) - d` and `d = (p - q) / q`, evaluated by series.
fn relent_term(p: f64, q: f64) -> ExtReal {
    if q == 0.0 {
        return if p == 0.0 {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::Infinite
        };
    }
    if p == 0.0 {
        return ExtReal::Finite(q);
    }
    let d = (p - q) / q;
    let value = if d.abs() <= 0.1 {
        q * phi_series(d)
    } else {
        p * (p / q).ln() - p + q
    };
    ExtReal::Finite(value.max(0.0))
}

// φ(d) = Σ_{k≥2} (-1)^k d^k / (k (k-1))
fn phi_series(d: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = d;
    for k in 2..80 {
        pow *= -d;
        let term = -pow / (k * (k - 1)) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub(crate) fn relative_entropy(p: &[f64], q: &[f64]) -> ExtReal {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        match relent_term(a, b) {
            ExtReal::Finite(v) => total += v,
            ExtReal::Infinite => return ExtReal::Infinite,
        }
    }
    ExtReal::Finite(total)
}

/// Row-major indexing of the path space `X_1 × … × X_n`, stage 1 most
/// significant. A prefix of length `k` owns a contiguous block of
/// `suffix_len(k)` full paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpace {
    sizes: Vec<usize>,
    // suffix[k] = ∏_{j ≥ k} sizes[j], suffix[n] = 1
    suffix: Vec<usize>,
}

impl PathSpace {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut suffix = vec![1; sizes.len() + 1];
        for k in (0..sizes.len()).rev() {
            suffix[k] = suffix[k + 1] * sizes[k];
        }
        Self { sizes, suffix }
    }

    pub fn horizon(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_paths(&self) -> usize {
        self.suffix[0]
    }

    /// Number of distinct prefixes of length `depth`.
    pub fn num_prefixes(&self, depth: usize) -> usize {
        self.suffix[0] / self.suffix[depth]
    }

    /// Number of full paths sharing one prefix of length `depth`.
    pub fn suffix_len(&self, depth: usize) -> usize {
        self.suffix[depth]
    }

    pub fn check(&self, prefix: &[usize]) -> Result<()> {
        if prefix.len() > self.horizon() {
            return Err(shape(format!(
                "path of length {} exceeds horizon {}",
                prefix.len(),
                self.horizon()
            )));
        }
        for (k, (&s, &size)) in prefix.iter().zip(&self.sizes).enumerate() {
            if s >= size {
                return Err(shape(format!(
                    "symbol {s} at stage {} outside alphabet of size {size}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Flat index of a prefix among all prefixes of its length.
    pub fn flat(&self, prefix: &[usize]) -> usize {
        prefix
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&s, &size)| acc * size + s)
    }

    pub fn unflat(&self, mut index: usize, depth: usize) -> Vec<usize> {
        let mut out = vec![0; depth];
        for k in (0..depth).rev() {
            out[k] = index % self.sizes[k];
            index /= self.sizes[k];
        }
        out
    }

    /// Flat index (among length-`depth` prefixes) of the prefix of a full path.
    pub fn truncate(&self, path_index: usize, depth: usize) -> usize {
        path_index / self.suffix[depth]
    }
}

/// One stage kernel and the subtrees below its positive-probability symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelNode {
    dist: Dist,
    children: Vec<Option<KernelNode>>,
}

impl KernelNode {
    pub fn dist(&self) -> &Dist {
        &self.dist
    }

    pub fn child(&self, symbol: usize) -> Option<&KernelNode> {
        self.children.get(symbol).and_then(Option::as_ref)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Input for [`ProcessLaw::from_joint`].
#[derive(Debug, Clone, PartialEq)]
pub enum JointTable {
    /// Row-major over the path space, stage 1 most significant.
    Dense(Vec<f64>),
    /// Explicit `(path, probability)` entries; missing paths have probability 0.
    Sparse(Vec<(Vec<usize>, f64)>),
}

/// Law of a process `(X_1, …, X_n)` on a product of finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessLaw {
    alphabets: Vec<Alphabet>,
    space: PathSpace,
    root: KernelNode,
}

impl ProcessLaw {
    /// Disintegrates a joint table. The total mass must be within
    /// [`NORMALIZATION_TOL`] of one; the tree is built from the normalized table.
    pub fn from_joint(alphabets: Vec<Alphabet>, table: &JointTable) -> Result<Self> {
        Self::from_joint_with(alphabets, table, false)
    }

    /// As [`ProcessLaw::from_joint`]; with `renormalize` any positive total mass is accepted.
    pub fn from_joint_with(
        alphabets: Vec<Alphabet>,
        table: &JointTable,
        renormalize: bool,
    ) -> Result<Self> {
        let space = space_of(&alphabets)?;
        let dense = densify(&space, table)?;
        for (index, &p) in dense.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::NegativeMass { index, value: p });
            }
        }
        let sum: f64 = dense.iter().sum();
        let bad = if renormalize {
            !(sum > 0.0)
        } else {
            (sum - 1.0).abs() > NORMALIZATION_TOL
        };
        if bad {
            return Err(Error::BadNormalization {
                sum,
                tol: NORMALIZATION_TOL,
            });
        }
        let root = build_from_block(&space, 0, &dense)?;
        Ok(Self {
            alphabets,
            space,
            root,
        })
    }

    /// Builds a law from its kernels; `kernel(prefix)` is only queried for
    /// prefixes of positive probability.
    pub fn from_kernels<F>(alphabets: Vec<Alphabet>, mut kernel: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<Dist>,
    {
        let space = space_of(&alphabets)?;
        let mut prefix = Vec::with_capacity(space.horizon());
        let root = build_from_kernels(&space, &mut prefix, &mut kernel)?;
        Ok(Self {
            alphabets,
            space,
            root,
        })
    }

    /// Product law with independent stages.
    pub fn product(alphabets: Vec<Alphabet>, stages: Vec<Dist>) -> Result<Self> {
        if stages.len() != alphabets.len() {
            return Err(shape(format!(
                "{} stage distributions for horizon {}",
                stages.len(),
                alphabets.len()
            )));
        }
        Self::from_kernels(alphabets, |prefix| Ok(stages[prefix.len()].clone()))
    }

    pub fn horizon(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn space(&self) -> &PathSpace {
        &self.space
    }

    pub fn root(&self) -> &KernelNode {
        &self.root
    }

    /// Node reached by `prefix`, if that prefix has positive probability.
    pub fn node(&self, prefix: &[usize]) -> Option<&KernelNode> {
        if prefix.len() >= self.horizon() {
            return None;
        }
        prefix.iter().try_fold(&self.root, |node, &s| node.child(s))
    }

    /// Kernel `μ^{x_{1:k}}` of the next coordinate given `prefix`.
    pub fn kernel(&self, prefix: &[usize]) -> Option<&Dist> {
        self.node(prefix).map(KernelNode::dist)
    }

    /// Probability of a prefix of any length `0..=n`.
    pub fn prefix_prob(&self, prefix: &[usize]) -> Result<f64> {
        self.space.check(prefix)?;
        let mut node = &self.root;
        let mut p = 1.0;
        for (k, &s) in prefix.iter().enumerate() {
            p *= node.dist.weights()[s];
            if p == 0.0 {
                return Ok(0.0);
            }
            if k + 1 < prefix.len() {
                match node.child(s) {
                    Some(c) => node = c,
                    None => return Ok(0.0),
                }
            }
        }
        Ok(p)
    }

    /// Probability of a full path.
    pub fn joint_prob(&self, path: &[usize]) -> Result<f64> {
        if path.len() != self.horizon() {
            return Err(shape(format!(
                "path of length {} for horizon {}",
                path.len(),
                self.horizon()
            )));
        }
        self.prefix_prob(path)
    }

    /// Joint probabilities of all full paths in row-major order.
    pub fn joint_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.num_paths()];
        fill_dense(&self.root, &self.space, 0, 0, 1.0, &mut out);
        out
    }

    /// Probabilities of all prefixes of length `depth` in row-major order.
    pub fn prefix_dense(&self, depth: usize) -> Vec<f64> {
        let joint = self.joint_dense();
        let block = self.space.suffix_len(depth);
        joint.chunks(block).map(|c| c.iter().sum()).collect()
    }

    pub fn same_shape(&self, other: &ProcessLaw) -> Result<()> {
        if self.space.sizes() != other.space.sizes() {
            return Err(shape(format!(
                "laws on alphabets {:?} and {:?}",
                self.space.sizes(),
                other.space.sizes()
            )));
        }
        Ok(())
    }
}

fn space_of(alphabets: &[Alphabet]) -> Result<PathSpace> {
    if alphabets.is_empty() {
        return Err(shape("horizon must be at least 1"));
    }
    Ok(PathSpace::new(
        alphabets.iter().map(Alphabet::size).collect(),
    ))
}

fn densify(space: &PathSpace, table: &JointTable) -> Result<Vec<f64>> {
    match table {
        JointTable::Dense(v) => {
            if v.len() != space.num_paths() {
                return Err(shape(format!(
                    "dense table has {} entries, path space has {}",
                    v.len(),
                    space.num_paths()
                )));
            }
            Ok(v.clone())
        }
        JointTable::Sparse(entries) => {
            let mut out = vec![0.0; space.num_paths()];
            let mut seen = vec![false; space.num_paths()];
            for (path, p) in entries {
                if path.len() != space.horizon() {
                    return Err(shape(format!(
                        "path {path:?} has length {}, horizon is {}",
                        path.len(),
                        space.horizon()
                    )));
                }
                space.check(path)?;
                let i = space.flat(path);
                if seen[i] {
                    return Err(shape(format!("path {path:?} listed twice")));
                }
                seen[i] = true;
                out[i] = *p;
            }
            Ok(out)
        }
    }
}

fn build_from_block(space: &PathSpace, depth: usize, block: &[f64]) -> Result<KernelNode> {
    let size = space.sizes()[depth];
    let child_len = space.suffix_len(depth + 1);
    let masses: Vec<f64> = block.chunks(child_len).map(|c| c.iter().sum()).collect();
    let dist = Dist::from_masses(&masses)?;
    let children = if depth + 1 == space.horizon() {
        Vec::new()
    } else {
        (0..size)
            .map(|s| {
                if masses[s] > 0.0 {
                    let sub = &block[s * child_len..(s + 1) * child_len];
                    build_from_block(space, depth + 1, sub).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?
    };
    Ok(KernelNode { dist, children })
}

fn build_from_kernels<F>(
    space: &PathSpace,
    prefix: &mut Vec<usize>,
    kernel: &mut F,
) -> Result<KernelNode>
where
    F: FnMut(&[usize]) -> Result<Dist>,
{
    let depth = prefix.len();
    let dist = kernel(prefix)?;
    if dist.len() != space.sizes()[depth] {
        return Err(shape(format!(
            "kernel at {prefix:?} has {} weights, alphabet has {}",
            dist.len(),
            space.sizes()[depth]
        )));
    }
    let mut children = Vec::new();
    if depth + 1 < space.horizon() {
        for s in 0..dist.len() {
            if dist.weights()[s] > 0.0 {
                prefix.push(s);
                let child = build_from_kernels(space, prefix, kernel);
                prefix.pop();
                children.push(Some(child?));
            } else {
                children.push(None);
            }
        }
    }
    Ok(KernelNode { dist, children })
}

fn fill_dense(
    node: &KernelNode,
    space: &PathSpace,
    depth: usize,
    prefix_index: usize,
    mass: f64,
    out: &mut [f64],
) {
    for (s, &w) in node.dist.weights().iter().enumerate() {
        let p = mass * w;
        if p == 0.0 {
            continue;
        }
        let index = prefix_index * space.sizes()[depth] + s;
        if depth + 1 == space.horizon() {
            out[index] = p;
        } else if let Some(child) = node.child(s) {
            fill_dense(child, space, depth + 1, index, p, out);
        }
    }
}

/// Total variation between the full-path distributions.
pub fn tv_paths(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<f64> {
    mu.same_shape(nu)?;
    Ok(tv_slices(&mu.joint_dense(), &nu.joint_dense()))
}

/// Relative entropy `H(μ | ν)` summed over full paths.
pub fn kl(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<ExtReal> {
    mu.same_shape(nu)?;
    Ok(relative_entropy(&mu.joint_dense(), &nu.joint_dense()))
}

/// Relative entropy split by stage via the chain rule:
/// `per_stage[k] = Σ_{|a| = k} μ(a) H(μ^a | ν^a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlBreakdown {
    pub per_stage: Vec<ExtReal>,
    pub total: ExtReal,
}

/// Relative entropy through the chain rule over the two kernel trees.
pub fn kl_chain(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<ExtReal> {
    kl_chain_breakdown(mu, nu).map(|b| b.total)
}

pub fn kl_chain_breakdown(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<KlBreakdown> {
    mu.same_shape(nu)?;
    let n = mu.horizon();
    let mut sums = vec![0.0; n];
    let mut infinite = vec![false; n];
    chain_rec(mu.root(), nu.root(), 0, 1.0, &mut sums, &mut infinite);
    let per_stage: Vec<ExtReal> = sums
        .iter()
        .zip(&infinite)
        .map(|(&s, &inf)| {
            if inf {
                ExtReal::Infinite
            } else {
                ExtReal::Finite(s)
            }
        })
        .collect();
    let total = per_stage
        .iter()
        .fold(ExtReal::Finite(0.0), |acc, &h| acc + h);
    Ok(KlBreakdown { per_stage, total })
}

fn chain_rec(
    mu: &KernelNode,
    nu: &KernelNode,
    depth: usize,
    weight: f64,
    sums: &mut [f64],
    infinite: &mut [bool],
) {
    let (p, q) = (mu.dist.weights(), nu.dist.weights());
    match relative_entropy(p, q) {
        ExtReal::Finite(h) => sums[depth] += weight * h,
        ExtReal::Infinite => infinite[depth] = true,
    }
    if mu.is_leaf() {
        return;
    }
    for (s, &ps) in p.iter().enumerate() {
        if ps == 0.0 {
            continue;
        }
        // ν-missing children are already accounted for as an infinite stage term.
        if let (Some(mc), Some(nc)) = (mu.child(s), nu.child(s)) {
            chain_rec(mc, nc, depth + 1, weight * ps, sums, infinite);
        }
    }
}
