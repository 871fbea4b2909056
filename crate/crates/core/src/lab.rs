//! Property checks for the inequalities relating TV, ATV and relative
//! entropy, random ensembles of law pairs to run them on, and the Bernoulli
//! tightness experiment.
//!
//! The inequalities checked are
//!
//! * classical Pinsker: `TV(μ, ν) ≤ √(2 H(μ|ν))` on full paths,
//! * adapted Pinsker: `ATV(μ, ν) ≤ √n · √(2 H(μ|ν))`,
//! * the sandwich `TV ≤ ATV ≤ (2ⁿ - 1) TV`.
//!
//! The tightness witness is `μ = Bern(½+ε)^⊗n`, `ν = Bern(½)^⊗n`, for which
//! `ATV = 2 - 2(1-ε)ⁿ` and `H = n[(½+ε) ln(1+2ε) + (½-ε) ln(1-2ε)]`.
//! Ratios are reported normalized as `ATV² / (2n H)`, which the adapted bound
//! keeps at or below one and which tends to one as `ε → 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::atv::{atv_dp, atv_recursive, coupling_cost, optimal_bicausal_coupling};
use crate::error::{Error, Result};
use crate::lp::{atv_lp_with, is_bicausal, LpConfig, DEFAULT_MAX_VARS};
use crate::measure::{kl, kl_chain, tv_paths, Alphabet, Dist, ExtReal, ProcessLaw};

/// Absolute slack allowed on every inequality.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Smallest weight drawn by the random kernel sampler (before hard zeros).
pub const KERNEL_FLOOR: f64 = 1e-6;

pub const DP_AGREEMENT_TOL: f64 = 1e-9;
pub const LP_AGREEMENT_TOL: f64 = 1e-7;
pub const CHAIN_RULE_TOL: f64 = 1e-10;
pub const ATTAINMENT_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const ONE_STAGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Every kernel drawn independently and uniformly from the simplex.
    UniformRandom,
    /// Kernels depend on the last symbol only.
    Markov,
    /// Kernels depend on the stage only.
    Product,
    /// `Bern(½+ε)^⊗n` against `Bern(½)^⊗n`.
    BernoulliEps(f64),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::UniformRandom => "uniform-random",
            Family::Markov => "markov",
            Family::Product => "product",
            Family::BernoulliEps(_) => "bernoulli-eps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub alphabet_sizes: Vec<usize>,
    pub family: Family,
    pub count: usize,
    pub seed: u64,
    /// Probability that a sampled kernel weight is forced to zero.
    pub zero_fraction: f64,
}

impl EnsembleSpec {
    pub fn new(horizon: usize, alphabet: usize, family: Family, count: usize, seed: u64) -> Self {
        Self {
            alphabet_sizes: vec![alphabet; horizon],
            family,
            count,
            seed,
            zero_fraction: 0.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.alphabet_sizes.len()
    }

    fn validate(&self) -> Result<()> {
        if self.alphabet_sizes.is_empty() {
            return Err(Error::BadSpec("horizon must be at least 1".into()));
        }
        if self.alphabet_sizes.contains(&0) {
            return Err(Error::BadSpec("alphabet sizes must be at least 1".into()));
        }
        if self.count == 0 {
            return Err(Error::BadSpec("count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.zero_fraction) {
            return Err(Error::BadSpec("zero fraction must lie in [0, 1)".into()));
        }
        if let Family::BernoulliEps(eps) = self.family {
            check_eps(eps)?;
            if self.alphabet_sizes.iter().any(|&s| s != 2) {
                return Err(Error::BadSpec(
                    "bernoulli-eps needs binary alphabets".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::BadEpsilon(eps))
    }
}

/// Deterministic list of law pairs for `spec`.
pub fn generate_ensemble(spec: &EnsembleSpec) -> Result<Vec<(ProcessLaw, ProcessLaw)>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|_| {
            sample_pair(
                &mut rng,
                &spec.alphabet_sizes,
                spec.family,
                spec.zero_fraction,
            )
        })
        .collect()
}

/// Draws one `(μ, ν)` pair; both laws come independently from `family`.
pub fn sample_pair<R: Rng>(
    rng: &mut R,
    sizes: &[usize],
    family: Family,
    zero_fraction: f64,
) -> Result<(ProcessLaw, ProcessLaw)> {
    let alphabets = sizes
        .iter()
        .map(|&s| Alphabet::new(s))
        .collect::<Result<Vec<_>>>()?;
    if let Family::BernoulliEps(eps) = family {
        return bernoulli_pair(sizes.len(), eps);
    }
    let mu = sample_law(rng, &alphabets, family, zero_fraction)?;
    let nu = sample_law(rng, &alphabets, family, zero_fraction)?;
    Ok((mu, nu))
}

fn sample_law<R: Rng>(
    rng: &mut R,
    alphabets: &[Alphabet],
    family: Family,
    zero_fraction: f64,
) -> Result<ProcessLaw> {
    let sizes: Vec<usize> = alphabets.iter().map(Alphabet::size).collect();
    match family {
        Family::UniformRandom => ProcessLaw::from_kernels(alphabets.to_vec(), |prefix| {
            sample_kernel(rng, sizes[prefix.len()], zero_fraction)
        }),
        Family::Product => {
            let stages = sizes
                .iter()
                .map(|&s| sample_kernel(rng, s, zero_fraction))
                .collect::<Result<Vec<_>>>()?;
            ProcessLaw::product(alphabets.to_vec(), stages)
        }
        Family::Markov => {
            let initial = sample_kernel(rng, sizes[0], zero_fraction)?;
            // transitions[k][s] is the law of X_{k+1} given X_k = s
            let transitions = (1..sizes.len())
                .map(|k| {
                    (0..sizes[k - 1])
                        .map(|_| sample_kernel(rng, sizes[k], zero_fraction))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            ProcessLaw::from_kernels(alphabets.to_vec(), |prefix| match prefix.last() {
                None => Ok(initial.clone()),
                Some(&s) => Ok(transitions[prefix.len() - 1][s].clone()),
            })
        }
        Family::BernoulliEps(_) => unreachable!("handled by sample_pair"),
    }
}

/// Uniform draw from the simplex (normalized exponentials), floored at
/// [`KERNEL_FLOOR`], with each weight then zeroed with probability
/// `zero_fraction` while keeping at least one positive entry.
fn sample_kernel<R: Rng>(rng: &mut R, size: usize, zero_fraction: f64) -> Result<Dist> {
    let raw: Vec<f64> = (0..size).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let spread = 1.0 - size as f64 * KERNEL_FLOOR;
    let mut w: Vec<f64> = raw
        .iter()
        .map(|g| KERNEL_FLOOR + spread * g / total)
        .collect();
    if zero_fraction > 0.0 {
        let keep = rng.random_range(0..size);
        for (i, v) in w.iter_mut().enumerate() {
            let zero = rng.random_bool(zero_fraction);
            if zero && i != keep {
                *v = 0.0;
            }
        }
    }
    Dist::from_masses(&w)
}

/// The tightness witness `(Bern(½+ε)^⊗n, Bern(½)^⊗n)`.
pub fn bernoulli_pair(n: usize, eps: f64) -> Result<(ProcessLaw, ProcessLaw)> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::BadSpec("horizon must be at least 1".into()));
    }
    let alphabets = vec![Alphabet::binary(); n];
    let mu = ProcessLaw::product(alphabets.clone(), vec![Dist::bernoulli(0.5 + eps)?; n])?;
    let nu = ProcessLaw::product(alphabets, vec![Dist::bernoulli(0.5)?; n])?;
    Ok((mu, nu))
}

/// `2 - 2(1-ε)ⁿ`, evaluated without cancellation for small `ε`.
pub fn atv_closed_form(n: usize, eps: f64) -> f64 {
    -2.0 * (n as f64 * (-eps).ln_1p()).exp_m1()
}

/// `(½+ε) ln(1+2ε) + (½-ε) ln(1-2ε)`. For small `ε` the two terms nearly
/// cancel, so the even series `Σ_k (2ε)^{2k} / (2k(2k-1))` is used instead.
pub fn bernoulli_kl_closed_form(eps: f64) -> f64 {
    if eps < 0.05 {
        let x2 = 4.0 * eps * eps;
        let mut pow = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            pow *= x2;
            let term = pow / ((2 * k) * (2 * k - 1)) as f64;
            sum += term;
            if term <= 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        (0.5 + eps) * (2.0 * eps).ln_1p() + (0.5 - eps) * (-2.0 * eps).ln_1p()
    }
}

/// Outcome of one inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub pass: bool,
    pub lhs: f64,
    pub rhs: ExtReal,
    /// `rhs - lhs`.
    pub slack: ExtReal,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: ExtReal, tol: f64) -> Self {
        match rhs {
            ExtReal::Infinite => Self {
                pass: true,
                lhs,
                rhs,
                slack: ExtReal::Infinite,
            },
            ExtReal::Finite(r) => Self {
                pass: lhs <= r + tol,
                lhs,
                rhs,
                slack: ExtReal::Finite(r - lhs),
            },
        }
    }
}

fn sqrt_2h(h: ExtReal, scale: f64) -> ExtReal {
    match h {
        ExtReal::Finite(v) => ExtReal::Finite(scale.sqrt() * (2.0 * v).sqrt()),
        ExtReal::Infinite => ExtReal::Infinite,
    }
}

/// `ATV(μ, ν) ≤ √n · √(2 H(μ|ν))`; passes vacuously when `H = ∞`.
pub fn check_adapted_pinsker(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<InequalityCheck> {
    let lhs = atv_recursive(mu, nu)?.total;
    let rhs = sqrt_2h(kl(mu, nu)?, mu.horizon() as f64);
    Ok(InequalityCheck::new(lhs, rhs, INEQUALITY_TOL))
}

/// `TV(μ, ν) ≤ √(2 H(μ|ν))` on full paths.
pub fn check_classical_pinsker(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<InequalityCheck> {
    let lhs = tv_paths(mu, nu)?;
    let rhs = sqrt_2h(kl(mu, nu)?, 1.0);
    Ok(InequalityCheck::new(lhs, rhs, INEQUALITY_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichCheck {
    pub pass: bool,
    pub tv: f64,
    pub atv: f64,
    /// `(2ⁿ - 1) · TV`.
    pub upper: f64,
}

/// `TV ≤ ATV ≤ (2ⁿ - 1) TV`.
pub fn check_sandwich(mu: &ProcessLaw, nu: &ProcessLaw) -> Result<SandwichCheck> {
    let tv = tv_paths(mu, nu)?;
    let atv = atv_recursive(mu, nu)?.total;
    let factor = 2f64.powi(mu.horizon() as i32) - 1.0;
    let upper = factor * tv;
    Ok(SandwichCheck {
        pass: tv - INEQUALITY_TOL <= atv && atv <= upper + INEQUALITY_TOL,
        tv,
        atv,
        upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessRow {
    pub n: usize,
    pub eps: f64,
    pub atv: f64,
    pub atv_closed: f64,
    pub kl: f64,
    pub kl_closed: f64,
    /// `atv² / (2 n kl)`.
    pub ratio: f64,
    /// `atv² ≤ 2 n kl (1 + 1e-9)`.
    pub bound_ok: bool,
}

impl TightnessRow {
    /// The same ratio in the `ATV² / (n H)` normalization, which tends to 2.
    pub fn raw_ratio(&self) -> f64 {
        2.0 * self.ratio
    }
}

/// Builds the Bernoulli pair for every `(n, ε)` and compares computed values
/// with the closed forms. Rows are ordered by `(n, ε)` ascending.
pub fn tightness_experiment(n_list: &[usize], eps_grid: &[f64]) -> Result<Vec<TightnessRow>> {
    for &eps in eps_grid {
        check_eps(eps)?;
    }
    if n_list.contains(&0) {
        return Err(Error::BadSpec("horizon must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len() * eps_grid.len());
    for &n in n_list {
        for &eps in eps_grid {
            let (mu, nu) = bernoulli_pair(n, eps)?;
            let atv = atv_recursive(&mu, &nu)?.total;
            let h = kl(&mu, &nu)?.to_f64();
            let ratio = atv * atv / (2.0 * n as f64 * h);
            rows.push(TightnessRow {
                n,
                eps,
                atv,
                atv_closed: atv_closed_form(n, eps),
                kl: h,
                kl_closed: n as f64 * bernoulli_kl_closed_form(eps),
                ratio,
                bound_ok: atv * atv <= 2.0 * n as f64 * h * (1.0 + INEQUALITY_TOL),
            });
        }
    }
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.eps.total_cmp(&b.eps)));
    Ok(rows)
}

/// `count` points from `start` to `end`, equally spaced in log scale.
pub fn geometric_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end / start).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        end
                    } else {
                        start * (step * i as f64).exp()
                    }
                })
                .collect()
        }
    }
}

pub const DEFAULT_N_LIST: [usize; 5] = [1, 2, 3, 4, 6];

pub fn default_eps_grid() -> Vec<f64> {
    geometric_grid(0.25, 1e-5, 12)
}

/// Configuration of a verification sweep. Fields left as `None` rotate
/// through `n ∈ {1,2,3,4}`, alphabets `{2,3}` and the three random families.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub seed: u64,
    pub count: usize,
    pub horizon: Option<usize>,
    pub alphabet: Option<usize>,
    pub family: Option<Family>,
    pub zero_fraction: f64,
    /// Slack allowed on the inequality checks.
    pub tol: f64,
    /// Instances with more LP variables skip the LP comparison.
    pub lp_max_vars: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            count: 1000,
            horizon: None,
            alphabet: None,
            family: None,
            zero_fraction: 0.0,
            tol: INEQUALITY_TOL,
            lp_max_vars: DEFAULT_MAX_VARS,
        }
    }
}

const ROTATING_FAMILIES: [Family; 3] = [Family::UniformRandom, Family::Markov, Family::Product];

impl SweepConfig {
    fn instance_shape(&self, index: usize) -> (Vec<usize>, Family) {
        let n = self.horizon.unwrap_or(1 + index % 4);
        let a = self.alphabet.unwrap_or(2 + (index / 4) % 2);
        let family = self
            .family
            .unwrap_or(ROTATING_FAMILIES[(index / 8) % ROTATING_FAMILIES.len()]);
        (vec![a; n], family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    ClassicalPinsker,
    AdaptedPinsker,
    SandwichLower,
    SandwichUpper,
    OneStageEquality,
    ChainRule,
    DpAgreement,
    LpAgreement,
    Attainment,
    Bicausality,
    Symmetry,
}

impl CheckKind {
    pub const ALL: [CheckKind; 11] = [
        CheckKind::ClassicalPinsker,
        CheckKind::AdaptedPinsker,
        CheckKind::SandwichLower,
        CheckKind::SandwichUpper,
        CheckKind::OneStageEquality,
        CheckKind::ChainRule,
        CheckKind::DpAgreement,
        CheckKind::LpAgreement,
        CheckKind::Attainment,
        CheckKind::Bicausality,
        CheckKind::Symmetry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::ClassicalPinsker => "classical-pinsker",
            CheckKind::AdaptedPinsker => "adapted-pinsker",
            CheckKind::SandwichLower => "sandwich-lower",
            CheckKind::SandwichUpper => "sandwich-upper",
            CheckKind::OneStageEquality => "one-stage-atv-eq-tv",
            CheckKind::ChainRule => "chain-rule",
            CheckKind::DpAgreement => "dp-agreement",
            CheckKind::LpAgreement => "lp-agreement",
            CheckKind::Attainment => "attainment",
            CheckKind::Bicausality => "bicausality",
            CheckKind::Symmetry => "symmetry",
        }
    }

    /// Inequalities report a slack (larger is better); the rest report an
    /// error magnitude (smaller is better).
    pub fn is_slack(self) -> bool {
        matches!(
            self,
            CheckKind::ClassicalPinsker
                | CheckKind::AdaptedPinsker
                | CheckKind::SandwichLower
                | CheckKind::SandwichUpper
        )
    }
}

/// Aggregate of one check over a sweep. `worst` is the smallest slack or the
/// largest error seen; `None` when the check never ran or only vacuously.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckStats {
    pub kind: CheckKind,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub worst: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub index: usize,
    pub kind: CheckKind,
    pub value: f64,
    pub mu: ProcessLaw,
    pub nu: ProcessLaw,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub instances: usize,
    pub checks: Vec<CheckStats>,
    pub failures: Vec<SweepFailure>,
}

impl SweepReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn stats(&self, kind: CheckKind) -> &CheckStats {
        self.checks
            .iter()
            .find(|c| c.kind == kind)
            .expect("every kind is tracked")
    }
}

/// Every check on a single pair, as `(kind, value, pass)`; `value` is `None`
/// for vacuous or skipped checks.
pub type InstanceOutcome = Vec<(CheckKind, Option<f64>, bool)>;

pub fn check_instance(
    mu: &ProcessLaw,
    nu: &ProcessLaw,
    tol: f64,
    lp_max_vars: usize,
) -> Result<InstanceOutcome> {
    let mut out = Vec::with_capacity(CheckKind::ALL.len());
    let n = mu.horizon();
    let tv = tv_paths(mu, nu)?;
    let breakdown = atv_recursive(mu, nu)?;
    let atv = breakdown.total;
    let h = kl(mu, nu)?;

    let pinsker = |lhs: f64, scale: f64| match h {
        ExtReal::Infinite => (None, true),
        ExtReal::Finite(v) => {
            let slack = (scale * 2.0 * v).sqrt() - lhs;
            (Some(slack), slack >= -tol)
        }
    };
    let (s, ok) = pinsker(tv, 1.0);
    out.push((CheckKind::ClassicalPinsker, s, ok));
    let (s, ok) = pinsker(atv, n as f64);
    out.push((CheckKind::AdaptedPinsker, s, ok));

    let lower = atv - tv;
    out.push((CheckKind::SandwichLower, Some(lower), lower >= -tol));
    let upper = (2f64.powi(n as i32) - 1.0) * tv - atv;
    out.push((CheckKind::SandwichUpper, Some(upper), upper >= -tol));
    if n == 1 {
        let gap = (atv - tv).abs();
        out.push((CheckKind::OneStageEquality, Some(gap), gap <= ONE_STAGE_TOL));
    } else {
        out.push((CheckKind::OneStageEquality, None, true));
    }

    let chain = kl_chain(mu, nu)?;
    match (h, chain) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => {
            let gap = (a - b).abs();
            out.push((CheckKind::ChainRule, Some(gap), gap <= CHAIN_RULE_TOL));
        }
        (ExtReal::Infinite, ExtReal::Infinite) => out.push((CheckKind::ChainRule, None, true)),
        _ => out.push((CheckKind::ChainRule, Some(f64::INFINITY), false)),
    }

    let gap = (atv - atv_dp(mu, nu)?).abs();
    out.push((CheckKind::DpAgreement, Some(gap), gap <= DP_AGREEMENT_TOL));

    let config = LpConfig {
        max_vars: lp_max_vars,
        causality: true,
    };
    match atv_lp_with(mu, nu, &config) {
        Ok(v) => {
            let gap = (atv - v).abs();
            out.push((CheckKind::LpAgreement, Some(gap), gap <= LP_AGREEMENT_TOL));
        }
        Err(Error::CapExceeded { .. }) => out.push((CheckKind::LpAgreement, None, true)),
        Err(e) => return Err(e),
    }

    let pi = optimal_bicausal_coupling(mu, nu)?;
    let gap = (coupling_cost(&pi) - atv).abs();
    out.push((CheckKind::Attainment, Some(gap), gap <= ATTAINMENT_TOL));
    let report = is_bicausal(&pi, ATTAINMENT_TOL);
    out.push((
        CheckKind::Bicausality,
        Some(report.max_residual),
        report.bicausal,
    ));

    let gap = (atv_recursive(nu, mu)?.total - atv).abs();
    out.push((CheckKind::Symmetry, Some(gap), gap <= SYMMETRY_TOL));
    Ok(out)
}

/// The pairs a sweep with `config` visits, in order.
pub fn sweep_instances(config: &SweepConfig) -> Result<Vec<(ProcessLaw, ProcessLaw)>> {
    if config.count == 0 {
        return Err(Error::BadSpec("count must be at least 1".into()));
    }
    if config.horizon == Some(0) || config.alphabet == Some(0) {
        return Err(Error::BadSpec(
            "horizon and alphabet must be at least 1".into(),
        ));
    }
    if let Some(family) = config.family {
        let probe = EnsembleSpec {
            alphabet_sizes: config.instance_shape(0).0,
            family,
            count: 1,
            seed: config.seed,
            zero_fraction: config.zero_fraction,
        };
        probe.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.count)
        .map(|index| {
            let (sizes, family) = config.instance_shape(index);
            sample_pair(&mut rng, &sizes, family, config.zero_fraction)
        })
        .collect()
}

/// Runs [`check_instance`] on every pair of [`sweep_instances`].
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let instances = sweep_instances(config)?;
    let mut checks: Vec<CheckStats> = CheckKind::ALL
        .iter()
        .map(|&kind| CheckStats {
            kind,
            passed: 0,
            failed: 0,
            skipped: 0,
            worst: None,
        })
        .collect();
    let mut failures = Vec::new();
    for (index, (mu, nu)) in instances.iter().enumerate() {
        for (kind, value, pass) in check_instance(mu, nu, config.tol, config.lp_max_vars)? {
            let stats = &mut checks[CheckKind::ALL.iter().position(|&k| k == kind).unwrap()];
            match value {
                None => stats.skipped += 1,
                Some(v) => {
                    stats.worst = Some(match stats.worst {
                        None => v,
                        Some(w) if kind.is_slack() => w.min(v),
                        Some(w) => w.max(v),
                    });
                }
            }
            if pass {
                if value.is_some() {
                    stats.passed += 1;
                }
            } else {
                stats.failed += 1;
                failures.push(SweepFailure {
                    index,
                    kind,
                    value: value.unwrap_or(f64::NAN),
                    mu: mu.clone(),
                    nu: nu.clone(),
                });
            }
        }
    }
    Ok(SweepReport {
        instances: config.count,
        checks,
        failures,
    })
}
