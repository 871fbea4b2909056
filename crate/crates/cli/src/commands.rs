use std::io::Write;
use std::path::{Path, PathBuf};

use atv_core::lab::{self, Family, SweepConfig, SweepReport, INEQUALITY_TOL};
use atv_core::lp::{LpConfig, DEFAULT_MAX_VARS};
use atv_core::measure::{kl_chain_breakdown, NORMALIZATION_TOL};
use atv_core::{atv_dp, atv_lp_with, atv_recursive, kl, tv_paths, ExtReal};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::spec_file::{law_to_json, read_law};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Tv,
    Atv,
    Kl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Recursive,
    Dp,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    UniformRandom,
    Markov,
    Product,
    BernoulliEps,
}

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct ResultRecord {
    metric: &'static str,
    value: Value,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    breakdown: Option<Vec<Value>>,
    tolerances: Value,
    inputs: Inputs,
}

#[derive(Debug, Serialize)]
struct Inputs {
    mu: InputDigest,
    nu: InputDigest,
}

fn number(v: f64) -> Value {
    json!(v)
}

fn ext(v: ExtReal) -> Value {
    match v {
        ExtReal::Finite(x) => number(x),
        ExtReal::Infinite => json!("inf"),
    }
}

fn digest(path: &Path, text: &str) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(text.as_bytes())),
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

pub struct ComputeArgs<'a> {
    pub mu: &'a Path,
    pub nu: &'a Path,
    pub metric: Metric,
    pub method: Method,
    pub breakdown: bool,
    pub max_vars: usize,
    pub out: Option<&'a Path>,
}

pub fn compute(args: &ComputeArgs<'_>) -> Result<(), CliError> {
    let (mu, mu_text) = read_law(args.mu)?;
    let (nu, nu_text) = read_law(args.nu)?;
    mu.same_shape(&nu)?;

    let mut tolerances = json!({ "normalization": NORMALIZATION_TOL });
    let (value, method, breakdown) = match args.metric {
        Metric::Tv => (number(tv_paths(&mu, &nu)?), "path-sum", None),
        Metric::Kl => {
            let breakdown = args
                .breakdown
                .then(|| kl_chain_breakdown(&mu, &nu))
                .transpose()?
                .map(|b| b.per_stage.into_iter().map(ext).collect());
            (ext(kl(&mu, &nu)?), "path-sum", breakdown)
        }
        Metric::Atv => match args.method {
            Method::Recursive => {
                let b = atv_recursive(&mu, &nu)?;
                let breakdown = args
                    .breakdown
                    .then(|| b.per_stage.iter().map(|&v| number(v)).collect());
                (number(b.total), "recursive", breakdown)
            }
            Method::Dp => (number(atv_dp(&mu, &nu)?), "dp", None),
            Method::Lp => {
                let config = LpConfig {
                    max_vars: args.max_vars,
                    ..LpConfig::default()
                };
                tolerances["lp_feasibility"] = json!(1e-9);
                tolerances["lp_reduced_cost"] = json!(1e-9);
                tolerances["lp_max_vars"] = json!(args.max_vars);
                (number(atv_lp_with(&mu, &nu, &config)?), "lp", None)
            }
        },
    };
    let record = ResultRecord {
        metric: match args.metric {
            Metric::Tv => "tv",
            Metric::Atv => "atv",
            Metric::Kl => "kl",
        },
        value,
        method,
        breakdown,
        tolerances,
        inputs: Inputs {
            mu: digest(args.mu, &mu_text),
            nu: digest(args.nu, &nu_text),
        },
    };
    let mut body = serde_json::to_string_pretty(&record).expect("records always serialize");
    body.push('\n');
    write_output(args.out, &body)
}

pub struct VerifyArgs {
    pub seed: u64,
    pub count: usize,
    pub n: Option<usize>,
    pub alphabet: Option<usize>,
    pub family: Option<FamilyArg>,
    pub eps: f64,
    pub zero_fraction: f64,
    pub tol: f64,
    pub max_vars: usize,
    pub reproducer: PathBuf,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        let config = SweepConfig::default();
        Self {
            seed: config.seed,
            count: config.count,
            n: None,
            alphabet: None,
            family: None,
            eps: 0.1,
            zero_fraction: 0.0,
            tol: INEQUALITY_TOL,
            max_vars: DEFAULT_MAX_VARS,
            reproducer: PathBuf::from("verify-failure"),
        }
    }
}

fn summary(args: &VerifyArgs, report: &SweepReport) -> String {
    let shape = |v: Option<usize>| v.map_or("rotating".to_string(), |x| x.to_string());
    let family = match args.family {
        None => "rotating".to_string(),
        Some(FamilyArg::BernoulliEps) => format!("bernoulli-eps({})", args.eps),
        Some(f) => f.to_possible_value().unwrap().get_name().to_string(),
    };
    let mut out = format!(
        "verify seed={} count={} n={} alphabet={} family={} tol={:e}\n",
        args.seed,
        args.count,
        shape(args.n),
        shape(args.alphabet),
        family,
        args.tol
    );
    out.push_str(&format!(
        "{:<22}{:>8}{:>8}{:>8}  {}\n",
        "check", "passed", "failed", "skipped", "worst"
    ));
    for stats in &report.checks {
        let worst = match stats.worst {
            None => "-".to_string(),
            Some(w) if stats.kind.is_slack() => format!("slack {w:.6e}"),
            Some(w) => format!("error {w:.6e}"),
        };
        out.push_str(&format!(
            "{:<22}{:>8}{:>8}{:>8}  {}\n",
            stats.kind.name(),
            stats.passed,
            stats.failed,
            stats.skipped,
            worst
        ));
    }
    let verdict = if report.all_passed() { "pass" } else { "fail" };
    out.push_str(&format!("result: {verdict}\n"));
    out
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&args.zero_fraction) {
        return Err(CliError::Usage("--zero-fraction must lie in [0, 1)".into()));
    }
    if !(args.tol >= 0.0) {
        return Err(CliError::Usage("--tol must be nonnegative".into()));
    }
    let family = args.family.map(|f| match f {
        FamilyArg::UniformRandom => Family::UniformRandom,
        FamilyArg::Markov => Family::Markov,
        FamilyArg::Product => Family::Product,
        FamilyArg::BernoulliEps => Family::BernoulliEps(args.eps),
    });
    let config = SweepConfig {
        seed: args.seed,
        count: args.count,
        horizon: args.n,
        alphabet: args.alphabet,
        family,
        zero_fraction: args.zero_fraction,
        tol: args.tol,
        lp_max_vars: args.max_vars,
    };
    let report = lab::run_sweep(&config)?;
    write_output(None, &summary(args, &report))?;
    let Some(first) = report.failures.first() else {
        return Ok(());
    };
    let prefix = args.reproducer.display().to_string();
    let mu_path = format!("{prefix}.mu.json");
    let nu_path = format!("{prefix}.nu.json");
    for (path, law) in [(&mu_path, &first.mu), (&nu_path, &first.nu)] {
        std::fs::write(path, law_to_json(law)).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    }
    Err(CliError::VerifyFailed(format!(
        "{} check failures; first is {} on instance {} (value {:e}), reproducer written to {mu_path} and {nu_path}",
        report.failures.len(),
        first.kind.name(),
        first.index,
        first.value
    )))
}

/// Parses `geometric:start:end:count` or a comma-separated list of values.
pub fn parse_eps_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Parse(format!("--eps-grid {text:?}: {msg}"));
    let float = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("{s:?} is not a number")))
    };
    if let Some(rest) = text.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, end, count] = parts[..] else {
            return Err(bad("expected geometric:START:END:COUNT"));
        };
        let (start, end) = (float(start)?, float(end)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| bad(&format!("{count:?} is not a count")))?;
        if count == 0 || !(start > 0.0 && end > 0.0) {
            return Err(bad("endpoints must be positive and the count at least 1"));
        }
        return Ok(lab::geometric_grid(start, end, count));
    }
    let values = text.split(',').map(float).collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok(values)
}

pub fn parse_n_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| {
                    CliError::Parse(format!("--n-list {text:?}: {s:?} is not a horizon"))
                })
        })
        .collect()
}

pub fn tightness(n_list: &[usize], eps_grid: &[f64], out: Option<&Path>) -> Result<(), CliError> {
    let rows = lab::tightness_experiment(n_list, eps_grid)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    writer
        .write_record([
            "n",
            "eps",
            "atv",
            "atv_closed",
            "kl",
            "kl_closed",
            "ratio",
            "bound_ok",
        ])
        .map_err(csv_err)?;
    for r in rows {
        let fields =
            [r.eps, r.atv, r.atv_closed, r.kl, r.kl_closed, r.ratio].map(|v| format!("{v:.16e}"));
        let mut record = vec![r.n.to_string()];
        record.extend(fields);
        record.push(r.bound_ok.to_string());
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(e.to_string()))?;
    write_output(out, &String::from_utf8(bytes).expect("csv output is ascii"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use atv_core::lab::CheckKind;

    #[test]
    fn grids() {
        let g = parse_eps_grid("geometric:0.25:1e-5:12").unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!((g[0], g[11]), (0.25, 1e-5));
        assert_eq!(parse_eps_grid("0.1, 0.01").unwrap(), vec![0.1, 0.01]);
        for bad in [
            "geometric:0.25:1e-5",
            "geometric:a:1:2",
            "geometric:0.1:0.01:0",
            "",
            "0.1,x",
        ] {
            assert!(
                matches!(parse_eps_grid(bad), Err(CliError::Parse(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn n_lists() {
        assert_eq!(parse_n_list("1,2, 6").unwrap(), vec![1, 2, 6]);
        assert!(parse_n_list("0").is_err());
        assert!(parse_n_list("1,,2").is_err());
    }

    #[test]
    fn infinite_values_serialize_as_text() {
        assert_eq!(ext(ExtReal::Infinite), json!("inf"));
        assert_eq!(ext(ExtReal::Finite(0.38)), json!(0.38));
    }

    #[test]
    fn summary_marks_every_check() {
        let args = VerifyArgs {
            count: 4,
            ..VerifyArgs::default()
        };
        let report = lab::run_sweep(&SweepConfig {
            count: 4,
            ..SweepConfig::default()
        })
        .unwrap();
        let text = summary(&args, &report);
        for kind in CheckKind::ALL {
            assert!(text.contains(kind.name()));
        }
        assert!(text.ends_with("result: pass\n"));
    }
}
