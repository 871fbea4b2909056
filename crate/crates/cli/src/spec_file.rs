//! JSON process files.
//!
//! ```json
//! { "n": 2, "alphabets": [2, ["lo", "hi"]], "format": "dense",
//!   "probs": [0.5, 0.0, 0.25, 0.25] }
//! ```
//!
//! Sparse files list `{"path": [..], "p": ..}` entries instead; paths not
//! listed have probability zero.

use std::path::Path;

use atv_core::{Alphabet, JointTable, ProcessLaw};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpecFile {
    pub n: usize,
    pub alphabets: Vec<AlphabetSpec>,
    pub format: Format,
    pub probs: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphabetSpec {
    Size(usize),
    Labels(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Dense,
    Sparse,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseEntry {
    path: Vec<usize>,
    p: f64,
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map_or(1, |i| i + 1)
}

/// Parses and validates a process file held in `text`; `name` prefixes
/// error messages.
pub fn parse_law(name: &str, text: &str) -> Result<ProcessLaw, CliError> {
    let spec: ProcessSpecFile = serde_json::from_str(text)
        .map_err(|e| CliError::Parse(format!("{name}:{}:{}: {e}", e.line(), e.column())))?;
    let at = |key: &str, msg: String| {
        CliError::Validation(format!("{name}:{}: {msg}", line_of(text, key)))
    };

    if spec.n == 0 {
        return Err(at("n", "n must be at least 1".into()));
    }
    if spec.alphabets.len() != spec.n {
        return Err(at(
            "alphabets",
            format!(
                "{} alphabets given for n = {}",
                spec.alphabets.len(),
                spec.n
            ),
        ));
    }
    let alphabets = spec
        .alphabets
        .iter()
        .map(|a| match a {
            AlphabetSpec::Size(s) => Alphabet::new(*s),
            AlphabetSpec::Labels(labels) => Alphabet::with_labels(labels.clone()),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| at("alphabets", e.to_string()))?;

    let table = match spec.format {
        Format::Dense => {
            let probs: Vec<f64> = serde_json::from_value(spec.probs).map_err(|e| {
                at(
                    "probs",
                    format!("dense probs must be an array of numbers: {e}"),
                )
            })?;
            JointTable::Dense(probs)
        }
        Format::Sparse => {
            let entries: Vec<SparseEntry> = serde_json::from_value(spec.probs).map_err(|e| {
                at(
                    "probs",
                    format!("sparse probs must be a list of {{\"path\", \"p\"}}: {e}"),
                )
            })?;
            JointTable::Sparse(entries.into_iter().map(|e| (e.path, e.p)).collect())
        }
    };
    ProcessLaw::from_joint(alphabets, &table).map_err(|e| at("probs", e.to_string()))
}

pub fn read_law(path: &Path) -> Result<(ProcessLaw, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let law = parse_law(&path.display().to_string(), &text)?;
    Ok((law, text))
}

/// Dense process file for `law`, pretty-printed with a trailing newline.
pub fn law_to_json(law: &ProcessLaw) -> String {
    let spec = ProcessSpecFile {
        n: law.horizon(),
        alphabets: law
            .alphabets()
            .iter()
            .map(|a| match a.labels() {
                Some(labels) => AlphabetSpec::Labels(labels.to_vec()),
                None => AlphabetSpec::Size(a.size()),
            })
            .collect(),
        format: Format::Dense,
        probs: Value::from(law.joint_dense()),
    };
    let mut out = serde_json::to_string_pretty(&spec).expect("process files always serialize");
    out.push('\n');
    out
}
