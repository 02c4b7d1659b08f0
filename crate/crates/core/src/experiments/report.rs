use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::GENERATOR_ID;

pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

impl Comparison {
    fn symbol(self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
        }
    }
}

/// One declared tolerance and whether the observed value met it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: Comparison::AtMost,
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: Comparison::AtLeast,
            limit,
            passed: value >= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator_id: String,
    pub seed: u64,
}

/// Outcome of one experiment. Every number in it is a function of
/// `parameters` and `provenance.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: u32,
    pub experiment: String,
    pub provenance: Provenance,
    pub parameters: Value,
    pub trials: Vec<Value>,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, parameters: Value, trials: Vec<Value>, summary: Value, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            format: REPORT_FORMAT,
            experiment: experiment.to_owned(),
            provenance: Provenance {
                generator_id: GENERATOR_ID.to_owned(),
                seed,
            },
            parameters,
            trials,
            summary,
            checks,
            passed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment: {}", self.experiment);
        let _ = writeln!(out, "generator: {}  seed: {}", self.provenance.generator_id, self.provenance.seed);
        let _ = writeln!(out, "parameters:");
        write_fields(&mut out, &self.parameters, "  ");
        let _ = writeln!(out, "summary:");
        write_fields(&mut out, &self.summary, "  ");
        let _ = writeln!(out, "trials: {}", self.trials.len());
        let _ = writeln!(out, "checks:");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  [{}] {}: {} {} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                number(c.value),
                c.comparison.symbol(),
                number(c.limit)
            );
        }
        let _ = writeln!(out, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }

    /// Writes `<dir>/<experiment>.json` and `<dir>/<experiment>.txt`.
    pub fn write(&self, dir: &Path) -> Result<[PathBuf; 2]> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_owned(),
            source,
        })?;
        let json = dir.join(format!("{}.json", self.experiment));
        let text = dir.join(format!("{}.txt", self.experiment));
        for (path, body) in [(&json, self.to_json()), (&text, self.to_text())] {
            fs::write(path, body).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
        }
        Ok([json, text])
    }
}

/// Plain notation for ordinary magnitudes, scientific otherwise.
pub(crate) fn number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e7).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn write_fields(out: &mut String, value: &Value, indent: &str) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) => {
                        let _ = writeln!(out, "{indent}{k}:");
                        write_fields(out, v, &format!("{indent}  "));
                    }
                    _ => {
                        let _ = writeln!(out, "{indent}{k}: {v}");
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{indent}{other}");
        }
    }
}

/// Two-column `step,label` CSV of a label series.
pub fn labels_csv(labels: &[f64]) -> String {
    let mut out = String::with_capacity(labels.len() * 24 + 11);
    out.push_str("step,label\n");
    for (i, x) in labels.iter().enumerate() {
        let _ = writeln!(out, "{i},{x}");
    }
    out
}

pub fn write_labels_csv(path: &Path, labels: &[f64]) -> Result<()> {
    fs::write(path, labels_csv(labels)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
