//! Report files: a CSV body framed by `#` header and footer lines, or JSON.
//!
//! ```text
//! # tool: cdet
//! # version: 0.1.0
//! # timestamp: 2026-01-01T00:00:00Z
//! # command: sweep
//! # config: {"config_version":1,...}
//! n,functional,value,abs_error,nodes,converged
//! 4,abs_det,2.5132741228718345e0,3.2e-14,...,true
//! # limit: functional=abs_det | model=c0 + c1/n | limit=... | slope=... | residual=... | rows_used=3
//! # check: criterion=1 | name=... | status=PASS | measured=... | expected=<= 1e-6
//! ```
//!
//! CSV numbers carry 17 significant digits, so every value re-parses
//! bit for bit.

use serde::{Deserialize, Serialize};

use super::config::{Format, RunConfig};
use crate::convergence::{LimitFit, SequenceReport};
use crate::error::{Error, Result};
use crate::functionals::FunctionalResult;

pub const CSV_COLUMNS: &str = "n,functional,value,abs_error,nodes,converged";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    /// Wall-clock stamp; excluded from reproducibility comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub command: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u32,
    pub functional: String,
    pub value: f64,
    pub abs_error: f64,
    pub nodes: usize,
    pub converged: bool,
}

impl From<&FunctionalResult> for ReportRow {
    fn from(r: &FunctionalResult) -> Self {
        ReportRow {
            n: r.n,
            functional: r.name.to_string(),
            value: r.value,
            abs_error: r.error,
            nodes: r.nodes,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLine {
    pub functional: String,
    pub model: String,
    pub limit: f64,
    pub slope: f64,
    pub residual: f64,
    pub rows_used: usize,
}

impl From<&LimitFit> for LimitLine {
    fn from(f: &LimitFit) -> Self {
        LimitLine {
            functional: f.name.to_string(),
            model: f.model.describe(),
            limit: f.limit,
            slope: f.slope,
            residual: f.residual,
            rows_used: f.rows_used,
        }
    }
}

/// One acceptance check with its measured value and the requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub header: ReportHeader,
    pub rows: Vec<ReportRow>,
    pub limits: Vec<LimitLine>,
    pub checks: Vec<Check>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl ReportFile {
    pub fn new(command: &str, config: RunConfig) -> Self {
        ReportFile {
            header: ReportHeader {
                tool: "cdet".to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: None,
                command: command.to_string(),
                config,
            },
            rows: Vec::new(),
            limits: Vec::new(),
            checks: Vec::new(),
        }
    }

    /// Append every row and limit of a sweep.
    pub fn push_sequence(&mut self, seq: &SequenceReport) {
        for row in &seq.rows {
            self.rows.extend(row.results.iter().map(ReportRow::from));
        }
        self.limits.extend(seq.limits.iter().map(LimitLine::from));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// The same report without its timestamp.
    pub fn without_timestamp(&self) -> Self {
        let mut r = self.clone();
        r.header.timestamp = None;
        r
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Parse either format, sniffing JSON by its leading brace.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_csv(text)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let h = &self.header;
        let config = serde_json::to_string(&h.config).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = String::new();
        out.push_str(&format!("# tool: {}\n# version: {}\n", h.tool, h.version));
        if let Some(ts) = &h.timestamp {
            out.push_str(&format!("# timestamp: {ts}\n"));
        }
        out.push_str(&format!("# command: {}\n# config: {config}\n", h.command));
        out.push_str(CSV_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.functional,
                num(r.value),
                num(r.abs_error),
                r.nodes,
                r.converged
            ));
        }
        for l in &self.limits {
            out.push_str(&format!(
                "# limit: functional={} | model={} | limit={} | slope={} | residual={} | rows_used={}\n",
                l.functional,
                l.model,
                num(l.limit),
                num(l.slope),
                num(l.residual),
                l.rows_used
            ));
        }
        for c in &self.checks {
            out.push_str(&format!(
                "# check: criterion={} | name={} | status={} | measured={} | expected={}\n",
                c.criterion,
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                num(c.measured),
                c.expected
            ));
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut tool = None;
        let mut version = None;
        let mut timestamp = None;
        let mut command = None;
        let mut config = None;
        let mut seen_columns = false;
        let mut rows = Vec::new();
        let mut limits = Vec::new();
        let mut checks = Vec::new();

        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let err = |reason: String| Error::Parse {
                line: lineno,
                reason,
            };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix("# ") {
                let (key, value) = meta
                    .split_once(": ")
                    .ok_or_else(|| err(format!("expected `# key: value`, got `{line}`")))?;
                match key {
                    "tool" => tool = Some(value.to_string()),
                    "version" => version = Some(value.to_string()),
                    "timestamp" => timestamp = Some(value.to_string()),
                    "command" => command = Some(value.to_string()),
                    "config" => {
                        config = Some(
                            serde_json::from_str::<RunConfig>(value)
                                .map_err(|e| err(e.to_string()))?,
                        )
                    }
                    "limit" => {
                        let f = Fields::parse(value).map_err(err)?;
                        limits.push(LimitLine {
                            functional: f.get("functional").map_err(err)?.to_string(),
                            model: f.get("model").map_err(err)?.to_string(),
                            limit: f.num("limit").map_err(err)?,
                            slope: f.num("slope").map_err(err)?,
                            residual: f.num("residual").map_err(err)?,
                            rows_used: f.int("rows_used").map_err(err)?,
                        });
                    }
                    "check" => {
                        let f = Fields::parse(value).map_err(err)?;
                        let passed = match f.get("status").map_err(err)? {
                            "PASS" => true,
                            "FAIL" => false,
                            other => return Err(err(format!("bad status `{other}`"))),
                        };
                        checks.push(Check {
                            criterion: f.int("criterion").map_err(err)?,
                            name: f.get("name").map_err(err)?.to_string(),
                            passed,
                            measured: f.num("measured").map_err(err)?,
                            expected: f.get("expected").map_err(err)?.to_string(),
                        });
                    }
                    other => return Err(err(format!("unknown header key `{other}`"))),
                }
                continue;
            }
            if !seen_columns {
                if line != CSV_COLUMNS {
                    return Err(err(format!("expected column line `{CSV_COLUMNS}`")));
                }
                seen_columns = true;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(err(format!("expected 6 fields, got {}", cells.len())));
            }
            let parse_f = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("bad number `{s}`")))
            };
            rows.push(ReportRow {
                n: cells[0]
                    .parse()
                    .map_err(|_| err(format!("bad n `{}`", cells[0])))?,
                functional: cells[1].to_string(),
                value: parse_f(cells[2])?,
                abs_error: parse_f(cells[3])?,
                nodes: cells[4]
                    .parse()
                    .map_err(|_| err(format!("bad node count `{}`", cells[4])))?,
                converged: cells[5]
                    .parse()
                    .map_err(|_| err(format!("bad flag `{}`", cells[5])))?,
            });
        }

        let missing = |what: &str| Error::Parse {
            line: 0,
            reason: format!("missing `{what}` header"),
        };
        if !seen_columns {
            return Err(missing("column"));
        }
        Ok(ReportFile {
            header: ReportHeader {
                tool: tool.ok_or_else(|| missing("tool"))?,
                version: version.ok_or_else(|| missing("version"))?,
                timestamp,
                command: command.ok_or_else(|| missing("command"))?,
                config: config.ok_or_else(|| missing("config"))?,
            },
            rows,
            limits,
            checks,
        })
    }
}

/// `key=value | key=value` footer fields.
struct Fields<'a>(Vec<(&'a str, &'a str)>);

impl<'a> Fields<'a> {
    fn parse(s: &'a str) -> std::result::Result<Self, String> {
        s.split(" | ")
            .map(|kv| {
                kv.split_once('=')
                    .ok_or_else(|| format!("expected key=value, got `{kv}`"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Fields)
    }

    fn get(&self, key: &str) -> std::result::Result<&'a str, String> {
        self.0
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("missing field `{key}`"))
    }

    fn num(&self, key: &str) -> std::result::Result<f64, String> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| format!("bad number `{v}` for `{key}`"))
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> std::result::Result<T, String> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| format!("bad integer `{v}` for `{key}`"))
    }
}
