//! Run configuration: shipped defaults, file loading and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convergence::FamilyTemplate;
use crate::error::{invalid, Error, Result};
use crate::functionals::FunctionalName;

/// The defaults file shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../../config/default.toml");

/// Schema version understood by this build.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Raw,
    Normalized,
    Reflected,
    Scaled,
    Tartar,
    Identity,
    Zero,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "raw" => FamilyKind::Raw,
            "normalized" => FamilyKind::Normalized,
            "reflected" => FamilyKind::Reflected,
            "scaled" => FamilyKind::Scaled,
            "tartar" => FamilyKind::Tartar,
            "identity" => FamilyKind::Identity,
            "zero" => FamilyKind::Zero,
            other => return Err(invalid("family", format!("unknown family `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(invalid(
                "format",
                format!("expected csv or json, got `{other}`"),
            )),
        }
    }
}

/// Everything a run depends on. The report echoes it in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub dim: usize,
    pub n: Vec<u32>,
    pub family: FamilyKind,
    /// Functional names; a bare `lp` or `grad_lp` means exponent `dim`.
    pub functional: Vec<String>,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub c: f64,
    pub a: f64,
    pub axis: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str(DEFAULT_CONFIG).expect("shipped default config parses")
    }
}

impl RunConfig {
    /// Parse a config file, filling missing keys from the shipped defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut base: toml::Table =
            toml::from_str(DEFAULT_CONFIG).map_err(|e| Error::Config(e.to_string()))?;
        let overrides: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in overrides {
            base.insert(k, v);
        }
        let cfg: RunConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if cfg.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config_version {} is not supported (expected {CONFIG_VERSION})",
                cfg.config_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Check every field against the preconditions of the operations it feeds.
    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config_version {}",
                self.config_version
            )));
        }
        if !(2..=3).contains(&self.dim) {
            return Err(invalid(
                "dim",
                format!("cubature covers d = 2 and d = 3, got {}", self.dim),
            ));
        }
        if self.family == FamilyKind::Tartar && self.dim != 2 {
            return Err(invalid("dim", "the tartar family is planar; use dim = 2"));
        }
        if self.n.len() < 3 {
            return Err(invalid(
                "n",
                format!("need at least 3 indices, got {}", self.n.len()),
            ));
        }
        if self.n[0] == 0 || self.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "n",
                "indices must be positive and strictly ascending",
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(
                "tol",
                format!("need a positive tolerance, got {}", self.tol),
            ));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("need c > 0, got {}", self.c)));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(invalid("a", format!("need 0 < a < 1, got {}", self.a)));
        }
        if self.axis == 0 || self.axis > self.dim {
            return Err(invalid(
                "axis",
                format!("need 1 <= axis <= {}, got {}", self.dim, self.axis),
            ));
        }
        self.functionals()?;
        Ok(())
    }

    pub fn template(&self) -> FamilyTemplate {
        let dim = self.dim;
        match self.family {
            FamilyKind::Raw => FamilyTemplate::Raw { dim },
            FamilyKind::Normalized => FamilyTemplate::Normalized { dim },
            FamilyKind::Reflected => FamilyTemplate::Reflected {
                dim,
                axis: self.axis,
            },
            FamilyKind::Scaled => FamilyTemplate::Scaled { dim, c: self.c },
            FamilyKind::Tartar => FamilyTemplate::Tartar { a: self.a },
            FamilyKind::Identity => FamilyTemplate::Identity { dim },
            FamilyKind::Zero => FamilyTemplate::Zero { dim },
        }
    }

    pub fn functionals(&self) -> Result<Vec<FunctionalName>> {
        if self.functional.is_empty() {
            return Err(invalid("functional", "select at least one functional"));
        }
        let d = self.dim as f64;
        self.functional
            .iter()
            .map(|s| match s.trim() {
                "lp" => Ok(FunctionalName::Lp(d)),
                "grad_lp" => Ok(FunctionalName::GradLp(d)),
                other => other.parse(),
            })
            .collect()
    }
}
