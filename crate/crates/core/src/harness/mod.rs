//! Configuration, report files and the commands behind the `cdet` binary.

pub mod checks;
pub mod config;
pub mod report;

use std::path::Path;

pub use config::{FamilyKind, Format, RunConfig, CONFIG_VERSION, DEFAULT_CONFIG};
pub use report::{Check, LimitLine, ReportFile, ReportHeader, ReportRow, CSV_COLUMNS};

use crate::convergence::{
    energy_gap, local_det_pairing, sweep, weak_pairing, FamilyTemplate, TestField,
};
use crate::error::{Error, Result};
use crate::functionals::FunctionalName;

/// Run every acceptance check. Criteria 6 to 8 are planar and always run
/// at d = 2; the others run at `config.dim`.
pub fn cmd_verify(config: &RunConfig) -> Result<ReportFile> {
    config.validate()?;
    let mut out = ReportFile::new("verify", config.clone());
    let planar = RunConfig {
        dim: 2,
        axis: config.axis.min(2),
        ..config.clone()
    };
    checks::image_volume(config, &mut out)?;
    checks::boundary_values(config, &mut out)?;
    checks::conformal_equality(config, &mut out)?;
    checks::bound_and_decay(config, &mut out)?;
    checks::energy_limit(config, &mut out)?;
    checks::tartar(&planar, &mut out)?;
    checks::local_versus_global(&planar, &mut out)?;
    checks::concentration(&planar, &mut out)?;
    checks::oracles(config, &mut out)?;
    checks::determinism(config, &mut out)?;
    Ok(out)
}

/// Sweep the configured family over the configured functionals.
///
/// `energy_gap`, `weak_pairing` and `local_det` run their own operations
/// (scaled family with volume `c`, identity test field, radius-1/2 bump)
/// and append their rows after the plain sweep.
pub fn cmd_sweep(config: &RunConfig) -> Result<ReportFile> {
    config.validate()?;
    let template = config.template();
    let d = config.dim;
    let names = config.functionals()?;
    let mut out = ReportFile::new("sweep", config.clone());
    let (special, plain): (Vec<FunctionalName>, Vec<FunctionalName>) =
        names.iter().partition(|n| {
            matches!(
                n,
                FunctionalName::EnergyGap | FunctionalName::WeakPairing | FunctionalName::LocalDet
            )
        });
    if !plain.is_empty() {
        out.push_sequence(&sweep(&template, &config.n, &plain, config.tol)?);
    }
    for name in special {
        let seq = match name {
            FunctionalName::EnergyGap => {
                let base = match template {
                    FamilyTemplate::Scaled { dim, .. } => FamilyTemplate::Raw { dim },
                    t => t,
                };
                energy_gap(&base, config.c, &config.n, config.tol)?
            }
            FunctionalName::WeakPairing => {
                weak_pairing(&template, &TestField::identity(d), &config.n, config.tol)?
            }
            _ => {
                let bump = TestField::bump(d, checks::CONCENTRATION_RADIUS, 1.0)?;
                local_det_pairing(&template, &bump, &config.n, config.tol)?.sequence
            }
        };
        out.push_sequence(&seq);
    }
    Ok(out)
}

/// Determinant sweep of the planar oscillating example with its exact values.
///
/// Each computed `det` row is followed by a `det_exact` row whose
/// `abs_error` is the measured discrepancy.
pub fn cmd_tartar(config: &RunConfig) -> Result<ReportFile> {
    let config = RunConfig {
        dim: 2,
        family: FamilyKind::Tartar,
        functional: vec![FunctionalName::Det.to_string()],
        axis: config.axis.min(2),
        ..config.clone()
    };
    config.validate()?;
    let a = config.a;
    let seq = sweep(
        &FamilyTemplate::Tartar { a },
        &config.n,
        &[FunctionalName::Det],
        config.tol,
    )?;
    let mut out = ReportFile::new("tartar", config.clone());
    for row in &seq.rows {
        let det = row
            .get(FunctionalName::Det)
            .ok_or_else(|| Error::Config("missing det row".into()))?;
        let exact = checks::tartar_closed_form(a, row.n);
        out.rows.push(ReportRow::from(det));
        out.rows.push(ReportRow {
            n: row.n,
            functional: "det_exact".to_string(),
            value: exact,
            abs_error: (det.value - exact).abs(),
            nodes: 0,
            converged: true,
        });
    }
    out.limits.extend(seq.limits.iter().map(LimitLine::from));
    out.limits.push(LimitLine {
        functional: "det_exact".to_string(),
        model: "closed form".to_string(),
        limit: -0.5 * a,
        slope: 0.0,
        residual: 0.0,
        rows_used: 0,
    });
    Ok(out)
}

/// Parse a report written by any command.
pub fn cmd_report(path: &Path) -> Result<ReportFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ReportFile::parse(&text)
}
