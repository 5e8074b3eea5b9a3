//! `cdet`: command-line front end for the conformal determinant lab.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use conformal_det::harness::{
    cmd_report, cmd_sweep, cmd_tartar, cmd_verify, FamilyKind, Format, ReportFile, RunConfig,
};

/// Environment variable holding the worker thread count. Results do not
/// depend on it.
const THREADS_ENV: &str = "CDET_THREADS";

#[derive(Parser)]
#[command(
    name = "cdet",
    version,
    about = "Weak discontinuity of the Jacobian determinant along conformal maps"
)]
struct Cli {
    /// Config file; keys it omits fall back to the shipped defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the acceptance checks; exits 1 if any check fails.
    Verify(RunArgs),
    /// Sweep one family over n and extrapolate each functional.
    Sweep(RunArgs),
    /// Determinant sweep of the planar oscillating example with exact values.
    Tartar(RunArgs),
    /// Parse a report; summarize it, or convert it with --format.
    Report {
        file: PathBuf,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated ascending indices, e.g. 4,8,16,32,64.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    /// raw, normalized, reflected, scaled, tartar, identity or zero.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated functionals, e.g. abs_det,lp,grad_lp:2.
    #[arg(long, value_delimiter = ',')]
    functional: Option<Vec<String>>,
    /// Absolute cubature tolerance per integral.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Target volume of the scaled family.
    #[arg(long)]
    c: Option<f64>,
    /// Side of the square for the tartar family.
    #[arg(long)]
    a: Option<f64>,
    /// 1-based reflection axis.
    #[arg(long)]
    axis: Option<usize>,
}

impl RunArgs {
    fn apply(self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(v) = self.dim {
            cfg.dim = v;
            cfg.axis = cfg.axis.min(v.max(1));
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.family {
            cfg.family = v.parse::<FamilyKind>()?;
        }
        if let Some(v) = self.functional {
            cfg.functional = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.format {
            cfg.format = v.parse::<Format>()?;
        }
        if let Some(v) = self.out {
            cfg.out = Some(v);
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.a {
            cfg.a = v;
        }
        if let Some(v) = self.axis {
            cfg.axis = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    if threads == 0 {
        bail!("{THREADS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_report(mut report: ReportFile, cfg: &RunConfig) -> Result<()> {
    report.header.timestamp =
        Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    emit(&report.render(cfg.format)?, cfg.out.as_ref())
}

fn summarize(report: &ReportFile) -> String {
    let h = &report.header;
    let mut s = format!(
        "{} {} `{}` report, {} rows\n",
        h.tool,
        h.version,
        h.command,
        report.rows.len()
    );
    if let Some(ts) = &h.timestamp {
        s.push_str(&format!("written {ts}\n"));
    }
    for l in &report.limits {
        s.push_str(&format!(
            "limit {:<16} {:>24.16e}  residual {:.3e}  ({}, {} rows)\n",
            l.functional, l.limit, l.residual, l.model, l.rows_used
        ));
    }
    for c in &report.checks {
        s.push_str(&format!(
            "{} [{}] {}: {:.6e} (expected {})\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.criterion,
            c.name,
            c.measured,
            c.expected
        ));
    }
    s
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Verify(args) => {
            let cfg = args.apply(base)?;
            let report = cmd_verify(&cfg)?;
            for c in &report.checks {
                eprintln!(
                    "{} [{}] {}: {:.6e} (expected {})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.criterion,
                    c.name,
                    c.measured,
                    c.expected
                );
            }
            let failed: Vec<String> = report.failed_checks().map(|c| c.name.clone()).collect();
            write_report(report, &cfg)?;
            if !failed.is_empty() {
                eprintln!("{} check(s) failed; first: {}", failed.len(), failed[0]);
                return Ok(false);
            }
            Ok(true)
        }
        Command::Sweep(args) => {
            let cfg = args.apply(base)?;
            write_report(cmd_sweep(&cfg)?, &cfg)?;
            Ok(true)
        }
        Command::Tartar(args) => {
            let mut cfg = args.apply(RunConfig { dim: 2, ..base })?;
            cfg.family = FamilyKind::Tartar;
            write_report(cmd_tartar(&cfg)?, &cfg)?;
            Ok(true)
        }
        Command::Report { file, format, out } => {
            let report = cmd_report(&file)?;
            match format {
                Some(f) => emit(&report.render(f.parse::<Format>()?)?, out.as_ref())?,
                None => emit(&summarize(&report), out.as_ref())?,
            }
            Ok(report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
