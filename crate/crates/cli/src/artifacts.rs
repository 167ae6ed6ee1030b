//! JSON documents written by the subcommands and read back by `report`.

use std::path::{Path, PathBuf};

use flamefront_core::config::RunConfig;
use flamefront_core::freeboundary::{AuditParams, FreeBoundaryReport};
use flamefront_core::problem::AssumptionReport;
use flamefront_core::regularity::RegularityReport;
use flamefront_core::solver::SolveDiagnostics;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const GIT_DESCRIBE: &str = env!("FLAMEFRONT_GIT_DESCRIBE");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Solve,
    Sweep,
    AuditFb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub kind: Kind,
    pub config_hash: String,
    pub git_describe: String,
    pub seed: u64,
    pub version: String,
}

impl Meta {
    pub fn new(kind: Kind, cfg: &RunConfig) -> Self {
        Self {
            kind,
            config_hash: cfg.hash(),
            git_describe: GIT_DESCRIBE.into(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveOutput {
    pub meta: Meta,
    pub eps: f64,
    pub field: Option<PathBuf>,
    pub assumptions: AssumptionReport,
    pub diagnostics: Option<SolveDiagnostics>,
    /// Set when the solve failed; `diagnostics` is then absent.
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepOutput {
    pub meta: Meta,
    pub config: RunConfig,
    pub eps: Vec<f64>,
    pub assumptions: AssumptionReport,
    /// Smallest-ε field, relative to the report.
    pub limit_field: Option<PathBuf>,
    pub regularity: Option<RegularityReport>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AuditOutput {
    pub meta: Meta,
    pub field: PathBuf,
    pub sweep_report: Option<PathBuf>,
    pub params: AuditParams,
    pub assumptions: AssumptionReport,
    /// One free-boundary CSV per audited slice, relative to the report.
    pub fb_csv: Vec<PathBuf>,
    pub report: FreeBoundaryReport,
}

/// Any of the three documents; dispatch on `meta.kind`.
pub enum Document {
    Solve(SolveOutput),
    Sweep(SweepOutput),
    Audit(AuditOutput),
}

#[derive(Deserialize)]
struct Header {
    meta: Meta,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bad = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
        let header: Header = serde_json::from_str(&text).map_err(bad)?;
        Ok(match header.meta.kind {
            Kind::Solve => Document::Solve(serde_json::from_str(&text).map_err(bad)?),
            Kind::Sweep => Document::Sweep(serde_json::from_str(&text).map_err(bad)?),
            Kind::AuditFb => Document::Audit(serde_json::from_str(&text).map_err(bad)?),
        })
    }
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

/// `path` relative to the directory of `base` when possible.
pub fn relative_to(path: &Path, base: &Path) -> PathBuf {
    let dir = base.parent().unwrap_or(Path::new(""));
    path.strip_prefix(dir).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

/// Resolves a path stored in a report against the report's directory.
pub fn resolve(stored: &Path, report: &Path) -> PathBuf {
    if stored.is_absolute() {
        stored.to_path_buf()
    } else {
        report.parent().unwrap_or(Path::new("")).join(stored)
    }
}
