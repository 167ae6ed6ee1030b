//! `flamefront`: solve, sweep, audit and summarize from a JSON run configuration.

mod artifacts;
mod summary;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flamefront_core::config::RunConfig;
use flamefront_core::freeboundary::{audit_free_boundary, extract_at_level, write_fb_csv, AuditStatus};
use flamefront_core::problem::{validate_assumptions, AssumptionReport, ProblemSpec};
use flamefront_core::regularity::epsilon_sweep;
use flamefront_core::solver::{solve_epsilon_problem, SolutionField};
use flamefront_core::Error;

use artifacts::{relative_to, resolve, write_json, AuditOutput, Document, Kind, Meta, SolveOutput, SweepOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("audit failure: {0}")]
    Audit(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Audit(_) => 4,
        }
    }
}

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Parser)]
#[command(name = "flamefront", version, about = "Singular-limit solver and free-boundary audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed of the sampling audits.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one ε-problem; writes the field CSV and diagnostics.json beside it.
    Solve {
        #[command(flatten)]
        common: Common,
        /// ε of the solve (defaults to `reaction.eps`).
        #[arg(long)]
        eps: Option<f64>,
        /// Field CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a decreasing ε list and measure the uniform estimates.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Report JSON path; the limit field is written beside it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every ε-field as CSV.
        #[arg(long)]
        dump_fields: bool,
    },
    /// Free-boundary audits of a field.
    AuditFb {
        #[command(flatten)]
        common: Common,
        /// Field CSV; defaults to the limit field of the sweep report.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Sweep report supplying Υ̂, the smallest ε and the limit field.
        #[arg(long)]
        sweep: Option<PathBuf>,
        /// Comma-separated slice times.
        #[arg(long, value_delimiter = ',')]
        t0: Option<Vec<f64>>,
        /// Report JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Markdown tables and plot data from report JSONs.
    Report {
        /// Report JSONs (solve, sweep or audit-fb).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Markdown path; plot CSVs go to the same directory.
        #[arg(long, default_value = "summary.md")]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config).map_err(config_err)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn check_assumptions(cfg: &RunConfig, problem: &ProblemSpec, eps: &[f64]) -> Result<AssumptionReport, CliError> {
    let report = validate_assumptions(problem, eps, cfg.seed).map_err(config_err)?;
    if cfg.enforce_assumptions && !report.pass {
        let failing: Vec<String> = [
            ("operator", &report.a1_operator),
            ("reaction", &report.a2_reaction),
            ("forcing", &report.a3_forcing),
            ("dirichlet", &report.a4_dirichlet),
        ]
        .iter()
        .filter(|(_, c)| !c.pass)
        .map(|(name, c)| format!("{name}: {}", c.detail))
        .collect();
        return Err(CliError::Config(format!(
            "assumptions fail ({}); set enforce_assumptions to false to run anyway",
            failing.join("; ")
        )));
    }
    Ok(report)
}

fn solve(common: &Common, eps: Option<f64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(e) = eps {
        if !(e > 0.0) {
            return Err(CliError::Config(format!("--eps must be positive, got {e}")));
        }
        cfg.reaction.eps = Some(e);
    }
    let eps = cfg.solve_eps();
    let out = out
        .or_else(|| cfg.output.field.clone())
        .unwrap_or_else(|| "field.csv".into());
    let diag_path = out.with_file_name("diagnostics.json");
    let problem = cfg.problem().map_err(config_err)?;
    let assumptions = check_assumptions(&cfg, &problem, &[eps])?;
    let mut doc = SolveOutput {
        meta: Meta::new(Kind::Solve, &cfg),
        eps,
        field: None,
        assumptions,
        diagnostics: None,
        error: None,
    };
    match solve_epsilon_problem(&problem, eps, &cfg.solver) {
        Ok(field) => {
            artifacts::ensure_parent(&out)?;
            field.write_csv(&out).map_err(|e| CliError::Input(e.to_string()))?;
            doc.field = Some(relative_to(&out, &diag_path));
            doc.diagnostics = Some(field.diagnostics.clone());
            write_json(&diag_path, &doc)
        }
        Err(e) => {
            doc.error = Some(e.to_string());
            write_json(&diag_path, &doc)?;
            Err(CliError::Solver(e.to_string()))
        }
    }
}

fn eps_label(e: f64) -> String {
    format!("{e}").replace('.', "p")
}

fn sweep(common: &Common, eps: Option<Vec<f64>>, out: Option<PathBuf>, dump_fields: bool) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(list) = eps {
        cfg.sweep.eps = list;
        cfg.validate().map_err(config_err)?;
    }
    let eps = cfg.sweep.eps.clone();
    let eps_min = *eps.last().expect("validated nonempty");
    let out = out
        .or_else(|| cfg.output.sweep_report.clone())
        .unwrap_or_else(|| "report.json".into());
    let problem = cfg.problem().map_err(config_err)?;
    let assumptions = check_assumptions(&cfg, &problem, &eps)?;
    let opts = cfg.sweep_options(&problem.grid, eps_min);
    let mut doc = SweepOutput {
        meta: Meta::new(Kind::Sweep, &cfg),
        config: cfg.clone(),
        eps: eps.clone(),
        assumptions,
        limit_field: None,
        regularity: None,
        error: None,
    };
    match epsilon_sweep(&problem, &eps, &cfg.solver, &opts) {
        Ok(result) => {
            let limit = out.with_file_name("limit_field.csv");
            artifacts::ensure_parent(&limit)?;
            result.limit().write_csv(&limit).map_err(|e| CliError::Input(e.to_string()))?;
            if dump_fields {
                for (e, f) in result.eps.iter().zip(&result.fields) {
                    let path = out.with_file_name(format!("field_eps{}.csv", eps_label(*e)));
                    f.write_csv(&path).map_err(|e| CliError::Input(e.to_string()))?;
                }
            }
            doc.limit_field = Some(relative_to(&limit, &out));
            doc.regularity = Some(result.report);
            write_json(&out, &doc)
        }
        Err(e) => {
            doc.error = Some(e.to_string());
            write_json(&out, &doc)?;
            Err(CliError::Solver(e.to_string()))
        }
    }
}

fn audit_fb(
    common: &Common,
    field: Option<PathBuf>,
    sweep: Option<PathBuf>,
    t0: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(t0) = t0 {
        cfg.audit.t0 = t0;
    }
    let sweep_path = sweep.or_else(|| cfg.output.sweep_report.clone().filter(|p| p.exists()));
    let sweep_doc = match &sweep_path {
        Some(p) => match Document::load(p)? {
            Document::Sweep(doc) => Some(doc),
            _ => return Err(CliError::Input(format!("{}: not a sweep report", p.display()))),
        },
        None => None,
    };
    let field_path = match (field, &sweep_doc, &sweep_path) {
        (Some(f), _, _) => f,
        (None, Some(doc), Some(p)) => match &doc.limit_field {
            Some(f) => resolve(f, p),
            None => return Err(CliError::Input(format!("{}: sweep has no limit field", p.display()))),
        },
        _ => return Err(CliError::Config("audit-fb needs --field or a sweep report".into())),
    };
    let out = out
        .or_else(|| cfg.output.fb_report.clone())
        .unwrap_or_else(|| "fb_report.json".into());

    let field = SolutionField::read_csv(&field_path).map_err(|e| CliError::Input(format!("{}: {e}", field_path.display())))?;
    let problem = cfg.problem().map_err(config_err)?;
    let (g, fg) = (&problem.grid, field.grid());
    if g.dim() != fg.dim() || g.nodes_per_level() != fg.nodes_per_level() || g.steps() != fg.steps() {
        return Err(CliError::Config(format!(
            "{} does not match the configured grid",
            field_path.display()
        )));
    }
    let eps_min = sweep_doc
        .as_ref()
        .and_then(|d| d.eps.last().copied())
        .unwrap_or(*cfg.sweep.eps.last().expect("validated nonempty"));
    let upsilon_hat = sweep_doc
        .as_ref()
        .and_then(|d| d.regularity.as_ref().map(|r| r.upsilon_hat))
        .unwrap_or_else(|| field.sup());
    let assumptions = check_assumptions(&cfg, &problem, &[eps_min])?;
    let params = cfg.audit_params(fg, upsilon_hat, eps_min);
    let report = audit_free_boundary(&field, &params).map_err(|e| match e {
        Error::OffGrid(_) => config_err(e),
        e => CliError::Audit(e.to_string()),
    })?;

    let mut fb_csv = Vec::new();
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("fb_report").to_string();
    for s in &report.slices {
        let path = out.with_file_name(format!("{stem}_level{}.csv", s.level));
        let slice = extract_at_level(&field, s.level, params.theta);
        artifacts::ensure_parent(&path)?;
        write_fb_csv(fg, &slice, &path).map_err(|e| CliError::Input(e.to_string()))?;
        fb_csv.push(relative_to(&path, &out));
    }
    let failed = report.nondegeneracy_status == AuditStatus::Fail || report.porosity_failures > 0;
    let summary = format!(
        "non-degeneracy {:?}, {} porosity failures",
        report.nondegeneracy_status, report.porosity_failures
    );
    let doc = AuditOutput {
        meta: Meta::new(Kind::AuditFb, &cfg),
        field: relative_to(&field_path, &out),
        sweep_report: sweep_path.map(|p| relative_to(&p, &out)),
        params,
        assumptions,
        fb_csv,
        report,
    };
    write_json(&out, &doc)?;
    if failed {
        return Err(CliError::Audit(summary));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common, eps, out } => solve(&common, eps, out),
        Command::Sweep {
            common,
            eps,
            out,
            dump_fields,
        } => sweep(&common, eps, out, dump_fields),
        Command::AuditFb {
            common,
            field,
            sweep,
            t0,
            out,
        } => audit_fb(&common, field, sweep, t0, out),
        Command::Report { inputs, out } => summary::report(&inputs, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flamefront: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
