//! JSON run configuration shared by the command-line tool and the tests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::freeboundary::{theta, AuditParams};
use crate::geometry::{GridConfig, SpaceTimeGrid};
use crate::operators::OperatorSpec;
use crate::problem::{DirichletSpec, ForcingSpec, ProblemSpec, ReactionConfig, ReactionProfile};
use crate::regularity::{CompactSet, SweepOptions};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Strictly decreasing.
    pub eps: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05, 0.025],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Margin of the compact set; `max(4h, 0.1 extent)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Audited times; `T/2, 3T/4, T` when empty.
    pub t0: Vec<f64>,
    /// Largest non-degeneracy radius; `extent/4` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Largest porosity radius; `0.1 extent` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub porosity_r: Option<f64>,
    pub growth_level_stride: usize,
    /// Half-width of the near-front band, in grid steps.
    pub front_width_cells: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            margin: None,
            t0: Vec::new(),
            r_max: None,
            porosity_r: None,
            growth_level_stride: 16,
            front_width_cells: 8.0,
        }
    }
}

/// Default artifact paths; command-line `--out` takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fb_report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub operator: OperatorSpec,
    #[serde(default = "ReactionConfig::default_bump")]
    pub reaction: ReactionConfig,
    pub forcing: ForcingSpec,
    pub dirichlet: DirichletSpec,
    #[serde(default = "yes")]
    pub one_phase: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed of the sampling audits.
    #[serde(default)]
    pub seed: u64,
    /// Refuse to solve when the data assumptions fail.
    #[serde(default = "yes")]
    pub enforce_assumptions: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Cross-block checks: operator dimension, grid, reaction, ε list.
    pub fn validate(&self) -> Result<()> {
        let grid = SpaceTimeGrid::from_config(&self.grid).map_err(|e| Error::Config(format!("grid: {e}")))?;
        self.operator
            .validate(grid.dim())
            .map_err(|e| Error::Config(format!("operator: {e}")))?;
        ReactionProfile::from_config(&self.reaction).map_err(|e| Error::Config(format!("reaction: {e}")))?;
        if let Some(e) = self.reaction.eps {
            if !(e > 0.0) {
                return Err(Error::Config(format!("reaction.eps: must be positive, got {e}")));
            }
        }
        let eps = &self.sweep.eps;
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!(
                "sweep.eps: need a nonempty, positive, strictly decreasing list, got {eps:?}"
            )));
        }
        if self.audit.growth_level_stride == 0 {
            return Err(Error::Config("audit.growth_level_stride: must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpaceTimeGrid> {
        SpaceTimeGrid::from_config(&self.grid)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            grid: self.grid()?,
            operator: self.operator.clone(),
            reaction: ReactionProfile::from_config(&self.reaction)?,
            forcing: self.forcing.clone(),
            dirichlet: self.dirichlet.clone(),
            one_phase: self.one_phase,
        })
    }

    /// ε of a single solve: `reaction.eps`, else 0.05.
    pub fn solve_eps(&self) -> f64 {
        self.reaction.eps.unwrap_or(0.05)
    }

    /// SHA-256 of the canonical JSON form without the output block, hex encoded.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.output = OutputConfig::default();
        let canonical = serde_json::to_string(&cfg).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn sweep_options(&self, grid: &SpaceTimeGrid, eps_min: f64) -> SweepOptions {
        SweepOptions {
            margin: self.audit.margin,
            theta: theta(self.solver.outer_tol, eps_min),
            front_width: self.audit.front_width_cells * grid.h(),
        }
    }

    pub fn audit_params(&self, grid: &SpaceTimeGrid, upsilon_hat: f64, eps_min: f64) -> AuditParams {
        let t = grid.t_final();
        let t0 = if self.audit.t0.is_empty() {
            [0.5, 0.75, 1.0].iter().map(|f| snap(grid, f * t)).collect()
        } else {
            self.audit.t0.clone()
        };
        AuditParams {
            c0: self.forcing.c0,
            c1: self.forcing.c1,
            big_lambda: self.operator.big_lambda,
            upsilon_hat,
            theta: theta(self.solver.outer_tol, eps_min),
            t0,
            margin: self.audit.margin.unwrap_or_else(|| CompactSet::default_margin(grid)),
            r_max: self.audit.r_max.unwrap_or(0.25 * grid.extent()),
            porosity_r: self.audit.porosity_r.unwrap_or(0.1 * grid.extent()),
            growth_level_stride: self.audit.growth_level_stride,
        }
    }
}

/// Nearest grid time.
fn snap(grid: &SpaceTimeGrid, t: f64) -> f64 {
    grid.time(((t / grid.dt()).round() as usize).min(grid.steps()))
}

impl ReactionConfig {
    pub fn default_bump() -> Self {
        Self {
            profile: "bump".into(),
            amplitude: 1.0,
            eps: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"{
        "grid": {"dim": 1, "nx": 17, "nt": 64, "T": 0.25},
        "operator": {"form": "pucci_minus", "lambda": 1, "Lambda": 2},
        "forcing": {"expr": 1, "c0": 1, "c1": 1},
        "dirichlet": {"expr": "t * (1 - x)"}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(DEMO).unwrap();
        assert!(cfg.one_phase && cfg.enforce_assumptions);
        assert_eq!(cfg.sweep.eps, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(cfg.solve_eps(), 0.05);
        assert_eq!(cfg.reaction.amplitude, 1.0);
        let p = cfg.problem().unwrap();
        assert_eq!(p.grid.steps(), 64);
        let params = cfg.audit_params(&p.grid, 0.25, 0.025);
        assert_eq!(params.t0, vec![0.125, 0.1875, 0.25]);
        assert_eq!(params.theta, 0.0025);
    }

    #[test]
    fn hash_ignores_whitespace_but_not_values() {
        let a = RunConfig::parse(DEMO).unwrap();
        let b = RunConfig::parse(&DEMO.replace("\n", " ")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = RunConfig::parse(&DEMO.replace("\"nt\": 64", "\"nt\": 128")).unwrap();
        assert_ne!(a.hash(), c.hash());
        let d = RunConfig::parse(&DEMO.replace("\"dirichlet\"", "\"output\": {\"field\": \"u.csv\"}, \"dirichlet\"")).unwrap();
        assert_eq!(a.hash(), d.hash());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let unknown = DEMO.replace("\"T\"", "\"T_final\"");
        let msg = RunConfig::parse(&unknown).unwrap_err().to_string();
        assert!(msg.contains("T_final") && msg.contains("line"), "{msg}");

        let dims = DEMO.replace("\"dim\": 1", "\"dim\": 2");
        let with_matrix = dims.replace(
            r#"{"form": "pucci_minus", "lambda": 1, "Lambda": 2}"#,
            r#"{"form": "linear_trace", "lambda": 1, "Lambda": 1, "matrix": [[1]]}"#,
        );
        assert!(RunConfig::parse(&with_matrix).unwrap_err().to_string().contains("operator"));

        let eps = DEMO.replace("\"dirichlet\"", "\"sweep\": {\"eps\": [0.1, 0.2]}, \"dirichlet\"");
        assert!(RunConfig::parse(&eps).unwrap_err().to_string().contains("sweep.eps"));
    }
}
