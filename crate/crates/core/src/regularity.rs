//! Uniform estimates along a sequence `ε → 0`: space Lipschitz and time
//! Hölder seminorms on a compact set, Cauchy residuals, and checks on the
//! finest solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeboundary::{extract_at_level, log_log_slope};
use crate::geometry::SpaceTimeGrid;
use crate::operators::{second_differences, LevelOperator};
use crate::problem::ProblemSpec;
use crate::solver::{solve_epsilon_problem, SolutionField, SolverConfig};

/// Largest spatial offset, in grid steps, used by the Lipschitz seminorm.
pub const LIP_STENCIL: isize = 4;
/// Minimum number of time levels of `K` for a Hölder fit.
pub const MIN_HOELDER_LEVELS: usize = 8;

/// Product set `K = {x : dist(x, ∂Ω) >= m} x [m², T]`, at parabolic
/// distance at least `m` from `∂_pΩ_T`. Neighbourhoods of size `τ = m/2`
/// stay inside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet {
    pub margin: f64,
    pub tau: f64,
    pub spatial: Vec<usize>,
    pub mask: Vec<bool>,
    pub levels: (usize, usize),
}

impl CompactSet {
    pub fn new(grid: &SpaceTimeGrid, margin: f64) -> Result<Self> {
        if margin < grid.h() * (1.0 - 1e-9) {
            return Err(Error::InvalidArgument(format!("margin {margin} is below h = {}", grid.h())));
        }
        let mask: Vec<bool> = (0..grid.nodes_per_level())
            .map(|s| grid.lateral_distance(s) >= margin * (1.0 - 1e-9))
            .collect();
        let spatial: Vec<usize> = (0..mask.len()).filter(|&s| mask[s]).collect();
        let lo = ((margin * margin / grid.dt()) * (1.0 - 1e-9)).ceil() as usize;
        let hi = grid.n_levels() - 1;
        if spatial.is_empty() || lo > hi {
            return Err(Error::EmptySet("compact set".into()));
        }
        Ok(Self {
            margin,
            tau: margin / 2.0,
            spatial,
            mask,
            levels: (lo, hi),
        })
    }

    /// `max(4h, 0.1 x extent)`.
    pub fn default_margin(grid: &SpaceTimeGrid) -> f64 {
        (4.0 * grid.h()).max(0.1 * grid.extent())
    }

    pub fn node_count(&self) -> usize {
        self.spatial.len() * (self.levels.1 - self.levels.0 + 1)
    }

    pub fn summary(&self) -> CompactSummary {
        CompactSummary {
            margin: self.margin,
            tau: self.tau,
            nodes: self.node_count(),
            first_level: self.levels.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactSummary {
    pub margin: f64,
    pub tau: f64,
    pub nodes: usize,
    pub first_level: usize,
}

/// Offsets `0 < |o| <= LIP_STENCIL`, one per antipodal pair.
fn half_offsets(dim: usize) -> Vec<[isize; 2]> {
    let m = LIP_STENCIL;
    let jr = if dim == 2 { m } else { 0 };
    let mut out = Vec::new();
    for j in -jr..=jr {
        for i in -m..=m {
            let positive = j > 0 || (j == 0 && i > 0);
            if positive && i * i + j * j <= m * m {
                out.push([i, j]);
            }
        }
    }
    out
}

/// `max |u(x,t) - u(y,t)| / |x - y|` over pairs in `K` with `|x - y| <= 4h`.
pub fn lip_space_seminorm(field: &SolutionField, k: &CompactSet) -> Result<f64> {
    let grid = field.grid();
    if grid.len() != field.values().len() || k.mask.len() != grid.nodes_per_level() {
        return Err(Error::InvalidArgument("compact set does not match the field grid".into()));
    }
    let offsets = half_offsets(grid.dim());
    let h = grid.h();
    let best = (k.levels.0..=k.levels.1)
        .into_par_iter()
        .map(|level| {
            let u = field.slice(level);
            let mut best = 0.0f64;
            for &s in &k.spatial {
                for &o in &offsets {
                    if let Some(t) = grid.offset_spatial(s, o) {
                        if k.mask[t] {
                            let len = ((o[0] * o[0] + o[1] * o[1]) as f64).sqrt() * h;
                            best = best.max((u[t] - u[s]).abs() / len);
                        }
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderFit {
    /// `max |Δu| / √Δt`.
    pub c_hat: f64,
    /// Slope of `log max|Δu|` against `log Δt`; `None` for a constant field.
    pub exponent: Option<f64>,
    /// `(Δt, max |Δu|)` for dyadic `Δt = 2^j dt`.
    pub increments: Vec<(f64, f64)>,
}

/// Time increments over dyadic lags at the given spatial nodes and levels
/// `levels.0 ..= levels.1`.
pub fn hoelder_time_seminorm_on(field: &SolutionField, spatial: &[usize], levels: (usize, usize)) -> Result<HoelderFit> {
    let grid = field.grid();
    if levels.1 < levels.0 || levels.1 - levels.0 + 1 < MIN_HOELDER_LEVELS {
        return Err(Error::InsufficientData(format!(
            "time Hölder fit needs at least {MIN_HOELDER_LEVELS} levels"
        )));
    }
    if spatial.is_empty() {
        return Err(Error::EmptySet("no spatial nodes".into()));
    }
    let span = levels.1 - levels.0;
    let mut lags = Vec::new();
    let mut lag = 1usize;
    while lag <= span / 2 {
        lags.push(lag);
        lag *= 2;
    }
    if lags.len() < 3 {
        return Err(Error::InsufficientData("time Hölder fit needs at least 3 lags".into()));
    }
    let increments: Vec<(f64, f64)> = lags
        .par_iter()
        .map(|&lag| {
            let mut best = 0.0f64;
            for level in levels.0..=levels.1 - lag {
                let (a, b) = (field.slice(level), field.slice(level + lag));
                for &s in spatial {
                    best = best.max((b[s] - a[s]).abs());
                }
            }
            (lag as f64 * grid.dt(), best)
        })
        .collect();
    let c_hat = increments.iter().map(|(dt, du)| du / dt.sqrt()).fold(0.0, f64::max);
    Ok(HoelderFit {
        c_hat,
        exponent: log_log_slope(&increments),
        increments,
    })
}

pub fn hoelder_time_seminorm(field: &SolutionField, k: &CompactSet) -> Result<HoelderFit> {
    hoelder_time_seminorm_on(field, &k.spatial, k.levels)
}

/// Spatial nodes of `K` within `width` of the free boundary at some level of `K`.
pub fn near_front_nodes(field: &SolutionField, k: &CompactSet, theta: f64, width: f64) -> Vec<usize> {
    let grid = field.grid();
    let h = grid.h();
    let reach = width / h;
    let offsets = grid.ball_offsets(reach, true);
    let mut near = vec![false; grid.nodes_per_level()];
    for level in k.levels.0..=k.levels.1 {
        for s in extract_at_level(field, level, theta).fb_points {
            for &o in &offsets {
                if let Some(t) = grid.offset_spatial(s, o) {
                    near[t] = true;
                }
            }
        }
    }
    k.spatial.iter().copied().filter(|&s| near[s]).collect()
}

/// `max over nodes of (u(x,t) - u(x,t+dt))⁺`.
pub fn time_monotonicity_defect(field: &SolutionField) -> f64 {
    let grid = field.grid();
    (1..grid.n_levels())
        .into_par_iter()
        .map(|level| {
            let (a, b) = (field.slice(level - 1), field.slice(level));
            a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeResidual {
    pub threshold: f64,
    pub nodes: usize,
    pub max: f64,
}

/// `|F_h[u] - (u - u_prev)/dt - f|` at interior nodes with `u > threshold`,
/// where the reaction vanishes.
pub fn pde_residual(problem: &ProblemSpec, field: &SolutionField, threshold: f64, eps: f64) -> Result<PdeResidual> {
    let grid = field.grid();
    let dt = grid.dt();
    let parts: Vec<(usize, f64)> = (1..grid.n_levels())
        .into_par_iter()
        .map(|level| -> Result<(usize, f64)> {
            let op = LevelOperator::build(&problem.operator, grid, level)?;
            let f = problem.forcing_slice(level, eps);
            let (prev, u) = (field.slice(level - 1), field.slice(level));
            let mut count = 0;
            let mut best = 0.0f64;
            for s in grid.interior_spatial() {
                if u[s] > threshold {
                    let d = second_differences(grid, u, s);
                    let r = op.apply(s, &d) - (u[s] - prev[s]) / dt - f[s];
                    best = best.max(r.abs());
                    count += 1;
                }
            }
            Ok((count, best))
        })
        .collect::<Result<_>>()?;
    Ok(PdeResidual {
        threshold,
        nodes: parts.iter().map(|p| p.0).sum(),
        max: parts.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonMetrics {
    pub eps: f64,
    pub sup_norm: f64,
    pub min_u: f64,
    pub lip_space: f64,
    pub hoelder: HoelderFit,
    pub time_monotonicity_defect: f64,
    pub max_outer_iterations: usize,
    pub iteration_monotonicity_defect: f64,
    pub max_residual: f64,
    pub resolution_warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitMetrics {
    pub eps: f64,
    pub sup_norm: f64,
    pub lip_space: f64,
    pub hoelder: HoelderFit,
    pub near_front_hoelder: Option<HoelderFit>,
    pub time_monotonicity_defect: f64,
    pub pde_residual: PdeResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub compact: CompactSummary,
    pub per_eps: Vec<EpsilonMetrics>,
    /// `‖u_{ε_j} - u_{ε_{j+1}}‖_∞` on `K`.
    pub cauchy_residuals: Vec<f64>,
    /// `Lip(ε_{j+1}) / Lip(ε_j)`.
    pub lip_ratios: Vec<f64>,
    /// `max_ε ‖u_ε‖_∞`.
    pub upsilon_hat: f64,
    pub limit: LimitMetrics,
}

pub struct SweepResult {
    pub eps: Vec<f64>,
    pub fields: Vec<SolutionField>,
    pub report: RegularityReport,
}

impl SweepResult {
    /// Solution for the smallest ε.
    pub fn limit(&self) -> &SolutionField {
        self.fields.last().expect("sweep is never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Margin of `K`; defaults to `max(4h, 0.1)`.
    pub margin: Option<f64>,
    /// Positivity threshold for the near-front fit.
    pub theta: f64,
    /// Half-width of the near-front band.
    pub front_width: f64,
}

/// `‖a - b‖_∞` over `K`.
pub fn sup_difference_on(a: &SolutionField, b: &SolutionField, k: &CompactSet) -> f64 {
    (k.levels.0..=k.levels.1)
        .map(|level| {
            let (x, y) = (a.slice(level), b.slice(level));
            k.spatial.iter().map(|&s| (x[s] - y[s]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Solves for every ε (in parallel; the list must be strictly decreasing) and measures the
/// uniform estimates.
pub fn epsilon_sweep(problem: &ProblemSpec, eps: &[f64], cfg: &SolverConfig, opts: &SweepOptions) -> Result<SweepResult> {
    if eps.is_empty() {
        return Err(Error::InvalidArgument("empty ε list".into()));
    }
    let eps: Vec<f64> = eps.to_vec();
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("ε values must be positive".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("ε list must be strictly decreasing".into()));
    }
    let fields: Vec<SolutionField> = eps
        .par_iter()
        .map(|&e| {
            solve_epsilon_problem(problem, e, cfg).map_err(|source| Error::Solve {
                eps: e,
                source: Box::new(source),
            })
        })
        .collect::<Result<_>>()?;
    let grid = &problem.grid;
    let margin = opts.margin.unwrap_or_else(|| CompactSet::default_margin(grid));
    let k = CompactSet::new(grid, margin)?;

    let mut per_eps = Vec::new();
    for (field, &e) in fields.iter().zip(&eps) {
        let d = &field.diagnostics;
        per_eps.push(EpsilonMetrics {
            eps: e,
            sup_norm: field.sup(),
            min_u: field.min(),
            lip_space: lip_space_seminorm(field, &k)?,
            hoelder: hoelder_time_seminorm(field, &k)?,
            time_monotonicity_defect: time_monotonicity_defect(field),
            max_outer_iterations: d.max_outer_iterations,
            iteration_monotonicity_defect: d.max_monotonicity_defect,
            max_residual: d.max_residual,
            resolution_warning: d.resolution_warning.clone(),
        });
    }
    let cauchy_residuals = fields.windows(2).map(|w| sup_difference_on(&w[0], &w[1], &k)).collect();
    let lip_ratios = per_eps
        .windows(2)
        .map(|w| if w[0].lip_space > 0.0 { w[1].lip_space / w[0].lip_space } else { f64::NAN })
        .collect();
    let upsilon_hat = per_eps.iter().map(|m| m.sup_norm).fold(0.0, f64::max);

    let eps_min = *eps.last().unwrap();
    let limit_field = fields.last().unwrap();
    let near = near_front_nodes(limit_field, &k, opts.theta, opts.front_width);
    let near_front_hoelder = if near.is_empty() {
        None
    } else {
        Some(hoelder_time_seminorm_on(limit_field, &near, k.levels)?)
    };
    let last = per_eps.last().unwrap();
    let limit = LimitMetrics {
        eps: eps_min,
        sup_norm: last.sup_norm,
        lip_space: last.lip_space,
        hoelder: last.hoelder.clone(),
        near_front_hoelder,
        time_monotonicity_defect: last.time_monotonicity_defect,
        pde_residual: pde_residual(problem, limit_field, 2.0 * eps_min, eps_min)?,
    };
    let report = RegularityReport {
        compact: k.summary(),
        per_eps,
        cauchy_residuals,
        lip_ratios,
        upsilon_hat,
        limit,
    };
    Ok(SweepResult { eps, fields, report })
}
