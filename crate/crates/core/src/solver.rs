//! Backward-Euler time marching for `F(x,t,D²u) - ∂ₜu = β_ε(u) + f_ε` with
//! the μ-shift monotone iteration at every level.
//!
//! Each level solves, for a fixed lagged field `ψ_k = μu_k - β_ε(u_k)`,
//!
//! ```text
//! F_h(w) - μw + ψ_k - f - (w - u_prev)/dt = 0
//! ```
//!
//! by damped Jacobi sweeps `w <- w + ω R(w)/K`, where `K` bounds the
//! centre sensitivity of the residual `R`. In one-phase mode every update is
//! projected onto `w >= 0`.

use std::fmt::Write as _;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Node, SpaceTimeGrid};
use crate::operators::{second_differences, LevelOperator};
use crate::problem::{ProblemSpec, ReactionProfile};

/// Safety factor in `μ = 2 · 1.05 · sup|β_ε'|`.
pub const MU_SAFETY: f64 = 2.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// Start every level from the solution at the previous level.
    Previous,
    /// Start from zero in the interior.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionGuard {
    Off,
    /// Check `ε >= 10 h L` with the given `L`.
    Fixed(f64),
    /// Estimate `L` from a run on a grid four times coarser.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Jacobi damping `ω ∈ (0, 1]`.
    pub damping: f64,
    pub initial_guess: InitialGuess,
    pub resolution_guard: ResolutionGuard,
    /// Sweeps run in parallel once a level has this many nodes.
    pub parallel_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-8,
            inner_tol: 1e-10,
            max_outer: 500,
            max_inner: 10_000,
            damping: 1.0,
            initial_guess: InitialGuess::Previous,
            resolution_guard: ResolutionGuard::Off,
            parallel_threshold: 4096,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub outer_iterations: usize,
    pub inner_sweeps: usize,
    /// Residual of the last inner solve.
    pub residual: f64,
    /// `‖u_{k+1} - u_k‖∞` of the last outer step.
    pub increment: f64,
    /// `max_k max(u_k - u_{k+1})`, zero for a monotone sequence.
    pub monotonicity_defect: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub eps: f64,
    pub mu: f64,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub sup_u: f64,
    pub min_u: f64,
    pub max_outer_iterations: usize,
    pub max_monotonicity_defect: f64,
    pub max_residual: f64,
    pub l_guess: Option<f64>,
    /// Set when `ε < 10 h L_guess`.
    pub resolution_warning: Option<String>,
    pub levels: Vec<LevelDiagnostics>,
}

/// Gridded `u(x_i, t_k)` plus solve diagnostics. Values are level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    grid: SpaceTimeGrid,
    values: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl SolutionField {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            diagnostics: SolveDiagnostics::default(),
        })
    }

    /// Samples `u(x, y, t)` on every node.
    pub fn from_fn(grid: SpaceTimeGrid, u: impl Fn([f64; 2], f64) -> f64) -> Self {
        let per = grid.nodes_per_level();
        let values = (0..grid.len())
            .map(|id| u(grid.position(id % per), grid.time(id / per)))
            .collect();
        Self {
            grid,
            values,
            diagnostics: SolveDiagnostics::default(),
        }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slice(&self, level: usize) -> &[f64] {
        let per = self.grid.nodes_per_level();
        &self.values[level * per..(level + 1) * per]
    }

    pub fn value(&self, node: Node) -> f64 {
        self.values[self.grid.node_id(node)]
    }

    pub fn at(&self, level: usize, s: usize) -> f64 {
        self.values[level * self.grid.nodes_per_level() + s]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `x[,y],t,u` rows, level by level.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        out.write_all(self.csv_header().as_bytes())?;
        let per = self.grid.nodes_per_level();
        let mut line = String::new();
        for (id, u) in self.values.iter().enumerate() {
            line.clear();
            let p = self.grid.position(id % per);
            let t = self.grid.time(id / per);
            if self.grid.dim() == 1 {
                let _ = writeln!(line, "{},{},{}", p[0], t, u);
            } else {
                let _ = writeln!(line, "{},{},{},{}", p[0], p[1], t, u);
            }
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    fn csv_header(&self) -> String {
        if self.grid.dim() == 1 {
            "x,t,u\n".into()
        } else {
            "x,y,t,u\n".into()
        }
    }

    /// Reads a field written by [`SolutionField::write_csv`]; the grid is
    /// rebuilt from the distinct coordinates.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("{}: empty file", path.display())))??;
        let dim = match header.trim() {
            "x,t,u" => 1,
            "x,y,t,u" => 2,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "{}: unexpected header '{other}'",
                    path.display()
                )))
            }
        };
        let mut rows: Vec<[f64; 4]> = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let v = parsed.map_err(|e| {
                Error::InvalidArgument(format!("{}: line {}: {e}", path.display(), i + 2))
            })?;
            if v.len() != dim + 2 {
                return Err(Error::InvalidArgument(format!(
                    "{}: line {}: expected {} columns",
                    path.display(),
                    i + 2,
                    dim + 2
                )));
            }
            rows.push(if dim == 1 { [v[0], 0.0, v[1], v[2]] } else { [v[0], v[1], v[2], v[3]] });
        }
        let max_x = rows.iter().map(|r| r[0]).fold(0.0, f64::max);
        let max_t = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
        let per_axis = {
            let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            xs.len()
        };
        let per = per_axis.pow(dim as u32);
        if per == 0 || rows.len() % per != 0 || rows.len() / per < 2 {
            return Err(Error::InvalidArgument(format!("{}: rows do not form a grid", path.display())));
        }
        let steps = rows.len() / per - 1;
        let h = max_x / (per_axis - 1) as f64;
        let dt = max_t / steps as f64;
        let scaling = (dt / (h * h)).max(1.0) * (1.0 + 1e-9);
        let grid = SpaceTimeGrid::with_options(dim, per_axis, max_x, max_t, steps, scaling)?;
        let mut values = vec![f64::NAN; grid.len()];
        for r in &rows {
            let s = grid
                .spatial_at([r[0], r[1]])
                .ok_or_else(|| Error::InvalidArgument(format!("{}: x = {} off the lattice", path.display(), r[0])))?;
            let level = grid.level_of(r[2]).ok_or(Error::OffGrid(r[2]))?;
            values[level * per + s] = r[3];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument(format!("{}: missing nodes", path.display())));
        }
        Self::new(grid, values)
    }
}

/// Shift constant and lagged field of one outer step. `ψ_k = μu_k - g(u_k)`
/// is kept as the pair `(u_k, g(u_k))` to avoid cancellation in `μw - ψ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftState {
    pub mu: f64,
    pub anchor: Vec<f64>,
    pub g: Vec<f64>,
    pub k: usize,
    /// ε at which `f_ε` is evaluated.
    pub eps: f64,
}

impl ShiftState {
    pub fn new(mu: f64, anchor: Vec<f64>, g: Vec<f64>) -> Self {
        Self { mu, anchor, g, k: 0, eps: 1.0 }
    }

    /// State for `u_k` under the reaction `β_ε`.
    pub fn lagged(mu: f64, u_k: &[f64], profile: &ReactionProfile, eps: f64) -> Self {
        let g = u_k.iter().map(|&u| profile.beta_eps_raw(u, eps)).collect();
        Self { eps, ..Self::new(mu, u_k.to_vec(), g) }
    }

    /// `ψ_k = h(u_k)`.
    pub fn psi(&self) -> Vec<f64> {
        self.anchor.iter().zip(&self.g).map(|(u, g)| self.mu * u - g).collect()
    }
}

/// `μ = 2.1 sup|β_ε'| = 2.1 sup|β'| / ε²`, floored at `1/dt`.
pub fn choose_mu(profile: &ReactionProfile, eps: f64, dt: f64) -> f64 {
    (MU_SAFETY * profile.sup_derivative() / (eps * eps)).max(1.0 / dt)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InnerStats {
    pub sweeps: usize,
    pub residual: f64,
}

/// Everything a Jacobi sweep needs at one level.
struct LevelData<'a> {
    grid: &'a SpaceTimeGrid,
    op: &'a LevelOperator,
    lateral: &'a [bool],
    forcing: &'a [f64],
    prev: &'a [f64],
    one_phase: bool,
}

fn sweep_range(
    data: &LevelData,
    state: &ShiftState,
    k_total: f64,
    omega: f64,
    w: &[f64],
    out: &mut [f64],
    offset: usize,
) -> f64 {
    let inv_dt = 1.0 / data.grid.dt();
    let mut residual = 0.0f64;
    for (i, slot) in out.iter_mut().enumerate() {
        let s = offset + i;
        if data.lateral[s] {
            *slot = w[s];
            continue;
        }
        let d = second_differences(data.grid, w, s);
        let r = data.op.apply(s, &d)
            - state.mu * (w[s] - state.anchor[s])
            - state.g[s]
            - data.forcing[s]
            - (w[s] - data.prev[s]) * inv_dt;
        let mut next = w[s] + omega * r / k_total;
        if data.one_phase && next < 0.0 {
            next = 0.0;
        }
        residual = residual.max((next - w[s]).abs());
        *slot = next;
    }
    residual * k_total / omega
}

fn jacobi_sweep(
    data: &LevelData,
    state: &ShiftState,
    k_total: f64,
    omega: f64,
    w: &[f64],
    out: &mut [f64],
    threshold: usize,
) -> f64 {
    let per = w.len();
    if per >= threshold {
        let chunk = if data.grid.dim() == 2 { data.grid.n() } else { 1024 };
        out.par_chunks_mut(chunk)
            .enumerate()
            .map(|(c, slice)| sweep_range(data, state, k_total, omega, w, slice, c * chunk))
            .reduce(|| 0.0, f64::max)
    } else {
        sweep_range(data, state, k_total, omega, w, out, 0)
    }
}

fn inner_solve(
    data: &LevelData,
    state: &ShiftState,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, InnerStats)> {
    let k_total = state.mu + 1.0 / data.grid.dt() + data.op.center_bound();
    let omega = cfg.damping;
    let mut w = start.to_vec();
    let mut next = vec![0.0; w.len()];
    let mut trace = Vec::new();
    for sweep in 1..=cfg.max_inner {
        let residual = jacobi_sweep(data, state, k_total, omega, &w, &mut next, cfg.parallel_threshold);
        std::mem::swap(&mut w, &mut next);
        if residual <= cfg.inner_tol {
            return Ok((w, InnerStats { sweeps: sweep, residual }));
        }
        if !residual.is_finite() {
            trace.push(residual);
            break;
        }
        if trace.len() == 8 {
            trace.remove(0);
        }
        trace.push(residual);
    }
    Err(Error::InnerDiverged {
        sweeps: cfg.max_inner,
        trace,
    })
}

fn lateral_mask(grid: &SpaceTimeGrid) -> Vec<bool> {
    (0..grid.nodes_per_level()).map(|s| grid.is_lateral(s)).collect()
}

fn boundary_slice(problem: &ProblemSpec, level: usize, lateral: &[bool], fill: &[f64]) -> Vec<f64> {
    fill.iter()
        .enumerate()
        .map(|(s, &v)| if lateral[s] { problem.boundary_value(s, level) } else { v })
        .collect()
}

/// One solve of the shifted problem at `level`. Lateral values of the result
/// are `φ`; `u_k_slice` is the starting iterate.
pub fn shifted_step_solve(
    problem: &ProblemSpec,
    level: usize,
    state: &ShiftState,
    u_prev_time: &[f64],
    u_k_slice: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, InnerStats)> {
    if level == 0 || level >= problem.grid.n_levels() {
        return Err(Error::InvalidArgument(format!("level {level} is not a solve level")));
    }
    let grid = &problem.grid;
    let op = LevelOperator::build(&problem.operator, grid, level)?;
    let lateral = lateral_mask(grid);
    let forcing = problem.forcing_slice(level, state.eps);
    let data = LevelData {
        grid,
        op: &op,
        lateral: &lateral,
        forcing: &forcing,
        prev: u_prev_time,
        one_phase: problem.one_phase,
    };
    let start = boundary_slice(problem, level, &lateral, u_k_slice);
    inner_solve(&data, state, &start, cfg)
}

struct LevelSolve<'a> {
    problem: &'a ProblemSpec,
    eps: f64,
    mu: f64,
    cfg: &'a SolverConfig,
    lateral: &'a [bool],
}

impl LevelSolve<'_> {
    fn run(&self, level: usize, op: &LevelOperator, prev: &[f64]) -> Result<(Vec<f64>, LevelDiagnostics)> {
        let problem = self.problem;
        let forcing = problem.forcing_slice(level, self.eps);
        let data = LevelData {
            grid: &problem.grid,
            op,
            lateral: self.lateral,
            forcing: &forcing,
            prev,
            one_phase: problem.one_phase,
        };
        let seed: Vec<f64> = match self.cfg.initial_guess {
            InitialGuess::Previous => prev.to_vec(),
            InitialGuess::Zero => vec![0.0; prev.len()],
        };
        let mut u_k = boundary_slice(problem, level, self.lateral, &seed);
        let mut diag = LevelDiagnostics {
            level,
            ..Default::default()
        };
        let reaction = &problem.reaction;
        if reaction.is_zero() {
            let state = ShiftState::new(0.0, u_k.clone(), vec![0.0; u_k.len()]);
            let (w, stats) = inner_solve(&data, &state, &u_k, self.cfg)?;
            diag.outer_iterations = 1;
            diag.inner_sweeps = stats.sweeps;
            diag.residual = stats.residual;
            diag.increment = max_abs_diff(&w, &u_k);
            return Ok((w, diag));
        }
        for k in 0..self.cfg.max_outer {
            let mut state = ShiftState::lagged(self.mu, &u_k, reaction, self.eps);
            state.k = k;
            let (w, stats) = inner_solve(&data, &state, &u_k, self.cfg)?;
            let increment = max_abs_diff(&w, &u_k);
            let defect = u_k.iter().zip(&w).map(|(a, b)| a - b).fold(0.0, f64::max);
            diag.outer_iterations = k + 1;
            diag.inner_sweeps += stats.sweeps;
            diag.residual = stats.residual;
            diag.increment = increment;
            diag.monotonicity_defect = diag.monotonicity_defect.max(defect);
            u_k = w;
            if increment < self.cfg.outer_tol {
                return Ok((u_k, diag));
            }
        }
        Err(Error::OuterDiverged {
            iterations: self.cfg.max_outer,
            increment: diag.increment,
        })
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The μ-shift iteration at one level, given the solution at the previous one.
pub fn monotone_iteration(
    problem: &ProblemSpec,
    eps: f64,
    level: usize,
    prev: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, LevelDiagnostics)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if level == 0 || level >= problem.grid.n_levels() {
        return Err(Error::InvalidArgument(format!("level {level} is not a solve level")));
    }
    let lateral = lateral_mask(&problem.grid);
    let op = LevelOperator::build(&problem.operator, &problem.grid, level)?;
    let solve = LevelSolve {
        problem,
        eps,
        mu: choose_mu(&problem.reaction, eps, problem.grid.dt()),
        cfg,
        lateral: &lateral,
    };
    solve.run(level, &op, prev)
}

fn operator_is_time_dependent(problem: &ProblemSpec) -> bool {
    let op = &problem.operator;
    op.matrix
        .iter()
        .chain(op.family.iter())
        .any(|m| m.iter().flatten().any(|e| e.as_constant().is_none()))
}

fn march(problem: &ProblemSpec, eps: f64, cfg: &SolverConfig) -> Result<SolutionField> {
    let grid = &problem.grid;
    let per = grid.nodes_per_level();
    let lateral = lateral_mask(grid);
    let mu = if problem.reaction.is_zero() {
        0.0
    } else {
        choose_mu(&problem.reaction, eps, grid.dt())
    };
    let solve = LevelSolve {
        problem,
        eps,
        mu,
        cfg,
        lateral: &lateral,
    };
    let mut values = Vec::with_capacity(grid.len());
    values.extend((0..per).map(|s| problem.boundary_value(s, 0)));
    let mut levels = Vec::with_capacity(grid.steps());
    let varying = operator_is_time_dependent(problem);
    let mut op = LevelOperator::build(&problem.operator, grid, 1)?;
    for level in 1..grid.n_levels() {
        if varying && level > 1 {
            op = LevelOperator::build(&problem.operator, grid, level)?;
        }
        let prev = &values[(level - 1) * per..level * per];
        let (slice, diag) = solve.run(level, &op, prev)?;
        values.extend_from_slice(&slice);
        levels.push(diag);
    }
    let mut field = SolutionField::new(grid.clone(), values)?;
    field.diagnostics = SolveDiagnostics {
        eps,
        mu,
        outer_tol: cfg.outer_tol,
        inner_tol: cfg.inner_tol,
        sup_u: field.sup(),
        min_u: field.min(),
        max_outer_iterations: levels.iter().map(|l| l.outer_iterations).max().unwrap_or(0),
        max_monotonicity_defect: levels.iter().map(|l| l.monotonicity_defect).fold(0.0, f64::max),
        max_residual: levels.iter().map(|l| l.residual).fold(0.0, f64::max),
        l_guess: None,
        resolution_warning: None,
        levels,
    };
    Ok(field)
}

/// Largest spatial difference quotient between neighbouring nodes.
fn max_neighbour_slope(field: &SolutionField) -> f64 {
    let grid = field.grid();
    let mut best = 0.0f64;
    for level in 0..grid.n_levels() {
        let u = field.slice(level);
        for s in 0..grid.nodes_per_level() {
            for a in 0..grid.dim() {
                let mut o = [0isize; 2];
                o[a] = 1;
                if let Some(nb) = grid.offset_spatial(s, o) {
                    best = best.max((u[nb] - u[s]).abs() / grid.h());
                }
            }
        }
    }
    best
}

/// Rough Lipschitz constant from a run on a grid four times coarser.
pub fn coarse_lipschitz_guess(problem: &ProblemSpec, eps: f64, cfg: &SolverConfig) -> Result<Option<f64>> {
    let g = &problem.grid;
    if (g.n() - 1) % 4 != 0 || (g.n() - 1) / 4 < 2 {
        return Ok(None);
    }
    let steps = g.steps().div_ceil(16).max(1);
    let coarse_grid = SpaceTimeGrid::with_options(
        g.dim(),
        (g.n() - 1) / 4 + 1,
        g.extent(),
        g.t_final(),
        steps,
        g.parabolic_scaling(),
    )?;
    let coarse = ProblemSpec {
        grid: coarse_grid,
        ..problem.clone()
    };
    let field = march(&coarse, eps, cfg)?;
    Ok(Some(max_neighbour_slope(&field)))
}

/// Time-marches from the initial data, resolving every level with the
/// monotone iteration. Assumptions are not enforced here; see
/// [`crate::problem::validate_assumptions`].
pub fn solve_epsilon_problem(problem: &ProblemSpec, eps: f64, cfg: &SolverConfig) -> Result<SolutionField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let l_guess = if problem.reaction.is_zero() {
        None
    } else {
        match cfg.resolution_guard {
            ResolutionGuard::Off => None,
            ResolutionGuard::Fixed(l) => Some(l),
            ResolutionGuard::Auto => coarse_lipschitz_guess(problem, eps, cfg)?,
        }
    };
    let mut field = march(problem, eps, cfg)?;
    field.diagnostics.l_guess = l_guess;
    if let Some(l) = l_guess {
        let need = 10.0 * problem.grid.h() * l;
        if eps < need {
            field.diagnostics.resolution_warning = Some(format!(
                "eps = {eps} is below 10 h L_guess = {need:.4}; the reaction layer spans fewer than ten cells"
            ));
        }
    }
    Ok(field)
}
