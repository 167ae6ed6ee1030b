//! The data of the singularly perturbed problem: reaction `β_ε`, forcing
//! `f_ε`, Dirichlet data `φ`, and sampled checks of the standing assumptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Vars};
use crate::geometry::SpaceTimeGrid;
use crate::operators::{
    ellipticity_audit, evaluate_f, EllipticityReport, LevelOperator, OperatorSpec, SampleDomain,
    SymMatrix,
};

/// Largest number of forcing samples taken by [`validate_assumptions`]; levels
/// are strided beyond that.
const MAX_FORCING_SAMPLES: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `exp(1 - 1/(4s(1-s)))` on `(0,1)`.
    Bump,
    /// `β ≡ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionConfig {
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Single `ε` used by `solve`; sweeps carry their own list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

fn default_profile() -> String {
    "bump".into()
}

fn one() -> f64 {
    1.0
}

/// Base profile `β` scaled by `amplitude`, with its mass and `sup|β'|` cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionProfile {
    kind: ProfileKind,
    amplitude: f64,
    mass: f64,
    sup_derivative: f64,
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (4.0 * s * (1.0 - s))).exp()
    }
}

fn bump_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let q = s * (1.0 - s);
        bump(s) * (1.0 - 2.0 * s) / (4.0 * q * q)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Maximizer of a unimodal `f` on `[a, b]` by golden-section search.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `sup|β'|` of the unit bump: coarse scan on `(0, 1/2)` then golden section.
fn bump_sup_derivative() -> f64 {
    let k = 2000;
    let (mut best, mut arg) = (0.0, 0.25);
    for i in 1..k {
        let s = 0.5 * i as f64 / k as f64;
        let v = bump_derivative(s);
        if v > best {
            best = v;
            arg = s;
        }
    }
    let step = 0.5 / k as f64;
    let s = golden_max(&bump_derivative, (arg - step).max(1e-6), arg + step);
    bump_derivative(s).max(best)
}

impl ReactionProfile {
    pub fn new(kind: ProfileKind, amplitude: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(Error::InvalidArgument(format!(
                "reaction amplitude must lie in [0, 1], got {amplitude}"
            )));
        }
        let (mass, sup_derivative) = match kind {
            ProfileKind::Zero => (0.0, 0.0),
            ProfileKind::Bump => (
                amplitude * adaptive_simpson(&bump, 0.0, 1.0, 1e-12),
                amplitude * bump_sup_derivative(),
            ),
        };
        Ok(Self {
            kind,
            amplitude,
            mass,
            sup_derivative,
        })
    }

    pub fn bump() -> Self {
        Self::new(ProfileKind::Bump, 1.0).expect("unit bump is valid")
    }

    pub fn zero() -> Self {
        Self::new(ProfileKind::Zero, 0.0).expect("zero profile is valid")
    }

    pub fn from_config(cfg: &ReactionConfig) -> Result<Self> {
        let kind = match cfg.profile.as_str() {
            "bump" => ProfileKind::Bump,
            "zero" => ProfileKind::Zero,
            other => {
                return Err(Error::Config(format!(
                    "reaction.profile '{other}' is not a smooth profile with support [0,1]; \
                     use 'bump' or 'zero'"
                )))
            }
        };
        Self::new(kind, if kind == ProfileKind::Zero { 0.0 } else { cfg.amplitude })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn is_zero(&self) -> bool {
        self.kind == ProfileKind::Zero || self.amplitude == 0.0
    }

    /// `β(s)`.
    pub fn beta(&self, s: f64) -> f64 {
        match self.kind {
            ProfileKind::Zero => 0.0,
            ProfileKind::Bump => self.amplitude * bump(s),
        }
    }

    /// `β'(s)`.
    pub fn beta_derivative(&self, s: f64) -> f64 {
        match self.kind {
            ProfileKind::Zero => 0.0,
            ProfileKind::Bump => self.amplitude * bump_derivative(s),
        }
    }

    /// `∫β`, cached at construction.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `sup|β'|`, cached at construction.
    pub fn sup_derivative(&self) -> f64 {
        self.sup_derivative
    }

    /// `β_ε(s) = β(s/ε)/ε` without the `ε > 0` check.
    #[inline]
    pub fn beta_eps_raw(&self, s: f64, eps: f64) -> f64 {
        self.beta(s / eps) / eps
    }

    /// `β_ε'(s) = β'(s/ε)/ε²`.
    pub fn beta_eps_derivative(&self, s: f64, eps: f64) -> f64 {
        self.beta_derivative(s / eps) / (eps * eps)
    }
}

/// `β_ε(s) = (1/ε) β(s/ε)`.
pub fn beta_eps(s: f64, eps: f64, profile: &ReactionProfile) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    Ok(profile.beta_eps_raw(s, eps))
}

/// `∫₀¹ β` by adaptive quadrature.
pub fn mollifier_mass(profile: &ReactionProfile) -> f64 {
    profile.mass()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub expr: Expr,
    pub c0: f64,
    pub c1: f64,
    /// Claimed bound on `|∇f|`; only reported when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_bound: Option<f64>,
}

impl ForcingSpec {
    pub fn constant(value: f64) -> Self {
        Self {
            expr: Expr::constant(value),
            c0: value,
            c1: value,
            grad_bound: Some(0.0),
        }
    }

    pub fn eval(&self, x: [f64; 2], t: f64, eps: f64) -> f64 {
        self.expr.eval(&Vars::new(x[0], x[1], t, eps))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletSpec {
    pub expr: Expr,
    /// Replaces `φ(·, 0)` on the initial slice. Test fixtures only; it breaks
    /// the compatibility `φ(x, 0) = 0` unless it vanishes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Expr>,
}

impl DirichletSpec {
    pub fn new(expr: Expr) -> Self {
        Self { expr, initial: None }
    }

    pub fn zero() -> Self {
        Self::new(Expr::constant(0.0))
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: SpaceTimeGrid,
    pub operator: OperatorSpec,
    pub reaction: ReactionProfile,
    pub forcing: ForcingSpec,
    pub dirichlet: DirichletSpec,
    /// Keep iterates in `u >= 0` (complementarity form). See README.
    pub one_phase: bool,
}

impl ProblemSpec {
    /// `φ` at a node of `∂_pΩ_T` (any node is accepted).
    pub fn boundary_value(&self, s: usize, level: usize) -> f64 {
        let p = self.grid.position(s);
        let t = self.grid.time(level);
        let vars = Vars::new(p[0], p[1], t, 0.0);
        match (&self.dirichlet.initial, level) {
            (Some(u0), 0) => u0.eval(&vars),
            _ => self.dirichlet.expr.eval(&vars),
        }
    }

    /// `f_ε` on every spatial node of a level.
    pub fn forcing_slice(&self, level: usize, eps: f64) -> Vec<f64> {
        let t = self.grid.time(level);
        if let Some(c) = self.forcing.expr.as_constant() {
            return vec![c; self.grid.nodes_per_level()];
        }
        (0..self.grid.nodes_per_level())
            .map(|s| self.forcing.eval(self.grid.position(s), t, eps))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstSample {
    /// `[x, y, t]`.
    pub point: [f64; 3],
    pub eps: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub pass: bool,
    pub detail: String,
    pub worst: Option<WorstSample>,
}

impl AssumptionCheck {
    fn new(pass: bool, detail: impl Into<String>, worst: Option<WorstSample>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            worst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub a1_operator: AssumptionCheck,
    pub a2_reaction: AssumptionCheck,
    pub a3_forcing: AssumptionCheck,
    pub a4_dirichlet: AssumptionCheck,
    pub ellipticity: EllipticityReport,
    /// Largest sampled `|∇f|` (difference quotients between neighbouring samples).
    pub forcing_gradient: f64,
    pub pass: bool,
}

fn check_operator(problem: &ProblemSpec, ell: &EllipticityReport) -> AssumptionCheck {
    let dim = problem.grid.dim();
    let zero = SymMatrix::zeros(dim);
    let mut f0 = 0.0f64;
    let mut worst = None;
    for s in [0, problem.grid.nodes_per_level() / 2, problem.grid.nodes_per_level() - 1] {
        for level in [0, problem.grid.steps()] {
            let p = problem.grid.position(s);
            let t = problem.grid.time(level);
            match evaluate_f(&problem.operator, p, t, &zero) {
                Ok(v) if v.abs() > f0 => {
                    f0 = v.abs();
                    worst = Some(WorstSample { point: [p[0], p[1], t], eps: None, value: v });
                }
                Ok(_) => {}
                Err(e) => return AssumptionCheck::new(false, e.to_string(), None),
            }
        }
    }
    if let Err(e) = LevelOperator::build(&problem.operator, &problem.grid, 0) {
        return AssumptionCheck::new(false, e.to_string(), None);
    }
    let mut issues = Vec::new();
    if !ell.pass {
        issues.push(format!(
            "ellipticity violated (trace margin {:e}, pucci margin {:e}, spectrum margin {:?})",
            ell.trace_margin, ell.pucci_margin, ell.spectrum_margin
        ));
    }
    if !ell.concave {
        issues.push(format!("not concave (margin {:e})", ell.concavity_margin));
    }
    if f0 > 1e-12 {
        issues.push(format!("F(x,t,0) = {f0:e}"));
    }
    if issues.is_empty() {
        AssumptionCheck::new(true, "uniformly elliptic, concave, F(.,.,0) = 0", worst)
    } else {
        AssumptionCheck::new(false, issues.join("; "), worst)
    }
}

fn check_reaction(problem: &ProblemSpec, eps_values: &[f64]) -> AssumptionCheck {
    let r = &problem.reaction;
    if r.is_zero() {
        return AssumptionCheck::new(true, "beta = 0", None);
    }
    let mut worst: Option<WorstSample> = None;
    let mut excess = 0.0f64;
    for &eps in eps_values {
        if !(eps > 0.0) {
            return AssumptionCheck::new(false, format!("eps = {eps} is not positive"), None);
        }
        for i in 0..=4000 {
            let s = 2.0 * eps * i as f64 / 4000.0;
            let v = r.beta_eps_raw(s, eps);
            let cap = if s > 0.0 && s < eps { 1.0 / eps } else { 0.0 };
            let over = (v - cap).max(-v);
            if over > excess {
                excess = over;
                worst = Some(WorstSample { point: [s, 0.0, 0.0], eps: Some(eps), value: v });
            }
        }
    }
    let pass = excess <= 1e-12 && r.amplitude() <= 1.0 && r.mass().is_finite();
    AssumptionCheck::new(
        pass,
        format!("mass {:.10}, sup|beta'| {:.6}, bound excess {excess:e}", r.mass(), r.sup_derivative()),
        worst,
    )
}

fn check_forcing(problem: &ProblemSpec, eps_values: &[f64]) -> (AssumptionCheck, f64) {
    let f = &problem.forcing;
    let grid = &problem.grid;
    let mut issues = Vec::new();
    if !(f.c0 > 0.0 && f.c1 >= f.c0) {
        issues.push(format!("need 0 < c0 <= c1, got c0 = {}, c1 = {}", f.c0, f.c1));
    }
    let eps_list: Vec<f64> = if f.expr.depends_on_eps() { eps_values.to_vec() } else { vec![eps_values.first().copied().unwrap_or(1.0)] };

    // spatial samples on nodes and midpoints, time samples on levels and midpoints
    let m = 2 * (grid.n() - 1) + 1;
    let half = 0.5 * grid.h();
    let spatial: Vec<[f64; 2]> = if grid.dim() == 1 {
        (0..m).map(|i| [i as f64 * half, 0.0]).collect()
    } else {
        (0..m * m).map(|k| [(k % m) as f64 * half, (k / m) as f64 * half]).collect()
    };
    let time_points = 2 * grid.steps() + 1;
    let budget = MAX_FORCING_SAMPLES / (spatial.len() * eps_list.len()).max(1);
    let stride = if f.expr.as_constant().is_some() { time_points } else { time_points.div_ceil(budget.max(1)) };
    let times: Vec<f64> = (0..time_points)
        .step_by(stride.max(1))
        .chain(std::iter::once(time_points - 1))
        .map(|k| k as f64 * 0.5 * grid.dt())
        .collect();

    let mut range_worst: Option<WorstSample> = None;
    let mut range_excess = 0.0f64;
    let mut mono_worst: Option<WorstSample> = None;
    let mut mono_excess = 0.0f64;
    let mut grad = 0.0f64;
    for &eps in &eps_list {
        let mut prev: Option<Vec<f64>> = None;
        for &t in &times {
            let vals: Vec<f64> = spatial.iter().map(|p| f.eval(*p, t, eps)).collect();
            for (i, (&v, p)) in vals.iter().zip(&spatial).enumerate() {
                let over = (f.c0 - v).max(v - f.c1);
                if over > range_excess || !v.is_finite() {
                    range_excess = if v.is_finite() { over } else { f64::INFINITY };
                    range_worst = Some(WorstSample { point: [p[0], p[1], t], eps: Some(eps), value: v });
                }
                if let Some(prev) = &prev {
                    let inc = v - prev[i];
                    if inc > mono_excess {
                        mono_excess = inc;
                        mono_worst = Some(WorstSample { point: [p[0], p[1], t], eps: Some(eps), value: inc });
                    }
                }
                let (ix, iy) = if grid.dim() == 1 { (i, 0) } else { (i % m, i / m) };
                if ix + 1 < m {
                    grad = grad.max((vals[i + 1] - v).abs() / half);
                }
                if grid.dim() == 2 && iy + 1 < m {
                    grad = grad.max((vals[i + m] - v).abs() / half);
                }
            }
            prev = Some(vals);
        }
    }
    if range_excess > 1e-12 {
        issues.push(format!("c0 <= f <= c1 violated by {range_excess:e}"));
    }
    if mono_excess > 1e-12 {
        issues.push(format!("f increases in t by {mono_excess:e}"));
    }
    if let Some(c) = f.grad_bound {
        if grad > c * (1.0 + 1e-9) + 1e-12 {
            issues.push(format!("|grad f| sampled {grad:e} exceeds the bound {c:e}"));
        }
    }
    let worst = if mono_excess > 1e-12 { mono_worst } else { range_worst };
    let check = if issues.is_empty() {
        AssumptionCheck::new(true, format!("c0 = {}, c1 = {}, sampled |grad f| = {grad:e}", f.c0, f.c1), None)
    } else {
        AssumptionCheck::new(false, issues.join("; "), worst)
    };
    (check, grad)
}

fn check_dirichlet(problem: &ProblemSpec) -> AssumptionCheck {
    let grid = &problem.grid;
    let mut issues = Vec::new();
    let mut worst = None;
    let mut neg = 0.0f64;
    let mut initial = 0.0f64;
    let mut decrease = 0.0f64;
    let per = grid.nodes_per_level();
    for s in 0..per {
        let v = problem.boundary_value(s, 0);
        let p = grid.position(s);
        if v.abs() > initial {
            initial = v.abs();
            worst = Some(WorstSample { point: [p[0], p[1], 0.0], eps: None, value: v });
        }
        neg = neg.max(-v);
    }
    let lateral: Vec<usize> = (0..per).filter(|&s| grid.is_lateral(s)).collect();
    for &s in &lateral {
        let p = grid.position(s);
        let mut prev = problem.boundary_value(s, 0);
        for k in 1..2 * grid.n_levels() - 1 {
            let t = 0.5 * k as f64 * grid.dt();
            let v = problem.dirichlet.expr.eval(&Vars::new(p[0], p[1], t, 0.0));
            neg = neg.max(-v);
            if prev - v > decrease {
                decrease = prev - v;
                if initial <= 1e-12 {
                    worst = Some(WorstSample { point: [p[0], p[1], t], eps: None, value: v - prev });
                }
            }
            prev = v;
        }
    }
    if initial > 1e-12 {
        issues.push(format!("phi(x,0) = {initial:e} != 0"));
    }
    if neg > 1e-12 {
        issues.push(format!("phi < 0 by {neg:e}"));
    }
    if decrease > 1e-12 {
        issues.push(format!("phi decreases in t by {decrease:e}"));
    }
    if issues.is_empty() {
        AssumptionCheck::new(true, "phi >= 0, phi(x,0) = 0, non-decreasing in t", None)
    } else {
        AssumptionCheck::new(false, issues.join("; "), worst)
    }
}

/// Sampled check of the operator, reaction, forcing, and boundary-data
/// assumptions. `eps_values` lists the `ε` for which `β_ε` and `f_ε` are
/// sampled. Pure: repeated calls return identical reports.
pub fn validate_assumptions(problem: &ProblemSpec, eps_values: &[f64], seed: u64) -> Result<AssumptionReport> {
    let domain = SampleDomain {
        dim: problem.grid.dim(),
        extent: problem.grid.extent(),
        t_final: problem.grid.t_final(),
    };
    let ellipticity = match ellipticity_audit(&problem.operator, domain, 2000, seed) {
        Ok(r) => r,
        Err(e) => return Err(Error::Assumptions(e.to_string())),
    };
    let a1 = check_operator(problem, &ellipticity);
    let a2 = check_reaction(problem, eps_values);
    let (a3, forcing_gradient) = check_forcing(problem, eps_values);
    let a4 = check_dirichlet(problem);
    let pass = a1.pass && a2.pass && a3.pass && a4.pass;
    Ok(AssumptionReport {
        a1_operator: a1,
        a2_reaction: a2,
        a3_forcing: a3,
        a4_dirichlet: a4,
        ellipticity,
        forcing_gradient,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(dirichlet: &str, forcing: &str) -> ProblemSpec {
        ProblemSpec {
            grid: SpaceTimeGrid::parabolic(1, 17, 0.1, 1.0).unwrap(),
            operator: OperatorSpec::pucci_minus(1.0, 2.0),
            reaction: ReactionProfile::bump(),
            forcing: ForcingSpec {
                expr: Expr::parse(forcing).unwrap(),
                c0: 1.0,
                c1: 2.0,
                grad_bound: None,
            },
            dirichlet: DirichletSpec::new(Expr::parse(dirichlet).unwrap()),
            one_phase: true,
        }
    }

    #[test]
    fn beta_eps_support_and_peak() {
        let b = ReactionProfile::bump();
        assert_eq!(beta_eps(0.2, 0.1, &b).unwrap(), 0.0);
        assert_eq!(beta_eps(-0.01, 0.1, &b).unwrap(), 0.0);
        assert!((beta_eps(0.05, 0.1, &b).unwrap() - 10.0).abs() < 1e-12);
        assert!(beta_eps(0.05, 0.0, &b).is_err());
        assert!(beta_eps(0.05, -1.0, &b).is_err());
    }

    #[test]
    fn peak_of_the_bump_is_one_at_half() {
        let s = golden_max(&bump, 0.01, 0.99);
        assert!((s - 0.5).abs() < 1e-6);
        assert!((bump(s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_is_in_unit_interval_and_linear_in_amplitude() {
        let full = ReactionProfile::bump();
        let half = ReactionProfile::new(ProfileKind::Bump, 0.5).unwrap();
        assert!(full.mass() > 0.0 && full.mass() < 1.0);
        assert!((half.mass() - 0.5 * full.mass()).abs() < 1e-14);
        assert_eq!(mollifier_mass(&ReactionProfile::zero()), 0.0);
    }

    #[test]
    fn scaled_mass_is_independent_of_eps() {
        let b = ReactionProfile::bump();
        for eps in [0.1, 0.01] {
            let m = adaptive_simpson(&|s| b.beta_eps_raw(s, eps), 0.0, eps, 1e-13);
            assert!((m - b.mass()).abs() <= 1e-8 * b.mass(), "eps {eps}: {m}");
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let b = ReactionProfile::bump();
        for s in [0.1, 0.25, 0.6, 0.9] {
            let fd = (b.beta(s + 1e-6) - b.beta(s - 1e-6)) / 2e-6;
            assert!((fd - b.beta_derivative(s)).abs() < 1e-6);
        }
        // sup over a fine scan never beats the cached maximum
        let scan = (1..100_000)
            .map(|i| b.beta_derivative(i as f64 / 100_000.0).abs())
            .fold(0.0, f64::max);
        assert!(scan <= b.sup_derivative() * (1.0 + 1e-12));
        assert!(scan >= b.sup_derivative() * (1.0 - 1e-6));
    }

    #[test]
    fn hat_profile_is_rejected() {
        let cfg = ReactionConfig { profile: "hat".into(), amplitude: 1.0, eps: None };
        assert!(matches!(ReactionProfile::from_config(&cfg), Err(Error::Config(_))));
        assert!(ReactionProfile::new(ProfileKind::Bump, 1.5).is_err());
    }

    #[test]
    fn demo_assumptions_pass() {
        let p = demo("x * t", "1");
        let p = ProblemSpec { forcing: ForcingSpec::constant(1.0), ..p };
        let r = validate_assumptions(&p, &[0.1, 0.05], 3).unwrap();
        assert!(r.pass, "{r:#?}");
        let again = validate_assumptions(&p, &[0.1, 0.05], 3).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn incompatible_initial_data_fails_a4() {
        let r = validate_assumptions(&demo("0.1", "1"), &[0.1], 3).unwrap();
        assert!(!r.a4_dirichlet.pass);
        assert!(r.a3_forcing.pass);
        assert!(!r.pass);
    }

    #[test]
    fn forcing_increasing_in_time_fails_a3() {
        let r = validate_assumptions(&demo("x * t", "1 + t"), &[0.1], 3).unwrap();
        assert!(!r.a3_forcing.pass);
        assert!(r.a3_forcing.detail.contains("increases"));
        assert!(r.a4_dirichlet.pass);
    }

    #[test]
    fn weak_convergence_to_dirac() {
        let b = ReactionProfile::bump();
        let psi = |s: f64| (1.0 + s).cos() + s * s;
        let mut errs = Vec::new();
        for j in 2..=10 {
            let eps = 2f64.powi(-j);
            let v = adaptive_simpson(&|s| b.beta_eps_raw(s, eps) * psi(s), 0.0, eps, 1e-13);
            errs.push((eps, (v - b.mass() * psi(0.0)).abs()));
        }
        for (eps, e) in errs {
            assert!(e <= 2.0 * eps, "eps {eps}: error {e}");
        }
    }
}
