//! Pucci extremal operators, `(λ, Λ)`-elliptic operator families, and their
//! monotone finite-difference evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Vars};
use crate::geometry::{Node, SpaceTimeGrid};
use crate::solver::SolutionField;

const SYMMETRY_TOL: f64 = 1e-12;

/// Tolerance of the ellipticity audit, relative to the size of the sample.
pub const AUDIT_TOL: f64 = 1e-9;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        let scale = data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if worst > SYMMETRY_TOL * scale || data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSymmetric(worst));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix rows must be square".into()));
        }
        Self::new(n, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, v) in d.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `tr(self * other)`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Eigenvalues in ascending order. Closed form for `n <= 2`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self.data[0]],
            2 => {
                let (a, b, c) = (self.data[0], self.data[1], self.data[3]);
                let m = 0.5 * (a + c);
                let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                vec![m - r, m + r]
            }
            n => {
                let m = nalgebra::DMatrix::from_row_slice(n, n, &self.data);
                let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
                e.sort_by(f64::total_cmp);
                e
            }
        }
    }
}

fn check_constants(lambda: f64, big_lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
        return Err(Error::InvalidOperator(format!(
            "need 0 < lambda <= Lambda, got lambda = {lambda}, Lambda = {big_lambda}"
        )));
    }
    Ok(())
}

fn pucci_minus_eig(e: &[f64], lambda: f64, big_lambda: f64) -> f64 {
    e.iter()
        .map(|&v| if v > 0.0 { lambda * v } else { big_lambda * v })
        .sum()
}

fn pucci_plus_eig(e: &[f64], lambda: f64, big_lambda: f64) -> f64 {
    e.iter()
        .map(|&v| if v > 0.0 { big_lambda * v } else { lambda * v })
        .sum()
}

/// `P⁻(M) = λ Σ_{e>0} e + Λ Σ_{e<0} e`.
pub fn pucci_minus(m: &SymMatrix, lambda: f64, big_lambda: f64) -> Result<f64> {
    check_constants(lambda, big_lambda)?;
    Ok(pucci_minus_eig(&m.eigenvalues(), lambda, big_lambda))
}

/// `P⁺(M) = Λ Σ_{e>0} e + λ Σ_{e<0} e`.
pub fn pucci_plus(m: &SymMatrix, lambda: f64, big_lambda: f64) -> Result<f64> {
    check_constants(lambda, big_lambda)?;
    Ok(pucci_plus_eig(&m.eigenvalues(), lambda, big_lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    LinearTrace,
    PucciMinus,
    PucciPlus,
    BellmanInf,
}

/// Matrix whose entries are expressions in `(x, y, t)`.
pub type CoefficientMatrix = Vec<Vec<Expr>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub form: OperatorForm,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    /// Coefficient matrix of `linear_trace`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<CoefficientMatrix>,
    /// Members of `bellman_inf`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<CoefficientMatrix>,
}

fn const_matrix(m: &SymMatrix) -> CoefficientMatrix {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| Expr::constant(m.get(i, j))).collect())
        .collect()
}

impl OperatorSpec {
    pub fn pucci_minus(lambda: f64, big_lambda: f64) -> Self {
        Self {
            form: OperatorForm::PucciMinus,
            lambda,
            big_lambda,
            matrix: None,
            family: Vec::new(),
        }
    }

    pub fn pucci_plus(lambda: f64, big_lambda: f64) -> Self {
        Self {
            form: OperatorForm::PucciPlus,
            ..Self::pucci_minus(lambda, big_lambda)
        }
    }

    /// `F(M) = tr(AM)` with constant `A`; `λ, Λ` are taken from its spectrum.
    pub fn linear(a: &SymMatrix) -> Self {
        let e = a.eigenvalues();
        Self {
            form: OperatorForm::LinearTrace,
            lambda: e[0],
            big_lambda: e[e.len() - 1],
            matrix: Some(const_matrix(a)),
            family: Vec::new(),
        }
    }

    /// `F(M) = tr(M)` in dimension `n`.
    pub fn laplacian(n: usize) -> Self {
        Self::linear(&SymMatrix::identity(n))
    }

    pub fn bellman(lambda: f64, big_lambda: f64, family: &[SymMatrix]) -> Self {
        Self {
            form: OperatorForm::BellmanInf,
            lambda,
            big_lambda,
            matrix: None,
            family: family.iter().map(const_matrix).collect(),
        }
    }

    /// Shape checks; ellipticity of the coefficients is left to the audit.
    pub fn validate(&self, dim: usize) -> Result<()> {
        check_constants(self.lambda, self.big_lambda)?;
        let shape_ok = |m: &CoefficientMatrix| m.len() == dim && m.iter().all(|r| r.len() == dim);
        match self.form {
            OperatorForm::LinearTrace => match &self.matrix {
                Some(m) if shape_ok(m) => Ok(()),
                Some(_) => Err(Error::InvalidOperator(format!("matrix must be {dim}x{dim}"))),
                None => Err(Error::InvalidOperator("linear_trace needs a matrix".into())),
            },
            OperatorForm::BellmanInf => {
                if self.family.is_empty() {
                    return Err(Error::EmptyFamily);
                }
                if self.family.iter().all(shape_ok) {
                    Ok(())
                } else {
                    Err(Error::InvalidOperator(format!("family members must be {dim}x{dim}")))
                }
            }
            _ => Ok(()),
        }
    }

    /// Coefficient matrices at `(x, t)`: one for linear, all members for Bellman.
    pub fn matrices_at(&self, x: [f64; 2], t: f64) -> Result<Vec<SymMatrix>> {
        let vars = Vars::new(x[0], x[1], t, 0.0);
        let eval = |m: &CoefficientMatrix| -> Result<SymMatrix> {
            let n = m.len();
            let data = m.iter().flat_map(|r| r.iter().map(|e| e.eval(&vars))).collect();
            SymMatrix::new(n, data)
        };
        match self.form {
            OperatorForm::LinearTrace => {
                let m = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidOperator("linear_trace needs a matrix".into()))?;
                Ok(vec![eval(m)?])
            }
            OperatorForm::BellmanInf => {
                if self.family.is_empty() {
                    return Err(Error::EmptyFamily);
                }
                self.family.iter().map(eval).collect()
            }
            _ => Ok(Vec::new()),
        }
    }

    pub fn is_concave_form(&self) -> bool {
        !matches!(self.form, OperatorForm::PucciPlus)
    }
}

/// `F(x, t, M)`.
pub fn evaluate_f(spec: &OperatorSpec, x: [f64; 2], t: f64, m: &SymMatrix) -> Result<f64> {
    match spec.form {
        OperatorForm::PucciMinus => pucci_minus(m, spec.lambda, spec.big_lambda),
        OperatorForm::PucciPlus => pucci_plus(m, spec.lambda, spec.big_lambda),
        OperatorForm::LinearTrace | OperatorForm::BellmanInf => {
            let mats = spec.matrices_at(x, t)?;
            if mats.iter().any(|a| a.dim() != m.dim()) {
                return Err(Error::InvalidArgument("dimension mismatch between A and M".into()));
            }
            Ok(mats
                .iter()
                .map(|a| a.trace_product(m))
                .fold(f64::INFINITY, f64::min))
        }
    }
}

/// Worst margins of the ellipticity chains over random samples. Negative
/// margins are violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub samples: usize,
    pub seed: u64,
    /// `min` of the slacks in `λ tr P <= F(M+P) - F(M) <= Λ tr P`.
    pub trace_margin: f64,
    /// `min` of the slacks in `P⁻_{λ/n,Λ}(A-B) <= F(A) - F(B) <= P⁺_{λ/n,Λ}(A-B)`.
    pub pucci_margin: f64,
    /// Slack of the coefficient spectra in `[λ, Λ]` at the sampled points;
    /// `None` for the Pucci forms, which carry no coefficients.
    pub spectrum_margin: Option<f64>,
    /// Slacks of `λ|P| <= F(M+P) - F(M) <= nΛ|P|` with `|P|` the largest
    /// eigenvalue. Informational.
    pub operator_norm_margin: f64,
    /// `min` of `F((M+N)/2) - (F(M)+F(N))/2`; informational for convex forms.
    pub concavity_margin: f64,
    pub concave: bool,
    pub pass: bool,
}

/// Sampling box for coefficient fields: `x ∈ [0, extent]^dim`, `t ∈ [0, t_final]`.
#[derive(Debug, Clone, Copy)]
pub struct SampleDomain {
    pub dim: usize,
    pub extent: f64,
    pub t_final: f64,
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = scale * rng.gen_range(-1.0..1.0);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    SymMatrix { n, data }
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = scale * (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>();
        }
    }
    // a rank-one direction now and then exercises the degenerate end
    if rng.gen_bool(0.25) {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = scale * v[i] * v[j];
            }
        }
    }
    SymMatrix { n, data }
}

/// Random-sample check of uniform ellipticity and of the Pucci chain with
/// constants `(λ/n, Λ)`. Fails when any slack drops below `-AUDIT_TOL * scale`.
pub fn ellipticity_audit(
    spec: &OperatorSpec,
    domain: SampleDomain,
    samples: usize,
    seed: u64,
) -> Result<EllipticityReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    spec.validate(domain.dim)?;
    let n = domain.dim;
    let (lam, big) = (spec.lambda, spec.big_lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace_margin = f64::INFINITY;
    let mut pucci_margin = f64::INFINITY;
    let mut spectrum_margin: Option<f64> = None;
    let mut norm_margin = f64::INFINITY;
    let mut concavity_margin = f64::INFINITY;
    let mut violated = false;

    for _ in 0..samples {
        let mut x = [0.0; 2];
        for xi in x.iter_mut().take(n) {
            *xi = rng.gen_range(0.0..=domain.extent);
        }
        let t = rng.gen_range(0.0..=domain.t_final);
        for a in spec.matrices_at(x, t)? {
            let e = a.eigenvalues();
            let slack = (e[0] - lam).min(big - e[e.len() - 1]);
            spectrum_margin = Some(spectrum_margin.map_or(slack, |m| m.min(slack)));
            violated |= slack < -AUDIT_TOL * big.max(1.0);
        }

        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let m = random_sym(&mut rng, n, scale);
        let p = random_psd(&mut rng, n, scale);
        let f_m = evaluate_f(spec, x, t, &m)?;
        let delta = evaluate_f(spec, x, t, &m.add(&p))? - f_m;
        let tr_p = p.trace();
        let tol = AUDIT_TOL * scale.max(1.0) * (1.0 + big);
        let slack = (delta - lam * tr_p).min(big * tr_p - delta);
        trace_margin = trace_margin.min(slack);
        violated |= slack < -tol;

        let p_norm = *p.eigenvalues().last().unwrap_or(&0.0);
        norm_margin = norm_margin.min((delta - lam * p_norm).min(n as f64 * big * p_norm - delta));

        let a = random_sym(&mut rng, n, scale);
        let b = random_sym(&mut rng, n, scale);
        let diff = evaluate_f(spec, x, t, &a)? - evaluate_f(spec, x, t, &b)?;
        let ab = a.sub(&b);
        let lo = pucci_minus(&ab, lam / n as f64, big)?;
        let hi = pucci_plus(&ab, lam / n as f64, big)?;
        let slack = (diff - lo).min(hi - diff);
        pucci_margin = pucci_margin.min(slack);
        violated |= slack < -tol;

        let mid = evaluate_f(spec, x, t, &a.add(&b).scale(0.5))?;
        let f_a = diff + evaluate_f(spec, x, t, &b)?;
        concavity_margin =
            concavity_margin.min(mid - 0.5 * (f_a + evaluate_f(spec, x, t, &b)?));
    }
    let concave = concavity_margin >= -AUDIT_TOL * 100.0;
    Ok(EllipticityReport {
        samples,
        seed,
        trace_margin,
        pucci_margin,
        spectrum_margin,
        operator_norm_margin: norm_margin,
        concavity_margin,
        concave,
        pass: !violated,
    })
}

/// Centred second differences at one node: along `x`, `y`, `(1,1)/√2` and
/// `(1,-1)/√2`. In 1D only `xx` is used.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SecondDifferences {
    pub xx: f64,
    pub yy: f64,
    pub pp: f64,
    pub pm: f64,
}

/// Stencil weights of one linear member `a u_xx + 2b u_xy + c u_yy`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct MemberWeights {
    axis: [f64; 2],
    diag: f64,
    anti: bool,
}

impl MemberWeights {
    fn from_matrix(a: &SymMatrix) -> Result<Self> {
        if a.dim() == 1 {
            return Ok(Self {
                axis: [a.get(0, 0), 0.0],
                diag: 0.0,
                anti: false,
            });
        }
        let (xx, xy, yy) = (a.get(0, 0), a.get(0, 1), a.get(1, 1));
        let w = [xx - xy.abs(), yy - xy.abs()];
        if w[0] < -1e-12 || w[1] < -1e-12 {
            return Err(Error::InvalidOperator(format!(
                "coefficient matrix [[{xx}, {xy}], [{xy}, {yy}]] is not diagonally dominant; \
                 the 9-point stencil would not be monotone"
            )));
        }
        Ok(Self {
            axis: [w[0].max(0.0), w[1].max(0.0)],
            diag: 2.0 * xy.abs(),
            anti: xy < 0.0,
        })
    }

    fn apply(&self, d: &SecondDifferences) -> f64 {
        self.axis[0] * d.xx + self.axis[1] * d.yy + self.diag * if self.anti { d.pm } else { d.pp }
    }

    /// `|∂/∂u_center|` times `h²`.
    fn center_weight(&self) -> f64 {
        2.0 * (self.axis[0] + self.axis[1]) + self.diag
    }
}

#[derive(Debug, Clone)]
enum LevelKind {
    Pucci { minus: bool, lambda: f64, big_lambda: f64 },
    /// One member list per spatial node, or a single shared list.
    Members(Vec<Vec<MemberWeights>>),
}

/// The discrete operator `F_h(x, t, ·)` frozen at one time level.
#[derive(Debug, Clone)]
pub struct LevelOperator {
    dim: usize,
    kind: LevelKind,
    center_bound: f64,
}

impl LevelOperator {
    pub fn build(spec: &OperatorSpec, grid: &SpaceTimeGrid, level: usize) -> Result<Self> {
        spec.validate(grid.dim())?;
        let h2 = grid.h() * grid.h();
        let dim = grid.dim();
        match spec.form {
            OperatorForm::PucciMinus | OperatorForm::PucciPlus => Ok(Self {
                dim,
                kind: LevelKind::Pucci {
                    minus: spec.form == OperatorForm::PucciMinus,
                    lambda: spec.lambda,
                    big_lambda: spec.big_lambda,
                },
                center_bound: 2.0 * dim as f64 * spec.big_lambda / h2,
            }),
            OperatorForm::LinearTrace | OperatorForm::BellmanInf => {
                let constant = spec
                    .matrix
                    .iter()
                    .chain(spec.family.iter())
                    .all(|m| m.iter().flatten().all(|e| e.as_constant().is_some()));
                let t = grid.time(level);
                let members_at = |s: usize| -> Result<Vec<MemberWeights>> {
                    spec.matrices_at(grid.position(s), t)?
                        .iter()
                        .map(MemberWeights::from_matrix)
                        .collect()
                };
                let per_node: Vec<Vec<MemberWeights>> = if constant {
                    vec![members_at(0)?]
                } else {
                    (0..grid.nodes_per_level())
                        .map(members_at)
                        .collect::<Result<_>>()?
                };
                let center_bound = per_node
                    .iter()
                    .flatten()
                    .map(MemberWeights::center_weight)
                    .fold(0.0, f64::max)
                    / h2;
                Ok(Self {
                    dim,
                    kind: LevelKind::Members(per_node),
                    center_bound,
                })
            }
        }
    }

    /// Upper bound on how fast `F_h` decreases when the centre value grows.
    pub fn center_bound(&self) -> f64 {
        self.center_bound
    }

    pub fn apply(&self, s: usize, d: &SecondDifferences) -> f64 {
        match &self.kind {
            LevelKind::Pucci { minus, lambda, big_lambda } => {
                let (pos, neg) = if *minus { (*lambda, *big_lambda) } else { (*big_lambda, *lambda) };
                let frame = |a: f64, b: f64| {
                    let w = |v: f64| if v > 0.0 { pos * v } else { neg * v };
                    w(a) + w(b)
                };
                if self.dim == 1 {
                    let v = d.xx;
                    if v > 0.0 {
                        pos * v
                    } else {
                        neg * v
                    }
                } else {
                    let axis = frame(d.xx, d.yy);
                    let diag = frame(d.pp, d.pm);
                    if *minus {
                        axis.min(diag)
                    } else {
                        axis.max(diag)
                    }
                }
            }
            LevelKind::Members(per_node) => {
                let members = if per_node.len() == 1 { &per_node[0] } else { &per_node[s] };
                members
                    .iter()
                    .map(|m| m.apply(d))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Second differences of the slice `values` (one time level) at spatial node
/// `s`. The node must not lie on `∂Ω`.
pub fn second_differences(grid: &SpaceTimeGrid, values: &[f64], s: usize) -> SecondDifferences {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let c = values[s];
    if grid.dim() == 1 {
        return SecondDifferences {
            xx: (values[s + 1] - 2.0 * c + values[s - 1]) / h2,
            ..Default::default()
        };
    }
    SecondDifferences {
        xx: (values[s + 1] - 2.0 * c + values[s - 1]) / h2,
        yy: (values[s + n] - 2.0 * c + values[s - n]) / h2,
        pp: (values[s + n + 1] - 2.0 * c + values[s - n - 1]) / (2.0 * h2),
        pm: (values[s - n + 1] - 2.0 * c + values[s + n - 1]) / (2.0 * h2),
    }
}

/// `F(x, t, D²_h u) - (u(x,t) - u(x,t-dt))/dt` at a parabolic-interior node.
pub fn discrete_operator_apply(spec: &OperatorSpec, field: &SolutionField, node: Node) -> Result<f64> {
    let grid = field.grid();
    let s = grid.spatial_id(node.idx);
    if !grid.contains(node) || node.level == 0 || grid.is_lateral(s) {
        return Err(Error::StencilOutsideGrid([node.idx[0], node.idx[1], node.level]));
    }
    let op = LevelOperator::build(spec, grid, node.level)?;
    let now = field.slice(node.level);
    let before = field.slice(node.level - 1);
    let d = second_differences(grid, now, s);
    Ok(op.apply(s, &d) - (now[s] - before[s]) / grid.dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag2(a: f64, b: f64) -> SymMatrix {
        SymMatrix::diag(&[a, b])
    }

    #[test]
    fn pucci_examples() {
        let m = diag2(2.0, -3.0);
        assert_eq!(pucci_minus(&m, 1.0, 2.0).unwrap(), -4.0);
        assert_eq!(pucci_plus(&m, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(pucci_minus(&SymMatrix::zeros(2), 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(pucci_plus(&SymMatrix::zeros(3), 1.0, 2.0).unwrap(), 0.0);
        let m = SymMatrix::from_rows(&[&[1.0, 0.3], &[0.3, -2.0]]).unwrap();
        assert!((pucci_minus(&m, 1.0, 1.0).unwrap() - m.trace()).abs() < 1e-14);
        assert!(pucci_minus(&m, 2.0, 1.0).is_err());
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = SymMatrix::from_rows(&[&[1.0, 0.5], &[0.4, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric(_)));
    }

    #[test]
    fn closed_form_eigenvalues_match_nalgebra() {
        let m = SymMatrix::from_rows(&[&[0.7, -1.3], &[-1.3, 2.2]]).unwrap();
        let nm = nalgebra::Matrix2::new(0.7, -1.3, -1.3, 2.2);
        let mut e: Vec<f64> = nm.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let ours = m.eigenvalues();
        assert!((ours[0] - e[0]).abs() < 1e-13 && (ours[1] - e[1]).abs() < 1e-13);
    }

    #[test]
    fn evaluate_forms() {
        let m = diag2(1.0, 1.0);
        let lin = OperatorSpec::laplacian(2);
        assert_eq!(evaluate_f(&lin, [0.0; 2], 0.0, &m).unwrap(), 2.0);
        let bell = OperatorSpec::bellman(1.0, 2.0, &[SymMatrix::identity(2), SymMatrix::identity(2).scale(2.0)]);
        assert_eq!(evaluate_f(&bell, [0.0; 2], 0.0, &m).unwrap(), 2.0);
        let pm = OperatorSpec::pucci_minus(1.0, 2.0);
        let m = diag2(2.0, -3.0);
        assert_eq!(evaluate_f(&pm, [0.3, 0.1], 0.2, &m).unwrap(), pucci_minus(&m, 1.0, 2.0).unwrap());
        let empty = OperatorSpec {
            family: Vec::new(),
            ..bell
        };
        assert!(matches!(evaluate_f(&empty, [0.0; 2], 0.0, &m), Err(Error::EmptyFamily)));
    }

    #[test]
    fn coefficient_fields_are_evaluated() {
        let json = r#"{"form": "linear_trace", "lambda": 1, "Lambda": 3,
                       "matrix": [["2 + x", 0], [0, "1 + t"]]}"#;
        let spec: OperatorSpec = serde_json::from_str(json).unwrap();
        let v = evaluate_f(&spec, [0.5, 0.0], 0.25, &SymMatrix::identity(2)).unwrap();
        assert!((v - 3.75).abs() < 1e-14);
    }

    #[test]
    fn audit_identity_and_violations() {
        let dom = SampleDomain { dim: 2, extent: 1.0, t_final: 1.0 };
        let r = ellipticity_audit(&OperatorSpec::laplacian(2), dom, 500, 7).unwrap();
        assert!(r.pass);
        assert!(r.trace_margin.abs() < 1e-9);
        assert!(r.concave);
        let bad = OperatorSpec::bellman(1.0, 2.0, &[SymMatrix::identity(2), diag2(1.0, 2.5)]);
        let r = ellipticity_audit(&bad, dom, 200, 7).unwrap();
        assert!(!r.pass);
        assert!(r.spectrum_margin.unwrap() < -0.4);
        let r = ellipticity_audit(&OperatorSpec::pucci_plus(1.0, 2.0), dom, 500, 7).unwrap();
        assert!(r.pass);
        assert!(!r.concave);
    }

    #[test]
    fn non_dominant_matrix_is_rejected_by_the_stencil() {
        let a = SymMatrix::from_rows(&[&[1.0, 0.9], &[0.9, 1.0]]).unwrap();
        assert!(MemberWeights::from_matrix(&a).is_ok());
        let a = SymMatrix::from_rows(&[&[1.0, 1.5], &[1.5, 3.0]]).unwrap();
        assert!(MemberWeights::from_matrix(&a).is_err());
    }

    #[test]
    fn linear_weights_reproduce_the_trace_on_quadratics() {
        let a = SymMatrix::from_rows(&[&[2.0, -0.5], &[-0.5, 1.0]]).unwrap();
        let w = MemberWeights::from_matrix(&a).unwrap();
        // u = p x^2 + 2q xy + r y^2 has exact differences
        let (p, q, r) = (0.3, 0.7, -1.1);
        let d = SecondDifferences {
            xx: 2.0 * p,
            yy: 2.0 * r,
            pp: p + 2.0 * q + r,
            pm: p - 2.0 * q + r,
        };
        let hess = SymMatrix::from_rows(&[&[2.0 * p, 2.0 * q], &[2.0 * q, 2.0 * r]]).unwrap();
        assert!((w.apply(&d) - a.trace_product(&hess)).abs() < 1e-13);
    }
}
