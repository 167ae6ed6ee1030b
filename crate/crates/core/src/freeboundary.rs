//! Free-boundary extraction and the audits of the limit: non-degeneracy,
//! dyadic growth classes, quadratic growth, and porosity of time slices.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lower_cylinder, Node, SpaceTimeGrid};
use crate::solver::SolutionField;

/// Exponent below which growth is reported as sub-quadratic.
pub const SUBQUADRATIC_EXPONENT: f64 = 1.7;

/// Positivity threshold `max(10 outer_tol, ε_min / 10)`.
pub fn theta(outer_tol: f64, eps_min: f64) -> f64 {
    (10.0 * outer_tol).max(eps_min / 10.0)
}

/// `μ₀ = min(c₀/2, c₀/(4nΛ))`.
pub fn mu0(c0: f64, n: usize, big_lambda: f64) -> Result<f64> {
    if !(c0 > 0.0) || n == 0 || !(big_lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mu0 needs c0 > 0, n >= 1, Lambda > 0 (got {c0}, {n}, {big_lambda})"
        )));
    }
    Ok((c0 / 2.0).min(c0 / (4.0 * n as f64 * big_lambda)))
}

/// `M = 4 max(1, 1/μ₀)`.
pub fn doubling_constant(mu0: f64) -> f64 {
    4.0 * (1.0f64).max(1.0 / mu0)
}

/// Squared Euclidean distance transform of a 1D sequence (Felzenszwalb and
/// Huttenlocher). `f` holds 0 at features and `INFINITY` elsewhere, or any
/// sampled function for the lower-envelope form.
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance (in grid steps) to the nearest `true` cell of
/// an `nx x ny` row-major mask. `INFINITY` when the mask is empty.
pub fn edt(mask: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    assert_eq!(mask.len(), nx * ny);
    let mut rows: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let mut buf = vec![0.0; nx.max(ny)];
    for j in 0..ny {
        let row = &mut rows[j * nx..(j + 1) * nx];
        edt_1d(row, &mut buf[..nx]);
        row.copy_from_slice(&buf[..nx]);
    }
    if ny > 1 {
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = rows[j * nx + i];
            }
            edt_1d(&col, &mut buf[..ny]);
            for j in 0..ny {
                rows[j * nx + i] = buf[j];
            }
        }
    }
    rows
}

/// Axis-neighbour spatial ids of `s`.
fn axis_neighbours(grid: &SpaceTimeGrid, s: usize) -> impl Iterator<Item = usize> + '_ {
    (0..grid.dim()).flat_map(move |a| {
        [-1isize, 1].into_iter().filter_map(move |d| {
            let mut o = [0isize; 2];
            o[a] = d;
            grid.offset_spatial(s, o)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySlice {
    pub level: usize,
    pub t0: f64,
    pub theta: f64,
    /// `u > θ` per spatial node.
    pub positive: Vec<bool>,
    /// Spatial ids on the discrete boundary of the positivity set.
    pub fb_points: Vec<usize>,
}

/// Nodes of level `t0` whose positivity differs from that of an axis neighbour.
pub fn extract_free_boundary(field: &SolutionField, t0: f64, theta: f64) -> Result<FreeBoundarySlice> {
    let grid = field.grid();
    let level = grid.level_of(t0).ok_or(Error::OffGrid(t0))?;
    Ok(extract_at_level(field, level, theta))
}

pub fn extract_at_level(field: &SolutionField, level: usize, theta: f64) -> FreeBoundarySlice {
    let grid = field.grid();
    let u = field.slice(level);
    let positive: Vec<bool> = u.iter().map(|&v| v > theta).collect();
    let fb_points = (0..grid.nodes_per_level())
        .filter(|&s| axis_neighbours(grid, s).any(|nb| positive[nb] != positive[s]))
        .collect();
    FreeBoundarySlice {
        level,
        t0: grid.time(level),
        theta,
        positive,
        fb_points,
    }
}

/// Writes `x[,y],t` rows of the slice's free-boundary points.
pub fn write_fb_csv(grid: &SpaceTimeGrid, slice: &FreeBoundarySlice, path: &std::path::Path) -> Result<()> {
    let mut out = String::from(if grid.dim() == 2 { "x,y,t\n" } else { "x,t\n" });
    for &s in &slice.fb_points {
        let p = grid.position(s);
        if grid.dim() == 2 {
            out.push_str(&format!("{},{},{}\n", p[0], p[1], slice.t0));
        } else {
            out.push_str(&format!("{},{}\n", p[0], slice.t0));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-level squared distance (index units) to the non-positive set, cached.
pub struct CylinderDistance<'a> {
    field: &'a SolutionField,
    theta: f64,
    cache: HashMap<usize, Vec<f64>>,
}

impl<'a> CylinderDistance<'a> {
    pub fn new(field: &'a SolutionField, theta: f64) -> Self {
        Self {
            field,
            theta,
            cache: HashMap::new(),
        }
    }

    fn level_edt(&mut self, level: usize) -> &[f64] {
        let field = self.field;
        let theta = self.theta;
        self.cache.entry(level).or_insert_with(|| {
            let grid = field.grid();
            let mask: Vec<bool> = field.slice(level).iter().map(|&v| v <= theta).collect();
            let ny = if grid.dim() == 2 { grid.n() } else { 1 };
            edt(&mask, grid.n(), ny)
        })
    }

    /// `d(x,t) = sup{r : Q_r(x,t) ⊂ {u > θ}}`, with `Q_r` also required to
    /// stay inside `Ω x (0, T]` in space and in the past.
    pub fn distance(&mut self, node: Node) -> f64 {
        self.distance_with_source(node).0
    }

    /// `d(x,t)` and whether it is set by `∂_pΩ_T` rather than by `{u <= θ}`.
    pub fn distance_with_source(&mut self, node: Node) -> (f64, bool) {
        let grid = self.field.grid().clone();
        let s = grid.spatial_id(node.idx);
        if self.field.value(node) <= self.theta {
            return (0.0, false);
        }
        let h = grid.h();
        let dt = grid.dt();
        let wall2 = grid.lateral_distance(s).powi(2).min(grid.time(node.level));
        let mut best2 = self.level_edt(node.level)[s] * h * h;
        let mut k = 1usize;
        while (k as f64) * dt < best2.min(wall2) {
            let gap = k as f64 * dt;
            for level in [node.level.checked_sub(k), Some(node.level + k)].into_iter().flatten() {
                if level < grid.n_levels() {
                    let g = self.level_edt(level)[s] * h * h;
                    best2 = best2.min(g.max(gap));
                }
            }
            k += 1;
        }
        if wall2 < best2 {
            (wall2.sqrt(), true)
        } else {
            (best2.sqrt(), false)
        }
    }
}

/// `d(x,t)` for one node; see [`CylinderDistance`] for bulk use.
pub fn cylinder_distance(field: &SolutionField, theta: f64, node: Node) -> f64 {
    CylinderDistance::new(field, theta).distance(node)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Pass,
    Fail,
    /// Nothing to audit (no free-boundary points or no admissible radius).
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRatios {
    pub point: usize,
    /// `(r, sup ratio, inf ratio)` with ratios `(max or min over ∂_pQ⁻_r of u - u(z))/r²`.
    pub ratios: Vec<(f64, f64, f64)>,
    /// Slope of `log(sup increment)` against `log r`.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub level: usize,
    pub points: Vec<PointRatios>,
    pub skipped_points: usize,
    pub min_sup_ratio: f64,
    pub min_inf_ratio: f64,
    pub exponent_median: Option<f64>,
    pub exponent_min: Option<f64>,
    pub exponent_max: Option<f64>,
    pub status: AuditStatus,
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_log_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Non-degeneracy ratios at given points of a level. Radii whose closed
/// cylinder leaves the grid are skipped.
pub fn nondegeneracy_at(field: &SolutionField, level: usize, points: &[usize], radii: &[f64]) -> NondegeneracyReport {
    let grid = field.grid();
    let results: Vec<Option<PointRatios>> = points
        .par_iter()
        .map(|&z| {
            let node = Node { idx: grid.spatial_idx(z), level };
            let uz = field.value(node);
            let mut ratios = Vec::new();
            for &r in radii {
                let Ok(cyl) = lower_cylinder(node, r, grid) else { continue };
                if cyl.clipped {
                    continue;
                }
                let sup = cyl.sup_on_boundary(|k, s| field.at(k, s));
                let inf = cyl.inf_on_boundary(|k, s| field.at(k, s));
                ratios.push((r, (sup - uz) / (r * r), (inf - uz) / (r * r)));
            }
            if ratios.is_empty() {
                return None;
            }
            let pairs: Vec<(f64, f64)> = ratios.iter().map(|&(r, q, _)| (r, q * r * r)).collect();
            let exponent = if pairs.len() >= 3 { log_log_slope(&pairs) } else { None };
            Some(PointRatios { point: z, ratios, exponent })
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let points: Vec<PointRatios> = results.into_iter().flatten().collect();
    let min_sup = points.iter().flat_map(|p| p.ratios.iter().map(|r| r.1)).fold(f64::INFINITY, f64::min);
    let min_inf = points.iter().flat_map(|p| p.ratios.iter().map(|r| r.2)).fold(f64::INFINITY, f64::min);
    let mut exps: Vec<f64> = points.iter().filter_map(|p| p.exponent).collect();
    let exponent_min = exps.iter().copied().reduce(f64::min);
    let exponent_max = exps.iter().copied().reduce(f64::max);
    let status = if points.is_empty() {
        AuditStatus::Vacuous
    } else if min_sup > 0.0 {
        AuditStatus::Pass
    } else {
        AuditStatus::Fail
    };
    NondegeneracyReport {
        level,
        points,
        skipped_points: skipped,
        min_sup_ratio: min_sup,
        min_inf_ratio: min_inf,
        exponent_median: median(&mut exps),
        exponent_min,
        exponent_max,
        status,
    }
}

/// Non-degeneracy over all free-boundary points of a slice.
pub fn nondegeneracy_audit(field: &SolutionField, slice: &FreeBoundarySlice, radii: &[f64]) -> NondegeneracyReport {
    nondegeneracy_at(field, slice.level, &slice.fb_points, radii)
}

/// Dyadic radii `2^k h` from `2h` up to `r_max`.
pub fn dyadic_radii(h: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 2.0 * h;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicClasses {
    pub point: Node,
    /// First resolvable `j`; nonzero means the point sits near `∂_p`.
    pub j_start: usize,
    pub flagged: bool,
    /// `(j, 2^-j, S(2^-j))` for the normalized field `u/κ`.
    pub s_values: Vec<(usize, f64, f64)>,
    pub h_set: Vec<usize>,
    /// Whether `j_start ∈ H` (expected when `u(point) <= θ`).
    pub first_in_h: bool,
    /// `max_{j ∈ H} S(2^{-j-1}) / 2^{-2j}`.
    pub c1_hat: f64,
}

/// `S(2^-j) = sup u/κ` over the closed lower cylinder, and the set
/// `H = {j : S(2^-j) <= M S(2^-j-1)}`.
pub fn dyadic_classes(field: &SolutionField, point: Node, kappa: f64, big_m: f64) -> Result<DyadicClasses> {
    let grid = field.grid();
    let mut s_values = Vec::new();
    let mut j_start = None;
    let mut j = 0usize;
    loop {
        let r = grid.extent() * 2f64.powi(-(j as i32));
        if r < grid.h() * (1.0 - 1e-9) {
            break;
        }
        let cyl = lower_cylinder(point, r, grid)?;
        if !cyl.clipped {
            j_start.get_or_insert(j);
            let s = cyl.sup_on_closure(|k, s| field.at(k, s)) / kappa;
            s_values.push((j, r, s));
        }
        j += 1;
    }
    let j_start = j_start.ok_or_else(|| Error::InsufficientData("no resolvable dyadic radius".into()))?;
    let mut h_set = Vec::new();
    let mut c1_hat = 0.0f64;
    for w in s_values.windows(2) {
        let ((j, r, s), (_, _, s_half)) = (w[0], w[1]);
        if s <= big_m * s_half {
            h_set.push(j);
            c1_hat = c1_hat.max(s_half / (r * r));
        }
    }
    Ok(DyadicClasses {
        point,
        j_start,
        flagged: j_start > 0,
        first_in_h: h_set.first() == Some(&j_start),
        s_values,
        h_set,
        c1_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub nodes_used: usize,
    pub c0_hat: f64,
    /// Binned `(d, max u)` envelope used by the fit.
    pub envelope: Vec<(f64, f64)>,
    pub exponent: f64,
    pub subquadratic: bool,
    /// `max S(r)/r²` over free-boundary points and dyadic radii.
    pub doubling_ratio: f64,
    pub doubling_samples: Vec<(f64, f64)>,
}

/// `Ĉ₀ = max u/d²` over nodes with `d > 2h` whose distance is set by the
/// zero set rather than by `∂_pΩ_T`, and the slope of the
/// log-binned envelope of `u` against `d`. `levels` selects the time levels
/// scanned; `spatial` the spatial nodes.
pub fn growth_audit(
    field: &SolutionField,
    theta: f64,
    levels: &[usize],
    spatial: &[usize],
    doubling_points: &[Node],
    radii: &[f64],
) -> Result<GrowthReport> {
    let grid = field.grid();
    let h = grid.h();
    let chunks: Vec<Vec<(f64, f64)>> = levels
        .par_iter()
        .map(|&level| {
            let mut dist = CylinderDistance::new(field, theta);
            spatial
                .iter()
                .filter_map(|&s| {
                    let node = Node { idx: grid.spatial_idx(s), level };
                    let (d, walled) = dist.distance_with_source(node);
                    (!walled && d > 2.0 * h * (1.0 + 1e-9)).then(|| (d, field.value(node)))
                })
                .collect()
        })
        .collect();
    let samples: Vec<(f64, f64)> = chunks.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::InsufficientData("no node with d > 2h".into()));
    }
    let c0_hat = samples.iter().map(|(d, u)| u / (d * d)).fold(0.0, f64::max);

    // four bins per octave starting at 2h
    let base = 2.0 * h;
    let mut bins: Vec<Option<(f64, f64)>> = Vec::new();
    for &(d, u) in &samples {
        let b = (4.0 * (d / base).log2()).floor().max(0.0) as usize;
        if bins.len() <= b {
            bins.resize(b + 1, None);
        }
        match bins[b] {
            Some((_, best)) if best >= u => {}
            _ => bins[b] = Some((d, u)),
        }
    }
    let envelope: Vec<(f64, f64)> = bins.into_iter().flatten().collect();
    let exponent = log_log_slope(&envelope)
        .ok_or_else(|| Error::InsufficientData("growth envelope has fewer than two bins".into()))?;

    let mut doubling_samples = Vec::new();
    for &p in doubling_points {
        for &r in radii {
            if let Ok(cyl) = lower_cylinder(p, r, grid) {
                if !cyl.clipped {
                    doubling_samples.push((r, cyl.sup_on_closure(|k, s| field.at(k, s)) / (r * r)));
                }
            }
        }
    }
    let doubling_ratio = doubling_samples.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(GrowthReport {
        nodes_used: samples.len(),
        c0_hat,
        envelope,
        exponent,
        subquadratic: exponent < SUBQUADRATIC_EXPONENT,
        doubling_ratio,
        doubling_samples,
    })
}

/// Squared-distance map of a point set on a padded lattice, so that ball
/// centres may leave the domain.
struct PaddedEdt {
    dim: usize,
    pad: usize,
    width: usize,
    d2: Vec<f64>,
}

impl PaddedEdt {
    fn new(grid: &SpaceTimeGrid, points: &[usize], pad: usize) -> Self {
        let dim = grid.dim();
        let width = grid.n() + 2 * pad;
        let ny = if dim == 2 { width } else { 1 };
        let mut mask = vec![false; width * ny];
        for &s in points {
            let idx = grid.spatial_idx(s);
            let (i, j) = (idx[0] + pad, if dim == 2 { idx[1] + pad } else { 0 });
            mask[j * width + i] = true;
        }
        Self {
            dim,
            pad,
            width,
            d2: edt(&mask, width, ny),
        }
    }

    /// Squared distance at padded lattice offset `o` from spatial node `s`.
    fn at(&self, grid: &SpaceTimeGrid, s: usize, o: [isize; 2]) -> Option<f64> {
        let idx = grid.spatial_idx(s);
        let i = idx[0] as isize + self.pad as isize + o[0];
        let j = if self.dim == 2 { idx[1] as isize + self.pad as isize + o[1] } else { 0 };
        let ny = if self.dim == 2 { self.width } else { 1 };
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= ny {
            return None;
        }
        Some(self.d2[j as usize * self.width + i as usize])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityReport {
    pub delta_hat: f64,
    /// `(r, min_x ρ(x,r)/r)`.
    pub per_radius: Vec<(f64, f64)>,
    /// Pairs `(x, r)` with `ρ(x,r) = 0`.
    pub failures: usize,
    pub pairs: usize,
    pub worst_point: usize,
    pub worst_radius: f64,
}

/// Largest ball radius inside `B_r(x)` missing `E`, over lattice centres.
fn largest_hole(grid: &SpaceTimeGrid, edt: &PaddedEdt, x: usize, r: f64) -> f64 {
    let h = grid.h();
    let rho = r / h;
    let mut best = 0.0f64;
    for o in grid.ball_offsets(rho, false) {
        let Some(d2) = edt.at(grid, x, o) else { continue };
        let off = ((o[0] * o[0] + o[1] * o[1]) as f64).sqrt();
        best = best.max(d2.sqrt().min(rho - off));
    }
    best * h
}

/// `δ̂ = min ρ(x,r)/r` over points `x ∈ E` and radii `r = 4h, 8h, ... <= R`,
/// with `ρ(x,r)` the radius of the largest lattice-centred ball inside
/// `B_r(x)` avoiding `E`.
pub fn porosity_of_set(grid: &SpaceTimeGrid, e: &[usize], r_max: f64) -> Result<PorosityReport> {
    porosity_with_centres(grid, e, e, r_max)
}

/// As [`porosity_of_set`] with the centres `x` restricted to `centres`.
pub fn porosity_with_centres(grid: &SpaceTimeGrid, e: &[usize], centres: &[usize], r_max: f64) -> Result<PorosityReport> {
    let h = grid.h();
    if e.is_empty() || centres.is_empty() {
        return Err(Error::NoFreeBoundary);
    }
    if r_max < 4.0 * h * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!("porosity radius {r_max} is below 4h")));
    }
    let mut radii = Vec::new();
    let mut r = 4.0 * h;
    while r <= r_max * (1.0 + 1e-9) {
        radii.push(r);
        r *= 2.0;
    }
    let pad = (r_max / h).ceil() as usize + 1;
    let map = PaddedEdt::new(grid, e, pad);
    let rows: Vec<Vec<f64>> = centres
        .par_iter()
        .map(|&x| radii.iter().map(|&r| largest_hole(grid, &map, x, r) / r).collect())
        .collect();
    let mut per_radius: Vec<(f64, f64)> = radii.iter().map(|&r| (r, f64::INFINITY)).collect();
    let (mut worst, mut worst_point, mut worst_radius, mut failures) = (f64::INFINITY, centres[0], radii[0], 0);
    for (row, &x) in rows.iter().zip(centres) {
        for (k, &q) in row.iter().enumerate() {
            per_radius[k].1 = per_radius[k].1.min(q);
            if q <= 0.0 {
                failures += 1;
            }
            if q < worst {
                worst = q;
                worst_point = x;
                worst_radius = radii[k];
            }
        }
    }
    Ok(PorosityReport {
        delta_hat: worst,
        per_radius,
        failures,
        pairs: centres.len() * radii.len(),
        worst_point,
        worst_radius,
    })
}

pub fn porosity_estimate(grid: &SpaceTimeGrid, slice: &FreeBoundarySlice, r_max: f64) -> Result<PorosityReport> {
    porosity_of_set(grid, &slice.fb_points, r_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCheck {
    pub pairs: usize,
    pub passed: usize,
    /// Pairs with `dist(x₁, E) >= δ̂ r`.
    pub premise_holds: usize,
    pub min_delta_one: f64,
}

/// For each point `z ∈ E` and radius `r`: `x₁` maximizes `u` on the shell
/// `r - h < |x - z| <= r`, `δ₁ = min(dist(x₁,E)/r, 1)`, and the ball of
/// radius `δ₁r/2` centred on `[z, x₁]` at distance `δ₁r/2` from `x₁` is
/// scanned for containment in `B_r(z)` and for missing `E`.
pub fn ball_construction_check(
    field: &SolutionField,
    slice: &FreeBoundarySlice,
    centres: &[usize],
    radii: &[f64],
    delta_hat: f64,
) -> BallCheck {
    let grid = field.grid();
    let h = grid.h();
    let u = field.slice(slice.level);
    let ny = if grid.dim() == 2 { grid.n() } else { 1 };
    let mut mask = vec![false; grid.nodes_per_level()];
    for &s in &slice.fb_points {
        mask[s] = true;
    }
    let d2 = edt(&mask, grid.n(), ny);
    let in_e = |p: [f64; 2]| -> bool {
        match grid.spatial_at(p) {
            Some(s) => mask[s],
            None => false,
        }
    };
    let mut check = BallCheck {
        pairs: 0,
        passed: 0,
        premise_holds: 0,
        min_delta_one: f64::INFINITY,
    };
    for &z in centres {
        let pz = grid.position(z);
        for &r in radii {
            let rho = r / h;
            let mut best: Option<(usize, f64)> = None;
            for o in grid.ball_offsets(rho, true) {
                let off2 = (o[0] * o[0] + o[1] * o[1]) as f64;
                if off2 <= (rho - 1.0).powi(2) + 1e-9 {
                    continue;
                }
                if let Some(s) = grid.offset_spatial(z, o) {
                    if best.is_none_or(|(_, v)| u[s] > v) {
                        best = Some((s, u[s]));
                    }
                }
            }
            let Some((x1, _)) = best else { continue };
            check.pairs += 1;
            let delta_one = (d2[x1].sqrt() * h / r).min(1.0);
            check.min_delta_one = check.min_delta_one.min(delta_one);
            if delta_one >= delta_hat {
                check.premise_holds += 1;
            }
            let p1 = grid.position(x1);
            let dist = ((p1[0] - pz[0]).powi(2) + (p1[1] - pz[1]).powi(2)).sqrt();
            let rad = 0.5 * delta_one * r;
            let y = if dist > 0.0 {
                let w = (dist - rad) / dist;
                [pz[0] + w * (p1[0] - pz[0]), pz[1] + w * (p1[1] - pz[1])]
            } else {
                pz
            };
            // scan lattice points of B_rad(y)
            let m = (rad / h).ceil() as isize + 1;
            let base = [(y[0] / h).round() as isize, (y[1] / h).round() as isize];
            let mut ok = rad > 0.0;
            let jr = if grid.dim() == 2 { m } else { 0 };
            for j in -jr..=jr {
                for i in -m..=m {
                    let q = [(base[0] + i) as f64 * h, (base[1] + j) as f64 * h];
                    let dq = ((q[0] - y[0]).powi(2) + (q[1] - y[1]).powi(2)).sqrt();
                    if dq >= rad * (1.0 - 1e-12) {
                        continue;
                    }
                    let dz = ((q[0] - pz[0]).powi(2) + (q[1] - pz[1]).powi(2)).sqrt();
                    if dz >= r * (1.0 + 1e-12) || in_e(q) {
                        ok = false;
                    }
                }
            }
            if ok {
                check.passed += 1;
            }
        }
    }
    check
}

/// `½ √(μ₀/(κ Ĉ₀))`, clamped to `(0, 1/2]`.
pub fn predicted_porosity(mu0: f64, kappa: f64, c0_hat: f64) -> Result<f64> {
    if !(c0_hat > 0.0) {
        return Err(Error::InvalidArgument("growth constant must be positive".into()));
    }
    Ok((0.5 * (mu0 / (kappa * c0_hat)).sqrt()).clamp(f64::MIN_POSITIVE, 0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    pub c0: f64,
    pub c1: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    /// Empirical `Υ̂` of the sweep.
    pub upsilon_hat: f64,
    pub theta: f64,
    /// Times of the audited slices.
    pub t0: Vec<f64>,
    /// Distance of the audited region from `∂_pΩ_T`.
    pub margin: f64,
    /// Largest radius used by the non-degeneracy and doubling checks.
    pub r_max: f64,
    /// Largest porosity radius `R`.
    pub porosity_r: f64,
    /// Every `growth_level_stride`-th level is scanned by the growth audit.
    pub growth_level_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAudit {
    pub t0: f64,
    pub level: usize,
    pub fb_points: Vec<usize>,
    pub fb_positions: Vec<[f64; 2]>,
    pub nondegeneracy: NondegeneracyReport,
    pub dyadic: Vec<DyadicClasses>,
    pub porosity: Option<PorosityReport>,
    pub ball_check: Option<BallCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryReport {
    pub theta: f64,
    pub mu0: f64,
    pub kappa: f64,
    pub big_m: f64,
    pub slices: Vec<SliceAudit>,
    pub growth: GrowthReport,
    pub c1_hat: f64,
    pub predicted_porosity: f64,
    pub min_delta_hat: Option<f64>,
    pub nondegeneracy_status: AuditStatus,
    pub porosity_failures: usize,
    /// Dimension bound implied by porosity, as text (not estimated).
    pub hausdorff_bound: String,
}

/// Free-boundary points of a level restricted to the audit margin.
fn interior_fb(grid: &SpaceTimeGrid, slice: &FreeBoundarySlice, margin: f64) -> Vec<usize> {
    slice
        .fb_points
        .iter()
        .copied()
        .filter(|&s| grid.lateral_distance(s) >= margin * (1.0 - 1e-9))
        .collect()
}

/// Runs every free-boundary audit on the given field.
pub fn audit_free_boundary(field: &SolutionField, params: &AuditParams) -> Result<FreeBoundaryReport> {
    let grid = field.grid();
    let dim = grid.dim();
    let mu0 = mu0(params.c0, dim, params.big_lambda)?;
    let kappa = 1.0f64.max(params.c1).max(params.upsilon_hat);
    let big_m = doubling_constant(mu0);
    let radii = dyadic_radii(grid.h(), params.r_max);

    let mut slices = Vec::new();
    let mut doubling_points = Vec::new();
    let mut c1_hat = 0.0f64;
    for &t0 in &params.t0 {
        let full = extract_free_boundary(field, t0, params.theta)?;
        let fb = interior_fb(grid, &full, params.margin);
        let slice = FreeBoundarySlice { fb_points: fb.clone(), ..full.clone() };
        let nondegeneracy = nondegeneracy_at(field, slice.level, &fb, &radii);
        let mut dyadic = Vec::new();
        for &s in &fb {
            let node = Node { idx: grid.spatial_idx(s), level: slice.level };
            doubling_points.push(node);
            if let Ok(d) = dyadic_classes(field, node, kappa, big_m) {
                c1_hat = c1_hat.max(d.c1_hat);
                dyadic.push(d);
            }
        }
        slices.push(SliceAudit {
            t0: slice.t0,
            level: slice.level,
            fb_positions: fb.iter().map(|&s| grid.position(s)).collect(),
            fb_points: fb,
            nondegeneracy,
            dyadic,
            porosity: None,
            ball_check: None,
        });
    }

    let lo_level = ((params.margin * params.margin) / grid.dt()).ceil() as usize;
    let levels: Vec<usize> = (lo_level.max(1)..grid.n_levels())
        .step_by(params.growth_level_stride.max(1))
        .collect();
    let spatial: Vec<usize> = (0..grid.nodes_per_level())
        .filter(|&s| grid.lateral_distance(s) >= params.margin * (1.0 - 1e-9))
        .collect();
    let growth = growth_audit(field, params.theta, &levels, &spatial, &doubling_points, &radii)?;
    let predicted = predicted_porosity(mu0, kappa, growth.c0_hat)?;

    let mut min_delta: Option<f64> = None;
    let mut failures = 0;
    for audit in &mut slices {
        if audit.fb_points.is_empty() {
            continue;
        }
        // E is the whole slice boundary; audited centres are the interior ones
        let full = extract_at_level(field, audit.level, params.theta);
        let report = porosity_with_centres(grid, &full.fb_points, &audit.fb_points, params.porosity_r)?;
        failures += report.failures;
        min_delta = Some(min_delta.map_or(report.delta_hat, |m: f64| m.min(report.delta_hat)));
        let ball_radii: Vec<f64> = report.per_radius.iter().map(|p| p.0).collect();
        audit.ball_check = Some(ball_construction_check(field, &full, &audit.fb_points, &ball_radii, report.delta_hat));
        audit.porosity = Some(report);
    }
    let statuses: Vec<AuditStatus> = slices.iter().map(|s| s.nondegeneracy.status).collect();
    let nondegeneracy_status = if statuses.contains(&AuditStatus::Fail) {
        AuditStatus::Fail
    } else if statuses.contains(&AuditStatus::Pass) {
        AuditStatus::Pass
    } else {
        AuditStatus::Vacuous
    };
    Ok(FreeBoundaryReport {
        theta: params.theta,
        mu0,
        kappa,
        big_m,
        slices,
        growth,
        c1_hat,
        predicted_porosity: predicted,
        min_delta_hat: min_delta,
        nondegeneracy_status,
        porosity_failures: failures,
        hausdorff_bound: format!("dim_H(slice) <= {dim} - c * delta^{dim}, delta/2 = {predicted:.4}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exact(dim: usize, n: usize, steps: usize) -> SpaceTimeGrid {
        let h = 1.0 / (n - 1) as f64;
        SpaceTimeGrid::new(dim, n, steps as f64 * h * h, steps).unwrap()
    }

    fn brute_edt(mask: &[bool], nx: usize, ny: usize) -> Vec<f64> {
        (0..nx * ny)
            .map(|p| {
                let (pi, pj) = ((p % nx) as f64, (p / nx) as f64);
                (0..nx * ny)
                    .filter(|&q| mask[q])
                    .map(|q| ((q % nx) as f64 - pi).powi(2) + ((q / nx) as f64 - pj).powi(2))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn edt_matches_brute_force(nx in 1usize..12, ny in 1usize..12, bits in proptest::collection::vec(any::<bool>(), 144)) {
            let mask: Vec<bool> = bits[..nx * ny].iter().map(|b| *b && nx > 0).collect();
            prop_assert_eq!(edt(&mask, nx, ny), brute_edt(&mask, nx, ny));
        }

        #[test]
        fn porosity_is_antitone(bits in proptest::collection::vec(0u8..8, 33), extra in 0usize..33) {
            let g = exact(1, 33, 4);
            let e: Vec<usize> = (0..33).filter(|&i| bits[i] == 0).collect();
            prop_assume!(!e.is_empty());
            let mut bigger = e.clone();
            if !bigger.contains(&extra) {
                bigger.push(extra);
                bigger.sort();
            }
            let a = porosity_of_set(&g, &e, 0.25).unwrap().delta_hat;
            let b = porosity_of_set(&g, &bigger, 0.25).unwrap().delta_hat;
            prop_assert!(b <= a + 1e-15);
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(theta(1e-10, 0.01), 1e-3);
        assert_eq!(theta(1e-3, 0.01), 1e-2);
        assert_eq!(mu0(1.0, 1, 2.0).unwrap(), 0.125);
        assert_eq!(mu0(1.0, 2, 1.0).unwrap(), 0.125);
        assert_eq!(mu0(2.0, 1, 0.5).unwrap(), 1.0);
        assert!(mu0(1.0, 2, 1e6).unwrap() < mu0(1.0, 2, 1e3).unwrap());
        assert!(mu0(0.0, 1, 1.0).is_err());
        assert!(mu0(1.0, 0, 1.0).is_err());
        assert_eq!(doubling_constant(0.125), 32.0);
        assert_eq!(doubling_constant(2.0), 4.0);
    }

    #[test]
    fn ramp_front_is_a_straddling_pair() {
        let g = exact(1, 17, 16);
        let f = SolutionField::from_fn(g.clone(), |p, _| (p[0] - 0.5).max(0.0));
        let slice = extract_free_boundary(&f, g.t_final(), 1e-3).unwrap();
        assert_eq!(slice.fb_points, vec![8, 9]);
        assert!(matches!(extract_free_boundary(&f, 0.3 * g.dt(), 1e-3), Err(Error::OffGrid(_))));
    }

    #[test]
    fn positive_slice_has_no_front() {
        let g = exact(2, 9, 4);
        let f = SolutionField::from_fn(g.clone(), |_, _| 1.0);
        let slice = extract_at_level(&f, 1, 1e-3);
        assert!(slice.fb_points.is_empty());
        assert!(slice.positive.iter().all(|&p| p));
        // away from the data the distance is the parabolic distance to ∂_pΩ_T
        let node = Node::new_2d(4, 4, 4);
        let d = cylinder_distance(&f, 1e-3, node);
        assert!((d - g.time(4).sqrt().min(0.5)).abs() < 1e-12);
    }

    #[test]
    fn distance_vanishes_off_the_positivity_set() {
        let g = exact(1, 17, 16);
        let f = SolutionField::from_fn(g.clone(), |p, _| (p[0] - 0.5).max(0.0));
        let mut dist = CylinderDistance::new(&f, 1e-9);
        for id in 0..g.len() {
            let node = g.node(id);
            if node.level > 0 && !g.is_lateral(g.spatial_id(node.idx)) {
                assert_eq!(dist.distance(node) == 0.0, f.value(node) <= 1e-9, "{node:?}");
            }
        }
    }

    #[test]
    fn barriers_satisfy_their_inequalities() {
        use crate::operators::{discrete_operator_apply, OperatorSpec};
        let (c0, lam, big) = (1.0, 0.5, 2.0);
        for dim in [1, 2] {
            let n = if dim == 1 { 33 } else { 17 };
            let g = exact(dim, n, 8);
            let nn = dim as f64;
            let forms = [
                OperatorSpec::pucci_minus(lam, big),
                OperatorSpec::pucci_plus(lam, big),
                OperatorSpec::laplacian(dim),
            ];
            for spec in &forms {
                let top = if spec.big_lambda > 0.0 { spec.big_lambda } else { 1.0 };
                let psi = SolutionField::from_fn(g.clone(), |p, t| {
                    c0 / (4.0 * nn * top) * ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)) - c0 / 2.0 * t
                });
                let a1 = 0.7;
                let omega = SolutionField::from_fn(g.clone(), |p, t| {
                    a1 * ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)) + 2.0 * top * nn * a1 * t
                });
                let tol = 1e-9;
                for id in 0..g.len() {
                    let node = g.node(id);
                    if let Ok(v) = discrete_operator_apply(spec, &psi, node) {
                        assert!(v <= c0 + tol, "psi {v}");
                    }
                    if let Ok(v) = discrete_operator_apply(spec, &omega, node) {
                        assert!(v <= tol, "omega {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn two_dimensional_disc_front() {
        let g = exact(2, 33, 4);
        let f = SolutionField::from_fn(g.clone(), |p, _| ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2) - 0.04).max(0.0));
        let slice = extract_at_level(&f, 2, 1e-9);
        assert!(!slice.fb_points.is_empty());
        for &s in &slice.fb_points {
            let p = g.position(s);
            let r = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt();
            assert!((r - 0.2).abs() <= 2.0 * g.h(), "{r}");
        }
    }

    /// Largest `r` among candidate radii with no non-positive node in the
    /// open cylinder, `r <= dist(x, ∂Ω)` and `r² <= t`.
    fn brute_distance(f: &SolutionField, theta: f64, node: Node) -> f64 {
        let g = f.grid();
        let x = g.position(g.spatial_id(node.idx));
        let t = g.time(node.level);
        if f.value(node) <= theta {
            return 0.0;
        }
        let s = g.spatial_id(node.idx);
        let mut candidates = vec![g.lateral_distance(s), t.sqrt()];
        let mut bad = Vec::new();
        for id in 0..g.len() {
            let m = g.node(id);
            let p = g.position(g.spatial_id(m.idx));
            let dx = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
            let dtt = (g.time(m.level) - t).abs();
            candidates.push(dx);
            candidates.push(dtt.sqrt());
            if f.value(m) <= theta {
                bad.push((dx, dtt));
            }
        }
        candidates
            .into_iter()
            .filter(|&r| {
                r <= g.lateral_distance(s) + 1e-12
                    && r * r <= t + 1e-12
                    && bad.iter().all(|&(dx, dtt)| !(dx < r - 1e-12 && dtt < r * r - 1e-12))
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn cylinder_distance_matches_brute_force() {
        let g = exact(2, 13, 40);
        // cavity moving in time plus a static notch
        let f = SolutionField::from_fn(g.clone(), |p, t| {
            let c = 0.3 + 2.0 * t;
            let cavity = (p[0] - c).powi(2) + (p[1] - 0.5).powi(2) < 0.02;
            let notch = (p[0] - 0.75).abs() < 0.05 && p[1] > 0.7;
            if cavity || notch { 0.0 } else { 1.0 }
        });
        let mut dist = CylinderDistance::new(&f, 0.5);
        for id in (0..g.len()).step_by(7) {
            let node = g.node(id);
            let a = dist.distance(node);
            let b = brute_distance(&f, 0.5, node);
            assert!((a - b).abs() < 1e-12, "{node:?}: {a} vs {b}");
        }
    }

    #[test]
    fn barrier_ratios() {
        // ψ = c0/(4nΛ)|x - z|² - c0/2 (t - s) with c0 = 1, n = 1, Λ = 2
        let g = exact(1, 65, 1024);
        let (z, s) = (0.5, g.t_final());
        let f = SolutionField::from_fn(g.clone(), |p, t| (p[0] - z).powi(2) / 8.0 - 0.5 * (t - s));
        let m0 = mu0(1.0, 1, 2.0).unwrap();
        let zid = g.spatial_at([z, 0.0]).unwrap();
        let radii = dyadic_radii(g.h(), 0.25);
        let rep = nondegeneracy_at(&f, g.n_levels() - 1, &[zid], &radii);
        assert_eq!(rep.status, AuditStatus::Pass);
        for &(_, sup, inf) in &rep.points[0].ratios {
            assert!((inf - m0).abs() <= 0.03 * m0, "{inf}");
            assert!(sup >= m0);
            assert!((sup - (m0 + 0.5)).abs() < 1e-9);
        }
        let e = rep.points[0].exponent.unwrap();
        assert!((e - 2.0).abs() < 1e-6, "{e}");
    }

    #[test]
    fn zero_field_is_degenerate_or_vacuous() {
        let g = exact(1, 33, 256);
        let f = SolutionField::from_fn(g.clone(), |_, _| 0.0);
        let radii = dyadic_radii(g.h(), 0.25);
        let rep = nondegeneracy_at(&f, g.n_levels() - 1, &[16], &radii);
        assert_eq!(rep.status, AuditStatus::Fail);
        assert_eq!(rep.min_sup_ratio, 0.0);
        let slice = extract_at_level(&f, g.n_levels() - 1, 1e-6);
        assert!(slice.fb_points.is_empty());
        assert_eq!(nondegeneracy_audit(&f, &slice, &radii).status, AuditStatus::Vacuous);
    }

    #[test]
    fn dyadic_classes_of_paraboloid() {
        let g = exact(1, 65, 4096);
        let z = 0.5;
        let f = SolutionField::from_fn(g.clone(), |p, _| (p[0] - z).powi(2));
        let node = Node::new_1d(32, g.n_levels() - 1);
        let d = dyadic_classes(&f, node, 2.0, 4.0).unwrap();
        assert_eq!(d.j_start, 1);
        assert!(d.flagged);
        for &(_, r, s) in &d.s_values {
            assert!((s - r * r / 2.0).abs() < 1e-12);
        }
        let js: Vec<usize> = d.s_values[..d.s_values.len() - 1].iter().map(|x| x.0).collect();
        assert_eq!(d.h_set, js);
        assert!(d.first_in_h);
        assert!((d.c1_hat - 0.125).abs() < 1e-12);

        let zero = SolutionField::from_fn(g.clone(), |_, _| 0.0);
        let d0 = dyadic_classes(&zero, node, 1.0, 4.0).unwrap();
        assert!(d0.s_values.iter().all(|x| x.2 == 0.0));
        assert_eq!(d0.h_set, js);
    }

    fn static_front(power: i32) -> SolutionField {
        let g = exact(1, 65, 4096);
        SolutionField::from_fn(g, move |p, _| (p[0] - 0.3).max(0.0).powi(power))
    }

    #[test]
    fn growth_exponents_of_controls() {
        for (power, lo, hi) in [(2, 1.8, 2.2), (1, 0.9, 1.3)] {
            let f = static_front(power);
            let g = f.grid();
            let levels: Vec<usize> = (64..g.n_levels()).step_by(256).collect();
            let spatial: Vec<usize> = (0..g.nodes_per_level()).filter(|&s| g.lateral_distance(s) >= 0.1).collect();
            let rep = growth_audit(&f, 1e-9, &levels, &spatial, &[], &[]).unwrap();
            assert!(rep.exponent > lo && rep.exponent < hi, "power {power}: {}", rep.exponent);
            assert_eq!(rep.subquadratic, power == 1);
        }
    }

    #[test]
    fn porosity_of_single_point_and_full_set() {
        let g = exact(1, 65, 4);
        let one = porosity_of_set(&g, &[32], 0.25).unwrap();
        assert!((one.delta_hat - 0.5).abs() < 1e-12);
        let all: Vec<usize> = (0..65).collect();
        let full = porosity_of_set(&g, &all, 0.25).unwrap();
        assert_eq!(full.delta_hat, 0.0);
        assert!(full.failures > 0);
        assert!(matches!(porosity_of_set(&g, &[], 0.25), Err(Error::NoFreeBoundary)));
        assert!(porosity_of_set(&g, &[3], 2.0 * g.h()).is_err());
    }

    fn brute_porosity(g: &SpaceTimeGrid, e: &[usize], r: f64) -> f64 {
        let h = g.h();
        let pad = (r / h).ceil() as isize + 1;
        e.iter()
            .map(|&x| {
                let px = g.position(x)[0];
                let mut best = 0.0f64;
                for i in -pad..g.n() as isize + pad {
                    let y = i as f64 * h;
                    if (y - px).abs() >= r {
                        continue;
                    }
                    let de = e.iter().map(|&q| (g.position(q)[0] - y).abs()).fold(f64::INFINITY, f64::min);
                    best = best.max(de.min(r - (y - px).abs()));
                }
                best / r
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cantor_iterate_is_porous() {
        // 3^5 cells; E = nodes of the fourth middle-thirds iterate
        let n = 244;
        let g = exact(1, n, 4);
        let in_cantor = |i: usize| {
            let mut k = i.min(242);
            (0..5).all(|_| {
                let digit = k % 3;
                k /= 3;
                digit != 1
            })
        };
        let e: Vec<usize> = (0..n).filter(|&i| in_cantor(i)).collect();
        let rep = porosity_of_set(&g, &e, 0.25).unwrap();
        let mut brute = f64::INFINITY;
        for &(r, q) in &rep.per_radius {
            let b = brute_porosity(&g, &e, r);
            assert!((q - b).abs() < 1e-12, "r = {r}: {q} vs {b}");
            brute = brute.min(b);
        }
        assert!((rep.delta_hat - brute).abs() < 1e-12);
        assert!(rep.delta_hat >= 1.0 / 6.0, "{}", rep.delta_hat);
    }

    #[test]
    fn ball_construction_on_ramp() {
        let g = exact(2, 33, 64);
        let f = SolutionField::from_fn(g.clone(), |p, _| (p[0] - 0.4).max(0.0));
        let slice = extract_at_level(&f, 32, 1e-9);
        let radii = [4.0 * g.h(), 8.0 * g.h()];
        let check = ball_construction_check(&f, &slice, &slice.fb_points, &radii, 0.25);
        assert!(check.pairs > 0);
        assert_eq!(check.passed, check.pairs);
    }

    #[test]
    fn predicted_porosity_clamps() {
        assert!((predicted_porosity(0.125, 1.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(predicted_porosity(1.0, 1.0, 1e-6).unwrap(), 0.5);
        assert!(predicted_porosity(1.0, 1.0, 0.0).is_err());
    }
}
