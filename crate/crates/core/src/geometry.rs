//! Uniform space-time grids on `[0, L]^n x [0, T]`, node sets, and discrete
//! parabolic cylinders.
//!
//! Nodes are addressed by a spatial multi-index and a time level. Linear ids
//! are level-major: `id = level * nodes_per_level + spatial`, with the spatial
//! id `i + n * j` in 2D.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when comparing radii and times against grid lattices.
const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub idx: [usize; 2],
    pub level: usize,
}

impl Node {
    pub fn new_1d(i: usize, level: usize) -> Self {
        Self { idx: [i, 0], level }
    }

    pub fn new_2d(i: usize, j: usize, level: usize) -> Self {
        Self { idx: [i, j], level }
    }
}

/// JSON description of a grid: `{"dim": 1, "nx": 129, "nt": 4096, "T": 0.25}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub nx: usize,
    /// Number of time steps; derived from the parabolic scaling when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parabolic_scaling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    dim: usize,
    n: usize,
    extent: f64,
    h: f64,
    dt: f64,
    steps: usize,
    t_final: f64,
    parabolic_scaling: f64,
}

impl SpaceTimeGrid {
    /// Unit box, `steps` backward-Euler steps up to `t_final`, `dt <= h^2`.
    pub fn new(dim: usize, n: usize, t_final: f64, steps: usize) -> Result<Self> {
        Self::with_options(dim, n, 1.0, t_final, steps, 1.0)
    }

    /// Grid whose step count is chosen so that `dt` is the largest value not
    /// exceeding `h^2 * scaling`.
    pub fn parabolic(dim: usize, n: usize, t_final: f64, scaling: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes per axis, got {n}")));
        }
        let h = 1.0 / (n - 1) as f64;
        let steps = (t_final / (h * h * scaling) * (1.0 - LATTICE_TOL)).ceil().max(1.0) as usize;
        Self::with_options(dim, n, 1.0, t_final, steps, scaling)
    }

    pub fn with_options(
        dim: usize,
        n: usize,
        extent: f64,
        t_final: f64,
        steps: usize,
        parabolic_scaling: f64,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes per axis, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one time step".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidGrid(format!("T must be positive, got {t_final}")));
        }
        if !(parabolic_scaling > 0.0) {
            return Err(Error::InvalidGrid("parabolic scaling must be positive".into()));
        }
        let h = extent / (n - 1) as f64;
        let dt = t_final / steps as f64;
        if dt > h * h * parabolic_scaling * (1.0 + LATTICE_TOL) {
            return Err(Error::InvalidGrid(format!(
                "dt = {dt:e} exceeds h^2 * scaling = {:e}",
                h * h * parabolic_scaling
            )));
        }
        Ok(Self {
            dim,
            n,
            extent,
            h,
            dt,
            steps,
            t_final,
            parabolic_scaling,
        })
    }

    pub fn from_config(cfg: &GridConfig) -> Result<Self> {
        let scaling = cfg.parabolic_scaling.unwrap_or(1.0);
        let extent = cfg.extent.unwrap_or(1.0);
        match cfg.nt {
            Some(steps) => {
                Self::with_options(cfg.dim, cfg.nx, extent, cfg.t_final, steps, scaling)
            }
            None => {
                if cfg.nx < 2 {
                    return Err(Error::InvalidGrid("nx must be at least 2".into()));
                }
                let h = extent / (cfg.nx - 1) as f64;
                let steps = (cfg.t_final / (h * h * scaling) * (1.0 - LATTICE_TOL))
                    .ceil()
                    .max(1.0) as usize;
                Self::with_options(cfg.dim, cfg.nx, extent, cfg.t_final, steps, scaling)
            }
        }
    }

    pub fn to_config(&self) -> GridConfig {
        GridConfig {
            dim: self.dim,
            nx: self.n,
            nt: Some(self.steps),
            t_final: self.t_final,
            extent: Some(self.extent),
            parabolic_scaling: Some(self.parabolic_scaling),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Nodes per axis, boundary included.
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn extent(&self) -> f64 {
        self.extent
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn parabolic_scaling(&self) -> f64 {
        self.parabolic_scaling
    }
    pub fn n_levels(&self) -> usize {
        self.steps + 1
    }
    pub fn nodes_per_level(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
    pub fn len(&self) -> usize {
        self.nodes_per_level() * self.n_levels()
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn spatial_id(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] + self.n * idx[1]
        }
    }

    pub fn spatial_idx(&self, s: usize) -> [usize; 2] {
        if self.dim == 1 {
            [s, 0]
        } else {
            [s % self.n, s / self.n]
        }
    }

    pub fn position(&self, s: usize) -> [f64; 2] {
        let idx = self.spatial_idx(s);
        [self.coord(idx[0]), if self.dim == 2 { self.coord(idx[1]) } else { 0.0 }]
    }

    pub fn node_id(&self, node: Node) -> usize {
        node.level * self.nodes_per_level() + self.spatial_id(node.idx)
    }

    pub fn node(&self, id: usize) -> Node {
        let per = self.nodes_per_level();
        Node {
            idx: self.spatial_idx(id % per),
            level: id / per,
        }
    }

    pub fn contains(&self, node: Node) -> bool {
        node.level < self.n_levels()
            && node.idx[0] < self.n
            && (if self.dim == 2 { node.idx[1] < self.n } else { node.idx[1] == 0 })
    }

    /// True for spatial nodes on `∂Ω`.
    pub fn is_lateral(&self, s: usize) -> bool {
        let idx = self.spatial_idx(s);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.n - 1)
    }

    /// Euclidean distance from spatial node `s` to `∂Ω`.
    pub fn lateral_distance(&self, s: usize) -> f64 {
        let idx = self.spatial_idx(s);
        (0..self.dim)
            .map(|a| idx[a].min(self.n - 1 - idx[a]) as f64 * self.h)
            .fold(f64::INFINITY, f64::min)
    }

    /// Level index of time `t`, if `t` lies on the time lattice.
    pub fn level_of(&self, t: f64) -> Option<usize> {
        let k = t / self.dt;
        let r = k.round();
        if r < 0.0 || r as usize >= self.n_levels() {
            return None;
        }
        if (k - r).abs() <= 1e-6 {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Spatial node at position `p`, if `p` lies on the lattice.
    pub fn spatial_at(&self, p: [f64; 2]) -> Option<usize> {
        let mut idx = [0usize; 2];
        for a in 0..self.dim {
            let k = p[a] / self.h;
            let r = k.round();
            if r < 0.0 || r as usize >= self.n || (k - r).abs() > 1e-6 {
                return None;
            }
            idx[a] = r as usize;
        }
        Some(self.spatial_id(idx))
    }

    /// Iterator over spatial ids of nodes not on `∂Ω`.
    pub fn interior_spatial(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes_per_level()).filter(move |&s| !self.is_lateral(s))
    }

    /// Spatial offsets (index units) inside a ball of radius `rho` grid steps.
    /// `closed` selects `|o| <= rho` instead of `|o| < rho`.
    pub fn ball_offsets(&self, rho: f64, closed: bool) -> Vec<[isize; 2]> {
        let r2 = rho * rho;
        let slack = LATTICE_TOL * r2.max(1.0);
        let m = rho.floor() as isize + 1;
        let mut out = Vec::new();
        let jr = if self.dim == 2 { m } else { 0 };
        for j in -jr..=jr {
            for i in -m..=m {
                let d2 = (i * i + j * j) as f64;
                let inside = if closed { d2 <= r2 + slack } else { d2 < r2 - slack };
                if inside {
                    out.push([i, j]);
                }
            }
        }
        out
    }

    pub fn offset_spatial(&self, s: usize, o: [isize; 2]) -> Option<usize> {
        let idx = self.spatial_idx(s);
        let mut out = [0usize; 2];
        for a in 0..self.dim {
            let v = idx[a] as isize + o[a];
            if v < 0 || v >= self.n as isize {
                return None;
            }
            out[a] = v as usize;
        }
        if self.dim == 1 && o[1] != 0 {
            return None;
        }
        Some(self.spatial_id(out))
    }
}

/// Set of grid nodes stored as sorted unique linear ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridIndexSet {
    ids: Vec<usize>,
}

impl GridIndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            ids: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect(),
        }
    }

    pub fn to_mask(&self, len: usize) -> Vec<bool> {
        let mut mask = vec![false; len];
        for &id in &self.ids {
            if id < len {
                mask[id] = true;
            }
        }
        mask
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.ids.iter().peekable(), other.ids.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        out.push(x);
                        a.next();
                    } else if y < x {
                        out.push(y);
                        b.next();
                    } else {
                        out.push(x);
                        a.next();
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    out.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    out.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Self { ids: out }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            ids: self
                .ids
                .iter()
                .copied()
                .filter(|id| other.contains(*id))
                .collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self {
            ids: self
                .ids
                .iter()
                .copied()
                .filter(|id| !other.contains(*id))
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.ids.iter().all(|id| other.contains(*id))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().copied()
    }
}

/// `∂_pΩ_T`: lateral nodes at every level plus the whole `t = 0` slice.
pub fn parabolic_boundary(grid: &SpaceTimeGrid) -> GridIndexSet {
    let per = grid.nodes_per_level();
    let mut ids: Vec<usize> = (0..per).collect();
    for level in 1..grid.n_levels() {
        ids.extend(
            (0..per)
                .filter(|&s| grid.is_lateral(s))
                .map(|s| level * per + s),
        );
    }
    GridIndexSet { ids }
}

/// Complement of [`parabolic_boundary`].
pub fn interior(grid: &SpaceTimeGrid) -> GridIndexSet {
    let per = grid.nodes_per_level();
    let mut ids = Vec::new();
    for level in 1..grid.n_levels() {
        ids.extend(grid.interior_spatial().map(|s| level * per + s));
    }
    GridIndexSet { ids }
}

/// Discrete parabolic cylinder around a node, kept in product form
/// (spatial ball x level range) so that sup/inf scans stay cheap.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub center: Node,
    pub tau: f64,
    /// Spatial ids with `|x - x0| < tau`.
    pub open_ball: Vec<usize>,
    /// Spatial ids with `|x - x0| <= tau`.
    pub closed_ball: Vec<usize>,
    /// Closed-ball nodes with an axis neighbour outside the closed ball or the grid.
    pub shell: Vec<usize>,
    /// Levels of the open cylinder (inclusive range).
    pub levels: (usize, usize),
    /// Levels of the closure (inclusive range); the first one is the bottom slice.
    pub closed_levels: (usize, usize),
    /// `true` when the closure had to be cut at the grid (space or `t = 0`).
    pub clipped: bool,
}

impl Cylinder {
    fn product(grid: &SpaceTimeGrid, balls: &[usize], levels: (usize, usize)) -> GridIndexSet {
        let per = grid.nodes_per_level();
        let mut ids = Vec::with_capacity(balls.len() * (levels.1 + 1 - levels.0));
        for k in levels.0..=levels.1 {
            ids.extend(balls.iter().map(|&s| k * per + s));
        }
        GridIndexSet::from_ids(ids)
    }

    /// Nodes of the (open) cylinder.
    pub fn members(&self, grid: &SpaceTimeGrid) -> GridIndexSet {
        Self::product(grid, &self.open_ball, self.levels)
    }

    pub fn closure(&self, grid: &SpaceTimeGrid) -> GridIndexSet {
        Self::product(grid, &self.closed_ball, self.closed_levels)
    }

    /// Lateral shell over all closure levels plus the bottom slice.
    pub fn parabolic_boundary(&self, grid: &SpaceTimeGrid) -> GridIndexSet {
        let lateral = Self::product(grid, &self.shell, self.closed_levels);
        let bottom = Self::product(
            grid,
            &self.closed_ball,
            (self.closed_levels.0, self.closed_levels.0),
        );
        lateral.union(&bottom)
    }

    pub fn parabolic_interior(&self, grid: &SpaceTimeGrid) -> GridIndexSet {
        if self.closed_levels.1 == self.closed_levels.0 {
            return GridIndexSet::new();
        }
        let inner: Vec<usize> = self
            .closed_ball
            .iter()
            .copied()
            .filter(|s| !self.shell.contains(s))
            .collect();
        Self::product(grid, &inner, (self.closed_levels.0 + 1, self.closed_levels.1))
    }

    /// Max of `f(level, spatial)` over the parabolic boundary.
    pub fn sup_on_boundary<F: Fn(usize, usize) -> f64>(&self, f: F) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for k in self.closed_levels.0..=self.closed_levels.1 {
            let ball: &[usize] = if k == self.closed_levels.0 {
                &self.closed_ball
            } else {
                &self.shell
            };
            for &s in ball {
                best = best.max(f(k, s));
            }
        }
        best
    }

    /// Min of `f(level, spatial)` over the parabolic boundary.
    pub fn inf_on_boundary<F: Fn(usize, usize) -> f64>(&self, f: F) -> f64 {
        -self.sup_on_boundary(|k, s| -f(k, s))
    }

    /// Max of `f` over the closure.
    pub fn sup_on_closure<F: Fn(usize, usize) -> f64>(&self, f: F) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for k in self.closed_levels.0..=self.closed_levels.1 {
            for &s in &self.closed_ball {
                best = best.max(f(k, s));
            }
        }
        best
    }
}

fn level_span(tau: f64, dt: f64) -> (usize, usize) {
    // (open, closed) number of whole steps strictly / weakly within tau^2
    let m = tau * tau / dt;
    let nearest = m.round();
    if (m - nearest).abs() <= LATTICE_TOL * m.max(1.0) {
        let k = nearest as usize;
        (k.saturating_sub(1), k)
    } else {
        (m.floor() as usize, m.floor() as usize)
    }
}

fn build_cylinder(center: Node, tau: f64, grid: &SpaceTimeGrid, one_sided: bool) -> Result<Cylinder> {
    if !(tau >= grid.h() * (1.0 - LATTICE_TOL)) {
        return Err(Error::UnresolvableRadius { tau, h: grid.h() });
    }
    if !grid.contains(center) {
        return Err(Error::InvalidArgument(format!("{center:?} is not a grid node")));
    }
    let rho = tau / grid.h();
    let s0 = grid.spatial_id(center.idx);
    let mut clipped = false;
    let collect = |closed: bool, clipped: &mut bool| -> Vec<usize> {
        let mut v = Vec::new();
        for o in grid.ball_offsets(rho, closed) {
            match grid.offset_spatial(s0, o) {
                Some(s) => v.push(s),
                None => *clipped = true,
            }
        }
        v.sort_unstable();
        v
    };
    let open_ball = collect(false, &mut clipped);
    let closed_ball = collect(true, &mut clipped);

    let closed_set: std::collections::HashSet<usize> = closed_ball.iter().copied().collect();
    let shell: Vec<usize> = closed_ball
        .iter()
        .copied()
        .filter(|&s| {
            (0..grid.dim()).any(|a| {
                [-1isize, 1].iter().any(|&d| {
                    let mut o = [0isize; 2];
                    o[a] = d;
                    match grid.offset_spatial(s, o) {
                        Some(nb) => !closed_set.contains(&nb),
                        None => true,
                    }
                })
            })
        })
        .collect();

    let (open_span, closed_span) = level_span(tau, grid.dt());
    let top_limit = grid.n_levels() - 1;
    let lo_open = center.level.saturating_sub(open_span);
    let lo_closed = if center.level >= closed_span {
        center.level - closed_span
    } else {
        clipped = true;
        0
    };
    let (hi_open, hi_closed) = if one_sided {
        (center.level, center.level)
    } else {
        (
            (center.level + open_span).min(top_limit),
            (center.level + closed_span).min(top_limit),
        )
    };
    Ok(Cylinder {
        center,
        tau,
        open_ball,
        closed_ball,
        shell,
        levels: (lo_open, hi_open),
        closed_levels: (lo_closed, hi_closed),
        clipped,
    })
}

/// `Q⁻_τ(x0, t0) = B_τ(x0) x (t0 - τ², t0]`, clipped to the grid.
pub fn lower_cylinder(center: Node, tau: f64, grid: &SpaceTimeGrid) -> Result<Cylinder> {
    build_cylinder(center, tau, grid, true)
}

/// `Q_τ(x0, t0) = B_τ(x0) x (t0 - τ², t0 + τ²)`, clipped to the grid.
pub fn full_cylinder(center: Node, tau: f64, grid: &SpaceTimeGrid) -> Result<Cylinder> {
    build_cylinder(center, tau, grid, false)
}

/// Union of `Q_τ` (or `Q⁻_τ` when `one_sided`) over the nodes of `k`.
pub fn parabolic_neighborhood(
    k: &GridIndexSet,
    tau: f64,
    grid: &SpaceTimeGrid,
    one_sided: bool,
) -> Result<GridIndexSet> {
    if k.is_empty() {
        return Err(Error::EmptySet("parabolic neighbourhood of an empty set".into()));
    }
    if k.ids().last().is_some_and(|&id| id >= grid.len()) {
        return Err(Error::InvalidArgument("set contains ids outside the grid".into()));
    }
    if !(tau >= grid.h() * (1.0 - LATTICE_TOL)) {
        return Err(Error::UnresolvableRadius { tau, h: grid.h() });
    }
    let offsets = grid.ball_offsets(tau / grid.h(), false);
    let (open_span, _) = level_span(tau, grid.dt());
    let per = grid.nodes_per_level();
    let mut mask = vec![false; grid.len()];
    for id in k.iter() {
        let node = grid.node(id);
        let s0 = grid.spatial_id(node.idx);
        let lo = node.level.saturating_sub(open_span);
        let hi = if one_sided {
            node.level
        } else {
            (node.level + open_span).min(grid.n_levels() - 1)
        };
        for &o in &offsets {
            if let Some(s) = grid.offset_spatial(s0, o) {
                for level in lo..=hi {
                    mask[level * per + s] = true;
                }
            }
        }
    }
    Ok(GridIndexSet::from_mask(&mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Grid with `dt = h^2` exactly.
    fn exact(dim: usize, n: usize, steps: usize) -> SpaceTimeGrid {
        let h = 1.0 / (n - 1) as f64;
        SpaceTimeGrid::new(dim, n, steps as f64 * h * h, steps).unwrap()
    }

    fn dist2(grid: &SpaceTimeGrid, a: usize, b: usize) -> f64 {
        let (pa, pb) = (grid.position(a), grid.position(b));
        (pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpaceTimeGrid::new(3, 5, 1.0, 10).is_err());
        assert!(SpaceTimeGrid::new(1, 1, 1.0, 10).is_err());
        // dt = 0.1 > h^2 = 1/16
        assert!(SpaceTimeGrid::new(1, 5, 1.0, 10).is_err());
        assert!(SpaceTimeGrid::new(1, 5, 1.0, 16).is_ok());
        let g = SpaceTimeGrid::parabolic(1, 9, 0.5, 1.0).unwrap();
        assert!(g.dt() <= g.h() * g.h() * (1.0 + 1e-12));
    }

    #[test]
    fn parabolic_boundary_small_1d() {
        // 3 interior nodes, 2 levels
        let g = SpaceTimeGrid::new(1, 5, 0.0625, 1).unwrap();
        let pb = parabolic_boundary(&g);
        let expected: Vec<usize> = vec![0, 1, 2, 3, 4, 5, 9];
        assert_eq!(pb.ids(), expected.as_slice());
        // one step: every t = 0 node is on the boundary
        assert!((0..5).all(|s| pb.contains(s)));
    }

    #[test]
    fn parabolic_boundary_count_matches_enumeration() {
        for (nx, steps) in [(5usize, 16usize), (9, 64), (17, 300)] {
            let t_final = steps as f64 / ((nx - 1) * (nx - 1)) as f64;
            let g = SpaceTimeGrid::new(1, nx, t_final, steps).unwrap();
            let levels = g.n_levels();
            let brute = (0..g.len())
                .filter(|&id| {
                    let n = g.node(id);
                    n.level == 0 || n.idx[0] == 0 || n.idx[0] == nx - 1
                })
                .count();
            assert_eq!(parabolic_boundary(&g).len(), brute);
            assert_eq!(brute, nx + 2 * (levels - 1));
        }
    }

    #[test]
    fn boundary_and_interior_partition_the_grid() {
        for g in [
            SpaceTimeGrid::parabolic(1, 17, 0.1, 1.0).unwrap(),
            SpaceTimeGrid::parabolic(2, 9, 0.1, 1.0).unwrap(),
        ] {
            let pb = parabolic_boundary(&g);
            let int = interior(&g);
            assert!(pb.intersection(&int).is_empty());
            assert_eq!(pb.union(&int).len(), g.len());
        }
    }

    #[test]
    fn unresolvable_radius_is_an_error() {
        let g = SpaceTimeGrid::parabolic(1, 17, 0.2, 1.0).unwrap();
        let err = lower_cylinder(Node::new_1d(8, 10), 0.5 * g.h(), &g).unwrap_err();
        assert!(matches!(err, Error::UnresolvableRadius { .. }));
    }

    #[test]
    fn unit_radius_cylinder() {
        let g = exact(1, 17, 40);
        let c = lower_cylinder(Node::new_1d(8, 10), g.h(), &g).unwrap();
        // open: only the centre at the centre time
        assert_eq!(c.members(&g).ids(), &[g.node_id(Node::new_1d(8, 10))]);
        // closure: centre and its neighbours, levels t0 - h^2 ..= t0
        let closure = c.closure(&g);
        assert_eq!(closure.len(), 6);
        for k in [9, 10] {
            for i in [7, 8, 9] {
                assert!(closure.contains(g.node_id(Node::new_1d(i, k))));
            }
        }
    }

    #[test]
    fn cylinder_bottom_clips_at_initial_time() {
        let g = exact(1, 17, 40);
        let tau = 2.0 * g.h();
        // t0 = tau^2 exactly: closure bottom is t = 0
        let c = lower_cylinder(Node::new_1d(8, 4), tau, &g).unwrap();
        assert_eq!(c.closed_levels.0, 0);
        assert_eq!(c.levels.0, 1);
        let c = lower_cylinder(Node::new_1d(8, 2), tau, &g).unwrap();
        assert_eq!(c.closed_levels.0, 0);
        assert!(c.clipped);
    }

    #[test]
    fn cylinder_matches_brute_force_scan_2d() {
        let g = SpaceTimeGrid::parabolic(2, 33, 0.05, 1.0).unwrap();
        let tau = 4.0 * g.h();
        let center = Node::new_2d(10, 20, 30);
        let c = lower_cylinder(center, tau, &g).unwrap();
        let s0 = g.spatial_id(center.idx);
        let t0 = g.time(center.level);
        let brute: Vec<usize> = (0..g.len())
            .filter(|&id| {
                let n = g.node(id);
                let s = g.spatial_id(n.idx);
                let t = g.time(n.level);
                dist2(&g, s, s0) < tau * tau * (1.0 - 1e-9)
                    && t > t0 - tau * tau + 1e-12
                    && t <= t0 + 1e-12
            })
            .collect();
        assert_eq!(c.members(&g).ids(), brute.as_slice());
    }

    #[test]
    fn cylinder_boundary_and_interior_structure() {
        for (dim, n) in [(1usize, 65usize), (2, 33)] {
            let g = SpaceTimeGrid::parabolic(dim, n, 0.1, 1.0).unwrap();
            for tau_steps in [1.0, 2.0, 3.5, 4.0, 6.0] {
                let tau = tau_steps * g.h();
                let mid = n / 2;
                let center = if dim == 1 {
                    Node::new_1d(mid, g.n_levels() - 1)
                } else {
                    Node::new_2d(mid, mid, g.n_levels() - 1)
                };
                let c = lower_cylinder(center, tau, &g).unwrap();
                let closure = c.closure(&g);
                let pb = c.parabolic_boundary(&g);
                let int = c.parabolic_interior(&g);
                assert!(pb.is_subset(&closure));
                assert!(pb.intersection(&int).is_empty());
                assert_eq!(pb.union(&int), closure);
                // the parabolic interior sits inside the open cylinder
                assert!(int.is_subset(&c.members(&g)));
                assert_eq!(c.members(&g).difference(&pb), int);
            }
        }
    }

    #[test]
    fn neighborhood_of_single_node_is_one_cylinder() {
        let g = SpaceTimeGrid::parabolic(1, 33, 0.1, 1.0).unwrap();
        let node = Node::new_1d(16, 50);
        let k = GridIndexSet::from_ids(vec![g.node_id(node)]);
        let tau = 3.0 * g.h();
        let n = parabolic_neighborhood(&k, tau, &g, false).unwrap();
        assert_eq!(n, full_cylinder(node, tau, &g).unwrap().members(&g));
        let n = parabolic_neighborhood(&k, tau, &g, true).unwrap();
        assert_eq!(n, lower_cylinder(node, tau, &g).unwrap().members(&g));
        assert!(k.is_subset(&n));
    }

    #[test]
    fn large_neighborhood_covers_grid() {
        let g = SpaceTimeGrid::parabolic(1, 17, 0.05, 1.0).unwrap();
        let k = GridIndexSet::from_ids(vec![g.node_id(Node::new_1d(8, 10))]);
        let n = parabolic_neighborhood(&k, 2.0, &g, false).unwrap();
        assert_eq!(n.len(), g.len());
    }

    #[test]
    fn neighborhood_composition_inclusions() {
        let g = exact(2, 25, 80);
        let k = GridIndexSet::from_ids(vec![
            g.node_id(Node::new_2d(8, 8, 40)),
            g.node_id(Node::new_2d(15, 12, 60)),
        ]);
        let tau = 3.0 * g.h();
        let once = parabolic_neighborhood(&k, tau, &g, false).unwrap();
        let twice = parabolic_neighborhood(&once, tau, &g, false).unwrap();
        let double = parabolic_neighborhood(&k, 2.0 * tau, &g, false).unwrap();
        assert!(k.is_subset(&once));
        assert!(once.is_subset(&twice));
        assert!(twice.is_subset(&double));
    }

    #[test]
    fn set_algebra() {
        let a = GridIndexSet::from_ids(vec![5, 1, 3, 3]);
        let b = GridIndexSet::from_ids(vec![3, 4]);
        assert_eq!(a.ids(), &[1, 3, 5]);
        assert_eq!(a.union(&b).ids(), &[1, 3, 4, 5]);
        assert_eq!(a.intersection(&b).ids(), &[3]);
        assert_eq!(a.difference(&b).ids(), &[1, 5]);
        assert_eq!(GridIndexSet::from_mask(&a.to_mask(6)), a);
    }
}
