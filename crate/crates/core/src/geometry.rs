//! Planar domain, computational grid and film thickness profile.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldspec::{FieldSpec, NamedProfile};

/// Marks a node outside the domain in [`Grid2D::slot`].
pub const EXTERIOR: usize = usize::MAX;

/// Shape of the planar domain the mask was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Disk { radius: f64 },
    /// Arbitrary mask supplied by the caller; no distance function.
    Custom,
}

impl Domain {
    /// Distance from `x` to the domain boundary, if known.
    pub fn boundary_distance(&self, x: [f64; 2]) -> Option<f64> {
        match self {
            Domain::Disk { radius } => Some(radius - x[0].hypot(x[1])),
            Domain::Custom => None,
        }
    }

    /// Distance from `x` to the boundary along the unit direction `dir`,
    /// if known.
    pub fn crossing_distance(&self, x: [f64; 2], dir: [f64; 2]) -> Option<f64> {
        match self {
            Domain::Disk { radius } => {
                let b = x[0] * dir[0] + x[1] * dir[1];
                let c = x[0] * x[0] + x[1] * x[1] - radius * radius;
                let disc = b * b - c;
                (disc >= 0.0).then(|| -b + disc.sqrt())
            }
            Domain::Custom => None,
        }
    }
}

/// Uniform Cartesian lattice with an interior mask.
///
/// Node `(i, j)` sits at `origin + (i hx, j hy)` and has id `j * nx + i`.
/// Interior nodes are numbered contiguously ("slots") in id order; all
/// per-node unknowns of the solvers are stored by slot.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: [f64; 2],
    pub domain: Domain,
    mask: Vec<bool>,
    slot: Vec<usize>,
    interior: Vec<usize>,
    boundary_band: Vec<usize>,
    x_edges: Vec<(usize, usize)>,
    y_edges: Vec<(usize, usize)>,
}

impl Grid2D {
    pub fn from_mask(
        nx: usize,
        ny: usize,
        hx: f64,
        hy: f64,
        origin: [f64; 2],
        domain: Domain,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::invalid(format!("grid needs at least 3x3 nodes, got {nx}x{ny}")));
        }
        if !(hx > 0.0 && hy > 0.0) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        if mask.len() != nx * ny {
            return Err(Error::invalid("mask length does not match grid"));
        }
        let mut slot = vec![EXTERIOR; nx * ny];
        let mut interior = Vec::new();
        for (id, &inside) in mask.iter().enumerate() {
            if inside {
                slot[id] = interior.len();
                interior.push(id);
            }
        }
        let mut grid = Grid2D {
            nx,
            ny,
            hx,
            hy,
            origin,
            domain,
            mask,
            slot,
            interior,
            boundary_band: Vec::new(),
            x_edges: Vec::new(),
            y_edges: Vec::new(),
        };
        for &id in &grid.interior {
            let (i, j) = grid.ij(id);
            let mut touches_exterior = false;
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                match grid.neighbor(i, j, di, dj) {
                    Some(nb) if grid.mask[nb] => {}
                    _ => touches_exterior = true,
                }
            }
            if touches_exterior {
                grid.boundary_band.push(id);
            }
            if i + 1 < nx && grid.mask[id + 1] {
                grid.x_edges.push((grid.slot[id], grid.slot[id + 1]));
            }
            if j + 1 < ny && grid.mask[id + nx] {
                grid.y_edges.push((grid.slot[id], grid.slot[id + nx]));
            }
        }
        Ok(grid)
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, id: usize) -> (usize, usize) {
        (id % self.nx, id / self.nx)
    }

    pub fn coords(&self, id: usize) -> [f64; 2] {
        let (i, j) = self.ij(id);
        [
            self.origin[0] + i as f64 * self.hx,
            self.origin[1] + j as f64 * self.hy,
        ]
    }

    pub fn neighbor(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<usize> {
        let ii = i as i64 + di;
        let jj = j as i64 + dj;
        if ii < 0 || jj < 0 || ii >= self.nx as i64 || jj >= self.ny as i64 {
            None
        } else {
            Some(self.id(ii as usize, jj as usize))
        }
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.mask[id]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Slot of node `id`, or [`EXTERIOR`].
    pub fn slot(&self, id: usize) -> usize {
        self.slot[id]
    }

    /// Node ids of interior nodes, indexed by slot.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Interior nodes with at least one 4-neighbour outside the mask.
    pub fn boundary_band(&self) -> &[usize] {
        &self.boundary_band
    }

    /// Horizontal edges `(tail_slot, head_slot)` with head = tail + e1.
    pub fn x_edges(&self) -> &[(usize, usize)] {
        &self.x_edges
    }

    /// Vertical edges `(tail_slot, head_slot)` with head = tail + e2.
    pub fn y_edges(&self) -> &[(usize, usize)] {
        &self.y_edges
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Coordinates of the interior node in `slot`.
    pub fn slot_coords(&self, slot: usize) -> [f64; 2] {
        self.coords(self.interior[slot])
    }

    /// Distance to the boundary of the domain; for custom masks the
    /// lattice distance to the nearest exterior node is used instead.
    pub fn boundary_distance(&self, id: usize) -> f64 {
        let x = self.coords(id);
        if let Some(dist) = self.domain.boundary_distance(x) {
            return dist;
        }
        let (i, j) = self.ij(id);
        let mut best = f64::INFINITY;
        for jj in 0..self.ny {
            for ii in 0..self.nx {
                if !self.mask[self.id(ii, jj)] {
                    let dx = (ii as f64 - i as f64) * self.hx;
                    let dy = (jj as f64 - j as f64) * self.hy;
                    best = best.min(dx.hypot(dy));
                }
            }
        }
        best
    }

    /// Number of connected components of the mask (4-connectivity).
    pub fn mask_components(&self) -> usize {
        let mut seen = vec![false; self.n_nodes()];
        let mut count = 0;
        let mut stack = Vec::new();
        for &start in &self.interior {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(id) = stack.pop() {
                let (i, j) = self.ij(id);
                for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    if let Some(nb) = self.neighbor(i, j, di, dj) {
                        if self.mask[nb] && !seen[nb] {
                            seen[nb] = true;
                            stack.push(nb);
                        }
                    }
                }
            }
        }
        count
    }

    pub fn header(&self) -> GridHeader {
        GridHeader {
            nx: self.nx,
            ny: self.ny,
            h: self.hx,
            origin: self.origin,
            domain: self.domain,
            n_interior: self.n_interior(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridHeader {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub domain: Domain,
    pub n_interior: usize,
}

/// Grid on `[-radius, radius]^2` with `n` nodes per side; a node is
/// interior iff `|x| < radius`.
pub fn build_disk_domain(radius: f64, n: usize) -> Result<Grid2D> {
    if n < 3 {
        return Err(Error::invalid(format!("disk grid needs n >= 3, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("disk radius must be positive"));
    }
    let h = 2.0 * radius / (n - 1) as f64;
    let origin = [-radius, -radius];
    let mut mask = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            let x = origin[0] + i as f64 * h;
            let y = origin[1] + j as f64 * h;
            mask[j * n + i] = x.hypot(y) < radius;
        }
    }
    Grid2D::from_mask(n, n, h, h, origin, Domain::Disk { radius }, mask)
}

/// Named thickness profiles with known centroid gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThicknessPreset {
    /// `f = 0`, `g = 1`.
    Flat,
    /// `f = |x|^2/2`, `g = f + 1`.
    TiltedParaboloid,
    /// `f = circle_profile`, `g = f + 1`.
    CircleConcentration,
}

impl ThicknessPreset {
    pub fn specs(self) -> (FieldSpec, FieldSpec) {
        match self {
            ThicknessPreset::Flat => (FieldSpec::constant(0.0), FieldSpec::constant(1.0)),
            ThicknessPreset::TiltedParaboloid => (
                FieldSpec::named(NamedProfile::Paraboloid),
                FieldSpec::parse("paraboloid + 1").unwrap(),
            ),
            ThicknessPreset::CircleConcentration => (
                FieldSpec::named(NamedProfile::CircleProfile),
                FieldSpec::parse("circle_profile + 1").unwrap(),
            ),
        }
    }

    /// Exact gradient of the centroid `m = (f + g)/2`.
    pub fn centroid_gradient(self, x: [f64; 2]) -> [f64; 2] {
        match self {
            ThicknessPreset::Flat => [0.0, 0.0],
            ThicknessPreset::TiltedParaboloid => NamedProfile::Paraboloid.gradient(x[0], x[1]),
            ThicknessPreset::CircleConcentration => {
                NamedProfile::CircleProfile.gradient(x[0], x[1])
            }
        }
    }
}

/// Lower and upper film surfaces sampled on every grid node.
#[derive(Debug, Clone)]
pub struct ThicknessProfile {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// `g - f`.
    pub d: Vec<f64>,
    /// `(f + g) / 2`.
    pub m: Vec<f64>,
    /// Exact centroid gradient per node, present for presets.
    pub grad_m: Option<Vec<[f64; 2]>>,
    pub d_min: f64,
    pub d_max: f64,
    pub preset: Option<ThicknessPreset>,
}

impl ThicknessProfile {
    fn from_samples(grid: &Grid2D, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let d: Vec<f64> = f.iter().zip(&g).map(|(f, g)| g - f).collect();
        let m: Vec<f64> = f.iter().zip(&g).map(|(f, g)| 0.5 * (f + g)).collect();
        let mut d_min = f64::INFINITY;
        let mut d_max = f64::NEG_INFINITY;
        for &id in grid.interior() {
            if !(d[id] > 0.0) {
                let (i, j) = grid.ij(id);
                return Err(Error::InvalidThickness { i, j, gap: d[id] });
            }
            d_min = d_min.min(d[id]);
            d_max = d_max.max(d[id]);
        }
        Ok(ThicknessProfile {
            f,
            g,
            d,
            m,
            grad_m: None,
            d_min,
            d_max,
            preset: None,
        })
    }

    /// True when `d` equals `value` on all interior nodes to `tol`.
    pub fn is_uniform(&self, grid: &Grid2D, value: f64, tol: f64) -> bool {
        grid.interior().iter().all(|&id| (self.d[id] - value).abs() <= tol)
    }

    /// `∫_ω d` by the node rule.
    pub fn volume(&self, grid: &Grid2D) -> f64 {
        grid.interior().iter().map(|&id| self.d[id]).sum::<f64>() * grid.cell_area()
    }

    /// Writes the node table `i,j,x1,x2,mask,f,g,d,m`.
    pub fn write_csv<W: Write>(&self, grid: &Grid2D, mut out: W) -> Result<()> {
        writeln!(out, "i,j,x1,x2,mask,f,g,d,m")?;
        for id in 0..grid.n_nodes() {
            let (i, j) = grid.ij(id);
            let x = grid.coords(id);
            writeln!(
                out,
                "{i},{j},{},{},{},{},{},{},{}",
                crate::report::fmt_f64(x[0]),
                crate::report::fmt_f64(x[1]),
                u8::from(grid.is_interior(id)),
                crate::report::fmt_f64(self.f[id]),
                crate::report::fmt_f64(self.g[id]),
                crate::report::fmt_f64(self.d[id]),
                crate::report::fmt_f64(self.m[id]),
            )?;
        }
        Ok(())
    }
}

/// Samples `f` and `g` at every node center.
pub fn build_thickness(grid: &Grid2D, f_spec: &FieldSpec, g_spec: &FieldSpec) -> Result<ThicknessProfile> {
    let mut f = Vec::with_capacity(grid.n_nodes());
    let mut g = Vec::with_capacity(grid.n_nodes());
    for id in 0..grid.n_nodes() {
        let [x1, x2] = grid.coords(id);
        f.push(f_spec.eval(x1, x2));
        g.push(g_spec.eval(x1, x2));
    }
    ThicknessProfile::from_samples(grid, f, g)
}

pub fn build_preset_thickness(grid: &Grid2D, preset: ThicknessPreset) -> Result<ThicknessProfile> {
    let (f_spec, g_spec) = preset.specs();
    let mut profile = build_thickness(grid, &f_spec, &g_spec)?;
    profile.grad_m = Some(
        (0..grid.n_nodes())
            .map(|id| preset.centroid_gradient(grid.coords(id)))
            .collect(),
    );
    profile.preset = Some(preset);
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_node_disk_has_nine_interior_nodes() {
        let grid = build_disk_domain(1.0, 5).unwrap();
        assert_eq!(grid.n_interior(), 9);
        // the inner 3x3 block
        for j in 0..5 {
            for i in 0..5 {
                let inner = (1..=3).contains(&i) && (1..=3).contains(&j);
                assert_eq!(grid.is_interior(grid.id(i, j)), inner, "({i},{j})");
            }
        }
        assert_eq!(grid.hx, 0.5);
    }

    #[test]
    fn three_node_disk_has_only_center() {
        let grid = build_disk_domain(1.0, 3).unwrap();
        assert_eq!(grid.interior(), &[4]);
        assert!(grid.x_edges().is_empty() && grid.y_edges().is_empty());
    }

    #[test]
    fn rejects_small_grids() {
        assert!(matches!(build_disk_domain(1.0, 2), Err(Error::InvalidArgument(_))));
        assert!(build_disk_domain(0.0, 9).is_err());
    }

    #[test]
    fn disk_area_within_one_percent() {
        let grid = build_disk_domain(2.0, 129).unwrap();
        let h = grid.hx;
        let cells = std::f64::consts::PI * 4.0 / (h * h);
        let rel = (grid.n_interior() as f64 - cells).abs() / cells;
        assert!(rel < 0.01, "relative area error {rel}");
    }

    #[test]
    fn area_estimate_converges() {
        let exact = std::f64::consts::PI;
        let errs: Vec<f64> = [33, 65, 129, 257]
            .iter()
            .map(|&n| {
                let g = build_disk_domain(1.0, n).unwrap();
                (g.n_interior() as f64 * g.cell_area() - exact).abs()
            })
            .collect();
        let order = (errs[0] / errs[3]).log2() / 3.0;
        assert!(order >= 1.0, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn disk_mask_is_connected_and_band_is_boundary() {
        for n in [5, 17, 64, 129] {
            let grid = build_disk_domain(1.0, n).unwrap();
            assert_eq!(grid.mask_components(), 1);
            for &id in grid.boundary_band() {
                assert!(grid.boundary_distance(id) < 1.5 * grid.hx);
            }
        }
    }

    #[test]
    fn edges_connect_interior_neighbours() {
        let grid = build_disk_domain(1.0, 9).unwrap();
        for &(t, h) in grid.x_edges() {
            assert_eq!(grid.interior()[h], grid.interior()[t] + 1);
        }
        for &(t, h) in grid.y_edges() {
            assert_eq!(grid.interior()[h], grid.interior()[t] + grid.nx);
        }
    }

    #[test]
    fn tilted_paraboloid_has_unit_thickness() {
        let grid = build_disk_domain(1.0, 33).unwrap();
        let t = build_preset_thickness(&grid, ThicknessPreset::TiltedParaboloid).unwrap();
        for &id in grid.interior() {
            let [x1, x2] = grid.coords(id);
            assert!((t.d[id] - 1.0).abs() < 1e-14);
            assert!((t.m[id] - (0.5 * (x1 * x1 + x2 * x2) + 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_film() {
        let grid = build_disk_domain(1.0, 9).unwrap();
        let t = build_preset_thickness(&grid, ThicknessPreset::Flat).unwrap();
        assert!(t.d.iter().all(|&d| d == 1.0));
        assert!(t.m.iter().all(|&m| m == 0.5));
        assert_eq!(t.d_min, 1.0);
    }

    #[test]
    fn circle_profile_has_unit_thickness() {
        let grid = build_disk_domain(1.0, 65).unwrap();
        let t = build_preset_thickness(&grid, ThicknessPreset::CircleConcentration).unwrap();
        for &id in grid.interior() {
            assert!((t.d[id] - 1.0).abs() < 1e-12);
            assert!(t.f[id].is_finite());
        }
    }

    #[test]
    fn derived_fields_are_bitwise_consistent() {
        let grid = build_disk_domain(1.0, 17).unwrap();
        let f = FieldSpec::parse("0.3*x1 - x2^2").unwrap();
        let g = FieldSpec::parse("2 + x1*x2").unwrap();
        let t = build_thickness(&grid, &f, &g).unwrap();
        for id in 0..grid.n_nodes() {
            assert_eq!(t.d[id], t.g[id] - t.f[id]);
            assert_eq!(t.m[id], 0.5 * (t.f[id] + t.g[id]));
        }
        assert!(t.d_min > 0.0);
    }

    #[test]
    fn nonpositive_thickness_names_node() {
        let grid = build_disk_domain(1.0, 5).unwrap();
        let f = FieldSpec::parse("x1").unwrap();
        let g = FieldSpec::constant(0.25);
        match build_thickness(&grid, &f, &g) {
            Err(Error::InvalidThickness { i, j, .. }) => {
                let x = grid.coords(grid.id(i, j));
                assert!(x[0] >= 0.25);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let grid = build_disk_domain(1.0, 5).unwrap();
        let t = build_preset_thickness(&grid, ThicknessPreset::Flat).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        let header = serde_json::to_string(&grid.header()).unwrap();
        assert!(header.contains("\"kind\":\"disk\""));
    }
}
