//! Vortex detection by plaquette winding numbers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid2D, EXTERIOR};
use crate::gl2d::OrderParameterField;
use crate::xi::LambdaSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexOptions {
    /// Plaquettes with a corner below `min_modulus * gamma` are flagged.
    pub min_modulus: f64,
    pub gamma: f64,
    /// Same-sign plaquettes closer than this many grid spacings are merged.
    pub merge_radius_h: f64,
}

impl Default for VortexOptions {
    fn default() -> Self {
        VortexOptions {
            min_modulus: 1e-3,
            gamma: 1.0,
            merge_radius_h: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    pub degree: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
    pub total_degree: i32,
    /// Lower-left corner `(i, j)` of each plaquette evaluated despite a
    /// corner modulus below threshold.
    pub low_modulus: Vec<[usize; 2]>,
}

impl VortexSet {
    /// True if some vortex of exactly `degree` lies within `radius` of `at`.
    pub fn has_vortex_near(&self, degree: i32, at: [f64; 2], radius: f64) -> bool {
        self.vortices
            .iter()
            .any(|v| v.degree == degree && (v.x - at[0]).hypot(v.y - at[1]) <= radius)
    }
}

/// Edge lookups keyed by tail slot.
struct EdgeIndex {
    x: Vec<usize>,
    y: Vec<usize>,
}

impl EdgeIndex {
    fn new(grid: &Grid2D) -> Self {
        let build = |edges: &[(usize, usize)]| {
            let mut idx = vec![usize::MAX; grid.n_interior()];
            for (e, &(t, _)) in edges.iter().enumerate() {
                idx[t] = e;
            }
            idx
        };
        EdgeIndex {
            x: build(grid.x_edges()),
            y: build(grid.y_edges()),
        }
    }
}

/// Phase of the gauge-invariant edge product `U v_head conj(v_tail)`.
fn edge_phase(field: &OrderParameterField, links: &[Complex64], edges: &[(usize, usize)], e: usize) -> f64 {
    let (t, h) = edges[e];
    (links[e] * field.v[h] * field.v[t].conj()).arg()
}

struct Plaquette {
    center: [f64; 2],
    degree: i32,
}

pub fn detect_vortices(grid: &Grid2D, field: &OrderParameterField, opts: &VortexOptions) -> Result<VortexSet> {
    if !(opts.min_modulus > 0.0 && opts.min_modulus < 1.0) {
        return Err(Error::invalid("min_modulus must lie in (0, 1)"));
    }
    if field.v.len() != grid.n_interior()
        || field.ux.len() != grid.x_edges().len()
        || field.uy.len() != grid.y_edges().len()
    {
        return Err(Error::invalid("order parameter field does not match the grid"));
    }
    let index = EdgeIndex::new(grid);
    let threshold = opts.min_modulus * opts.gamma;
    let mut low_modulus = vec![];
    let mut found = vec![];
    for j in 0..grid.ny.saturating_sub(1) {
        for i in 0..grid.nx.saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(a, b)| grid.slot(grid.id(a, b)));
            if corners.contains(&EXTERIOR) {
                continue;
            }
            let [s00, s10, _, s01] = corners;
            let moduli = corners.map(|s| field.v[s].norm());
            if moduli.contains(&0.0) {
                return Err(Error::DegeneratePlaquette { i, j });
            }
            if moduli.iter().any(|&m| m <= threshold) {
                low_modulus.push([i, j]);
            }
            let xs = grid.x_edges();
            let ys = grid.y_edges();
            let total = edge_phase(field, &field.ux, xs, index.x[s00]) + edge_phase(field, &field.uy, ys, index.y[s10])
                - edge_phase(field, &field.ux, xs, index.x[s01])
                - edge_phase(field, &field.uy, ys, index.y[s00]);
            let degree = (total / (2.0 * PI)).round() as i32;
            if degree != 0 {
                let c0 = grid.coords(grid.id(i, j));
                found.push(Plaquette {
                    center: [c0[0] + 0.5 * grid.hx, c0[1] + 0.5 * grid.hy],
                    degree,
                });
            }
        }
    }
    let vortices = merge(&found, opts.merge_radius_h * grid.hx.max(grid.hy));
    let total_degree = found.iter().map(|p| p.degree).sum();
    Ok(VortexSet {
        vortices,
        total_degree,
        low_modulus,
    })
}

/// Single-linkage merge of same-sign plaquettes; clusters are emitted in
/// row-major order of their first plaquette.
fn merge(found: &[Plaquette], radius: f64) -> Vec<Vortex> {
    let n = found.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..n {
        for b in a + 1..n {
            let (p, q) = (&found[a], &found[b]);
            let dist = (p.center[0] - q.center[0]).hypot(p.center[1] - q.center[1]);
            if p.degree.signum() == q.degree.signum() && dist <= radius * (1.0 + 1e-12) {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut out = vec![];
    for r in 0..n {
        if root(&mut parent, r) != r {
            continue;
        }
        let members: Vec<&Plaquette> = (0..n).filter(|&k| root(&mut parent, k) == r).map(|k| &found[k]).collect();
        // plain centroid of plaquette centres: exact under gauge changes
        let centroid = |axis: usize| members.iter().map(|p| p.center[axis]).sum::<f64>() / members.len() as f64;
        out.push(Vortex {
            x: centroid(0),
            y: centroid(1),
            degree: members.iter().map(|p| p.degree).sum(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMatch {
    pub position: [f64; 2],
    pub predicted_sign: i32,
    pub count: usize,
    pub degree_sum: i32,
    /// Every vortex within range carries the predicted sign.
    pub sign_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub radius: f64,
    pub points: Vec<PointMatch>,
    pub unmatched: Vec<Vortex>,
}

pub fn match_predictions(found: &VortexSet, predicted: &LambdaSet, radius: f64) -> Result<MatchReport> {
    if !(radius > 0.0) {
        return Err(Error::invalid("match radius must be positive"));
    }
    let near = |v: &Vortex, at: [f64; 2]| (v.x - at[0]).hypot(v.y - at[1]) <= radius;
    let points = predicted
        .points
        .iter()
        .map(|p| {
            let hits: Vec<&Vortex> = found.vortices.iter().filter(|v| near(v, p.position)).collect();
            PointMatch {
                position: p.position,
                predicted_sign: p.predicted_degree_sign,
                count: hits.len(),
                degree_sum: hits.iter().map(|v| v.degree).sum(),
                sign_consistent: hits.iter().all(|v| v.degree.signum() == p.predicted_degree_sign),
            }
        })
        .collect();
    let unmatched = found
        .vortices
        .iter()
        .filter(|v| !predicted.points.iter().any(|p| near(v, p.position)))
        .copied()
        .collect();
    Ok(MatchReport {
        radius,
        points,
        unmatched,
    })
}
