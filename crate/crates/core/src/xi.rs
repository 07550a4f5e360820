//! Weighted Dirichlet problem `-div((1/d) ∇ξ0) = -curl A0`, the vortex
//! attractor set where `|ξ0/d|` peaks, and the leading-order lower critical
//! field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{EffectivePotential, PotentialKind};
use crate::geometry::{Grid2D, ThicknessProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiOptions {
    /// Max-norm bound on the discrete residual.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions {
            tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

/// Solution of the auxiliary elliptic problem on every grid node.
#[derive(Debug, Clone)]
pub struct XiField {
    /// Zero at every exterior node.
    pub xi0: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Sparse 5-point operator `-div(c ∇·)` over interior slots.
struct WeightedLaplacian {
    /// Per slot: up to four `(neighbour slot, coefficient)` couplings.
    offdiag: Vec<[(usize, f64); 4]>,
    diag: Vec<f64>,
}

const NO_SLOT: usize = usize::MAX;
/// Lower bound on the cut fraction of a boundary face.
const MIN_CUT_FRACTION: f64 = 1e-3;

impl WeightedLaplacian {
    fn assemble(grid: &Grid2D, d: &[f64]) -> Self {
        let n = grid.n_interior();
        let mut offdiag = vec![[(NO_SLOT, 0.0); 4]; n];
        let mut diag = vec![0.0; n];
        for (k, &id) in grid.interior().iter().enumerate() {
            let (i, j) = grid.ij(id);
            let dirs = [
                (1i64, 0i64, grid.hx),
                (-1, 0, grid.hx),
                (0, 1, grid.hy),
                (0, -1, grid.hy),
            ];
            for (q, (di, dj, h)) in dirs.into_iter().enumerate() {
                let nb = grid.neighbor(i, j, di, dj).filter(|&nb| grid.is_interior(nb));
                // harmonic mean of 1/d across the face. A face cut by the boundary
                // uses the node value and the true distance to the boundary, which
                // amounts to a linearly extrapolated ghost value.
                let coeff = match nb {
                    Some(nb) => 2.0 / (d[id] + d[nb]) / (h * h),
                    None => {
                        let dir = [di as f64, dj as f64];
                        let theta = grid
                            .domain
                            .crossing_distance(grid.coords(id), dir)
                            .map_or(1.0, |t| (t / h).clamp(MIN_CUT_FRACTION, 1.0));
                        1.0 / d[id] / (theta * h * h)
                    }
                };
                diag[k] += coeff;
                if let Some(nb) = nb {
                    offdiag[k][q] = (grid.slot(nb), coeff);
                }
            }
        }
        WeightedLaplacian { offdiag, diag }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..x.len() {
            let mut acc = self.diag[k] * x[k];
            for &(nb, c) in &self.offdiag[k] {
                if nb != NO_SLOT {
                    acc -= c * x[nb];
                }
            }
            out[k] = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

/// Jacobi-preconditioned conjugate gradient; returns (iterations, residual).
fn pcg(op: &WeightedLaplacian, b: &[f64], x: &mut [f64], opts: &XiOptions) -> Result<(usize, f64)> {
    let n = b.len();
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut z: Vec<f64> = r.iter().zip(&op.diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = max_abs(&r);
    let mut it = 0;
    while res > opts.tol {
        if it >= opts.max_iters {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: res,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: res,
            });
        }
        let step = rz / pap;
        for k in 0..n {
            x[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        it += 1;
        // recompute the true residual periodically to avoid drift
        if it % 50 == 0 {
            op.apply(x, &mut ap);
            for k in 0..n {
                r[k] = b[k] - ap[k];
            }
        }
        res = max_abs(&r);
        for k in 0..n {
            z[k] = r[k] / op.diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    op.apply(x, &mut ap);
    let true_res = b.iter().zip(&ap).fold(0.0f64, |m, (b, a)| m.max((b - a).abs()));
    Ok((it, true_res))
}

/// Right-hand side `-curl A0`, exact when the profile carries its centroid
/// gradient, otherwise the discrete curl stored in the potential.
fn xi_rhs(grid: &Grid2D, thick: &ThicknessProfile, pot: &EffectivePotential) -> Vec<f64> {
    let mut rhs = vec![0.0; grid.n_nodes()];
    for &id in grid.interior() {
        rhs[id] = match (pot.kind, &thick.grad_m) {
            (PotentialKind::SubcriticalPerp, _) => -1.0,
            (PotentialKind::CriticalOblique, Some(grad)) => {
                let a = pot.alpha;
                a[0] * grad[id][0] + a[1] * grad[id][1] - a[2]
            }
            (PotentialKind::CriticalOblique, None) => -pot.h0[id],
        };
    }
    rhs
}

pub fn solve_xi0(
    grid: &Grid2D,
    thick: &ThicknessProfile,
    pot: &EffectivePotential,
    opts: &XiOptions,
) -> Result<XiField> {
    if grid.n_interior() == 0 {
        return Err(Error::invalid("grid has no interior nodes"));
    }
    if !(thick.d_min > 0.0) {
        return Err(Error::invalid("thickness must be positive"));
    }
    let rhs = xi_rhs(grid, thick, pot);
    let op = WeightedLaplacian::assemble(grid, &thick.d);
    let b: Vec<f64> = grid.interior().iter().map(|&id| rhs[id]).collect();
    let mut x = vec![0.0; b.len()];
    let (iterations, residual_norm) = pcg(&op, &b, &mut x, opts)?;
    let mut xi0 = vec![0.0; grid.n_nodes()];
    for (k, &id) in grid.interior().iter().enumerate() {
        xi0[id] = x[k];
    }
    Ok(XiField {
        xi0,
        rhs,
        residual_norm,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaOptions {
    /// Nodes with `|ξ0/d| >= (1 - rel_tol) max` are candidates.
    pub rel_tol: f64,
    /// Single-linkage clustering radius, in units of the grid spacing.
    pub cluster_radius_h: f64,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        LambdaOptions {
            rel_tol: 1e-2,
            cluster_radius_h: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    /// `|ξ0/d|`-weighted centroid of the cluster.
    pub position: [f64; 2],
    /// Signed `ξ0/d` at the cluster's extremal node.
    pub xi_over_d: f64,
    /// +1 where `ξ0 < 0`, -1 where `ξ0 > 0`.
    pub predicted_degree_sign: i32,
    pub n_nodes: usize,
    /// Discrete Hessian of `ξ0/d` at the extremal node (diagnostic only).
    pub hessian: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSet {
    pub points: Vec<LambdaPoint>,
    pub max_abs: f64,
}

pub fn find_lambda_set(
    grid: &Grid2D,
    xi: &XiField,
    thick: &ThicknessProfile,
    opts: &LambdaOptions,
) -> Result<LambdaSet> {
    let ratio = |id: usize| xi.xi0[id] / thick.d[id];
    let max_abs = grid
        .interior()
        .iter()
        .fold(0.0f64, |m, &id| m.max(ratio(id).abs()));
    if max_abs < 1e-14 {
        return Err(Error::EmptyLambda { max_abs });
    }
    let cutoff = (1.0 - opts.rel_tol) * max_abs;
    let candidates: Vec<usize> = grid
        .interior()
        .iter()
        .copied()
        .filter(|&id| ratio(id).abs() >= cutoff)
        .collect();

    let radius = opts.cluster_radius_h * grid.hx.max(grid.hy);
    let mut label = vec![usize::MAX; candidates.len()];
    let mut n_clusters = 0;
    for start in 0..candidates.len() {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = n_clusters;
        let mut stack = vec![start];
        while let Some(a) = stack.pop() {
            let xa = grid.coords(candidates[a]);
            for b in 0..candidates.len() {
                if label[b] == usize::MAX {
                    let xb = grid.coords(candidates[b]);
                    if (xa[0] - xb[0]).hypot(xa[1] - xb[1]) <= radius {
                        label[b] = n_clusters;
                        stack.push(b);
                    }
                }
            }
        }
        n_clusters += 1;
    }

    let mut points = Vec::with_capacity(n_clusters);
    for c in 0..n_clusters {
        let members: Vec<usize> = candidates
            .iter()
            .zip(&label)
            .filter(|(_, &l)| l == c)
            .map(|(&id, _)| id)
            .collect();
        let mut wsum = 0.0;
        let mut centroid = [0.0; 2];
        let mut best = members[0];
        for &id in &members {
            let w = ratio(id).abs();
            let x = grid.coords(id);
            centroid[0] += w * x[0];
            centroid[1] += w * x[1];
            wsum += w;
            if w > ratio(best).abs() {
                best = id;
            }
        }
        points.push(LambdaPoint {
            position: [centroid[0] / wsum, centroid[1] / wsum],
            xi_over_d: ratio(best),
            predicted_degree_sign: if xi.xi0[best] < 0.0 { 1 } else { -1 },
            n_nodes: members.len(),
            hessian: hessian(grid, best, &ratio),
        });
    }
    Ok(LambdaSet { points, max_abs })
}

fn hessian(grid: &Grid2D, id: usize, value: &impl Fn(usize) -> f64) -> [[f64; 2]; 2] {
    let (i, j) = grid.ij(id);
    let at = |di: i64, dj: i64| -> Option<f64> {
        grid.neighbor(i, j, di, dj)
            .filter(|&n| grid.is_interior(n))
            .map(value)
    };
    let c = value(id);
    let (hx, hy) = (grid.hx, grid.hy);
    let dxx = match (at(1, 0), at(-1, 0)) {
        (Some(a), Some(b)) => (a - 2.0 * c + b) / (hx * hx),
        _ => f64::NAN,
    };
    let dyy = match (at(0, 1), at(0, -1)) {
        (Some(a), Some(b)) => (a - 2.0 * c + b) / (hy * hy),
        _ => f64::NAN,
    };
    let dxy = match (at(1, 1), at(1, -1), at(-1, 1), at(-1, -1)) {
        (Some(pp), Some(pm), Some(mp), Some(mm)) => (pp - pm - mp + mm) / (4.0 * hx * hy),
        _ => f64::NAN,
    };
    [[dxx, dxy], [dxy, dyy]]
}

pub const HC1_CAVEAT: &str =
    "leading order only: the O(1) correction to the lower critical field is not estimated";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalField {
    pub value: f64,
    pub kappa: f64,
    pub max_abs_xi_over_d: f64,
    pub caveat: String,
}

/// Leading-order lower critical field `ln(kappa) / (2 max |ξ0/d|)`.
pub fn critical_field(grid: &Grid2D, xi: &XiField, thick: &ThicknessProfile, kappa: f64) -> Result<CriticalField> {
    if !(kappa > 1.0) {
        return Err(Error::invalid(format!("kappa must exceed 1, got {kappa}")));
    }
    let max_abs = grid
        .interior()
        .iter()
        .fold(0.0f64, |m, &id| m.max((xi.xi0[id] / thick.d[id]).abs()));
    if max_abs == 0.0 {
        return Err(Error::UndefinedCriticalField);
    }
    Ok(CriticalField {
        value: kappa.ln() / (2.0 * max_abs),
        kappa,
        max_abs_xi_over_d: max_abs,
        caveat: HC1_CAVEAT.to_string(),
    })
}

/// Max-norm error against `exact` over interior nodes at least `margin`
/// from the domain boundary.
pub fn interior_error(grid: &Grid2D, values: &[f64], exact: impl Fn([f64; 2]) -> f64, margin: f64) -> f64 {
    grid.interior()
        .iter()
        .filter(|&&id| grid.boundary_distance(id) >= margin)
        .fold(0.0f64, |m, &id| m.max((values[id] - exact(grid.coords(id))).abs()))
}
