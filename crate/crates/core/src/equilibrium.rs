//! Equilibrium measures of the Dirichlet Green's function of the unit disk
//! on curves.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertices must satisfy `|x| <= 1 - DISK_MARGIN`.
pub const DISK_MARGIN: f64 = 1e-6;

/// Dirichlet Green's function of the unit disk, normalized so that
/// `-ΔG = δ` and `G > 0` inside:
/// `G(x, y) = (1/2π) ln(|y| |x - y*| / |x - y|)` with `y* = y/|y|²`.
///
/// Evaluated as `(1/4π) ln((|x|²|y|² - 2 x·y + 1) / |x - y|²)`, which is the
/// same quantity and stays regular at `y = 0`.
pub fn green_disk(x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let nx = x[0] * x[0] + x[1] * x[1];
    let ny = y[0] * y[0] + y[1] * y[1];
    if nx >= 1.0 {
        return Err(Error::OutOfDomain(nx.sqrt()));
    }
    if ny >= 1.0 {
        return Err(Error::OutOfDomain(ny.sqrt()));
    }
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    let dist2 = dx * dx + dy * dy;
    if dist2 == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    let dot = x[0] * y[0] + x[1] * y[1];
    Ok(((nx * ny - 2.0 * dot + 1.0) / dist2).ln() / (4.0 * PI))
}

/// Cell-averaged diagonal of the Green's function for a straight cell of
/// length `len` centred at `m`: the free-space part
/// `-(1/2π) ⟨ln|s - t|⟩ = (1/2π)(3/2 - ln len)` is averaged exactly over
/// the cell, the smooth image part `(1/2π) ln(1 - |m|²)` is taken at the
/// midpoint.
pub fn green_self_energy(m: [f64; 2], len: f64) -> f64 {
    let r2 = m[0] * m[0] + m[1] * m[1];
    (1.5 - len.ln() + (1.0 - r2).ln()) / (2.0 * PI)
}

/// `∫_0^len ln|x - (a + t e)| dt` for the unit direction `e`.
fn segment_log_integral(x: [f64; 2], a: [f64; 2], e: [f64; 2], len: f64) -> f64 {
    let d = [x[0] - a[0], x[1] - a[1]];
    let u = d[0] * e[0] + d[1] * e[1];
    let h = (d[0] * e[1] - d[1] * e[0]).abs();
    let antiderivative = |t: f64| {
        let r2 = t * t + h * h;
        let log_part = if r2 > 0.0 { 0.5 * t * r2.ln() } else { 0.0 };
        let atan_part = if h > 0.0 { h * (t / h).atan() } else { 0.0 };
        log_part - t + atan_part
    };
    antiderivative(len - u) - antiderivative(-u)
}

/// Mean of `-ln|s - t|` over `s` in segment `p`, `t` in segment `q`: exact
/// in `t`, Gauss-Legendre in `s`.
fn segment_pair_log_mean(p: [[f64; 2]; 2], q: [[f64; 2]; 2], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let lq = (q[1][0] - q[0][0]).hypot(q[1][1] - q[0][1]);
    let e = [(q[1][0] - q[0][0]) / lq, (q[1][1] - q[0][1]) / lq];
    let mut acc = 0.0;
    for (s, w) in crate::quadrature::mapped(&rule.0, &rule.1, 0.0, 1.0) {
        let x = [p[0][0] + s * (p[1][0] - p[0][0]), p[0][1] + s * (p[1][1] - p[0][1])];
        acc += w * segment_log_integral(x, q[0], e, lq);
    }
    -acc / lq
}

/// Smooth image part `(1/4π) ln(|x|²|y|² - 2 x·y + 1)` of the Green's function.
fn green_image(x: [f64; 2], y: [f64; 2]) -> f64 {
    let nx = x[0] * x[0] + x[1] * x[1];
    let ny = y[0] * y[0] + y[1] * y[1];
    (nx * ny - 2.0 * (x[0] * y[0] + x[1] * y[1]) + 1.0).ln() / (4.0 * PI)
}

/// Polygonal curve inside the unit disk, divided into straight arc cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub vertices: Vec<[f64; 2]>,
    pub closed: bool,
    midpoints: Vec<[f64; 2]>,
    lengths: Vec<f64>,
}

impl Curve {
    pub fn new(vertices: Vec<[f64; 2]>, closed: bool) -> Result<Self> {
        let min_cells = if closed { 3 } else { 2 };
        if vertices.len() < min_cells {
            return Err(Error::invalid(format!("a curve needs at least {min_cells} vertices")));
        }
        if let Some(v) = vertices.iter().find(|v| v[0].hypot(v[1]) > 1.0 - DISK_MARGIN) {
            return Err(Error::OutOfDomain(v[0].hypot(v[1])));
        }
        let n = vertices.len();
        let n_cells = if closed { n } else { n - 1 };
        let mut midpoints = Vec::with_capacity(n_cells);
        let mut lengths = Vec::with_capacity(n_cells);
        for k in 0..n_cells {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if !(len > 0.0) {
                return Err(Error::invalid(format!("vertices {k} and {} coincide", (k + 1) % n)));
            }
            midpoints.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            lengths.push(len);
        }
        Ok(Curve {
            vertices,
            closed,
            midpoints,
            lengths,
        })
    }

    /// Closed regular polygon with `cells` sides inscribed in the circle.
    pub fn circle(center: [f64; 2], radius: f64, cells: usize) -> Result<Self> {
        Self::circle_rotated(center, radius, cells, 0.0)
    }

    pub fn circle_rotated(center: [f64; 2], radius: f64, cells: usize, phase: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("circle radius must be positive"));
        }
        let vertices = (0..cells)
            .map(|k| {
                let t = phase + 2.0 * PI * k as f64 / cells as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::new(vertices, true)
    }

    /// Straight segment from `a` to `b` as one or more cells.
    pub fn segment(a: [f64; 2], b: [f64; 2], cells: usize) -> Result<Self> {
        let vertices = (0..=cells)
            .map(|k| {
                let t = k as f64 / cells as f64;
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            })
            .collect();
        Self::new(vertices, false)
    }

    /// Parses `circle:r=R[,cx=X][,cy=Y]`.
    pub fn parse_spec(spec: &str, cells: usize) -> Result<Self> {
        let rest = spec
            .strip_prefix("circle:")
            .ok_or_else(|| Error::InvalidConfig(format!("unknown curve `{spec}`; expected circle:r=R[,cx=X][,cy=Y]")))?;
        let (mut r, mut cx, mut cy) = (None, 0.0, 0.0);
        for part in rest.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("malformed curve parameter `{part}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("curve parameter `{key}` is not a number")))?;
            match key.trim() {
                "r" => r = Some(value),
                "cx" => cx = value,
                "cy" => cy = value,
                other => return Err(Error::InvalidConfig(format!("unknown curve parameter `{other}`"))),
            }
        }
        let r = r.ok_or_else(|| Error::InvalidConfig("circle curve needs r".into()))?;
        Self::circle([cx, cy], r, cells)
    }

    pub fn n_cells(&self) -> usize {
        self.lengths.len()
    }

    pub fn midpoints(&self) -> &[[f64; 2]] {
        &self.midpoints
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    fn cell(&self, k: usize) -> [[f64; 2]; 2] {
        [self.vertices[k], self.vertices[(k + 1) % self.vertices.len()]]
    }

    /// Symmetric kernel `K` with `I(μ) = ½ wᵀ K w`, row-major. Off the
    /// diagonal the free-space logarithm is averaged over both cells and the
    /// smooth image part is taken at the midpoints.
    pub fn kernel(&self) -> Vec<f64> {
        let n = self.n_cells();
        let near = crate::quadrature::gauss_legendre(16).expect("fixed rule");
        let far = crate::quadrature::gauss_legendre(4).expect("fixed rule");
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (mi, mj) = (self.midpoints[i], self.midpoints[j]);
                        if i == j {
                            return green_self_energy(mi, self.lengths[i]);
                        }
                        // fixed orientation keeps K exactly symmetric
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        let dist = (mi[0] - mj[0]).hypot(mi[1] - mj[1]);
                        let rule = if dist < 3.0 * (self.lengths[i] + self.lengths[j]) { &near } else { &far };
                        let free = segment_pair_log_mean(self.cell(a), self.cell(b), rule) / (2.0 * PI);
                        free + green_image(mi, mj)
                    })
                    .collect()
            })
            .collect();
        rows.concat()
    }
}

/// Probability weights per arc cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("measure weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("measure weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { weights })
    }

    pub fn uniform(n: usize) -> Self {
        DiscreteMeasure {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Proportional to arc length.
    pub fn arclength(curve: &Curve) -> Self {
        let total: f64 = curve.lengths().iter().sum();
        DiscreteMeasure {
            weights: curve.lengths().iter().map(|l| l / total).collect(),
        }
    }

    /// Normalised `U(0, 1)` draws.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        DiscreteMeasure {
            weights: raw.iter().map(|w| w / total).collect(),
        }
    }

    /// Normalised from a nonnegative density sampled at the cells.
    pub fn from_density(curve: &Curve, density: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let raw: Vec<f64> = curve
            .midpoints()
            .iter()
            .zip(curve.lengths())
            .map(|(m, l)| density(*m).max(0.0) * l)
            .collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("density has no mass on the curve"));
        }
        Ok(DiscreteMeasure {
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    pub fn total_variation(&self, other: &DiscreteMeasure) -> f64 {
        0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

fn check_pair(mu: &DiscreteMeasure, curve: &Curve) -> Result<()> {
    if mu.weights.len() != curve.n_cells() {
        return Err(Error::invalid(format!(
            "measure has {} weights for {} cells",
            mu.weights.len(),
            curve.n_cells()
        )));
    }
    Ok(())
}

fn quad_form(k: &[f64], w: &[f64]) -> f64 {
    let n = w.len();
    (0..n).map(|i| w[i] * dot(&k[i * n..(i + 1) * n], w)).sum::<f64>() * 0.5
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(k: &[f64], w: &[f64], out: &mut [f64]) {
    let n = w.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&k[i * n..(i + 1) * n], w);
    }
}

/// `I(μ) = ½ ΣΣ w_i w_j G_ij` with the cell-averaged diagonal.
pub fn measure_energy(mu: &DiscreteMeasure, curve: &Curve) -> Result<f64> {
    check_pair(mu, curve)?;
    Ok(quad_form(&curve.kernel(), &mu.weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    pub max_iters: usize,
    /// Bound on the KKT residual relative to the multiplier `wᵀKw`.
    pub tol: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            max_iters: 200_000,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub measure: DiscreteMeasure,
    pub energy: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        }
    }
    y.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Relative violation of the optimality conditions `Kw >= λ` with equality
/// on the support, `λ = wᵀKw`.
fn kkt_residual(w: &[f64], g: &[f64]) -> f64 {
    let lambda = dot(w, g);
    let worst = w.iter().zip(g).fold(0.0f64, |m, (&w, &g)| {
        let r = if w > 0.0 { (g - lambda).abs() } else { (lambda - g).max(0.0) };
        m.max(r)
    });
    worst / lambda.abs().max(f64::MIN_POSITIVE)
}

/// Largest eigenvalue of the symmetric kernel by power iteration.
fn spectral_bound(k: &[f64], n: usize) -> f64 {
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..500 {
        mat_vec(k, &x, &mut y);
        let norm = dot(&y, &y).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = dot(&x, &y);
        x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / norm);
        if (next - est).abs() <= 1e-12 * next.abs() {
            est = next;
            break;
        }
        est = next;
    }
    // guard against underestimation
    1.01 * est.abs().max(dot(&y, &y).sqrt())
}

/// Projected gradient descent on the simplex with step `1/L`; every
/// accepted iterate lowers `I`.
pub fn minimize_measure(curve: &Curve, init: &DiscreteMeasure, opts: &MeasureOptions) -> Result<MeasureResult> {
    check_pair(init, curve)?;
    let n = curve.n_cells();
    let k = curve.kernel();
    let step = 1.0 / spectral_bound(&k, n);
    let mut w = init.weights.clone();
    let mut g = vec![0.0; n];
    mat_vec(&k, &w, &mut g);
    let mut energy = 0.5 * dot(&w, &g);
    let mut residual = kkt_residual(&w, &g);
    let mut iterations = 0;
    let mut g_trial = vec![0.0; n];
    while residual > opts.tol && iterations < opts.max_iters {
        let trial: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w - step * g).collect();
        let trial = project_simplex(&trial);
        mat_vec(&k, &trial, &mut g_trial);
        // I(w + δ) - I(w) = δ·(g - λ) + ½ δ·Kδ with Σδ = 0, which avoids
        // differencing two nearly equal energies
        let lambda = dot(&w, &g);
        let change: f64 = trial
            .iter()
            .zip(&w)
            .zip(g.iter().zip(&g_trial))
            .map(|((t, w), (a, b))| (t - w) * ((a - lambda) + 0.5 * (b - a)))
            .sum();
        if !(change <= 0.0) {
            break;
        }
        w = trial;
        std::mem::swap(&mut g, &mut g_trial);
        energy = 0.5 * dot(&w, &g);
        residual = kkt_residual(&w, &g);
        iterations += 1;
    }
    Ok(MeasureResult {
        measure: DiscreteMeasure { weights: w },
        energy,
        iterations,
        kkt_residual: residual,
        converged: residual <= opts.tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexDensity {
    /// Expected number of vortices per cell.
    pub counts: Vec<f64>,
    /// Counts per unit length.
    pub density: Vec<f64>,
    pub total: f64,
    pub energy: f64,
}

/// `β ‖ξ0‖∞ / (2 I*) μ`, per cell and per unit length.
pub fn vortex_count_scaling(beta: f64, xi_max: f64, mu: &DiscreteMeasure, curve: &Curve) -> Result<VortexDensity> {
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta must be nonnegative"));
    }
    let energy = measure_energy(mu, curve)?;
    if !(energy > 0.0) {
        return Err(Error::invalid(format!("measure energy must be positive, got {energy}")));
    }
    let scale = beta * xi_max / (2.0 * energy);
    let counts: Vec<f64> = mu.weights.iter().map(|w| scale * w).collect();
    let density = counts.iter().zip(curve.lengths()).map(|(c, l)| c / l).collect();
    Ok(VortexDensity {
        total: counts.iter().sum(),
        counts,
        density,
        energy,
    })
}
