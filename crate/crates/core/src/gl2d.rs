//! Reduced 2D Ginzburg-Landau energy on a gauge-invariant lattice.
//!
//! The covariant difference along an edge `t -> h` is `U v_h - v_t` with the
//! link `U = exp(-i λ ∫ A0·dl)` (midpoint rule). Under `v -> v e^{iη}` the
//! links transform as `U -> U e^{-i(η_h - η_t)}` and every edge term is
//! unchanged, so the discrete energy is exactly gauge invariant.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gamma_kappa_sq, EffectivePotential};
use crate::geometry::{Grid2D, ThicknessProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// `γ = 1`.
    One,
    /// `γ² = max(0, 1 - d²|h'|²/(12κ²))` pointwise.
    Critical,
}

/// Complex order parameter on interior nodes plus edge links.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameterField {
    /// Indexed by interior slot.
    pub v: Vec<Complex64>,
    /// Links on [`Grid2D::x_edges`].
    pub ux: Vec<Complex64>,
    /// Links on [`Grid2D::y_edges`].
    pub uy: Vec<Complex64>,
}

/// Links `exp(-i λ A0(mid)·e h)` with `A0(mid)` the mean of the endpoint values.
pub fn link_variables(grid: &Grid2D, pot: &EffectivePotential, lambda: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let nodes = grid.interior();
    let ux = grid
        .x_edges()
        .iter()
        .map(|&(t, h)| {
            let a = 0.5 * (pot.a0[nodes[t]][0] + pot.a0[nodes[h]][0]);
            Complex64::from_polar(1.0, -lambda * a * grid.hx)
        })
        .collect();
    let uy = grid
        .y_edges()
        .iter()
        .map(|&(t, h)| {
            let a = 0.5 * (pot.a0[nodes[t]][1] + pot.a0[nodes[h]][1]);
            Complex64::from_polar(1.0, -lambda * a * grid.hy)
        })
        .collect();
    (ux, uy)
}

impl OrderParameterField {
    pub fn new(grid: &Grid2D, v: Vec<Complex64>, pot: &EffectivePotential, lambda: f64) -> Result<Self> {
        if v.len() != grid.n_interior() {
            return Err(Error::invalid(format!(
                "order parameter has {} values for {} interior nodes",
                v.len(),
                grid.n_interior()
            )));
        }
        let (ux, uy) = link_variables(grid, pot, lambda);
        Ok(OrderParameterField { v, ux, uy })
    }

    pub fn uniform(grid: &Grid2D, value: Complex64, pot: &EffectivePotential, lambda: f64) -> Self {
        Self::new(grid, vec![value; grid.n_interior()], pot, lambda).unwrap()
    }

    /// `conj(v)` with `conj(U)`: the mirror configuration with reversed field.
    pub fn conj(&self) -> Self {
        OrderParameterField {
            v: self.v.iter().map(|z| z.conj()).collect(),
            ux: self.ux.iter().map(|z| z.conj()).collect(),
            uy: self.uy.iter().map(|z| z.conj()).collect(),
        }
    }

    fn check(&self, grid: &Grid2D) -> Result<()> {
        if self.v.len() != grid.n_interior()
            || self.ux.len() != grid.x_edges().len()
            || self.uy.len() != grid.y_edges().len()
        {
            return Err(Error::invalid("order parameter field does not match the grid"));
        }
        Ok(())
    }
}

/// `v -> v e^{iη}`, `U -> U e^{-i(η_h - η_t)}`; `eta` is indexed by slot.
pub fn gauge_transform(grid: &Grid2D, field: &OrderParameterField, eta: &[f64]) -> Result<OrderParameterField> {
    field.check(grid)?;
    if eta.len() != grid.n_interior() {
        return Err(Error::invalid("gauge function must be given on interior nodes"));
    }
    let v = field
        .v
        .iter()
        .zip(eta)
        .map(|(z, &e)| z * Complex64::from_polar(1.0, e))
        .collect();
    let relink = |edges: &[(usize, usize)], links: &[Complex64]| -> Vec<Complex64> {
        edges
            .iter()
            .zip(links)
            .map(|(&(t, h), u)| u * Complex64::from_polar(1.0, -(eta[h] - eta[t])))
            .collect()
    };
    Ok(OrderParameterField {
        v,
        ux: relink(grid.x_edges(), &field.ux),
        uy: relink(grid.y_edges(), &field.uy),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub vertical_b: f64,
    pub potential: f64,
    pub total: f64,
}

/// Precomputed weights of the discrete energy for one set of inputs.
#[derive(Debug, Clone)]
pub struct GlProblem<'a> {
    grid: &'a Grid2D,
    /// `d_face * hy / hx` per x-edge times 1/2.
    wx: Vec<f64>,
    wy: Vec<f64>,
    /// `d κ²/4 · area` per slot.
    wpot: Vec<f64>,
    gamma_sq: Vec<f64>,
    /// `½ d |b|² area` summed; independent of `v`.
    vertical_b: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl<'a> GlProblem<'a> {
    pub fn new(
        grid: &'a Grid2D,
        thick: &ThicknessProfile,
        pot: &EffectivePotential,
        lambda: f64,
        kappa: f64,
        gamma_mode: GammaMode,
        b: Option<&[Complex64]>,
    ) -> Result<Self> {
        if thick.d.len() != grid.n_nodes() || pot.a0.len() != grid.n_nodes() {
            return Err(Error::invalid("thickness or potential does not match the grid"));
        }
        if !(kappa > 0.0) {
            return Err(Error::invalid("kappa must be positive"));
        }
        let nodes = grid.interior();
        let area = grid.cell_area();
        let face = |t: usize, h: usize| 0.5 * (thick.d[nodes[t]] + thick.d[nodes[h]]);
        let wx = grid
            .x_edges()
            .iter()
            .map(|&(t, h)| 0.5 * face(t, h) * grid.hy / grid.hx)
            .collect();
        let wy = grid
            .y_edges()
            .iter()
            .map(|&(t, h)| 0.5 * face(t, h) * grid.hx / grid.hy)
            .collect();
        let wpot = nodes.iter().map(|&id| thick.d[id] * kappa * kappa / 4.0 * area).collect();
        let h_par_sq = pot.h_par_sq(lambda);
        let gamma_sq = nodes
            .iter()
            .map(|&id| match gamma_mode {
                GammaMode::One => 1.0,
                GammaMode::Critical => gamma_kappa_sq(thick.d[id], h_par_sq, kappa),
            })
            .collect();
        let vertical_b = match b {
            None => 0.0,
            Some(b) => {
                if b.len() != grid.n_interior() {
                    return Err(Error::invalid("b must be given on interior nodes"));
                }
                nodes
                    .iter()
                    .zip(b)
                    .map(|(&id, z)| 0.5 * thick.d[id] * z.norm_sqr())
                    .sum::<f64>()
                    * area
            }
        };
        Ok(GlProblem {
            grid,
            wx,
            wy,
            wpot,
            gamma_sq,
            vertical_b,
            kappa,
            lambda,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.grid
    }

    /// Equilibrium density squared per slot.
    pub fn gamma_sq(&self) -> &[f64] {
        &self.gamma_sq
    }

    pub fn energy(&self, field: &OrderParameterField) -> Result<EnergyBreakdown> {
        field.check(self.grid)?;
        Ok(self.energy_unchecked(field))
    }

    fn energy_unchecked(&self, field: &OrderParameterField) -> EnergyBreakdown {
        let v = &field.v;
        let mut kinetic = 0.0;
        for ((&(t, h), u), w) in self.grid.x_edges().iter().zip(&field.ux).zip(&self.wx) {
            kinetic += w * (u * v[h] - v[t]).norm_sqr();
        }
        for ((&(t, h), u), w) in self.grid.y_edges().iter().zip(&field.uy).zip(&self.wy) {
            kinetic += w * (u * v[h] - v[t]).norm_sqr();
        }
        let mut potential = 0.0;
        for ((z, w), g2) in v.iter().zip(&self.wpot).zip(&self.gamma_sq) {
            let s = z.norm_sqr() - g2;
            potential += w * s * s;
        }
        EnergyBreakdown {
            kinetic,
            vertical_b: self.vertical_b,
            potential,
            total: kinetic + self.vertical_b + potential,
        }
    }

    /// `∂E/∂conj(v)` per slot, so that `dE = 2 Re Σ conj(g) dv`.
    pub fn gradient(&self, field: &OrderParameterField) -> Result<Vec<Complex64>> {
        field.check(self.grid)?;
        let mut g = vec![Complex64::new(0.0, 0.0); field.v.len()];
        self.gradient_into(field, &mut g);
        Ok(g)
    }

    fn gradient_into(&self, field: &OrderParameterField, g: &mut [Complex64]) {
        let v = &field.v;
        for ((z, w), (g2, out)) in v.iter().zip(&self.wpot).zip(self.gamma_sq.iter().zip(g.iter_mut())) {
            *out = z * (2.0 * w * (z.norm_sqr() - g2));
        }
        let mut edges = |edges: &[(usize, usize)], links: &[Complex64], weights: &[f64]| {
            for ((&(t, h), u), w) in edges.iter().zip(links).zip(weights) {
                let z = u * v[h] - v[t];
                g[h] += z * u.conj() * *w;
                g[t] -= z * *w;
            }
        };
        edges(self.grid.x_edges(), &field.ux, &self.wx);
        edges(self.grid.y_edges(), &field.uy, &self.wy);
    }

    /// Coefficients `c0..c4` of the quartic `t -> E(v + t p)`.
    fn line_polynomial(&self, field: &OrderParameterField, p: &[Complex64]) -> [f64; 5] {
        let v = &field.v;
        let mut c = [0.0; 5];
        let mut kin = |edges: &[(usize, usize)], links: &[Complex64], weights: &[f64]| {
            for ((&(t, h), u), w) in edges.iter().zip(links).zip(weights) {
                let z = u * v[h] - v[t];
                let q = u * p[h] - p[t];
                c[0] += w * z.norm_sqr();
                c[1] += 2.0 * w * (z.conj() * q).re;
                c[2] += w * q.norm_sqr();
            }
        };
        kin(self.grid.x_edges(), &field.ux, &self.wx);
        kin(self.grid.y_edges(), &field.uy, &self.wy);
        for (k, z) in v.iter().enumerate() {
            let w = self.wpot[k];
            let a0 = z.norm_sqr() - self.gamma_sq[k];
            let a1 = 2.0 * (z.conj() * p[k]).re;
            let a2 = p[k].norm_sqr();
            c[0] += w * a0 * a0;
            c[1] += w * 2.0 * a0 * a1;
            c[2] += w * (a1 * a1 + 2.0 * a0 * a2);
            c[3] += w * 2.0 * a1 * a2;
            c[4] += w * a2 * a2;
        }
        c
    }
}

pub fn discrete_energy(
    grid: &Grid2D,
    field: &OrderParameterField,
    pot: &EffectivePotential,
    thick: &ThicknessProfile,
    lambda: f64,
    kappa: f64,
    gamma_mode: GammaMode,
    b: Option<&[Complex64]>,
) -> Result<EnergyBreakdown> {
    GlProblem::new(grid, thick, pot, lambda, kappa, gamma_mode, b)?.energy(field)
}

pub fn energy_gradient(
    grid: &Grid2D,
    field: &OrderParameterField,
    pot: &EffectivePotential,
    thick: &ThicknessProfile,
    lambda: f64,
    kappa: f64,
    gamma_mode: GammaMode,
) -> Result<Vec<Complex64>> {
    GlProblem::new(grid, thick, pot, lambda, kappa, gamma_mode, None)?.gradient(field)
}

/// `G(v) - (λ²/2) ∫ |A0|²`, defined for unit thickness only.
pub fn renormalized_energy(
    grid: &Grid2D,
    field: &OrderParameterField,
    pot: &EffectivePotential,
    thick: &ThicknessProfile,
    lambda: f64,
    kappa: f64,
) -> Result<f64> {
    if !thick.is_uniform(grid, 1.0, 1e-12) {
        return Err(Error::InvalidHypothesis("renormalized energy requires d = 1".into()));
    }
    let e = discrete_energy(grid, field, pot, thick, lambda, kappa, GammaMode::One, None)?;
    Ok(e.total - 0.5 * lambda * lambda * pot.weighted_norm_sq(grid, thick))
}

/// `v = γ (1 + amplitude (a + i b))` with `a, b ~ U(-1, 1)`.
pub fn random_init(gamma_sq: &[f64], amplitude: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gamma_sq
        .iter()
        .map(|g2| {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            Complex64::new(1.0 + amplitude * a, amplitude * b) * g2.sqrt()
        })
        .collect()
}

/// `base` multiplied by unit-degree vortex factors
/// `((z - a)/|z - a|)^n · κ|z - a| / sqrt(1 + κ²|z - a|²)` at the given
/// centres, each moved by a seeded jitter of at most `jitter` per axis.
pub fn imprint_vortices(
    grid: &Grid2D,
    base: &[Complex64],
    centers: &[([f64; 2], i32)],
    kappa: f64,
    jitter: f64,
    seed: u64,
) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let moved: Vec<([f64; 2], i32)> = centers
        .iter()
        .map(|&(a, n)| {
            let dx: f64 = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            let dy: f64 = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            ([a[0] + dx, a[1] + dy], n)
        })
        .collect();
    let mut v = base.to_vec();
    for (k, z) in v.iter_mut().enumerate() {
        let x = grid.slot_coords(k);
        for &(a, n) in &moved {
            let w = Complex64::new(x[0] - a[0], x[1] - a[1]);
            let r = w.norm();
            if r == 0.0 {
                *z = Complex64::new(0.0, 0.0);
                continue;
            }
            let phase = (w / r).powi(n);
            *z *= phase * (kappa * r / (1.0 + kappa * kappa * r * r).sqrt());
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Bound on `max |∂E/∂conj(v)| / cell_area`.
    pub grad_tol: f64,
    /// Restart with steepest descent every this many iterations.
    pub restart_every: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iters: 20_000,
            grad_tol: 1e-8,
            restart_every: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: OrderParameterField,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

fn grad_max_norm(g: &[Complex64], area: f64) -> f64 {
    g.iter().fold(0.0f64, |m, z| m.max(z.norm())) / area
}

/// Smallest-energy stationary point of the quartic on `t > 0`.
fn quartic_argmin(c: &[f64; 5]) -> Option<f64> {
    let eval = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
    // E'(t) = c1 + 2 c2 t + 3 c3 t² + 4 c4 t³
    let roots = real_cubic_roots(4.0 * c[4], 3.0 * c[3], 2.0 * c[2], c[1]);
    roots
        .into_iter()
        .filter(|&t| t > 0.0 && t.is_finite())
        .map(|t| (t, eval(t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
}

/// Real roots of `a t³ + b t² + c t + d`.
fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return if c != 0.0 { vec![-d / c] } else { vec![] };
        }
        let disc = c * c - 4.0 * b * d;
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (c + c.signum() * disc.sqrt());
        let mut r = vec![];
        if q != 0.0 {
            r.push(d / q);
        }
        r.push(q / b);
        return r;
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // t = y - b/3: y³ + p y + q = 0
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = (3.0 * q / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    // one Newton polish per root
    for t in roots.iter_mut() {
        let f = ((*t + b) * *t + c) * *t + d;
        let df = (3.0 * *t + 2.0 * b) * *t + c;
        if df != 0.0 {
            *t -= f / df;
        }
    }
    roots
}

/// Polak-Ribière nonlinear conjugate gradient with restarts. The step along
/// each search direction minimizes the exact quartic restriction of the
/// energy; iterates that would not decrease the energy are rejected.
pub fn minimize(problem: &GlProblem<'_>, init: OrderParameterField, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    init.check(problem.grid)?;
    let area = problem.grid.cell_area();
    let n = init.v.len();
    let mut field = init;
    let mut energy = problem.energy_unchecked(&field);
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    problem.gradient_into(&field, &mut g);
    let mut dir: Vec<Complex64> = g.iter().map(|z| -z).collect();
    let mut g_new = vec![Complex64::new(0.0, 0.0); n];
    let mut grad_norm = grad_max_norm(&g, area);
    let mut iterations = 0;
    let mut since_restart = 0;
    let mut trial = field.clone();

    while grad_norm > opts.grad_tol && iterations < opts.max_iters {
        let slope: f64 = g.iter().zip(&dir).map(|(g, p)| 2.0 * (g.conj() * p).re).sum();
        if slope >= 0.0 {
            dir.iter_mut().zip(&g).for_each(|(p, g)| *p = -g);
            since_restart = 0;
            continue;
        }
        let coeffs = problem.line_polynomial(&field, &dir);
        let step = match quartic_argmin(&coeffs) {
            Some(t) => t,
            None => break,
        };
        for ((t, v), p) in trial.v.iter_mut().zip(&field.v).zip(&dir) {
            *t = v + p * step;
        }
        // exact change along the line, free of the cancellation in E(new) - E(old)
        let decrement = step * (coeffs[1] + step * (coeffs[2] + step * (coeffs[3] + step * coeffs[4])));
        if !(decrement < 0.0) {
            if since_restart == 0 {
                // steepest descent made no progress: roundoff floor
                break;
            }
            dir.iter_mut().zip(&g).for_each(|(p, g)| *p = -g);
            since_restart = 0;
            continue;
        }
        std::mem::swap(&mut field, &mut trial);
        iterations += 1;
        since_restart += 1;

        problem.gradient_into(&field, &mut g_new);
        grad_norm = grad_max_norm(&g_new, area);
        let gg: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        let gy: f64 = g_new.iter().zip(&g).map(|(a, b)| (a.conj() * (a - b)).re).sum();
        let beta = if since_restart >= opts.restart_every || gg == 0.0 {
            since_restart = 0;
            0.0
        } else {
            (gy / gg).max(0.0)
        };
        for (p, gn) in dir.iter_mut().zip(&g_new) {
            *p = -gn + *p * beta;
        }
        std::mem::swap(&mut g, &mut g_new);
    }
    trial.ux.clear();
    if iterations > 0 {
        energy = problem.energy_unchecked(&field);
    }
    Ok(MinimizeResult {
        converged: grad_norm <= opts.grad_tol,
        field,
        energy,
        iterations,
        grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_effective_potential, PotentialKind};
    use crate::geometry::{build_disk_domain, build_preset_thickness, ThicknessPreset};

    struct Setup {
        grid: Grid2D,
        thick: ThicknessProfile,
        pot: EffectivePotential,
    }

    fn setup(n: usize) -> Setup {
        let grid = build_disk_domain(1.0, n).unwrap();
        let thick = build_preset_thickness(&grid, ThicknessPreset::TiltedParaboloid).unwrap();
        let pot = build_effective_potential(&grid, &thick, [1.0, 0.0, 0.0], PotentialKind::CriticalOblique).unwrap();
        Setup { grid, thick, pot }
    }

    fn random_field(s: &Setup, lambda: f64, seed: u64) -> OrderParameterField {
        let v = random_init(&vec![1.0; s.grid.n_interior()], 0.8, seed);
        OrderParameterField::new(&s.grid, v, &s.pot, lambda).unwrap()
    }

    #[test]
    fn links_are_unit_modulus() {
        let s = setup(17);
        let f = random_field(&s, 7.5, 1);
        assert!(f.ux.iter().chain(&f.uy).all(|u| (u.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ground_state_without_field() {
        let s = setup(17);
        let f = OrderParameterField::uniform(&s.grid, Complex64::new(1.0, 0.0), &s.pot, 0.0);
        let e = discrete_energy(&s.grid, &f, &s.pot, &s.thick, 0.0, 3.0, GammaMode::One, None).unwrap();
        assert_eq!(e.total, 0.0);
        let g = energy_gradient(&s.grid, &f, &s.pot, &s.thick, 0.0, 3.0, GammaMode::One).unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn constant_field_energy_approaches_kinetic_formula() {
        let lambda = 2.0;
        let mut errs = vec![];
        for n in [33, 65, 129] {
            let s = setup(n);
            let f = OrderParameterField::uniform(&s.grid, Complex64::new(1.0, 0.0), &s.pot, lambda);
            let e = discrete_energy(&s.grid, &f, &s.pot, &s.thick, lambda, 5.0, GammaMode::One, None).unwrap();
            let expect = 0.5 * lambda * lambda * s.pot.weighted_norm_sq(&s.grid, &s.thick);
            errs.push((e.total - expect).abs() / expect);
        }
        // the stair-step domain loses an O(h) boundary strip
        assert!(errs[2] < 2e-2, "{errs:?}");
        assert!(errs[0] / errs[1] > 1.8 && errs[1] / errs[2] > 1.8, "{errs:?}");
    }

    #[test]
    fn zero_field_is_pure_potential() {
        let s = setup(33);
        let kappa = 4.0;
        let f = OrderParameterField::uniform(&s.grid, Complex64::new(0.0, 0.0), &s.pot, 3.0);
        let e = discrete_energy(&s.grid, &f, &s.pot, &s.thick, 3.0, kappa, GammaMode::One, None).unwrap();
        let expect = kappa * kappa / 4.0 * s.thick.volume(&s.grid);
        assert!((e.total - expect).abs() < 1e-12 * expect);
        assert_eq!(e.kinetic, 0.0);
    }

    #[test]
    fn breakdown_sums_and_b_term() {
        let s = setup(17);
        let f = random_field(&s, 3.0, 4);
        let b = vec![Complex64::new(0.5, -1.0); s.grid.n_interior()];
        let e = discrete_energy(&s.grid, &f, &s.pot, &s.thick, 3.0, 2.0, GammaMode::One, Some(&b)).unwrap();
        assert!((e.total - (e.kinetic + e.vertical_b + e.potential)).abs() <= 1e-12 * e.total);
        let expect_b = 0.5 * 1.25 * s.thick.volume(&s.grid);
        assert!((e.vertical_b - expect_b).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let s = setup(17);
        let other = setup(9);
        let f = random_field(&other, 1.0, 0);
        assert!(discrete_energy(&s.grid, &f, &s.pot, &s.thick, 1.0, 2.0, GammaMode::One, None).is_err());
        assert!(OrderParameterField::new(&s.grid, vec![Complex64::new(1.0, 0.0); 3], &s.pot, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let s = setup(17);
        let (lambda, kappa) = (6.0, 3.0);
        for seed in 0..3 {
            let f = random_field(&s, lambda, seed);
            let p = GlProblem::new(&s.grid, &s.thick, &s.pot, lambda, kappa, GammaMode::Critical, None).unwrap();
            let g = p.gradient(&f).unwrap();
            let dir = random_init(&vec![1.0; s.grid.n_interior()], 1.0, 100 + seed);
            let analytic: f64 = g.iter().zip(&dir).map(|(g, d)| 2.0 * (g.conj() * d).re).sum();
            let step = 1e-6;
            let shifted = |t: f64| {
                let mut h = f.clone();
                h.v.iter_mut().zip(&dir).for_each(|(v, d)| *v += d * t);
                p.energy(&h).unwrap().total
            };
            let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
            let rel = (analytic - fd).abs() / fd.abs();
            assert!(rel < 1e-6, "seed {seed}: {analytic} vs {fd} (rel {rel})");
        }
    }

    #[test]
    fn global_phase_keeps_gradient_norm() {
        let s = setup(17);
        let f = random_field(&s, 4.0, 9);
        let p = GlProblem::new(&s.grid, &s.thick, &s.pot, 4.0, 2.0, GammaMode::One, None).unwrap();
        let mut rot = f.clone();
        let phase = Complex64::from_polar(1.0, 0.7);
        rot.v.iter_mut().for_each(|z| *z *= phase);
        let n1: f64 = p.gradient(&f).unwrap().iter().map(|z| z.norm_sqr()).sum();
        let n2: f64 = p.gradient(&rot).unwrap().iter().map(|z| z.norm_sqr()).sum();
        assert!((n1 - n2).abs() < 1e-10 * n1);
    }

    #[test]
    fn gauge_invariance() {
        let s = setup(33);
        let lambda = 8.0;
        let f = random_field(&s, lambda, 3);
        let p = GlProblem::new(&s.grid, &s.thick, &s.pot, lambda, 5.0, GammaMode::One, None).unwrap();
        let e0 = p.energy(&f).unwrap().total;
        let cases: Vec<Vec<f64>> = vec![
            vec![1.3; s.grid.n_interior()],
            (0..s.grid.n_interior()).map(|k| s.grid.slot_coords(k)[0]).collect(),
        ];
        for eta in cases {
            let t = gauge_transform(&s.grid, &f, &eta).unwrap();
            let e1 = p.energy(&t).unwrap().total;
            assert!((e1 - e0).abs() <= 1e-12 * e0);
        }
        let constant = gauge_transform(&s.grid, &f, &vec![0.4; s.grid.n_interior()]).unwrap();
        assert_eq!(constant.ux, f.ux);
        assert_eq!(constant.uy, f.uy);
    }

    #[test]
    fn gauge_group_property() {
        let s = setup(17);
        let f = random_field(&s, 2.0, 5);
        let eta1: Vec<f64> = (0..s.grid.n_interior()).map(|k| (k as f64 * 0.37).sin()).collect();
        let eta2: Vec<f64> = (0..s.grid.n_interior()).map(|k| (k as f64 * 0.11).cos()).collect();
        let sum: Vec<f64> = eta1.iter().zip(&eta2).map(|(a, b)| a + b).collect();
        let two = gauge_transform(&s.grid, &gauge_transform(&s.grid, &f, &eta1).unwrap(), &eta2).unwrap();
        let one = gauge_transform(&s.grid, &f, &sum).unwrap();
        for (a, b) in two.v.iter().zip(&one.v).chain(two.ux.iter().zip(&one.ux)) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn renormalized_energy_examples() {
        let s = setup(65);
        let (lambda, kappa) = (3.0, 4.0);
        let one = OrderParameterField::uniform(&s.grid, Complex64::new(1.0, 0.0), &s.pot, lambda);
        let j = renormalized_energy(&s.grid, &one, &s.pot, &s.thick, lambda, kappa).unwrap();
        let scale = 0.5 * lambda * lambda * s.pot.weighted_norm_sq(&s.grid, &s.thick);
        assert!(j.abs() < 5e-2 * scale, "J = {j}, scale {scale}");
        let zero = OrderParameterField::uniform(&s.grid, Complex64::new(0.0, 0.0), &s.pot, lambda);
        let j0 = renormalized_energy(&s.grid, &zero, &s.pot, &s.thick, lambda, kappa).unwrap();
        let area = s.grid.n_interior() as f64 * s.grid.cell_area();
        assert!((j0 - (kappa * kappa / 4.0 * area - scale)).abs() < 1e-10);
        let rnd = random_field(&s, lambda, 2);
        let eta: Vec<f64> = (0..s.grid.n_interior()).map(|k| s.grid.slot_coords(k)[1] * 2.0).collect();
        let moved = gauge_transform(&s.grid, &rnd, &eta).unwrap();
        let a = renormalized_energy(&s.grid, &rnd, &s.pot, &s.thick, lambda, kappa).unwrap();
        let b = renormalized_energy(&s.grid, &moved, &s.pot, &s.thick, lambda, kappa).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs());

        let grid = build_disk_domain(1.0, 17).unwrap();
        let thick = crate::geometry::build_thickness(
            &grid,
            &crate::fieldspec::FieldSpec::constant(0.0),
            &crate::fieldspec::FieldSpec::parse("1 + x1^2").unwrap(),
        )
        .unwrap();
        let pot = build_effective_potential(&grid, &thick, [0.0, 0.0, 1.0], PotentialKind::SubcriticalPerp).unwrap();
        let f = OrderParameterField::uniform(&grid, Complex64::new(1.0, 0.0), &pot, 1.0);
        assert!(matches!(
            renormalized_energy(&grid, &f, &pot, &thick, 1.0, 2.0),
            Err(Error::InvalidHypothesis(_))
        ));
    }

    #[test]
    fn cubic_roots() {
        let mut r = real_cubic_roots(1.0, -6.0, 11.0, -6.0);
        r.sort_by(f64::total_cmp);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = real_cubic_roots(0.0, 1.0, -3.0, 2.0);
        assert_eq!(r.len(), 2);
        let r = real_cubic_roots(1.0, 0.0, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert_eq!(quartic_argmin(&[1.0, -2.0, 1.0, 0.0, 0.0]), Some(1.0));
    }

    #[test]
    fn minimize_zero_field_reaches_ground_state() {
        let s = setup(17);
        let p = GlProblem::new(&s.grid, &s.thick, &s.pot, 0.0, 3.0, GammaMode::One, None).unwrap();
        let init = OrderParameterField::new(&s.grid, random_init(p.gamma_sq(), 0.1, 11), &s.pot, 0.0).unwrap();
        let r = minimize(&p, init, &MinimizeOptions::default()).unwrap();
        assert!(r.converged, "grad {}", r.grad_norm);
        assert!(r.energy.total < 1e-10);
        assert!(r.field.v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn minimizer_modulus_is_independent_of_kappa() {
        let s = setup(17);
        for kappa in [1.0, 5.0, 20.0] {
            let p = GlProblem::new(&s.grid, &s.thick, &s.pot, 0.0, kappa, GammaMode::One, None).unwrap();
            let init = OrderParameterField::new(&s.grid, random_init(p.gamma_sq(), 0.1, 2), &s.pot, 0.0).unwrap();
            let r = minimize(&p, init, &MinimizeOptions::default()).unwrap();
            assert!(r.field.v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6), "kappa {kappa}");
        }
    }

    #[test]
    fn minimize_is_monotone() {
        let s = setup(17);
        let lambda = 5.0;
        let p = GlProblem::new(&s.grid, &s.thick, &s.pot, lambda, 4.0, GammaMode::One, None).unwrap();
        let mut field = random_field(&s, lambda, 8);
        let mut prev = p.energy(&field).unwrap().total;
        for _ in 0..20 {
            let opts = MinimizeOptions { max_iters: 5, ..Default::default() };
            let r = minimize(&p, field, &opts).unwrap();
            assert!(r.energy.total <= prev);
            prev = r.energy.total;
            field = r.field;
        }
    }

    #[test]
    fn normal_state_when_density_vanishes() {
        let s = setup(17);
        let kappa = 2.0;
        let lambda = 1.01 * 12f64.sqrt() * kappa;
        let p = GlProblem::new(&s.grid, &s.thick, &s.pot, lambda, kappa, GammaMode::Critical, None).unwrap();
        assert!(p.gamma_sq().iter().all(|&g| g == 0.0));
        let v = random_init(&vec![1.0; s.grid.n_interior()], 0.1, 3);
        let init = OrderParameterField::new(&s.grid, v, &s.pot, lambda).unwrap();
        let opts = MinimizeOptions { max_iters: 2000, ..Default::default() };
        let r = minimize(&p, init, &opts).unwrap();
        assert!(r.field.v.iter().all(|z| z.norm() < 0.05));
    }
}
