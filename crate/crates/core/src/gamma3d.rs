//! Full rescaled 3D energy on recovery sequences and the 2D limits.
//!
//! For a payload `(v, b)` on the film's mid-surface the recovery sequence is
//! `u = e^{i A3 x3} (v + ε b x3)` with the applied potential
//! `A = (A⊥' + θ (x3/2)(h2, -h1), θ (h1 x2 - h2 x1)/2)`, `θ = ε ρ(ε)`.
//! The induced field equals the applied one, so the field energy vanishes,
//! and `ε⁻¹ (∂3 - i A3) u = b e^{i A3 x3}` holds exactly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{masked_derivative, AppliedField, Regime, RhoLaw};
use crate::geometry::{Grid2D, ThicknessProfile};
use crate::quadrature::{gauss_legendre, mapped};

pub const DEFAULT_NZ: usize = 8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Mid-surface data of a recovery sequence, indexed by interior slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub v: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl Payload {
    pub fn from_fn(grid: &Grid2D, v: impl Fn([f64; 2]) -> Complex64, b: impl Fn([f64; 2]) -> Complex64) -> Self {
        Payload {
            v: (0..grid.n_interior()).map(|k| v(grid.slot_coords(k))).collect(),
            b: (0..grid.n_interior()).map(|k| b(grid.slot_coords(k))).collect(),
        }
    }

    /// A smooth, non-constant payload used by the CLI and the checks.
    pub fn smooth(grid: &Grid2D) -> Self {
        Self::from_fn(
            grid,
            |[x1, x2]| Complex64::from_polar(0.9 - 0.2 * (x1 * x1 + x2 * x2), 0.7 * x1 - 0.4 * x2),
            |[x1, x2]| Complex64::new(0.3 + 0.2 * x2, -0.1 + 0.25 * x1),
        )
    }
}

/// A recovery configuration on the rescaled slab over `grid`.
#[derive(Debug, Clone)]
pub struct SlabConfig3D<'a> {
    pub grid: &'a Grid2D,
    pub thick: &'a ThicknessProfile,
    pub nz: usize,
    pub epsilon: f64,
    pub law: RhoLaw,
    pub regime: Regime,
    /// `None` for the normal-state configuration.
    pub payload: Option<Payload>,
}

fn build<'a>(
    grid: &'a Grid2D,
    thick: &'a ThicknessProfile,
    law: RhoLaw,
    eps: f64,
    payload: Option<Payload>,
    nz: usize,
) -> Result<SlabConfig3D<'a>> {
    law.validate()?;
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("epsilon must be > 0, got {eps}")));
    }
    if nz < 2 {
        return Err(Error::invalid(format!("need at least 2 vertical quadrature points, got {nz}")));
    }
    if let Some(p) = &payload {
        if p.v.len() != grid.n_interior() || p.b.len() != grid.n_interior() {
            return Err(Error::invalid("payload must live on the interior nodes"));
        }
    }
    Ok(SlabConfig3D {
        grid,
        thick,
        nz,
        epsilon: eps,
        regime: crate::field::classify_regime(&law),
        law,
        payload,
    })
}

/// Critical regime, `ε ρ(ε) = l` for every `ε`.
pub fn recovery_critical<'a>(
    grid: &'a Grid2D,
    thick: &'a ThicknessProfile,
    payload: Payload,
    eps: f64,
    l: f64,
    nz: usize,
) -> Result<SlabConfig3D<'a>> {
    build(grid, thick, RhoLaw::Critical { l }, eps, Some(payload), nz)
}

/// Subcritical regimes; `law` must be constant or divergent.
pub fn recovery_subcritical<'a>(
    grid: &'a Grid2D,
    thick: &'a ThicknessProfile,
    payload: Payload,
    eps: f64,
    law: RhoLaw,
    nz: usize,
) -> Result<SlabConfig3D<'a>> {
    let cfg = build(grid, thick, law, eps, Some(payload), nz)?;
    match cfg.regime {
        Regime::SubcriticalFinite | Regime::SubcriticalInfinite => Ok(cfg),
        r => Err(Error::InvalidConfig(format!("{r:?} law given for a subcritical recovery"))),
    }
}

/// Normal state `u = 0` with the applied potential.
pub fn recovery_supercritical<'a>(
    grid: &'a Grid2D,
    thick: &'a ThicknessProfile,
    eps: f64,
    law: RhoLaw,
    nz: usize,
) -> Result<SlabConfig3D<'a>> {
    let cfg = build(grid, thick, law, eps, None, nz)?;
    if cfg.regime != Regime::Supercritical {
        return Err(Error::InvalidConfig(format!("{:?} law given for the normal state", cfg.regime)));
    }
    Ok(cfg)
}

/// `A⊥' = (h3/2)(-x2, x1)`.
fn a_perp(field: &AppliedField, x: [f64; 2]) -> [f64; 2] {
    let h3 = field.h3();
    [-0.5 * h3 * x[1], 0.5 * h3 * x[0]]
}

/// `H = (h2, -h1)`.
fn h_rot(field: &AppliedField) -> [f64; 2] {
    let [h1, h2] = field.h_par();
    [h2, -h1]
}

/// `(h1 x2 - h2 x1)/2`.
fn a_par3(field: &AppliedField, x: [f64; 2]) -> f64 {
    let [h1, h2] = field.h_par();
    0.5 * (h1 * x[1] - h2 * x[0])
}

impl SlabConfig3D<'_> {
    /// `θ = ε ρ(ε)`.
    pub fn theta(&self) -> f64 {
        self.epsilon * self.law.rho(self.epsilon)
    }

    fn payload(&self) -> Result<&Payload> {
        self.payload
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{:?} recovery needs a (v, b) payload", self.regime)))
    }

    /// `A3` at the interior node `slot`.
    pub fn a3(&self, slot: usize, field: &AppliedField) -> f64 {
        self.theta() * a_par3(field, self.grid.slot_coords(slot))
    }

    /// Order parameter `u(x', x3)` at the interior node `slot`.
    pub fn order_parameter(&self, slot: usize, x3: f64, field: &AppliedField) -> Result<Complex64> {
        let p = self.payload()?;
        let w = p.v[slot] + p.b[slot] * (self.epsilon * x3);
        Ok(Complex64::from_polar(1.0, self.a3(slot, field) * x3) * w)
    }

    /// `ε⁻¹ (∂3 - i A3) u`, from the closed-form cancellation.
    pub fn vertical_derivative(&self, slot: usize, x3: f64, field: &AppliedField) -> Result<Complex64> {
        let p = self.payload()?;
        Ok(Complex64::from_polar(1.0, self.a3(slot, field) * x3) * p.b[slot])
    }
}

/// Node gradients of a slot field by masked centered differences.
fn slot_gradient(grid: &Grid2D, values: &[Complex64]) -> Vec<[Complex64; 2]> {
    let at = |n: usize| values[grid.slot(n)];
    grid.interior()
        .iter()
        .map(|&id| {
            let d = |axis| {
                Complex64::new(
                    masked_derivative(grid, id, axis, |n| at(n).re),
                    masked_derivative(grid, id, axis, |n| at(n).im),
                )
            };
            [d(0), d(1)]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy3D {
    pub horizontal: f64,
    pub vertical: f64,
    pub potential: f64,
    /// Vanishes identically for the supported recovery families.
    pub field: f64,
    pub total: f64,
}

impl Energy3D {
    fn new(horizontal: f64, vertical: f64, potential: f64) -> Self {
        Energy3D {
            horizontal,
            vertical,
            potential,
            field: 0.0,
            total: horizontal + vertical + potential,
        }
    }
}

/// Tensor-product quadrature of the rescaled 3D energy: node cells in `x'`
/// and `nz`-point Gauss-Legendre over `[f, g]` in every column.
pub fn evaluate_3d_energy(cfg: &SlabConfig3D<'_>, field: &AppliedField) -> Result<Energy3D> {
    if cfg.nz < 2 {
        return Err(Error::invalid(format!("need at least 2 vertical quadrature points, got {}", cfg.nz)));
    }
    let grid = cfg.grid;
    let kappa2 = field.kappa * field.kappa;
    let area = grid.cell_area();
    if cfg.regime == Regime::Supercritical {
        if cfg.payload.is_some() {
            return Err(Error::InvalidConfig("the normal-state configuration carries no payload".into()));
        }
        // u = 0: only the potential survives, with a constant integrand
        let pot = 0.25 * kappa2 * cfg.thick.volume(grid);
        return Ok(Energy3D::new(0.0, 0.0, pot));
    }
    let p = cfg.payload()?;
    let (gx, gw) = gauss_legendre(cfg.nz)?;
    let grad_v = slot_gradient(grid, &p.v);
    let grad_b = slot_gradient(grid, &p.b);
    let theta = cfg.theta();
    let eps = cfg.epsilon;
    let hr = h_rot(field);
    let terms: Vec<[f64; 3]> = (0..grid.n_interior())
        .into_par_iter()
        .map(|k| {
            let id = grid.interior()[k];
            let x = grid.coords(id);
            let ap = a_perp(field, x);
            let (mut hor, mut ver, mut pot) = (0.0, 0.0, 0.0);
            for (x3, w) in mapped(&gx, &gw, cfg.thick.f[id], cfg.thick.g[id]) {
                let u = p.v[k] + p.b[k] * (eps * x3);
                let mut sq = 0.0;
                for axis in 0..2 {
                    let du = grad_v[k][axis] + grad_b[k][axis] * (eps * x3);
                    let a = ap[axis] + theta * x3 * hr[axis];
                    sq += (du - I * a * u).norm_sqr();
                }
                hor += w * 0.5 * sq;
                ver += w * 0.5 * p.b[k].norm_sqr();
                let s = 1.0 - u.norm_sqr();
                pot += w * 0.25 * kappa2 * s * s;
            }
            [hor * area, ver * area, pot * area]
        })
        .collect();
    let mut sum = [0.0; 3];
    for t in &terms {
        for (s, v) in sum.iter_mut().zip(t) {
            *s += v;
        }
    }
    Ok(Energy3D::new(sum[0], sum[1], sum[2]))
}

/// Limit of `ε ρ(ε)` as `ε -> 0` for the non-supercritical laws.
fn limit_theta(law: &RhoLaw) -> f64 {
    match *law {
        RhoLaw::Critical { l } => l,
        _ => 0.0,
    }
}

/// Regime-appropriate 2D limit energy, evaluated with the same node rule
/// and node gradients as [`evaluate_3d_energy`]. The critical limit uses
/// `B' = A⊥' + l m (h2, -h1)` and the `l² d² |h'|²/12` term; subcritical
/// limits use `A⊥'` with the Cosserat term equal to zero.
pub fn limit_energy(
    grid: &Grid2D,
    thick: &ThicknessProfile,
    law: &RhoLaw,
    payload: Option<&Payload>,
    field: &AppliedField,
) -> Result<f64> {
    law.validate()?;
    let regime = crate::field::classify_regime(law);
    let kappa2 = field.kappa * field.kappa;
    match (regime, payload) {
        (Regime::Supercritical, None) => Ok(0.25 * kappa2 * thick.volume(grid)),
        (Regime::Supercritical, Some(_)) => Err(Error::InvalidConfig(
            "the supercritical limit is the normal state and takes no payload".into(),
        )),
        (_, None) => Err(Error::InvalidConfig(format!("{regime:?} limit needs a (v, b) payload"))),
        (_, Some(p)) => {
            if p.v.len() != grid.n_interior() || p.b.len() != grid.n_interior() {
                return Err(Error::invalid("payload must live on the interior nodes"));
            }
            let theta = limit_theta(law);
            let hr = h_rot(field);
            let hpar2 = field.h_par_sq();
            let grad_v = slot_gradient(grid, &p.v);
            let total: f64 = grid
                .interior()
                .iter()
                .enumerate()
                .map(|(k, &id)| {
                    let x = grid.coords(id);
                    let d = thick.d[id];
                    let ap = a_perp(field, x);
                    let v = p.v[k];
                    let mut kin = 0.0;
                    for axis in 0..2 {
                        let bp = ap[axis] + theta * thick.m[id] * hr[axis];
                        kin += (grad_v[k][axis] - I * bp * v).norm_sqr();
                    }
                    let s = 1.0 - v.norm_sqr();
                    let tilt = theta * theta * d * d * hpar2 / 12.0 * v.norm_sqr();
                    0.5 * d * (kin + p.b[k].norm_sqr() + tilt + 0.5 * kappa2 * s * s)
                })
                .sum();
            Ok(total * grid.cell_area())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub energy: f64,
    pub error: f64,
    /// `ln(e_{k-1}/e_k) / ln(ε_{k-1}/ε_k)`; absent on the first row or
    /// when an error vanishes.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub regime: Regime,
    pub limit: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Order between the two finest rungs.
    pub fn final_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.rows.iter().fold(0.0f64, |m, r| m.max(r.error / self.limit.abs()))
    }
}

/// Evaluates the recovery energy along `eps_ladder` and its distance to
/// the limit.
pub fn convergence_study(
    grid: &Grid2D,
    thick: &ThicknessProfile,
    law: RhoLaw,
    payload: Option<&Payload>,
    field: &AppliedField,
    eps_ladder: &[f64],
    nz: usize,
) -> Result<ConvergenceTable> {
    if eps_ladder.len() < 3 {
        return Err(Error::invalid("the epsilon ladder needs at least 3 entries"));
    }
    if eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("the epsilon ladder must be strictly decreasing"));
    }
    let limit = limit_energy(grid, thick, &law, payload, field)?;
    let mut rows: Vec<ConvergenceRow> = vec![];
    for &eps in eps_ladder {
        let cfg = build(grid, thick, law, eps, payload.cloned(), nz)?;
        let energy = evaluate_3d_energy(&cfg, field)?.total;
        let error = (energy - limit).abs();
        let order = rows.last().and_then(|prev| {
            (prev.error > 0.0 && error > 0.0).then(|| (prev.error / error).ln() / (prev.epsilon / eps).ln())
        });
        rows.push(ConvergenceRow {
            epsilon: eps,
            energy,
            error,
            order,
        });
    }
    Ok(ConvergenceTable {
        regime: crate::field::classify_regime(&law),
        limit,
        rows,
    })
}
