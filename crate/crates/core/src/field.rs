//! Applied field, regime classification and effective 2D potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid2D, ThicknessProfile};

/// Tolerance on `| |alpha| - 1 |`.
pub const UNIT_TOL: f64 = 1e-12;

/// Constant applied field `h = lambda * alpha` and the GL parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedField {
    pub lambda: f64,
    pub alpha: [f64; 3],
    pub kappa: f64,
}

impl AppliedField {
    pub fn new(lambda: f64, alpha: [f64; 3], kappa: f64) -> Result<Self> {
        check_unit(alpha)?;
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("field magnitude must be >= 0, got {lambda}")));
        }
        if !(kappa > 0.0) {
            return Err(Error::invalid(format!("kappa must be > 0, got {kappa}")));
        }
        Ok(AppliedField { lambda, alpha, kappa })
    }

    /// In-plane part `h' = lambda (alpha1, alpha2)`.
    pub fn h_par(&self) -> [f64; 2] {
        [self.lambda * self.alpha[0], self.lambda * self.alpha[1]]
    }

    pub fn h_par_sq(&self) -> f64 {
        let [a, b] = self.h_par();
        a * a + b * b
    }

    pub fn h3(&self) -> f64 {
        self.lambda * self.alpha[2]
    }
}

pub(crate) fn check_unit(alpha: [f64; 3]) -> Result<()> {
    let norm = (alpha[0] * alpha[0] + alpha[1] * alpha[1] + alpha[2] * alpha[2]).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::invalid(format!("field direction must be a unit vector, |alpha| = {norm}")));
    }
    Ok(())
}

/// How the parallel-field amplification `rho(eps)` scales with thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum RhoLaw {
    /// `rho(eps) = rho`.
    Constant { rho: f64 },
    /// `rho(eps) = c / eps^p`, `0 < p < 1`.
    Divergent { c: f64, p: f64 },
    /// `rho(eps) = l / eps`.
    Critical { l: f64 },
    /// `rho(eps) = c / eps^q`, `q > 1`.
    Supercritical { c: f64, q: f64 },
}

impl RhoLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RhoLaw::Constant { rho } => rho >= 0.0 && rho.is_finite(),
            RhoLaw::Divergent { c, p } => c > 0.0 && p > 0.0 && p < 1.0,
            RhoLaw::Critical { l } => l > 0.0 && l.is_finite(),
            RhoLaw::Supercritical { c, q } => c > 0.0 && q > 1.0 && q.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("rho law parameters out of range: {self:?}")))
        }
    }

    pub fn rho(&self, eps: f64) -> f64 {
        match *self {
            RhoLaw::Constant { rho } => rho,
            RhoLaw::Divergent { c, p } => c / eps.powf(p),
            RhoLaw::Critical { l } => l / eps,
            RhoLaw::Supercritical { c, q } => c / eps.powf(q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SubcriticalFinite,
    SubcriticalInfinite,
    Critical,
    Supercritical,
}

/// Limit of `eps * rho(eps)` decides the regime.
pub fn classify_regime(law: &RhoLaw) -> Regime {
    match law {
        RhoLaw::Constant { .. } => Regime::SubcriticalFinite,
        RhoLaw::Divergent { .. } => Regime::SubcriticalInfinite,
        RhoLaw::Critical { .. } => Regime::Critical,
        RhoLaw::Supercritical { .. } => Regime::Supercritical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `A0 = (-x2, x1)/2`, used with `lambda = h3`.
    SubcriticalPerp,
    /// `A0 = (alpha2, -alpha1) m + alpha3 (-x2, x1)/2`.
    CriticalOblique,
}

/// Fixed vector potential of the reduced 2D energy, sampled on every node.
#[derive(Debug, Clone)]
pub struct EffectivePotential {
    pub a0: Vec<[f64; 2]>,
    /// Discrete curl `∂1 A2 - ∂2 A1`; zero outside the mask.
    pub h0: Vec<f64>,
    pub kind: PotentialKind,
    pub alpha: [f64; 3],
}

impl EffectivePotential {
    /// Parallel field squared for a field of strength `lambda`.
    pub fn h_par_sq(&self, lambda: f64) -> f64 {
        match self.kind {
            PotentialKind::SubcriticalPerp => 0.0,
            PotentialKind::CriticalOblique => {
                lambda * lambda * (self.alpha[0] * self.alpha[0] + self.alpha[1] * self.alpha[1])
            }
        }
    }

    /// `∫_ω d |A0|^2` by the node rule.
    pub fn weighted_norm_sq(&self, grid: &Grid2D, thick: &ThicknessProfile) -> f64 {
        grid.interior()
            .iter()
            .map(|&id| {
                let [a, b] = self.a0[id];
                thick.d[id] * (a * a + b * b)
            })
            .sum::<f64>()
            * grid.cell_area()
    }
}

pub fn build_effective_potential(
    grid: &Grid2D,
    thick: &ThicknessProfile,
    alpha: [f64; 3],
    kind: PotentialKind,
) -> Result<EffectivePotential> {
    check_unit(alpha)?;
    let a0: Vec<[f64; 2]> = (0..grid.n_nodes())
        .map(|id| {
            let [x1, x2] = grid.coords(id);
            match kind {
                PotentialKind::SubcriticalPerp => [-0.5 * x2, 0.5 * x1],
                PotentialKind::CriticalOblique => {
                    let m = thick.m[id];
                    [
                        alpha[1] * m - 0.5 * alpha[2] * x2,
                        -alpha[0] * m + 0.5 * alpha[2] * x1,
                    ]
                }
            }
        })
        .collect();
    let h0 = discrete_curl(grid, &a0);
    Ok(EffectivePotential { a0, h0, kind, alpha })
}

/// Derivative of a nodal quantity along one axis at an interior node:
/// centered if both neighbours are interior, one-sided otherwise.
pub(crate) fn masked_derivative(
    grid: &Grid2D,
    id: usize,
    axis: usize,
    value: impl Fn(usize) -> f64,
) -> f64 {
    let (i, j) = grid.ij(id);
    let (di, dj, h) = if axis == 0 { (1, 0, grid.hx) } else { (0, 1, grid.hy) };
    let fwd = grid.neighbor(i, j, di, dj).filter(|&n| grid.is_interior(n));
    let bwd = grid.neighbor(i, j, -di, -dj).filter(|&n| grid.is_interior(n));
    match (fwd, bwd) {
        (Some(f), Some(b)) => (value(f) - value(b)) / (2.0 * h),
        (Some(f), None) => (value(f) - value(id)) / h,
        (None, Some(b)) => (value(id) - value(b)) / h,
        (None, None) => 0.0,
    }
}

fn discrete_curl(grid: &Grid2D, a0: &[[f64; 2]]) -> Vec<f64> {
    let mut h0 = vec![0.0; grid.n_nodes()];
    for &id in grid.interior() {
        let d1a2 = masked_derivative(grid, id, 0, |n| a0[n][1]);
        let d2a1 = masked_derivative(grid, id, 1, |n| a0[n][0]);
        h0[id] = d1a2 - d2a1;
    }
    h0
}

/// Reduced equilibrium density `sqrt(max(0, 1 - d^2 |h'|^2 / (12 kappa^2)))`.
pub fn gamma_kappa(d: f64, h_par_sq: f64, kappa: f64) -> f64 {
    gamma_kappa_sq(d, h_par_sq, kappa).sqrt()
}

pub(crate) fn gamma_kappa_sq(d: f64, h_par_sq: f64, kappa: f64) -> f64 {
    (1.0 - d * d * h_par_sq / (12.0 * kappa * kappa)).max(0.0)
}

/// Smallest `|h'|` at which the density vanishes somewhere: `sqrt(12) kappa / d_max`.
pub fn normal_state_threshold(kappa: f64, d_max: f64) -> f64 {
    12f64.sqrt() * kappa / d_max
}
