//! Experiment configuration files.
//!
//! TOML with flat tables. Unknown keys are rejected, omitted keys take the
//! defaults below, and the resolved configuration is what reports echo.
//!
//! ```toml
//! schema_version = 1
//! seeds = [0, 1, 2]
//!
//! [domain]
//! radius = 1.0
//! n = 129
//!
//! [thickness]
//! preset = "tilted-paraboloid"   # or f = "...", g = "..."
//!
//! [field]
//! lambda_over_hc1 = 1.08         # or lambda = 33.6
//! alpha = [1.0, 0.0, 0.0]
//! kappa = 20.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{PotentialKind, RhoLaw};
use crate::fieldspec::FieldSpec;
use crate::geometry::{build_disk_domain, build_preset_thickness, build_thickness, Grid2D, ThicknessPreset, ThicknessProfile};
use crate::gl2d::{GammaMode, MinimizeOptions};
use crate::search::MultiStartOptions;
use crate::xi::{LambdaOptions, XiOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub domain: DomainConfig,
    #[serde(default = "flat_thickness")]
    pub thickness: ThicknessConfig,
    pub field: FieldConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub equilibrium: EquilibriumConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub radius: f64,
    /// Nodes per side of the enclosing square.
    pub n: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { radius: 1.0, n: 129 }
    }
}

/// Without a `[thickness]` table the film is flat.
fn flat_thickness() -> ThicknessConfig {
    ThicknessConfig { preset: Some(ThicknessPreset::Flat), f: None, g: None }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThicknessConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<ThicknessPreset>,
    /// Lower surface, in the field-spec language.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// Absolute field strength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Field strength in units of the computed lower critical field.
    /// The 1.08 / 0.8 nucleation window is a calibration choice, not a
    /// derived constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_over_hc1: Option<f64>,
    /// Second field strength, in units of the lower critical field, at
    /// which presets expect no vortices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_over_hc1: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: [f64; 3],
    pub kappa: f64,
    #[serde(default = "default_potential")]
    pub potential: PotentialKind,
}

fn default_alpha() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_potential() -> PotentialKind {
    PotentialKind::CriticalOblique
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Constant,
    Divergent,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeConfig {
    pub law: LawKind,
    /// `ρ` of the constant law.
    pub rho: f64,
    /// Prefactor of the divergent and supercritical laws.
    pub c: f64,
    /// Exponent of the divergent law, in (0, 1).
    pub p: f64,
    /// `ε ρ(ε)` of the critical law.
    pub l: f64,
    /// Exponent of the supercritical law, > 1.
    pub q: f64,
    pub ladder: Vec<f64>,
    /// Gauss-Legendre points across the film.
    pub nz: usize,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig {
            law: LawKind::Critical,
            rho: 1.0,
            c: 1.0,
            p: 0.5,
            l: 1.0,
            q: 2.0,
            ladder: vec![0.2, 0.1, 0.05, 0.025],
            nz: crate::gamma3d::DEFAULT_NZ,
        }
    }
}

impl RegimeConfig {
    pub fn rho_law(&self, kind: LawKind) -> Result<RhoLaw> {
        let law = match kind {
            LawKind::Constant => RhoLaw::Constant { rho: self.rho },
            LawKind::Divergent => RhoLaw::Divergent { c: self.c, p: self.p },
            LawKind::Critical => RhoLaw::Critical { l: self.l },
            LawKind::Supercritical => RhoLaw::Supercritical { c: self.c, q: self.q },
        };
        law.validate()?;
        Ok(law)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartStrategy {
    /// One seeded noise start per seed.
    Noise,
    /// Noise, field-ramped and Λ-imprinted starts; the lowest is kept.
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub xi_tol: f64,
    pub xi_max_iters: usize,
    pub lambda_rel_tol: f64,
    pub lambda_cluster_h: f64,
    pub gamma_mode: GammaMode,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub restart_every: usize,
    pub starts: StartStrategy,
    pub noise: f64,
    pub screen_tol: f64,
    pub ramp: Vec<f64>,
    pub jitter: f64,
    pub min_modulus: f64,
    pub match_radius: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let xi = XiOptions::default();
        let lam = LambdaOptions::default();
        let min = MinimizeOptions::default();
        let ms = MultiStartOptions::default();
        SolverConfig {
            xi_tol: xi.tol,
            xi_max_iters: xi.max_iters,
            lambda_rel_tol: lam.rel_tol,
            lambda_cluster_h: lam.cluster_radius_h,
            gamma_mode: GammaMode::One,
            grad_tol: min.grad_tol,
            max_iters: min.max_iters,
            restart_every: min.restart_every,
            starts: StartStrategy::Noise,
            noise: ms.noise,
            screen_tol: ms.screen_tol,
            ramp: ms.ramp,
            jitter: ms.jitter,
            min_modulus: crate::vortex::VortexOptions::default().min_modulus,
            match_radius: 0.15,
        }
    }
}

impl SolverConfig {
    pub fn xi_options(&self) -> XiOptions {
        XiOptions { tol: self.xi_tol, max_iters: self.xi_max_iters }
    }

    pub fn lambda_options(&self) -> LambdaOptions {
        LambdaOptions { rel_tol: self.lambda_rel_tol, cluster_radius_h: self.lambda_cluster_h }
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions { max_iters: self.max_iters, grad_tol: self.grad_tol, restart_every: self.restart_every }
    }

    pub fn multistart_options(&self) -> MultiStartOptions {
        MultiStartOptions {
            screen_tol: self.screen_tol,
            polish: self.minimize_options(),
            noise: self.noise,
            ramp: self.ramp.clone(),
            jitter: self.jitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumConfig {
    /// `circle:r=R[,cx=X,cy=Y]`.
    pub curve: String,
    pub cells: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Vortex-count scale; a free input.
    pub beta: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        let m = crate::equilibrium::MeasureOptions::default();
        EquilibriumConfig {
            curve: format!("circle:r={}", 1.0 / 3f64.sqrt()),
            cells: 256,
            tol: m.tol,
            max_iters: m.max_iters,
            beta: 10.0,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The resolved configuration, defaults included.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.domain.radius > 0.0 && self.domain.radius.is_finite()) {
            return bad(format!("domain.radius must be positive, got {}", self.domain.radius));
        }
        if self.domain.n < 5 {
            return bad(format!("domain.n must be at least 5, got {}", self.domain.n));
        }
        match (&self.thickness.preset, &self.thickness.f, &self.thickness.g) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => return bad("thickness takes either `preset` or both `f` and `g`".into()),
        }
        for spec in [&self.thickness.f, &self.thickness.g].into_iter().flatten() {
            FieldSpec::parse(spec)?;
        }
        if self.field.lambda.is_some() && self.field.lambda_over_hc1.is_some() {
            return bad("field takes at most one of `lambda` and `lambda_over_hc1`".into());
        }
        if let Some(l) = self.field.lambda.or(self.field.lambda_over_hc1) {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("field strength must be nonnegative, got {l}"));
            }
        }
        if let Some(c) = self.field.control_over_hc1 {
            if !(c >= 0.0 && c.is_finite()) {
                return bad(format!("field.control_over_hc1 must be nonnegative, got {c}"));
            }
        }
        if !(self.field.kappa > 1.0 && self.field.kappa.is_finite()) {
            return bad(format!("field.kappa must exceed 1, got {}", self.field.kappa));
        }
        let a = self.field.alpha;
        if ((a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt() - 1.0).abs() > 1e-9 {
            return bad(format!("field.alpha must be a unit vector, got {a:?}"));
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let s = &self.solver;
        if !(s.min_modulus > 0.0 && s.min_modulus < 1.0) {
            return bad(format!("solver.min_modulus must lie in (0, 1), got {}", s.min_modulus));
        }
        if !(s.match_radius > 0.0) || !(s.grad_tol > 0.0) || !(s.xi_tol > 0.0) || !(s.screen_tol > 0.0) {
            return bad("solver tolerances and match_radius must be positive".into());
        }
        if s.ramp.iter().any(|&r| !(r > 0.0 && r < 1.0)) || s.ramp.windows(2).any(|w| w[0] >= w[1]) {
            return bad("solver.ramp must increase strictly inside (0, 1)".into());
        }
        if self.regime.ladder.len() < 3 || self.regime.ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("regime.ladder needs at least 3 strictly decreasing entries".into());
        }
        if self.regime.ladder.iter().any(|&e| !(e > 0.0)) {
            return bad("regime.ladder entries must be positive".into());
        }
        if self.regime.nz < 2 {
            return bad("regime.nz must be at least 2".into());
        }
        self.regime.rho_law(self.regime.law)?;
        if self.equilibrium.cells < 3 {
            return bad("equilibrium.cells must be at least 3".into());
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid2D> {
        build_disk_domain(self.domain.radius, self.domain.n)
    }

    pub fn build_thickness(&self, grid: &Grid2D) -> Result<ThicknessProfile> {
        match (&self.thickness.preset, &self.thickness.f, &self.thickness.g) {
            (Some(p), _, _) => build_preset_thickness(grid, *p),
            (None, Some(f), Some(g)) => build_thickness(grid, &FieldSpec::parse(f)?, &FieldSpec::parse(g)?),
            _ => Err(Error::InvalidConfig("thickness is not specified".into())),
        }
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&src)
}
