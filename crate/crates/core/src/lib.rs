//! Thin-film limits of the Ginzburg-Landau energy.
//!
//! The crate covers the full pipeline from a film geometry to numerical
//! diagnostics: the thickness-weighted elliptic problem that locates vortex
//! nucleation points and the lower critical field, a gauge-invariant 2D
//! minimizer with a vortex detector, 3D recovery sequences with convergence
//! checks, and equilibrium measures on curves in the unit disk.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod field;
pub mod fieldspec;
pub mod gamma3d;
pub mod geometry;
pub mod gl2d;
pub mod pipeline;
pub mod preset;
pub mod quadrature;
pub mod report;
pub mod search;
pub mod vortex;
pub mod xi;

pub use error::{Error, Result};
pub use field::{
    build_effective_potential, classify_regime, gamma_kappa, normal_state_threshold, AppliedField,
    EffectivePotential, PotentialKind, Regime, RhoLaw,
};
pub use fieldspec::{FieldSpec, NamedProfile};
pub use geometry::{
    build_disk_domain, build_preset_thickness, build_thickness, Domain, Grid2D, ThicknessPreset,
    ThicknessProfile,
};
pub use gl2d::{
    discrete_energy, energy_gradient, gauge_transform, minimize, renormalized_energy, EnergyBreakdown,
    GammaMode, GlProblem, MinimizeOptions, MinimizeResult, OrderParameterField,
};
pub use num_complex::Complex64;
pub use xi::{critical_field, find_lambda_set, solve_xi0, CriticalField, LambdaOptions, LambdaSet, XiField, XiOptions};
pub use vortex::{detect_vortices, match_predictions, MatchReport, Vortex, VortexOptions, VortexSet};
pub use gamma3d::{
    convergence_study, evaluate_3d_energy, limit_energy, recovery_critical, recovery_subcritical,
    recovery_supercritical, ConvergenceTable, Energy3D, Payload, SlabConfig3D,
};
pub use equilibrium::{
    green_disk, measure_energy, minimize_measure, vortex_count_scaling, Curve, DiscreteMeasure, MeasureOptions,
    MeasureResult, VortexDensity,
};
pub use config::{load_config, ExperimentConfig};
pub use preset::{run_preset, PRESETS};
pub use report::{write_report, Check, ReportBundle};
pub use search::{MultiStart, MultiStartOptions, StartKind};
