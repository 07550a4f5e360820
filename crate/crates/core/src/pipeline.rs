//! Stages shared by the command-line commands and the presets. Each stage
//! reads an [`ExperimentConfig`], tags its errors with the stage name and
//! adds its outputs to a [`ReportBundle`].

use serde_json::json;

use crate::config::{ExperimentConfig, LawKind, RegimeConfig, StartStrategy};
use crate::equilibrium::{minimize_measure, Curve, DiscreteMeasure, MeasureOptions, MeasureResult};
use crate::error::{Error, Result};
use crate::field::{build_effective_potential, AppliedField, EffectivePotential};
use crate::gamma3d::{convergence_study, ConvergenceTable, Payload};
use crate::geometry::{Grid2D, ThicknessProfile};
use crate::gl2d::{minimize, random_init, EnergyBreakdown, GlProblem, OrderParameterField};
use crate::report::{csv, Check, ReportBundle};
use crate::search::{Candidate, MultiStart, StartKind};
use crate::vortex::{detect_vortices, match_predictions, MatchReport, VortexOptions, VortexSet};
use crate::xi::{critical_field, find_lambda_set, solve_xi0, CriticalField, LambdaSet, XiField};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "THINFILM_GL_THREADS";

/// Runs `f` on a pool sized by [`THREADS_ENV`] when it is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var(THREADS_ENV) {
        let n: usize = s
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{s}`")))?;
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub struct Setup {
    pub grid: Grid2D,
    pub thick: ThicknessProfile,
    pub pot: EffectivePotential,
}

pub fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let grid = cfg.build_grid().map_err(|e| e.in_stage("domain"))?;
    let thick = cfg.build_thickness(&grid).map_err(|e| e.in_stage("thickness"))?;
    let pot = build_effective_potential(&grid, &thick, cfg.field.alpha, cfg.field.potential)
        .map_err(|e| e.in_stage("potential"))?;
    Ok(Setup { grid, thick, pot })
}

pub struct XiStage {
    pub xi: XiField,
    pub lambda: LambdaSet,
    pub hc1: CriticalField,
}

pub fn xi_stage(cfg: &ExperimentConfig, s: &Setup) -> Result<XiStage> {
    let xi = solve_xi0(&s.grid, &s.thick, &s.pot, &cfg.solver.xi_options()).map_err(|e| e.in_stage("xi-solve"))?;
    let lambda =
        find_lambda_set(&s.grid, &xi, &s.thick, &cfg.solver.lambda_options()).map_err(|e| e.in_stage("lambda-set"))?;
    let hc1 = critical_field(&s.grid, &xi, &s.thick, cfg.field.kappa).map_err(|e| e.in_stage("critical-field"))?;
    Ok(XiStage { xi, lambda, hc1 })
}

/// `xi.csv`, `thickness.csv`, `lambda.json`, `hc1.json`.
pub fn add_xi_outputs(bundle: &mut ReportBundle, s: &Setup, xs: &XiStage) -> Result<()> {
    let rows = s.grid.interior().iter().map(|&id| {
        let x = s.grid.coords(id);
        vec![id as f64, x[0], x[1], xs.xi.xi0[id], xs.xi.xi0[id] / s.thick.d[id]]
    });
    bundle.add_csv("xi.csv", csv(&["node", "x1", "x2", "xi0", "xi0_over_d"], rows));
    let mut thick_csv = Vec::new();
    s.thick.write_csv(&s.grid, &mut thick_csv)?;
    bundle.add_csv("thickness.csv", String::from_utf8(thick_csv).expect("CSV is UTF-8"));
    bundle.add_json(
        "lambda.json",
        json!({
            "points": xs.lambda.points,
            "max_abs_xi_over_d": xs.lambda.max_abs,
            "xi_iterations": xs.xi.iterations,
            "xi_residual": xs.xi.residual_norm,
        }),
    );
    bundle.add_json(
        "hc1.json",
        json!({
            "hc1": xs.hc1.value,
            "hc1_over_ln_kappa": xs.hc1.value / xs.hc1.kappa.ln(),
            "kappa": xs.hc1.kappa,
            "caveat": xs.hc1.caveat,
        }),
    );
    Ok(())
}

/// Field strength from the config; `lambda_over_hc1` needs `hc1`.
pub fn resolve_lambda(cfg: &ExperimentConfig, hc1: Option<&CriticalField>) -> Result<f64> {
    match (cfg.field.lambda, cfg.field.lambda_over_hc1) {
        (Some(l), _) => Ok(l),
        (None, Some(r)) => hc1
            .map(|h| r * h.value)
            .ok_or_else(|| Error::InvalidConfig("lambda_over_hc1 needs the lower critical field".into())),
        (None, None) => Err(Error::InvalidConfig("field.lambda or field.lambda_over_hc1 is required".into())),
    }
}

/// Outcome of one seeded minimization.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub lambda: f64,
    pub field: OrderParameterField,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub start: StartKind,
    pub candidates: Vec<Candidate>,
    pub vortices: VortexSet,
    pub matched: Option<MatchReport>,
}

pub fn minimize_seed(
    cfg: &ExperimentConfig,
    s: &Setup,
    lambda: f64,
    predicted: Option<&LambdaSet>,
    seed: u64,
) -> Result<SeedRun> {
    let kappa = cfg.field.kappa;
    let mode = cfg.solver.gamma_mode;
    let problem = GlProblem::new(&s.grid, &s.thick, &s.pot, lambda, kappa, mode, None)
        .map_err(|e| e.in_stage("minimize"))?;
    let (result, start, candidates) = match cfg.solver.starts {
        StartStrategy::Noise => {
            let v = random_init(problem.gamma_sq(), cfg.solver.noise, seed);
            let init = OrderParameterField::new(&s.grid, v, &s.pot, lambda)?;
            let r = minimize(&problem, init, &cfg.solver.minimize_options()).map_err(|e| e.in_stage("minimize"))?;
            let c = Candidate { kind: StartKind::Noise, energy: r.energy.total, iterations: r.iterations };
            (r, StartKind::Noise, vec![c])
        }
        StartStrategy::Multi => {
            let centers: Vec<([f64; 2], i32)> = predicted
                .map(|p| p.points.iter().map(|q| (q.position, q.predicted_degree_sign)).collect())
                .unwrap_or_default();
            let ms = MultiStart { grid: &s.grid, thick: &s.thick, pot: &s.pot, lambda, kappa, gamma_mode: mode };
            let r = ms
                .run(&centers, seed, &cfg.solver.multistart_options())
                .map_err(|e| e.in_stage("minimize"))?;
            (r.best, r.best_kind, r.candidates)
        }
    };
    let gamma = problem.gamma_sq().iter().fold(0.0f64, |m, &g| m.max(g)).sqrt();
    let vopts = VortexOptions {
        min_modulus: cfg.solver.min_modulus,
        gamma: if gamma > 0.0 { gamma } else { 1.0 },
        ..Default::default()
    };
    let vortices = detect_vortices(&s.grid, &result.field, &vopts).map_err(|e| e.in_stage("vortex-detect"))?;
    let matched = predicted
        .map(|p| match_predictions(&vortices, p, cfg.solver.match_radius))
        .transpose()
        .map_err(|e| e.in_stage("vortex-match"))?;
    Ok(SeedRun {
        seed,
        lambda,
        energy: result.energy,
        iterations: result.iterations,
        converged: result.converged,
        grad_norm: result.grad_norm,
        field: result.field,
        start,
        candidates,
        vortices,
        matched,
    })
}

/// All seeds, in parallel, returned in seed order.
pub fn run_seeds(
    cfg: &ExperimentConfig,
    s: &Setup,
    lambda: f64,
    predicted: Option<&LambdaSet>,
    seeds: &[u64],
) -> Result<Vec<SeedRun>> {
    use rayon::prelude::*;
    seeds.par_iter().map(|&seed| minimize_seed(cfg, s, lambda, predicted, seed)).collect()
}

/// `node, x1, x2, re, im, abs` per interior node.
pub fn field_csv(grid: &Grid2D, field: &OrderParameterField) -> String {
    let rows = grid.interior().iter().zip(&field.v).map(|(&id, z)| {
        let x = grid.coords(id);
        vec![id as f64, x[0], x[1], z.re, z.im, z.norm()]
    });
    csv(&["node", "x1", "x2", "re_v", "im_v", "abs_v"], rows)
}

pub fn seed_summary(run: &SeedRun) -> serde_json::Value {
    json!({
        "seed": run.seed,
        "lambda": run.lambda,
        "energy": run.energy,
        "iterations": run.iterations,
        "converged": run.converged,
        "grad_norm": run.grad_norm,
        "start": run.start,
        "candidates": run.candidates,
        "vortices": run.vortices.vortices,
        "total_degree": run.vortices.total_degree,
        "low_modulus_plaquettes": run.vortices.low_modulus.len(),
        "match": run.matched,
    })
}

/// Applied field for the 3D checks; `lambda` defaults to 1.
pub fn applied_field(cfg: &ExperimentConfig) -> Result<AppliedField> {
    AppliedField::new(cfg.field.lambda.unwrap_or(1.0), cfg.field.alpha, cfg.field.kappa)
}

/// Convergence of the recovery energy along the configured ladder.
pub fn gamma_stage(cfg: &ExperimentConfig, s: &Setup, kind: LawKind) -> Result<ConvergenceTable> {
    let law = cfg.regime.rho_law(kind)?;
    let field = applied_field(cfg)?;
    let payload = (kind != LawKind::Supercritical).then(|| Payload::smooth(&s.grid));
    convergence_study(&s.grid, &s.thick, law, payload.as_ref(), &field, &cfg.regime.ladder, cfg.regime.nz)
        .map_err(|e| e.in_stage("gamma-check"))
}

/// Fraction of the expected order that the finest pair must reach.
pub const ORDER_THRESHOLD: f64 = 0.9;
/// Relative tolerance for the exact normal-state energy.
pub const NORMAL_STATE_TOL: f64 = 1e-10;

/// Expected order of the ladder errors: one, except for the divergent law
/// where the thickness ratio decays like `eps^(1-p)`.
pub fn expected_order(kind: LawKind, regime: &RegimeConfig) -> f64 {
    match kind {
        LawKind::Divergent => 1.0 - regime.p,
        _ => 1.0,
    }
}

pub fn gamma_checks(kind: LawKind, regime: &RegimeConfig, table: &ConvergenceTable) -> Vec<Check> {
    match kind {
        LawKind::Supercritical => {
            vec![Check::new(
                "normal-state energy relative error",
                table.max_relative_error(),
                format!("<= {NORMAL_STATE_TOL:e}"),
                table.max_relative_error() <= NORMAL_STATE_TOL,
            )]
        }
        _ => {
            let order = table.final_order().unwrap_or(f64::NAN);
            let decreasing = table.rows.windows(2).all(|w| w[1].error < w[0].error);
            vec![
                Check::at_least(
                    "observed order toward the limit",
                    order,
                    ORDER_THRESHOLD * expected_order(kind, regime),
                ),
                Check::new("errors decrease along the ladder", decreasing as u8 as f64, "= 1", decreasing),
            ]
        }
    }
}

pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let rows = table.rows.iter().map(|r| vec![r.epsilon, r.energy, table.limit, r.error, r.order.unwrap_or(f64::NAN)]);
    csv(&["epsilon", "energy", "limit", "error", "order"], rows)
}

pub struct EquilibriumStage {
    pub curve: Curve,
    pub result: MeasureResult,
    /// Energy of the arclength measure.
    pub arclength_energy: f64,
}

pub fn equilibrium_stage(cfg: &ExperimentConfig) -> Result<EquilibriumStage> {
    let curve = Curve::parse_spec(&cfg.equilibrium.curve, cfg.equilibrium.cells).map_err(|e| e.in_stage("curve"))?;
    let init = DiscreteMeasure::arclength(&curve);
    let arclength_energy = crate::equilibrium::measure_energy(&init, &curve).map_err(|e| e.in_stage("equilibrium"))?;
    let opts = MeasureOptions { max_iters: cfg.equilibrium.max_iters, tol: cfg.equilibrium.tol };
    let result = minimize_measure(&curve, &init, &opts).map_err(|e| e.in_stage("equilibrium"))?;
    Ok(EquilibriumStage { curve, result, arclength_energy })
}

/// `measure.csv` and `energy.json`.
pub fn add_equilibrium_outputs(bundle: &mut ReportBundle, eq: &EquilibriumStage) {
    let rows = eq
        .curve
        .midpoints()
        .iter()
        .zip(eq.curve.lengths())
        .zip(&eq.result.measure.weights)
        .map(|((m, l), w)| vec![m[0], m[1], *w, w / l]);
    bundle.add_csv("measure.csv", csv(&["x1", "x2", "weight", "density"], rows));
    bundle.add_json(
        "energy.json",
        json!({
            "I": eq.arclength_energy,
            "I_star": eq.result.energy,
            "iterations": eq.result.iterations,
            "converged": eq.result.converged,
            "kkt_residual": eq.result.kkt_residual,
            "cells": eq.curve.n_cells(),
        }),
    );
}
