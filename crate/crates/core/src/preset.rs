//! Named end-to-end experiments with built-in pass/fail thresholds.

use serde_json::json;

use crate::config::{ExperimentConfig, LawKind, StartStrategy};
use crate::equilibrium::{vortex_count_scaling, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::gl2d::GammaMode;
use crate::pipeline::{self, Setup};
use crate::report::{Check, ReportBundle};
use crate::xi::interior_error;

pub const PRESETS: [&str; 4] = [
    "example1-tilted-paraboloid",
    "example2-circle-concentration",
    "vertical-disk",
    "supercritical-normal",
];

/// Default configuration of a preset.
pub fn preset_config(name: &str) -> Result<ExperimentConfig> {
    let src = match name {
        "example1-tilted-paraboloid" => {
            r#"
seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
[domain]
n = 129
[thickness]
preset = "tilted-paraboloid"
[field]
lambda_over_hc1 = 1.08
control_over_hc1 = 0.8
alpha = [1.0, 0.0, 0.0]
kappa = 20.0
[solver]
starts = "multi"
"#
        }
        "example2-circle-concentration" => {
            r#"
[domain]
n = 257
[thickness]
preset = "circle-concentration"
[field]
alpha = [1.0, 0.0, 0.0]
kappa = 20.0
[equilibrium]
cells = 256
"#
        }
        "vertical-disk" => {
            r#"
[domain]
n = 129
[thickness]
preset = "flat"
[field]
alpha = [0.0, 0.0, 1.0]
kappa = 20.0
"#
        }
        "supercritical-normal" => {
            r#"
seeds = [0, 1, 2]
[domain]
n = 33
[thickness]
preset = "tilted-paraboloid"
[field]
lambda = 2.0
alpha = [0.5773502691896258, 0.5773502691896258, 0.5773502691896258]
kappa = 3.0
[regime]
law = "supercritical"
[solver]
gamma_mode = "critical"
"#
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    ExperimentConfig::from_toml_str(src)
}

/// Runs a preset with its default configuration.
pub fn run_preset(name: &str) -> Result<ReportBundle> {
    run_preset_with(name, preset_config(name)?)
}

/// Runs a preset pipeline under `cfg`.
pub fn run_preset_with(name: &str, cfg: ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let mut bundle = ReportBundle::new(format!("preset {name}"), cfg.clone());
    match name {
        "example1-tilted-paraboloid" => example1(&cfg, &mut bundle)?,
        "example2-circle-concentration" => example2(&cfg, &mut bundle)?,
        "vertical-disk" => vertical(&cfg, &mut bundle)?,
        "supercritical-normal" => supercritical(&cfg, &mut bundle)?,
        other => return Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
    }
    Ok(bundle)
}

fn inv_sqrt3() -> f64 {
    1.0 / 3f64.sqrt()
}

fn example1(cfg: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let s = pipeline::setup(cfg)?;
    let xs = pipeline::xi_stage(cfg, &s)?;
    pipeline::add_xi_outputs(bundle, &s, &xs)?;
    let h = s.grid.hx;

    let err = interior_error(&s.grid, &xs.xi.xi0, |x| x[0] * (1.0 - x[0] * x[0] - x[1] * x[1]) / 8.0, 0.0);
    bundle.checks.push(Check::below("xi0 max error vs x1(1-|x|^2)/8", err, 5e-4));

    let targets = [([-inv_sqrt3(), 0.0], 1), ([inv_sqrt3(), 0.0], -1)];
    let pts = &xs.lambda.points;
    bundle.checks.push(Check::within("number of lambda points", pts.len() as f64, 2.0, 0.0));
    let mut worst = 0.0f64;
    let mut signs_ok = pts.len() == 2;
    for (at, sign) in targets {
        match pts.iter().min_by(|a, b| dist(a.position, at).total_cmp(&dist(b.position, at))) {
            Some(p) => {
                worst = worst.max(dist(p.position, at));
                signs_ok &= p.predicted_degree_sign == sign;
            }
            None => worst = f64::INFINITY,
        }
    }
    bundle.checks.push(Check::new(
        "lambda points distance to (±1/√3, 0)",
        worst,
        format!("<= 2h = {}", 2.0 * h),
        worst <= 2.0 * h,
    ));
    bundle.checks.push(Check::new("predicted signs (+1 at x1<0, -1 at x1>0)", signs_ok as u8 as f64, "= 1", signs_ok));
    let target = 6.0 * 3f64.sqrt();
    bundle.checks.push(Check::within("hc1 / ln kappa", xs.hc1.value / cfg.field.kappa.ln(), target, 0.02 * target));

    let n = cfg.seeds.len();
    let lambda = pipeline::resolve_lambda(cfg, Some(&xs.hc1))?;
    let runs = pipeline::run_seeds(cfg, &s, lambda, Some(&xs.lambda), &cfg.seeds)?;
    let r = cfg.solver.match_radius;
    let nucleated = runs
        .iter()
        .filter(|run| targets.iter().all(|&(at, deg)| run.vortices.has_vortex_near(deg, at, r)))
        .count();
    let mut seeds_json: Vec<_> = runs.iter().map(pipeline::seed_summary).collect();
    bundle.checks.push(Check::new(
        format!("seeds with matched vortex pair at {lambda:.6}"),
        nucleated as f64,
        format!(">= {} of {n}", (0.8 * n as f64).ceil()),
        nucleated as f64 >= 0.8 * n as f64,
    ));
    if let Some(run) = runs.first() {
        bundle.add_csv("v.csv", pipeline::field_csv(&s.grid, &run.field));
    }

    let mut control = None;
    if let Some(f) = cfg.field.control_over_hc1 {
        let lambda_c = f * xs.hc1.value;
        let runs_c = pipeline::run_seeds(cfg, &s, lambda_c, Some(&xs.lambda), &cfg.seeds)?;
        let clean = runs_c.iter().filter(|run| run.vortices.vortices.is_empty()).count();
        bundle.checks.push(Check::new(
            format!("vortex-free seeds at {lambda_c:.6}"),
            clean as f64,
            format!(">= {} of {n}", (0.9 * n as f64).ceil()),
            clean as f64 >= 0.9 * n as f64,
        ));
        control = Some(json!({ "lambda": lambda_c, "seeds": runs_c.iter().map(pipeline::seed_summary).collect::<Vec<_>>() }));
    }
    seeds_json.shrink_to_fit();
    bundle.add_json(
        "minimize.json",
        json!({ "lambda": lambda, "hc1": xs.hc1.value, "seeds": seeds_json, "control": control }),
    );
    Ok(())
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Largest `|ξ0|` within `3h` of the circle over the global largest.
pub fn circle_concentration_ratio(s: &Setup, xi0: &[f64], radius: f64) -> f64 {
    let h = s.grid.hx;
    let mut on = 0.0f64;
    let mut all = 0.0f64;
    for &id in s.grid.interior() {
        let x = s.grid.coords(id);
        let a = xi0[id].abs();
        all = all.max(a);
        if ((x[0].hypot(x[1])) - radius).abs() < 3.0 * h {
            on = on.max(a);
        }
    }
    on / all
}

fn example2(cfg: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let s = pipeline::setup(cfg)?;
    let xs = pipeline::xi_stage(cfg, &s)?;
    pipeline::add_xi_outputs(bundle, &s, &xs)?;
    let ratio = circle_concentration_ratio(&s, &xs.xi.xi0, inv_sqrt3());
    bundle.checks.push(Check::at_least("max |xi0| near |x| = 1/√3 over global max", ratio, 0.99));

    let eq = pipeline::equilibrium_stage(cfg)?;
    pipeline::add_equilibrium_outputs(bundle, &eq);
    let n = eq.curve.n_cells();
    let uniform = DiscreteMeasure::uniform(n);
    let dev = eq
        .result
        .measure
        .weights
        .iter()
        .zip(&uniform.weights)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / b));
    bundle.checks.push(Check::below("equilibrium weights relative deviation from uniform", dev, 1e-3));
    let oracle = 3f64.ln() / (8.0 * std::f64::consts::PI);
    let rel = (eq.result.energy - oracle).abs() / oracle;
    bundle.checks.push(Check::below("I* relative error vs ln3/(8π)", rel, 1e-3));

    // counts use the closed-form maximum 1/(12√3) of the example
    let xi_max = 1.0 / (12.0 * 3f64.sqrt());
    let beta = cfg.equilibrium.beta;
    let counts = vortex_count_scaling(beta, xi_max, &eq.result.measure, &eq.curve).map_err(|e| e.in_stage("vortex-count"))?;
    let expect = std::f64::consts::PI / (3.0 * 3f64.sqrt() * 3f64.ln());
    bundle.checks.push(Check::within("predicted vortex number / beta", counts.total / beta, expect, 1e-3 * expect));
    bundle.add_json(
        "vortex_count.json",
        json!({
            "beta": beta,
            "xi_max": xi_max,
            "solved_max_abs_xi_over_d": xs.lambda.max_abs,
            "total": counts.total,
            "counts": counts.counts,
        }),
    );
    Ok(())
}

fn vertical(cfg: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let s = pipeline::setup(cfg)?;
    let xs = pipeline::xi_stage(cfg, &s)?;
    pipeline::add_xi_outputs(bundle, &s, &xs)?;
    let err = interior_error(&s.grid, &xs.xi.xi0, |x| (x[0] * x[0] + x[1] * x[1] - 1.0) / 4.0, 0.0);
    bundle.checks.push(Check::below("xi0 max error vs (|x|^2-1)/4", err, 5e-4));
    bundle.checks.push(Check::within("hc1 / ln kappa", xs.hc1.value / cfg.field.kappa.ln(), 2.0, 0.04));
    let ok = xs.lambda.points.len() == 1
        && dist(xs.lambda.points[0].position, [0.0, 0.0]) <= 2.0 * s.grid.hx
        && xs.lambda.points[0].predicted_degree_sign == 1;
    bundle.checks.push(Check::new("single +1 lambda point at the centre", ok as u8 as f64, "= 1", ok));
    Ok(())
}

fn supercritical(cfg: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<()> {
    let s = pipeline::setup(cfg)?;
    let table = pipeline::gamma_stage(cfg, &s, LawKind::Supercritical)?;
    bundle.add_csv("convergence.csv", pipeline::convergence_csv(&table));
    bundle.checks.extend(pipeline::gamma_checks(LawKind::Supercritical, &cfg.regime, &table));
    bundle.add_json("energy.json", json!({ "limit": table.limit, "rows": table.rows }));

    // the reduced 2D problem: γ vanishes once |h'|² reaches 12 κ² d_max²
    let mut c2 = cfg.clone();
    c2.solver.gamma_mode = GammaMode::Critical;
    c2.solver.starts = StartStrategy::Noise;
    let alpha = cfg.field.alpha;
    let par = alpha[0].hypot(alpha[1]);
    if par == 0.0 {
        return Err(Error::InvalidConfig("the normal-state check needs a parallel field component".into()));
    }
    let lambda = 12f64.sqrt() * cfg.field.kappa * s.thick.d_max / par;
    let runs = pipeline::run_seeds(&c2, &s, lambda, None, &cfg.seeds)?;
    let sup = runs
        .iter()
        .flat_map(|r| r.field.v.iter().map(|z| z.norm()))
        .fold(0.0f64, f64::max);
    bundle.checks.push(Check::below("sup |v| at |h'|^2 = 12 kappa^2 d_max^2", sup, 0.05));
    bundle.add_json(
        "normal_2d.json",
        json!({ "lambda": lambda, "sup_abs_v": sup, "seeds": runs.iter().map(pipeline::seed_summary).collect::<Vec<_>>() }),
    );
    Ok(())
}
