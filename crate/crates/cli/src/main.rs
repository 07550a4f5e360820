use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use thinfilm_gl::config::{LawKind, StartStrategy};
use thinfilm_gl::pipeline;
use thinfilm_gl::preset::{preset_config, run_preset_with};
use thinfilm_gl::report::{read_summary, Check, ReportBundle};
use thinfilm_gl::{load_config, write_report, Error, Result};

/// Thin-film Ginzburg-Landau experiments.
///
/// Exit status: 0 when every check passes, 1 on a numerical failure or a
/// failed check, 2 on a configuration error.
#[derive(Parser)]
#[command(name = "thinfilm-gl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for ξ0, locate Λ and the lower critical field.
    SolveXi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize the reduced 2D energy for one seed.
    Minimize {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence of 3D recovery energies toward the 2D limit.
    GammaCheck {
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equilibrium measure of a curve in the unit disk.
    Equilibrium {
        /// `circle:r=R[,cx=X,cy=Y]`.
        #[arg(long)]
        curve: Option<String>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment with its pass/fail thresholds.
    Preset {
        name: String,
        /// Replaces the preset's built-in configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the checks recorded under a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Critical,
    SubFinite,
    SubInfinite,
    Super,
}

impl RegimeArg {
    fn law(self) -> LawKind {
        match self {
            RegimeArg::Critical => LawKind::Critical,
            RegimeArg::SubFinite => LawKind::Constant,
            RegimeArg::SubInfinite => LawKind::Divergent,
            RegimeArg::Super => LawKind::Supercritical,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = pipeline::with_thread_cap(move || run(cli)).and_then(|r| r);
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SolveXi { config, out } => {
            let cfg = load_config(config)?;
            let s = pipeline::setup(&cfg)?;
            let xs = pipeline::xi_stage(&cfg, &s)?;
            let mut b = ReportBundle::new("solve-xi", cfg);
            pipeline::add_xi_outputs(&mut b, &s, &xs)?;
            println!(
                "{} lambda point(s); hc1 = {:.6} (hc1 / ln kappa = {:.6})",
                xs.lambda.points.len(),
                xs.hc1.value,
                xs.hc1.value / xs.hc1.kappa.ln()
            );
            finish(b, out)
        }
        Command::Minimize { config, seed, out } => {
            let cfg = load_config(config)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let s = pipeline::setup(&cfg)?;
            let xs = if cfg.field.lambda_over_hc1.is_some() || cfg.solver.starts == StartStrategy::Multi {
                Some(pipeline::xi_stage(&cfg, &s)?)
            } else {
                None
            };
            let lambda = pipeline::resolve_lambda(&cfg, xs.as_ref().map(|x| &x.hc1))?;
            let run = pipeline::minimize_seed(&cfg, &s, lambda, xs.as_ref().map(|x| &x.lambda), seed)?;
            let mut b = ReportBundle::new(format!("minimize --seed {seed}"), cfg);
            b.add_csv("v.csv", pipeline::field_csv(&s.grid, &run.field));
            b.add_json("energy.json", pipeline::seed_summary(&run));
            b.checks.push(Check::new(
                "minimizer converged",
                run.grad_norm,
                format!("<= {:e}", b.config.solver.grad_tol),
                run.converged,
            ));
            println!(
                "energy {:.12} after {} iterations; {} vortex(es), total degree {}",
                run.energy.total,
                run.iterations,
                run.vortices.vortices.len(),
                run.vortices.total_degree
            );
            finish(b, out)
        }
        Command::GammaCheck { regime, config, out } => {
            let cfg = load_config(config)?;
            let s = pipeline::setup(&cfg)?;
            let law = regime.law();
            let table = pipeline::gamma_stage(&cfg, &s, law)?;
            let mut b = ReportBundle::new("gamma-check", cfg);
            b.add_csv("convergence.csv", pipeline::convergence_csv(&table));
            b.add_json("convergence.json", json!(table));
            b.checks.extend(pipeline::gamma_checks(law, &b.config.regime, &table));
            finish(b, out)
        }
        Command::Equilibrium { curve, cells, config, out } => {
            let mut cfg = match config {
                Some(p) => load_config(p)?,
                None => preset_config("example2-circle-concentration")?,
            };
            if let Some(c) = curve {
                cfg.equilibrium.curve = c;
            }
            if let Some(n) = cells {
                cfg.equilibrium.cells = n;
            }
            cfg.validate()?;
            let eq = pipeline::equilibrium_stage(&cfg)?;
            let mut b = ReportBundle::new("equilibrium", cfg);
            pipeline::add_equilibrium_outputs(&mut b, &eq);
            b.checks.push(Check::new(
                "KKT residual",
                eq.result.kkt_residual,
                format!("<= {:e}", b.config.equilibrium.tol),
                eq.result.converged,
            ));
            println!("I* = {:.12} after {} iterations", eq.result.energy, eq.result.iterations);
            finish(b, out)
        }
        Command::Preset { name, config, out } => {
            let cfg = match config {
                Some(p) => load_config(p)?,
                None => preset_config(&name)?,
            };
            let b = run_preset_with(&name, cfg)?;
            finish(b, out)
        }
        Command::Report { dir } => report(&dir),
    }
}

fn finish(bundle: ReportBundle, out: Option<PathBuf>) -> Result<bool> {
    let dir = out.unwrap_or_else(|| PathBuf::from(&bundle.config.output_dir));
    write_report(&bundle, &dir)?;
    print!("{}", bundle.summary_lines());
    println!("wrote {}", dir.display());
    Ok(bundle.passed())
}

/// Every `summary.json` at `dir` or one level below it.
fn report(dir: &Path) -> Result<bool> {
    let mut paths = vec![];
    let top = dir.join("summary.json");
    if top.is_file() {
        paths.push(top);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    paths.extend(subdirs.into_iter().map(|d| d.join("summary.json")).filter(|p| p.is_file()));
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!("no summary.json under {}", dir.display())));
    }
    let mut all = true;
    for p in paths {
        let (command, checks) = read_summary(&p)?;
        println!("{command} ({})", p.display());
        for c in checks {
            all &= c.passed;
            let tag = if c.passed { "PASS" } else { "FAIL" };
            println!("  {tag} {}: {:e} (threshold {})", c.name, c.value, c.threshold);
        }
    }
    Ok(all)
}
