//! Multi-start minimization of the reduced energy.
//!
//! Vortex states and the vortex-free state are separated by energy barriers,
//! so a single descent only finds the basin it starts in. Each seed runs
//! three starts, screens them at a loose tolerance, and polishes the lowest:
//!
//! * `Noise`: a perturbed constant state relaxed at the target field;
//! * `Meissner`: the same start relaxed along a field ramp, which stays on the
//!   vortex-free branch;
//! * `Imprinted`: the ramped state with unit vortices placed at given centres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::EffectivePotential;
use crate::geometry::{Grid2D, ThicknessProfile};
use crate::gl2d::{
    imprint_vortices, minimize, random_init, GammaMode, GlProblem, MinimizeOptions, MinimizeResult,
    OrderParameterField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    Noise,
    Meissner,
    Imprinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartOptions {
    /// Gradient tolerance used to rank the starts.
    pub screen_tol: f64,
    /// Applied to the winner.
    pub polish: MinimizeOptions,
    /// Amplitude of the uniform noise in the initial state.
    pub noise: f64,
    /// Fractions of the target field visited before it, increasing, in (0, 1).
    pub ramp: Vec<f64>,
    /// Maximum displacement of imprinted centres per axis.
    pub jitter: f64,
}

impl Default for MultiStartOptions {
    fn default() -> Self {
        MultiStartOptions {
            screen_tol: 1e-5,
            polish: MinimizeOptions::default(),
            noise: 0.1,
            ramp: vec![0.25, 0.5, 0.75],
            jitter: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: StartKind,
    pub energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct MultiStartResult {
    pub best: MinimizeResult,
    pub best_kind: StartKind,
    /// Screened energies in start order.
    pub candidates: Vec<Candidate>,
}

pub struct MultiStart<'a> {
    pub grid: &'a Grid2D,
    pub thick: &'a ThicknessProfile,
    pub pot: &'a EffectivePotential,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma_mode: GammaMode,
}

impl MultiStart<'_> {
    fn problem(&self, lambda: f64) -> Result<GlProblem<'_>> {
        GlProblem::new(self.grid, self.thick, self.pot, lambda, self.kappa, self.gamma_mode, None)
    }

    /// Runs all starts for one seed. `centers` holds imprint positions with
    /// their degrees; the imprinted start is skipped when it is empty.
    pub fn run(&self, centers: &[([f64; 2], i32)], seed: u64, opts: &MultiStartOptions) -> Result<MultiStartResult> {
        if opts.ramp.iter().any(|&r| !(r > 0.0 && r < 1.0)) || opts.ramp.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("field ramp must increase strictly inside (0, 1)"));
        }
        let target = self.problem(self.lambda)?;
        let screen = MinimizeOptions { grad_tol: opts.screen_tol, ..opts.polish };
        let v0 = random_init(target.gamma_sq(), opts.noise, seed);

        let mut results: Vec<(StartKind, MinimizeResult)> = Vec::with_capacity(3);
        let init = OrderParameterField::new(self.grid, v0.clone(), self.pot, self.lambda)?;
        results.push((StartKind::Noise, minimize(&target, init, &screen)?));

        let mut v = v0;
        for &r in &opts.ramp {
            let p = self.problem(r * self.lambda)?;
            let init = OrderParameterField::new(self.grid, v, self.pot, r * self.lambda)?;
            v = minimize(&p, init, &screen)?.field.v;
        }
        let init = OrderParameterField::new(self.grid, v, self.pot, self.lambda)?;
        let meissner = minimize(&target, init, &screen)?;

        if !centers.is_empty() {
            let v = imprint_vortices(self.grid, &meissner.field.v, centers, self.kappa, opts.jitter, seed);
            let init = OrderParameterField::new(self.grid, v, self.pot, self.lambda)?;
            results.insert(1, (StartKind::Meissner, meissner));
            results.push((StartKind::Imprinted, minimize(&target, init, &screen)?));
        } else {
            results.push((StartKind::Meissner, meissner));
        }

        let candidates: Vec<Candidate> = results
            .iter()
            .map(|(kind, r)| Candidate { kind: *kind, energy: r.energy.total, iterations: r.iterations })
            .collect();
        let mut best_idx = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.energy < candidates[best_idx].energy {
                best_idx = i;
            }
        }
        let (best_kind, winner) = results.swap_remove(best_idx);
        let mut best = minimize(&target, winner.field, &opts.polish)?;
        best.iterations += winner.iterations;
        Ok(MultiStartResult { best, best_kind, candidates })
    }
}
