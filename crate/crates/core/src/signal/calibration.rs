//! Derivative-free fit of `(k_n, k_d)` to a measured force-response curve.
//!
//! The search runs in log space: a coarse 7×7 grid around the initial guess
//! seeds a pattern search (axis and diagonal moves, halving the step on
//! failure). The initial guess and the two best grid points each start one
//! search; the best end point wins.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::curve::{ForceResponseCurve, PressScene};
use super::SignalError;
use crate::contact::ContactParams;

/// Whether the curve carries information about the damping coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdConfidence {
    Constrained,
    /// Doubling `k_d` changes the error by less than 1e-9.
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub k_n: f64,
    pub k_d: f64,
    pub mse: f64,
    pub initial_mse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub k_d_confidence: KdConfidence,
}

impl CalibrationResult {
    pub fn params(&self) -> ContactParams {
        ContactParams {
            k_n: self.k_n,
            k_d: self.k_d,
            ..ContactParams::default()
        }
    }

    /// JSON object with one field per line.
    pub fn to_report(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"k_n\": {:e},", self.k_n);
        let _ = writeln!(s, "  \"k_d\": {:e},", self.k_d);
        let _ = writeln!(s, "  \"mse\": {:e},", self.mse);
        let _ = writeln!(s, "  \"initial_mse\": {:e},", self.initial_mse);
        let _ = writeln!(s, "  \"iterations\": {},", self.iterations);
        let _ = writeln!(s, "  \"converged\": {},", self.converged);
        let kd = match self.k_d_confidence {
            KdConfidence::Constrained => "constrained",
            KdConfidence::Unconstrained => "unconstrained",
        };
        let _ = writeln!(s, "  \"k_d_confidence\": \"{kd}\"");
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub budget: usize,
    pub scene: PressScene,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            budget: 200,
            scene: PressScene::default(),
        }
    }
}

pub fn fit_contact_params(
    measured: &ForceResponseCurve,
    init: &ContactParams,
    budget: usize,
) -> Result<CalibrationResult, SignalError> {
    let opts = FitOptions {
        budget,
        ..FitOptions::default()
    };
    fit_contact_params_with(measured, init, &opts)
}

pub fn fit_contact_params_with(
    measured: &ForceResponseCurve,
    init: &ContactParams,
    opts: &FitOptions,
) -> Result<CalibrationResult, SignalError> {
    measured.validate()?;
    if !(init.k_n > 0.0 && init.k_d > 0.0) {
        return Err(SignalError::InvalidParameter(format!(
            "initial parameters must be positive, got k_n = {}, k_d = {}",
            init.k_n, init.k_d
        )));
    }
    let readings = measured.readings();
    let lo = readings.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = readings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-15 {
        return Err(SignalError::UninformativeCurve);
    }

    let objective = Objective {
        curve: measured,
        scene: &opts.scene,
        template: *init,
        start: [init.k_n.ln(), init.k_d.ln()],
    };
    let start = objective.start;
    let initial_mse = objective.eval(start);

    let mut best = Search {
        x: start,
        mse: initial_mse,
        iterations: 0,
        converged: initial_mse == 0.0,
    };
    if !best.converged {
        let mut starts = vec![(start, initial_mse)];
        starts.extend(objective.grid_seeds(start).into_iter().take(2));
        let mut remaining = opts.budget;
        let mut total_iterations = 0;
        for (x0, f0) in starts {
            let run = pattern_search(&objective, x0, f0, remaining);
            remaining -= run.iterations;
            total_iterations += run.iterations;
            if run.mse < best.mse || (run.mse == best.mse && run.converged && !best.converged) {
                best = run;
            }
            if remaining == 0 {
                break;
            }
        }
        best.iterations = total_iterations;
    }

    let ContactParams { k_n, k_d, .. } = objective.params(best.x);
    let doubled = objective.eval([best.x[0], best.x[1] + std::f64::consts::LN_2]);
    let k_d_confidence = if (doubled - best.mse).abs() < 1e-9 {
        KdConfidence::Unconstrained
    } else {
        KdConfidence::Constrained
    };
    Ok(CalibrationResult {
        k_n,
        k_d,
        mse: best.mse,
        initial_mse,
        iterations: best.iterations,
        converged: best.converged,
        k_d_confidence,
    })
}

struct Objective<'a> {
    curve: &'a ForceResponseCurve,
    scene: &'a PressScene,
    template: ContactParams,
    start: [f64; 2],
}

impl Objective<'_> {
    /// The start point maps back to the exact initial parameters.
    fn params(&self, x: [f64; 2]) -> ContactParams {
        if x == self.start {
            return self.template;
        }
        ContactParams {
            k_n: x[0].exp(),
            k_d: x[1].exp(),
            ..self.template
        }
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        let params = self.params(x);
        let sse: f64 = self
            .curve
            .samples
            .iter()
            .map(|s| {
                let (sim, _) = self.scene.reading(&params, s.load, s.rate);
                (sim - s.reading).powi(2)
            })
            .sum();
        sse / self.curve.samples.len() as f64
    }

    /// Grid points around `center` spaced by factors of 2, best first.
    fn grid_seeds(&self, center: [f64; 2]) -> Vec<([f64; 2], f64)> {
        let ln2 = std::f64::consts::LN_2;
        let points: Vec<[f64; 2]> = (-3..=3)
            .flat_map(|i| {
                (-3..=3).map(move |j| [center[0] + i as f64 * ln2, center[1] + j as f64 * ln2])
            })
            .filter(|p| *p != center)
            .collect();
        let mut scored: Vec<([f64; 2], f64)> =
            points.par_iter().map(|&p| (p, self.eval(p))).collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        scored
    }
}

struct Search {
    x: [f64; 2],
    mse: f64,
    iterations: usize,
    converged: bool,
}

const MOVES: [[f64; 2]; 8] = [
    [1.0, 0.0],
    [-1.0, 0.0],
    [0.0, 1.0],
    [0.0, -1.0],
    [1.0, 1.0],
    [-1.0, -1.0],
    [1.0, -1.0],
    [-1.0, 1.0],
];

/// Stops when the error hits zero, the step underflows, or the relative
/// improvement over the last 10 iterations drops below 1e-6 once the step has
/// shrunk well below the grid spacing.
fn pattern_search(obj: &Objective, x0: [f64; 2], f0: f64, budget: usize) -> Search {
    let mut x = x0;
    let mut f = f0;
    let mut step = std::f64::consts::LN_2;
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < budget {
        iterations += 1;
        let mut improved = false;
        for m in MOVES {
            let cand = [x[0] + m[0] * step, x[1] + m[1] * step];
            let fc = obj.eval(cand);
            if fc < f {
                x = cand;
                f = fc;
                improved = true;
            }
        }
        if !improved {
            step /= 2.0;
        }
        history.push(f);
        if f == 0.0 || step < 1e-12 {
            converged = true;
            break;
        }
        if history.len() > 10 && step < 1e-3 {
            let old = history[history.len() - 11];
            if (old - f) <= 1e-6 * old {
                converged = true;
                break;
            }
        }
    }
    Search {
        x,
        mse: f,
        iterations,
        converged,
    }
}
