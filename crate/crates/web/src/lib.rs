//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; the plain `*_json` functions carry the logic
//! so they can be exercised natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use selfsim::evolve::{zero_trajectory, SAMPLE_SPACING};
use selfsim::model::{energy_norm, fundamental_energy};
use selfsim::perturb::perturbed_relative;
use selfsim::spectral::discrete_eigenvalues;
use selfsim::{decay_fit, tune_t, Error, Evolver, Grid, Params, RadialPair};

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn fail(e: Error) -> String {
    e.to_string()
}

/// Spectrum report for exponent `p` on `n` collocation nodes (coarse grid n/1.5).
pub fn spectrum_json(p: f64, n: usize) -> Result<String, String> {
    let params = Params::new(p, 1.0, 0.1).map_err(fail)?;
    let coarse = ((n as f64) / 1.5).floor() as usize;
    let report = discrete_eigenvalues(&params, coarse, n, None).map_err(fail)?;
    to_json(&report)
}

#[derive(Serialize)]
struct Evolution {
    tau: Vec<f64>,
    norm: Vec<f64>,
    unstable_coeff: Vec<f64>,
    t_star: Option<f64>,
    decay_rate: Option<f64>,
    stopped: Option<String>,
}

/// Perturbation norms of one evolution, tuned or at T = 1.
pub fn evolution_json(p: f64, n: usize, amplitude: f64, seed: u64, tune: bool, tau_end: f64) -> Result<String, String> {
    let params = Params::new(p, 1.0, 0.1).map_err(fail)?;
    let big = Grid::new(n, 1.5).map_err(fail)?;
    let v = perturbed_relative(seed, amplitude, &params, &big).map_err(fail)?;
    let ev = Evolver::new(params, n).map_err(fail)?;
    let (traj, t_star, stopped) = if tune {
        let tuned = tune_t(&v, &ev, tau_end).map_err(fail)?;
        (tuned.trajectory, Some(tuned.t_star), None)
    } else {
        let start = ev.initial_state(&v, 1.0).map_err(fail)?;
        if start.max_abs() == 0.0 {
            (zero_trajectory(&ev, tau_end), None, None)
        } else {
            match ev.run(&start, tau_end, true, SAMPLE_SPACING) {
                (traj, None) => (traj, None, None),
                (traj, Some(e @ Error::LeftSmallData { .. })) => (traj, None, Some(e.to_string())),
                (_, Some(e)) => return Err(e.to_string()),
            }
        }
    };
    let decay_rate = t_star.and_then(|_| decay_fit(&traj, (2.0, 8.0f64.min(tau_end))).ok()).map(|f| f.rate);
    to_json(&Evolution {
        tau: traj.taus(),
        norm: traj.samples.iter().map(|s| s.norm).collect(),
        unstable_coeff: traj.samples.iter().map(|s| s.unstable_coeff).collect(),
        t_star,
        decay_rate,
        stopped,
    })
}

#[derive(Serialize)]
struct EnergyCurve {
    t: Vec<f64>,
    energy: Vec<f64>,
    closed_form: Vec<f64>,
    slope: f64,
    predicted_slope: f64,
}

/// Energy of the fundamental solution with T = 1 on the shrinking cone, t in [0, 0.9].
pub fn energy_json(p: f64) -> Result<String, String> {
    let params = Params::new(p, 1.0, 0.1).map_err(fail)?;
    let t: Vec<f64> = (0..=45).map(|i| 0.02 * i as f64).collect();
    let mut energy = Vec::with_capacity(t.len());
    let mut closed_form = Vec::with_capacity(t.len());
    for &ti in &t {
        let grid = Grid::new(24, 1.0 - ti).map_err(fail)?;
        energy.push(energy_norm(&RadialPair::fundamental(&params, ti, grid).map_err(fail)?));
        closed_form.push(fundamental_energy(&params, ti).map_err(fail)?);
    }
    let xs: Vec<f64> = t.iter().map(|ti| (1.0 - ti).ln()).collect();
    let (slope, _) = selfsim::evolve::log_linear_fit(&xs, &energy).map_err(fail)?;
    to_json(&EnergyCurve { t, energy, closed_form, slope, predicted_slope: -(5.0 - p) / (2.0 * (p - 1.0)) })
}

#[wasm_bindgen]
pub fn spectrum(p: f64, n: usize) -> Result<String, JsError> {
    spectrum_json(p, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evolution(p: f64, n: usize, amplitude: f64, seed: u32, tune: bool, tau_end: f64) -> Result<String, JsError> {
    evolution_json(p, n, amplitude, u64::from(seed), tune, tau_end).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn energy(p: f64) -> Result<String, JsError> {
    energy_json(p).map_err(|e| JsError::new(&e))
}
