use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use selfsim::evolve::{growth_fit, zero_trajectory, SAMPLE_SPACING};
use selfsim::model::{energy_norm, fundamental_energy, reconstruct_field};
use selfsim::perturb::perturbed_relative;
use selfsim::spectral::discrete_eigenvalues;
use selfsim::validate::{run_all, Check, ValidateConfig};
use selfsim::{decay_fit, tune_t, Error, Evolver, Grid, Params, RadialPair, SpectrumReport, Trajectory};

use crate::{EnergyArgs, EvolveArgs, Failure, SpectrumArgs, ValidateArgs};

/// Radius of the data grid; every admissible T lies below it.
const DATA_RADIUS: f64 = 1.5;

/// Perturbation size up to which untuned runs are fitted.
const LINEAR_REGIME: f64 = 0.1;

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Summaries go to stdout when the data went to a file, else to stderr.
fn print_summary(summary: &impl Serialize, data_in_file: bool) -> Result<(), Failure> {
    let line = serde_json::to_string(summary)?;
    if data_in_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn spectrum_for(p: f64, args: &SpectrumArgs) -> Result<SpectrumReport, Failure> {
    let params = Params::new(p, 1.0, args.model.eps)?;
    Grid::new(args.model.n, 1.0)?;
    let coarse = (args.model.n as f64 / 1.5).floor() as usize;
    if coarse < selfsim::grid::MIN_NODES {
        return Err(Error::Domain(format!(
            "spectrum needs n >= 24 so that the coarse grid has 16 nodes: got {}",
            args.model.n
        ))
        .into());
    }
    Ok(discrete_eigenvalues(&params, coarse, args.model.n, args.halfplane)?)
}

pub fn spectrum(args: &SpectrumArgs) -> Result<u8, Failure> {
    let mut w = sink(args.model.out.as_deref())?;
    if args.sweep.is_empty() {
        serde_json::to_writer_pretty(&mut w, &spectrum_for(args.model.p, args)?)?;
    } else {
        let reports: Vec<Result<SpectrumReport, Failure>> = std::thread::scope(|s| {
            let handles: Vec<_> =
                args.sweep.iter().map(|&p| s.spawn(move || spectrum_for(p, args))).collect();
            handles.into_iter().map(|h| h.join().expect("spectrum worker panicked")).collect()
        });
        let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
        serde_json::to_writer_pretty(&mut w, &reports)?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    p: f64,
    n: usize,
    seed: u64,
    amplitude: f64,
    tau_end: f64,
    tau_reached: f64,
    tuned: bool,
    t_blowup: f64,
    t_star: Option<f64>,
    tuning_evaluations: Option<usize>,
    decay_rate: Option<f64>,
    decay_amplitude: Option<f64>,
    unstable_growth_rate: Option<f64>,
    mu: f64,
    x_norm: f64,
    x_norm_tau: f64,
    initial_norm: f64,
    stopped: Option<String>,
}

pub fn evolve(args: &EvolveArgs) -> Result<u8, Failure> {
    let m = &args.model;
    let params = Params::new(m.p, args.t_blowup, m.eps)?;
    if !(args.tau_end > 0.0) || !args.tau_end.is_finite() {
        return Err(Error::Domain(format!("tau-end must be positive: got {}", args.tau_end)).into());
    }
    let big = Grid::new(m.n, DATA_RADIUS)?;
    let v = perturbed_relative(args.seed, args.amplitude, &params, &big)?;
    let ev = Evolver::new(params, m.n)?;

    let mut stopped = None;
    let (traj, t_blowup, t_star, evaluations) = if args.tune && !args.no_tune {
        let tuned = tune_t(&v, &ev, args.tau_end)?;
        (tuned.trajectory, tuned.t_star, Some(tuned.t_star), Some(tuned.evaluations))
    } else {
        let start = ev.initial_state(&v, args.t_blowup)?;
        let traj = if start.max_abs() == 0.0 {
            zero_trajectory(&ev, args.tau_end)
        } else {
            let (traj, err) = ev.run(&start, args.tau_end, true, SAMPLE_SPACING);
            if let Some(e) = err {
                match e {
                    Error::LeftSmallData { .. } => {
                        eprintln!("warning: {e}; keeping the trajectory up to there");
                        stopped = Some(e.to_string());
                    }
                    _ => return Err(e.into()),
                }
            }
            traj
        };
        (traj, args.t_blowup, None, None)
    };

    let tau_reached = traj.samples.last().map(|s| s.tau).unwrap_or(0.0);
    let mut window = (2.0, 8.0f64.min(tau_reached));
    if t_star.is_none() {
        // untuned runs grow; past this size the nonlinearity bends the exponential
        if let Some(s) = traj.samples.iter().find(|s| s.norm > LINEAR_REGIME) {
            window.1 = window.1.min(s.tau);
        }
    }
    let fit = decay_fit(&traj, window).ok();
    let growth = if t_star.is_none() { growth_fit(&traj, window).ok() } else { None };
    let run_params = params.with_blowup_time(t_blowup)?;
    let (x_norm, x_norm_tau) = traj.weighted_sup(run_params.mu);

    let mut w = sink(m.out.as_deref())?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    drop(w);

    if let Some(path) = &args.field {
        write_field(&traj, &run_params, &ev, path)?;
    }

    let summary = EvolveSummary {
        p: m.p,
        n: m.n,
        seed: args.seed,
        amplitude: args.amplitude,
        tau_end: args.tau_end,
        tau_reached,
        tuned: t_star.is_some(),
        t_blowup,
        t_star,
        tuning_evaluations: evaluations,
        decay_rate: fit.map(|f| f.rate),
        decay_amplitude: fit.map(|f| f.amplitude),
        unstable_growth_rate: growth,
        mu: run_params.mu,
        x_norm,
        x_norm_tau,
        initial_norm: traj.samples.first().map(|s| s.norm).unwrap_or(0.0),
        stopped,
    };
    print_summary(&summary, m.out.is_some())?;
    Ok(0)
}

fn write_field(traj: &Trajectory, params: &Params, ev: &Evolver, path: &Path) -> Result<(), Failure> {
    let last = traj.final_state();
    let field = reconstruct_field(last, last.tau, params, &ev.grid)?;
    let t = params.t_blowup - (-last.tau).exp();
    field.write_field_csv(t, BufWriter::new(File::create(path)?))?;
    Ok(())
}

struct EnergyRow {
    t: f64,
    energy: f64,
    closed_form: f64,
}

#[derive(Debug, Serialize)]
struct EnergySummary {
    p: f64,
    t_blowup: f64,
    slope: f64,
    predicted_slope: f64,
}

pub fn energy(args: &EnergyArgs) -> Result<u8, Failure> {
    // the margin plays no role for the fundamental solution
    let params = Params::new(args.p, args.t_blowup, 0.1)?;
    if args.samples < 2 {
        return Err(Error::Domain(format!("samples must be at least 2: got {}", args.samples)).into());
    }
    let mut rows = Vec::with_capacity(args.samples);
    for i in 0..args.samples {
        let t = 0.9 * args.t_blowup * i as f64 / (args.samples - 1) as f64;
        let width = args.t_blowup - t;
        let fg = RadialPair::fundamental(&params, t, Grid::new(24, width)?)?;
        rows.push(EnergyRow {
            t,
            energy: energy_norm(&fg),
            closed_form: fundamental_energy(&params, t)?,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (args.t_blowup - r.t).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let (slope, _) = selfsim::evolve::log_linear_fit(&xs, &ys)?;

    let mut w = sink(args.out.as_deref())?;
    writeln!(w, "t,energy,closed_form")?;
    for r in &rows {
        writeln!(w, "{},{},{}", r.t, r.energy, r.closed_form)?;
    }
    w.flush()?;
    drop(w);
    let summary = EnergySummary {
        p: args.p,
        t_blowup: args.t_blowup,
        slope,
        predicted_slope: -(5.0 - args.p) / (2.0 * (args.p - 1.0)),
    };
    print_summary(&summary, args.out.is_some())?;
    Ok(0)
}

fn validate_for(p: f64, args: &ValidateArgs) -> Result<Vec<Check>, Failure> {
    let mut params = Params::new(p, 1.0, args.model.eps)?;
    if args.inject_fault {
        params = params.with_flipped_nonlinearity();
    }
    Grid::new(args.model.n, 1.0)?;
    let cfg = ValidateConfig {
        params,
        n: args.model.n,
        seed: args.seed,
        amplitude: args.amplitude,
        tau_end: args.tau_end,
    };
    Ok(run_all(&cfg))
}

pub fn validate(args: &ValidateArgs) -> Result<u8, Failure> {
    let runs: Vec<(Option<f64>, Vec<Check>)> = if args.sweep.is_empty() {
        vec![(None, validate_for(args.model.p, args)?)]
    } else {
        let results: Vec<Result<Vec<Check>, Failure>> = std::thread::scope(|s| {
            let handles: Vec<_> =
                args.sweep.iter().map(|&p| s.spawn(move || validate_for(p, args))).collect();
            handles.into_iter().map(|h| h.join().expect("validation worker panicked")).collect()
        });
        let mut runs = Vec::new();
        for (p, r) in args.sweep.iter().zip(results) {
            runs.push((Some(*p), r?));
        }
        runs
    };
    let mut w = sink(args.model.out.as_deref())?;
    let mut failures = 0;
    for (p, checks) in &runs {
        for c in checks {
            if !c.passed {
                failures += 1;
            }
            match p {
                Some(p) => writeln!(w, "p={p} {c}")?,
                None => writeln!(w, "{c}")?,
            }
        }
    }
    let total: usize = runs.iter().map(|(_, c)| c.len()).sum();
    writeln!(w, "{} of {total} checks passed", total - failures)?;
    w.flush()?;
    Ok(if failures == 0 { 0 } else { 1 })
}
