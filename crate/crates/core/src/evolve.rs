//! Time evolution in similarity coordinates, decay fits, blow-up-time tuning and
//! the independent physical-space solver used to cross-check reconstructed fields.

pub use csv::Error as CsvError;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{mat_vec, Grid};
use crate::model::{nonlin_small_n, u_map, Params, RadialPair, RelativeData};
use crate::spectral::{assemble_l, dense_eigenvalues, riesz_projection, symmetry_mode};
use crate::spectral::{OperatorMatrices, Projection, CONTOUR_POINTS};

/// Spacing of stored trajectory samples in τ.
pub const SAMPLE_SPACING: f64 = 0.1;
/// Runs abort once the perturbation leaves the small-data regime.
pub const AMPLITUDE_GUARD: f64 = 1.0;
pub const OVERFLOW_LIMIT: f64 = 1e12;

/// Perturbation (φ₁, φ₂) at similarity time τ.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub tau: f64,
}

impl State {
    pub fn new(phi1: Vec<f64>, phi2: Vec<f64>, tau: f64) -> Self {
        debug_assert_eq!(phi1.len(), phi2.len());
        Self { phi1, phi2, tau }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; n], 0.0)
    }

    pub fn len(&self) -> usize {
        self.phi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi1.is_empty()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.len(), self.phi1.iter().chain(&self.phi2).copied())
    }

    pub fn from_vector(x: &DVector<f64>, tau: f64) -> Self {
        Self::from_slice(x.as_slice(), tau)
    }

    pub fn from_slice(x: &[f64], tau: f64) -> Self {
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec(), tau)
    }

    fn flat(&self) -> Vec<f64> {
        self.phi1.iter().chain(&self.phi2).copied().collect()
    }

    pub fn inner(&self, grid: &Grid, other: &State) -> f64 {
        grid.inner(&self.phi1, &other.phi1) + grid.inner(&self.phi2, &other.phi2)
    }

    pub fn norm(&self, grid: &Grid) -> f64 {
        self.inner(grid, self).max(0.0).sqrt()
    }

    pub fn scaled(&self, s: f64) -> State {
        State::new(
            self.phi1.iter().map(|v| v * s).collect(),
            self.phi2.iter().map(|v| v * s).collect(),
            self.tau,
        )
    }

    /// self + s·other
    pub fn add_scaled(&self, s: f64, other: &State) -> State {
        State::new(
            self.phi1.iter().zip(&other.phi1).map(|(a, b)| a + s * b).collect(),
            self.phi2.iter().zip(&other.phi2).map(|(a, b)| a + s * b).collect(),
            self.tau,
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.phi1.iter().chain(&self.phi2).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub tau: f64,
    pub state: State,
    pub norm: f64,
    pub unstable_coeff: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    pub grid_n: usize,
    pub samples: Vec<Sample>,
}

#[derive(Serialize)]
struct CsvRow {
    tau: f64,
    norm: f64,
    unstable_coeff: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        &self.samples.last().expect("trajectory has at least one sample").state
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    /// sup over samples of e^{μτ}‖Φ(τ)‖ and the τ where it is attained.
    pub fn weighted_sup(&self, mu: f64) -> (f64, f64) {
        self.samples
            .iter()
            .map(|s| ((mu * s.tau).exp() * s.norm, s.tau))
            .fold((0.0, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
    }

    /// Sample closest to `tau`.
    pub fn at(&self, tau: f64) -> &Sample {
        self.samples
            .iter()
            .min_by(|a, b| (a.tau - tau).abs().total_cmp(&(b.tau - tau).abs()))
            .expect("trajectory has at least one sample")
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(CsvRow { tau: s.tau, norm: s.norm, unstable_coeff: s.unstable_coeff })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything needed to evolve perturbations on one grid.
#[derive(Debug, Clone)]
pub struct Evolver {
    pub params: Params,
    pub grid: Grid,
    pub ops: OperatorMatrices,
    pub projection: Projection,
    pub dt: f64,
    step_limit: f64,
    mode: State,
    mode_norm2: f64,
}

/// |1 + z + z²/2 + z³/6 + z⁴/24|
fn rk4_amplification(z: num_complex::Complex64) -> f64 {
    (1.0 + z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))).norm()
}

/// Largest Δτ keeping every decaying eigenvalue inside the RK4 stability region.
fn rk4_step_limit(eigs: &[num_complex::Complex64]) -> f64 {
    let damped: Vec<_> = eigs.iter().copied().filter(|z| z.re < 0.0).collect();
    let stable = |dt: f64| damped.iter().all(|&z| rk4_amplification(z * dt) <= 1.0 + 1e-12);
    let radius = damped.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if radius == 0.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, 3.0 / radius);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Step that divides the sample spacing evenly and stays below `limit`.
fn snap_step(limit: f64) -> f64 {
    SAMPLE_SPACING / (SAMPLE_SPACING / limit).ceil()
}

impl Evolver {
    pub fn new(params: Params, n: usize) -> Result<Self> {
        let grid = Grid::new(n, 1.0)?;
        let ops = assemble_l(&grid, &params);
        let projection = riesz_projection(&ops, &grid, &params, 1.0, 1.0, CONTOUR_POINTS)?;
        let step_limit = rk4_step_limit(&dense_eigenvalues(&ops)?);
        let mode = symmetry_mode(&grid, &params);
        let mode_norm2 = mode.inner(&grid, &mode);
        Ok(Self {
            params,
            grid,
            ops,
            projection,
            dt: snap_step(0.9 * step_limit),
            step_limit,
            mode,
            mode_norm2,
        })
    }

    /// Use a fixed step; it must respect the RK4 stability limit of the discretized L.
    pub fn with_step(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || dt > self.step_limit {
            return Err(Error::StepSize { dt, limit: self.step_limit });
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn step_limit(&self) -> f64 {
        self.step_limit
    }

    pub fn with_params(&self, params: Params) -> Self {
        Self { params, ..self.clone() }
    }

    pub fn symmetry_mode(&self) -> &State {
        &self.mode
    }

    fn rhs_flat(&self, x: &[f64], nonlinear: bool, tau: f64) -> Result<Vec<f64>> {
        // block form of L: three n×n products instead of one 2n×2n product
        let n = self.grid.n;
        let (p1, p2) = x.split_at(n);
        let d1 = mat_vec(&self.grid.diff, p1);
        let d2 = mat_vec(&self.grid.diff, p2);
        let k2 = mat_vec(&self.grid.volterra, p2);
        let beta = self.params.scaling_exponent();
        let scale = self.params.p * self.params.kappa0;
        let mut y = vec![0.0; 2 * n];
        for i in 1..n {
            let r = self.grid.nodes[i];
            y[i] = -r * d1[i] + d2[i] - beta * p1[i] + scale * k2[i];
            if nonlinear {
                y[i] += nonlin_small_n(&self.params, k2[i] / r, r);
            }
        }
        for i in 0..n {
            let r = self.grid.nodes[i];
            y[n + i] = d1[i] - r * d2[i] - beta * p2[i];
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite() || v.abs() > OVERFLOW_LIMIT) {
            return Err(Error::Overflow {
                tau,
                reason: format!("right-hand side reached {bad:e}"),
            });
        }
        Ok(y)
    }

    /// LΦ plus, when `nonlinear`, the term (ρN(Aφ₂), 0).
    pub fn rhs(&self, state: &State, nonlinear: bool) -> Result<State> {
        let y = self.rhs_flat(&state.flat(), nonlinear, state.tau)?;
        Ok(State::from_slice(&y, state.tau))
    }

    /// The vector nonlinearity (ρN(Aφ₂), 0).
    pub fn nonlinear_part(&self, state: &State) -> State {
        let mut first = crate::model::nonlinear_term(&self.params, &self.grid, &state.phi2);
        first[0] = 0.0;
        State::new(first, vec![0.0; self.grid.n], state.tau)
    }

    fn rk4_step(&self, x: &[f64], dt: f64, nonlinear: bool, tau: f64) -> Result<Vec<f64>> {
        let n = self.grid.n;
        let stage = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
            let mut out: Vec<f64> = base.iter().zip(k).map(|(a, b)| a + h * b).collect();
            out[0] = 0.0;
            out
        };
        let k1 = self.rhs_flat(x, nonlinear, tau)?;
        let k2 = self.rhs_flat(&stage(x, &k1, 0.5 * dt), nonlinear, tau)?;
        let k3 = self.rhs_flat(&stage(x, &k2, 0.5 * dt), nonlinear, tau)?;
        let k4 = self.rhs_flat(&stage(x, &k3, dt), nonlinear, tau)?;
        let mut out: Vec<f64> = (0..2 * n)
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        out[0] = 0.0;
        Ok(out)
    }

    /// a with PΦ = a·g.
    pub fn unstable_coefficient(&self, state: &State) -> f64 {
        let projected = self.projection.apply(state);
        projected.inner(&self.grid, &self.mode) / self.mode_norm2
    }

    fn sample(&self, tau: f64, x: &[f64]) -> Sample {
        let state = State::from_slice(x, tau);
        Sample {
            tau,
            norm: state.norm(&self.grid),
            unstable_coeff: self.unstable_coefficient(&state),
            state,
        }
    }

    /// RK4 from `initial` to `tau_end`, stored every [`SAMPLE_SPACING`] plus a last
    /// sample exactly at `tau_end`. Nonlinear runs abort when ‖Φ‖ exceeds the guard.
    pub fn integrate(&self, initial: &State, tau_end: f64, nonlinear: bool) -> Result<Trajectory> {
        self.integrate_sampled(initial, tau_end, nonlinear, SAMPLE_SPACING)
    }

    pub fn integrate_sampled(
        &self,
        initial: &State,
        tau_end: f64,
        nonlinear: bool,
        spacing: f64,
    ) -> Result<Trajectory> {
        let (traj, err) = self.run(initial, tau_end, nonlinear, spacing);
        match err {
            Some(e) => Err(e),
            None => Ok(traj),
        }
    }

    /// Like [`Self::integrate`] but keeps the samples gathered before an abort.
    pub fn run(
        &self,
        initial: &State,
        tau_end: f64,
        nonlinear: bool,
        spacing: f64,
    ) -> (Trajectory, Option<Error>) {
        let mut traj = Trajectory { params: self.params, grid_n: self.grid.n, samples: Vec::new() };
        if initial.len() != self.grid.n {
            return (traj, Some(Error::domain("initial state does not match the grid")));
        }
        if !(tau_end > initial.tau) {
            return (
                traj,
                Some(Error::domain(format!("tau_end {tau_end} must exceed the start {}", initial.tau))),
            );
        }
        let mut x = initial.flat();
        x[0] = 0.0;
        let tau0 = initial.tau;
        traj.samples.push(self.sample(tau0, &x));
        let intervals = ((tau_end - tau0) / spacing - 1e-9).ceil().max(1.0) as usize;
        for j in 1..=intervals {
            let start = tau0 + (j - 1) as f64 * spacing;
            let stop = if j == intervals { tau_end } else { tau0 + j as f64 * spacing };
            let steps = ((stop - start) / self.dt - 1e-9).ceil().max(1.0) as usize;
            let h = (stop - start) / steps as f64;
            for s in 0..steps {
                let tau = start + s as f64 * h;
                match self.rk4_step(&x, h, nonlinear, tau) {
                    Ok(next) => x = next,
                    Err(e) => return (traj, Some(e)),
                }
            }
            let sample = self.sample(stop, &x);
            let norm = sample.norm;
            traj.samples.push(sample);
            if nonlinear && norm > AMPLITUDE_GUARD {
                return (
                    traj,
                    Some(Error::LeftSmallData { tau: stop, norm }),
                );
            }
        }
        (traj, None)
    }

    /// Max over samples with τ ≤ 3 of ‖Φ(τ) - e^{τL}Φ(0) - ∫₀^τ e^{(τ-s)L}N(Φ(s))ds‖.
    /// Samples must be uniformly spaced; the integral uses composite Simpson where
    /// the interval count is even and a trapezoid-corrected end panel otherwise.
    pub fn duhamel_residual(&self, traj: &Trajectory, nonlinear: bool) -> Result<f64> {
        let samples: Vec<&Sample> = traj
            .samples
            .iter()
            .filter(|s| s.tau - traj.samples[0].tau <= 3.0 + 1e-9)
            .collect();
        if samples.len() < 2 {
            return Ok(0.0);
        }
        let h = samples[1].tau - samples[0].tau;
        let uniform = samples.windows(2).all(|w| ((w[1].tau - w[0].tau) - h).abs() < 1e-9);
        if !uniform || h > SAMPLE_SPACING + 1e-12 {
            return Err(Error::domain("duhamel residual needs uniformly spaced samples (<= 0.1)"));
        }
        let propagator = (&self.ops.l * h).exp();
        let x0 = samples[0].state.to_vector();
        let forcing: Vec<DVector<f64>> = samples
            .iter()
            .map(|s| {
                if nonlinear {
                    self.nonlinear_part(&s.state).to_vector()
                } else {
                    DVector::zeros(2 * self.grid.n)
                }
            })
            .collect();
        // powers[k] = e^{k h L} applied on demand
        let mut worst: f64 = 0.0;
        let mut free = x0.clone();
        // propagated[j] holds e^{(τ_k - τ_j)L} N(Φ(τ_j)) for the current k
        let mut propagated: Vec<DVector<f64>> = Vec::with_capacity(samples.len());
        for k in 0..samples.len() {
            if k > 0 {
                free = &propagator * free;
                for v in propagated.iter_mut() {
                    *v = &propagator * &*v;
                }
            }
            propagated.push(forcing[k].clone());
            let integral = composite_simpson(&propagated, h);
            let resid = samples[k].state.to_vector() - &free - integral;
            worst = worst.max(crate::spectral::grid_norm(&self.grid, &resid));
        }
        Ok(worst)
    }

    /// Initial state U(v, T) on this grid.
    pub fn initial_state(&self, v: &RelativeData, t_blowup: f64) -> Result<State> {
        u_map(v, t_blowup, &self.params, &self.grid)
    }
}

fn composite_simpson(values: &[DVector<f64>], h: f64) -> DVector<f64> {
    let m = values.len() - 1;
    let dim = values[0].len();
    let mut acc = DVector::<f64>::zeros(dim);
    if m == 0 {
        return acc;
    }
    if m == 1 {
        return (&values[0] + &values[1]) * (0.5 * h);
    }
    // Simpson on an even number of panels, 3/8 rule on the last three when odd
    let simpson_end = if m % 2 == 0 { m } else { m - 3 };
    for i in (0..simpson_end).step_by(2) {
        acc += (&values[i] + &values[i + 1] * 4.0 + &values[i + 2]) * (h / 3.0);
    }
    if m % 2 == 1 {
        let i = m - 3;
        acc += (&values[i] + &values[i + 1] * 3.0 + &values[i + 2] * 3.0 + &values[i + 3]) * (3.0 * h / 8.0);
    }
    acc
}

/// Fitted exponential rate and amplitude, ‖Φ(τ)‖ ≈ amplitude · e^{-rate·τ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
}

/// Least-squares line through (x, ln y); returns (slope, intercept).
pub fn log_linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    if let Some(bad) = ys.iter().find(|&&y| !(y > 1e-300) || !y.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-positive value {bad:e} cannot be fitted")));
    }
    let n = xs.len() as f64;
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = logs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

fn fit_window(taus: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 - 1e-9 && **t <= window.1 + 1e-9)
        .map(|(t, v)| (*t, *v))
        .unzip();
    if xs.len() < 10 {
        return Err(Error::DegenerateFit(format!(
            "only {} samples in [{}, {}], need 10",
            xs.len(),
            window.0,
            window.1
        )));
    }
    if let Some(v) = ys.iter().find(|v| !(**v > 1e-14)) {
        return Err(Error::DegenerateFit(format!("norm {v:e} underflowed")));
    }
    let (slope, intercept) = log_linear_fit(&xs, &ys)?;
    Ok(DecayFit { rate: -slope, amplitude: intercept.exp() })
}

/// Decay rate of ‖Φ(τ)‖ over a τ window.
pub fn decay_fit(traj: &Trajectory, window: (f64, f64)) -> Result<DecayFit> {
    let norms: Vec<f64> = traj.samples.iter().map(|s| s.norm).collect();
    fit_window(&traj.taus(), &norms, window)
}

/// Growth rate of |a(τ)| over a τ window (positive for growth).
pub fn growth_fit(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let coeffs: Vec<f64> = traj.samples.iter().map(|s| s.unstable_coeff.abs()).collect();
    Ok(-fit_window(&traj.taus(), &coeffs, window)?.rate)
}

/// Result of blow-up-time tuning.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub t_star: f64,
    pub trajectory: Trajectory,
    pub probe_coeff: f64,
    pub evaluations: usize,
}

const BRACKETS: [f64; 4] = [0.2, 0.3, 0.4, 0.49];

/// Bisection on T for the sign of the unstable coefficient a(τ_end - 1) of the
/// nonlinear evolution from U(v, T).
pub fn tune_t(v: &RelativeData, evolver: &Evolver, tau_end: f64) -> Result<Tuned> {
    if !(tau_end > 1.0) {
        return Err(Error::domain(format!("tau_end must exceed 1 for tuning: got {tau_end}")));
    }
    let probe = tau_end - 1.0;
    let mut evaluations = 0;
    let mut probe_coeff = |t: f64| -> Result<f64> {
        evaluations += 1;
        let params = evolver.params.with_blowup_time(t)?;
        let ev = evolver.with_params(params);
        let start = ev.initial_state(v, t)?;
        if start.max_abs() == 0.0 {
            return Ok(0.0);
        }
        let (traj, err) = ev.run(&start, probe, true, SAMPLE_SPACING);
        match err {
            None | Some(Error::Overflow { .. } | Error::LeftSmallData { .. }) if !traj.samples.is_empty() => {
                Ok(traj.samples.last().map(|s| s.unstable_coeff).unwrap_or(0.0))
            }
            Some(e) => Err(e),
            None => Ok(0.0),
        }
    };

    let mut found = None;
    for &half in &BRACKETS {
        let (lo, hi) = (1.0 - half, 1.0 + half);
        let (a_lo, a_hi) = (probe_coeff(lo)?, probe_coeff(hi)?);
        if a_lo == 0.0 {
            found = Some((lo, lo, 0.0, 0.0));
            break;
        }
        if a_hi == 0.0 {
            found = Some((hi, hi, 0.0, 0.0));
            break;
        }
        if a_lo.signum() != a_hi.signum() {
            found = Some((lo, hi, a_lo, a_hi));
            break;
        }
    }
    let (mut lo, mut hi, a_lo, _) =
        found.ok_or(Error::NoSignChange { lo: 1.0 - BRACKETS[3], hi: 1.0 + BRACKETS[3] })?;
    let sign_lo = a_lo.signum();
    // bisect down to adjacent doubles: near p = 1 the coefficient moves by ~10³ per
    // unit T, and any residual unstable component is amplified by e^τ
    let mut last = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let a = probe_coeff(mid)?;
        last = a;
        if a == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if a.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let params = evolver.params.with_blowup_time(t_star)?;
    let ev = evolver.with_params(params);
    let start = ev.initial_state(v, t_star)?;
    let trajectory = if start.max_abs() == 0.0 {
        zero_trajectory(&ev, tau_end)
    } else {
        ev.integrate(&start, tau_end, true)?
    };
    Ok(Tuned { t_star, trajectory, probe_coeff: last, evaluations })
}

/// The trajectory of the zero perturbation, sampled like [`Evolver::integrate`].
pub fn zero_trajectory(ev: &Evolver, tau_end: f64) -> Trajectory {
    let n = ev.grid.n;
    let count = (tau_end / SAMPLE_SPACING - 1e-9).ceil().max(1.0) as usize;
    let samples = (0..=count)
        .map(|j| {
            let tau = if j == count { tau_end } else { j as f64 * SAMPLE_SPACING };
            Sample { tau, state: State { tau, ..State::zeros(n) }, norm: 0.0, unstable_coeff: 0.0 }
        })
        .collect();
    Trajectory { params: ev.params, grid_n: n, samples }
}

/// ψ and ψ_t on a uniform radial grid at time `t`.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub t: f64,
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_t: Vec<f64>,
}

/// Leapfrog solution of the radial equation for u = rψ,
/// u_tt = u_rr + r|u/r|^{p-1}(u/r), u(t, 0) = 0, with Δt = Δr on a uniform grid that
/// shrinks with the backward lightcone of (T, 0). Returns snapshots at `times`.
pub fn physical_oracle(
    fg: &RadialPair,
    params: &Params,
    times: &[f64],
    dr: f64,
    dt: f64,
) -> Result<Vec<FieldSnapshot>> {
    let t_blowup = params.t_blowup;
    if dt > dr * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, limit: dr });
    }
    if (dt - dr).abs() > 1e-12 * dr {
        return Err(Error::domain("the lightcone leapfrog runs at dt = dr"));
    }
    if fg.radius() < t_blowup - 1e-12 {
        return Err(Error::domain(format!(
            "data known on [0,{}] but the lightcone needs [0,{t_blowup}]",
            fg.radius()
        )));
    }
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    if t_end >= t_blowup - 0.05 {
        return Err(Error::domain(format!(
            "t_end = {t_end} is within 0.05 of the blow-up time {t_blowup}"
        )));
    }
    if times.iter().any(|&t| t < 0.0) {
        return Err(Error::domain("snapshot times must be non-negative"));
    }
    let h = dr;
    let m = (t_blowup / h).floor() as usize;
    let r: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let p = params.p;
    let force = |ri: f64, u: f64| -> f64 {
        if ri == 0.0 {
            return 0.0;
        }
        let psi = u / ri;
        ri * psi.abs().powf(p - 1.0) * psi
    };
    // ∂F/∂u = p|ψ|^{p-1}
    let force_du = |ri: f64, u: f64| -> f64 {
        if ri == 0.0 {
            return 0.0;
        }
        p * (u / ri).abs().powf(p - 1.0)
    };
    let f0: Vec<f64> = r.iter().map(|&x| fg.grid.interpolate(&fg.f, x)).collect();
    let g0: Vec<f64> = r.iter().map(|&x| fg.grid.interpolate(&fg.g, x)).collect();
    let u0: Vec<f64> = r.iter().zip(&f0).map(|(x, f)| x * f).collect();
    let v0: Vec<f64> = r.iter().zip(&g0).map(|(x, g)| x * g).collect();
    // odd extension across r = 0
    let at = |w: &[f64], i: isize| -> f64 { if i < 0 { -w[(-i) as usize] } else { w[i as usize] } };

    // first step: d'Alembert for the free part (Simpson for the velocity integral)
    // plus the source over the characteristic triangle to third order
    let mut u1 = vec![0.0; m];
    for i in 1..m {
        let ii = i as isize;
        let free = 0.5 * (at(&u0, ii + 1) + at(&u0, ii - 1));
        let vel = h / 6.0 * (at(&v0, ii - 1) + 4.0 * v0[i] + at(&v0, ii + 1));
        let s = force(r[i], u0[i]);
        let s_t = force_du(r[i], u0[i]) * v0[i];
        u1[i] = free + vel + 0.5 * h * h * s + h * h * h / 6.0 * s_t;
    }
    let mut snaps = Vec::new();
    let mut wanted: Vec<(usize, f64)> = times.iter().map(|&t| ((t / h).round() as usize, t)).collect();
    wanted.sort_by_key(|w| w.0);

    let snapshot = |t: f64, prev: &[f64], cur: &[f64], next: &[f64], valid: usize| -> FieldSnapshot {
        let mut psi = Vec::with_capacity(valid + 1);
        let mut psi_t = Vec::with_capacity(valid + 1);
        for i in 0..=valid {
            if i == 0 {
                psi.push((8.0 * cur[1] - cur[2]) / (6.0 * h));
                let d1 = (next[1] - prev[1]) / (2.0 * h);
                let d2 = (next[2] - prev[2]) / (2.0 * h);
                psi_t.push((8.0 * d1 - d2) / (6.0 * h));
            } else {
                psi.push(cur[i] / r[i]);
                psi_t.push((next[i] - prev[i]) / (2.0 * h) / r[i]);
            }
        }
        FieldSnapshot { t, r: r[..=valid].to_vec(), psi, psi_t }
    };

    let mut prev = u0.clone();
    let mut cur = u1;
    cur.push(0.0);
    let last_step = wanted.last().map(|w| w.0).unwrap_or(0);
    let mut next = vec![0.0; m + 1];
    let mut w_iter = wanted.into_iter().peekable();
    // snapshots at step 0 need u at t = -h; use time symmetry of the first step
    while let Some(&(k, t)) = w_iter.peek() {
        if k != 0 {
            break;
        }
        let mut back = vec![0.0; m + 1];
        for i in 1..m {
            let ii = i as isize;
            let free = 0.5 * (at(&u0, ii + 1) + at(&u0, ii - 1));
            let vel = h / 6.0 * (at(&v0, ii - 1) + 4.0 * v0[i] + at(&v0, ii + 1));
            let s = force(r[i], u0[i]);
            let s_t = force_du(r[i], u0[i]) * v0[i];
            back[i] = free - vel + 0.5 * h * h * s - h * h * h / 6.0 * s_t;
        }
        snaps.push(snapshot(t, &back, &u0, &cur, m - 2));
        w_iter.next();
    }
    for step in 1..=last_step {
        // cur holds step `step`, valid for i <= m - step
        let valid_next = m.saturating_sub(step + 1);
        if valid_next < 3 {
            return Err(Error::domain("lightcone exhausted before the last snapshot"));
        }
        for i in 1..=valid_next {
            let ii = i as isize;
            next[i] = at(&cur, ii + 1) + at(&cur, ii - 1) - prev[i] + h * h * force(r[i], cur[i]);
            if !next[i].is_finite() || next[i].abs() > OVERFLOW_LIMIT {
                return Err(Error::Overflow {
                    tau: step as f64 * h,
                    reason: "physical solution diverged".into(),
                });
            }
        }
        next[0] = 0.0;
        while let Some(&(k, t)) = w_iter.peek() {
            if k != step {
                break;
            }
            snaps.push(snapshot(t, &prev, &cur, &next, valid_next));
            w_iter.next();
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(snaps)
}

/// Matrix of the linearized flow over one sample interval, used by callers
/// that need powers of e^{hL}.
pub fn propagator(ops: &OperatorMatrices, h: f64) -> DMatrix<f64> {
    (&ops.l * h).exp()
}
