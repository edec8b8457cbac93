//! Closed-form objects: model constants, the fundamental self-similar solution,
//! the nonlinearity, the averaging operator, the data maps between physical
//! Cauchy data and similarity-coordinate states, and the local energy norm.

use crate::error::{Error, Result};
use crate::evolve::State;
use crate::grid::Grid;

/// Model constants for a fixed exponent `p`, blow-up time `T` and rate loss `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub p: f64,
    pub t_blowup: f64,
    pub eps: f64,
    /// κ₀ = 2(p+1)/(p-1)²
    pub kappa0: f64,
    /// 1/2 - 2/(p-1), the growth bound of the free semigroup
    pub omega_tilde: f64,
    /// max(-1, 1/2 - 2/(p-1))
    pub omega: f64,
    /// |ω| - ε
    pub mu: f64,
    flip_nonlinearity: bool,
}

impl Params {
    pub fn new(p: f64, t_blowup: f64, eps: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 3.0) {
            return Err(Error::domain(format!("p out of range (1,3]: got {p}")));
        }
        if !(t_blowup > 0.5 && t_blowup < 1.5) {
            return Err(Error::domain(format!("T out of range (1/2,3/2): got {t_blowup}")));
        }
        let omega_tilde = 0.5 - 2.0 / (p - 1.0);
        let omega = omega_tilde.max(-1.0);
        if !(eps > 0.0 && eps < omega.abs()) {
            return Err(Error::domain(format!(
                "eps out of range (0,{}): got {eps}",
                omega.abs()
            )));
        }
        Ok(Self {
            p,
            t_blowup,
            eps,
            kappa0: 2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0)),
            omega_tilde,
            omega,
            mu: omega.abs() - eps,
            flip_nonlinearity: false,
        })
    }

    /// Same constants with a different blow-up time.
    pub fn with_blowup_time(&self, t_blowup: f64) -> Result<Self> {
        let mut out = Self::new(self.p, t_blowup, self.eps)?;
        out.flip_nonlinearity = self.flip_nonlinearity;
        Ok(out)
    }

    /// κ₀^{1/(p-1)}, the height of ψ^T when T - t = 1.
    pub fn height(&self) -> f64 {
        self.kappa0.powf(1.0 / (self.p - 1.0))
    }

    /// 2/(p-1)
    pub fn scaling_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    #[doc(hidden)]
    pub fn with_flipped_nonlinearity(mut self) -> Self {
        self.flip_nonlinearity = true;
        self
    }
}

/// ψ^T(t, r) = κ₀^{1/(p-1)} (T - t)^{-2/(p-1)}, independent of r.
pub fn psi_t(params: &Params, t: f64, _r: f64) -> Result<f64> {
    let s = params.t_blowup - t;
    if !(s > 0.0) {
        return Err(Error::domain(format!(
            "t must be below the blow-up time {}: got {t}",
            params.t_blowup
        )));
    }
    Ok(params.height() * s.powf(-params.scaling_exponent()))
}

/// ∂_t ψ^T(t, r).
pub fn psi_t_dot(params: &Params, t: f64, r: f64) -> Result<f64> {
    let psi = psi_t(params, t, r)?;
    Ok(params.scaling_exponent() * psi / (params.t_blowup - t))
}

/// N(x) = |κ + x|^{p-1}(κ + x) - κ^p - p κ₀ x with κ = κ₀^{1/(p-1)}.
pub fn nonlin_n_scalar(params: &Params, x: f64) -> f64 {
    let p = params.p;
    let k = params.height();
    let y = x / k;
    let kp = k * params.kappa0;
    if params.flip_nonlinearity {
        let base = 1.0 + y;
        return kp * (-base.abs().powf(p) - 1.0 - p * y);
    }
    if y.abs() < 0.25 {
        // (1+y)^p - 1 - p y = Σ_{j>=2} C(p, j) y^j
        let mut coef = p * (p - 1.0) / 2.0;
        let mut pow = y * y;
        let mut sum = 0.0;
        for j in 2..80 {
            let term = coef * pow;
            sum += term;
            if term == 0.0 || term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            let jf = j as f64;
            coef *= (p - jf) / (jf + 1.0);
            pow *= y;
        }
        return kp * sum;
    }
    let base = 1.0 + y;
    kp * (base.signum() * base.abs().powf(p) - 1.0 - p * y)
}

/// The name used throughout: N(x).
pub fn nonlin_big_n(params: &Params, x: f64) -> f64 {
    nonlin_n_scalar(params, x)
}

/// n(x, ρ) = ρ N(x).
pub fn nonlin_small_n(params: &Params, x: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    rho * nonlin_n_scalar(params, x)
}

/// N'(x) = p |κ + x|^{p-1} - p κ₀.
pub fn nonlin_n_derivative(params: &Params, x: f64) -> f64 {
    let p = params.p;
    p * (params.height() + x).abs().powf(p - 1.0) - p * params.kappa0
}

/// Running average Au(ρ) = ρ⁻¹ ∫_0^ρ u, with Au(0) = u(0).
pub fn avg_a(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let integral = grid.antiderivative(u);
    grid.nodes
        .iter()
        .zip(integral)
        .zip(u)
        .map(|((&r, int), &u0)| if r == 0.0 { u0 } else { int / r })
        .collect()
}

/// The first component of the vector nonlinearity, ρ N(Aφ₂(ρ)).
pub fn nonlinear_term(params: &Params, grid: &Grid, phi2: &[f64]) -> Vec<f64> {
    let avg = avg_a(grid, phi2);
    grid.nodes
        .iter()
        .zip(avg)
        .map(|(&r, x)| nonlin_small_n(params, x, r))
        .collect()
}

/// Radial Cauchy data (f, g) sampled on a collocation grid over `[0, R]`.
#[derive(Debug, Clone)]
pub struct RadialPair {
    pub grid: Grid,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl RadialPair {
    pub fn new(grid: Grid, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.len() != grid.n || g.len() != grid.n {
            return Err(Error::domain("radial pair length does not match its grid"));
        }
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::domain("radial pair has non-finite samples"));
        }
        Ok(Self { grid, f, g })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let fv = grid.sample(f);
        let gv = grid.sample(g);
        Self::new(grid, fv, gv)
    }

    pub fn radius(&self) -> f64 {
        self.grid.length
    }

    /// Data of ψ^T at time t on `[0, R]`.
    pub fn fundamental(params: &Params, t: f64, grid: Grid) -> Result<Self> {
        let f = psi_t(params, t, 0.0)?;
        let g = psi_t_dot(params, t, 0.0)?;
        Self::new(grid.clone(), vec![f; grid.n], vec![g; grid.n])
    }

    /// Rows `t,r,psi,psi_t` at every node, `t` repeated.
    pub fn write_field_csv<W: std::io::Write>(&self, t: f64, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "r", "psi", "psi_t"])?;
        for ((r, f), g) in self.grid.nodes.iter().zip(&self.f).zip(&self.g) {
            w.serialize((t, r, f, g))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sub(&self, other: &RadialPair) -> Result<Self> {
        if other.grid.n != self.grid.n || other.grid.length != self.grid.length {
            return Err(Error::domain("radial pairs live on different grids"));
        }
        let f = self.f.iter().zip(&other.f).map(|(a, b)| a - b).collect();
        let g = self.g.iter().zip(&other.g).map(|(a, b)| a - b).collect();
        Self::new(self.grid.clone(), f, g)
    }
}

/// Data relative to ψ¹ in the variables v = (ρg - 2ρκ/(p-1), ρf' + f - κ).
#[derive(Debug, Clone)]
pub struct RelativeData {
    pub grid: Grid,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl RelativeData {
    pub fn zero(grid: Grid) -> Self {
        let n = grid.n;
        Self { grid, v1: vec![0.0; n], v2: vec![0.0; n] }
    }

    /// L²(0, R) × L²(0, R) norm.
    pub fn norm(&self) -> f64 {
        (self.grid.inner(&self.v1, &self.v1) + self.grid.inner(&self.v2, &self.v2)).sqrt()
    }
}

pub fn data_to_v(fg: &RadialPair, params: &Params) -> RelativeData {
    let k = params.height();
    let two = params.scaling_exponent();
    let df = fg.grid.differentiate(&fg.f);
    let nodes = &fg.grid.nodes;
    let v1 = nodes.iter().zip(&fg.g).map(|(&r, &g)| r * g - two * r * k).collect();
    let v2 = nodes
        .iter()
        .zip(fg.f.iter().zip(&df))
        .map(|(&r, (&f, &d))| r * d + f - k)
        .collect();
    RelativeData { grid: fg.grid.clone(), v1, v2 }
}

/// U(v, T)(ρ) = T^{2/(p-1)} [v(Tρ) + κ(Tρ)] - κ(ρ) on the unit grid, with
/// κ(ρ) = κ₀^{1/(p-1)} (2ρ/(p-1), 1).
pub fn u_map(v: &RelativeData, t_blowup: f64, params: &Params, unit: &Grid) -> Result<State> {
    if !(t_blowup > 0.5 && t_blowup < 1.5) {
        return Err(Error::domain(format!("T out of range (1/2,3/2): got {t_blowup}")));
    }
    if v.grid.length < t_blowup {
        return Err(Error::domain(format!(
            "data known on [0,{}] but T = {t_blowup} needs [0,T]",
            v.grid.length
        )));
    }
    let k = params.height();
    let two = params.scaling_exponent();
    let scale = t_blowup.powf(two);
    let mut phi1 = Vec::with_capacity(unit.n);
    let mut phi2 = Vec::with_capacity(unit.n);
    for &r in &unit.nodes {
        let x = t_blowup * r;
        let v1 = v.grid.interpolate(&v.v1, x);
        let v2 = v.grid.interpolate(&v.v2, x);
        phi1.push(scale * (v1 + two * x * k) - two * r * k);
        phi2.push(scale * (v2 + k) - k);
    }
    phi1[0] = 0.0;
    Ok(State::new(phi1, phi2, 0.0))
}

/// Field and time derivative (ψ, ψ_t) on `[0, T - t]` from a similarity state at
/// similarity time `tau` (t = T - e^{-τ}).
pub fn reconstruct_field(state: &State, tau: f64, params: &Params, grid: &Grid) -> Result<RadialPair> {
    let t_blowup = params.t_blowup;
    if tau < -t_blowup.ln() - 1e-12 {
        return Err(Error::domain(format!(
            "tau must be at least -log T = {}: got {tau}",
            -t_blowup.ln()
        )));
    }
    let width = (-tau).exp();
    let t = t_blowup - width;
    let decay = width.powf(-params.scaling_exponent());
    let psi0 = psi_t(params, t, 0.0)?;
    let psi0_dot = psi_t_dot(params, t, 0.0)?;
    let avg = avg_a(grid, &state.phi2);
    let dphi1 = grid.differentiate(&state.phi1);
    let f = avg.iter().map(|a| psi0 + decay * a).collect();
    let g = grid
        .nodes
        .iter()
        .zip(state.phi1.iter().zip(&dphi1))
        .map(|(&rho, (&p1, &d1))| {
            let ratio = if rho == 0.0 { d1 } else { p1 / rho };
            psi0_dot + decay / width * ratio
        })
        .collect();
    RadialPair::new(grid.rescaled(width)?, f, g)
}

/// ‖(f, g)‖_{E(R)} = (∫_0^R |r f' + f|² + ∫_0^R r² g²)^{1/2}.
pub fn energy_norm(fg: &RadialPair) -> f64 {
    let df = fg.grid.differentiate(&fg.f);
    let nodes = &fg.grid.nodes;
    let first: Vec<f64> = nodes.iter().zip(fg.f.iter().zip(&df)).map(|(&r, (&f, &d))| r * d + f).collect();
    let second: Vec<f64> = nodes.iter().zip(&fg.g).map(|(&r, &g)| r * g).collect();
    (fg.grid.inner(&first, &first) + fg.grid.inner(&second, &second)).max(0.0).sqrt()
}

/// ‖(ψ^T, ψ^T_t)(t)‖_{E(T-t)} in closed form: C_p (T-t)^{-(5-p)/(2(p-1))}.
pub fn fundamental_energy(params: &Params, t: f64) -> Result<f64> {
    let psi = psi_t(params, t, 0.0)?;
    let width = params.t_blowup - t;
    let c = 1.0 + 4.0 / (3.0 * (params.p - 1.0).powi(2));
    Ok(psi * (width * c).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_relative_eq;

    fn p3() -> Params {
        Params::new(3.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn params_derived_fields() {
        let p = p3();
        assert_eq!(p.kappa0, 2.0);
        assert_eq!(p.omega_tilde, -0.5);
        assert_eq!(p.omega, -0.5);
        assert_relative_eq!(p.mu, 0.4, max_relative = 1e-15);
        let p = Params::new(2.0, 1.0, 0.1).unwrap();
        assert_eq!(p.kappa0, 6.0);
        assert_eq!(p.omega_tilde, -1.5);
        assert_eq!(p.omega, -1.0);
        assert_relative_eq!(p.mu, 0.9, max_relative = 1e-15);
    }

    #[test]
    fn params_reject_out_of_range() {
        let e = Params::new(5.0, 1.0, 0.1).unwrap_err();
        assert!(e.to_string().contains("p out of range (1,3]"));
        assert!(Params::new(1.0, 1.0, 0.1).is_err());
        assert!(Params::new(3.0, 1.5, 0.1).is_err());
        assert!(Params::new(3.0, 0.5, 0.1).is_err());
        assert!(Params::new(3.0, 1.0, 0.5).unwrap_err().to_string().contains("eps"));
        assert!(Params::new(3.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn exponents_stay_in_stated_ranges() {
        for i in 1..=200 {
            let p = 1.0 + 2.0 * i as f64 / 200.0;
            let par = Params::new(p, 1.0, 0.01).unwrap();
            assert!(par.omega_tilde <= -0.5);
            assert!((-1.0..=-0.5).contains(&par.omega));
            assert!(par.mu > 0.0);
        }
    }

    #[test]
    fn fundamental_solution_values() {
        let p = p3();
        assert_relative_eq!(psi_t(&p, 0.0, 0.3).unwrap(), 2.0_f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(psi_t(&p, 0.5, 0.0).unwrap(), 2.0 * 2.0_f64.sqrt(), max_relative = 1e-15);
        assert!(psi_t(&p, 1.0, 0.0).is_err());
        assert!(psi_t(&p, 1.2, 0.0).is_err());
    }

    #[test]
    fn fundamental_solution_log_slope() {
        for &pp in &[1.5, 2.0, 3.0] {
            let p = Params::new(pp, 1.0, 0.1).unwrap();
            let (t1, t2) = (0.2, 0.9);
            let slope = (psi_t(&p, t2, 0.0).unwrap().ln() - psi_t(&p, t1, 0.0).unwrap().ln())
                / ((1.0 - t2 as f64).ln() - (1.0 - t1 as f64).ln());
            assert_relative_eq!(slope, -2.0 / (pp - 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn fundamental_solution_solves_the_ode() {
        // ψ_tt = ψ^p by a 4th-order central difference
        for &pp in &[1.5, 2.0, 3.0] {
            let p = Params::new(pp, 1.0, 0.1).unwrap();
            let t = 0.4;
            let h = 1e-3;
            let f = |s: f64| psi_t(&p, s, 0.0).unwrap();
            let d2 = (-f(t + 2.0 * h) + 16.0 * f(t + h) - 30.0 * f(t) + 16.0 * f(t - h) - f(t - 2.0 * h))
                / (12.0 * h * h);
            let want = p.kappa0.powf(pp / (pp - 1.0)) * (1.0 - t as f64).powf(-2.0 * pp / (pp - 1.0));
            assert_relative_eq!(d2, want, max_relative = 1e-6);
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let p = p3();
        assert_eq!(nonlin_big_n(&p, 0.0), 0.0);
        assert_relative_eq!(nonlin_big_n(&p, 1.0), 3.0 * 2.0_f64.sqrt() + 1.0, max_relative = 1e-14);
        // p = 3, x > -√2: N(x) = 3√2 x² + x³
        for &x in &[-1.2, -0.3, -1e-4, 2e-3, 0.2, 0.7] {
            let want = 3.0 * 2.0_f64.sqrt() * x * x + x * x * x;
            assert_relative_eq!(nonlin_big_n(&p, x), want, max_relative = 1e-13);
        }
        // p = 2: |6 + x|(6 + x) - 36 - 12 x at x = -10 gives -16 - 36 + 120
        let p2 = Params::new(2.0, 1.0, 0.1).unwrap();
        assert_relative_eq!(nonlin_big_n(&p2, -10.0), 68.0, max_relative = 1e-14);
        assert_eq!(nonlin_small_n(&p, 0.3, 0.0), 0.0);
        assert_relative_eq!(
            nonlin_small_n(&p, 1.0, 0.5),
            (3.0 * 2.0_f64.sqrt() + 1.0) / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn nonlinearity_series_branch_is_continuous() {
        for &pp in &[1.3, 1.5, 2.0, 2.5, 3.0] {
            let p = Params::new(pp, 1.0, 0.05).unwrap();
            let k = p.height();
            let x = 0.25 * k;
            let below = nonlin_big_n(&p, x * (1.0 - 1e-12));
            let above = nonlin_big_n(&p, x * (1.0 + 1e-12));
            assert_relative_eq!(below, above, max_relative = 1e-9);
        }
    }

    #[test]
    fn quadratic_bound_near_zero() {
        // |n(x, ρ)| <= C ρ x² <x>^{p-2} with one constant on [-5, 5]
        for &pp in &[1.5, 2.0, 3.0] {
            let p = Params::new(pp, 1.0, 0.1).unwrap();
            let ratios: Vec<f64> = (1..=1000)
                .map(|i| -5.0 + 10.0 * i as f64 / 1000.5)
                .map(|x: f64| {
                    let bracket = (1.0 + x * x).sqrt().powf(pp - 2.0);
                    nonlin_small_n(&p, x, 0.7).abs() / (0.7 * x * x * bracket)
                })
                .collect();
            let c = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(c.is_finite() && c < 50.0, "p = {pp}: C = {c}");
        }
    }

    #[test]
    fn averaging_operator() {
        let g = build_grid(32).unwrap();
        let one = avg_a(&g, &vec![1.0; 32]);
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let lin = avg_a(&g, &g.nodes);
        for (r, v) in g.nodes.iter().zip(&lin) {
            assert!((v - r / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_data_of_fundamental_solution_is_zero() {
        let p = p3();
        let grid = Grid::new(32, 1.5).unwrap();
        let fg = RadialPair::fundamental(&p, 0.0, grid).unwrap();
        let v = data_to_v(&fg, &p);
        assert!(v.norm() < 1e-13);
    }

    #[test]
    fn relative_data_hand_computed() {
        let p = p3();
        let grid = Grid::new(32, 1.5).unwrap();
        let fg = RadialPair::from_fn(grid, |r| 2.0_f64.sqrt() + r * r, |_| 2.0_f64.sqrt()).unwrap();
        let v = data_to_v(&fg, &p);
        for (r, v2) in v.grid.nodes.iter().zip(&v.v2) {
            assert!((v2 - 3.0 * r * r).abs() < 1e-11);
        }
        assert!(v.v1.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn relative_norm_equals_energy_of_difference() {
        let p = p3();
        let grid = Grid::new(40, 1.5).unwrap();
        let fg = RadialPair::from_fn(
            grid.clone(),
            |r| 2.0_f64.sqrt() + 0.1 * r * r - 0.05 * r.powi(3),
            |r| 2.0_f64.sqrt() + 0.2 * r,
        )
        .unwrap();
        let base = RadialPair::fundamental(&p.with_blowup_time(1.0).unwrap(), 0.0, grid).unwrap();
        let v = data_to_v(&fg, &p);
        let e = energy_norm(&fg.sub(&base).unwrap());
        assert_relative_eq!(v.norm(), e, max_relative = 1e-12);
    }

    #[test]
    fn u_map_examples() {
        let p = p3();
        let unit = build_grid(32).unwrap();
        let zero = RelativeData::zero(Grid::new(32, 1.5).unwrap());
        let s = u_map(&zero, 1.0, &p, &unit).unwrap();
        assert!(s.phi1.iter().chain(&s.phi2).all(|x| x.abs() < 1e-15));
        let s = u_map(&zero, 1.1, &p, &unit).unwrap();
        let r2 = 2.0_f64.sqrt();
        for (i, &r) in unit.nodes.iter().enumerate() {
            assert!((s.phi1[i] - r2 * 0.21 * r).abs() < 1e-13);
            assert!((s.phi2[i] - r2 * 0.1).abs() < 1e-13);
        }
        assert!(u_map(&zero, 1.6, &p, &unit).is_err());
    }

    #[test]
    fn u_map_derivative_in_t_is_symmetry_mode() {
        for &pp in &[1.5, 2.0, 3.0] {
            let p = Params::new(pp, 1.0, 0.1).unwrap();
            let unit = build_grid(24).unwrap();
            let zero = RelativeData::zero(Grid::new(24, 1.5).unwrap());
            let h = 1e-5;
            let up = u_map(&zero, 1.0 + h, &p, &unit).unwrap();
            let dn = u_map(&zero, 1.0 - h, &p, &unit).unwrap();
            let c = 2.0 / (pp - 1.0) * p.height();
            let g1 = (pp + 1.0) / (pp - 1.0);
            for (i, &r) in unit.nodes.iter().enumerate() {
                let d1 = (up.phi1[i] - dn.phi1[i]) / (2.0 * h);
                let d2 = (up.phi2[i] - dn.phi2[i]) / (2.0 * h);
                assert!((d1 - c * g1 * r).abs() < 1e-6 * c);
                assert!((d2 - c).abs() < 1e-6 * c);
            }
        }
    }

    #[test]
    fn reconstruct_zero_state_gives_fundamental_solution() {
        let p = p3();
        let unit = build_grid(24).unwrap();
        let zero = State::zeros(24);
        let fg = reconstruct_field(&zero, 0.5, &p, &unit).unwrap();
        let t = 1.0 - (-0.5_f64).exp();
        assert_relative_eq!(fg.radius(), 1.0 - t, max_relative = 1e-14);
        let psi = psi_t(&p, t, 0.0).unwrap();
        let psi_dot = psi_t_dot(&p, t, 0.0).unwrap();
        assert!(fg.f.iter().all(|&f| f == psi));
        assert!(fg.g.iter().all(|&g| g == psi_dot));
    }

    #[test]
    fn reconstruct_then_relative_data_roundtrip() {
        for &t_blowup in &[1.0, 0.9, 1.2] {
            let p = Params::new(3.0, t_blowup, 0.1).unwrap();
            let unit = build_grid(40).unwrap();
            let big = Grid::new(40, 1.5).unwrap();
            let v = RelativeData {
                v1: big.sample(|r| 1e-2 * r * (1.0 - 0.3 * r)),
                v2: big.sample(|r| 1e-2 * (0.5 + r * r - 0.2 * r.powi(3))),
                grid: big,
            };
            let state = u_map(&v, t_blowup, &p, &unit).unwrap();
            let fg = reconstruct_field(&state, -t_blowup.ln(), &p, &unit).unwrap();
            let back = data_to_v(&fg, &p);
            for (i, &r) in back.grid.nodes.iter().enumerate() {
                assert!((back.v1[i] - v.grid.interpolate(&v.v1, r)).abs() < 1e-8);
                assert!((back.v2[i] - v.grid.interpolate(&v.v2, r)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn energy_norm_examples() {
        let grid = Grid::new(32, 2.0).unwrap();
        let fg = RadialPair::from_fn(grid, |_| -3.0, |_| 0.0).unwrap();
        assert_relative_eq!(energy_norm(&fg), 3.0 * 2.0_f64.sqrt(), max_relative = 1e-13);

        let p = p3();
        let fg = RadialPair::fundamental(&p, 0.0, build_grid(32).unwrap()).unwrap();
        let want = 2.0 * 2.0_f64.sqrt() / 3.0_f64.sqrt();
        assert_relative_eq!(energy_norm(&fg), want, max_relative = 1e-13);
        assert_relative_eq!(fundamental_energy(&p, 0.0).unwrap(), want, max_relative = 1e-14);
    }
}
