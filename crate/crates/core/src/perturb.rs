//! Seeded low-order polynomial test data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolve::State;
use crate::grid::Grid;
use crate::model::{data_to_v, energy_norm, Params, RadialPair, RelativeData};

pub const DEGREE: usize = 3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn horner(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn coefficients(rng: &mut ChaCha8Rng, degree: usize) -> Vec<f64> {
    (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random polynomial of the given degree sampled on the grid, coefficients in [-1, 1)
/// with respect to ρ/L.
pub fn random_polynomial(rng: &mut ChaCha8Rng, grid: &Grid, degree: usize) -> Vec<f64> {
    let c = coefficients(rng, degree);
    grid.sample(|r| horner(&c, r / grid.length))
}

/// Cauchy data ψ¹(0, ·) + (δf, δg) with δf, δg random cubics scaled so that
/// ‖(δf, δg)‖_{E(R)} = amplitude.
pub fn perturbed_data(seed: u64, amplitude: f64, params: &Params, grid: &Grid) -> Result<RadialPair> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::domain(format!("amplitude must be non-negative: got {amplitude}")));
    }
    let base = RadialPair::fundamental(&params.with_blowup_time(1.0)?, 0.0, grid.clone())?;
    if amplitude == 0.0 {
        return Ok(base);
    }
    let mut rng = rng(seed);
    let df = random_polynomial(&mut rng, grid, DEGREE);
    let dg = random_polynomial(&mut rng, grid, DEGREE);
    let delta = RadialPair::new(grid.clone(), df, dg)?;
    let scale = amplitude / energy_norm(&delta);
    let f = base.f.iter().zip(&delta.f).map(|(a, d)| a + scale * d).collect();
    let g = base.g.iter().zip(&delta.g).map(|(a, d)| a + scale * d).collect();
    RadialPair::new(grid.clone(), f, g)
}

/// The relative data of [`perturbed_data`]; exactly zero for amplitude 0, where
/// differentiating the constant profile would otherwise leave round-off.
pub fn perturbed_relative(seed: u64, amplitude: f64, params: &Params, grid: &Grid) -> Result<RelativeData> {
    let data = perturbed_data(seed, amplitude, params, grid)?;
    if amplitude == 0.0 {
        return Ok(RelativeData::zero(grid.clone()));
    }
    Ok(data_to_v(&data, params))
}

/// Unit-norm state (ρ q₁(ρ), q₂(ρ)) with random polynomials q₁, q₂, so φ₁(0) = 0.
pub fn random_state(seed: u64, grid: &Grid, degree: usize) -> State {
    let mut rng = rng(seed);
    let q1 = coefficients(&mut rng, degree);
    let q2 = coefficients(&mut rng, degree);
    let s = State::new(grid.sample(|r| r * horner(&q1, r)), grid.sample(|r| horner(&q2, r)), 0.0);
    let norm = s.norm(grid);
    s.scaled(1.0 / norm)
}
