//! Chebyshev–Gauss–Lobatto collocation on an interval `[0, L]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 16;

/// Collocation nodes sorted ascending on `[0, length]` together with the
/// differentiation matrix, the Volterra integration matrix `u -> ∫_0^ρ u` and
/// Clenshaw–Curtis weights.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub length: f64,
    pub nodes: Vec<f64>,
    pub diff: DMatrix<f64>,
    pub volterra: DMatrix<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
}

/// Grid on the unit interval.
pub fn build_grid(n: usize) -> Result<Grid> {
    Grid::new(n, 1.0)
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::GridSize(n));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::domain(format!("grid length must be positive, got {length}")));
        }
        let big_n = n - 1;
        let nf = big_n as f64;
        // x_j = cos(jπ/N) runs from 1 down to -1; ρ = L (1 - x_j)/2 ascends.
        let nodes: Vec<f64> = (0..n)
            .map(|j| {
                // sin form is symmetric and exact at both ends
                let s = (0.5 * j as f64 * PI / nf).sin();
                length * s * s
            })
            .collect();

        let cbar = |j: usize| if j == 0 || j == big_n { 2.0 } else { 1.0 };
        let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };

        // d/dx on the Chebyshev points, diagonal from the negative-sum trick.
        let mut dx = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    // x_i - x_j = 2 sin((j+i)π/2N) sin((j-i)π/2N)
                    let diff = 2.0
                        * ((i + j) as f64 * PI / (2.0 * nf)).sin()
                        * ((j as f64 - i as f64) * PI / (2.0 * nf)).sin();
                    dx[(i, j)] = cbar(i) / cbar(j) * sign(i + j) / diff;
                }
            }
        }
        for i in 0..n {
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| dx[(i, j)]).sum();
            dx[(i, i)] = -s;
        }
        // dx/dρ = -2/L
        let diff = dx * (-2.0 / length);

        // Volterra matrix through the Chebyshev expansion of each cardinal function.
        // values -> coefficients: a_k = 2/(N cbar_k) Σ_j f_j cos(jkπ/N) / cbar_j
        let mut to_coef = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            for j in 0..n {
                to_coef[(k, j)] = 2.0 / (nf * cbar(k) * cbar(j)) * ((j * k) as f64 * PI / nf).cos();
            }
        }
        // antiderivative coefficients (degree up to N + 1)
        let mut integ = DMatrix::<f64>::zeros(n + 1, n);
        for k in 0..n {
            match k {
                0 => integ[(1, 0)] += 1.0,
                1 => integ[(2, 1)] += 0.25,
                _ => {
                    integ[(k + 1, k)] += 1.0 / (2.0 * (k + 1) as f64);
                    integ[(k - 1, k)] -= 1.0 / (2.0 * (k - 1) as f64);
                }
            }
        }
        // evaluate T_k(x_i) - T_k(1) for k = 0..=N+1
        let mut eval = DMatrix::<f64>::zeros(n, n + 1);
        for i in 0..n {
            for k in 0..=n {
                eval[(i, k)] = ((i * k) as f64 * PI / nf).cos() - 1.0;
            }
        }
        // ∫_0^ρ u dρ = (L/2) (F(1) - F(x_i))
        let volterra = (eval * integ * to_coef) * (-0.5 * length);
        let weights: Vec<f64> = volterra.row(n - 1).iter().copied().collect();

        let bary = (0..n)
            .map(|j| {
                let w = if j == 0 || j == big_n { 0.5 } else { 1.0 };
                sign(j) * w
            })
            .collect();

        Ok(Self { n, length, nodes, diff, volterra, weights, bary })
    }

    /// Smallest gap between adjacent nodes.
    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, v)| w * v).sum()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u.iter().zip(v)).map(|(w, (a, b))| w * a * b).sum()
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    pub fn differentiate(&self, u: &[f64]) -> Vec<f64> {
        mat_vec(&self.diff, u)
    }

    /// Running integral `∫_0^ρ u` at every node.
    pub fn antiderivative(&self, u: &[f64]) -> Vec<f64> {
        mat_vec(&self.volterra, u)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Barycentric interpolation of nodal values `u` at `x`.
    pub fn interpolate(&self, u: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &wj), &uj) in self.nodes.iter().zip(&self.bary).zip(u) {
            let d = x - xj;
            if d == 0.0 {
                return uj;
            }
            let t = wj / d;
            num += t * uj;
            den += t;
        }
        num / den
    }

    /// Copy of this grid rescaled to `[0, length]`.
    pub fn rescaled(&self, length: f64) -> Result<Self> {
        Self::new(self.n, length)
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    let rows = m.nrows();
    let mut out = vec![0.0; rows];
    // column-major storage: accumulate column by column
    for (col, &uj) in m.as_slice().chunks_exact(rows).zip(u) {
        if uj == 0.0 {
            continue;
        }
        for (o, c) in out.iter_mut().zip(col) {
            *o += c * uj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids() {
        assert_eq!(build_grid(15).unwrap_err(), Error::GridSize(15));
        assert!(build_grid(16).is_ok());
    }

    #[test]
    fn nodes_ascend_on_unit_interval() {
        let g = build_grid(33).unwrap();
        assert_eq!(g.nodes[0], 0.0);
        assert_eq!(g.nodes[32], 1.0);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn differentiates_quadratic() {
        let g = build_grid(32).unwrap();
        let u = g.sample(|r| r * r);
        let du = g.differentiate(&u);
        for (r, d) in g.nodes.iter().zip(&du) {
            assert!((d - 2.0 * r).abs() < 1e-10, "{r}: {d}");
        }
    }

    #[test]
    fn integrates_constant() {
        let g = build_grid(32).unwrap();
        let v = g.antiderivative(&vec![1.0; 32]);
        for (r, x) in g.nodes.iter().zip(&v) {
            assert!((x - r).abs() < 1e-10);
        }
        let total: f64 = g.weights.iter().sum();
        assert!((v[31] - total).abs() < 1e-10);
    }

    #[test]
    fn quadrature_exactness() {
        let g = build_grid(64).unwrap();
        let u = g.sample(|r| r * r);
        assert!((g.integrate(&u) - 1.0 / 3.0).abs() < 1e-12);
        let g = Grid::new(40, 1.5).unwrap();
        let u = g.sample(|r| r.powi(5));
        assert!((g.integrate(&u) - 1.5_f64.powi(6) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_exact_for_polynomials() {
        let g = Grid::new(20, 1.5).unwrap();
        let u = g.sample(|r| 1.0 - 2.0 * r + r.powi(7));
        for &x in &[0.0_f64, 0.013, 0.7, 1.1, 1.5] {
            let want = 1.0 - 2.0 * x + x.powi(7);
            assert!((g.interpolate(&u, x) - want).abs() < 1e-12);
        }
    }
}
