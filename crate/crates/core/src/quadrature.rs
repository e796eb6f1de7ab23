//! Quadrature rules on `[0,1)` and tensor grids on the unit torus.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Equispaced rule on the circle; exact for trigonometric polynomials of
/// degree below `n`.
pub fn periodic_trapezoid(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / n as f64;
    ((0..n).map(|j| j as f64 * h).collect(), vec![h; n])
}

/// Tensor-product grid built from a one-dimensional rule.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorGrid {
    pub fn new(dim: usize, rule: (Vec<f64>, Vec<f64>)) -> Self {
        TensorGrid {
            dim,
            nodes: rule.0,
            weights: rule.1,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(point, weight)` at every grid point.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        let n = self.nodes.len();
        let mut idx = vec![0usize; self.dim];
        let mut x = vec![0.0; self.dim];
        for _ in 0..self.len() {
            let mut w = 1.0;
            for (c, &i) in idx.iter().enumerate() {
                x[c] = self.nodes[i];
                w *= self.weights[i];
            }
            f(&x, w);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < n {
                    break;
                }
                *slot = 0;
            }
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut s = 0.0;
        self.for_each(|x, w| s += w * f(x));
        s
    }
}
