//! One-dimensional pseudospectral collocation grids and differentiation
//! matrices: Fourier on the periodic interval [0, 2π] and a sine (discrete
//! sine transform) basis on [0, π] with homogeneous Dirichlet boundaries.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    /// `[0, 2π]` periodic, nodes `x_j = 2πj/n`.
    Periodic,
    /// `[0, π]` with zero boundary values, `n` interior nodes
    /// `x_j = (j+1)π/(n+1)`.
    Dirichlet,
}

#[derive(Clone, Debug)]
pub struct SpectralGrid {
    pub domain: DomainKind,
    pub n: usize,
    pub nodes: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Quadrature weight per node (uniform for both grids).
    pub weight: f64,
}

/// Build a collocation grid with spectrally exact differentiation matrices
/// for all resolvable modes.
pub fn spectral_grid(domain: DomainKind, n: usize) -> Result<SpectralGrid> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "grid needs n >= 4 points, got {n}"
        )));
    }
    match domain {
        DomainKind::Periodic => {
            let nodes: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
            // Signed wavenumbers; for even n the Nyquist mode has no sine
            // component, so it is dropped from D1 but kept (as -k^2) in D2.
            let freqs: Vec<i64> = (0..n)
                .map(|k| {
                    let k = k as i64;
                    if 2 * k <= n as i64 {
                        k
                    } else {
                        k - n as i64
                    }
                })
                .collect();
            let mut d1 = DMatrix::zeros(n, n);
            let mut d2 = DMatrix::zeros(n, n);
            for l in 0..n {
                for j in 0..n {
                    let dx = nodes[l] - nodes[j];
                    let mut s1 = Complex64::new(0.0, 0.0);
                    let mut s2 = Complex64::new(0.0, 0.0);
                    for &k in &freqs {
                        let kf = k as f64;
                        let e = Complex64::new(0.0, kf * dx).exp();
                        let nyquist = n % 2 == 0 && 2 * k == n as i64;
                        if !nyquist {
                            s1 += Complex64::new(0.0, kf) * e;
                        }
                        s2 += Complex64::new(-kf * kf, 0.0) * e;
                    }
                    d1[(l, j)] = s1.re / n as f64;
                    d2[(l, j)] = s2.re / n as f64;
                }
            }
            Ok(SpectralGrid {
                domain,
                n,
                nodes,
                d1,
                d2,
                weight: 2.0 * PI / n as f64,
            })
        }
        DomainKind::Dirichlet => {
            let h = PI / (n + 1) as f64;
            let nodes: Vec<f64> = (0..n).map(|j| (j + 1) as f64 * h).collect();
            // Sine collocation: S[j,k] = sin((k+1) x_j), S^{-1} = 2/(n+1) S^T.
            let s = DMatrix::from_fn(n, n, |j, k| ((k + 1) as f64 * nodes[j]).sin());
            let c = DMatrix::from_fn(n, n, |j, k| ((k + 1) as f64 * nodes[j]).cos());
            let s_inv = s.transpose() * (2.0 / (n + 1) as f64);
            let k1 = DMatrix::from_fn(n, n, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
            let k2 = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    -(((i + 1) * (i + 1)) as f64)
                } else {
                    0.0
                }
            });
            let d1 = &c * &k1 * &s_inv;
            let d2 = &s * &k2 * &s_inv;
            Ok(SpectralGrid {
                domain,
                n,
                nodes,
                d1,
                d2,
                weight: h,
            })
        }
    }
}

/// Promote a real matrix to the complex field.
pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}
