//! Two-dimensional Allen-Cahn equation on the periodic square:
//! `∂f/∂t = ε Δf + f − f³` with a highly oscillatory, slowly-compressible
//! initial condition.

use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::linop::TtLinOp;
use crate::tt::{tt_axpy, tt_from_dense, tt_hadamard, tt_inner, tt_norm, RoundingSpec, TtTensor};
use std::f64::consts::PI;

use super::grid::{spectral_grid, DomainKind};
use super::spec::{ProblemSpec, SplitTerm};

/// Relative tolerance for rounding Hadamard powers inside the cubic term.
const HADAMARD_TOL: f64 = 1e-12;

/// Assemble the Allen-Cahn benchmark with diffusion coefficient `eps_diff`
/// on an `n x n` periodic grid.
pub fn build_allen_cahn(n: usize, eps_diff: f64) -> Result<ProblemSpec<f64>> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "Allen-Cahn grid needs n >= 16, got {n}"
        )));
    }
    let grid = spectral_grid(DomainKind::Periodic, n)?;
    let sizes = vec![n, n];

    let mut laplacian = TtLinOp::new(sizes.clone());
    laplacian.add_single_mode(eps_diff, 0, grid.d2.clone())?;
    laplacian.add_single_mode(eps_diff, 1, grid.d2.clone())?;

    let had = RoundingSpec::rel(HADAMARD_TOL);
    let g: super::spec::GFn<f64> = {
        let laplacian = laplacian.clone();
        let had = had.clone();
        Box::new(move |f: &TtTensor<f64>| {
            let lin = laplacian.apply(f)?;
            let f2 = tt_hadamard(f, f, Some(&had))?;
            let f3 = tt_hadamard(&f2, f, Some(&had))?;
            tt_axpy(1.0, &tt_axpy(1.0, &lin, 1.0, f)?, -1.0, &f3)
        })
    };

    let j_g: super::spec::JFn<f64> = {
        let laplacian = laplacian.clone();
        let sizes = sizes.clone();
        let had = had.clone();
        Box::new(move |f: &TtTensor<f64>| {
            let mut op =
                TtLinOp::scaled_sum(1.0, &laplacian, 1.0, &TtLinOp::identity(sizes.clone()))?;
            op.add_diag(-3.0, tt_hadamard(f, f, Some(&had))?)?;
            Ok(op)
        })
    };

    let split = vec![
        SplitTerm::Mode {
            mode: 0,
            generator: grid.d2.clone() * eps_diff,
        },
        SplitTerm::Mode {
            mode: 1,
            generator: grid.d2.clone() * eps_diff,
        },
        SplitTerm::Ode {
            g: {
                let had = had.clone();
                Box::new(move |f: &TtTensor<f64>| {
                    let f2 = tt_hadamard(f, f, Some(&had))?;
                    let f3 = tt_hadamard(&f2, f, Some(&had))?;
                    tt_axpy(1.0, f, -1.0, &f3)
                })
            },
            j: {
                let sizes = sizes.clone();
                let had = had.clone();
                Box::new(move |f: &TtTensor<f64>| {
                    let mut op = TtLinOp::identity(sizes.clone());
                    op.add_diag(-3.0, tt_hadamard(f, f, Some(&had))?)?;
                    Ok(op)
                })
            },
        },
    ];

    let f0 = initial_condition(n, &RoundingSpec::abs_rel(1e-9, 1e-9))?;

    let dense_g: super::spec::DenseGFn<f64> = {
        let d2 = grid.d2.clone();
        Box::new(move |f: &DenseTensor<f64>| {
            let lap = DenseTensor::axpy(
                1.0,
                &f.mode_apply(&d2, 0)?,
                1.0,
                &f.mode_apply(&d2, 1)?,
            )?;
            let f3 = f.hadamard(f)?.hadamard(f)?;
            let a = DenseTensor::axpy(eps_diff, &lap, 1.0, f)?;
            DenseTensor::axpy(1.0, &a, -1.0, &f3)
        })
    };

    let weight = grid.weight;
    let observables: Vec<(&'static str, super::spec::ObservableFn<f64>)> = vec![
        ("mass", {
            let sizes = sizes.clone();
            Box::new(move |f: &TtTensor<f64>| {
                let ones = TtTensor::constant(&sizes, 1.0);
                Ok(tt_inner(&ones, f)? * weight * weight)
            })
        }),
        ("l2_norm", Box::new(|f: &TtTensor<f64>| Ok(tt_norm(f)))),
    ];

    Ok(ProblemSpec {
        name: "allen_cahn",
        mode_sizes: sizes,
        grid,
        g,
        j_g,
        split: Some(split),
        f0,
        observables,
        dense_g,
    })
}

/// Sample the benchmark initial condition on the periodic `n x n` grid over
/// `[0, 2π]²` and truncate it to TT form.
pub fn initial_condition(n: usize, spec: &RoundingSpec) -> Result<TtTensor<f64>> {
    let dense = initial_condition_dense(n)?;
    tt_from_dense(&dense, spec)
}

/// Dense sample of the same initial condition (oracle twin).
pub fn initial_condition_dense(n: usize) -> Result<DenseTensor<f64>> {
    let g = spectral_grid(DomainKind::Periodic, n)?;
    Ok(DenseTensor::from_fn(vec![n, n], |idx| {
        let x = g.nodes[idx[0]];
        let y = g.nodes[idx[1]];
        bump(x, y) - bump(x, 2.0 * y) + bump(3.0 * x + PI, 3.0 * y + PI)
            - 2.0 * bump(4.0 * x, 4.0 * y)
            + 2.0 * bump(5.0 * x, 5.0 * y)
    }))
}

/// A smooth, highly oscillatory bump with many weak singular features; its
/// grid samples have slowly decaying singular values, which makes it a good
/// stress test for rank truncation.
fn bump(x: f64, y: f64) -> f64 {
    let num = ((-x.tan().powi(2)).exp() + (-y.tan().powi(2)).exp()) * x.sin() * y.sin();
    let den = 1.0 + (1.0 / (-x / 2.0).sin()).abs().exp() + (1.0 / (-y / 2.0).sin()).abs().exp();
    // den may overflow to +inf near the axes; the numerator vanishes there,
    // so the quotient flushes cleanly to zero.
    let v = num / den;
    if v.is_finite() {
        v
    } else {
        0.0
    }
}
