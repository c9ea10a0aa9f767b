//! Fokker-Planck equation on the d-dimensional flat torus with a cyclic
//! drift field and isotropic diffusion:
//! `∂f/∂t = −Σ ∂/∂x_i (μ_i f) + (σ²/2) Σ ∂²f/∂x_i²`,
//! `μ_i = (γ(x_{i+1}) − γ(x_{i−2})) ξ(x_{i−1}) − φ(x_i)` with
//! `γ = sin`, `ξ = exp(sin) + 1`, `φ = cos`, indices cyclic.
//!
//! The right-hand side is assembled from the advective term list
//! `Σ_i [−γ(x_{i+1})ξ(x_{i−1}) ∂_i f + γ(x_{i−2})ξ(x_{i−1}) ∂_i f
//!        + ∂_i(φ(x_i) f) + (σ²/2) ∂²_i f]`,
//! which matches the conservative form whenever the advection coefficients
//! are independent of `x_i` (always true for d ≥ 3; at d = 2 the cyclic
//! indices collide and the term list itself is the defining equation).

use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::linop::{Factor, TtLinOp};
use crate::tt::{tt_axpy, tt_inner, tt_norm, tt_round, RoundingSpec, TtTensor};
use nalgebra::DMatrix;
use std::f64::consts::PI;

use super::grid::{spectral_grid, DomainKind, SpectralGrid};
use super::spec::{ProblemSpec, SplitTerm};

fn gamma(x: f64) -> f64 {
    x.sin()
}
fn xi(x: f64) -> f64 {
    x.sin().exp() + 1.0
}
fn phi(x: f64) -> f64 {
    x.cos()
}

/// Drift component `μ_i` (0-based `i`) at a point, with cyclic indices.
pub fn drift_component(i: usize, x: &[f64]) -> f64 {
    let d = x.len();
    let ip1 = (i + 1) % d;
    let im1 = (i + d - 1) % d;
    let im2 = (i + d - 2) % d;
    (gamma(x[ip1]) - gamma(x[im2])) * xi(x[im1]) - phi(x[i])
}

fn diag_of(values: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let v: Vec<f64> = values.collect();
    DMatrix::from_fn(v.len(), v.len(), |r, c| if r == c { v[r] } else { 0.0 })
}

/// Add `coeff · (composition of per-mode applications)` as one Kronecker
/// term; repeated modes compose by matrix product (earliest listed applied
/// first).
fn add_composed(
    op: &mut TtLinOp<f64>,
    coeff: f64,
    d: usize,
    apps: &[(usize, &DMatrix<f64>)],
) -> Result<()> {
    let mut factors: Vec<Option<DMatrix<f64>>> = vec![None; d];
    for (mode, m) in apps {
        factors[*mode] = Some(match factors[*mode].take() {
            None => (*m).clone(),
            Some(prev) => *m * prev,
        });
    }
    op.add_kron(
        coeff,
        factors
            .into_iter()
            .map(|f| match f {
                None => Factor::Identity,
                Some(m) => Factor::Matrix(m),
            })
            .collect(),
    )?;
    Ok(())
}

/// The advection terms, each as its own single-term operator (one per
/// sub-flow batch entry): first the `−γ(x_{i+1})ξ(x_{i−1}) ∂_i` batch, then
/// the `+γ(x_{i−2})ξ(x_{i−1}) ∂_i` batch.
fn advection_ops(grid: &SpectralGrid, d: usize) -> Result<Vec<TtLinOp<f64>>> {
    let n = grid.n;
    let sizes = vec![n; d];
    let dg = diag_of(grid.nodes.iter().map(|&x| gamma(x)));
    let dx = diag_of(grid.nodes.iter().map(|&x| xi(x)));
    let mut ops = Vec::with_capacity(2 * d);
    for i in 0..d {
        let ip1 = (i + 1) % d;
        let im1 = (i + d - 1) % d;
        let mut op = TtLinOp::new(sizes.clone());
        add_composed(&mut op, -1.0, d, &[(i, &grid.d1), (ip1, &dg), (im1, &dx)])?;
        ops.push(op);
    }
    for i in 0..d {
        let im1 = (i + d - 1) % d;
        let im2 = (i + d - 2) % d;
        let mut op = TtLinOp::new(sizes.clone());
        add_composed(&mut op, 1.0, d, &[(i, &grid.d1), (im2, &dg), (im1, &dx)])?;
        ops.push(op);
    }
    Ok(ops)
}

/// Single-mode generator of the drift-relaxation + diffusion sub-flow:
/// `∂_i (φ(x_i) ·) + (σ²/2) ∂²_i`.
fn relaxation_generator(grid: &SpectralGrid, sigma: f64) -> DMatrix<f64> {
    let dp = diag_of(grid.nodes.iter().map(|&x| phi(x)));
    &grid.d1 * dp + &grid.d2 * (sigma * sigma / 2.0)
}

/// Assemble the Fokker-Planck benchmark on `[0, 2π]^d` with `n` points per
/// mode and diffusion strength `sigma`.
pub fn build_fokker_planck(n: usize, d: usize, sigma: f64) -> Result<ProblemSpec<f64>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "Fokker-Planck needs d >= 2, got {d}"
        )));
    }
    let grid = spectral_grid(DomainKind::Periodic, n)?;
    let sizes = vec![n; d];

    // Full operator: all advection terms plus per-mode relaxation/diffusion.
    let mut full = TtLinOp::new(sizes.clone());
    for op in advection_ops(&grid, d)? {
        full = TtLinOp::scaled_sum(1.0, &full, 1.0, &op)?;
    }
    for i in 0..d {
        full.add_single_mode(1.0, i, relaxation_generator(&grid, sigma))?;
    }

    let g: super::spec::GFn<f64> = {
        let full = full.clone();
        Box::new(move |f: &TtTensor<f64>| full.apply(f))
    };
    let j_g: super::spec::JFn<f64> = {
        let full = full.clone();
        Box::new(move |_f: &TtTensor<f64>| Ok(full.clone()))
    };

    // Split: d exact single-mode relaxation/diffusion propagators, then the
    // 2d advection sub-flows in the two batches.
    let mut split = Vec::with_capacity(3 * d);
    for i in 0..d {
        split.push(SplitTerm::Mode {
            mode: i,
            generator: relaxation_generator(&grid, sigma),
        });
    }
    for op in advection_ops(&grid, d)? {
        let j_op = op.clone();
        split.push(SplitTerm::Ode {
            g: Box::new(move |f: &TtTensor<f64>| op.apply(f)),
            j: Box::new(move |_f: &TtTensor<f64>| Ok(j_op.clone())),
        });
    }

    let f0 = initial_condition(&grid, d)?;

    // Dense twin: evaluate the same term list through pointwise-sampled
    // coefficient tensors and dense differentiation, independent of the
    // structured-operator code path.
    let dense_g: super::spec::DenseGFn<f64> = {
        let grid = grid.clone();
        Box::new(move |f: &DenseTensor<f64>| {
            let mut acc = DenseTensor::zeros(f.mode_sizes().to_vec());
            let node = |idx: &[usize], k: usize| grid.nodes[idx[k]];
            for i in 0..d {
                let ip1 = (i + 1) % d;
                let im1 = (i + d - 1) % d;
                let im2 = (i + d - 2) % d;
                let df = f.mode_apply(&grid.d1, i)?;
                let c_out = DenseTensor::from_fn(f.mode_sizes().to_vec(), |idx| {
                    -gamma(node(idx, ip1)) * xi(node(idx, im1))
                });
                let c_in = DenseTensor::from_fn(f.mode_sizes().to_vec(), |idx| {
                    gamma(node(idx, im2)) * xi(node(idx, im1))
                });
                acc = DenseTensor::axpy(1.0, &acc, 1.0, &c_out.hadamard(&df)?)?;
                acc = DenseTensor::axpy(1.0, &acc, 1.0, &c_in.hadamard(&df)?)?;
                let phif = DenseTensor::from_fn(f.mode_sizes().to_vec(), |idx| phi(node(idx, i)))
                    .hadamard(f)?;
                acc = DenseTensor::axpy(1.0, &acc, 1.0, &phif.mode_apply(&grid.d1, i)?)?;
                acc = DenseTensor::axpy(
                    1.0,
                    &acc,
                    sigma * sigma / 2.0,
                    &f.mode_apply(&grid.d2, i)?,
                )?;
            }
            Ok(acc)
        })
    };

    let weight = grid.weight;
    let observables: Vec<(&'static str, super::spec::ObservableFn<f64>)> = vec![
        ("mass", {
            let sizes = sizes.clone();
            Box::new(move |f: &TtTensor<f64>| {
                let ones = TtTensor::constant(&sizes, 1.0);
                Ok(tt_inner(&ones, f)? * weight.powi(sizes.len() as i32))
            })
        }),
        ("l2_norm", Box::new(|f: &TtTensor<f64>| Ok(tt_norm(f)))),
    ];

    Ok(ProblemSpec {
        name: "fokker_planck",
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

/// Number of separable summands in the initial density.
const IC_TERMS: usize = 10;

/// Initial density: a sum of `2M` rank-one products of shifted sinusoidal
/// and exponential-of-cosine profiles with geometrically decaying weights
/// (ranks bounded by `2M`), normalized to unit quadrature mass.
fn initial_condition(grid: &SpectralGrid, d: usize) -> Result<TtTensor<f64>> {
    let mut acc: Option<TtTensor<f64>> = None;
    for j in 1..=IC_TERMS {
        let jf = j as f64;
        let sin_factor: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&x| (((2.0 * jf - 1.0) * x - PI / 2.0).sin() + 1.0) / 4.0f64.powi(j as i32 - 1))
            .collect();
        let exp_factor: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&x| (2.0 * jf * x + PI).cos().exp() / 2.0f64.powi(2 * j as i32 - 1))
            .collect();
        for factor in [sin_factor, exp_factor] {
            let term = TtTensor::rank_one(&vec![factor; d])?;
            acc = Some(match acc {
                None => term,
                Some(a) => tt_axpy(1.0, &a, 1.0, &term)?,
            });
        }
    }
    let raw = tt_round(&acc.unwrap(), &RoundingSpec::rel(1e-13))?;
    let ones = TtTensor::constant(&raw.mode_sizes(), 1.0);
    let mass = tt_inner(&ones, &raw)? * grid.weight.powi(d as i32);
    Ok(raw.scale(1.0 / mass))
}
