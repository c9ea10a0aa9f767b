//! Nonlinear Schrödinger equation on `[0, π]^d` with homogeneous Dirichlet
//! boundaries: `∂φ/∂t = (i/2)Δφ − iVφ − iε|φ|²φ`, where the interaction
//! potential is a sum of one-dimensional double-well profiles with mollified
//! barriers at `x = 0` and `x = π`, and the initial state is a product of
//! pure sine states normalized to a total mass equal to the particle count.

use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::linop::TtLinOp;
use crate::tt::{mode_apply, tt_axpy, tt_hadamard, tt_inner, tt_norm, RoundingSpec, TtTensor};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::grid::{spectral_grid, to_complex, DomainKind, SpectralGrid};
use super::spec::{ProblemSpec, SplitTerm};

const HADAMARD_TOL: f64 = 1e-12;

/// Mollifier converging weakly to `1 + δ(x) + δ(x − π)` as `θ → 0`.
fn mollifier(x: f64, theta: f64) -> f64 {
    1.0 + ((-x * x / (2.0 * theta * theta)).exp()
        + (-(x - PI) * (x - PI) / (2.0 * theta * theta)).exp())
        / ((2.0 * PI).sqrt() * theta)
}

/// One-dimensional double-well potential profile.
pub fn well_potential(x: f64, theta: f64) -> f64 {
    (1.0 + x.cos().powi(2).exp() + 0.75 * (1.0 + x.sin().powi(2).exp())) * mollifier(x, theta)
}

fn im(v: f64) -> Complex64 {
    Complex64::new(0.0, v)
}

/// Single-mode generator of the linear sub-flow: `(i/2) ∂²_k − i W(x_k)`.
fn mode_generator(grid: &SpectralGrid, theta: f64) -> DMatrix<Complex64> {
    let mut m = to_complex(&grid.d2) * im(0.5);
    for j in 0..grid.n {
        m[(j, j)] += im(-well_potential(grid.nodes[j], theta));
    }
    m
}

/// Assemble the Schrödinger benchmark with mollifier width `theta` and
/// interaction strength `eps_nl` on `n` interior points per mode.
pub fn build_nls(n: usize, d: usize, theta: f64, eps_nl: f64) -> Result<ProblemSpec<Complex64>> {
    if theta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "mollifier width must be positive, got {theta}"
        )));
    }
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    if d > n {
        return Err(Error::InvalidArgument(format!(
            "per-mode wavenumbers 1..={d} need n >= d, got n = {n}"
        )));
    }
    let grid = spectral_grid(DomainKind::Dirichlet, n)?;
    let sizes = vec![n; d];

    let mut lin = TtLinOp::new(sizes.clone());
    for k in 0..d {
        lin.add_single_mode(Complex64::new(1.0, 0.0), k, mode_generator(&grid, theta))?;
    }

    let had = RoundingSpec::rel(HADAMARD_TOL);
    let nonlinear = move |f: &TtTensor<Complex64>, had: &RoundingSpec| -> Result<TtTensor<Complex64>> {
        let density = tt_hadamard(&f.conjugate(), f, Some(had))?;
        Ok(tt_hadamard(&density, f, Some(had))?.scale(im(-eps_nl)))
    };

    let g: super::spec::GFn<Complex64> = {
        let lin = lin.clone();
        let had = had.clone();
        Box::new(move |f: &TtTensor<Complex64>| {
            let one = Complex64::new(1.0, 0.0);
            tt_axpy(one, &lin.apply(f)?, one, &nonlinear(f, &had)?)
        })
    };

    // Linearization of `−iε|φ|²φ`: `s ↦ −iε(2|φ|² s + φ² s̄)`.
    let nonlinear_jacobian = move |op: &mut TtLinOp<Complex64>,
                                   f: &TtTensor<Complex64>,
                                   had: &RoundingSpec|
          -> Result<()> {
        let density = tt_hadamard(&f.conjugate(), f, Some(had))?;
        op.add_diag(im(-2.0 * eps_nl), density)?;
        op.add_diag_conj(im(-eps_nl), tt_hadamard(f, f, Some(had))?)?;
        Ok(())
    };

    let j_g: super::spec::JFn<Complex64> = {
        let lin = lin.clone();
        let had = had.clone();
        Box::new(move |f: &TtTensor<Complex64>| {
            let mut op = lin.clone();
            nonlinear_jacobian(&mut op, f, &had)?;
            Ok(op)
        })
    };

    let mut split: Vec<SplitTerm<Complex64>> = (0..d)
        .map(|k| SplitTerm::Mode {
            mode: k,
            generator: mode_generator(&grid, theta),
        })
        .collect();
    split.push(SplitTerm::Ode {
        g: {
            let had = had.clone();
            Box::new(move |f: &TtTensor<Complex64>| nonlinear(f, &had))
        },
        j: {
            let sizes = sizes.clone();
            let had = had.clone();
            Box::new(move |f: &TtTensor<Complex64>| {
                let mut op = TtLinOp::new(sizes.clone());
                nonlinear_jacobian(&mut op, f, &had)?;
                Ok(op)
            })
        },
    });

    let f0 = initial_condition(&grid, d)?;

    let dense_g: super::spec::DenseGFn<Complex64> = {
        let grid = grid.clone();
        Box::new(move |f: &DenseTensor<Complex64>| {
            let d2c = to_complex(&grid.d2);
            let mut acc = DenseTensor::zeros(f.mode_sizes().to_vec());
            let one = Complex64::new(1.0, 0.0);
            for k in 0..d {
                acc = DenseTensor::axpy(one, &acc, im(0.5), &f.mode_apply(&d2c, k)?)?;
            }
            let v = DenseTensor::from_fn(f.mode_sizes().to_vec(), |idx| {
                let total: f64 = idx
                    .iter()
                    .map(|&j| well_potential(grid.nodes[j], theta))
                    .sum();
                Complex64::new(total, 0.0)
            });
            acc = DenseTensor::axpy(one, &acc, im(-1.0), &v.hadamard(f)?)?;
            let density = f.conjugate().hadamard(f)?;
            DenseTensor::axpy(one, &acc, im(-eps_nl), &density.hadamard(f)?)
        })
    };

    let weight = grid.weight;
    let wd = weight.powi(d as i32);
    let observables: Vec<(&'static str, super::spec::ObservableFn<Complex64>)> = vec![
        ("mass", Box::new(move |f: &TtTensor<Complex64>| Ok(tt_inner(f, f)?.re * wd))),
        ("hamiltonian", {
            let grid = grid.clone();
            let had = had.clone();
            Box::new(move |f: &TtTensor<Complex64>| hamiltonian(f, &grid, theta, eps_nl, &had))
        }),
        ("l2_norm", Box::new(|f: &TtTensor<Complex64>| Ok(tt_norm(f)))),
    ];

    Ok(ProblemSpec {
        name: "nls",
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

/// Discrete energy `Σ_k -(1/4)⟨φ, ∂²_k φ⟩ + (1/2)⟨φ, V φ⟩ + (ε/4)‖φ‖⁴_{4}`
/// under the grid quadrature. The kinetic term goes through the second
/// derivative (the Galerkin form of `(1/4)‖∂_k φ‖²` for the sine
/// interpolant); this is the quadratic form the exact discrete linear flow
/// conserves, so its drift measures only splitting and truncation error.
fn hamiltonian(
    f: &TtTensor<Complex64>,
    grid: &SpectralGrid,
    theta: f64,
    eps_nl: f64,
    had: &RoundingSpec,
) -> Result<f64> {
    let d = f.order();
    let wd = grid.weight.powi(d as i32);
    let d2c = to_complex(&grid.d2);
    let mut total = 0.0;
    for k in 0..d {
        total += -0.25 * wd * tt_inner(f, &mode_apply(&d2c, f, k)?)?.re;
        let w_diag = DMatrix::from_fn(grid.n, grid.n, |r, c| {
            if r == c {
                Complex64::new(well_potential(grid.nodes[r], theta), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        total += 0.5 * wd * tt_inner(f, &mode_apply(&w_diag, f, k)?)?.re;
    }
    let density = tt_hadamard(&f.conjugate(), f, Some(had))?;
    total += 0.25 * eps_nl * wd * tt_inner(&density, &density)?.re;
    Ok(total)
}

/// Product of pure states `c_k sin(k x_k)`, with `c_k` chosen so the total
/// quadrature mass equals the particle count `d`:
/// `c_k = d^{1/(2d)} sqrt(4k / (2kπ − sin(2πk)))`.
fn initial_condition(grid: &SpectralGrid, d: usize) -> Result<TtTensor<Complex64>> {
    let factors: Vec<Vec<Complex64>> = (1..=d)
        .map(|k| {
            let kf = k as f64;
            let c = (d as f64).powf(1.0 / (2.0 * d as f64))
                * (4.0 * kf / (2.0 * kf * PI - (2.0 * PI * kf).sin())).sqrt();
            grid.nodes
                .iter()
                .map(|&x| Complex64::new(c * (kf * x).sin(), 0.0))
                .collect()
        })
        .collect();
    TtTensor::rank_one(&factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::tt_to_dense;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, d: usize, seed: u64) -> TtTensor<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ranks = vec![2usize; d - 1];
        TtTensor::random(&vec![n; d], &ranks, &mut rng).unwrap()
    }

    #[test]
    fn initial_mass_equals_particle_count() {
        for d in [2, 3] {
            let p = build_nls(17, d, 0.1, 1e-4).unwrap();
            let mass = p.observable("mass", &p.f0).unwrap().unwrap();
            assert!((mass - d as f64).abs() < 1e-8, "d = {d}: mass {mass}");
        }
    }

    #[test]
    fn pure_state_laplacian_eigenvalue() {
        // With the potential contribution removed, the initial product of
        // sine modes is an eigenfunction: G(φ) + iVφ = −(i/2)(Σ k²)φ.
        let d = 2;
        let p = build_nls(17, d, 0.1, 0.0).unwrap();
        let phi = tt_to_dense(&p.f0).unwrap();
        let g = tt_to_dense(&(p.g)(&p.f0).unwrap()).unwrap();
        let v = DenseTensor::from_fn(phi.mode_sizes().to_vec(), |idx| {
            let total: f64 = idx
                .iter()
                .map(|&j| well_potential(p.grid.nodes[j], 0.1))
                .sum();
            Complex64::new(total, 0.0)
        });
        let one = Complex64::new(1.0, 0.0);
        let linear = DenseTensor::axpy(one, &g, im(1.0), &v.hadamard(&phi).unwrap()).unwrap();
        let expect = phi.scale(im(-0.5 * (1.0 + 4.0)));
        let err = DenseTensor::axpy(one, &linear, -one, &expect).unwrap().norm();
        assert!(err <= 1e-9 * expect.norm(), "error {err}");
    }

    #[test]
    fn oracle_twin_consistency() {
        let p = build_nls(17, 2, 0.1, 1e-4).unwrap();
        let f = random_state(17, 2, 31);
        let tt = tt_to_dense(&(p.g)(&f).unwrap()).unwrap();
        let dn = (p.dense_g)(&tt_to_dense(&f).unwrap()).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let err = DenseTensor::axpy(one, &tt, -one, &dn).unwrap().norm();
        assert!(err <= 1e-10 * dn.norm(), "twin mismatch {err}");
    }

    #[test]
    fn linear_part_conserves_mass() {
        // The generator (i/2)Δ − iV is anti-Hermitian: Re⟨φ, G φ⟩ = 0.
        let p = build_nls(17, 2, 0.1, 0.0).unwrap();
        let f = random_state(17, 2, 33);
        let gf = (p.g)(&f).unwrap();
        let inner = tt_inner(&f, &gf).unwrap();
        assert!(inner.re.abs() <= 1e-10 * tt_norm(&f) * tt_norm(&gf));
    }

    #[test]
    fn observables_match_dense_quadrature_oracle() {
        let p = build_nls(17, 2, 0.1, 1e-4).unwrap();
        let f = random_state(17, 2, 35);
        let fd = tt_to_dense(&f).unwrap();
        let w = p.grid.weight;
        let wd = w * w;

        let mass_dense: f64 = fd.data().iter().map(|z| z.norm_sqr()).sum::<f64>() * wd;
        let mass = p.observable("mass", &f).unwrap().unwrap();
        assert!((mass - mass_dense).abs() <= 1e-10 * mass_dense.abs().max(1.0));

        // Kinetic oracle in sine-coefficient space: applying the inverse
        // collocation transform on one mode turns `-(1/4)⟨φ, ∂²_k φ⟩` into
        // `(1/4)·(n+1)/2·Σ (j+1)²|φ̂|²` by sine orthogonality.
        let n = 17;
        let s_inv = DMatrix::from_fn(n, n, |r, c| {
            let x = p.grid.nodes[c];
            Complex64::new(2.0 / (n as f64 + 1.0) * ((r as f64 + 1.0) * x).sin(), 0.0)
        });
        let mut ham_dense = 0.0;
        for k in 0..2 {
            let coeffs = fd.mode_apply(&s_inv, k).unwrap();
            let mut kin = 0.0;
            for (flat, z) in coeffs.data().iter().enumerate() {
                let j = if k == 0 { flat % n } else { flat / n };
                kin += ((j + 1) * (j + 1)) as f64 * z.norm_sqr();
            }
            ham_dense += 0.25 * wd * (n as f64 + 1.0) / 2.0 * kin;
        }
        let nodes = p.grid.nodes.clone();
        let mut idx_pot = 0.0;
        for c in 0..17 {
            for r in 0..17 {
                let vv = well_potential(nodes[r], 0.1) + well_potential(nodes[c], 0.1);
                idx_pot += 0.5 * wd * vv * fd.data()[r + 17 * c].norm_sqr();
            }
        }
        ham_dense += idx_pot;
        ham_dense += 0.25
            * 1e-4
            * wd
            * fd.data().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>();
        let ham = p.observable("hamiltonian", &f).unwrap().unwrap();
        assert!(
            (ham - ham_dense).abs() <= 1e-10 * ham_dense.abs().max(1.0),
            "hamiltonian {ham} vs dense {ham_dense}"
        );
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = build_nls(9, 2, 0.1, 1e-2).unwrap();
        let f = random_state(9, 2, 37);
        let s = random_state(9, 2, 38);
        let fd = tt_to_dense(&f).unwrap();
        let sd = tt_to_dense(&s).unwrap();
        let js = (p.j_g)(&f).unwrap().apply_dense(&sd).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let mut errs = Vec::new();
        for h in [1e-4, 1e-5] {
            let hz = Complex64::new(h, 0.0);
            let fp = DenseTensor::axpy(one, &fd, hz, &sd).unwrap();
            let diff = DenseTensor::axpy(
                one / hz,
                &(p.dense_g)(&fp).unwrap(),
                -one / hz,
                &(p.dense_g)(&fd).unwrap(),
            )
            .unwrap();
            errs.push(DenseTensor::axpy(one, &diff, -one, &js).unwrap().norm());
        }
        assert!(errs[1] < 0.3 * errs[0], "FD errors {errs:?}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(build_nls(17, 2, 0.0, 1e-4).is_err());
        assert!(build_nls(17, 2, -1.0, 1e-4).is_err());
        assert!(build_nls(17, 1, 0.1, 1e-4).is_err());
    }
}
