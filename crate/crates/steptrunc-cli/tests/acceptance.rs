//! Acceptance suite: ten numbered criteria covering the rounding contract,
//! the benchmark problems, the solvers, and the integrators, each validated
//! against a dense oracle where one fits in memory.
//!
//! Runs with a custom harness so the criteria execute sequentially (two of
//! them compare wall times) and each prints exactly one pass/fail line.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use steptrunc::dense::{dense_rk4_adaptive, DenseTensor};
use steptrunc::integrators::{step_implicit_st, ImplicitScheme, ThresholdSchedule};
use steptrunc::linop::{Factor, TtLinOp};
use steptrunc::problems::allen_cahn::initial_condition as allen_cahn_initial;
use steptrunc::problems::{build_allen_cahn, build_fokker_planck, build_nls, spectral_grid, DomainKind};
use steptrunc::solvers::{gmres_solve, newton_solve, Forcing, GmresConfig, NewtonConfig};
use steptrunc::tt::{
    tt_axpy, tt_hadamard, tt_norm, tt_round, tt_to_dense, RoundingSpec, TtTensor,
};

use steptrunc_cli::config::ExperimentConfig;
use steptrunc_cli::runner::run_with;

type Criterion = (usize, &'static str, fn() -> Result<String, String>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "rounding contract on 1000 seeded tensors", criterion_01),
        (2, "reaction-diffusion initial-condition rank", criterion_02),
        (3, "implicit convergence orders", criterion_03),
        (4, "stiff stability explicit vs implicit", criterion_04),
        (5, "implicit linear-flow error floor", criterion_05),
        (6, "inexact Newton on the cubic system", criterion_06),
        (7, "GMRES residual certificate and distance bound", criterion_07),
        (8, "Schrödinger invariant conservation", criterion_08),
        (9, "Jacobian finite-difference consistency", criterion_09),
        (10, "implicit relative efficiency", criterion_10),
    ];
    let mut failures = 0;
    for (num, name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run));
        match outcome {
            Ok(Ok(detail)) => println!("criterion {num:02} ({name}): PASS  [{detail}]"),
            Ok(Err(detail)) => {
                failures += 1;
                println!("criterion {num:02} ({name}): FAIL  [{detail}]");
            }
            Err(panic) => {
                failures += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| panic.downcast_ref::<&str>().copied())
                    .unwrap_or("panicked");
                println!("criterion {num:02} ({name}): FAIL  [panic: {msg}]");
            }
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

fn ensure(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn parse_cfg(json: &str) -> ExperimentConfig {
    let cfg: ExperimentConfig = serde_json::from_str(json).expect("test config must parse");
    cfg.validate().expect("test config must validate");
    cfg
}

// --- 1 ------------------------------------------------------------------
// Every truncation satisfies the advertised error bound against the dense
// expansion, across 1000 seeded tensors of order <= 5 with modes <= 8.
fn criterion_01() -> Result<String, String> {
    let mut worst = 0.0f64;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 2 + (seed % 4) as usize; // 2..=5
        let sizes: Vec<usize> = (0..d).map(|k| 3 + ((seed as usize + 2 * k) % 6)).collect();
        let ranks: Vec<usize> = (0..d - 1).map(|k| 1 + ((seed as usize + 3 * k) % 5)).collect();
        let f = TtTensor::<f64>::random(&sizes, &ranks, &mut rng).unwrap();
        let norm = tt_norm(&f);

        // Alternate between absolute, relative and mixed tolerances.
        let (tol_abs, tol_rel) = match seed % 3 {
            0 => (norm * 10f64.powi(-((seed % 7) as i32) - 1), 0.0),
            1 => (0.0, 10f64.powi(-((seed % 7) as i32) - 1)),
            _ => (norm * 1e-3, 1e-4),
        };
        let spec = RoundingSpec { tol_abs, tol_rel, max_rank: None };
        let r = tt_round(&f, &spec).unwrap();
        let err = DenseTensor::axpy(1.0, &tt_to_dense(&f).unwrap(), -1.0, &tt_to_dense(&r).unwrap())
            .unwrap()
            .norm();
        let allowed = tol_abs.max(tol_rel * norm);
        let margin = err / (allowed + f64::MIN_POSITIVE);
        worst = worst.max(margin);
        if err > allowed * (1.0 + 1e-10) + 1e-14 {
            return Err(format!("seed {seed}: error {err:.3e} exceeds bound {allowed:.3e}"));
        }
        for (a, b) in r.rank_vector().iter().zip(f.rank_vector()) {
            if *a > b {
                return Err(format!("seed {seed}: rounding increased a rank"));
            }
        }
    }
    Ok(format!("1000/1000 within bound, worst fill {:.1}%", worst * 100.0))
}

// --- 2 ------------------------------------------------------------------
// The reaction-diffusion initial condition on the 257x257 periodic grid
// truncates to rank 90 +/- 2 at 1e-9 absolute+relative.
fn criterion_02() -> Result<String, String> {
    let f = allen_cahn_initial(257, &RoundingSpec::abs_rel(1e-9, 1e-9)).map_err(|e| e.to_string())?;
    let rank = f.max_rank();
    ensure((88..=92).contains(&rank), format!("rank {rank}, expected 90 +/- 2"))
}

// --- 3 ------------------------------------------------------------------
// Implicit Euler and implicit midpoint converge with orders one and two on
// the 2D Fokker-Planck problem, measured against a tight dense reference.
fn criterion_03() -> Result<String, String> {
    let base = r#"{"problem": "fokker_planck", "n": 16, "d": 2, "sigma": 2.0,
                   "scheme": "imp_euler", "dt": 4e-3, "t_final": 0.1,
                   "reference": {"dense": {"abs_tol": 1e-12}}}"#;
    let dts = [4e-3, 2e-3, 1e-3, 5e-4];

    let cfg = parse_cfg(base);
    let euler = steptrunc_cli::runner::convergence_sweep(&cfg, &dts).map_err(|e| e.to_string())?;
    let s1 = euler.slope.ok_or_else(|| format!("euler sweep failed: {:?}", euler.failure))?;

    let mut cfg = parse_cfg(base);
    cfg.scheme = steptrunc_cli::config::SchemeKind::ImpMidpoint;
    let mid = steptrunc_cli::runner::convergence_sweep(&cfg, &dts).map_err(|e| e.to_string())?;
    let s2 = mid.slope.ok_or_else(|| format!("midpoint sweep failed: {:?}", mid.failure))?;

    ensure(
        (s1 - 1.0).abs() <= 0.15 && (s2 - 2.0).abs() <= 0.25,
        format!("slopes {s1:.3} (want 1.0 +/- 0.15) and {s2:.3} (want 2.0 +/- 0.25)"),
    )
}

// --- 4 ------------------------------------------------------------------
// At dt = 1e-2 on the n=129 reaction-diffusion problem the explicit
// midpoint scheme blows past 10^3 x the initial norm while the implicit
// midpoint scheme stays bounded and accurate (checked on an n=65
// resampling against a dense reference computed at that resolution).
fn criterion_04() -> Result<String, String> {
    let exp_cfg = parse_cfg(
        r#"{"problem": "allen_cahn", "n": 129, "eps_diff": 0.1,
            "scheme": "exp_midpoint", "dt": 1e-2, "t_final": 2.0}"#,
    );
    let explicit = run_with(&exp_cfg, |_| {}).map_err(|e| e.to_string())?;
    if !explicit.diverged() {
        return Err(format!(
            "explicit run stayed bounded (max norm ratio {:.3e})",
            explicit.max_norm_ratio
        ));
    }

    // Implicit run through the library so the final state is available.
    let p = build_allen_cahn(129, 0.1).map_err(|e| e.to_string())?;
    let sched = ThresholdSchedule::default();
    let newton = NewtonConfig {
        eps_tol: 1.0, // overridden per step by the schedule
        forcing: Forcing::Constant(sched.eta),
        ..NewtonConfig::new(1.0, sched.eta)
    };
    let (dt, n_steps) = (1e-2, 200);
    let mut f = p.f0.clone();
    let norm0 = tt_norm(&f);
    let mut t = 0.0;
    for _ in 0..n_steps {
        let (next, _) = step_implicit_st(
            ImplicitScheme::Midpoint,
            p.g.as_ref(),
            p.j_g.as_ref(),
            &f,
            t,
            dt,
            &sched,
            &newton,
        )
        .map_err(|e| format!("implicit step failed: {e}"))?;
        f = next;
        t += dt;
        if tt_norm(&f) > 1e3 * norm0 {
            return Err("implicit trajectory diverged".into());
        }
    }

    // Dense reference on the coarser n=65 grid.
    let p65 = build_allen_cahn(65, 0.1).map_err(|e| e.to_string())?;
    let mut reference = tt_to_dense(&p65.f0).map_err(|e| e.to_string())?;
    reference = dense_rk4_adaptive(p65.dense_g.as_ref(), &reference, 2.0, 1e-8)
        .map_err(|e| e.to_string())?;

    // Resample the fine solution by evaluating its trigonometric
    // interpolant on the coarse nodes.
    let fine = tt_to_dense(&f).map_err(|e| e.to_string())?;
    let fine_m = DMatrix::from_column_slice(129, 129, fine.data().as_slice());
    let resample = periodic_resample_matrix(65, 129);
    let coarse = &resample * fine_m * resample.transpose();
    let ref_m = DMatrix::from_column_slice(65, 65, reference.data().as_slice());
    let err = (&coarse - &ref_m).norm() / ref_m.norm();
    ensure(
        err <= 5e-2,
        format!(
            "explicit max norm ratio {:.2e} > 1e3; implicit resampled error {err:.3e} (budget 5e-2)",
            explicit.max_norm_ratio
        ),
    )
}

/// Trigonometric resampling matrix from the `n_from`-point periodic grid to
/// the `n_to`-point one (both odd): the Dirichlet kernel of the full
/// interpolant evaluated at the coarse nodes.
fn periodic_resample_matrix(n_to: usize, n_from: usize) -> DMatrix<f64> {
    let half = (n_from - 1) / 2;
    DMatrix::from_fn(n_to, n_from, |i, j| {
        let theta = 2.0 * PI * i as f64 / n_to as f64 - 2.0 * PI * j as f64 / n_from as f64;
        let mut s = 1.0;
        for k in 1..=half {
            s += 2.0 * (k as f64 * theta).cos();
        }
        s / n_from as f64
    })
}

// --- 5 ------------------------------------------------------------------
// Implicit Euler on pure diffusion far beyond the explicit limit, solved
// per step by GMRES at tolerance eps_k = eta / ||W f_k||: every iterate
// stays within the theoretical distance bound of the exact linear flow,
// and the trajectory decays to the O(eta) floor.
fn criterion_05() -> Result<String, String> {
    let n = 16;
    let grid = spectral_grid(DomainKind::Dirichlet, n).map_err(|e| e.to_string())?;
    let dt = 1.0; // explicit Euler limit is 2/512 here
    let eta = 1e-6;

    // A = I - dt * (D2 (+) D2), W = I.
    let mut a = TtLinOp::<f64>::identity(vec![n, n]);
    a.add_single_mode(-dt, 0, grid.d2.clone()).map_err(|e| e.to_string())?;
    a.add_single_mode(-dt, 1, grid.d2.clone()).map_err(|e| e.to_string())?;

    let a_dense = a.dense_matrix().map_err(|e| e.to_string())?;
    let sv = a_dense.clone().svd(false, false).singular_values;
    let norm_a = sv.max();
    let norm_a_inv = 1.0 / sv.min();
    let contraction = norm_a_inv; // ||A^{-1} W|| with W = I
    if contraction >= 1.0 {
        return Err("test operator is not contractive".into());
    }
    let lu = a_dense.clone().lu();

    // Smooth rank-1 start.
    let profile: Vec<f64> = grid.nodes.iter().map(|x| x.sin()).collect();
    let mut f_hat = TtTensor::rank_one(&[profile.clone(), profile]).unwrap();
    let mut f_exact = tt_to_dense(&f_hat).unwrap();

    let mut steps = 0;
    let mut worst_fill = 0.0f64;
    while tt_norm(&f_hat) > 10.0 * eta {
        steps += 1;
        if steps > 60 {
            return Err(format!("no decay to the floor after 60 steps, norm {:.3e}", tt_norm(&f_hat)));
        }
        let b = f_hat.clone();
        let eps_k = eta / tt_norm(&b);
        let cfg = GmresConfig::new(eps_k.min(0.5), 150);
        let x0 = TtTensor::zeros(&[n, n]);
        let (x, report) = gmres_solve(&a, &b, &x0, &cfg).map_err(|e| e.to_string())?;
        if !report.converged {
            return Err(format!("solver did not converge at step {steps}"));
        }
        f_hat = x;

        // Exact linear flow, advanced by a dense direct solve.
        let solved = lu
            .solve(f_exact.data())
            .ok_or("dense solve failed")?;
        f_exact = DenseTensor::new(vec![n, n], solved.as_slice().to_vec()).unwrap();

        let dist = DenseTensor::axpy(1.0, &tt_to_dense(&f_hat).unwrap(), -1.0, &f_exact)
            .unwrap()
            .norm();
        let m = report.iterations as f64;
        let bound = m * norm_a * norm_a_inv * norm_a_inv * eta / (1.0 - contraction);
        worst_fill = worst_fill.max(dist / bound);
        if dist > bound {
            return Err(format!("step {steps}: distance {dist:.3e} exceeds bound {bound:.3e}"));
        }
    }
    Ok(format!(
        "floor {:.2e} <= 10 eta after {steps} steps, worst bound fill {:.1}%",
        tt_norm(&f_hat),
        worst_fill * 100.0
    ))
}

// --- 6 ------------------------------------------------------------------
// The inexact Newton method solves the cubic system
// H(f) = 1.5 f + 0.5 f0 + 0.125 (f + f0)^3 to 2.2e-8 in at most 20
// iterations, with geometrically decreasing residuals after iteration 2.
fn criterion_06() -> Result<String, String> {
    let f0 = allen_cahn_initial(65, &RoundingSpec::abs_rel(1e-9, 1e-9)).map_err(|e| e.to_string())?;
    let round = RoundingSpec::rel(1e-12);

    let f0_h = f0.clone();
    let h = move |f: &TtTensor<f64>| {
        let s = tt_axpy(1.0, f, 1.0, &f0_h)?;
        let s2 = tt_hadamard(&s, &s, Some(&round))?;
        let s3 = tt_hadamard(&s2, &s, Some(&round))?;
        let lin = tt_axpy(1.5, f, 0.5, &f0_h)?;
        tt_round(&tt_axpy(1.0, &lin, 0.125, &s3)?, &round)
    };
    let f0_j = f0.clone();
    let j = move |f: &TtTensor<f64>| {
        let s = tt_axpy(1.0, f, 1.0, &f0_j)?;
        let s2 = tt_hadamard(&s, &s, Some(&round))?;
        let mut op = TtLinOp::new(vec![65, 65]);
        op.add_kron(1.5, vec![Factor::Identity, Factor::Identity])?;
        op.add_diag(0.375, s2)?;
        Ok(op)
    };

    let cfg = NewtonConfig {
        max_iters: 20,
        ..NewtonConfig::new(2.2e-8, 1e-3)
    };
    let (_, report) = newton_solve(h, j, &f0, &cfg).map_err(|e| e.to_string())?;
    if !report.converged || report.iterations > 20 {
        return Err(format!(
            "converged={} in {} iterations, residual {:.3e}",
            report.converged, report.iterations, report.final_residual
        ));
    }
    let hist = &report.residual_history;
    for w in hist[2..].windows(2) {
        if w[1] >= w[0] {
            return Err(format!("residuals not decreasing after iteration 2: {hist:?}"));
        }
    }
    Ok(format!(
        "residual {:.2e} in {} iterations",
        report.final_residual, report.iterations
    ))
}

// --- 7 ------------------------------------------------------------------
// On dense-checkable systems, every converged GMRES solve satisfies both
// the measured relative residual <= eps and the solver's a-priori distance
// bound ||x - x*|| <= m ||A|| ||A^{-1}||^2 ||b|| eps with dense norms.
fn criterion_07() -> Result<String, String> {
    let n = 16;
    let grid = spectral_grid(DomainKind::Periodic, n).map_err(|e| e.to_string())?;
    let dt = 0.1;
    let eps = 1e-8;

    let mut a = TtLinOp::<f64>::identity(vec![n, n]);
    a.add_single_mode(-dt, 0, grid.d2.clone()).map_err(|e| e.to_string())?;
    a.add_single_mode(-dt, 1, grid.d2.clone()).map_err(|e| e.to_string())?;
    let a_dense = a.dense_matrix().map_err(|e| e.to_string())?;
    let sv = a_dense.clone().svd(false, false).singular_values;
    let (norm_a, norm_a_inv) = (sv.max(), 1.0 / sv.min());
    let lu = a_dense.lu();

    let mut worst_fill = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = TtTensor::<f64>::random(&[n, n], &[2], &mut rng).unwrap();
        let b_norm = tt_norm(&b);
        let cfg = GmresConfig::new(eps, 200);
        let x0 = TtTensor::zeros(&[n, n]);
        let (x, report) = gmres_solve(&a, &b, &x0, &cfg).map_err(|e| e.to_string())?;
        if !report.converged {
            return Err(format!("seed {seed}: not converged"));
        }
        if report.final_residual > eps * b_norm * (1.0 + 1e-8) {
            return Err(format!(
                "seed {seed}: measured residual {:.3e} above eps*||b|| = {:.3e}",
                report.final_residual,
                eps * b_norm
            ));
        }
        let bd = tt_to_dense(&b).unwrap();
        let x_exact = lu.solve(bd.data()).ok_or("dense solve failed")?;
        let dist = (tt_to_dense(&x).unwrap().data() - &x_exact).norm();
        let m = report.iterations as f64;
        let bound = m * norm_a * norm_a_inv * norm_a_inv * b_norm * eps;
        worst_fill = worst_fill.max(dist / bound);
        if dist > bound {
            return Err(format!("seed {seed}: distance {dist:.3e} above bound {bound:.3e}"));
        }
    }
    Ok(format!("5/5 systems certified, worst bound fill {:.1}%", worst_fill * 100.0))
}

// --- 8 ------------------------------------------------------------------
// 100 Strang-split implicit midpoint steps of the cubic Schrödinger
// problem conserve the particle number to 1e-6 and the energy to 1e-4.
fn criterion_08() -> Result<String, String> {
    let p = build_nls(17, 3, 0.1, 1e-4).map_err(|e| e.to_string())?;
    let mass0 = p.observable("mass", &p.f0).unwrap().map_err(|e| e.to_string())?;
    let ham0 = p.observable("hamiltonian", &p.f0).unwrap().map_err(|e| e.to_string())?;

    let cfg = parse_cfg(
        r#"{"problem": "nls", "n": 17, "d": 3, "theta": 0.1, "eps_nl": 1e-4,
            "scheme": "imp_midpoint", "splitting": "strang",
            "dt": 5e-2, "t_final": 5.0}"#,
    );
    let outcome = run_with(&cfg, |_| {}).map_err(|e| e.to_string())?;
    if let Some(failure) = outcome.failure {
        return Err(format!("run failed: {failure}"));
    }
    if outcome.rows.len() != 100 {
        return Err(format!("expected 100 steps, got {}", outcome.rows.len()));
    }
    let mut mass_drift = 0.0f64;
    let mut ham_drift = 0.0f64;
    for row in &outcome.rows {
        let m = row.mass.ok_or("missing mass")?;
        let h = row.hamiltonian.ok_or("missing hamiltonian")?;
        mass_drift = mass_drift.max(((m - mass0) / mass0).abs());
        ham_drift = ham_drift.max(((h - ham0) / ham0).abs());
    }
    ensure(
        mass_drift <= 1e-6 && ham_drift <= 1e-4,
        format!("mass drift {mass_drift:.2e} (<= 1e-6), energy drift {ham_drift:.2e} (<= 1e-4)"),
    )
}

// --- 9 ------------------------------------------------------------------
// For all three problems the structured Jacobian matches a dense
// directional finite difference: the error decays linearly in h with a
// constant no larger than 10x the right-hand-side scale.
fn criterion_09() -> Result<String, String> {
    fn check<T: steptrunc::Scalar>(
        name: &str,
        p: &steptrunc::problems::ProblemSpec<T>,
        s: &TtTensor<T>,
    ) -> Result<(), String> {
        let fd0 = tt_to_dense(&p.f0).map_err(|e| e.to_string())?;
        let sd = tt_to_dense(s).map_err(|e| e.to_string())?;
        let js = (p.j_g)(&p.f0)
            .and_then(|j| j.apply_dense(&sd))
            .map_err(|e| e.to_string())?;
        let g0 = (p.dense_g)(&fd0).map_err(|e| e.to_string())?;
        let scale = g0.norm().max(1.0);
        let mut errs = Vec::new();
        for h in [1e-3, 1e-4] {
            let hz = T::from_real(h);
            let fp = DenseTensor::axpy(T::one(), &fd0, hz, &sd).map_err(|e| e.to_string())?;
            let gp = (p.dense_g)(&fp).map_err(|e| e.to_string())?;
            let diff = DenseTensor::axpy(T::one() / hz, &gp, -T::one() / hz, &g0).unwrap();
            let err = DenseTensor::axpy(T::one(), &diff, -T::one(), &js).unwrap().norm();
            if err > 10.0 * scale * h {
                return Err(format!("{name}: FD error {err:.3e} above 10 * scale * h at h={h}"));
            }
            errs.push(err);
        }
        // One decade in h must shrink the error by at least a factor 3 —
        // unless the Jacobian is exact (linear problem) and the error
        // already sits at the round-off floor, where it cannot decay.
        if errs[0] > 1e-10 * scale && errs[1] > errs[0] / 3.0 {
            return Err(format!("{name}: FD errors {errs:?} do not decay linearly"));
        }
        Ok(())
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ac = build_allen_cahn(16, 0.1).map_err(|e| e.to_string())?;
    let s = TtTensor::<f64>::random(&[16, 16], &[2], &mut rng).unwrap();
    check("allen_cahn", &ac, &s)?;

    let fp = build_fokker_planck(8, 3, 2.0).map_err(|e| e.to_string())?;
    let s = TtTensor::<f64>::random(&[8, 8, 8], &[2, 2], &mut rng).unwrap();
    check("fokker_planck", &fp, &s)?;

    let nls = build_nls(9, 2, 0.1, 1e-2).map_err(|e| e.to_string())?;
    let re = TtTensor::<f64>::random(&[9, 9], &[2], &mut rng).unwrap();
    let im = TtTensor::<f64>::random(&[9, 9], &[2], &mut rng).unwrap();
    let s = tt_axpy(
        Complex64::new(1.0, 0.0),
        &to_complex_tt(&re),
        Complex64::new(0.0, 1.0),
        &to_complex_tt(&im),
    )
    .unwrap();
    check("nls", &nls, &s)?;

    Ok("three problems, first-order FD decay confirmed".into())
}

fn to_complex_tt(f: &TtTensor<f64>) -> TtTensor<Complex64> {
    let d = tt_to_dense(f).unwrap();
    let data: Vec<Complex64> = d.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let dense = DenseTensor::new(d.mode_sizes().to_vec(), data).unwrap();
    steptrunc::tt::tt_from_dense(&dense, &RoundingSpec::rel(1e-13)).unwrap()
}

// --- 10 -----------------------------------------------------------------
// Implicit midpoint at dt = 2.5e-2 reaches a final error <= 5e-3 in at
// most half the wall time of explicit midpoint at its largest stable dt
// on the same stiff reaction-diffusion configuration (n=129, nu=0.2). A
// 13% larger explicit step is also run to confirm it diverges, so the
// baseline really is at the stability edge.
fn criterion_10() -> Result<String, String> {
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;

    let beyond = parse_cfg(
        r#"{"problem": "allen_cahn", "n": 129, "eps_diff": 0.2,
            "scheme": "exp_midpoint", "dt": 1.3e-3, "t_final": 1.0}"#,
    );
    let unstable = run_with(&beyond, |_| {}).map_err(|e| e.to_string())?;
    if !unstable.diverged() {
        return Err("dt = 1.3e-3 did not diverge; the baseline step is not at the edge".into());
    }

    let exp_cfg = parse_cfg(
        r#"{"problem": "allen_cahn", "n": 129, "eps_diff": 0.2,
            "scheme": "exp_midpoint", "dt": 1.15e-3, "t_final": 1.0}"#,
    );
    let explicit = run_with(&exp_cfg, |_| {}).map_err(|e| e.to_string())?;
    if explicit.diverged() {
        return Err("baseline explicit run diverged".into());
    }
    let exp_wall: f64 = explicit.rows.iter().map(|r| r.wall_ms).sum();

    let imp_json = format!(
        r#"{{"problem": "allen_cahn", "n": 129, "eps_diff": 0.2,
            "scheme": "imp_midpoint", "dt": 2.5e-2, "t_final": 1.0,
            "schedule": {{"c_comp": 0.002, "k_imp": 100, "eta": 0.1}},
            "initial_round": 1e-3, "gmres_restart_len": 24,
            "reference": {{"dense": {{"abs_tol": 1e-8}}}},
            "cache_dir": {:?}}}"#,
        cache.path().display().to_string()
    );
    let imp_cfg = parse_cfg(&imp_json);
    let implicit = run_with(&imp_cfg, |_| {}).map_err(|e| e.to_string())?;
    if let Some(failure) = implicit.failure {
        return Err(format!("implicit run failed: {failure}"));
    }
    let imp_wall: f64 = implicit.rows.iter().map(|r| r.wall_ms).sum();
    let err = implicit.final_error.ok_or("implicit run produced no error")?;

    ensure(
        err <= 5e-3 && imp_wall <= 0.5 * exp_wall,
        format!(
            "error {err:.2e} (<= 5e-3), wall {:.1}s vs explicit {:.1}s, ratio {:.2} (<= 0.5)",
            imp_wall / 1e3,
            exp_wall / 1e3,
            imp_wall / exp_wall
        ),
    )
}
