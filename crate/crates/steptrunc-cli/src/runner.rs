//! Experiment execution: single runs with per-step CSV rows, convergence
//! sweeps with a fitted slope, the explicit-vs-implicit stability
//! comparison, and dense-reference caching.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use steptrunc::dense::{dense_rk4_adaptive, DenseTensor};
use steptrunc::integrators::{
    step_explicit_st, step_implicit_st, ExplicitScheme, ImplicitScheme, SplittingKind, StepReport,
    ThresholdSchedule,
};
use steptrunc::problems::{
    build_allen_cahn, build_fokker_planck, build_nls, split_step, ProblemSpec, SubStepper,
};
use steptrunc::solvers::{Forcing, NewtonConfig};
use steptrunc::tt::{tt_norm, tt_to_dense, TtTensor};
use steptrunc::Scalar;

use crate::config::{ExperimentConfig, ProblemKind, ReferenceCfg, SchemeKind, SplittingCfg};
use crate::CliError;

/// Maximum dense-tensor entry count the reference pathway will allocate;
/// override with the `STEPTRUNC_DENSE_BUDGET` environment variable.
const DEFAULT_DENSE_BUDGET: usize = 1 << 22;

/// Trajectories whose norm grows past this multiple of `‖f0‖` count as
/// diverged in the stability comparison.
pub const DIVERGENCE_RATIO: f64 = 1e3;

pub const CSV_HEADER: &str =
    "step,t,l2_error,max_rank,storage_entries,newton_iters,gmres_iters,e_r,mass,hamiltonian,wall_ms";

/// One CSV row of per-step diagnostics.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub step: usize,
    pub t: f64,
    /// Relative L² distance to the dense reference, when one is tracked.
    pub l2_error: Option<f64>,
    pub max_rank: usize,
    pub storage_entries: usize,
    pub newton_iters: usize,
    pub gmres_iters: usize,
    /// Local error estimate from the compression step.
    pub e_r: f64,
    pub mass: Option<f64>,
    pub hamiltonian: Option<f64>,
    pub wall_ms: f64,
}

impl RunRow {
    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(fmt).unwrap_or_default()
        }
        fn fmt(v: f64) -> String {
            format!("{v:.12e}")
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.step,
            fmt(self.t),
            opt(self.l2_error),
            self.max_rank,
            self.storage_entries,
            self.newton_iters,
            self.gmres_iters,
            fmt(self.e_r),
            opt(self.mass),
            opt(self.hamiltonian),
            self.wall_ms,
        )
    }
}

/// Everything a caller needs after a run: the row table plus summary
/// statistics for the sweep and stability front ends.
#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<RunRow>,
    pub initial_norm: f64,
    /// Largest `‖f_k‖ / ‖f0‖` seen along the trajectory.
    pub max_norm_ratio: f64,
    /// `l2_error` of the last completed step, when a reference is tracked.
    pub final_error: Option<f64>,
    /// Step failure, if the run aborted early (rows up to the failure are
    /// still present and flushed).
    pub failure: Option<String>,
    /// True when the steady-state stop condition halted the run.
    pub stopped_steady: bool,
    pub total_wall_s: f64,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        self.failure.is_some() || self.max_norm_ratio > DIVERGENCE_RATIO
    }
}

fn dense_budget() -> usize {
    std::env::var("STEPTRUNC_DENSE_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DENSE_BUDGET)
}

fn build_err(e: steptrunc::Error) -> CliError {
    CliError::Validation(format!("problem construction: {e}"))
}

/// Replace the right-hand side with the zero map (smoke-test switch).
fn null_rhs<T: Scalar>(mut p: ProblemSpec<T>) -> ProblemSpec<T> {
    p.g = Box::new(|f: &TtTensor<T>| Ok(TtTensor::zeros(&f.mode_sizes())));
    p.j_g = Box::new(|f: &TtTensor<T>| Ok(steptrunc::linop::TtLinOp::new(f.mode_sizes())));
    p.split = None;
    p.dense_g = Box::new(|f: &DenseTensor<T>| Ok(DenseTensor::zeros(f.mode_sizes().to_vec())));
    p
}

/// Run one experiment, streaming every completed row through `on_row`
/// (rows are also collected in the returned outcome).
pub fn run_with<F>(cfg: &ExperimentConfig, on_row: F) -> Result<RunOutcome, CliError>
where
    F: FnMut(&RunRow),
{
    cfg.validate()?;
    match cfg.problem {
        ProblemKind::AllenCahn => {
            let p = build_allen_cahn(cfg.n, cfg.eps_diff).map_err(build_err)?;
            execute(maybe_null(p, cfg), cfg, on_row)
        }
        ProblemKind::FokkerPlanck => {
            let p = build_fokker_planck(cfg.n, cfg.d, cfg.sigma).map_err(build_err)?;
            execute(maybe_null(p, cfg), cfg, on_row)
        }
        ProblemKind::Nls => {
            let p = build_nls(cfg.n, cfg.d, cfg.theta, cfg.eps_nl).map_err(build_err)?;
            execute(maybe_null(p, cfg), cfg, on_row)
        }
    }
}

fn maybe_null<T: Scalar>(p: ProblemSpec<T>, cfg: &ExperimentConfig) -> ProblemSpec<T> {
    if cfg.g_null {
        null_rhs(p)
    } else {
        p
    }
}

/// Run one experiment and write the CSV to `cfg.output_csv` (stdout when
/// unset), flushing after every row so step failures leave a partial table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let mut out: Box<dyn Write> = match &cfg.output_csv {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    writeln!(out, "{CSV_HEADER}").map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcome = run_with(cfg, |row| {
        let _ = writeln!(out, "{}", row.to_csv());
        let _ = out.flush();
    })?;
    Ok(outcome)
}

fn execute<T: Scalar, F>(
    p: ProblemSpec<T>,
    cfg: &ExperimentConfig,
    mut on_row: F,
) -> Result<RunOutcome, CliError>
where
    F: FnMut(&RunRow),
{
    if !matches!(cfg.splitting, SplittingCfg::None) && p.split.is_none() {
        return Err(CliError::Validation(
            "field `splitting`: this problem has no splitting decomposition".into(),
        ));
    }
    let sched = ThresholdSchedule::from(&cfg.schedule);
    let newton = NewtonConfig {
        eps_tol: 1.0, // overridden per step by the schedule
        forcing: Forcing::Constant(sched.eta),
        max_iters: cfg.newton_max_iters,
        gmres_restart_len: cfg.gmres_restart_len,
        gmres_max_restarts: cfg.gmres_max_restarts,
        // The estimate only scales the update-truncation budget; two power
        // iterations are accurate enough for that.
        jacobian_norm_iters: 2,
    };

    let mut reference = RefTrack::new(&p, cfg)?;
    let started = Instant::now();
    let mut f = p.f0.clone();
    if let Some(tol) = cfg.initial_round {
        f = steptrunc::tt::tt_round(&f, &steptrunc::tt::RoundingSpec::rel(tol))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let norm0 = tt_norm(&f);
    let mut f_prev: Option<TtTensor<T>> = None;
    let n_steps = ((cfg.t_final / cfg.dt - 1e-9).ceil().max(1.0)) as usize;

    let mut outcome = RunOutcome {
        rows: Vec::with_capacity(n_steps),
        initial_norm: norm0,
        max_norm_ratio: 1.0,
        final_error: None,
        failure: None,
        stopped_steady: false,
        total_wall_s: 0.0,
    };

    let mut t = 0.0;
    for k in 0..n_steps {
        let dt_k = (cfg.t_final - t).min(cfg.dt);
        let stepped = advance_one(&p, cfg, &sched, &newton, &f, f_prev.as_ref(), t, dt_k);
        let (next, report) = match stepped {
            Ok(pair) => pair,
            Err(e) => {
                outcome.failure = Some(e.to_string());
                break;
            }
        };
        t += dt_k;
        f_prev = Some(std::mem::replace(&mut f, next));
        let norm_k = tt_norm(&f);
        outcome.max_norm_ratio = outcome.max_norm_ratio.max(norm_k / norm0.max(f64::MIN_POSITIVE));

        let row = match make_row(&p, cfg, &mut reference, &f, k, t, dt_k, &report) {
            Ok(row) => row,
            Err(e) => {
                outcome.failure = Some(e.to_string());
                break;
            }
        };
        outcome.final_error = row.l2_error.or(outcome.final_error);
        on_row(&row);
        outcome.rows.push(row);

        if !norm_k.is_finite() {
            outcome.failure = Some(format!("state norm became non-finite at t = {t}"));
            break;
        }
        if let Some(th) = cfg.steady_stop {
            let rate = (p.g)(&f).map(|gf| tt_norm(&gf));
            match rate {
                Ok(r) if r < th => {
                    outcome.stopped_steady = true;
                    break;
                }
                Ok(_) => {}
                Err(e) => {
                    outcome.failure = Some(e.to_string());
                    break;
                }
            }
        }
    }
    outcome.total_wall_s = started.elapsed().as_secs_f64();
    if outcome.failure.is_none() {
        reference.persist(cfg);
    }
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn advance_one<T: Scalar>(
    p: &ProblemSpec<T>,
    cfg: &ExperimentConfig,
    sched: &ThresholdSchedule,
    newton: &NewtonConfig,
    f: &TtTensor<T>,
    f_prev: Option<&TtTensor<T>>,
    t: f64,
    dt: f64,
) -> steptrunc::error::Result<(TtTensor<T>, StepReport)> {
    match cfg.splitting {
        SplittingCfg::None => match cfg.scheme {
            SchemeKind::ExpEuler => {
                step_explicit_st(ExplicitScheme::Euler, p.g.as_ref(), f, None, t, dt, sched)
            }
            SchemeKind::ExpMidpoint => {
                step_explicit_st(ExplicitScheme::Midpoint, p.g.as_ref(), f, None, t, dt, sched)
            }
            SchemeKind::Ab2 => {
                step_explicit_st(ExplicitScheme::Ab2, p.g.as_ref(), f, f_prev, t, dt, sched)
            }
            SchemeKind::ImpEuler => step_implicit_st(
                ImplicitScheme::Euler,
                p.g.as_ref(),
                p.j_g.as_ref(),
                f,
                t,
                dt,
                sched,
                newton,
            ),
            SchemeKind::ImpMidpoint => step_implicit_st(
                ImplicitScheme::Midpoint,
                p.g.as_ref(),
                p.j_g.as_ref(),
                f,
                t,
                dt,
                sched,
                newton,
            ),
        },
        SplittingCfg::Lie | SplittingCfg::Strang => {
            let kind = if matches!(cfg.splitting, SplittingCfg::Lie) {
                SplittingKind::LieTrotter
            } else {
                SplittingKind::Strang
            };
            let stepper = match cfg.scheme {
                SchemeKind::ExpEuler => SubStepper::Explicit(ExplicitScheme::Euler, sched.clone()),
                SchemeKind::ExpMidpoint | SchemeKind::Ab2 => {
                    // AB2 has no cross-step history inside a sub-flow; the
                    // midpoint bootstrap is the natural single-step stand-in.
                    SubStepper::Explicit(ExplicitScheme::Midpoint, sched.clone())
                }
                SchemeKind::ImpEuler => {
                    SubStepper::Implicit(ImplicitScheme::Euler, sched.clone(), newton.clone())
                }
                SchemeKind::ImpMidpoint => {
                    SubStepper::Implicit(ImplicitScheme::Midpoint, sched.clone(), newton.clone())
                }
            };
            let terms = p.split.as_ref().expect("checked in execute");
            split_step(terms, kind, &stepper, f, t, dt)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn make_row<T: Scalar>(
    p: &ProblemSpec<T>,
    cfg: &ExperimentConfig,
    reference: &mut RefTrack<T>,
    f: &TtTensor<T>,
    k: usize,
    t: f64,
    dt_k: f64,
    report: &StepReport,
) -> Result<RunRow, CliError> {
    let runtime = |e: steptrunc::Error| CliError::Runtime(e.to_string());
    let l2_error = reference.error_at_step(p, f, k, dt_k).map_err(runtime)?;
    let mass = match p.observable("mass", f) {
        Some(v) => Some(v.map_err(runtime)?),
        None => None,
    };
    let hamiltonian = match p.observable("hamiltonian", f) {
        Some(v) => Some(v.map_err(runtime)?),
        None => None,
    };
    let _ = cfg;
    Ok(RunRow {
        step: k + 1,
        t,
        l2_error,
        max_rank: report.ranks_after.iter().copied().max().unwrap_or(1),
        storage_entries: f.storage_entries(),
        newton_iters: report.newton_iters,
        gmres_iters: report.gmres_iters,
        e_r: report.est_local_error,
        mass,
        hamiltonian,
        wall_ms: report.wall_time.as_secs_f64() * 1e3,
    })
}

/// Dense reference trajectory advanced in lock-step with the TT run, with
/// an on-disk cache keyed by the config's reference hash.
enum RefTrack<T: Scalar> {
    Off,
    On {
        state: DenseTensor<T>,
        abs_tol: f64,
        /// Cached per-step states, when a cache file was found.
        cached: Option<Vec<Vec<T>>>,
        /// States computed this run, persisted on success.
        computed: Vec<Vec<T>>,
    },
}

impl<T: Scalar> RefTrack<T> {
    fn new(p: &ProblemSpec<T>, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let ReferenceCfg::Dense { abs_tol } = cfg.reference else {
            return Ok(RefTrack::Off);
        };
        let entries: usize = p.mode_sizes.iter().product();
        let budget = dense_budget();
        if entries > budget {
            return Err(CliError::Validation(format!(
                "field `reference`: dense reference needs {entries} entries, over the budget \
                 {budget} (STEPTRUNC_DENSE_BUDGET)"
            )));
        }
        let state = tt_to_dense(&p.f0).map_err(|e| CliError::Runtime(e.to_string()))?;
        let cached = cfg
            .cache_dir
            .as_ref()
            .and_then(|dir| load_ref_cache::<T>(&cache_path(dir, cfg, abs_tol), entries));
        Ok(RefTrack::On {
            state,
            abs_tol,
            cached,
            computed: Vec::new(),
        })
    }

    /// Advance the reference across step `k` (of width `dt_k`) and return
    /// the relative L² error of `f` against it.
    fn error_at_step(
        &mut self,
        p: &ProblemSpec<T>,
        f: &TtTensor<T>,
        k: usize,
        dt_k: f64,
    ) -> steptrunc::error::Result<Option<f64>> {
        let RefTrack::On { state, abs_tol, cached, computed } = self else {
            return Ok(None);
        };
        let hit = cached.as_ref().and_then(|steps| steps.get(k));
        match hit {
            Some(data) => {
                state.data_mut().as_mut_slice().copy_from_slice(data);
            }
            None => {
                *state = dense_rk4_adaptive(p.dense_g.as_ref(), state, dt_k, *abs_tol)?;
                computed.push(state.data().as_slice().to_vec());
            }
        }
        let fd = tt_to_dense(f)?;
        let diff = DenseTensor::axpy(T::one(), &fd, -T::one(), state)?;
        let denom = state.norm().max(f64::MIN_POSITIVE);
        Ok(Some(diff.norm() / denom))
    }

    /// Write the freshly computed trajectory to the cache directory.
    fn persist(&self, cfg: &ExperimentConfig) {
        let RefTrack::On { abs_tol, cached, computed, .. } = self else {
            return;
        };
        if cached.is_some() || computed.is_empty() {
            return;
        }
        if let Some(dir) = &cfg.cache_dir {
            if std::fs::create_dir_all(dir).is_ok() {
                let _ = save_ref_cache(&cache_path(dir, cfg, *abs_tol), computed);
            }
        }
    }
}

fn cache_path(dir: &Path, cfg: &ExperimentConfig, abs_tol: f64) -> PathBuf {
    dir.join(format!("{}.ref", cfg.reference_key(abs_tol)))
}

const REF_MAGIC: &[u8; 6] = b"STREF1";

fn save_ref_cache<T: Scalar>(path: &Path, states: &[Vec<T>]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(REF_MAGIC)?;
    w.write_all(&[u8::from(T::IS_COMPLEX)])?;
    w.write_all(&(states.len() as u64).to_le_bytes())?;
    w.write_all(&(states[0].len() as u64).to_le_bytes())?;
    for s in states {
        for x in s {
            w.write_all(&x.real().to_le_bytes())?;
            if T::IS_COMPLEX {
                w.write_all(&x.imaginary().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Load a cached trajectory; any mismatch (magic, field, entry count,
/// truncation) silently falls back to recomputation.
fn load_ref_cache<T: Scalar>(path: &Path, expect_entries: usize) -> Option<Vec<Vec<T>>> {
    let bytes = std::fs::read(path).ok()?;
    let scalar_width = if T::IS_COMPLEX { 16 } else { 8 };
    let header = 6 + 1 + 8 + 8;
    if bytes.len() < header || &bytes[..6] != REF_MAGIC || (bytes[6] != 0) != T::IS_COMPLEX {
        return None;
    }
    let n_states = u64::from_le_bytes(bytes[7..15].try_into().ok()?) as usize;
    let entries = u64::from_le_bytes(bytes[15..23].try_into().ok()?) as usize;
    if entries != expect_entries || bytes.len() != header + n_states * entries * scalar_width {
        return None;
    }
    let mut off = header;
    let mut states = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let mut s = Vec::with_capacity(entries);
        for _ in 0..entries {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().ok()?);
            off += 8;
            let x = if T::IS_COMPLEX {
                let im = f64::from_le_bytes(bytes[off..off + 8].try_into().ok()?);
                off += 8;
                T::from_real(re) + T::i() * T::from_real(im)
            } else {
                T::from_real(re)
            };
            s.push(x);
        }
        states.push(s);
    }
    Some(states)
}

/// Result of a convergence sweep: the `(Δt, error at T)` table and the
/// least-squares slope of `log error` against `log Δt`.
#[derive(Debug, Serialize)]
pub struct SweepOutcome {
    pub table: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub failure: Option<String>,
}

pub fn convergence_sweep(
    cfg: &ExperimentConfig,
    dts: &[f64],
) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    if dts.len() < 3 {
        return Err(CliError::Validation(format!(
            "sweep needs at least 3 step sizes, got {}",
            dts.len()
        )));
    }
    if dts.iter().any(|&dt| !(dt > 0.0 && dt <= cfg.t_final)) {
        return Err(CliError::Validation("every Δt must satisfy 0 < Δt <= t_final".into()));
    }
    if !matches!(cfg.reference, ReferenceCfg::Dense { .. }) {
        return Err(CliError::Validation(
            "field `reference`: a sweep needs a dense reference to measure errors".into(),
        ));
    }
    let mut out = SweepOutcome { table: Vec::new(), slope: None, failure: None };
    for &dt in dts {
        let mut run_cfg = cfg.clone();
        run_cfg.dt = dt;
        run_cfg.output_csv = None;
        let res = run_with(&run_cfg, |_| {});
        match res {
            Ok(outcome) if outcome.failure.is_none() => {
                let err = outcome.final_error.ok_or_else(|| {
                    CliError::Runtime("sweep run produced no error measurement".into())
                })?;
                out.table.push((dt, err));
            }
            Ok(outcome) => {
                out.failure = outcome.failure;
                break;
            }
            Err(e) => {
                out.failure = Some(e.to_string());
                break;
            }
        }
    }
    if out.failure.is_none() {
        out.slope = Some(fit_slope(&out.table));
    }
    Ok(out)
}

/// Least-squares slope of `ln e` against `ln Δt`.
pub fn fit_slope(table: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(dt, e)| (dt.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn write_sweep_csv(out: &mut dyn Write, sweep: &SweepOutcome) -> std::io::Result<()> {
    writeln!(out, "dt,error")?;
    for (dt, err) in &sweep.table {
        writeln!(out, "{dt:.12e},{err:.12e}")?;
    }
    Ok(())
}

/// Verdict of the explicit-vs-implicit comparison at a step size beyond
/// the explicit stability region.
#[derive(Debug, Serialize)]
pub struct StabilityVerdict {
    pub explicit_diverged: bool,
    pub implicit_bounded: bool,
    pub explicit_max_norm_ratio: f64,
    pub implicit_max_norm_ratio: f64,
    pub implicit_final_error: Option<f64>,
}

pub fn stability_compare(
    exp_cfg: &ExperimentConfig,
    imp_cfg: &ExperimentConfig,
) -> Result<StabilityVerdict, CliError> {
    exp_cfg.validate()?;
    imp_cfg.validate()?;
    if !exp_cfg.same_problem(imp_cfg) {
        return Err(CliError::Validation(
            "stability comparison needs both configs on the same problem, Δt and horizon".into(),
        ));
    }
    if exp_cfg.scheme.is_implicit() {
        return Err(CliError::Validation(
            "field `scheme`: --config-explicit must use an explicit scheme".into(),
        ));
    }
    if !imp_cfg.scheme.is_implicit() {
        return Err(CliError::Validation(
            "field `scheme`: --config-implicit must use an implicit scheme".into(),
        ));
    }
    // A genuinely divergent explicit run ends in a step failure (non-finite
    // values or a rank explosion); both count as diverged.
    let explicit = run_with(exp_cfg, |_| {})?;
    let implicit = run_with(imp_cfg, |_| {})?;
    Ok(StabilityVerdict {
        explicit_diverged: explicit.diverged(),
        implicit_bounded: !implicit.diverged(),
        explicit_max_norm_ratio: explicit.max_norm_ratio,
        implicit_max_norm_ratio: implicit.max_norm_ratio,
        implicit_final_error: implicit.final_error,
    })
}

/// Save a seeded random TT checkpoint (for `io save`).
pub fn io_save(path: &Path, modes: &[usize], ranks: &[usize], seed: u64) -> Result<(), CliError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let t = TtTensor::<f64>::random(modes, ranks, &mut rng)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    steptrunc::tt::io::save(path, &t).map_err(|e| CliError::Runtime(e.to_string()))
}

/// Load a checkpoint of either scalar field and describe it (for `io load`).
pub fn io_load(path: &Path) -> Result<String, CliError> {
    match steptrunc::tt::io::load::<f64>(path) {
        Ok(t) => Ok(describe(&t)),
        Err(steptrunc::Error::Checkpoint(real_err)) => {
            match steptrunc::tt::io::load::<Complex64>(path) {
                Ok(t) => Ok(describe(&t)),
                Err(_) => Err(CliError::Runtime(format!("checkpoint rejected: {real_err}"))),
            }
        }
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn describe<T: Scalar>(t: &TtTensor<T>) -> String {
    format!(
        "order {} modes {:?} ranks {:?} entries {} norm {:.6e}",
        t.order(),
        t.mode_sizes(),
        t.rank_vector(),
        t.storage_entries(),
        tt_norm(t),
    )
}
