//! Problem container shared by the benchmark builders: right-hand side and
//! Jacobian evaluators with dense oracle twins, splitting decompositions,
//! observables, marginals, and the brute-force reference pathway.

use crate::dense::{dense_rk4_adaptive, DenseTensor};
use crate::error::{Error, Result};
use crate::integrators::{
    splitting_step, step_explicit_st, step_implicit_st, ExplicitScheme, ImplicitScheme,
    SplittingKind, StepResult, SubFlow, ThresholdSchedule,
};
use crate::linop::TtLinOp;
use crate::scalar::Scalar;
use crate::solvers::NewtonConfig;
use crate::tt::{tt_to_dense, TtTensor};
use nalgebra::DMatrix;

use super::grid::SpectralGrid;

pub type GFn<T> = Box<dyn Fn(&TtTensor<T>) -> Result<TtTensor<T>>>;
pub type JFn<T> = Box<dyn Fn(&TtTensor<T>) -> Result<TtLinOp<T>>>;
pub type DenseGFn<T> = Box<dyn Fn(&DenseTensor<T>) -> Result<DenseTensor<T>>>;
pub type ObservableFn<T> = Box<dyn Fn(&TtTensor<T>) -> Result<f64>>;

/// One factor of a split right-hand side, in owned form.
pub enum SplitTerm<T: Scalar> {
    /// Linear generator confined to a single mode; advanced exactly through
    /// the matrix exponential.
    Mode { mode: usize, generator: DMatrix<T> },
    /// General sub-flow `u' = g(u)` advanced by a time stepper chosen at
    /// integration time.
    Ode { g: GFn<T>, j: JFn<T> },
}

/// A fully assembled benchmark problem.
pub struct ProblemSpec<T: Scalar> {
    pub name: &'static str,
    pub mode_sizes: Vec<usize>,
    pub grid: SpectralGrid,
    /// Semi-discrete right-hand side `G`, evaluated in TT arithmetic.
    pub g: GFn<T>,
    /// Jacobian of `G` at a state, as a structured linear operator.
    pub j_g: JFn<T>,
    /// Splitting decomposition of `G`, when the problem admits one.
    pub split: Option<Vec<SplitTerm<T>>>,
    pub f0: TtTensor<T>,
    pub observables: Vec<(&'static str, ObservableFn<T>)>,
    /// Dense twin of `g` computed from the analytic formulas, independent of
    /// the TT code path (accuracy oracle).
    pub dense_g: DenseGFn<T>,
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn observable(&self, name: &str, f: &TtTensor<T>) -> Option<Result<f64>> {
        self.observables
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, eval)| eval(f))
    }
}

/// Time stepper used to advance the non-propagator sub-flows of a split
/// right-hand side.
#[derive(Clone)]
pub enum SubStepper {
    Explicit(ExplicitScheme, ThresholdSchedule),
    Implicit(ImplicitScheme, ThresholdSchedule, NewtonConfig),
}

impl SubStepper {
    pub fn advance<T: Scalar>(
        &self,
        g: &dyn Fn(&TtTensor<T>) -> Result<TtTensor<T>>,
        j: &dyn Fn(&TtTensor<T>) -> Result<TtLinOp<T>>,
        f: &TtTensor<T>,
        dt: f64,
    ) -> StepResult<T> {
        match self {
            SubStepper::Explicit(scheme, sched) => {
                step_explicit_st(*scheme, g, f, None, 0.0, dt, sched)
            }
            SubStepper::Implicit(scheme, sched, newton) => {
                step_implicit_st(*scheme, g, j, f, 0.0, dt, sched, newton)
            }
        }
    }
}

/// Advance one splitting step of an owned term list: mode terms become
/// exact propagators, ODE terms are advanced by `stepper`.
pub fn split_step<T: Scalar>(
    terms: &[SplitTerm<T>],
    kind: SplittingKind,
    stepper: &SubStepper,
    f: &TtTensor<T>,
    t: f64,
    dt: f64,
) -> StepResult<T> {
    type OdeStep<'a, T> = Box<dyn Fn(&TtTensor<T>, f64) -> StepResult<T> + 'a>;
    let odes: Vec<OdeStep<'_, T>> = terms
        .iter()
        .filter_map(|term| match term {
            SplitTerm::Ode { g, j } => Some(Box::new(move |state: &TtTensor<T>, h: f64| {
                stepper.advance(g.as_ref(), j.as_ref(), state, h)
            }) as OdeStep<'_, T>),
            SplitTerm::Mode { .. } => None,
        })
        .collect();
    let mut ode_iter = odes.iter();
    let flows: Vec<SubFlow<'_, T>> = terms
        .iter()
        .map(|term| match term {
            SplitTerm::Mode { mode, generator } => SubFlow::ModePropagator {
                mode: *mode,
                generator: generator.clone(),
            },
            SplitTerm::Ode { .. } => SubFlow::TtOde(ode_iter.next().unwrap().as_ref()),
        })
        .collect();
    splitting_step(kind, &flows, f, t, dt)
}

/// Two-mode marginal: quadrature contraction of every mode except `i` and
/// `j`, returned with mode `i` along rows.
pub fn marginal_2d<T: Scalar>(
    f: &TtTensor<T>,
    modes: (usize, usize),
    grid: &SpectralGrid,
) -> Result<DMatrix<T>> {
    let (i, j) = modes;
    if i == j {
        return Err(Error::InvalidArgument(format!("marginal modes must differ, got ({i}, {j})")));
    }
    let d = f.order();
    if i >= d || j >= d {
        return Err(Error::InvalidArgument(format!(
            "marginal modes ({i}, {j}) out of range for order {d}"
        )));
    }
    let (a, b) = (i.min(j), i.max(j));
    let w = T::from_real(grid.weight);
    let mut acc = DMatrix::<T>::from_element(1, 1, T::one());
    for (k, core) in f.cores().iter().enumerate() {
        if k == a || k == b {
            // Keep the mode open: absorb it into the row dimension.
            let prod = &acc * core.right_unfold();
            acc = DMatrix::from_column_slice(acc.nrows() * core.n, core.r_right, prod.as_slice());
        } else {
            // Integrate the mode out with the uniform quadrature weight.
            let mut m = DMatrix::<T>::zeros(core.r_left, core.r_right);
            for idx in 0..core.n {
                m += core.slice(idx);
            }
            acc = &acc * (m * w);
        }
    }
    let na = f.cores()[a].n;
    let nb = f.cores()[b].n;
    let out = DMatrix::from_column_slice(na, nb, acc.as_slice());
    Ok(if i <= j { out } else { out.transpose() })
}

/// Brute-force reference: adaptive dense RK4 on the problem's dense twin,
/// started from the densified initial condition.
pub fn reference_solution<T: Scalar>(
    problem: &ProblemSpec<T>,
    t_final: f64,
    abs_tol: f64,
) -> Result<DenseTensor<T>> {
    let f0 = tt_to_dense(&problem.f0)?;
    dense_rk4_adaptive(problem.dense_g.as_ref(), &f0, t_final, abs_tol)
}
