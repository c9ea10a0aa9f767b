//! Spectral discretizations of the benchmark evolution equations, with
//! dense oracle twins of every right-hand side and Jacobian.

pub mod allen_cahn;
pub mod fokker_planck;
pub mod grid;
pub mod nls;
pub mod spec;

pub use allen_cahn::build_allen_cahn;
pub use fokker_planck::build_fokker_planck;
pub use grid::{spectral_grid, to_complex, DomainKind, SpectralGrid};
pub use nls::build_nls;
pub use spec::{
    marginal_2d, reference_solution, split_step, ProblemSpec, SplitTerm, SubStepper,
};
