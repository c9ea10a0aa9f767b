//! Rank-adaptive step-truncation integrators on tensor-train manifolds.
//!
//! The crate is organized bottom-up:
//!
//! * [`dense`] — dense linear-algebra kernels (SVD, QR, matrix exponential)
//!   and a brute-force adaptive RK4 reference integrator,
//! * [`tt`] — the tensor-train format, truncation, and arithmetic,
//! * [`linop`] — structured linear operators (Kronecker sums plus
//!   elementwise-diagonal fields) acting on TT tensors,
//! * [`solvers`] — relaxed TT-GMRES and the inexact Newton method,
//! * [`integrators`] — explicit and implicit step-truncation time steppers,
//!   threshold schedules and operator splitting,
//! * [`problems`] — spectral discretizations of the Allen-Cahn,
//!   Fokker-Planck and nonlinear Schrödinger benchmark equations.

pub mod dense;
pub mod error;
pub mod integrators;
pub mod linop;
pub mod problems;
pub mod scalar;
pub mod solvers;
pub mod tt;

pub use error::Error;
pub use scalar::Scalar;
