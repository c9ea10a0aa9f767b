use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;

/// Scalar field of a tensor: real double precision or complex double precision.
///
/// All kernels in this crate are generic over this trait. The adjoint of a
/// matrix is always the conjugate transpose, and inner products are
/// conjugate-linear in the first slot, so the real and complex cases share
/// one code path.
pub trait Scalar: ComplexField<RealField = f64> + Copy + 'static {
    const IS_COMPLEX: bool;

    /// Uniform sample on the unit box (real and imaginary parts in [-1, 1)).
    fn sample<R: Rng>(rng: &mut R) -> Self;

    /// Imaginary unit for complex fields; zero for the real field.
    fn i() -> Self;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn sample<R: Rng>(rng: &mut R) -> Self {
        rng.gen_range(-1.0..1.0)
    }

    fn i() -> Self {
        0.0
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn sample<R: Rng>(rng: &mut R) -> Self {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn i() -> Self {
        Complex64::new(0.0, 1.0)
    }
}
