//! Dense linear-algebra primitives and the brute-force reference integrator.
//!
//! Everything in this module operates on full (uncompressed) data and exists
//! to back the TT kernels and to serve as the accuracy oracle in tests.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Dense matrix in column-major order.
pub type DenseMatrix<T> = DMatrix<T>;

/// Full d-way tensor. Entries are stored with the first mode index varying
/// fastest, i.e. linear index `i_1 + n_1 (i_2 + n_2 (...))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T: Scalar> {
    mode_sizes: Vec<usize>,
    data: DVector<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(mode_sizes: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if mode_sizes.is_empty() {
            return Err(Error::InvalidArgument("tensor order d must be >= 1".into()));
        }
        let len: usize = mode_sizes.iter().product();
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "entry count {} does not match mode sizes {:?}",
                data.len(),
                mode_sizes
            )));
        }
        Ok(Self {
            mode_sizes,
            data: DVector::from_vec(data),
        })
    }

    pub fn zeros(mode_sizes: Vec<usize>) -> Self {
        let len = mode_sizes.iter().product();
        Self {
            mode_sizes,
            data: DVector::zeros(len),
        }
    }

    /// Build from a function of the multi-index.
    pub fn from_fn(mode_sizes: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len: usize = mode_sizes.iter().product();
        let d = mode_sizes.len();
        let mut idx = vec![0usize; d];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for k in 0..d {
                idx[k] += 1;
                if idx[k] < mode_sizes[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self {
            mode_sizes,
            data: DVector::from_vec(data),
        }
    }

    pub fn order(&self) -> usize {
        self.mode_sizes.len()
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    pub fn data(&self) -> &DVector<T> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DVector<T> {
        &mut self.data
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.mode_sizes.len());
        let mut l = 0;
        for k in (0..idx.len()).rev() {
            debug_assert!(idx[k] < self.mode_sizes[k]);
            l = l * self.mode_sizes[k] + idx[k];
        }
        l
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self.data.dotc(&other.data))
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            mode_sizes: self.mode_sizes.clone(),
            data: &self.data * alpha,
        }
    }

    pub fn axpy(alpha: T, x: &Self, beta: T, y: &Self) -> Result<Self> {
        x.check_same_shape(y)?;
        Ok(Self {
            mode_sizes: x.mode_sizes.clone(),
            data: &x.data * alpha + &y.data * beta,
        })
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            mode_sizes: self.mode_sizes.clone(),
            data: self.data.component_mul(&other.data),
        })
    }

    pub fn conjugate(&self) -> Self {
        Self {
            mode_sizes: self.mode_sizes.clone(),
            data: self.data.map(|x| x.conjugate()),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            mode_sizes: self.mode_sizes.clone(),
            data: self.data.map(f),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.modulus().is_finite())
    }

    /// Contract a square matrix into one mode:
    /// `out[.., j, ..] = sum_i M[j, i] f[.., i, ..]`.
    pub fn mode_apply(&self, m: &DenseMatrix<T>, mode: usize) -> Result<Self> {
        if mode >= self.mode_sizes.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for order {}",
                mode,
                self.mode_sizes.len()
            )));
        }
        let n = self.mode_sizes[mode];
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "matrix {}x{} does not match mode size {}",
                m.nrows(),
                m.ncols(),
                n
            )));
        }
        let left: usize = self.mode_sizes[..mode].iter().product();
        let right: usize = self.mode_sizes[mode + 1..].iter().product();
        let mut out = DVector::zeros(self.data.len());
        // View as a stack of (left x n) slabs, one per right index.
        for r in 0..right {
            let offset = r * left * n;
            let slab = DMatrix::from_column_slice(left, n, &self.data.as_slice()[offset..offset + left * n]);
            let res = &slab * m.transpose();
            out.as_mut_slice()[offset..offset + left * n].copy_from_slice(res.as_slice());
        }
        Ok(Self {
            mode_sizes: self.mode_sizes.clone(),
            data: out,
        })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.mode_sizes != other.mode_sizes {
            return Err(Error::ShapeMismatch(format!(
                "mode sizes {:?} vs {:?}",
                self.mode_sizes, other.mode_sizes
            )));
        }
        Ok(())
    }
}

/// Result of a rank-truncated singular value decomposition, `M ≈ U Σ Vᴴ`.
#[derive(Clone, Debug)]
pub struct SvdResult<T: Scalar> {
    pub u: DenseMatrix<T>,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix<T>,
    pub rank_kept: usize,
    pub discarded_energy: f64,
}

/// SVD truncated to the smallest rank whose tail energy
/// `sqrt(sum of dropped sigma^2)` satisfies every active tolerance —
/// `tol_abs` and `tol_rel * ||M||_F` are enforced jointly when both are
/// positive — capped at `max_rank`. At least one singular triplet is always
/// kept.
///
/// The comparison is inclusive: a singular value is kept whenever dropping
/// it would violate the bound.
pub fn truncated_svd<T: Scalar>(
    m: &DenseMatrix<T>,
    tol_abs: f64,
    tol_rel: f64,
    max_rank: Option<usize>,
) -> Result<SvdResult<T>> {
    if tol_abs.is_nan() || tol_rel.is_nan() {
        // A NaN threshold almost always means the trajectory itself blew up
        // upstream; report it as a non-finite state, not a usage error.
        return Err(Error::NonFinite("truncation threshold".into()));
    }
    if !(tol_abs >= 0.0 && tol_rel >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SVD tolerances must be nonnegative, got tol_abs={tol_abs}, tol_rel={tol_rel}"
        )));
    }
    if m.iter().any(|x| !x.modulus().is_finite()) {
        return Err(Error::NonFinite("truncated_svd input".into()));
    }
    let (u_full, sigma, v_full) = {
        let svd = m.clone().svd(true, true);
        let u = svd.u.expect("SVD with u requested");
        let v_t = svd.v_t.expect("SVD with v_t requested");
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        // The Golub-Kahan path silently returns a wrong factorization on
        // some graded matrices (orthogonal factors, inaccurate product);
        // verify it with random probes and fall back to the slower but
        // unconditionally accurate one-sided Jacobi sweep when it fails.
        if svd_factors_verified(m, &u, &sigma, &v_t) {
            (u, sigma, v_t.adjoint())
        } else {
            jacobi_svd(m)
        }
    };
    let k = sigma.len();

    let frob = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    let bound = combined_bound(tol_abs, tol_rel, frob);

    // Smallest r with tail energy within the bound.
    let mut rank = k;
    let mut tail = 0.0_f64;
    while rank > 1 {
        let next = tail + sigma[rank - 1] * sigma[rank - 1];
        if next.sqrt() > bound {
            break;
        }
        tail = next;
        rank -= 1;
    }
    if let Some(cap) = max_rank {
        if cap >= 1 && rank > cap {
            tail = sigma[cap..].iter().map(|s| s * s).sum();
            rank = cap;
        }
    }

    let u = u_full.columns(0, rank).into_owned();
    let v = v_full.columns(0, rank).into_owned();
    Ok(SvdResult {
        u,
        singular_values: sigma[..rank].to_vec(),
        v,
        rank_kept: rank,
        discarded_energy: tail.sqrt(),
    })
}

/// Checks `M x ≈ U Σ Vᴴ x` for a couple of fixed pseudo-random probe
/// vectors. Costs `O(mn)` per probe, so verification is cheap relative to
/// the factorization itself.
fn svd_factors_verified<T: Scalar>(
    m: &DenseMatrix<T>,
    u: &DenseMatrix<T>,
    sigma: &[f64],
    v_t: &DenseMatrix<T>,
) -> bool {
    let frob = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = move || {
        // splitmix64, mapped to [-1, 1)
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    };
    for _ in 0..2 {
        let x = DVector::<T>::from_fn(m.ncols(), |_, _| T::from_real(next()));
        let mut proj = v_t * &x;
        for (i, s) in sigma.iter().enumerate() {
            proj[i] *= T::from_real(*s);
        }
        let residual = (m * &x - u * proj).norm();
        if residual > 1e-10 * frob * x.norm() + f64::MIN_POSITIVE {
            return false;
        }
    }
    true
}

/// Thin SVD by one-sided Jacobi rotations: slower than the bidiagonal fast
/// path but accurate for any input, including matrices with strongly graded
/// or numerically zero columns. Returns `(U, σ descending, V)`.
fn jacobi_svd<T: Scalar>(m: &DenseMatrix<T>) -> (DenseMatrix<T>, Vec<f64>, DenseMatrix<T>) {
    let swapped = m.nrows() < m.ncols();
    let mut a = if swapped { m.adjoint() } else { m.clone() };
    let rows = a.nrows();
    let n = a.ncols();
    let mut v = DMatrix::<T>::identity(n, n);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0f64;
                let mut beta = 0.0f64;
                let mut g = T::zero();
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    alpha += x.modulus_squared();
                    beta += y.modulus_squared();
                    g += x.conjugate() * y;
                }
                let gmod = g.modulus();
                if gmod <= f64::EPSILON * (alpha * beta).sqrt() || gmod == 0.0 {
                    continue;
                }
                rotated = true;
                // Diagonalize the 2x2 Gram block [[alpha, g], [conj g, beta]].
                let tau = (beta - alpha) / (2.0 * gmod);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = T::from_real(1.0 / (1.0 + t * t).sqrt());
                let s = g * T::from_real(t / ((1.0 + t * t).sqrt() * gmod));
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = x * c - y * s.conjugate();
                    a[(i, q)] = x * s + y * c;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = x * c - y * s.conjugate();
                    v[(i, q)] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = DMatrix::<T>::zeros(rows, n);
    let mut vv = DMatrix::<T>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        if norms[j] > 0.0 {
            let inv = T::from_real(1.0 / norms[j]);
            for i in 0..rows {
                u[(i, k)] = a[(i, j)] * inv;
            }
        } else {
            u[(k.min(rows - 1), k)] = T::one();
        }
        for i in 0..n {
            vv[(i, k)] = v[(i, j)];
        }
    }
    if swapped {
        (vv, sigma, u)
    } else {
        (u, sigma, vv)
    }
}

/// Effective truncation bound: each positive tolerance is a constraint, so
/// when both are given the tighter one governs.
pub fn combined_bound(tol_abs: f64, tol_rel: f64, norm: f64) -> f64 {
    match (tol_abs > 0.0, tol_rel > 0.0) {
        (true, true) => tol_abs.min(tol_rel * norm),
        (true, false) => tol_abs,
        (false, true) => tol_rel * norm,
        (false, false) => 0.0,
    }
}

/// Thin QR factorization; requires `rows >= cols`.
pub fn qr_factor<T: Scalar>(m: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    if m.nrows() < m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "qr_factor requires rows >= cols, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let qr = m.clone().qr();
    Ok((qr.q(), qr.r()))
}

/// `exp(t A)` for a square matrix, via Padé scaling-and-squaring.
pub fn matrix_exp<T: Scalar>(a: &DenseMatrix<T>, t: f64) -> Result<DenseMatrix<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix_exp requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scaled = a * T::from_real(t);
    Ok(scaled.exp())
}

/// Variable-step RK4 with step-doubling error control. Local error per step
/// is kept at or below `abs_tol`; the controller uses safety factor 0.9 and
/// step-growth clamp [0.2, 5].
pub fn dense_rk4_adaptive<T: Scalar>(
    g: &dyn Fn(&DenseTensor<T>) -> Result<DenseTensor<T>>,
    f0: &DenseTensor<T>,
    t_final: f64,
    abs_tol: f64,
) -> Result<DenseTensor<T>> {
    if abs_tol <= 0.0 {
        return Err(Error::InvalidArgument("abs_tol must be positive".into()));
    }
    if t_final == 0.0 {
        return Ok(f0.clone());
    }
    let mut f = f0.clone();
    let mut t = 0.0_f64;
    let mut dt = (t_final / 16.0).min(t_final);
    let floor = 1e-14 * t_final;
    while t < t_final {
        if dt < floor {
            return Err(Error::StepUnderflow { dt, floor });
        }
        let h = dt.min(t_final - t);
        let full = rk4_step(g, &f, h)?;
        let half = rk4_step(g, &f, 0.5 * h)?;
        let two_half = rk4_step(g, &half, 0.5 * h)?;
        let err = DenseTensor::axpy(T::one(), &two_half, -T::one(), &full)?.norm() / 15.0;
        if err <= abs_tol || h <= floor {
            t += h;
            f = two_half;
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("RK4 state at t = {t}")));
            }
        }
        let ratio = if err > 0.0 {
            0.9 * (abs_tol / err).powf(0.2)
        } else {
            5.0
        };
        dt = h * ratio.clamp(0.2, 5.0);
    }
    Ok(f)
}

fn rk4_step<T: Scalar>(
    g: &dyn Fn(&DenseTensor<T>) -> Result<DenseTensor<T>>,
    f: &DenseTensor<T>,
    h: f64,
) -> Result<DenseTensor<T>> {
    let hh = T::from_real(h);
    let half = T::from_real(0.5 * h);
    let k1 = g(f)?;
    let k2 = g(&DenseTensor::axpy(T::one(), f, half, &k1)?)?;
    let k3 = g(&DenseTensor::axpy(T::one(), f, half, &k2)?)?;
    let k4 = g(&DenseTensor::axpy(T::one(), f, hh, &k3)?)?;
    let sixth = T::from_real(h / 6.0);
    let third = T::from_real(h / 3.0);
    let mut out = DenseTensor::axpy(T::one(), f, sixth, &k1)?;
    out = DenseTensor::axpy(T::one(), &out, third, &k2)?;
    out = DenseTensor::axpy(T::one(), &out, third, &k3)?;
    DenseTensor::axpy(T::one(), &out, sixth, &k4)
}
