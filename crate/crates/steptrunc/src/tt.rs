//! Tensor-train format, the truncation operator, and TT arithmetic.
//!
//! A tensor `f` of order `d` is stored as a chain of order-3 cores, core `k`
//! having shape `(r_{k-1}, n_k, r_k)` with `r_0 = r_d = 1`. Cores are kept in
//! column-major layout with the left rank index fastest, so the left
//! unfolding `(r_{k-1} n_k) x r_k` and the right unfolding
//! `r_{k-1} x (n_k r_k)` are both plain reinterpretations of the same buffer.

use crate::dense::{truncated_svd, DenseMatrix, DenseTensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use rand::Rng;
use std::sync::OnceLock;

pub mod io;

/// Hard safety cap on any TT rank produced by formal-rank arithmetic.
/// Exceeding it aborts with [`Error::RankCap`] instead of silently
/// truncating. Override with the `STEPTRUNC_RANK_CAP` environment variable.
pub fn rank_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("STEPTRUNC_RANK_CAP")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(512)
    })
}

/// Dense-conversion memory budget in bytes (per tensor). Override with
/// `STEPTRUNC_DENSE_BUDGET_BYTES`.
pub fn dense_budget_bytes() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var("STEPTRUNC_DENSE_BUDGET_BYTES")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(1 << 31)
    })
}

/// Truncation bounds for the TT rounding operator. At least one bound must
/// be active.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundingSpec {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_rank: Option<usize>,
}

impl RoundingSpec {
    pub fn abs(tol: f64) -> Self {
        Self {
            tol_abs: tol,
            tol_rel: 0.0,
            max_rank: None,
        }
    }

    pub fn rel(tol: f64) -> Self {
        Self {
            tol_abs: 0.0,
            tol_rel: tol,
            max_rank: None,
        }
    }

    pub fn abs_rel(tol_abs: f64, tol_rel: f64) -> Self {
        Self {
            tol_abs,
            tol_rel,
            max_rank: None,
        }
    }

    pub fn with_max_rank(mut self, r: usize) -> Self {
        self.max_rank = Some(r);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.tol_abs < 0.0 || self.tol_rel < 0.0 {
            return Err(Error::InvalidArgument(
                "rounding tolerances must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Which cores of a TT tensor are orthonormal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthogonality {
    None,
    /// All cores but the last are left-orthonormal.
    Left,
    /// All cores but the first are right-orthonormal.
    Right,
}

/// One order-3 TT core of shape `(r_left, n, r_right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TtCore<T: Scalar> {
    pub r_left: usize,
    pub n: usize,
    pub r_right: usize,
    /// Column-major with the left rank index fastest:
    /// `data[a + r_left * (i + n * b)]`.
    pub data: Vec<T>,
}

impl<T: Scalar> TtCore<T> {
    pub fn zeros(r_left: usize, n: usize, r_right: usize) -> Self {
        Self {
            r_left,
            n,
            r_right,
            data: vec![T::zero(); r_left * n * r_right],
        }
    }

    pub fn get(&self, a: usize, i: usize, b: usize) -> T {
        self.data[a + self.r_left * (i + self.n * b)]
    }

    pub fn set(&mut self, a: usize, i: usize, b: usize, v: T) {
        self.data[a + self.r_left * (i + self.n * b)] = v;
    }

    /// `(r_left * n) x r_right` matricization.
    pub fn left_unfold(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.r_left * self.n, self.r_right, &self.data)
    }

    /// `r_left x (n * r_right)` matricization.
    pub fn right_unfold(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.r_left, self.n * self.r_right, &self.data)
    }

    pub fn from_left_unfold(m: DMatrix<T>, r_left: usize, n: usize) -> Self {
        debug_assert_eq!(m.nrows(), r_left * n);
        let r_right = m.ncols();
        Self {
            r_left,
            n,
            r_right,
            data: m.as_slice().to_vec(),
        }
    }

    pub fn from_right_unfold(m: DMatrix<T>, n: usize, r_right: usize) -> Self {
        debug_assert_eq!(m.ncols(), n * r_right);
        let r_left = m.nrows();
        Self {
            r_left,
            n,
            r_right,
            data: m.as_slice().to_vec(),
        }
    }

    /// `r_left x r_right` slice at mode index `i`.
    pub fn slice(&self, i: usize) -> DMatrix<T> {
        DMatrix::from_fn(self.r_left, self.r_right, |a, b| self.get(a, i, b))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            r_left: self.r_left,
            n: self.n,
            r_right: self.r_right,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Tensor in train format; an element of the low-rank manifold.
#[derive(Clone, Debug)]
pub struct TtTensor<T: Scalar> {
    cores: Vec<TtCore<T>>,
    orthogonality: Orthogonality,
}

impl<T: Scalar> TtTensor<T> {
    pub fn from_cores(cores: Vec<TtCore<T>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("TT tensor needs d >= 1 cores".into()));
        }
        if cores[0].r_left != 1 || cores[cores.len() - 1].r_right != 1 {
            return Err(Error::ShapeMismatch("boundary TT ranks must be 1".into()));
        }
        for w in cores.windows(2) {
            if w[0].r_right != w[1].r_left {
                return Err(Error::ShapeMismatch(format!(
                    "adjacent core ranks {} vs {}",
                    w[0].r_right, w[1].r_left
                )));
            }
        }
        let t = Self {
            cores,
            orthogonality: Orthogonality::None,
        };
        t.check_rank_cap()?;
        Ok(t)
    }

    fn check_rank_cap(&self) -> Result<()> {
        let cap = rank_cap();
        let d = self.cores.len();
        // A formal rank is harmless when the mode dimensions themselves
        // bound the true rank: rank at edge k never exceeds
        // min(n_1···n_k, n_{k+1}···n_d), and an orthogonalization sweep
        // restores that bound. Only an irreducible excess trips the cap.
        let mut left = vec![1usize; d + 1];
        for k in 0..d {
            left[k + 1] = left[k].saturating_mul(self.cores[k].n);
        }
        let mut right = vec![1usize; d + 1];
        for k in (0..d).rev() {
            right[k] = right[k + 1].saturating_mul(self.cores[k].n);
        }
        for (edge, c) in self.cores.iter().enumerate() {
            let minimal = c.r_right.min(left[edge + 1]).min(right[edge + 1]);
            if minimal > cap {
                return Err(Error::RankCap {
                    rank: c.r_right,
                    cap,
                    edge: edge + 1,
                });
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[TtCore<T>] {
        &self.cores
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.n).collect()
    }

    /// `(r_0, ..., r_d)` with `r_0 = r_d = 1`.
    pub fn rank_vector(&self) -> Vec<usize> {
        let mut r = Vec::with_capacity(self.cores.len() + 1);
        r.push(1);
        r.extend(self.cores.iter().map(|c| c.r_right));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.rank_vector().into_iter().max().unwrap_or(1)
    }

    /// Total number of stored core entries.
    pub fn storage_entries(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    pub fn orthogonality(&self) -> Orthogonality {
        self.orthogonality
    }

    /// All-zeros tensor with unit ranks.
    pub fn zeros(mode_sizes: &[usize]) -> Self {
        let cores = mode_sizes.iter().map(|&n| TtCore::zeros(1, n, 1)).collect();
        Self {
            cores,
            orthogonality: Orthogonality::None,
        }
    }

    /// Rank-one tensor from per-mode factor vectors.
    pub fn rank_one(factors: &[Vec<T>]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("rank_one needs d >= 1 factors".into()));
        }
        let cores = factors
            .iter()
            .map(|f| TtCore {
                r_left: 1,
                n: f.len(),
                r_right: 1,
                data: f.clone(),
            })
            .collect();
        Self::from_cores(cores)
    }

    /// Constant-value tensor (rank one).
    pub fn constant(mode_sizes: &[usize], value: T) -> Self {
        let mut factors: Vec<Vec<T>> = mode_sizes.iter().map(|&n| vec![T::one(); n]).collect();
        for x in &mut factors[0] {
            *x = value;
        }
        Self::rank_one(&factors).expect("constant tensor is well formed")
    }

    /// Seeded random TT tensor with prescribed interior ranks.
    pub fn random<R: Rng>(mode_sizes: &[usize], interior_ranks: &[usize], rng: &mut R) -> Result<Self> {
        let d = mode_sizes.len();
        if d == 0 {
            return Err(Error::InvalidArgument("d must be >= 1".into()));
        }
        if interior_ranks.len() != d.saturating_sub(1) {
            return Err(Error::InvalidArgument(format!(
                "expected {} interior ranks, got {}",
                d - 1,
                interior_ranks.len()
            )));
        }
        let mut ranks = vec![1usize];
        ranks.extend_from_slice(interior_ranks);
        ranks.push(1);
        let cores = (0..d)
            .map(|k| {
                let (rl, n, rr) = (ranks[k], mode_sizes[k], ranks[k + 1]);
                TtCore {
                    r_left: rl,
                    n,
                    r_right: rr,
                    data: (0..rl * n * rr).map(|_| T::sample(rng)).collect(),
                }
            })
            .collect();
        Self::from_cores(cores)
    }

    /// Multiply by a scalar (folded into the first core).
    pub fn scale(&self, alpha: T) -> Self {
        let mut cores = self.cores.clone();
        for x in &mut cores[0].data {
            *x *= alpha;
        }
        Self {
            cores,
            orthogonality: Orthogonality::None,
        }
    }

    /// Elementwise complex conjugate.
    pub fn conjugate(&self) -> Self {
        Self {
            cores: self.cores.iter().map(|c| c.map(|x| x.conjugate())).collect(),
            orthogonality: self.orthogonality,
        }
    }
}

/// TT-SVD construction of a train from a full tensor, with reconstruction
/// error within every active tolerance (`tol_abs`, `tol_rel * ||f||`) in the
/// tensor 2-norm. The global bound is distributed as `bound / sqrt(d - 1)`
/// per unfolding.
pub fn tt_from_dense<T: Scalar>(f: &DenseTensor<T>, spec: &RoundingSpec) -> Result<TtTensor<T>> {
    spec.validate()?;
    if !f.is_finite() {
        return Err(Error::NonFinite("tt_from_dense input".into()));
    }
    let sizes = f.mode_sizes().to_vec();
    let d = sizes.len();
    let norm = f.norm();
    let bound = crate::dense::combined_bound(spec.tol_abs, spec.tol_rel, norm);
    let per_mode = if d > 1 {
        bound / ((d - 1) as f64).sqrt()
    } else {
        0.0
    };

    if d == 1 {
        let core = TtCore {
            r_left: 1,
            n: sizes[0],
            r_right: 1,
            data: f.data().as_slice().to_vec(),
        };
        return TtTensor::from_cores(vec![core]);
    }

    let mut cores = Vec::with_capacity(d);
    let mut rest: usize = sizes.iter().product();
    let mut r = 1usize;
    // Current remainder, as an (r * n_k) x (rest after mode k) matrix.
    let mut m = {
        rest /= sizes[0];
        DMatrix::from_column_slice(sizes[0], rest, f.data().as_slice())
    };
    for k in 0..d - 1 {
        let n = sizes[k];
        let svd = truncated_svd(&m, per_mode, 0.0, spec.max_rank)?;
        let r_new = svd.rank_kept;
        cores.push(TtCore::from_left_unfold(svd.u, r, n));
        // Remainder diag(sigma) V^H, reshaped to absorb the next mode.
        let sv = DMatrix::from_fn(r_new, m.ncols(), |i, j| {
            svd.v[(j, i)].conjugate() * T::from_real(svd.singular_values[i])
        });
        let n_next = sizes[k + 1];
        rest /= n_next;
        m = DMatrix::from_column_slice(r_new * n_next, rest, sv.as_slice());
        r = r_new;
    }
    cores.push(TtCore::from_left_unfold(m, r, sizes[d - 1]));
    let mut t = TtTensor::from_cores(cores)?;
    t.orthogonality = Orthogonality::Left;
    Ok(t)
}

/// Exact contraction of the train back to a full tensor. Rejected when the
/// result would exceed the dense memory budget.
pub fn tt_to_dense<T: Scalar>(f: &TtTensor<T>) -> Result<DenseTensor<T>> {
    let sizes = f.mode_sizes();
    let total: usize = sizes.iter().product();
    let required = total * std::mem::size_of::<T>();
    if required > dense_budget_bytes() {
        return Err(Error::MemoryBudget {
            required_bytes: required,
            budget_bytes: dense_budget_bytes(),
        });
    }
    // Accumulate (prod of processed modes) x r_k, first mode fastest.
    let mut acc = f.cores[0].left_unfold();
    for core in &f.cores[1..] {
        let prod = &acc * core.right_unfold();
        let rows = prod.nrows() * core.n;
        acc = DMatrix::from_column_slice(rows, core.r_right, prod.as_slice());
    }
    debug_assert_eq!(acc.ncols(), 1);
    DenseTensor::new(sizes, acc.as_slice().to_vec())
}

/// The truncation operator: right-orthogonalization sweep followed by a
/// left-to-right SVD sweep. The result satisfies
/// `||result - f|| <= tol_abs` and `<= tol_rel * ||f||` for whichever
/// tolerances are active, and its ranks never exceed those of `f`.
pub fn tt_round<T: Scalar>(f: &TtTensor<T>, spec: &RoundingSpec) -> Result<TtTensor<T>> {
    spec.validate()?;
    let d = f.order();
    if d == 1 {
        return Ok(f.clone());
    }
    // Right-orthogonalization sweep (last to second core).
    let mut cores = f.cores.clone();
    for k in (1..d).rev() {
        let m = cores[k].right_unfold(); // r_{k-1} x (n_k r_k)
        let qr = m.adjoint().qr();
        let q = qr.q(); // (n_k r_k) x s
        let r = qr.r(); // s x r_{k-1}
        let s = q.ncols();
        cores[k] = TtCore::from_right_unfold(q.adjoint(), cores[k].n, cores[k].r_right);
        let carry = r.adjoint(); // r_{k-1} x s
        let prev = cores[k - 1].left_unfold() * carry;
        cores[k - 1] = TtCore::from_left_unfold(prev, cores[k - 1].r_left, cores[k - 1].n);
        debug_assert_eq!(cores[k].r_left, s);
    }
    // With all cores but the first right-orthonormal, the norm lives in
    // core 0.
    let norm = cores[0].left_unfold().norm();
    let bound = crate::dense::combined_bound(spec.tol_abs, spec.tol_rel, norm);
    let per_mode = bound / ((d - 1) as f64).sqrt();

    // Left-to-right truncation sweep.
    for k in 0..d - 1 {
        let m = cores[k].left_unfold();
        let svd = truncated_svd(&m, per_mode, 0.0, spec.max_rank)?;
        cores[k] = TtCore::from_left_unfold(svd.u, cores[k].r_left, cores[k].n);
        let carry = DMatrix::from_fn(svd.rank_kept, m.ncols(), |i, j| {
            svd.v[(j, i)].conjugate() * T::from_real(svd.singular_values[i])
        });
        let next = &carry * cores[k + 1].right_unfold();
        cores[k + 1] = TtCore::from_right_unfold(next, cores[k + 1].n, cores[k + 1].r_right);
    }
    let mut t = TtTensor::from_cores(cores)?;
    t.orthogonality = Orthogonality::Left;
    Ok(t)
}

/// Formal-rank linear combination `alpha * f + beta * g`. Interior ranks add;
/// no rounding is performed.
pub fn tt_axpy<T: Scalar>(alpha: T, f: &TtTensor<T>, beta: T, g: &TtTensor<T>) -> Result<TtTensor<T>> {
    check_same_sizes(f, g)?;
    let d = f.order();
    if d == 1 {
        let n = f.cores[0].n;
        let mut data = vec![T::zero(); n];
        for i in 0..n {
            data[i] = alpha * f.cores[0].data[i] + beta * g.cores[0].data[i];
        }
        return TtTensor::from_cores(vec![TtCore {
            r_left: 1,
            n,
            r_right: 1,
            data,
        }]);
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let a = &f.cores[k];
        let b = &g.cores[k];
        let (rl, rr) = if k == 0 {
            (1, a.r_right + b.r_right)
        } else if k == d - 1 {
            (a.r_left + b.r_left, 1)
        } else {
            (a.r_left + b.r_left, a.r_right + b.r_right)
        };
        let mut c = TtCore::zeros(rl, a.n, rr);
        let (sa, sb) = if k == 0 { (alpha, beta) } else { (T::one(), T::one()) };
        let (off_l, off_r) = if k == 0 { (0, a.r_right) } else { (a.r_left, a.r_right) };
        for i in 0..a.n {
            for x in 0..a.r_left {
                for y in 0..a.r_right {
                    c.set(x, i, y, a.get(x, i, y) * sa);
                }
            }
            for x in 0..b.r_left {
                for y in 0..b.r_right {
                    let (tx, ty) = if k == 0 {
                        (x, off_r + y)
                    } else if k == d - 1 {
                        (off_l + x, y)
                    } else {
                        (off_l + x, off_r + y)
                    };
                    c.set(tx, i, ty, b.get(x, i, y) * sb);
                }
            }
        }
        cores.push(c);
    }
    TtTensor::from_cores(cores)
}

/// Inner product, conjugate-linear in `f`.
pub fn tt_inner<T: Scalar>(f: &TtTensor<T>, g: &TtTensor<T>) -> Result<T> {
    check_same_sizes(f, g)?;
    let mut m = DMatrix::from_element(1, 1, T::one());
    for (cf, cg) in f.cores.iter().zip(&g.cores) {
        let mut next = DMatrix::zeros(cf.r_right, cg.r_right);
        for i in 0..cf.n {
            let a = cf.slice(i);
            let b = cg.slice(i);
            next += a.adjoint() * &m * b;
        }
        m = next;
    }
    Ok(m[(0, 0)])
}

/// Tensor 2-norm, evaluated by a right-orthogonalization QR sweep.
///
/// The Gram-chain route `sqrt(⟨f,f⟩)` loses half its significant digits to
/// cancellation when `f` is a formal difference of nearly equal tensors
/// (its floor is about `sqrt(ε)` times the summand norms), which would make
/// residual norms below `1e-8` unmeasurable. The QR sweep is backward
/// stable, so norms are accurate down to machine precision.
pub fn tt_norm<T: Scalar>(f: &TtTensor<T>) -> f64 {
    let d = f.order();
    // Carry of R factors accumulated from the right; the norm ends up in
    // the first core.
    let mut carry: Option<DMatrix<T>> = None;
    for k in (1..d).rev() {
        let core = &f.cores[k];
        let m = match carry.take() {
            // Contract the carry into the right rank index, then reshape
            // back to the right unfolding.
            Some(c) => {
                let lu = core.left_unfold() * c;
                let cols = lu.ncols();
                DMatrix::from_column_slice(core.r_left, core.n * cols, lu.as_slice())
            }
            None => core.right_unfold(),
        };
        let qr = m.adjoint().qr();
        carry = Some(qr.r().adjoint());
    }
    let first = match carry {
        Some(c) => f.cores[0].left_unfold() * c,
        None => f.cores[0].left_unfold(),
    };
    first.norm()
}

/// Elementwise (Hadamard) product. Without a rounding spec the result is
/// exact and interior ranks multiply; with a spec the product is rounded.
pub fn tt_hadamard<T: Scalar>(
    f: &TtTensor<T>,
    g: &TtTensor<T>,
    spec: Option<&RoundingSpec>,
) -> Result<TtTensor<T>> {
    check_same_sizes(f, g)?;
    let d = f.order();
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let a = &f.cores[k];
        let b = &g.cores[k];
        let rl = a.r_left * b.r_left;
        let rr = a.r_right * b.r_right;
        let mut c = TtCore::zeros(rl, a.n, rr);
        for i in 0..a.n {
            // Slice-wise Kronecker product, f index slow.
            for xa in 0..a.r_left {
                for xb in 0..b.r_left {
                    for ya in 0..a.r_right {
                        for yb in 0..b.r_right {
                            c.set(
                                xa * b.r_left + xb,
                                i,
                                ya * b.r_right + yb,
                                a.get(xa, i, ya) * b.get(xb, i, yb),
                            );
                        }
                    }
                }
            }
        }
        cores.push(c);
    }
    let prod = TtTensor::from_cores(cores)?;
    match spec {
        Some(s) => tt_round(&prod, s),
        None => Ok(prod),
    }
}

/// Contract a square matrix into core `mode`; ranks are unchanged.
pub fn mode_apply<T: Scalar>(m: &DenseMatrix<T>, f: &TtTensor<T>, mode: usize) -> Result<TtTensor<T>> {
    if mode >= f.order() {
        return Err(Error::InvalidArgument(format!(
            "mode {} out of range for order {}",
            mode,
            f.order()
        )));
    }
    let core = &f.cores[mode];
    if m.nrows() != core.n || m.ncols() != core.n {
        return Err(Error::ShapeMismatch(format!(
            "matrix {}x{} does not match mode size {}",
            m.nrows(),
            m.ncols(),
            core.n
        )));
    }
    let mut new_core = TtCore::zeros(core.r_left, core.n, core.r_right);
    for j in 0..core.n {
        for i in 0..core.n {
            let w = m[(j, i)];
            if w == T::zero() {
                continue;
            }
            for a in 0..core.r_left {
                for b in 0..core.r_right {
                    let v = new_core.get(a, j, b) + w * core.get(a, i, b);
                    new_core.set(a, j, b, v);
                }
            }
        }
    }
    let mut cores = f.cores.clone();
    cores[mode] = new_core;
    TtTensor::from_cores(cores)
}

fn check_same_sizes<T: Scalar>(f: &TtTensor<T>, g: &TtTensor<T>) -> Result<()> {
    if f.mode_sizes() != g.mode_sizes() {
        return Err(Error::ShapeMismatch(format!(
            "mode sizes {:?} vs {:?}",
            f.mode_sizes(),
            g.mode_sizes()
        )));
    }
    Ok(())
}
