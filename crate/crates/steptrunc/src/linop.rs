//! Structured linear operators on TT tensors: sums of Kronecker-product
//! terms plus elementwise-diagonal fields.
//!
//! This shape covers every operator the integrators need: separable PDE
//! operators (Laplacians, advection with separable coefficients), identity
//! shifts, and the diagonal Jacobian blocks of pointwise nonlinearities.

use crate::dense::{DenseMatrix, DenseTensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tt::{mode_apply, tt_axpy, tt_hadamard, tt_norm, tt_round, tt_to_dense, RoundingSpec, TtTensor};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-mode factor of a Kronecker term. Identity factors are tagged so their
/// application can be skipped.
#[derive(Clone, Debug)]
pub enum Factor<T: Scalar> {
    Identity,
    Matrix(DenseMatrix<T>),
}

#[derive(Clone, Debug)]
pub struct KronTerm<T: Scalar> {
    pub coefficient: T,
    pub factors: Vec<Factor<T>>,
    /// When set the term acts on the elementwise conjugate of its operand
    /// (an antilinear contribution, used by linearizations of terms that
    /// involve the conjugate field).
    pub conjugate_input: bool,
}

#[derive(Clone, Debug)]
pub struct DiagTerm<T: Scalar> {
    pub coefficient: T,
    pub field: TtTensor<T>,
    pub conjugate_input: bool,
}

/// Linear operator as `sum_j c_j (A_1 ⊗ ... ⊗ A_d) + sum_k c_k diag(w_k)`.
#[derive(Clone, Debug)]
pub struct TtLinOp<T: Scalar> {
    mode_sizes: Vec<usize>,
    pub kron_terms: Vec<KronTerm<T>>,
    pub diag_terms: Vec<DiagTerm<T>>,
}

impl<T: Scalar> TtLinOp<T> {
    pub fn new(mode_sizes: Vec<usize>) -> Self {
        Self {
            mode_sizes,
            kron_terms: Vec::new(),
            diag_terms: Vec::new(),
        }
    }

    pub fn identity(mode_sizes: Vec<usize>) -> Self {
        let d = mode_sizes.len();
        let mut op = Self::new(mode_sizes);
        op.kron_terms.push(KronTerm {
            coefficient: T::one(),
            factors: vec![Factor::Identity; d],
            conjugate_input: false,
        });
        op
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    /// Add a Kronecker term with the given per-mode factors.
    pub fn add_kron(&mut self, coefficient: T, factors: Vec<Factor<T>>) -> Result<&mut Self> {
        if factors.len() != self.mode_sizes.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} factors, got {}",
                self.mode_sizes.len(),
                factors.len()
            )));
        }
        for (k, fac) in factors.iter().enumerate() {
            if let Factor::Matrix(m) = fac {
                let n = self.mode_sizes[k];
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "factor {} is {}x{}, mode size is {}",
                        k,
                        m.nrows(),
                        m.ncols(),
                        n
                    )));
                }
            }
        }
        self.kron_terms.push(KronTerm {
            coefficient,
            factors,
            conjugate_input: false,
        });
        Ok(self)
    }

    /// Add a Kronecker term with one non-identity factor on `mode`.
    pub fn add_single_mode(&mut self, coefficient: T, mode: usize, m: DenseMatrix<T>) -> Result<&mut Self> {
        let mut factors = vec![Factor::Identity; self.mode_sizes.len()];
        factors[mode] = Factor::Matrix(m);
        self.add_kron(coefficient, factors)
    }

    pub fn add_diag(&mut self, coefficient: T, field: TtTensor<T>) -> Result<&mut Self> {
        if field.mode_sizes() != self.mode_sizes {
            return Err(Error::ShapeMismatch(format!(
                "diag field sizes {:?} vs operator sizes {:?}",
                field.mode_sizes(),
                self.mode_sizes
            )));
        }
        self.diag_terms.push(DiagTerm {
            coefficient,
            field,
            conjugate_input: false,
        });
        Ok(self)
    }

    /// Add an antilinear diagonal term acting as `c * w ∘ conj(s)`.
    pub fn add_diag_conj(&mut self, coefficient: T, field: TtTensor<T>) -> Result<&mut Self> {
        self.add_diag(coefficient, field)?;
        self.diag_terms.last_mut().unwrap().conjugate_input = true;
        Ok(self)
    }

    /// `alpha * self + beta * other`, by merging term lists.
    pub fn scaled_sum(alpha: T, a: &Self, beta: T, b: &Self) -> Result<Self> {
        if a.mode_sizes != b.mode_sizes {
            return Err(Error::ShapeMismatch("operator mode sizes differ".into()));
        }
        let mut out = Self::new(a.mode_sizes.clone());
        for t in &a.kron_terms {
            let mut t = t.clone();
            t.coefficient *= alpha;
            out.kron_terms.push(t);
        }
        for t in &a.diag_terms {
            let mut t = t.clone();
            t.coefficient *= alpha;
            out.diag_terms.push(t);
        }
        for t in &b.kron_terms {
            let mut t = t.clone();
            t.coefficient *= beta;
            out.kron_terms.push(t);
        }
        for t in &b.diag_terms {
            let mut t = t.clone();
            t.coefficient *= beta;
            out.diag_terms.push(t);
        }
        Ok(out)
    }

    /// Apply to a TT tensor in formal-rank arithmetic (no rounding inside).
    /// Ranks grow additively over Kronecker terms and multiplicatively
    /// through diagonal terms.
    pub fn apply(&self, f: &TtTensor<T>) -> Result<TtTensor<T>> {
        if f.mode_sizes() != self.mode_sizes {
            return Err(Error::ShapeMismatch(format!(
                "operand sizes {:?} vs operator sizes {:?}",
                f.mode_sizes(),
                self.mode_sizes
            )));
        }
        let conj = f.conjugate();
        let mut acc: Option<TtTensor<T>> = None;
        for term in &self.kron_terms {
            let mut g = if term.conjugate_input { conj.clone() } else { f.clone() };
            for (k, fac) in term.factors.iter().enumerate() {
                if let Factor::Matrix(m) = fac {
                    g = mode_apply(m, &g, k)?;
                }
            }
            g = g.scale(term.coefficient);
            acc = Some(match acc {
                None => g,
                Some(a) => tt_axpy(T::one(), &a, T::one(), &g)?,
            });
        }
        // Hadamard products multiply ranks; collapse them near machine
        // precision before the sum so callers never see the formal product
        // rank of field × operand.
        let diag_round = RoundingSpec::rel(1e-13);
        for term in &self.diag_terms {
            let operand = if term.conjugate_input { &conj } else { f };
            let g = tt_hadamard(&term.field, operand, Some(&diag_round))?.scale(term.coefficient);
            acc = Some(match acc {
                None => g,
                Some(a) => tt_axpy(T::one(), &a, T::one(), &g)?,
            });
        }
        Ok(acc.unwrap_or_else(|| TtTensor::zeros(&self.mode_sizes)))
    }

    /// Apply to a dense tensor (oracle twin of [`TtLinOp::apply`]).
    pub fn apply_dense(&self, f: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        if f.mode_sizes() != self.mode_sizes {
            return Err(Error::ShapeMismatch("dense operand sizes differ".into()));
        }
        let conj = f.conjugate();
        let mut acc = DenseTensor::zeros(self.mode_sizes.clone());
        for term in &self.kron_terms {
            let mut g = if term.conjugate_input { conj.clone() } else { f.clone() };
            for (k, fac) in term.factors.iter().enumerate() {
                if let Factor::Matrix(m) = fac {
                    g = g.mode_apply(m, k)?;
                }
            }
            acc = DenseTensor::axpy(T::one(), &acc, term.coefficient, &g)?;
        }
        for term in &self.diag_terms {
            let operand = if term.conjugate_input { &conj } else { f };
            let w = tt_to_dense(&term.field)?;
            let g = w.hadamard(operand)?;
            acc = DenseTensor::axpy(T::one(), &acc, term.coefficient, &g)?;
        }
        Ok(acc)
    }

    /// Adjoint operator (conjugate transpose of every factor and field).
    pub fn adjoint(&self) -> Self {
        let mut out = Self::new(self.mode_sizes.clone());
        for term in &self.kron_terms {
            out.kron_terms.push(KronTerm {
                coefficient: term.coefficient.conjugate(),
                factors: term
                    .factors
                    .iter()
                    .map(|f| match f {
                        Factor::Identity => Factor::Identity,
                        Factor::Matrix(m) => Factor::Matrix(m.adjoint()),
                    })
                    .collect(),
                conjugate_input: term.conjugate_input,
            });
        }
        for term in &self.diag_terms {
            out.diag_terms.push(DiagTerm {
                coefficient: term.coefficient.conjugate(),
                field: term.field.conjugate(),
                conjugate_input: term.conjugate_input,
            });
        }
        out
    }

    /// Spectral-norm estimate by power iteration on `AᴴA`. Intermediate
    /// iterates are rounded to keep ranks bounded; the estimate is only
    /// used for tolerance bookkeeping, not for accuracy-critical paths.
    pub fn norm_est(&self, iters: usize) -> Result<f64> {
        let adj = self.adjoint();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let spec = RoundingSpec::rel(1e-6).with_max_rank(16);
        let ranks = vec![1usize; self.mode_sizes.len().saturating_sub(1)];
        let mut x = TtTensor::random(&self.mode_sizes, &ranks, &mut rng)?;
        let mut sigma = 0.0;
        for _ in 0..iters.max(1) {
            let nx = tt_norm(&x);
            if nx < 1e-300 {
                return Ok(0.0);
            }
            x = x.scale(T::from_real(1.0 / nx));
            let ax = tt_round(&self.apply(&x)?, &spec)?;
            sigma = tt_norm(&ax);
            x = tt_round(&adj.apply(&ax)?, &spec)?;
        }
        Ok(sigma)
    }

    /// Materialize the full matrix by applying the operator to every dense
    /// unit vector. Oracle bridge for small systems only.
    pub fn dense_matrix(&self) -> Result<DMatrix<T>> {
        let total: usize = self.mode_sizes.iter().product();
        let required = total * total * std::mem::size_of::<T>();
        let budget = crate::tt::dense_budget_bytes();
        if required > budget {
            return Err(Error::MemoryBudget {
                required_bytes: required,
                budget_bytes: budget,
            });
        }
        let mut out = DMatrix::zeros(total, total);
        for j in 0..total {
            let mut e = DenseTensor::zeros(self.mode_sizes.clone());
            e.data_mut()[j] = T::one();
            let col = self.apply_dense(&e)?;
            out.set_column(j, &DMatrix::from_column_slice(total, 1, col.data().as_slice()).column(0));
        }
        Ok(out)
    }
}
