//! Pointwise dense linear algebra on the tangent space at a point.
//!
//! Vectors and (1,1)-tensors are plain `nalgebra` dynamic types. Symmetric
//! bilinear forms get a checked newtype because their invariants (symmetry,
//! nondegeneracy for metric use) matter to every caller.

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type SquareMatrix = DMatrix<f64>;

/// Relative threshold below which an eigenvalue counts as zero.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;
/// Absolute asymmetry tolerated by [`BilinearForm::new`], relative to the largest entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Counts of positive and negative eigen-directions of a nondegenerate form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
}

impl Signature {
    pub fn new(positive: usize, negative: usize) -> Self {
        Self { positive, negative }
    }

    pub fn dim(&self) -> usize {
        self.positive + self.negative
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.positive, self.negative)
    }
}

/// A symmetric bilinear form on R^n given by its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm(SquareMatrix);

impl BilinearForm {
    /// Wraps `m` after checking it is square, finite and symmetric. The
    /// stored matrix is the exact symmetrization of `m`.
    pub fn new(m: SquareMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.amax().max(1.0);
        let asym = residual_norm(&m, &m.transpose());
        if asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self((&m + m.transpose()) * 0.5))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self(SquareMatrix::from_diagonal(&Vector::from_column_slice(entries)))
    }

    pub fn identity(n: usize) -> Self {
        Self(SquareMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    /// b(x, y)
    pub fn apply(&self, x: &Vector, y: &Vector) -> f64 {
        x.dot(&(&self.0 * y))
    }

    /// The form (X, Y) ↦ b(aX, aY), i.e. aᵀ·b·a.
    pub fn pullback(&self, a: &SquareMatrix) -> Result<BilinearForm> {
        if a.nrows() != self.dim() || !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.nrows(),
            });
        }
        Ok(Self(pullback_matrix(&self.0, a)))
    }

    /// Sylvester inertia from the eigenvalues of the (already symmetric) matrix.
    pub fn signature(&self) -> Result<Signature> {
        signature_of(&self.0)
    }

    pub fn inverse(&self) -> Result<SquareMatrix> {
        self.signature()?;
        self.0
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateForm {
                smallest: 0.0,
                threshold: DEGENERACY_THRESHOLD,
            })
    }
}

/// aᵀ·b·a without any checks.
pub fn pullback_matrix(b: &SquareMatrix, a: &SquareMatrix) -> SquareMatrix {
    a.transpose() * b * a
}

/// Signature of the symmetric part of `m`.
pub fn signature_of(m: &SquareMatrix) -> Result<Signature> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let largest = eig.eigenvalues.amax();
    let threshold = DEGENERACY_THRESHOLD * largest.max(f64::MIN_POSITIVE);
    let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if largest == 0.0 || smallest < threshold {
        return Err(Error::DegenerateForm {
            smallest,
            threshold,
        });
    }
    let positive = eig.eigenvalues.iter().filter(|x| **x > 0.0).count();
    Ok(Signature::new(positive, m.nrows() - positive))
}

/// Max-abs entrywise difference. NaN anywhere yields NaN so that a
/// comparison against a tolerance fails.
pub fn residual_norm<R, C, S1, S2>(a: &Matrix<f64, R, C, S1>, b: &Matrix<f64, R, C, S2>) -> f64
where
    R: Dim,
    C: Dim,
    S1: RawStorage<f64, R, C>,
    S2: RawStorage<f64, R, C>,
{
    assert_eq!(a.shape(), b.shape(), "residual_norm shape mismatch");
    let mut worst = 0.0_f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = (x - y).abs();
        if d.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(d);
    }
    worst
}

/// Max-abs entry.
pub fn max_abs<R, C, S>(a: &Matrix<f64, R, C, S>) -> f64
where
    R: Dim,
    C: Dim,
    S: RawStorage<f64, R, C>,
{
    let mut worst = 0.0_f64;
    for x in a.iter() {
        if x.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(x.abs());
    }
    worst
}

/// NaN-propagating maximum, for folding residuals.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// The endomorphism X ↦ η(X)·ξ as a matrix (ξ ηᵀ).
pub fn outer(xi: &Vector, eta: &Vector) -> SquareMatrix {
    xi * eta.transpose()
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[&SquareMatrix]) -> SquareMatrix {
    let n = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = SquareMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    out
}
