//! Dense symmetric linear algebra: eigendecomposition, pseudo-inverse,
//! Kronecker products and rank/definiteness tests with explicit tolerances.
//!
//! The eigen-solver itself is nalgebra's symmetric QR iteration; this module
//! pins the ordering, tolerance and error conventions the rest of the crate
//! relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`SymMatrix::new`].
pub const SYM_TOL: f64 = 1e-12;
/// Relative accuracy expected of eigendecompositions.
pub const EIG_TOL: f64 = 1e-10;
/// Default relative threshold below which eigenvalues count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Relative slack for positive semi-definiteness.
pub const PSD_TOL: f64 = 1e-10;
/// Absolute floor so that the zero matrix has rank zero.
pub const RANK_FLOOR: f64 = 1e-14;

/// Iteration budget handed to the QR eigen-solver, per unit of dimension.
const EIG_ITERATIONS_PER_DIM: usize = 1000;

/// A real symmetric matrix.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2`, so the stored matrix is
/// exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Accepts `a` if it is square and symmetric within
    /// `SYM_TOL·(1 + max|a|)`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let allowed = SYM_TOL * (1.0 + a.amax());
        let asymmetry = max_asymmetry(&a);
        if asymmetry > allowed {
            return Err(Error::NotSymmetric { asymmetry, allowed });
        }
        Ok(Self::symmetrized(a))
    }

    /// Symmetrizes without checking how asymmetric the input was.
    pub fn symmetrized(a: DMatrix<f64>) -> Self {
        assert!(a.is_square(), "symmetrized needs a square matrix");
        let t = a.transpose();
        Self((a + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `v vᵀ`.
    pub fn outer(v: &DVector<f64>) -> Self {
        Self::symmetrized(v * v.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }
}

fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored column-wise.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigDecomp {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.eigenvectors
            * DMatrix::from_diagonal(&self.eigenvalues)
            * self.eigenvectors.transpose()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    let n = a.dim();
    if a.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(EigDecomp {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let iterations = EIG_ITERATIONS_PER_DIM * n.max(1);
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, iterations)
        .ok_or(Error::EigenNoConvergence { iterations })?;

    let mut order: Vec<usize> = (0..n).collect();
    // total_cmp keeps the order deterministic for equal eigenvalues
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigDecomp {
        eigenvalues,
        eigenvectors,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

/// Threshold below which an eigenvalue of `eig` is treated as zero.
pub fn rank_threshold(eig: &EigDecomp, rank_tol: f64) -> f64 {
    rank_tol * eig.max_abs_eigenvalue().max(RANK_FLOOR)
}

/// Moore-Penrose pseudo-inverse via the spectral decomposition.
pub fn pinv(a: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    check_tol(rank_tol)?;
    let eig = sym_eig(a)?;
    Ok(pinv_from_eig(&eig, rank_tol))
}

pub fn pinv_from_eig(eig: &EigDecomp, rank_tol: f64) -> SymMatrix {
    let n = eig.eigenvalues.len();
    let threshold = rank_threshold(eig, rank_tol);
    let mut scaled = eig.eigenvectors.clone();
    let mut inv = DVector::zeros(n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > threshold {
            inv[k] = 1.0 / lambda;
        }
    }
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= inv[k];
    }
    SymMatrix::symmetrized(scaled * eig.eigenvectors.transpose())
}

/// Kronecker product with the standard block layout
/// `(A⊗B)[i·p + r][j·q + s] = A[i][j]·B[r][s]`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

pub fn rank_of(a: &SymMatrix, rank_tol: f64) -> Result<usize> {
    check_tol(rank_tol)?;
    let eig = sym_eig(a)?;
    Ok(rank_from_eig(&eig, rank_tol))
}

pub fn rank_from_eig(eig: &EigDecomp, rank_tol: f64) -> usize {
    let threshold = rank_threshold(eig, rank_tol);
    eig.eigenvalues
        .iter()
        .filter(|l| l.abs() > threshold && l.abs() > RANK_FLOOR)
        .count()
}

/// Numerical rank of a general rectangular matrix from its singular values.
pub fn rank_general(a: &DMatrix<f64>, rank_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    let threshold = rank_tol * max.max(RANK_FLOOR);
    sv.iter().filter(|s| **s > threshold && **s > RANK_FLOOR).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD test: `λ_min ≥ −psd_tol·max(1, ‖A‖₂)`.
pub fn is_psd(a: &SymMatrix, psd_tol: f64) -> Result<PsdReport> {
    let eig = sym_eig(a)?;
    let min_eigenvalue = if eig.eigenvalues.is_empty() {
        0.0
    } else {
        eig.min_eigenvalue()
    };
    let norm = eig.max_abs_eigenvalue();
    Ok(PsdReport {
        is_psd: min_eigenvalue >= -psd_tol * norm.max(1.0),
        min_eigenvalue,
    })
}

/// Spectral norm of a symmetric matrix: the largest absolute eigenvalue.
pub fn spectral_norm_sym(a: &SymMatrix) -> Result<f64> {
    Ok(sym_eig(a)?.max_abs_eigenvalue())
}
