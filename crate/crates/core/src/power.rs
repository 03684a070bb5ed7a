//! Subspace reproducing kernel `k_N(x,y) = k(x,X) k(X,X)⁺ k(X,y)`, the
//! directional power-function and the pointwise a-priori error bounds.
//!
//! The pseudo-inverse is stored in factored form `k(X,X)⁺ = W Wᵀ`, with
//! `W = V_r Λ_r^{-1/2}` built from the retained eigenpairs. The functions
//! `k(·,X) w_j` are orthonormal in the native space, so the fitted projection
//! and the power-function are evaluated in one consistent basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interpolation::{stack_rows, Interpolant, SolverInfo, SolverPath};
use crate::kernels::{PointSet, ScalarKernel, SeparableKernel, DUP_TOL};
use crate::linalg::{self, SymMatrix, PSD_TOL, RANK_TOL};

#[derive(Debug, Clone)]
pub struct PowerEvaluator {
    kernel: SeparableKernel,
    centers: PointSet,
    rank_tol: f64,
    /// `mn × r`, with `k(X,X)⁺ = basis · basisᵀ`.
    basis: DMatrix<f64>,
}

/// Per-point quantities shared by the power-function and the projection.
#[derive(Debug, Clone)]
pub struct PointQuery {
    /// `k(x,X) W`, an `m × r` matrix.
    pub basis_values: DMatrix<f64>,
    /// `k(x,x)`.
    pub kernel_diag: DMatrix<f64>,
    /// `D(x) = k(x,x) − k_N(x,x)`, symmetrized.
    pub power: SymMatrix,
}

/// Coordinates `c = Wᵀ f(X)` of the orthogonal projection of a function
/// onto `N(X)`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coords: DVector<f64>,
}

impl Projection {
    /// `‖Π f‖²_H`
    pub fn norm_sq(&self) -> f64 {
        self.coords.norm_squared()
    }

    pub fn evaluate(&self, query: &PointQuery) -> DVector<f64> {
        &query.basis_values * &self.coords
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBounds {
    pub two: f64,
    pub inf: f64,
    pub one: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    /// Scaled by `‖f − Π f‖_H`.
    pub with_residual: NormBounds,
    /// Scaled by `‖f‖_H`.
    pub with_full_norm: NormBounds,
}

/// Square-root factors of `D(x)` that multiply a norm to give the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundFactors {
    /// `‖D(x)‖₂^{1/2}`
    pub two: f64,
    /// `max_i |D(x)_ii|^{1/2}`
    pub inf: f64,
    /// `√m ‖D(x)‖₂^{1/2}`
    pub one: f64,
}

impl BoundFactors {
    pub fn from_power(d: &SymMatrix) -> Result<Self> {
        let m = d.dim();
        let spectral = linalg::spectral_norm_sym(d)?;
        let diag = (0..m).fold(0.0f64, |acc, i| acc.max(d.matrix()[(i, i)].abs()));
        Ok(Self {
            two: spectral.sqrt(),
            inf: diag.sqrt(),
            one: (m as f64).sqrt() * spectral.sqrt(),
        })
    }

    pub fn scaled(&self, r: f64) -> NormBounds {
        NormBounds {
            two: self.two * r,
            inf: self.inf * r,
            one: self.one * r,
        }
    }
}

impl PowerEvaluator {
    pub fn new(kernel: &SeparableKernel, centers: &PointSet) -> Result<Self> {
        Self::with_rank_tol(kernel, centers, RANK_TOL)
    }

    pub fn with_rank_tol(kernel: &SeparableKernel, centers: &PointSet, rank_tol: f64) -> Result<Self> {
        kernel.require_psd()?;
        if !(rank_tol > 0.0 && rank_tol.is_finite()) {
            return Err(Error::InvalidTolerance(rank_tol));
        }
        let mn = centers.len() * kernel.output_dim();
        let basis = if centers.is_empty() {
            DMatrix::zeros(0, 0)
        } else {
            centers.check_distinct(DUP_TOL)?;
            let gram = SymMatrix::symmetrized(kernel.gramian(centers)?);
            let eig = linalg::sym_eig(&gram)?;
            let threshold = linalg::rank_threshold(&eig, rank_tol);
            let kept: Vec<usize> = (0..mn)
                .filter(|&k| eig.eigenvalues[k].abs() > threshold && eig.eigenvalues[k].abs() > linalg::RANK_FLOOR)
                .collect();
            if let Some(&neg) = kept.iter().find(|&&k| eig.eigenvalues[k] < 0.0) {
                return Err(Error::IndefiniteGramian(eig.eigenvalues[neg]));
            }
            let mut w = DMatrix::zeros(mn, kept.len());
            for (dst, &k) in kept.iter().enumerate() {
                let scale = 1.0 / eig.eigenvalues[k].sqrt();
                w.set_column(dst, &(eig.eigenvectors.column(k) * scale));
            }
            w
        };
        Ok(Self {
            kernel: kernel.clone(),
            centers: centers.clone(),
            rank_tol,
            basis,
        })
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Number of retained eigenpairs of the Gramian.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn gram_pinv(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    fn basis_values(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.kernel.output_dim();
        if self.centers.is_empty() {
            self.centers.check_point(x)?;
            return Ok(DMatrix::zeros(m, 0));
        }
        Ok(self.kernel.cross_eval(x, &self.centers)? * &self.basis)
    }

    /// `k_N(x, y)`.
    pub fn subspace_kernel(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let bx = self.basis_values(x)?;
        let by = self.basis_values(y)?;
        Ok(bx * by.transpose())
    }

    pub fn query(&self, x: &[f64]) -> Result<PointQuery> {
        let basis_values = self.basis_values(x)?;
        let kernel_diag = self.kernel.eval(x, x)?;
        let kn = &basis_values * basis_values.transpose();
        let power = SymMatrix::symmetrized(&kernel_diag - kn);
        Ok(PointQuery {
            basis_values,
            kernel_diag,
            power,
        })
    }

    /// Batched [`query`](Self::query). Cross-kernel rows are assembled per
    /// point under `exec`; the basis product is a single matrix product.
    pub fn query_many(&self, points: &PointSet, exec: Execution) -> Result<Vec<PointQuery>> {
        let m = self.kernel.output_dim();
        let n = self.centers.len();
        if n == 0 {
            return exec.map(points.len(), |i| self.query(points.point(i))).into_iter().collect();
        }
        let rows: Vec<DMatrix<f64>> = exec
            .map(points.len(), |i| self.kernel.cross_eval(points.point(i), &self.centers))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut cross = DMatrix::zeros(m * points.len(), m * n);
        for (i, r) in rows.iter().enumerate() {
            cross.view_mut((i * m, 0), (m, m * n)).copy_from(r);
        }
        let all = cross * &self.basis;
        exec.map(points.len(), |i| {
            let x = points.point(i);
            let basis_values = all.rows(i * m, m).into_owned();
            let kernel_diag = self.kernel.eval(x, x)?;
            let kn = &basis_values * basis_values.transpose();
            let power = SymMatrix::symmetrized(&kernel_diag - kn);
            Ok(PointQuery {
                basis_values,
                kernel_diag,
                power,
            })
        })
        .into_iter()
        .collect()
    }

    /// `D(x) = k(x,x) − k_N(x,x)`.
    pub fn power_matrix(&self, x: &[f64]) -> Result<SymMatrix> {
        Ok(self.query(x)?.power)
    }

    /// `αᵀ (k(x,x) − k_N(x,x)) α`, clamped at zero.
    pub fn power_sq(&self, x: &[f64], alpha: &DVector<f64>) -> Result<f64> {
        let q = self.query(x)?;
        power_sq_from_query(&q, alpha)
    }

    pub fn error_bounds(&self, x: &[f64], f_norm: f64, residual_norm: f64) -> Result<ErrorBounds> {
        if !(residual_norm >= 0.0 && f_norm >= residual_norm) {
            return Err(Error::InvalidArgument(format!(
                "need f_norm >= residual_norm >= 0, got {f_norm} and {residual_norm}"
            )));
        }
        let factors = BoundFactors::from_power(&self.power_matrix(x)?)?;
        Ok(ErrorBounds {
            with_residual: factors.scaled(residual_norm),
            with_full_norm: factors.scaled(f_norm),
        })
    }

    /// Orthogonal projection coordinates of data `values` (row `i` is
    /// `f(x_i)`).
    pub fn project(&self, values: &DMatrix<f64>) -> Result<Projection> {
        let m = self.kernel.output_dim();
        if values.nrows() != self.centers.len() || values.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: self.centers.len() * m,
                got: values.len(),
            });
        }
        if self.centers.is_empty() {
            return Ok(Projection {
                coords: DVector::zeros(0),
            });
        }
        Ok(Projection {
            coords: self.basis.transpose() * stack_rows(values),
        })
    }

    /// The minimal-norm interpolant `ᾱ = k(X,X)⁺ f(X)` in coefficient form.
    pub fn interpolant(&self, values: &DMatrix<f64>) -> Result<Interpolant> {
        let p = self.project(values)?;
        let coeffs = if self.centers.is_empty() {
            DVector::zeros(0)
        } else {
            &self.basis * &p.coords
        };
        let info = SolverInfo {
            path: SolverPath::PseudoInverse,
            residual: f64::NAN,
            rank_used: self.rank(),
            ill_conditioned: false,
        };
        let residual = if self.centers.is_empty() {
            0.0
        } else {
            let gram = self.kernel.gramian(&self.centers)?;
            let rhs = stack_rows(values);
            let r = (gram * &coeffs - &rhs).norm();
            if rhs.norm() > 0.0 { r / rhs.norm() } else { r }
        };
        Interpolant::from_parts(
            self.kernel.clone(),
            self.centers.clone(),
            coeffs,
            SolverInfo { residual, ..info },
        )
    }
}

pub fn power_sq_from_query(q: &PointQuery, alpha: &DVector<f64>) -> Result<f64> {
    let m = q.power.dim();
    if alpha.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: alpha.len(),
        });
    }
    let v = alpha.dot(&(q.power.matrix() * alpha));
    let scale = alpha.norm_squared() * q.kernel_diag.amax().max(1.0);
    clamp_power(v, scale)
}

fn clamp_power(v: f64, scale: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -PSD_TOL * scale {
        Ok(0.0)
    } else {
        Err(Error::NumericalBreakdown {
            quantity: "squared power-function",
            value: v,
        })
    }
}

/// Scalar power-function `k_s(x,x) − k_s(x,X) K_s⁺ k_s(X,x)`.
pub fn scalar_power_sq(k: &ScalarKernel, centers: &PointSet, x: &[f64]) -> Result<f64> {
    ScalarPower::new(k, centers)?.power_sq(x)
}

/// Precomputed scalar power-function for repeated queries.
#[derive(Debug, Clone)]
pub struct ScalarPower {
    inner: PowerEvaluator,
}

impl ScalarPower {
    pub fn new(k: &ScalarKernel, centers: &PointSet) -> Result<Self> {
        let kernel = SeparableKernel::identity(*k, 1)?;
        Ok(Self {
            inner: PowerEvaluator::new(&kernel, centers)?,
        })
    }

    pub fn power_sq(&self, x: &[f64]) -> Result<f64> {
        self.inner.power_sq(x, &DVector::from_element(1, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditivityReport {
    /// `Σ_i P̂_i(x)² αᵀQ_iα`
    pub sum_of_parts: f64,
    /// `P_N^α(x)²`
    pub whole: f64,
    pub gap: f64,
}

/// Compares the full power-function against the sum of order-1 term powers
/// at each `(x, α)` sample.
pub fn power_additivity_check(
    k: &SeparableKernel,
    centers: &PointSet,
    samples: &[(Vec<f64>, DVector<f64>)],
) -> Result<Vec<AdditivityReport>> {
    let whole = PowerEvaluator::new(k, centers)?;
    let parts = k
        .terms()
        .iter()
        .map(|t| ScalarPower::new(&t.scalar, centers))
        .collect::<Result<Vec<_>>>()?;
    samples
        .iter()
        .map(|(x, alpha)| {
            let w = whole.power_sq(x, alpha)?;
            let mut sum = 0.0;
            for (t, p) in k.terms().iter().zip(&parts) {
                let qa = alpha.dot(&(t.coeff.matrix() * alpha));
                sum += p.power_sq(x)? * qa;
            }
            Ok(AdditivityReport {
                sum_of_parts: sum,
                whole: w,
                gap: w - sum,
            })
        })
        .collect()
}
