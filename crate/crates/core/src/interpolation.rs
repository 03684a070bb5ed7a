//! Kernel interpolation `s(x) = Σ_i k(x, x_i) α_i` and native-space norms of
//! functions in the span of kernel translates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PointSet, SeparableKernel, DUP_TOL};
use crate::linalg::{self, SymMatrix, PSD_TOL, RANK_TOL};

/// Relative residual of the interpolation system above which a fit is
/// flagged as ill-conditioned.
pub const LIN_TOL: f64 = 1e-8;
/// Relative slack for clamping a negative squared residual norm to zero.
pub const RESIDUAL_CLAMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    Cholesky,
    /// Partially pivoted LU, used only as an opt-in fallback when Cholesky
    /// breaks down on a numerically singular Gramian.
    Lu,
    PseudoInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub path: SolverPath,
    /// `‖K ᾱ − f(X)‖ / ‖f(X)‖` (absolute when `f(X) = 0`).
    pub residual: f64,
    pub rank_used: usize,
    pub ill_conditioned: bool,
}

/// What to do when Cholesky fails on a kernel flagged strictly positive
/// definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CholeskyFallback {
    #[default]
    Error,
    Lu,
    PseudoInverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub rank_tol: f64,
    pub fallback: CholeskyFallback,
    /// Always use the minimal-norm pseudo-inverse solution.
    pub force_pseudo_inverse: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rank_tol: RANK_TOL,
            fallback: CholeskyFallback::Error,
            force_pseudo_inverse: false,
        }
    }
}

impl FitOptions {
    pub fn with_fallback(fallback: CholeskyFallback) -> Self {
        Self {
            fallback,
            ..Self::default()
        }
    }
}

/// Solves `K A = B` for a symmetric PSD `K` (one or more right-hand sides).
pub(crate) fn solve_gram(
    gram: DMatrix<f64>,
    rhs: &DMatrix<f64>,
    strictly_pd: bool,
    opts: &FitOptions,
) -> Result<(DMatrix<f64>, SolverInfo)> {
    let n = gram.nrows();
    let (sol, path, rank_used) = if strictly_pd && !opts.force_pseudo_inverse {
        match gram.clone().cholesky() {
            Some(ch) => (ch.solve(rhs), SolverPath::Cholesky, n),
            None => match opts.fallback {
                CholeskyFallback::Error => {
                    let min_eigenvalue = linalg::sym_eig(&SymMatrix::symmetrized(gram))?.min_eigenvalue();
                    return Err(Error::Conditioning { min_eigenvalue });
                }
                CholeskyFallback::Lu => {
                    let lu = gram.clone().lu();
                    match lu.solve(rhs) {
                        Some(sol) => (sol, SolverPath::Lu, n),
                        None => pinv_solve(&gram, rhs, opts.rank_tol)?,
                    }
                }
                CholeskyFallback::PseudoInverse => pinv_solve(&gram, rhs, opts.rank_tol)?,
            },
        }
    } else {
        pinv_solve(&gram, rhs, opts.rank_tol)?
    };
    let rhs_norm = rhs.norm();
    let abs_res = (&gram * &sol - rhs).norm();
    let residual = if rhs_norm > 0.0 { abs_res / rhs_norm } else { abs_res };
    let info = SolverInfo {
        path,
        residual,
        rank_used,
        ill_conditioned: residual > LIN_TOL,
    };
    if info.ill_conditioned {
        log::warn!("interpolation residual {residual:e} exceeds {LIN_TOL:e} ({path:?} path)");
    }
    Ok((sol, info))
}

fn pinv_solve(
    gram: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    rank_tol: f64,
) -> Result<(DMatrix<f64>, SolverPath, usize)> {
    let eig = linalg::sym_eig(&SymMatrix::symmetrized(gram.clone()))?;
    let rank = linalg::rank_from_eig(&eig, rank_tol);
    let p = linalg::pinv_from_eig(&eig, rank_tol);
    Ok((p.matrix() * rhs, SolverPath::PseudoInverse, rank))
}

/// Stacks an `n×m` matrix of values row by row into a vector of length `mn`.
pub fn stack_rows(values: &DMatrix<f64>) -> DVector<f64> {
    let (n, m) = values.shape();
    DVector::from_fn(n * m, |i, _| values[(i / m, i % m)])
}

/// Inverse of [`stack_rows`].
pub fn unstack_rows(v: &DVector<f64>, m: usize) -> DMatrix<f64> {
    let n = v.len() / m;
    DMatrix::from_fn(n, m, |i, r| v[i * m + r])
}

/// A fitted kernel interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    kernel: SeparableKernel,
    centers: PointSet,
    coeffs: DVector<f64>,
    solver_info: SolverInfo,
}

impl Interpolant {
    pub fn from_parts(
        kernel: SeparableKernel,
        centers: PointSet,
        coeffs: DVector<f64>,
        solver_info: SolverInfo,
    ) -> Result<Self> {
        let expected = centers.len() * kernel.output_dim();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self {
            kernel,
            centers,
            coeffs,
            solver_info,
        })
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    /// Stacked coefficients `α_1..α_n`.
    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn solver_info(&self) -> &SolverInfo {
        &self.solver_info
    }

    pub fn coefficient(&self, i: usize) -> DVector<f64> {
        let m = self.kernel.output_dim();
        self.coeffs.rows(i * m, m).into_owned()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<DVector<f64>> {
        let m = self.kernel.output_dim();
        if self.centers.is_empty() {
            self.centers.check_point(x)?;
            return Ok(DVector::zeros(m));
        }
        Ok(self.kernel.cross_eval(x, &self.centers)? * &self.coeffs)
    }

    /// Evaluations at every point of `points`, one row per point.
    pub fn evaluate_many(&self, points: &PointSet) -> Result<DMatrix<f64>> {
        let m = self.kernel.output_dim();
        let mut out = DMatrix::zeros(points.len(), m);
        for (i, p) in points.iter().enumerate() {
            out.set_row(i, &self.evaluate(p)?.transpose());
        }
        Ok(out)
    }

    /// `‖s‖²_H = ᾱᵀ k(X,X) ᾱ`.
    pub fn native_norm_sq(&self) -> Result<f64> {
        quadratic_form(&self.kernel, &self.centers, &self.coeffs)
    }

    pub fn to_span_function(&self) -> NativeSpanFunction {
        NativeSpanFunction {
            kernel: self.kernel.clone(),
            sites: self.centers.clone(),
            weights: unstack_rows(&self.coeffs, self.kernel.output_dim()),
        }
    }
}

fn check_values(k: &SeparableKernel, points: &PointSet, values: &DMatrix<f64>) -> Result<()> {
    if values.nrows() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.nrows(),
        });
    }
    if values.ncols() != k.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: k.output_dim(),
            got: values.ncols(),
        });
    }
    Ok(())
}

/// Fits the interpolant to `values` (row `i` is `f(x_i)`) with default
/// options: Cholesky for strictly positive definite kernels, otherwise the
/// minimal-norm pseudo-inverse solution.
pub fn fit(k: &SeparableKernel, centers: &PointSet, values: &DMatrix<f64>) -> Result<Interpolant> {
    fit_with(k, centers, values, &FitOptions::default())
}

pub fn fit_with(
    k: &SeparableKernel,
    centers: &PointSet,
    values: &DMatrix<f64>,
    opts: &FitOptions,
) -> Result<Interpolant> {
    k.require_psd()?;
    check_values(k, centers, values)?;
    if centers.is_empty() {
        return Ok(Interpolant {
            kernel: k.clone(),
            centers: centers.clone(),
            coeffs: DVector::zeros(0),
            solver_info: SolverInfo {
                path: SolverPath::PseudoInverse,
                residual: 0.0,
                rank_used: 0,
                ill_conditioned: false,
            },
        });
    }
    centers.check_distinct(DUP_TOL)?;
    let gram = k.gramian(centers)?;
    let rhs = DMatrix::from_column_slice(values.len(), 1, stack_rows(values).as_slice());
    let (sol, solver_info) = solve_gram(gram, &rhs, k.strictly_pd(), opts)?;
    Ok(Interpolant {
        kernel: k.clone(),
        centers: centers.clone(),
        coeffs: sol.column(0).into_owned(),
        solver_info,
    })
}

/// `f(x) = Σ_j k(x, y_j) β_j`, an element of the native space by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NativeSpanFunction {
    kernel: SeparableKernel,
    sites: PointSet,
    /// One row `β_jᵀ` per site.
    weights: DMatrix<f64>,
}

impl NativeSpanFunction {
    pub fn new(kernel: SeparableKernel, sites: PointSet, weights: DMatrix<f64>) -> Result<Self> {
        check_values(&kernel, &sites, &weights)?;
        sites.check_distinct(DUP_TOL)?;
        Ok(Self {
            kernel,
            sites,
            weights,
        })
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn sites(&self) -> &PointSet {
        &self.sites
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<DVector<f64>> {
        let m = self.kernel.output_dim();
        if self.sites.is_empty() {
            self.sites.check_point(x)?;
            return Ok(DVector::zeros(m));
        }
        Ok(self.kernel.cross_eval(x, &self.sites)? * stack_rows(&self.weights))
    }

    /// Values at every point, one row per point.
    pub fn values_at(&self, points: &PointSet) -> Result<DMatrix<f64>> {
        let m = self.kernel.output_dim();
        let mut out = DMatrix::zeros(points.len(), m);
        for (i, p) in points.iter().enumerate() {
            out.set_row(i, &self.evaluate(p)?.transpose());
        }
        Ok(out)
    }

    pub fn native_norm_sq(&self) -> Result<f64> {
        quadratic_form(&self.kernel, &self.sites, &stack_rows(&self.weights))
    }
}

/// `β̄ᵀ k(Y,Y) β̄`, clamped to zero when negative within `PSD_TOL`.
fn quadratic_form(k: &SeparableKernel, sites: &PointSet, stacked: &DVector<f64>) -> Result<f64> {
    if sites.is_empty() {
        return Ok(0.0);
    }
    let gram = k.gramian(sites)?;
    let value = stacked.dot(&(&gram * stacked));
    let scale = stacked.norm_squared() * gram.amax().max(1.0);
    if value >= 0.0 {
        Ok(value)
    } else if value >= -PSD_TOL * scale {
        Ok(0.0)
    } else {
        Err(Error::NumericalBreakdown {
            quantity: "native norm squared",
            value,
        })
    }
}

pub fn native_norm_sq(f: &NativeSpanFunction) -> Result<f64> {
    f.native_norm_sq()
}

/// `‖f − s‖²_H` for `s` the interpolant of `f`, via `‖f‖² − ‖s‖²`.
pub fn residual_norm_sq(f: &NativeSpanFunction, s: &Interpolant) -> Result<f64> {
    if f.kernel != s.kernel {
        return Err(Error::KernelMismatch);
    }
    let full = f.native_norm_sq()?;
    let projected = s.native_norm_sq()?;
    let diff = full - projected;
    if diff >= 0.0 {
        Ok(diff)
    } else if diff >= -RESIDUAL_CLAMP_TOL * full.max(f64::MIN_POSITIVE) {
        Ok(0.0)
    } else {
        Err(Error::NumericalBreakdown {
            quantity: "residual norm squared",
            value: diff,
        })
    }
}

/// Serialized interpolant. Floats are written in shortest round-trip
/// decimal form, so parsing restores every value exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub input_dim: usize,
    pub output_dim: usize,
    pub kernel: KernelSpec,
    /// Row-major centers, one row per center.
    pub centers: Vec<Vec<f64>>,
    /// Stacked coefficients `α_1..α_n`.
    pub coeffs: Vec<f64>,
    pub solver: SolverInfo,
}

pub const MODEL_FORMAT: &str = "mvk-model-v1";

impl ModelFile {
    pub fn from_interpolant(s: &Interpolant) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            input_dim: s.centers.dim(),
            output_dim: s.kernel.output_dim(),
            kernel: s.kernel.to_spec(),
            centers: s.centers.rows(),
            coeffs: s.coeffs.iter().copied().collect(),
            solver: s.solver_info,
        }
    }

    pub fn to_interpolant(&self) -> Result<Interpolant> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "unsupported model format `{}`",
                self.format
            )));
        }
        let kernel = SeparableKernel::from_spec(&self.kernel)?;
        if kernel.output_dim() != self.output_dim {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim,
                got: kernel.output_dim(),
            });
        }
        let centers = PointSet::from_rows(self.input_dim, &self.centers)?;
        Interpolant::from_parts(
            kernel,
            centers,
            DVector::from_vec(self.coeffs.clone()),
            self.solver,
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model file serializes")
    }

    pub fn from_toml(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelTerm, ScalarKernel};

    fn gauss(shape: f64) -> ScalarKernel {
        ScalarKernel::gaussian(shape).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let k = SeparableKernel::identity(gauss(1.0), 2).unwrap();
        let x = PointSet::from_scalars(&[0.0, 0.5, 1.0]).unwrap();
        let s = fit(&k, &x, &DMatrix::zeros(3, 2)).unwrap();
        assert!(s.coeffs().iter().all(|c| *c == 0.0));
        assert_eq!(s.evaluate(&[0.3]).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn single_center_reproduces_value() {
        let k = SeparableKernel::identity(gauss(2.0), 3).unwrap();
        let x = PointSet::from_scalars(&[0.4]).unwrap();
        let v = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 0.5]);
        let s = fit(&k, &x, &v).unwrap();
        assert!((s.coefficient(0) - DVector::from_row_slice(&[1.0, -2.0, 0.5])).norm() < 1e-15);
        assert_eq!(s.solver_info().path, SolverPath::Cholesky);
    }

    #[test]
    fn two_by_two_hand_solve() {
        let k = SeparableKernel::identity(gauss(1.0), 1).unwrap();
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let s = fit(&k, &x, &DMatrix::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        let e1 = (-1.0f64).exp();
        let det = 1.0 - (-2.0f64).exp();
        assert!((s.coeffs()[0] - 1.0 / det).abs() < 1e-14);
        assert!((s.coeffs()[1] + e1 / det).abs() < 1e-14);
        assert!((s.evaluate(&[0.0]).unwrap()[0] - 1.0).abs() < 1e-12);
        assert!(s.evaluate(&[1.0]).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_kernel_uses_pseudo_inverse() {
        let ones = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let k = SeparableKernel::single(gauss(1.0), ones).unwrap();
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        // values in R(Q) can be interpolated
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -0.5, -0.5]);
        let s = fit(&k, &x, &v).unwrap();
        assert_eq!(s.solver_info().path, SolverPath::PseudoInverse);
        assert_eq!(s.solver_info().rank_used, 2);
        assert!((s.evaluate(&[1.0]).unwrap() - DVector::from_row_slice(&[-0.5, -0.5])).norm() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let k = SeparableKernel::identity(gauss(1.0), 1).unwrap();
        let dup = PointSet::from_scalars(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            fit(&k, &dup, &DMatrix::zeros(2, 1)),
            Err(Error::DuplicateCenters { .. })
        ));
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            fit(&k, &x, &DMatrix::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        let indefinite = SeparableKernel::new_unchecked(vec![KernelTerm::new(
            gauss(1.0),
            SymMatrix::from_diagonal(&[1.0, -1.0]),
        )])
        .unwrap();
        assert!(matches!(
            fit(&indefinite, &x, &DMatrix::zeros(2, 2)),
            Err(Error::CoefficientNotPsd { .. })
        ));
    }

    #[test]
    fn cholesky_failure_reports_conditioning() {
        // nearly coincident centers with a wide Gaussian
        let k = SeparableKernel::identity(gauss(1e-3), 1).unwrap();
        let pts: Vec<f64> = (0..30).map(|i| i as f64 * 1e-3).collect();
        let x = PointSet::from_scalars(&pts).unwrap();
        let v = DMatrix::from_fn(30, 1, |i, _| (i as f64).sin());
        match fit(&k, &x, &v) {
            Err(Error::Conditioning { min_eigenvalue }) => assert!(min_eigenvalue < 1e-12),
            other => panic!("expected conditioning error, got {other:?}"),
        }
        let s = fit_with(&k, &x, &v, &FitOptions::with_fallback(CholeskyFallback::PseudoInverse)).unwrap();
        assert_eq!(s.solver_info().path, SolverPath::PseudoInverse);
        assert!(s.solver_info().rank_used < 30);
    }

    #[test]
    fn native_norm_examples() {
        let k = SeparableKernel::identity(gauss(1.0), 1).unwrap();
        let y = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let zero = NativeSpanFunction::new(k.clone(), y.clone(), DMatrix::zeros(2, 1)).unwrap();
        assert_eq!(native_norm_sq(&zero).unwrap(), 0.0);
        let f = NativeSpanFunction::new(k.clone(), y, DMatrix::from_element(2, 1, 1.0)).unwrap();
        let expected = 2.0 + 2.0 * (-1.0f64).exp();
        assert!((native_norm_sq(&f).unwrap() - expected).abs() < 1e-14);

        let k3 = SeparableKernel::identity(gauss(1.0), 3).unwrap();
        let single = NativeSpanFunction::new(
            k3,
            PointSet::from_scalars(&[0.2]).unwrap(),
            DMatrix::from_row_slice(1, 3, &[1.0, 2.0, -2.0]),
        )
        .unwrap();
        assert!((native_norm_sq(&single).unwrap() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn residual_examples() {
        let k = SeparableKernel::identity(gauss(1.0), 2).unwrap();
        let sites = PointSet::from_scalars(&[-0.5, 0.25]).unwrap();
        let f = NativeSpanFunction::new(
            k.clone(),
            sites.clone(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -1.0, 2.0]),
        )
        .unwrap();
        // centers contain the sites: f lies in N(X)
        let x = PointSet::from_scalars(&[-0.5, 0.0, 0.25, 1.0]).unwrap();
        let s = fit(&k, &x, &f.values_at(&x).unwrap()).unwrap();
        assert!(residual_norm_sq(&f, &s).unwrap() < 1e-10);

        let empty = PointSet::empty(1);
        let s0 = fit(&k, &empty, &DMatrix::zeros(0, 2)).unwrap();
        assert_eq!(residual_norm_sq(&f, &s0).unwrap(), f.native_norm_sq().unwrap());

        let other = SeparableKernel::identity(gauss(2.0), 2).unwrap();
        let s1 = fit(&other, &x, &f.values_at(&x).unwrap()).unwrap();
        assert!(matches!(residual_norm_sq(&f, &s1), Err(Error::KernelMismatch)));
    }

    #[test]
    fn model_file_round_trip() {
        let k = SeparableKernel::new(vec![
            KernelTerm::new(gauss(0.3), SymMatrix::identity(2)),
            KernelTerm::new(gauss(1.0 / 3.0), SymMatrix::from_diagonal(&[0.1, 0.7])),
        ])
        .unwrap();
        let x = PointSet::from_rows(2, &[vec![0.1, 0.2], vec![-0.3, 1.0 / 7.0]]).unwrap();
        let v = DMatrix::from_row_slice(2, 2, &[std::f64::consts::PI, -1e-300, 2.5e17, 1.0 / 3.0]);
        let s = fit(&k, &x, &v).unwrap();
        let text = ModelFile::from_interpolant(&s).to_toml();
        let back = ModelFile::from_toml(&text, "model").unwrap().to_interpolant().unwrap();
        assert_eq!(back, s);
        assert_eq!(back.evaluate(&[0.5, 0.5]).unwrap(), s.evaluate(&[0.5, 0.5]).unwrap());
    }
}
