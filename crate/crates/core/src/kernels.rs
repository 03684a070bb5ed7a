//! Scalar base kernels, separable matrix-valued kernels
//! `k(x,y) = Σ_i k_i(x,y) Q_i`, and block Gramian assembly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{self, SymMatrix, PSD_TOL, RANK_TOL};

/// Minimal distance between two interpolation centers.
pub const DUP_TOL: f64 = 1e-12;

/// A scalar positive (semi-)definite kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarKernel {
    /// `exp(−shape·‖x−y‖²)`
    Gaussian { shape: f64 },
    /// `(xᵀy)^degree`
    Polynomial { degree: u32 },
}

impl ScalarKernel {
    pub fn gaussian(shape: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::InvalidScalarKernel(format!(
                "gaussian shape must be positive and finite, got {shape}"
            )));
        }
        Ok(Self::Gaussian { shape })
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidScalarKernel(
                "polynomial degree must be at least 1".into(),
            ));
        }
        Ok(Self::Polynomial { degree })
    }

    /// Both forms depend symmetrically on `x` and `y`, so
    /// `eval(x, y) == eval(y, x)` holds bit for bit.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            Self::Gaussian { shape } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-shape * d2).exp()
            }
            Self::Polynomial { degree } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                dot.powi(degree as i32)
            }
        }
    }

    pub fn is_strictly_pd(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }

    pub fn shape(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { shape } => Some(shape),
            Self::Polynomial { .. } => None,
        }
    }

    /// Scalar Gramian `k_s(X,X)`; only the upper triangle is evaluated.
    pub fn gramian(&self, points: &PointSet) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = self.eval(points.point(a), points.point(b));
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
        }
        k
    }

    /// Row vector `k_s(x, X)` of length `n`.
    pub fn cross(&self, x: &[f64], points: &PointSet) -> Result<Vec<f64>> {
        points.check_point(x)?;
        Ok(points.iter().map(|p| self.eval(x, p)).collect())
    }
}

/// An ordered list of points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.to_vec()).collect()
    }

    /// The first `n` points.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            dim: self.dim,
            coords: self.coords[..n * self.dim].to_vec(),
        }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        self.check_point(p)?;
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Smallest pairwise distance, with the offending index pair.
    pub fn min_separation(&self) -> Option<(usize, usize, f64)> {
        let n = self.len();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(self.point(i), self.point(j));
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    pub fn check_distinct(&self, tol: f64) -> Result<()> {
        match self.min_separation() {
            Some((first, second, distance)) if distance <= tol => Err(Error::DuplicateCenters {
                first,
                second,
                distance,
            }),
            _ => Ok(()),
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Anything that maps a pair of points to an `m×m` matrix.
pub trait MatrixKernel: Sync {
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>>;
}

/// Block Gramian `(k(x_a, x_b))_{a,b}` by direct evaluation of every block.
pub fn block_gramian<K: MatrixKernel + ?Sized>(k: &K, points: &PointSet) -> Result<DMatrix<f64>> {
    let m = k.output_dim();
    let n = points.len();
    let mut g = DMatrix::zeros(m * n, m * n);
    for a in 0..n {
        for b in 0..n {
            let block = k.eval(points.point(a), points.point(b))?;
            g.view_mut((a * m, b * m), (m, m)).copy_from(&block);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTerm {
    pub scalar: ScalarKernel,
    pub coeff: SymMatrix,
}

impl KernelTerm {
    pub fn new(scalar: ScalarKernel, coeff: SymMatrix) -> Self {
        Self { scalar, coeff }
    }
}

/// A separable matrix-valued kernel with decomposition `(k_i, Q_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    m: usize,
    terms: Vec<KernelTerm>,
    coeffs_psd: bool,
    strictly_pd: bool,
}

impl SeparableKernel {
    /// Builds a kernel whose coefficients are all positive semi-definite.
    pub fn new(terms: Vec<KernelTerm>) -> Result<Self> {
        let k = Self::new_unchecked(terms)?;
        if !k.coeffs_psd {
            for (i, t) in k.terms.iter().enumerate() {
                let r = linalg::is_psd(&t.coeff, PSD_TOL)?;
                if !r.is_psd {
                    return Err(Error::CoefficientNotPsd {
                        term: i,
                        min_eigenvalue: r.min_eigenvalue,
                    });
                }
            }
        }
        Ok(k)
    }

    /// Accepts arbitrary symmetric coefficients. Such kernels can be analysed
    /// but are rejected by every interpolation path.
    pub fn new_unchecked(terms: Vec<KernelTerm>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyKernel)?;
        let m = first.coeff.dim();
        if m == 0 {
            return Err(Error::CoefficientDimension {
                term: 0,
                expected: 1,
                got: 0,
            });
        }
        for (i, t) in terms.iter().enumerate() {
            if t.coeff.dim() != m {
                return Err(Error::CoefficientDimension {
                    term: i,
                    expected: m,
                    got: t.coeff.dim(),
                });
            }
        }
        let mut coeffs_psd = true;
        for t in &terms {
            coeffs_psd &= linalg::is_psd(&t.coeff, PSD_TOL)?.is_psd;
        }
        let strictly_pd = coeffs_psd
            && terms.iter().all(|t| t.scalar.is_strictly_pd())
            && {
                let sum = terms
                    .iter()
                    .skip(1)
                    .fold(terms[0].coeff.clone(), |acc, t| acc.add(&t.coeff));
                linalg::rank_of(&sum, RANK_TOL)? == m
            };
        Ok(Self {
            m,
            terms,
            coeffs_psd,
            strictly_pd,
        })
    }

    pub fn single(scalar: ScalarKernel, coeff: SymMatrix) -> Result<Self> {
        Self::new(vec![KernelTerm::new(scalar, coeff)])
    }

    /// `k_s · I_m`
    pub fn identity(scalar: ScalarKernel, m: usize) -> Result<Self> {
        Self::single(scalar, SymMatrix::identity(m))
    }

    pub fn output_dim(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    /// Decomposition length `p`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeffs_psd(&self) -> bool {
        self.coeffs_psd
    }

    /// All scalar kernels are strictly positive definite and `Σ Q_i ≻ 0`.
    pub fn strictly_pd(&self) -> bool {
        self.strictly_pd
    }

    pub fn coeff_sum(&self) -> SymMatrix {
        self.terms
            .iter()
            .skip(1)
            .fold(self.terms[0].coeff.clone(), |acc, t| acc.add(&t.coeff))
    }

    pub(crate) fn require_psd(&self) -> Result<()> {
        if self.coeffs_psd {
            return Ok(());
        }
        for (i, t) in self.terms.iter().enumerate() {
            let r = linalg::is_psd(&t.coeff, PSD_TOL)?;
            if !r.is_psd {
                return Err(Error::CoefficientNotPsd {
                    term: i,
                    min_eigenvalue: r.min_eigenvalue,
                });
            }
        }
        Ok(())
    }

    #[inline]
    fn accumulate(&self, values: impl Iterator<Item = f64>, out: &mut nalgebra::DMatrixViewMut<f64>) {
        for (t, v) in self.terms.iter().zip(values) {
            out.zip_apply(t.coeff.matrix(), |o, q| *o += v * q);
        }
    }

    /// `Σ_i k_i(x,y) Q_i`, summed in term order.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let mut out = DMatrix::zeros(self.m, self.m);
        let (m, _) = out.shape();
        self.accumulate(
            self.terms.iter().map(|t| t.scalar.eval(x, y)),
            &mut out.view_mut((0, 0), (m, m)),
        );
        Ok(out)
    }

    /// Block Gramian `Σ_i k_i(X,X) ⊗ Q_i`.
    pub fn gramian(&self, points: &PointSet) -> Result<DMatrix<f64>> {
        self.gramian_with(points, Execution::Sequential)
    }

    /// Block rows are assembled independently; every entry is summed in
    /// term order, so the result does not depend on `exec`.
    pub fn gramian_with(&self, points: &PointSet, exec: Execution) -> Result<DMatrix<f64>> {
        points.check_distinct(DUP_TOL)?;
        let n = points.len();
        let m = self.m;
        let scalar_grams: Vec<DMatrix<f64>> =
            self.terms.iter().map(|t| t.scalar.gramian(points)).collect();
        let block_rows = exec.map(n, |a| {
            let mut row = DMatrix::zeros(m, m * n);
            for b in 0..n {
                let mut view = row.view_mut((0, b * m), (m, m));
                self.accumulate(scalar_grams.iter().map(|k| k[(a, b)]), &mut view);
            }
            row
        });
        let mut g = DMatrix::zeros(m * n, m * n);
        for (a, row) in block_rows.into_iter().enumerate() {
            g.view_mut((a * m, 0), (m, m * n)).copy_from(&row);
        }
        Ok(g)
    }

    /// Row of blocks `[k(x,x_1) … k(x,x_n)]`, an `m × mn` matrix.
    pub fn cross_eval(&self, x: &[f64], points: &PointSet) -> Result<DMatrix<f64>> {
        points.check_point(x)?;
        let n = points.len();
        let m = self.m;
        let mut out = DMatrix::zeros(m, m * n);
        for (b, p) in points.iter().enumerate() {
            let mut view = out.view_mut((0, b * m), (m, m));
            self.accumulate(self.terms.iter().map(|t| t.scalar.eval(x, p)), &mut view);
        }
        Ok(out)
    }

    /// Pointwise matrix power `(x,y) ↦ k(x,y)^n`.
    pub fn hadamard_power(&self, n: i64) -> Result<HadamardPower> {
        if n < 0 {
            return Err(Error::NegativeExponent(n));
        }
        Ok(HadamardPower {
            base: self.clone(),
            exponent: n as u32,
        })
    }

    pub fn to_spec(&self) -> KernelSpec {
        KernelSpec {
            unchecked: !self.coeffs_psd,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let (kind, shape, degree) = match t.scalar {
                        ScalarKernel::Gaussian { shape } => (ScalarKind::Gaussian, Some(shape), None),
                        ScalarKernel::Polynomial { degree } => {
                            (ScalarKind::Polynomial, None, Some(degree))
                        }
                    };
                    TermSpec {
                        kind,
                        shape,
                        degree,
                        coeff: t.coeff.rows(),
                    }
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        let terms = spec
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| t.to_term(i))
            .collect::<Result<Vec<_>>>()?;
        if spec.unchecked {
            Self::new_unchecked(terms)
        } else {
            Self::new(terms)
        }
    }
}

impl MatrixKernel for SeparableKernel {
    fn output_dim(&self) -> usize {
        self.m
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        SeparableKernel::eval(self, x, y)
    }
}

/// The pointwise power `k^n` of a separable kernel.
#[derive(Debug, Clone)]
pub struct HadamardPower {
    base: SeparableKernel,
    exponent: u32,
}

impl HadamardPower {
    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn gramian(&self, points: &PointSet) -> Result<DMatrix<f64>> {
        points.check_distinct(DUP_TOL)?;
        block_gramian(self, points)
    }
}

impl MatrixKernel for HadamardPower {
    fn output_dim(&self) -> usize {
        self.base.m
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let v = self.base.eval(x, y)?;
        let mut out = DMatrix::identity(self.base.m, self.base.m);
        for _ in 0..self.exponent {
            out = &out * &v;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Gaussian,
    Polynomial,
}

/// Serialized form of one decomposition term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub kind: ScalarKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    /// Row-major coefficient matrix.
    pub coeff: Vec<Vec<f64>>,
}

impl TermSpec {
    fn to_term(&self, index: usize) -> Result<KernelTerm> {
        let scalar = match self.kind {
            ScalarKind::Gaussian => {
                let shape = self.shape.ok_or_else(|| {
                    Error::Config(format!("terms[{index}]: gaussian term needs `shape`"))
                })?;
                ScalarKernel::gaussian(shape)?
            }
            ScalarKind::Polynomial => {
                let degree = self.degree.ok_or_else(|| {
                    Error::Config(format!("terms[{index}]: polynomial term needs `degree`"))
                })?;
                ScalarKernel::polynomial(degree)?
            }
        };
        let coeff = SymMatrix::from_rows(&self.coeff)
            .map_err(|e| Error::Config(format!("terms[{index}].coeff: {e}")))?;
        Ok(KernelTerm::new(scalar, coeff))
    }
}

/// Serialized form of a separable kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unchecked: bool,
    pub terms: Vec<TermSpec>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones2() -> SymMatrix {
        SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn scalar_kernel_validation() {
        assert!(ScalarKernel::gaussian(0.0).is_err());
        assert!(ScalarKernel::gaussian(f64::NAN).is_err());
        assert!(ScalarKernel::polynomial(0).is_err());
        let g = ScalarKernel::gaussian(2.0).unwrap();
        assert_eq!(g.eval(&[0.3, -1.0], &[0.3, -1.0]), 1.0);
    }

    #[test]
    fn eval_identity_on_diagonal() {
        let k = SeparableKernel::identity(ScalarKernel::gaussian(1.0).unwrap(), 3).unwrap();
        assert_eq!(k.eval(&[0.7], &[0.7]).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn eval_rank_one_coefficient() {
        let k = SeparableKernel::single(ScalarKernel::gaussian(1.0).unwrap(), ones2()).unwrap();
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(v, DMatrix::from_element(2, 2, e));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let k = SeparableKernel::identity(ScalarKernel::gaussian(1.0).unwrap(), 2).unwrap();
        assert!(matches!(
            k.eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(k.cross_eval(&[0.0, 0.0], &x).is_err());
    }

    #[test]
    fn coefficient_validation() {
        let indefinite = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let g = ScalarKernel::gaussian(1.0).unwrap();
        assert!(matches!(
            SeparableKernel::single(g, indefinite.clone()),
            Err(Error::CoefficientNotPsd { term: 0, .. })
        ));
        let k = SeparableKernel::new_unchecked(vec![KernelTerm::new(g, indefinite)]).unwrap();
        assert!(!k.coeffs_psd() && !k.strictly_pd());
        assert!(matches!(
            SeparableKernel::new(vec![
                KernelTerm::new(g, SymMatrix::identity(2)),
                KernelTerm::new(g, SymMatrix::identity(3)),
            ]),
            Err(Error::CoefficientDimension { term: 1, .. })
        ));
        assert!(matches!(SeparableKernel::new(vec![]), Err(Error::EmptyKernel)));
    }

    #[test]
    fn strictly_pd_flag() {
        let g = ScalarKernel::gaussian(1.0).unwrap();
        let e2 = SymMatrix::from_diagonal(&[0.0, 1.0]);
        let k = SeparableKernel::new(vec![KernelTerm::new(g, ones2()), KernelTerm::new(g, e2.clone())]).unwrap();
        assert!(k.strictly_pd());
        assert!(!SeparableKernel::single(g, ones2()).unwrap().strictly_pd());
        let p = ScalarKernel::polynomial(2).unwrap();
        assert!(!SeparableKernel::identity(p, 2).unwrap().strictly_pd());
    }

    #[test]
    fn single_point_gramian_is_single_block() {
        let g = ScalarKernel::gaussian(0.5).unwrap();
        let k = SeparableKernel::new(vec![
            KernelTerm::new(g, ones2()),
            KernelTerm::new(ScalarKernel::gaussian(3.0).unwrap(), SymMatrix::identity(2)),
        ])
        .unwrap();
        let x = PointSet::from_scalars(&[0.4]).unwrap();
        assert_eq!(k.gramian(&x).unwrap(), k.eval(&[0.4], &[0.4]).unwrap());
    }

    #[test]
    fn identity_coefficient_gramian_is_kronecker() {
        let g = ScalarKernel::gaussian(1.3).unwrap();
        let k = SeparableKernel::identity(g, 3).unwrap();
        let x = PointSet::from_scalars(&[0.0, 0.5, 1.7]).unwrap();
        let expected = linalg::kron(&g.gramian(&x), &DMatrix::identity(3, 3));
        assert_eq!(k.gramian(&x).unwrap(), expected);
    }

    #[test]
    fn gramian_rejects_duplicates() {
        let k = SeparableKernel::identity(ScalarKernel::gaussian(1.0).unwrap(), 1).unwrap();
        let x = PointSet::from_scalars(&[0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            k.gramian(&x),
            Err(Error::DuplicateCenters { first: 0, second: 2, .. })
        ));
    }

    #[test]
    fn cross_eval_example() {
        let k = SeparableKernel::single(
            ScalarKernel::gaussian(1.0).unwrap(),
            SymMatrix::from_diagonal(&[1.0, 2.0]),
        )
        .unwrap();
        let x = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let c = k.cross_eval(&[0.5], &x).unwrap();
        let e = (-0.25f64).exp();
        let expected = DMatrix::from_row_slice(2, 4, &[e, 0.0, e, 0.0, 0.0, 2.0 * e, 0.0, 2.0 * e]);
        assert_eq!(c, expected);

        let one = PointSet::from_scalars(&[0.3]).unwrap();
        assert_eq!(k.cross_eval(&[0.3], &one).unwrap(), k.eval(&[0.3], &[0.3]).unwrap());
    }

    #[test]
    fn hadamard_power_basics() {
        let g = ScalarKernel::gaussian(1.0).unwrap();
        let k = SeparableKernel::single(g, SymMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        assert!(matches!(k.hadamard_power(-1), Err(Error::NegativeExponent(-1))));
        let p1 = k.hadamard_power(1).unwrap();
        assert_eq!(p1.eval(&[0.1], &[0.9]).unwrap(), k.eval(&[0.1], &[0.9]).unwrap());
        let p0 = k.hadamard_power(0).unwrap();
        assert_eq!(p0.eval(&[0.1], &[0.9]).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn spec_round_trip() {
        let k = SeparableKernel::new(vec![
            KernelTerm::new(ScalarKernel::gaussian(0.1).unwrap(), ones2()),
            KernelTerm::new(ScalarKernel::polynomial(2).unwrap(), SymMatrix::identity(2)),
        ])
        .unwrap();
        let text = toml::to_string(&k.to_spec()).unwrap();
        let back: KernelSpec = toml::from_str(&text).unwrap();
        assert_eq!(SeparableKernel::from_spec(&back).unwrap(), k);
    }

    #[test]
    fn spec_missing_shape() {
        let text = "[[terms]]\nkind = \"gaussian\"\ncoeff = [[1.0]]\n";
        let spec: KernelSpec = toml::from_str(text).unwrap();
        assert!(matches!(SeparableKernel::from_spec(&spec), Err(Error::Config(_))));
        let bad = "[[terms]]\nkind = \"gaussian\"\nwidth = 1.0\ncoeff = [[1.0]]\n";
        assert!(toml::from_str::<KernelSpec>(bad).is_err());
    }
}
