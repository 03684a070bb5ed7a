//! One-dimensional three-component target interpolated with a scalar
//! kernel, a componentwise kernel, and two kernels acting on the covariance
//! eigenbasis of the target.

use nalgebra::{DMatrix, DVector};

use super::config::{ExperimentConfig, PointScheme, ShapeSource, TuningConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interpolation::{fit_with, CholeskyFallback, FitOptions};
use crate::kernels::{PointSet, SeparableKernel};
use crate::linalg::SymMatrix;
use crate::sampling::{self, DomainBox};
use crate::tuning::{self, CovarianceBasis, GridSearchConfig, JointEvaluation, SearchMode, Selection, ShapeTemplate, TargetData};

pub const KERNEL_NAMES: [&str; 4] = ["k1", "k2", "k3", "k4"];

/// Shape parameters for the four kernels, one per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Shapes {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k3: Vec<f64>,
    pub k4: Vec<f64>,
}

impl Shapes {
    pub fn table() -> Self {
        Self {
            k1: vec![1.931],
            k2: vec![1.931, 1.931, 1.600],
            k3: vec![0.244, 3.393],
            k4: vec![0.244, 3.393, 3.393],
        }
    }

    pub fn as_array(&self) -> [&[f64]; 4] {
        [&self.k1, &self.k2, &self.k3, &self.k4]
    }
}

pub fn domain() -> DomainBox {
    DomainBox::cube(1, -2.0, 2.0).expect("valid box")
}

pub fn rotation() -> DMatrix<f64> {
    let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0 / s3,
            1.0 / s3,
            1.0 / s3,
            0.0,
            1.0 / s2,
            -1.0 / s2,
            -s2 / s3,
            1.0 / s6,
            1.0 / s6,
        ],
    )
}

/// `f(x) = R (e^{−2.5(x−0.5)²} + e^{−2(x+0.5)²}, e^{−3.5(x−0.7)²}, 1)ᵀ`.
pub fn target(x: &[f64]) -> DVector<f64> {
    let t = x[0];
    let g = DVector::from_vec(vec![
        (-2.5 * (t - 0.5).powi(2)).exp() + (-2.0 * (t + 0.5).powi(2)).exp(),
        (-3.5 * (t - 0.7).powi(2)).exp(),
        1.0,
    ]);
    rotation() * g
}

pub fn values(points: &PointSet) -> DMatrix<f64> {
    let rows: Vec<_> = points.iter().map(|p| target(p).transpose()).collect();
    if rows.is_empty() {
        DMatrix::zeros(0, 3)
    } else {
        DMatrix::from_rows(&rows)
    }
}

/// Covariance eigenbasis of `count` uniform evaluations of the target.
pub fn covariance(count: usize, seed: u64) -> Result<CovarianceBasis> {
    let pts = domain().sample_points(count, &mut sampling::rng(seed));
    tuning::covariance_eigenbasis(&values(&pts))
}

fn outer(v: DVector<f64>) -> SymMatrix {
    SymMatrix::outer(&v)
}

/// Templates for the four kernels; `v` holds the eigenvectors in ascending
/// eigenvalue order.
pub fn templates(v: &DMatrix<f64>) -> Result<[ShapeTemplate; 4]> {
    let e = |i: usize| {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        SymMatrix::from_diagonal(&d)
    };
    let p = |i: usize| outer(v.column(i).into_owned());
    Ok([
        ShapeTemplate::untied(vec![SymMatrix::identity(3)])?,
        ShapeTemplate::untied(vec![e(0), e(1), e(2)])?,
        ShapeTemplate::untied(vec![p(0), p(1).add(&p(2))])?,
        ShapeTemplate::untied(vec![p(0), p(1), p(2)])?,
    ])
}

pub fn kernels(templates: &[ShapeTemplate; 4], shapes: &Shapes) -> Result<Vec<SeparableKernel>> {
    templates
        .iter()
        .zip(shapes.as_array())
        .map(|(t, s)| t.kernel(s))
        .collect()
}

/// `{−2 + 4i/(N−1)}`, or the left endpoint for `N = 1`.
pub fn centers(n: usize) -> PointSet {
    if n == 1 {
        return PointSet::from_scalars(&[-2.0]).expect("one center");
    }
    PointScheme::Equidistant { count: n }
        .build(&domain(), 0)
        .expect("equidistant centers")
}

/// Cholesky with an LU fallback for numerically singular Gramians.
pub fn fit_options() -> FitOptions {
    FitOptions::with_fallback(CholeskyFallback::Lu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub n: usize,
    /// Maximum Euclidean test error per kernel; `None` when the fit failed.
    pub errors: [Option<f64>; 4],
}

pub fn max_error(k: &SeparableKernel, centers: &PointSet, test: &PointSet, test_values: &DMatrix<f64>, opts: &FitOptions) -> Result<f64> {
    let s = fit_with(k, centers, &values(centers), opts)?;
    let pred = s.evaluate_many(test)?;
    let diff = test_values - pred;
    let e = (0..diff.nrows()).fold(0.0_f64, |a, i| a.max(diff.row(i).norm()));
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NumericalBreakdown {
            quantity: "test error",
            value: e,
        })
    }
}

/// Error decay over `N = 1..=max_n`.
pub fn decay(kernels: &[SeparableKernel], max_n: usize, test: &PointSet, opts: &FitOptions, exec: Execution) -> Vec<DecayRow> {
    let test_values = values(test);
    let nk = kernels.len();
    let jobs = max_n * nk;
    let results = exec.map(jobs, |j| {
        let (n, k) = (j / nk + 1, j % nk);
        match max_error(&kernels[k], &centers(n), test, &test_values, opts) {
            Ok(e) => Some(e),
            Err(err) => {
                log::warn!("{} with N = {n}: {err}", KERNEL_NAMES[k]);
                None
            }
        }
    });
    (1..=max_n)
        .map(|n| {
            let mut errors = [None; 4];
            for (k, e) in errors.iter_mut().enumerate().take(nk) {
                *e = results[(n - 1) * nk + k];
            }
            DecayRow { n, errors }
        })
        .collect()
}

/// Fresh grid search for all four kernels. The componentwise kernel is
/// tuned per component; the others jointly over their slots.
pub fn tune(templates: &[ShapeTemplate; 4], cfg: &TuningConfig, validation_seed: u64, exec: Execution) -> Result<Vec<Selection>> {
    let centers = centers(cfg.centers);
    let validation = domain().sample_points(cfg.validation_points, &mut sampling::rng(validation_seed));
    let data = TargetData {
        center_values: values(&centers),
        validation_values: values(&validation),
    };
    let mut grid = GridSearchConfig::new(centers, validation);
    grid.lo = cfg.lo;
    grid.hi = cfg.hi;
    grid.grid_size = cfg.grid_size;
    grid.candidate_cap = cfg.candidate_cap;
    grid.fit = fit_options();
    grid.exec = exec;
    if cfg.full_fit {
        grid.joint_evaluation = JointEvaluation::FullFit;
    }
    templates
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut g = grid.clone();
            g.mode = if i == 1 { SearchMode::Independent } else { SearchMode::Joint };
            tuning::select_shapes(t, &data, &g)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Example1Result {
    pub covariance: CovarianceBasis,
    pub shapes: Shapes,
    pub tuned: Option<Vec<Selection>>,
    pub kernels: Vec<SeparableKernel>,
    pub test: PointSet,
    pub rows: Vec<DecayRow>,
}

impl Example1Result {
    pub fn row(&self, n: usize) -> Option<&DecayRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

pub fn covariance_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed
}

pub fn validation_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.wrapping_add(1)
}

pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Result<Example1Result> {
    let dom = cfg.domain_or(domain())?;
    if dom != domain() {
        return Err(Error::Config("example1 is defined on the domain [-2, 2]".into()));
    }
    let covariance = covariance(cfg.example1.covariance_samples, covariance_seed(cfg))?;
    let templates = templates(&covariance.eigenvectors)?;
    let (shapes, tuned) = match cfg.example1.shapes {
        ShapeSource::Table => (Shapes::table(), None),
        ShapeSource::Tuned => {
            let sel = tune(&templates, &cfg.tuning, validation_seed(cfg), exec)?;
            let shapes = Shapes {
                k1: sel[0].shapes.clone(),
                k2: sel[1].shapes.clone(),
                k3: sel[2].shapes.clone(),
                k4: sel[3].shapes.clone(),
            };
            (shapes, Some(sel))
        }
    };
    let kernels = kernels(&templates, &shapes)?;
    let test = cfg
        .test_set
        .clone()
        .unwrap_or(PointScheme::Equidistant { count: 400 })
        .build(&dom, cfg.seed.wrapping_add(2))?;
    let rows = decay(&kernels, cfg.example1.max_centers, &test, &fit_options(), exec);
    Ok(Example1Result {
        covariance,
        shapes,
        tuned,
        kernels,
        test,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_orthogonal() {
        let r = rotation();
        assert!((r.transpose() * &r - DMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn target_at_zero() {
        let f = target(&[0.0]);
        let g = DVector::from_vec(vec![(-0.625f64).exp() + (-0.5f64).exp(), (-3.5 * 0.49f64).exp(), 1.0]);
        assert!((f - rotation() * g).norm() < 1e-15);
    }

    #[test]
    fn center_layout() {
        assert_eq!(centers(1).point(0), &[-2.0]);
        let c = centers(35);
        assert_eq!(c.point(0), &[-2.0]);
        assert_eq!(c.point(34), &[2.0]);
        assert!((c.point(1)[0] - (-2.0 + 4.0 / 34.0)).abs() < 1e-15);
    }

    #[test]
    fn covariance_has_constant_null_direction() {
        let c = covariance(401, 42).unwrap();
        assert!(c.eigenvalues[0].abs() < 1e-14);
        let third_column = rotation().column(2).into_owned();
        assert!((c.eigenvectors.column(0).dot(&third_column).abs() - 1.0).abs() < 1e-10);
    }
}
