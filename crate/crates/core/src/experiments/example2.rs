//! Native-space targets under a coupled three-term Gaussian kernel on
//! `[−1,1]²`: measured errors against the power-function bounds for nested
//! center sets.

use nalgebra::{DMatrix, DVector};

use super::config::{ExperimentConfig, PointScheme, TargetConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interpolation::{NativeSpanFunction, RESIDUAL_CLAMP_TOL};
use crate::kernels::{KernelTerm, PointSet, ScalarKernel, SeparableKernel};
use crate::linalg::{self, SymMatrix};
use crate::power::{BoundFactors, PowerEvaluator};
use crate::sampling::{self, DomainBox};

pub const NORMS: [&str; 3] = ["2", "inf", "1"];

pub fn domain() -> DomainBox {
    DomainBox::cube(2, -1.0, 1.0).expect("valid box")
}

pub fn coefficients() -> [SymMatrix; 3] {
    let q1 = SymMatrix::from_rows(&[
        vec![1.0, 1.0, -1.0, -1.0],
        vec![1.0, 1.0, -1.0, -1.0],
        vec![-1.0, -1.0, 1.0, 1.0],
        vec![-1.0, -1.0, 1.0, 1.0],
    ]);
    let q2 = SymMatrix::from_rows(&[
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, -1.0],
        vec![0.0, 0.0, -1.0, 1.0],
    ]);
    let q3 = SymMatrix::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, -1.0],
        vec![0.0, 0.0, -1.0, 1.0],
    ]);
    [q1.expect("symmetric"), q2.expect("symmetric"), q3.expect("symmetric")]
}

/// `Σ_{i=1}^3 e^{−i‖x−y‖²} Q_i`.
pub fn kernel() -> SeparableKernel {
    let terms = coefficients()
        .into_iter()
        .enumerate()
        .map(|(i, q)| KernelTerm::new(ScalarKernel::gaussian((i + 1) as f64).expect("valid shape"), q))
        .collect();
    SeparableKernel::new(terms).expect("valid kernel")
}

/// Sites uniform in `domain`, weights standard normal.
pub fn draw_target(k: &SeparableKernel, domain: &DomainBox, sites: usize, seed: u64) -> Result<NativeSpanFunction> {
    let mut rng = sampling::rng(seed);
    let y = domain.sample_points(sites, &mut rng);
    let w = sampling::standard_normal_matrix(sites, k.output_dim(), &mut rng);
    NativeSpanFunction::new(k.clone(), y, w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixRecord {
    pub target: usize,
    pub n_centers: usize,
    pub rank: usize,
    /// Maximum test-set error in the 2-, ∞- and 1-norm.
    pub errors: [f64; 3],
    /// Maximum over the test set of the bounds scaled by `‖f − Πf‖`.
    pub bounds_residual: [f64; 3],
    /// Maximum over the test set of the bounds scaled by `‖f‖`.
    pub bounds_full: [f64; 3],
    pub residual_norm: f64,
    pub f_norm: f64,
    /// Test points where the error exceeds its residual bound or the
    /// residual bound exceeds the full-norm bound beyond the slack.
    pub violations: [usize; 3],
    /// `max_x (error − bound_residual)` divided by the slack scale.
    pub max_excess: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Example2Result {
    pub kernel: SeparableKernel,
    pub centers: PointSet,
    pub test: PointSet,
    pub targets: Vec<NativeSpanFunction>,
    pub target_seeds: Vec<u64>,
    pub records: Vec<PrefixRecord>,
}

impl Example2Result {
    pub fn total_violations(&self) -> usize {
        self.records.iter().map(|r| r.violations.iter().sum::<usize>()).sum()
    }
}

pub fn centers_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.centers.as_ref().and_then(PointScheme::seed).unwrap_or(cfg.seed)
}

pub fn target_seed(cfg: &ExperimentConfig, t: usize) -> u64 {
    let base = match &cfg.target {
        Some(TargetConfig::NativeSpan { seed: Some(s), .. }) => *s,
        _ => cfg.seed.wrapping_add(1),
    };
    base.wrapping_add(t as u64 * 1_000_003)
}

fn norms(e: &DVector<f64>) -> [f64; 3] {
    [e.norm(), e.amax(), e.iter().map(|v| v.abs()).sum()]
}

/// `‖f − Πf‖` from Pythagoras, clamped at zero within the relative slack.
fn residual_norm(f_norm_sq: f64, proj_norm_sq: f64) -> Result<f64> {
    let r2 = f_norm_sq - proj_norm_sq;
    if r2 >= 0.0 {
        Ok(r2.sqrt())
    } else if r2 >= -RESIDUAL_CLAMP_TOL * f_norm_sq {
        Ok(0.0)
    } else {
        Err(Error::NumericalBreakdown {
            quantity: "squared residual norm",
            value: r2,
        })
    }
}

pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Result<Example2Result> {
    let kernel = match &cfg.kernel {
        Some(spec) => SeparableKernel::from_spec(spec)?,
        None => kernel(),
    };
    let dom = cfg.domain_or(domain())?;
    let sites = match &cfg.target {
        None => 5,
        Some(TargetConfig::NativeSpan { sites, .. }) => *sites,
        Some(other) => return Err(Error::Config(format!("example2 needs a native_span target, got {other:?}"))),
    };
    let e2 = &cfg.example2;
    if e2.targets == 0 {
        return Err(Error::Config("example2.targets must be at least 1".into()));
    }
    let target_seeds: Vec<u64> = (0..e2.targets).map(|t| target_seed(cfg, t)).collect();
    let targets = target_seeds
        .iter()
        .map(|&s| draw_target(&kernel, &dom, sites, s))
        .collect::<Result<Vec<_>>>()?;

    let scheme = cfg.centers.clone().unwrap_or(PointScheme::Random {
        count: e2.max_centers,
        seed: None,
    });
    let mut centers = scheme.build(&dom, centers_seed(cfg))?;
    if e2.include_sites {
        let y = targets[0].sites();
        if y.len() > centers.len() {
            return Err(Error::Config("include_sites needs at least as many centers as sites".into()));
        }
        let keep = centers.prefix(centers.len() - y.len());
        centers = keep.concat(y)?;
    }
    let max_n = centers.len();
    let test = cfg
        .test_set
        .clone()
        .unwrap_or(PointScheme::Equidistant { count: 20 })
        .build(&dom, cfg.seed.wrapping_add(2))?;

    let f_test: Vec<DMatrix<f64>> = targets.iter().map(|f| f.values_at(&test)).collect::<Result<_>>()?;
    let f_centers: Vec<DMatrix<f64>> = targets.iter().map(|f| f.values_at(&centers)).collect::<Result<_>>()?;
    let f_norm_sq: Vec<f64> = targets.iter().map(|f| f.native_norm_sq()).collect::<Result<_>>()?;
    let diag_scale = test
        .iter()
        .map(|x| {
            let d = SymMatrix::symmetrized(kernel.eval(x, x)?);
            linalg::spectral_norm_sym(&d)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max)
        .sqrt();
    let m = kernel.output_dim();

    let per_prefix = exec.map(max_n, |j| -> Result<Vec<PrefixRecord>> {
        let n = j + 1;
        let xi = centers.prefix(n);
        let pe = PowerEvaluator::with_rank_tol(&kernel, &xi, e2.rank_tol)?;
        let queries = pe.query_many(&test, Execution::Sequential)?;
        let factors = queries
            .iter()
            .map(|q| BoundFactors::from_power(&q.power))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(targets.len());
        for t in 0..targets.len() {
            let values = f_centers[t].rows(0, n).into_owned();
            let proj = pe.project(&values)?;
            let f_norm = f_norm_sq[t].sqrt();
            let r = residual_norm(f_norm_sq[t], proj.norm_sq())?;
            let scale = f_norm * diag_scale * (m as f64).sqrt();
            let slack = e2.violation_slack * scale;
            let mut rec = PrefixRecord {
                target: t,
                n_centers: n,
                rank: pe.rank(),
                errors: [0.0; 3],
                bounds_residual: [0.0; 3],
                bounds_full: [0.0; 3],
                residual_norm: r,
                f_norm,
                violations: [0; 3],
                max_excess: [f64::NEG_INFINITY; 3],
            };
            for (v, (q, fac)) in queries.iter().zip(&factors).enumerate() {
                let s = proj.evaluate(q);
                let e = f_test[t].row(v).transpose() - s;
                let errs = norms(&e);
                let b1 = fac.scaled(r);
                let b2 = fac.scaled(f_norm);
                let b1 = [b1.two, b1.inf, b1.one];
                let b2 = [b2.two, b2.inf, b2.one];
                for p in 0..3 {
                    rec.errors[p] = rec.errors[p].max(errs[p]);
                    rec.bounds_residual[p] = rec.bounds_residual[p].max(b1[p]);
                    rec.bounds_full[p] = rec.bounds_full[p].max(b2[p]);
                    let excess = if scale > 0.0 { (errs[p] - b1[p]) / scale } else { errs[p] - b1[p] };
                    rec.max_excess[p] = rec.max_excess[p].max(excess);
                    if errs[p] > b1[p] + slack || b1[p] > b2[p] + slack {
                        rec.violations[p] += 1;
                    }
                }
            }
            out.push(rec);
        }
        Ok(out)
    });
    let mut by_prefix = Vec::with_capacity(max_n);
    for r in per_prefix {
        by_prefix.push(r?);
    }
    let mut records = Vec::with_capacity(max_n * targets.len());
    for t in 0..targets.len() {
        for p in &by_prefix {
            records.push(p[t].clone());
        }
    }
    Ok(Example2Result {
        kernel,
        centers,
        test,
        targets,
        target_seeds,
        records,
    })
}
