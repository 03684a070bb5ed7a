//! Gaussian shape-parameter selection by exhaustive grid search on the
//! maximum validation error, and the covariance eigenbasis used to build
//! rotated componentwise kernels.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interpolation::{self, solve_gram, FitOptions};
use crate::kernels::{KernelTerm, PointSet, ScalarKernel, SeparableKernel};
use crate::linalg::{self, SymMatrix, RANK_TOL};

/// Default cap on the number of joint candidates.
pub const DEFAULT_CANDIDATE_CAP: usize = 200_000;
/// Relative size of `Q_iQ_j` below which two coefficients count as orthogonal.
pub const ORTHO_TOL: f64 = 1e-10;
/// Candidates whose error is within this relative distance of the minimum
/// are treated as tied; the first in grid order wins.
pub const TIE_TOL: f64 = 1e-12;

/// First index whose error is within `TIE_TOL` of the smallest error.
fn first_tied_minimum(errors: impl Iterator<Item = Option<f64>> + Clone) -> Option<(usize, f64)> {
    let min = errors.clone().flatten().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let cut = min + TIE_TOL * min.abs();
    errors.enumerate().find_map(|(i, e)| e.filter(|&v| v <= cut).map(|v| (i, v)))
}

/// `n` values `lo·(hi/lo)^(i/(n−1))` with both endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(Error::InvalidGrid(format!("grid size {n} is below 2")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Each slot is tuned on its own projected error. Needs mutually
    /// orthogonal coefficients across slots.
    Independent,
    /// Cartesian product over all slots.
    Joint,
}

/// How joint candidates are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointEvaluation {
    /// Use per-slot decoupled errors when the template allows it, full fits otherwise.
    Auto,
    /// Always fit the full matrix-valued interpolant.
    FullFit,
}

#[derive(Debug, Clone)]
pub struct GridSearchConfig {
    pub lo: f64,
    pub hi: f64,
    pub grid_size: usize,
    pub centers: PointSet,
    pub validation: PointSet,
    pub mode: SearchMode,
    pub joint_evaluation: JointEvaluation,
    pub candidate_cap: usize,
    pub fit: FitOptions,
    pub exec: Execution,
}

impl GridSearchConfig {
    pub fn new(centers: PointSet, validation: PointSet) -> Self {
        Self {
            lo: 0.1,
            hi: 100.0,
            grid_size: 50,
            centers,
            validation,
            mode: SearchMode::Joint,
            joint_evaluation: JointEvaluation::Auto,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            fit: FitOptions::default(),
            exec: Execution::default(),
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        log_grid(self.lo, self.hi, self.grid_size)
    }
}

/// Gaussian kernel family `Σ_i exp(−ε_{s(i)}‖x−y‖²) Q_i` where terms sharing a
/// slot share a shape parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeTemplate {
    coeffs: Vec<SymMatrix>,
    slot_of_term: Vec<usize>,
    slots: usize,
}

impl ShapeTemplate {
    pub fn new(coeffs: Vec<SymMatrix>, slot_of_term: Vec<usize>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyKernel);
        }
        if coeffs.len() != slot_of_term.len() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len(),
                got: slot_of_term.len(),
            });
        }
        let slots = slot_of_term.iter().max().map_or(0, |s| s + 1);
        if (0..slots).any(|s| !slot_of_term.contains(&s)) {
            return Err(Error::InvalidGrid("slots must be numbered 0..s without gaps".into()));
        }
        let m = coeffs[0].dim();
        if let Some((i, q)) = coeffs.iter().enumerate().find(|(_, q)| q.dim() != m) {
            return Err(Error::CoefficientDimension {
                term: i,
                expected: m,
                got: q.dim(),
            });
        }
        for (i, q) in coeffs.iter().enumerate() {
            let r = linalg::is_psd(q, linalg::PSD_TOL)?;
            if !r.is_psd {
                return Err(Error::CoefficientNotPsd {
                    term: i,
                    min_eigenvalue: r.min_eigenvalue,
                });
            }
        }
        Ok(Self {
            coeffs,
            slot_of_term,
            slots,
        })
    }

    /// One slot per term.
    pub fn untied(coeffs: Vec<SymMatrix>) -> Result<Self> {
        let slots = (0..coeffs.len()).collect();
        Self::new(coeffs, slots)
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn output_dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn coeffs(&self) -> &[SymMatrix] {
        &self.coeffs
    }

    pub fn slot_of_term(&self) -> &[usize] {
        &self.slot_of_term
    }

    pub fn kernel(&self, shapes: &[f64]) -> Result<SeparableKernel> {
        if shapes.len() != self.slots {
            return Err(Error::DimensionMismatch {
                expected: self.slots,
                got: shapes.len(),
            });
        }
        let terms = self
            .coeffs
            .iter()
            .zip(&self.slot_of_term)
            .map(|(q, &s)| Ok(KernelTerm::new(ScalarKernel::gaussian(shapes[s])?, q.clone())))
            .collect::<Result<Vec<_>>>()?;
        SeparableKernel::new(terms)
    }

    /// Sum of the coefficients attached to each slot.
    pub fn slot_coeffs(&self) -> Vec<SymMatrix> {
        let m = self.output_dim();
        let mut out = vec![SymMatrix::zeros(m); self.slots];
        for (q, &s) in self.coeffs.iter().zip(&self.slot_of_term) {
            out[s] = out[s].add(q);
        }
        out
    }

    /// Coefficients of different slots have vanishing products, so the
    /// interpolation problem splits into one scalar problem per slot.
    pub fn decouples(&self) -> bool {
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in self.coeffs.iter().enumerate() {
                if self.slot_of_term[i] == self.slot_of_term[j] {
                    continue;
                }
                let (a, b) = (a.matrix(), b.matrix());
                if (a * b).norm() > ORTHO_TOL * a.norm() * b.norm() {
                    return false;
                }
            }
        }
        true
    }
}

/// Target values at the centers and at the validation points (row `i` is
/// `f(x_i)`).
#[derive(Debug, Clone)]
pub struct TargetData {
    pub center_values: DMatrix<f64>,
    pub validation_values: DMatrix<f64>,
}

impl TargetData {
    pub fn from_fn(f: impl Fn(&[f64]) -> DVector<f64>, centers: &PointSet, validation: &PointSet) -> Self {
        let eval = |pts: &PointSet| {
            let rows: Vec<_> = pts.iter().map(|p| f(p).transpose()).collect();
            if rows.is_empty() {
                DMatrix::zeros(0, 0)
            } else {
                DMatrix::from_rows(&rows)
            }
        };
        Self {
            center_values: eval(centers),
            validation_values: eval(validation),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub index: usize,
    /// Slot searched; `None` for joint candidates.
    pub slot: Option<usize>,
    pub shapes: Vec<f64>,
    /// `None` when the fit failed.
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationMethod {
    Decoupled,
    FullFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub shapes: Vec<f64>,
    /// Grid index per slot.
    pub grid_indices: Vec<usize>,
    pub max_error: f64,
    pub method: EvaluationMethod,
    pub candidates: Vec<CandidateRecord>,
    pub failures: usize,
}

impl Selection {
    pub fn kernel(&self, template: &ShapeTemplate) -> Result<SeparableKernel> {
        template.kernel(&self.shapes)
    }
}

/// Per-slot squared validation errors for every grid value.
struct SlotErrors {
    /// `[slot][grid] -> Option<per-validation-point squared error>`
    errors: Vec<Vec<Option<Vec<f64>>>>,
    /// Squared norm of the part of `f` outside every slot range.
    outside: Vec<f64>,
}

fn range_basis(q: &SymMatrix) -> Result<DMatrix<f64>> {
    let eig = linalg::sym_eig(q)?;
    let r = linalg::rank_from_eig(&eig, RANK_TOL);
    Ok(eig.eigenvectors.columns(0, r).into_owned())
}

fn slot_errors(template: &ShapeTemplate, data: &TargetData, cfg: &GridSearchConfig, grid: &[f64]) -> Result<SlotErrors> {
    let bases = template
        .slot_coeffs()
        .iter()
        .map(range_basis)
        .collect::<Result<Vec<_>>>()?;
    let fv = &data.validation_values;
    let nv = fv.nrows();
    let mut outside = vec![0.0; nv];
    for (v, o) in outside.iter_mut().enumerate() {
        let f = fv.row(v).transpose();
        let mut rest = f.clone();
        for u in &bases {
            rest -= u * (u.transpose() * &f);
        }
        *o = rest.norm_squared();
    }

    let jobs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|s| (0..grid.len()).map(move |g| (s, g)))
        .collect();
    let results = cfg.exec.map(jobs.len(), |j| {
        let (s, g) = jobs[j];
        let u = &bases[s];
        if u.ncols() == 0 {
            return Some(vec![0.0; nv]);
        }
        let k = ScalarKernel::Gaussian { shape: grid[g] };
        let rhs = &data.center_values * u;
        let (sol, _) = solve_gram(k.gramian(&cfg.centers), &rhs, true, &cfg.fit).ok()?;
        let cross = DMatrix::from_fn(nv, cfg.centers.len(), |v, a| {
            k.eval(cfg.validation.point(v), cfg.centers.point(a))
        });
        let pred = cross * sol;
        let target = fv * u;
        let diff = target - pred;
        let out: Vec<f64> = (0..nv).map(|v| diff.row(v).norm_squared()).collect();
        out.iter().all(|e| e.is_finite()).then_some(out)
    });
    let mut errors = vec![Vec::with_capacity(grid.len()); bases.len()];
    for ((s, _), r) in jobs.into_iter().zip(results) {
        errors[s].push(r);
    }
    Ok(SlotErrors { errors, outside })
}

fn max_sqrt(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0_f64, |a, e| a.max(e.max(0.0).sqrt()))
}

fn check_inputs(template: &ShapeTemplate, data: &TargetData, cfg: &GridSearchConfig) -> Result<()> {
    let m = template.output_dim();
    for (name, vals, pts) in [
        ("center", &data.center_values, &cfg.centers),
        ("validation", &data.validation_values, &cfg.validation),
    ] {
        if vals.nrows() != pts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} {name} values for {} {name} points",
                vals.nrows(),
                pts.len()
            )));
        }
        if vals.nrows() > 0 && vals.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: vals.ncols(),
            });
        }
    }
    if cfg.centers.is_empty() {
        return Err(Error::InvalidArgument("grid search needs at least one center".into()));
    }
    if cfg.validation.is_empty() {
        return Err(Error::InvalidArgument("grid search needs at least one validation point".into()));
    }
    cfg.centers.check_distinct(crate::kernels::DUP_TOL)
}

/// Exhaustive grid search. The result is the first candidate in grid order
/// (slot 0 varies slowest) within `TIE_TOL` of the minimum, independent of
/// `cfg.exec`.
pub fn select_shapes(template: &ShapeTemplate, data: &TargetData, cfg: &GridSearchConfig) -> Result<Selection> {
    check_inputs(template, data, cfg)?;
    let grid = cfg.grid()?;
    let slots = template.slots();
    let decoupled = template.decouples();
    match cfg.mode {
        SearchMode::Independent => {
            if !decoupled {
                return Err(Error::InvalidGrid(
                    "independent search needs mutually orthogonal coefficients across slots".into(),
                ));
            }
            let se = slot_errors(template, data, cfg, &grid)?;
            let mut candidates = Vec::new();
            let mut chosen = Vec::with_capacity(slots);
            let mut failures = 0;
            for s in 0..slots {
                let errs: Vec<Option<f64>> = se.errors[s]
                    .iter()
                    .map(|e| e.as_ref().map(|v| max_sqrt(v.iter().copied())))
                    .collect();
                for (g, &err) in errs.iter().enumerate() {
                    if err.is_none() {
                        failures += 1;
                    }
                    candidates.push(CandidateRecord {
                        index: candidates.len(),
                        slot: Some(s),
                        shapes: vec![grid[g]],
                        max_error: err,
                    });
                }
                match first_tied_minimum(errs.iter().copied()) {
                    Some((g, _)) => chosen.push(g),
                    None => return Err(Error::AllCandidatesFailed { failures: grid.len() }),
                }
            }
            let total = combined_error(&se, &chosen).expect("chosen slots succeeded");
            Ok(Selection {
                shapes: chosen.iter().map(|&g| grid[g]).collect(),
                grid_indices: chosen,
                max_error: total,
                method: EvaluationMethod::Decoupled,
                candidates,
                failures,
            })
        }
        SearchMode::Joint => {
            let count = grid
                .len()
                .checked_pow(slots as u32)
                .filter(|&c| c <= cfg.candidate_cap)
                .ok_or(Error::TooManyCandidates {
                    count: grid.len().saturating_pow(slots as u32),
                    cap: cfg.candidate_cap,
                })?;
            log::info!("grid search over {count} joint candidates ({slots} slots)");
            let digits = |c: usize| -> Vec<usize> {
                let mut d = vec![0; slots];
                let mut rem = c;
                for s in (0..slots).rev() {
                    d[s] = rem % grid.len();
                    rem /= grid.len();
                }
                d
            };
            let use_decoupled = decoupled && cfg.joint_evaluation == JointEvaluation::Auto;
            let errors: Vec<Option<f64>> = if use_decoupled {
                let se = slot_errors(template, data, cfg, &grid)?;
                cfg.exec.map(count, |c| combined_error(&se, &digits(c)))
            } else {
                cfg.exec.map(count, |c| {
                    let shapes: Vec<f64> = digits(c).iter().map(|&g| grid[g]).collect();
                    full_fit_error(template, data, cfg, &shapes).ok()
                })
            };
            let best = first_tied_minimum(errors.iter().copied());
            let failures = errors.iter().filter(|e| e.is_none()).count();
            let mut candidates = Vec::with_capacity(count);
            for (c, e) in errors.into_iter().enumerate() {
                candidates.push(CandidateRecord {
                    index: c,
                    slot: None,
                    shapes: digits(c).iter().map(|&g| grid[g]).collect(),
                    max_error: e,
                });
            }
            let (c, err) = best.ok_or(Error::AllCandidatesFailed { failures })?;
            let idx = digits(c);
            Ok(Selection {
                shapes: idx.iter().map(|&g| grid[g]).collect(),
                grid_indices: idx,
                max_error: err,
                method: if use_decoupled {
                    EvaluationMethod::Decoupled
                } else {
                    EvaluationMethod::FullFit
                },
                candidates,
                failures,
            })
        }
    }
}

fn combined_error(se: &SlotErrors, idx: &[usize]) -> Option<f64> {
    let mut acc = se.outside.clone();
    for (s, &g) in idx.iter().enumerate() {
        let e = se.errors[s][g].as_ref()?;
        for (a, v) in acc.iter_mut().zip(e) {
            *a += v;
        }
    }
    Some(max_sqrt(acc.into_iter()))
}

/// Maximum Euclidean validation error of the full interpolant for `shapes`.
pub fn full_fit_error(template: &ShapeTemplate, data: &TargetData, cfg: &GridSearchConfig, shapes: &[f64]) -> Result<f64> {
    let k = template.kernel(shapes)?;
    let s = interpolation::fit_with(&k, &cfg.centers, &data.center_values, &cfg.fit)?;
    let pred = s.evaluate_many(&cfg.validation)?;
    let diff = &data.validation_values - pred;
    let err = (0..diff.nrows()).fold(0.0_f64, |a, v| a.max(diff.row(v).norm()));
    if err.is_finite() {
        Ok(err)
    } else {
        Err(Error::NumericalBreakdown {
            quantity: "validation error",
            value: err,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBasis {
    pub mean: DVector<f64>,
    pub covariance: SymMatrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` belongs to `eigenvalues[j]`; each column's largest-magnitude
    /// entry is positive.
    pub eigenvectors: DMatrix<f64>,
}

/// Sample mean and covariance `(1/(n−1)) Σ (f_i−μ)(f_i−μ)ᵀ` of the rows of
/// `samples`, with the eigendecomposition of the covariance.
pub fn covariance_eigenbasis(samples: &DMatrix<f64>) -> Result<CovarianceBasis> {
    let (n, m) = samples.shape();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mean = DVector::from_fn(m, |c, _| samples.column(c).sum() / n as f64);
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..n {
        let d = samples.row(i).transpose() - &mean;
        cov += &d * d.transpose();
    }
    cov /= (n - 1) as f64;
    let covariance = SymMatrix::symmetrized(cov);
    let eig = linalg::sym_eig(&covariance)?;
    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (j, src) in (0..m).rev().enumerate() {
        eigenvalues.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).into_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(j, &col);
    }
    Ok(CovarianceBasis {
        mean,
        covariance,
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: usize, i: usize) -> SymMatrix {
        let mut d = vec![0.0; m];
        d[i] = 1.0;
        SymMatrix::from_diagonal(&d)
    }

    fn line(n: usize, lo: f64, hi: f64) -> PointSet {
        let v: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        PointSet::from_scalars(&v).unwrap()
    }

    #[test]
    fn grid_is_logarithmic() {
        let g = log_grid(0.1, 100.0, 50).unwrap();
        assert_eq!(g[0], 0.1);
        assert_eq!(g[49], 100.0);
        let r = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
        assert!(log_grid(0.0, 1.0, 5).is_err());
        assert!(log_grid(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn reproduces_target_shape() {
        let centers = line(7, -2.0, 2.0);
        let validation = line(11, -1.9, 1.9);
        let target = ScalarKernel::Gaussian { shape: 1.0 };
        let data = TargetData::from_fn(|x| DVector::from_element(1, target.eval(x, &[0.0])), &centers, &validation);
        let template = ShapeTemplate::untied(vec![SymMatrix::identity(1)]).unwrap();
        let mut cfg = GridSearchConfig::new(centers, validation);
        cfg.lo = 0.01;
        cfg.hi = 100.0;
        cfg.grid_size = 5;
        let sel = select_shapes(&template, &data, &cfg).unwrap();
        assert_eq!(sel.grid_indices, vec![2]);
        assert!((sel.shapes[0] - 1.0).abs() < 1e-14);
        assert!(sel.max_error < 1e-10);
    }

    #[test]
    fn two_point_grid_picks_exact_value() {
        let centers = line(5, -2.0, 2.0);
        let validation = line(9, -1.5, 1.5);
        let target = ScalarKernel::Gaussian { shape: 3.0 };
        let data = TargetData::from_fn(|x| DVector::from_element(1, target.eval(x, &[0.0])), &centers, &validation);
        let template = ShapeTemplate::untied(vec![SymMatrix::identity(1)]).unwrap();
        let mut cfg = GridSearchConfig::new(centers, validation);
        cfg.lo = 0.3;
        cfg.hi = 3.0;
        cfg.grid_size = 2;
        let sel = select_shapes(&template, &data, &cfg).unwrap();
        assert_eq!(sel.grid_indices, vec![1]);
    }

    #[test]
    fn decoupled_matches_full_fit() {
        let centers = line(6, -2.0, 2.0);
        let validation = line(13, -1.7, 1.9);
        let data = TargetData::from_fn(
            |x| DVector::from_vec(vec![(x[0]).sin(), (2.0 * x[0]).cos(), x[0] * x[0]]),
            &centers,
            &validation,
        );
        let template = ShapeTemplate::new(vec![unit(3, 0), unit(3, 1), unit(3, 2)], vec![0, 1, 1]).unwrap();
        assert!(template.decouples());
        let mut cfg = GridSearchConfig::new(centers, validation);
        cfg.grid_size = 6;
        let fast = select_shapes(&template, &data, &cfg).unwrap();
        cfg.joint_evaluation = JointEvaluation::FullFit;
        let slow = select_shapes(&template, &data, &cfg).unwrap();
        assert_eq!(fast.method, EvaluationMethod::Decoupled);
        assert_eq!(slow.method, EvaluationMethod::FullFit);
        for (a, b) in fast.candidates.iter().zip(&slow.candidates) {
            let (a, b) = (a.max_error.unwrap(), b.max_error.unwrap());
            assert!((a - b).abs() <= 1e-8 * b.max(1e-3), "{a} vs {b}");
        }
        assert_eq!(fast.grid_indices, slow.grid_indices);
    }

    #[test]
    fn independent_requires_orthogonality() {
        let centers = line(4, -1.0, 1.0);
        let validation = line(5, -1.0, 1.0);
        let data = TargetData::from_fn(|x| DVector::from_vec(vec![x[0], 1.0]), &centers, &validation);
        let ones = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let template = ShapeTemplate::untied(vec![ones, unit(2, 1)]).unwrap();
        let mut cfg = GridSearchConfig::new(centers, validation);
        cfg.mode = SearchMode::Independent;
        assert!(matches!(select_shapes(&template, &data, &cfg), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn candidate_cap() {
        let centers = line(4, -1.0, 1.0);
        let validation = line(5, -1.0, 1.0);
        let data = TargetData::from_fn(|x| DVector::from_vec(vec![x[0], 1.0]), &centers, &validation);
        let template = ShapeTemplate::untied(vec![unit(2, 0), unit(2, 1)]).unwrap();
        let mut cfg = GridSearchConfig::new(centers, validation);
        cfg.candidate_cap = 100;
        assert!(matches!(
            select_shapes(&template, &data, &cfg),
            Err(Error::TooManyCandidates { count: 2500, cap: 100 })
        ));
    }

    #[test]
    fn covariance_examples() {
        let constant = DMatrix::from_element(5, 3, 2.0);
        let c = covariance_eigenbasis(&constant).unwrap();
        assert!(c.eigenvalues.iter().all(|l| l.abs() < 1e-15));

        let pm = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let c = covariance_eigenbasis(&pm).unwrap();
        assert!((c.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert!((c.eigenvectors[(0, 1)].abs() - 1.0).abs() < 1e-14);
        assert!(covariance_eigenbasis(&DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn ties_resolve_to_first_in_grid_order() {
        let e = [Some(2.0), None, Some(1.0 + 1e-14), Some(1.0), Some(1.0 + 1e-9)];
        assert_eq!(first_tied_minimum(e.iter().copied()), Some((2, 1.0 + 1e-14)));
        assert_eq!(first_tied_minimum([None, None].iter().copied()), None);
    }
}
