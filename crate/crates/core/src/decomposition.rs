//! Structural analysis of separable kernels: rank bookkeeping of a
//! decomposition, commuting families and their simultaneous
//! diagonalization, recovery of uncoupled decompositions from samples, and
//! term-level comparison of decompositions.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{KernelTerm, PointSet, ScalarKernel, SeparableKernel};
use crate::linalg::{self, SymMatrix};
use crate::sampling::{self, DomainBox};

/// Relative off-diagonal residual allowed after simultaneous
/// diagonalization of a sampled family.
pub const DIAG_TOL: f64 = 1e-8;
/// Relative commutator size accepted as commuting.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Distance between normalized evaluation vectors below which two diagonal
/// functions are taken as proportional.
pub const PROP_TOL: f64 = 1e-8;
/// Distances in `(PROP_TOL, AMBIGUITY_FACTOR·PROP_TOL]` are ambiguous.
pub const AMBIGUITY_FACTOR: f64 = 1e4;
/// Relative tolerance for matching term products.
pub const EQUIV_TOL: f64 = 1e-8;
/// Relative tolerance for `k(x,y) = k(y,x)` on samples.
pub const VALUE_SYM_TOL: f64 = 1e-10;
/// Eigenvalue gap (relative to the family scale) that separates clusters.
const CLUSTER_TOL: f64 = 1e-8;
/// Seed of the combination weights used by [`simultaneous_diagonalize`].
pub const DIAG_SEED: u64 = 0x5eed_d1a6;

/// Where kernel-independence samples are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDomain {
    pub domain: DomainBox,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SampleDomain {
    fn default() -> Self {
        Self {
            domain: DomainBox::cube(1, -2.0, 2.0).expect("valid box"),
            samples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceEvidence {
    pub samples: usize,
    pub seed: u64,
    pub rank: usize,
    /// Smallest singular value of the evaluation matrix divided by its largest.
    pub relative_min_singular_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub p: usize,
    pub ranks: Vec<usize>,
    pub rank_sum: usize,
    pub rank_of_sum: usize,
    pub uncoupled: bool,
    pub q_linearly_independent: bool,
    pub kernels_linearly_independent: bool,
    pub kernel_evidence: IndependenceEvidence,
    pub orthogonal_products: bool,
}

impl DecompositionReport {
    /// Both linear-independence certificates hold, so the length is minimal.
    pub fn minimal(&self) -> bool {
        self.q_linearly_independent && self.kernels_linearly_independent
    }
}

pub fn analyze(k: &SeparableKernel, rank_tol: f64) -> Result<DecompositionReport> {
    analyze_with(k, rank_tol, &SampleDomain::default())
}

pub fn analyze_with(k: &SeparableKernel, rank_tol: f64, sampling_cfg: &SampleDomain) -> Result<DecompositionReport> {
    if !(rank_tol > 0.0 && rank_tol.is_finite()) {
        return Err(Error::InvalidTolerance(rank_tol));
    }
    let terms = k.terms();
    let p = terms.len();
    let m = k.output_dim();

    let ranks = terms
        .iter()
        .map(|t| linalg::rank_of(&t.coeff, rank_tol))
        .collect::<Result<Vec<_>>>()?;
    let rank_sum = ranks.iter().sum();
    let rank_of_sum = linalg::rank_of(&k.coeff_sum(), rank_tol)?;

    let vec_q = DMatrix::from_fn(m * m, p, |r, c| terms[c].coeff.matrix()[(r % m, r / m)]);
    let q_linearly_independent = linalg::rank_general(&vec_q, rank_tol) == p;

    let mut rng = sampling::rng(sampling_cfg.seed);
    let pairs = sampling::sample_pairs(&sampling_cfg.domain, sampling_cfg.samples, &mut rng);
    let evals = DMatrix::from_fn(pairs.len(), p, |s, i| terms[i].scalar.eval(&pairs[s].0, &pairs[s].1));
    let kernel_rank = linalg::rank_general(&evals, rank_tol);
    let sv = evals.singular_values();
    let smax = sv.max();
    let smin = if sv.is_empty() { 0.0 } else { sv.min() };
    let kernel_evidence = IndependenceEvidence {
        samples: pairs.len(),
        seed: sampling_cfg.seed,
        rank: kernel_rank,
        relative_min_singular_value: if smax > 0.0 { smin / smax } else { 0.0 },
    };

    let mut orthogonal_products = true;
    'outer: for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let qi = terms[i].coeff.matrix();
            let qj = terms[j].coeff.matrix();
            if (qi * qj).norm() > rank_tol * qi.norm() * qj.norm() {
                orthogonal_products = false;
                break 'outer;
            }
        }
    }

    Ok(DecompositionReport {
        p,
        ranks,
        rank_sum,
        rank_of_sum,
        uncoupled: rank_of_sum == rank_sum,
        q_linearly_independent,
        kernels_linearly_independent: kernel_rank == p,
        kernel_evidence,
        orthogonal_products,
    })
}

/// Largest relative commutator `‖AB − BA‖_F / (‖A‖_F‖B‖_F)` over all pairs,
/// with the pair that attains it.
pub fn worst_commutator(samples: &[DMatrix<f64>]) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let a = &samples[i];
            let b = &samples[j];
            let scale = a.norm() * b.norm();
            let r = if scale > 0.0 {
                (a * b - b * a).norm() / scale
            } else {
                0.0
            };
            if worst.is_none_or(|w| r > w.2) {
                worst = Some((i, j, r));
            }
        }
    }
    worst
}

pub fn commuting_family_check(samples: &[DMatrix<f64>], tol: f64) -> bool {
    worst_commutator(samples).is_none_or(|(_, _, r)| r <= tol)
}

pub fn simultaneous_diagonalize(samples: &[SymMatrix]) -> Result<DMatrix<f64>> {
    simultaneous_diagonalize_with(samples, DIAG_TOL, DIAG_SEED)
}

/// Orthogonal `P` with `PᵀA_jP` diagonal for every `A_j`. Columns are
/// signed so that their largest-magnitude entry is positive.
pub fn simultaneous_diagonalize_with(samples: &[SymMatrix], tol: f64, seed: u64) -> Result<DMatrix<f64>> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let m = samples[0].dim();
    if let Some(bad) = samples.iter().find(|a| a.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: bad.dim(),
        });
    }
    let mats: Vec<&DMatrix<f64>> = samples.iter().map(|a| a.matrix()).collect();
    let scale = mats.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut rng = sampling::rng(seed);
    let mut blocks = Vec::new();
    refine(&mats, DMatrix::identity(m, m), 0, m, scale, &mut rng, &mut blocks)?;

    let mut p = DMatrix::zeros(m, m);
    let mut col = 0;
    for b in blocks {
        for c in 0..b.ncols() {
            p.set_column(col, &b.column(c));
            col += 1;
        }
    }
    for c in 0..m {
        let (imax, _) = p
            .column(c)
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 + 1e-12 { (i, v.abs()) } else { acc });
        if p[(imax, c)] < 0.0 {
            p.column_mut(c).neg_mut();
        }
    }

    for a in &mats {
        let d = p.transpose() * *a * &p;
        let off = off_diagonal_norm(&d);
        if off > tol * a.norm().max(f64::MIN_POSITIVE) {
            let owned: Vec<DMatrix<f64>> = mats.iter().map(|a| (*a).clone()).collect();
            let (first, second, residual) = worst_commutator(&owned).unwrap_or((0, 0, off));
            return Err(Error::NotCommuting {
                first,
                second,
                residual,
            });
        }
    }
    Ok(p)
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn refine(
    mats: &[&DMatrix<f64>],
    basis: DMatrix<f64>,
    depth: usize,
    max_depth: usize,
    scale: f64,
    rng: &mut sampling::SeededRng,
    out: &mut Vec<DMatrix<f64>>,
) -> Result<()> {
    let d = basis.ncols();
    if d == 1 || depth >= max_depth || scale == 0.0 {
        out.push(basis);
        return Ok(());
    }
    let restricted: Vec<DMatrix<f64>> = mats.iter().map(|a| basis.transpose() * *a * &basis).collect();
    let all_scalar = restricted.iter().all(|r| {
        let mean = r.trace() / d as f64;
        (r - DMatrix::identity(d, d) * mean).norm() <= CLUSTER_TOL * scale
    });
    if all_scalar {
        out.push(basis);
        return Ok(());
    }

    let raw: Vec<f64> = (0..restricted.len()).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut c = DMatrix::zeros(d, d);
    for (r, w) in restricted.iter().zip(&raw) {
        c += r * (w / total);
    }
    let eig = linalg::sym_eig(&SymMatrix::symmetrized(c))?;

    let mut start = 0;
    for i in 1..=d {
        let split = i == d || eig.eigenvalues[i - 1] - eig.eigenvalues[i] > CLUSTER_TOL * scale;
        if split {
            let cols: Vec<_> = (start..i).map(|j| eig.eigenvectors.column(j).into_owned()).collect();
            let sub = &basis * DMatrix::from_columns(&cols);
            refine(mats, sub, depth + 1, max_depth, scale, rng, out)?;
            start = i;
        }
    }
    Ok(())
}

/// Anything that exposes a finite list of matrix-valued terms summing to a
/// kernel.
pub trait TermwiseKernel {
    fn output_dim(&self) -> usize;
    fn term_count(&self) -> usize;
    fn term_value(&self, term: usize, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>>;

    fn value(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.output_dim();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..self.term_count() {
            out += self.term_value(i, x, y)?;
        }
        Ok(out)
    }
}

impl TermwiseKernel for SeparableKernel {
    fn output_dim(&self) -> usize {
        SeparableKernel::output_dim(self)
    }

    fn term_count(&self) -> usize {
        self.len()
    }

    fn term_value(&self, term: usize, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let t = &self.terms()[term];
        Ok(t.coeff.matrix() * t.scalar.eval(x, y))
    }

    fn value(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.eval(x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredTerm {
    /// Columns of `P` belonging to this term.
    pub indices: Vec<usize>,
    /// The column whose diagonal function serves as the scalar kernel.
    pub representative: usize,
    /// `α_{l,j}` in the order of `indices`; the representative has weight 1.
    pub alphas: Vec<f64>,
    pub coeff: SymMatrix,
}

/// An orthogonal decomposition `k = Σ_l k̂_l Q̂_l` read off a commuting
/// kernel, with `k̂_l(x,y) = p_rᵀ k(x,y) p_r` for the representative column
/// `p_r` of the term.
#[derive(Debug, Clone)]
pub struct RecoveredDecomposition {
    pub p: DMatrix<f64>,
    pub groups: Vec<Vec<usize>>,
    /// Columns whose diagonal function vanishes on all samples.
    pub null_indices: Vec<usize>,
    pub terms: Vec<RecoveredTerm>,
    source: SeparableKernel,
}

impl RecoveredDecomposition {
    pub fn source(&self) -> &SeparableKernel {
        &self.source
    }

    pub fn scalar_value(&self, term: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        let r = self.terms[term].representative;
        let pr = self.p.column(r);
        let k = self.source.eval(x, y)?;
        Ok((pr.transpose() * k * pr)[(0, 0)])
    }

    /// `max_{l≠l'} ‖Q̂_lQ̂_{l'}‖_F`.
    pub fn max_cross_product_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.terms.iter().enumerate() {
            for (j, b) in self.terms.iter().enumerate() {
                if i != j {
                    worst = worst.max((a.coeff.matrix() * b.coeff.matrix()).norm());
                }
            }
        }
        worst
    }

    pub fn orthogonality_defect(&self) -> f64 {
        let m = self.p.nrows();
        (self.p.transpose() * &self.p - DMatrix::identity(m, m)).norm()
    }
}

impl TermwiseKernel for RecoveredDecomposition {
    fn output_dim(&self) -> usize {
        self.p.nrows()
    }

    fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn term_value(&self, term: usize, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.terms[term].coeff.matrix() * self.scalar_value(term, x, y)?)
    }
}

pub fn recover_uncoupled(k: &SeparableKernel, sample_pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<RecoveredDecomposition> {
    recover_uncoupled_with(k, sample_pairs, PROP_TOL)
}

pub fn recover_uncoupled_with(
    k: &SeparableKernel,
    sample_pairs: &[(Vec<f64>, Vec<f64>)],
    prop_tol: f64,
) -> Result<RecoveredDecomposition> {
    if sample_pairs.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(prop_tol > 0.0 && prop_tol.is_finite()) {
        return Err(Error::InvalidTolerance(prop_tol));
    }
    let m = k.output_dim();
    let mut values = Vec::with_capacity(sample_pairs.len());
    for (s, (x, y)) in sample_pairs.iter().enumerate() {
        let a = k.eval(x, y)?;
        let b = k.eval(y, x)?;
        let deviation = (&a - &b).norm();
        if deviation > VALUE_SYM_TOL * a.norm().max(1.0) {
            return Err(Error::NotValueSymmetric { sample: s, deviation });
        }
        values.push(a);
    }
    if let Some((first, second, residual)) = worst_commutator(&values) {
        if residual > COMMUTE_TOL {
            return Err(Error::NotCommuting {
                first,
                second,
                residual,
            });
        }
    }
    let sym: Vec<SymMatrix> = values.iter().map(|a| SymMatrix::symmetrized(a.clone())).collect();
    let p = simultaneous_diagonalize(&sym)?;

    let g: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let pj = p.column(j);
            values.iter().map(|a| (pj.transpose() * a * pj)[(0, 0)]).collect()
        })
        .collect();
    let norms: Vec<f64> = g.iter().map(|v| v.iter().map(|t| t * t).sum::<f64>().sqrt()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let live: Vec<usize> = (0..m).filter(|&j| norms[j] > 1e-12 * max_norm && norms[j] > 0.0).collect();
    let null_indices: Vec<usize> = (0..m).filter(|j| !live.contains(j)).collect();

    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            let mut plus = 0.0;
            let mut minus = 0.0;
            for (gi, gj) in g[i].iter().zip(&g[j]) {
                let (ui, uj) = (gi / norms[i], gj / norms[j]);
                plus += (ui + uj) * (ui + uj);
                minus += (ui - uj) * (ui - uj);
            }
            let distance = plus.min(minus).sqrt();
            if distance <= prop_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            } else if distance <= AMBIGUITY_FACTOR * prop_tol {
                return Err(Error::AmbiguousGrouping {
                    first: i,
                    second: j,
                    distance,
                });
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for &j in &live {
        let r = find(&mut parent, j);
        match roots.iter().position(|&x| x == r) {
            Some(pos) => groups[pos].push(j),
            None => {
                roots.push(r);
                groups.push(vec![j]);
            }
        }
    }

    let terms = groups
        .iter()
        .map(|idx| {
            let representative = idx
                .iter()
                .copied()
                .fold(idx[0], |best, j| if norms[j] > norms[best] { j } else { best });
            let gr = &g[representative];
            let grr: f64 = gr.iter().map(|t| t * t).sum();
            let alphas: Vec<f64> = idx
                .iter()
                .map(|&j| {
                    if j == representative {
                        1.0
                    } else {
                        g[j].iter().zip(gr).map(|(a, b)| a * b).sum::<f64>() / grr
                    }
                })
                .collect();
            let mut q = DMatrix::zeros(m, m);
            for (&j, &a) in idx.iter().zip(&alphas) {
                let pj = p.column(j);
                q += pj * pj.transpose() * a;
            }
            RecoveredTerm {
                indices: idx.clone(),
                representative,
                alphas,
                coeff: SymMatrix::symmetrized(q),
            }
        })
        .collect();

    Ok(RecoveredDecomposition {
        p,
        groups,
        null_indices,
        terms,
        source: k.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    /// A bijection of terms with matching products `k_iQ_i` exists.
    TermwiseEquivalent,
    /// The sums agree on the samples but the term products do not.
    SameKernel,
    Different,
}

/// Greedy nearest-signature matching of term products on the samples,
/// then a comparison of the summed kernels.
pub fn compare_decompositions<A, B>(a: &A, b: &B, sample_pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Equivalence>
where
    A: TermwiseKernel + ?Sized,
    B: TermwiseKernel + ?Sized,
{
    if a.output_dim() != b.output_dim() {
        return Ok(Equivalence::Different);
    }
    if sample_pairs.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let signatures = |k: &dyn Fn(usize, &[f64], &[f64]) -> Result<DMatrix<f64>>, count: usize| -> Result<Vec<Vec<f64>>> {
        (0..count)
            .map(|i| {
                let mut sig = Vec::new();
                for (x, y) in sample_pairs {
                    sig.extend(k(i, x, y)?.iter().copied());
                }
                Ok(sig)
            })
            .collect()
    };
    let sa = signatures(&|i, x, y| a.term_value(i, x, y), a.term_count())?;
    let sb = signatures(&|i, x, y| b.term_value(i, x, y), b.term_count())?;

    if sa.len() == sb.len() && termwise_match(&sa, &sb)? {
        return Ok(Equivalence::TermwiseEquivalent);
    }

    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (x, y) in sample_pairs {
        let ka = a.value(x, y)?;
        let kb = b.value(x, y)?;
        diff = diff.max((&ka - &kb).norm());
        scale = scale.max(ka.norm()).max(kb.norm());
    }
    if diff <= EQUIV_TOL * scale {
        Ok(Equivalence::SameKernel)
    } else {
        Ok(Equivalence::Different)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn rel_distance(u: &[f64], v: &[f64]) -> f64 {
    let d = norm(&u.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>());
    let s = norm(u).max(norm(v));
    if s == 0.0 {
        0.0
    } else {
        d / s
    }
}

fn termwise_match(sa: &[Vec<f64>], sb: &[Vec<f64>]) -> Result<bool> {
    let mut used = vec![false; sb.len()];
    for (i, s) in sa.iter().enumerate() {
        let mut cands: Vec<(usize, f64)> = sb
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, t)| (j, rel_distance(s, t)))
            .filter(|(_, d)| *d <= EQUIV_TOL)
            .collect();
        if cands.is_empty() {
            return Ok(false);
        }
        cands.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        let best = cands[0].0;
        // Several candidates are only a problem when they differ from each other.
        if cands[1..].iter().any(|(j, _)| rel_distance(&sb[best], &sb[*j]) > EQUIV_TOL) {
            return Err(Error::AmbiguousMatching { term: i });
        }
        used[best] = true;
    }
    Ok(true)
}

/// True iff the two decompositions have matching term products.
pub fn decomposition_equivalent<A, B>(a: &A, b: &B, sample_pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<bool>
where
    A: TermwiseKernel + ?Sized,
    B: TermwiseKernel + ?Sized,
{
    Ok(compare_decompositions(a, b, sample_pairs)? == Equivalence::TermwiseEquivalent)
}

/// The two-term Gaussian kernel on `R` with `Q₁` all ones and `Q₂ = e₂e₂ᵀ`
/// whose pointwise square is indefinite on `{0, 1}`.
pub fn counterexample_kernel() -> SeparableKernel {
    let q1 = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).expect("symmetric");
    let q2 = SymMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).expect("symmetric");
    SeparableKernel::new(vec![
        KernelTerm::new(ScalarKernel::gaussian(0.1).expect("valid shape"), q1),
        KernelTerm::new(ScalarKernel::gaussian(1.0).expect("valid shape"), q2),
    ])
    .expect("valid kernel")
}

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub centers: PointSet,
    pub base_gramian: DMatrix<f64>,
    pub base_eigenvalues: Vec<f64>,
    /// Gramian of `(x,y) ↦ k(x,y)²` with blocks in component order.
    pub square_gramian: DMatrix<f64>,
    /// The same matrix with the two components of every block swapped.
    pub square_gramian_swapped: DMatrix<f64>,
    pub square_eigenvalues: Vec<f64>,
}

impl CounterexampleReport {
    pub fn base_min_eigenvalue(&self) -> f64 {
        self.base_eigenvalues[0]
    }

    pub fn square_min_eigenvalue(&self) -> f64 {
        self.square_eigenvalues[0]
    }
}

pub fn product_counterexample() -> Result<CounterexampleReport> {
    let k = counterexample_kernel();
    let centers = PointSet::from_scalars(&[0.0, 1.0])?;
    let base = k.gramian(&centers)?;
    let square = k.hadamard_power(2)?.gramian(&centers)?;
    let ascending = |a: &DMatrix<f64>| -> Result<Vec<f64>> {
        let mut ev = linalg::sym_eig(&SymMatrix::symmetrized(a.clone()))?.eigenvalues.as_slice().to_vec();
        ev.reverse();
        Ok(ev)
    };
    let m = k.output_dim();
    let n = centers.len();
    let perm = |i: usize| (i / m) * m + (m - 1 - i % m);
    let swapped = DMatrix::from_fn(m * n, m * n, |i, j| square[(perm(i), perm(j))]);
    Ok(CounterexampleReport {
        base_eigenvalues: ascending(&base)?,
        square_eigenvalues: ascending(&square)?,
        centers,
        base_gramian: base,
        square_gramian: square,
        square_gramian_swapped: swapped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn sym(rows: &[Vec<f64>]) -> SymMatrix {
        SymMatrix::from_rows(rows).unwrap()
    }

    fn gauss(e: f64) -> ScalarKernel {
        ScalarKernel::gaussian(e).unwrap()
    }

    fn pairs(count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let dom = DomainBox::cube(1, -2.0, 2.0).unwrap();
        sampling::sample_pairs(&dom, count, &mut sampling::rng(seed))
    }

    fn rank_one(v: &[f64]) -> SymMatrix {
        SymMatrix::outer(&DVector::from_column_slice(v))
    }

    #[test]
    fn single_term_is_uncoupled() {
        let k = SeparableKernel::identity(gauss(1.0), 3).unwrap();
        let r = analyze(&k, 1e-10).unwrap();
        assert!(r.uncoupled && r.minimal());
        assert_eq!(r.ranks, vec![3]);
    }

    #[test]
    fn counterexample_pair_is_uncoupled_not_orthogonal() {
        let r = analyze(&counterexample_kernel(), 1e-10).unwrap();
        assert_eq!(r.ranks, vec![1, 1]);
        assert_eq!(r.rank_of_sum, 2);
        assert!(r.uncoupled);
        assert!(!r.orthogonal_products);
    }

    #[test]
    fn dependent_kernels_detected() {
        let k = SeparableKernel::new(vec![
            KernelTerm::new(gauss(1.0), rank_one(&[1.0, 0.0])),
            KernelTerm::new(gauss(1.0), rank_one(&[0.0, 1.0])),
        ])
        .unwrap();
        let r = analyze(&k, 1e-10).unwrap();
        assert!(!r.kernels_linearly_independent);
        assert!(r.q_linearly_independent);
        assert!(r.orthogonal_products && r.uncoupled);
    }

    #[test]
    fn commuting_examples() {
        let d1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let d2 = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 0.5]));
        assert!(commuting_family_check(&[d1.clone(), d2], 1e-12));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 4.0, -2.0]);
        assert!(commuting_family_check(&[DMatrix::identity(2, 2), a], 1e-12));
        let q1 = DMatrix::from_element(2, 2, 1.0);
        let q2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(!commuting_family_check(&[q1, q2], 1e-12));
    }

    #[test]
    fn diagonal_family_gives_permutation() {
        let fam = vec![SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]), SymMatrix::from_diagonal(&[0.0, 5.0, 1.0])];
        let p = simultaneous_diagonalize(&fam).unwrap();
        for c in 0..3 {
            let col = p.column(c);
            let hits = col.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-12).count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn single_matrix_eigenbasis() {
        let a = sym(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let p = simultaneous_diagonalize(std::slice::from_ref(&a)).unwrap();
        let d = p.transpose() * a.matrix() * &p;
        assert!(off_diagonal_norm(&d) < 1e-12);
    }

    #[test]
    fn orthogonal_rank_ones() {
        let s = 1.0 / 2f64.sqrt();
        let fam = vec![rank_one(&[s, s]), rank_one(&[s, -s])];
        let p = simultaneous_diagonalize(&fam).unwrap();
        let v = DVector::from_vec(vec![s, s]);
        let w = DVector::from_vec(vec![s, -s]);
        for target in [v, w] {
            let best = (0..2).map(|c| p.column(c).dot(&target).abs()).fold(0.0, f64::max);
            assert!((best - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_commuting_family_errors() {
        let fam = vec![sym(&[vec![1.0, 1.0], vec![1.0, 1.0]]), sym(&[vec![0.0, 0.0], vec![0.0, 1.0]])];
        assert!(matches!(simultaneous_diagonalize(&fam), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn scaled_identity_recovers_one_term() {
        let k = SeparableKernel::identity(gauss(0.7), 3).unwrap();
        let rec = recover_uncoupled(&k, &pairs(50, 1)).unwrap();
        assert_eq!(rec.groups.len(), 1);
        assert_eq!(rec.groups[0].len(), 3);
        assert!((rec.terms[0].coeff.matrix() - DMatrix::identity(3, 3)).norm() < 1e-10);
        assert!(decomposition_equivalent(&k, &rec, &pairs(30, 2)).unwrap());
    }

    #[test]
    fn distinct_componentwise_shapes_give_unit_terms() {
        let k = SeparableKernel::new(vec![
            KernelTerm::new(gauss(1.931), rank_one(&[1.0, 0.0, 0.0])),
            KernelTerm::new(gauss(1.0), rank_one(&[0.0, 1.0, 0.0])),
            KernelTerm::new(gauss(1.600), rank_one(&[0.0, 0.0, 1.0])),
        ])
        .unwrap();
        let rec = recover_uncoupled(&k, &pairs(200, 3)).unwrap();
        assert_eq!(rec.groups.len(), 3);
        for t in &rec.terms {
            let q = t.coeff.matrix();
            let unit = (0..3).any(|i| {
                let mut e = DMatrix::zeros(3, 3);
                e[(i, i)] = 1.0;
                (q - e).norm() < 1e-10
            });
            assert!(unit);
        }
        assert!(rec.max_cross_product_norm() < 1e-12);
    }

    #[test]
    fn equal_shapes_collapse_groups() {
        let s = 1.0 / 3f64.sqrt();
        let v1 = [s, s, s];
        let v2 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
        let v3 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
        let k4 = SeparableKernel::new(vec![
            KernelTerm::new(gauss(0.244), rank_one(&v1)),
            KernelTerm::new(gauss(3.393), rank_one(&v2)),
            KernelTerm::new(gauss(3.393), rank_one(&v3)),
        ])
        .unwrap();
        let k3 = SeparableKernel::new(vec![
            KernelTerm::new(gauss(0.244), rank_one(&v1)),
            KernelTerm::new(gauss(3.393), rank_one(&v2).add(&rank_one(&v3))),
        ])
        .unwrap();
        let rec = recover_uncoupled(&k4, &pairs(200, 4)).unwrap();
        let mut sizes: Vec<usize> = rec.groups.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
        assert!(decomposition_equivalent(&k3, &rec, &pairs(40, 5)).unwrap());
        assert!(!decomposition_equivalent(&k4, &k3, &pairs(40, 5)).unwrap());
        assert_eq!(compare_decompositions(&k4, &k3, &pairs(40, 5)).unwrap(), Equivalence::SameKernel);
    }

    #[test]
    fn permuted_and_rescaled_terms_are_equivalent() {
        let a = counterexample_kernel();
        let t = a.terms();
        let b = SeparableKernel::new(vec![
            KernelTerm::new(t[1].scalar.clone(), t[1].coeff.clone()),
            KernelTerm::new(t[0].scalar.clone(), t[0].coeff.clone()),
        ])
        .unwrap();
        assert!(decomposition_equivalent(&a, &a, &pairs(20, 6)).unwrap());
        assert!(decomposition_equivalent(&a, &b, &pairs(20, 6)).unwrap());
    }

    #[test]
    fn length_mismatch_is_false() {
        let a = counterexample_kernel();
        let b = SeparableKernel::identity(gauss(1.0), 2).unwrap();
        assert!(!decomposition_equivalent(&a, &b, &pairs(10, 7)).unwrap());
    }

    #[test]
    fn counterexample_spectrum() {
        let r = product_counterexample().unwrap();
        assert!(r.base_min_eigenvalue() > 0.0);
        let l = r.square_min_eigenvalue();
        assert!((-0.049..=-0.039).contains(&l), "{l}");
        let d = &r.square_gramian_swapped;
        assert_eq!(d[(0, 0)], 5.0);
        assert_eq!(d[(0, 1)], 3.0);
        assert_eq!(d[(1, 1)], 2.0);
        let e = |t: f64| t.exp();
        let expected = 2.0 * e(-0.2) + 2.0 * e(-1.1) + e(-2.0);
        assert!((d[(0, 2)] - expected).abs() < 1e-14);
        assert!((d[(1, 3)] - 2.0 * e(-0.2)).abs() < 1e-14);
    }
}
