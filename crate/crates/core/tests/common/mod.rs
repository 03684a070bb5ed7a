//! Random kernels, point sets and families shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use mvk::kernels::{KernelTerm, PointSet, ScalarKernel, SeparableKernel};
use mvk::linalg::SymMatrix;
use mvk::sampling::{self, DomainBox, SeededRng};

pub fn gauss(shape: f64) -> ScalarKernel {
    ScalarKernel::gaussian(shape).unwrap()
}

/// Log-uniform in `[lo, hi]`.
pub fn log_uniform(lo: f64, hi: f64, rng: &mut SeededRng) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// `G Gᵀ` with `G` an `m × rank` standard normal matrix.
pub fn random_psd(m: usize, rank: usize, rng: &mut SeededRng) -> SymMatrix {
    let g = sampling::standard_normal_matrix(m, rank, rng);
    SymMatrix::symmetrized(&g * g.transpose())
}

/// Random Gaussian-term kernel with PSD coefficients. The first term has
/// full rank, so the kernel is strictly positive definite.
pub fn random_spd_kernel(m: usize, p: usize, rng: &mut SeededRng) -> SeparableKernel {
    let terms = (0..p)
        .map(|i| {
            let rank = if i == 0 { m } else { rng.random_range(1..=m) };
            let mut q = random_psd(m, rank, rng);
            if i == 0 {
                q = q.add(&SymMatrix::identity(m).scaled(0.5));
            }
            KernelTerm::new(gauss(log_uniform(0.5, 4.0, rng)), q)
        })
        .collect();
    SeparableKernel::new(terms).unwrap()
}

/// Points in `[−3,3]^d`, resampled until pairwise separation exceeds
/// `min_sep`.
pub fn spread_points(n: usize, d: usize, min_sep: f64, rng: &mut SeededRng) -> PointSet {
    spread_points_in(n, d, 3.0, min_sep, rng)
}

pub fn spread_points_in(n: usize, d: usize, half_width: f64, min_sep: f64, rng: &mut SeededRng) -> PointSet {
    let dom = DomainBox::cube(d, -half_width, half_width).unwrap();
    let mut pts = PointSet::empty(d);
    let mut attempts = 0;
    while pts.len() < n {
        attempts += 1;
        assert!(attempts < 100_000, "cannot place {n} points {min_sep} apart in dimension {d}");
        let x = dom.sample(rng);
        let far = pts
            .iter()
            .all(|p| p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > min_sep);
        if far {
            pts.push(&x).unwrap();
        }
    }
    pts
}

/// A kernel `Σ_l k_l Σ_{i∈G_l} α_i p_ip_iᵀ` with orthonormal `p_i`, a random
/// grouping of the `m` directions, distinct Gaussian shapes per group and
/// optionally one unused direction.
pub struct OrthogonalFamily {
    pub kernel: SeparableKernel,
    pub p: DMatrix<f64>,
    pub groups: Vec<Vec<usize>>,
}

pub fn random_orthogonal_family(m: usize, rng: &mut SeededRng) -> OrthogonalFamily {
    let p = sampling::random_orthogonal(m, rng);
    let used = if m > 1 && rng.random_bool(0.3) { m - 1 } else { m };
    let n_groups = rng.random_range(1..=used);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for i in 0..used {
        let g = if i < n_groups { i } else { rng.random_range(0..n_groups) };
        groups[g].push(i);
    }
    // Shapes on a ratio-1.6 ladder so that no two groups share a kernel.
    let base = log_uniform(0.3, 0.6, rng);
    let terms = groups
        .iter()
        .enumerate()
        .map(|(l, g)| {
            let mut q = SymMatrix::zeros(m);
            for &i in g {
                let v = p.column(i).into_owned();
                q = q.add(&SymMatrix::outer(&v).scaled(log_uniform(0.5, 2.0, rng)));
            }
            KernelTerm::new(gauss(base * 1.6f64.powi(l as i32)), q)
        })
        .collect();
    OrthogonalFamily {
        kernel: SeparableKernel::new(terms).unwrap(),
        p,
        groups,
    }
}

pub fn unit_direction(m: usize, rng: &mut SeededRng) -> DVector<f64> {
    sampling::unit_vector(m, rng)
}

/// Orthonormal basis of the range of a PSD matrix.
pub fn range_basis(q: &SymMatrix, tol: f64) -> DMatrix<f64> {
    let eig = mvk::linalg::sym_eig(q).unwrap();
    let thr = mvk::linalg::rank_threshold(&eig, tol);
    let cols: Vec<DVector<f64>> = (0..q.dim())
        .filter(|&i| eig.eigenvalues[i] > thr)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(q.dim(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
