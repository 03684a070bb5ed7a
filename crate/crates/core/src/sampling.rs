//! Seeded random sampling. All randomness in the crate comes from
//! `ChaCha8Rng::seed_from_u64`, which produces the same stream on every
//! platform.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::PointSet;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An axis-aligned box `Π [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub bounds: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("domain needs at least one dimension".into()));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite())) {
            return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { bounds })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }

    pub fn sample_points(&self, n: usize, rng: &mut SeededRng) -> PointSet {
        let mut coords = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            coords.extend(self.sample(rng));
        }
        PointSet::new(self.dim(), coords).expect("box samples are finite")
    }

    /// Tensor grid with `per_dim` equidistant points per axis, endpoints
    /// included; the last axis varies fastest.
    pub fn grid(&self, per_dim: usize) -> PointSet {
        assert!(per_dim >= 2, "grid needs at least two points per axis");
        let d = self.dim();
        let total = per_dim.pow(d as u32);
        let mut coords = Vec::with_capacity(total * d);
        for idx in 0..total {
            let mut rem = idx;
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                let i = rem % per_dim;
                rem /= per_dim;
                let (lo, hi) = self.bounds[k];
                p[k] = lo + (hi - lo) * i as f64 / (per_dim - 1) as f64;
            }
            coords.extend(p);
        }
        PointSet::new(d, coords).expect("grid points are finite")
    }
}

/// A direction drawn uniformly from the unit sphere in `R^m`.
pub fn unit_vector(m: usize, rng: &mut SeededRng) -> DVector<f64> {
    loop {
        let v = standard_normal_vector(m, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

pub fn standard_normal_vector(m: usize, rng: &mut SeededRng) -> DVector<f64> {
    DVector::from_fn(m, |_, _| rng.sample(StandardNormal))
}

pub fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(m: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    let g = standard_normal_matrix(m, m, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Random pairs `(x, y)` drawn uniformly from `domain`.
pub fn sample_pairs(domain: &DomainBox, count: usize, rng: &mut SeededRng) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..count)
        .map(|_| (domain.sample(rng), domain.sample(rng)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let b = DomainBox::cube(2, -1.0, 1.0).unwrap();
        let p1 = b.sample_points(10, &mut rng(7));
        let p2 = b.sample_points(10, &mut rng(7));
        assert_eq!(p1, p2);
        assert!(p1.coords().iter().all(|c| (-1.0..=1.0).contains(c)));
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = random_orthogonal(4, &mut rng(1));
        assert!((q.transpose() * &q - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn grid_layout() {
        let g = DomainBox::cube(2, 0.0, 1.0).unwrap().grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(1), &[0.0, 0.5]);
        assert_eq!(g.point(8), &[1.0, 1.0]);
    }

    #[test]
    fn invalid_boxes() {
        assert!(DomainBox::new(vec![]).is_err());
        assert!(DomainBox::new(vec![(1.0, 1.0)]).is_err());
    }
}
