//! Classical (Torgerson) multidimensional scaling.

use ndarray::Array2;

use crate::corrwin::DistanceFrame;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap<T> {
    /// `N x dims`, centred at the origin.
    pub coordinates: Array2<T>,
    /// Leading eigenvalues of the centred Gram matrix, descending, clamped at 0.
    pub eigenvalues: Vec<T>,
    /// Sum of the magnitudes of the negative eigenvalues that were dropped.
    pub clamped_mass: T,
    /// Fewer than `dims` strictly positive eigenvalues.
    pub rank_deficient: bool,
}

impl<T: Scalar> EmbeddingMap<T> {
    /// Largest absolute error between input distances and embedded distances.
    pub fn max_distance_error(&self, dist: &Array2<T>) -> T {
        let n = self.coordinates.nrows();
        let mut worst = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self
                    .coordinates
                    .row(i)
                    .iter()
                    .zip(self.coordinates.row(j).iter())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>()
                    .sqrt();
                worst = worst.max((d - dist[[i, j]]).abs());
            }
        }
        worst
    }
}

pub fn classical_mds<T: Scalar>(dist: &DistanceFrame<T>, dims: usize) -> Result<EmbeddingMap<T>> {
    classical_mds_matrix(&dist.matrix, dims)
}

/// MDS on a bare distance matrix.
pub fn classical_mds_matrix<T: Scalar>(d: &Array2<T>, dims: usize) -> Result<EmbeddingMap<T>> {
    if !(dims == 2 || dims == 3) {
        return Err(Error::param(format!("embedding dimension must be 2 or 3, got {dims}")));
    }
    let n = d.nrows();
    if d.ncols() != n || n == 0 {
        return Err(Error::param("distance matrix must be square and non-empty"));
    }
    let sq = d.mapv(|x| x * x);
    let nf = T::from_usize_lossy(n);
    let row_mean: Vec<T> = (0..n).map(|i| sq.row(i).sum() / nf).collect();
    let grand = row_mean.iter().copied().sum::<T>() / nf;
    let half = T::lit(0.5);
    let b = Array2::from_shape_fn((n, n), |(i, j)| -half * (sq[[i, j]] - row_mean[i] - row_mean[j] + grand));
    let eig = sym_eigen(&b)?;

    let scale = eig.values.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::one());
    let cutoff = T::lit(1e3 * T::EIGEN_TOL) * scale;
    let clamped_mass = eig.values.iter().filter(|&&v| v < T::zero()).map(|v| v.abs()).sum();

    let mut coordinates = Array2::zeros((n, dims));
    let mut eigenvalues = Vec::with_capacity(dims);
    let mut rank_deficient = false;
    for k in 0..dims {
        let lambda = eig.values.get(k).copied().unwrap_or(T::zero());
        if lambda <= cutoff {
            rank_deficient = true;
            eigenvalues.push(T::zero());
            continue;
        }
        eigenvalues.push(lambda);
        let mut v = eig.vector(k);
        let lead = v.iter().copied().find(|x| x.abs() > T::lit(T::EIGEN_TOL.sqrt())).unwrap_or(T::one());
        if lead < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let s = lambda.sqrt();
        for i in 0..n {
            coordinates[[i, k]] = v[i] * s;
        }
    }
    Ok(EmbeddingMap {
        coordinates,
        eigenvalues,
        clamped_mass,
        rank_deficient,
    })
}
