//! Small dense linear-algebra kernels: a cyclic Jacobi eigensolver for
//! symmetric matrices and a pivoted Gaussian elimination.
//!
//! Both are deterministic: the sweep order is fixed and no parallel
//! reductions are used, so results are bit-identical across runs.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Array2<T>,
}

impl<T: Scalar> SymEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k).to_vec()
    }
}

/// Cyclic Jacobi rotations. Equal eigenvalues keep the order of the diagonal
/// positions they converged on, which makes tie-breaking reproducible.
pub fn sym_eigen<T: Scalar>(matrix: &Array2<T>) -> Result<SymEigen<T>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::param("eigen-decomposition needs a square matrix"));
    }
    let mut a = matrix.clone();
    let mut v = Array2::<T>::eye(n);
    let frob = a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let tol = T::lit(T::EIGEN_TOL) * frob;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= tol || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                    T::one() / (T::lit(2.0) * theta)
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                a[[p, p]] = app - t * apq;
                a[[q, q]] = aqq + t * apq;
                a[[p, q]] = T::zero();
                a[[q, p]] = T::zero();
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[[r, p]];
                        let arq = a[[r, q]];
                        let new_rp = c * arp - s * arq;
                        let new_rq = s * arp + c * arq;
                        a[[r, p]] = new_rp;
                        a[[p, r]] = new_rp;
                        a[[r, q]] = new_rq;
                        a[[q, r]] = new_rq;
                    }
                }
                for r in 0..n {
                    let vrp = v[[r, p]];
                    let vrq = v[[r, q]];
                    v[[r, p]] = c * vrp - s * vrq;
                    v[[r, q]] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi eigensolver", MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower diagonal position first on exact ties
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| a[[k, k]]).collect();
    let mut vectors = Array2::<T>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, dst]] = v[[r, src]];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `eps * max|a|`.
pub fn solve<T: Scalar>(mut a: Array2<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.nrows(), n);
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return None;
    }
    let floor = scale * T::epsilon() * T::from_usize_lossy(n.max(1)) * T::lit(16.0);
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[[r, col]].abs() > a[[piv, col]].abs() {
                piv = r;
            }
        }
        if a[[piv, col]].abs() <= floor {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap([piv, k], [col, k]);
            }
            b.swap(piv, col);
        }
        let d = a[[col, col]];
        for r in (col + 1)..n {
            let f = a[[r, col]] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                a[[r, k]] = a[[r, k]] - f * a[[col, k]];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in (r + 1)..n {
            acc = acc - a[[r, k]] * x[k];
        }
        x[r] = acc / a[[r, r]];
    }
    Some(x)
}
