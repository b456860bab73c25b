//! Minimum-variance (Markowitz, zero risk appetite, long-only) portfolio
//! over a window covariance matrix.
//!
//! The problem `min w'Σw  s.t.  Σw_i = 1, w_i >= 0` is solved by pairwise
//! coordinate descent on the simplex (move mass from the most expensive held
//! asset to the cheapest asset by exact line search), with an equality-
//! constrained Newton polish on the current support. The stopping rule is
//! the KKT gap `max_{w_i>0} g_i - min_j g_j` with `g = 2Σw`.

use ndarray::Array2;

use crate::corrwin::{window_covariance_matrix, WindowSpec};
use crate::error::{Error, Result};
use crate::ingest::ReturnPanel;
use crate::linalg::{solve, sym_eigen};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T> {
    pub matrix: Array2<T>,
}

impl<T: Scalar> CovarianceMatrix<T> {
    /// Checks symmetry and numerical positive semi-definiteness.
    pub fn new(matrix: Array2<T>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::param("covariance matrix must be square"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("covariance matrix has non-finite entries"));
        }
        let scale = matrix.iter().fold(T::one(), |m, &x| m.max(x.abs()));
        let sym_tol = T::lit(1e-12) * scale;
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > sym_tol {
                    return Err(Error::param("covariance matrix is not symmetric"));
                }
            }
        }
        let eig = sym_eigen(&matrix)?;
        if eig.values.last().is_some_and(|&v| v < -T::lit(1e-10) * scale) {
            return Err(Error::param("covariance matrix is not positive semi-definite"));
        }
        Ok(CovarianceMatrix { matrix })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `w' Σ w`
    pub fn quadratic_form(&self, w: &[T]) -> T {
        let n = self.size();
        let mut acc = T::zero();
        for i in 0..n {
            let mut row = T::zero();
            for j in 0..n {
                row = row + self.matrix[[i, j]] * w[j];
            }
            acc = acc + w[i] * row;
        }
        acc
    }
}

/// Population covariance of the window's log returns.
pub fn window_covariance<T: Scalar>(returns: &ReturnPanel<T>, window: &WindowSpec) -> CovarianceMatrix<T> {
    CovarianceMatrix {
        matrix: window_covariance_matrix(returns, window),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioResult<T> {
    pub weights: Vec<T>,
    /// `w' Σ w`
    pub risk: T,
    pub kkt_residual: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    /// KKT gap target, relative to the largest variance.
    pub relative_tol: f64,
    /// Absolute ceiling on the KKT gap.
    pub absolute_tol: f64,
    pub max_iter: usize,
}

impl QpOptions {
    pub fn for_scalar<T: Scalar>() -> Self {
        QpOptions {
            relative_tol: T::QP_TOL,
            absolute_tol: 1e-8,
            max_iter: 200_000,
        }
    }
}

fn gradient<T: Scalar>(sigma: &Array2<T>, w: &[T]) -> Vec<T> {
    let n = w.len();
    (0..n)
        .map(|i| T::lit(2.0) * (0..n).fold(T::zero(), |a, j| a + sigma[[i, j]] * w[j]))
        .collect()
}

/// `max_{w_i>0} g_i - min_j g_j`, plus the indices attaining both.
fn kkt_gap<T: Scalar>(w: &[T], g: &[T]) -> (T, usize, usize) {
    let mut hi = None::<usize>;
    let mut lo = 0usize;
    for i in 0..w.len() {
        if w[i] > T::zero() && hi.is_none_or(|h| g[i] > g[h]) {
            hi = Some(i);
        }
        if g[i] < g[lo] {
            lo = i;
        }
    }
    let hi = hi.expect("weights sum to one");
    ((g[hi] - g[lo]).max(T::zero()), hi, lo)
}

/// Newton step on the support: solve the KKT system restricted to `w_i > 0`.
fn polish<T: Scalar>(sigma: &Array2<T>, w: &[T]) -> Option<Vec<T>> {
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > T::zero()).collect();
    let k = support.len();
    let mut a = Array2::<T>::zeros((k + 1, k + 1));
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[[r, c]] = T::lit(2.0) * sigma[[i, j]];
        }
        a[[r, k]] = -T::one();
        a[[k, r]] = T::one();
    }
    let mut b = vec![T::zero(); k + 1];
    b[k] = T::one();
    let x = solve(a, b)?;
    if x[..k].iter().any(|&v| !(v > T::zero())) {
        return None;
    }
    let mut out = vec![T::zero(); w.len()];
    for (r, &i) in support.iter().enumerate() {
        out[i] = x[r];
    }
    let total: T = out.iter().copied().sum();
    out.iter_mut().for_each(|v| *v = *v / total);
    Some(out)
}

pub fn min_risk_portfolio<T: Scalar>(cov: &CovarianceMatrix<T>) -> Result<PortfolioResult<T>> {
    min_risk_portfolio_with(cov, QpOptions::for_scalar::<T>())
}

pub fn min_risk_portfolio_with<T: Scalar>(cov: &CovarianceMatrix<T>, opts: QpOptions) -> Result<PortfolioResult<T>> {
    let n = cov.size();
    if n < 2 {
        return Err(Error::param("portfolio needs at least two assets"));
    }
    if cov.matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("covariance matrix has non-finite entries"));
    }
    let sigma = &cov.matrix;
    let max_var = sigma.diag().iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let tol = (T::lit(opts.relative_tol) * max_var).min(T::lit(opts.absolute_tol));

    let mut w = vec![T::one() / T::from_usize_lossy(n); n];
    let mut g = gradient(sigma, &w);
    let mut iterations = 0;
    loop {
        let (gap, hi, lo) = kkt_gap(&w, &g);
        if gap <= tol {
            break;
        }
        if iterations >= opts.max_iter {
            if gap <= T::lit(opts.absolute_tol) {
                break;
            }
            return Err(Error::NoConvergence("minimum-risk QP", opts.max_iter));
        }
        iterations += 1;

        // move mass t from `hi` to `lo`
        let curvature = sigma[[hi, hi]] + sigma[[lo, lo]] - T::lit(2.0) * sigma[[hi, lo]];
        let step = if curvature > T::zero() {
            gap / (T::lit(2.0) * curvature)
        } else {
            T::infinity()
        };
        let t = if step >= w[hi] { w[hi] } else { step };
        if t == w[hi] {
            w[hi] = T::zero();
        } else {
            w[hi] = w[hi] - t;
        }
        w[lo] = w[lo] + t;
        for (i, gi) in g.iter_mut().enumerate() {
            *gi = *gi + T::lit(2.0) * t * (sigma[[i, lo]] - sigma[[i, hi]]);
        }

        if iterations % 64 == 0 {
            g = gradient(sigma, &w);
            if let Some(p) = polish(sigma, &w) {
                let pg = gradient(sigma, &p);
                if kkt_gap(&p, &pg).0 < kkt_gap(&w, &g).0 {
                    w = p;
                    g = pg;
                }
            }
        }
    }
    // final clean-up: try an exact solve on the identified support
    if let Some(p) = polish(sigma, &w) {
        let pg = gradient(sigma, &p);
        if kkt_gap(&p, &pg).0 < kkt_gap(&w, &g).0 {
            w = p;
        }
    }
    let g = gradient(sigma, &w);
    let (kkt_residual, _, _) = kkt_gap(&w, &g);
    let risk = cov.quadratic_form(&w).max(T::zero());
    Ok(PortfolioResult {
        weights: w,
        risk,
        kkt_residual,
        iterations,
    })
}
