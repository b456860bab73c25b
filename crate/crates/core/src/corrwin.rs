//! Rolling windows over a return panel and the per-window correlation
//! structure: Pearson correlation, ultrametric distance, mean correlation and
//! eigen-entropy.

use std::sync::Arc;

use chrono::NaiveDate;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::ingest::ReturnPanel;
use crate::linalg::sym_eigen;
use crate::scalar::{xlnx, Scalar};

pub const DEFAULT_TAU: usize = 80;
pub const DEFAULT_SHIFT: usize = 20;

/// A window of `length` consecutive return days starting at `start_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub start_index: usize,
    pub length: usize,
    pub end_date: NaiveDate,
}

impl WindowSpec {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start_index..self.start_index + self.length
    }
}

/// Start indices `0, shift, 2*shift, ...` of every full window.
pub fn window_starts(num_return_days: usize, tau: usize, shift: usize) -> Result<Vec<usize>> {
    if tau < 2 {
        return Err(Error::param(format!("window length {tau} must be at least 2")));
    }
    if shift < 1 {
        return Err(Error::param("window shift must be at least 1"));
    }
    if num_return_days < tau {
        return Err(Error::param(format!(
            "{num_return_days} return days is shorter than the window length {tau}"
        )));
    }
    Ok((0..=(num_return_days - tau)).step_by(shift).collect())
}

/// Windows over `returns`, each stamped with the date of its last return.
pub fn enumerate_windows<T: Scalar>(returns: &ReturnPanel<T>, tau: usize, shift: usize) -> Result<Vec<WindowSpec>> {
    Ok(window_starts(returns.num_days(), tau, shift)?
        .into_iter()
        .map(|start| WindowSpec {
            start_index: start,
            length: tau,
            end_date: returns.dates[start + tau - 1],
        })
        .collect())
}

/// Population covariance `<r_i r_j> - <r_i><r_j>` over the window,
/// evaluated on centred series.
pub fn window_covariance_matrix<T: Scalar>(returns: &ReturnPanel<T>, window: &WindowSpec) -> Array2<T> {
    let n = returns.num_indices();
    let len = T::from_usize_lossy(window.length);
    let slice = returns.returns.slice(ndarray::s![.., window.range()]);
    let means: Vec<T> = (0..n)
        .map(|i| slice.row(i).iter().fold(T::zero(), |a, &x| a + x) / len)
        .collect();
    let centred = Array2::from_shape_fn(slice.dim(), |(i, t)| slice[[i, t]] - means[i]);
    let mut cov = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let s = centred
                .row(i)
                .iter()
                .zip(centred.row(j))
                .fold(T::zero(), |a, (&x, &y)| a + x * y)
                / len;
            cov[[i, j]] = s;
            cov[[j, i]] = s;
        }
    }
    cov
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFrame<T> {
    pub end_date: NaiveDate,
    pub tau: usize,
    pub labels: Arc<[String]>,
    pub matrix: Array2<T>,
    /// Rows whose series had zero variance in the window; their off-diagonal
    /// correlations are set to 0.
    pub zero_variance: Vec<usize>,
}

impl<T: Scalar> CorrelationFrame<T> {
    /// Wraps an explicit correlation matrix (fixtures, external input).
    pub fn from_matrix(matrix: Array2<T>) -> Self {
        let n = matrix.nrows();
        CorrelationFrame {
            end_date: NaiveDate::default(),
            tau: 0,
            labels: (0..n).map(|i| format!("V{i}")).collect::<Vec<_>>().into(),
            matrix,
            zero_variance: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix[[i, j]]
    }
}

/// Pearson correlation of every index pair over `window`.
pub fn correlation_frame<T: Scalar>(returns: &ReturnPanel<T>, window: &WindowSpec) -> CorrelationFrame<T> {
    let cov = window_covariance_matrix(returns, window);
    correlation_from_covariance(&cov, window.end_date, window.length, returns.labels.clone())
}

pub(crate) fn correlation_from_covariance<T: Scalar>(
    cov: &Array2<T>,
    end_date: NaiveDate,
    tau: usize,
    labels: Arc<[String]>,
) -> CorrelationFrame<T> {
    let n = cov.nrows();
    let max_var = cov.diag().iter().fold(T::zero(), |m, &v| m.max(v));
    let floor = max_var * T::epsilon() * T::lit(64.0);
    let sd: Vec<Option<T>> = cov
        .diag()
        .iter()
        .map(|&v| (v > floor && v > T::min_positive_value()).then(|| v.sqrt()))
        .collect();
    let zero_variance: Vec<usize> = (0..n).filter(|&i| sd[i].is_none()).collect();
    let mut matrix = Array2::<T>::zeros((n, n));
    for i in 0..n {
        matrix[[i, i]] = T::one();
        for j in (i + 1)..n {
            let c = match (sd[i], sd[j]) {
                (Some(si), Some(sj)) => (cov[[i, j]] / (si * sj)).max(-T::one()).min(T::one()),
                _ => T::zero(),
            };
            matrix[[i, j]] = c;
            matrix[[j, i]] = c;
        }
    }
    CorrelationFrame {
        end_date,
        tau,
        labels,
        matrix,
        zero_variance,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFrame<T> {
    pub end_date: NaiveDate,
    pub tau: usize,
    pub labels: Arc<[String]>,
    pub matrix: Array2<T>,
}

impl<T: Scalar> DistanceFrame<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix[[i, j]]
    }
}

/// `D_ij = sqrt(2 (1 - C_ij))`.
#[inline]
pub fn ultrametric<T: Scalar>(c: T) -> T {
    (T::lit(2.0) * (T::one() - c)).max(T::zero()).sqrt()
}

pub fn distance_frame<T: Scalar>(frame: &CorrelationFrame<T>) -> DistanceFrame<T> {
    let mut matrix = frame.matrix.mapv(ultrametric);
    for i in 0..frame.size() {
        matrix[[i, i]] = T::zero();
    }
    DistanceFrame {
        end_date: frame.end_date,
        tau: frame.tau,
        labels: frame.labels.clone(),
        matrix,
    }
}

/// Mean of the strictly upper-triangular correlations.
pub fn mean_correlation<T: Scalar>(frame: &CorrelationFrame<T>) -> T {
    let n = frame.size();
    let mut acc = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            acc = acc + frame.matrix[[i, j]];
        }
    }
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        T::zero()
    } else {
        acc / T::from_usize_lossy(pairs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEntropy<T> {
    pub entropy: T,
    pub top_eigenvalue: T,
    /// Set when the largest eigenvalue is (numerically) repeated.
    pub degenerate: bool,
}

/// Shannon entropy (nats) of the normalised magnitudes of the principal
/// eigenvector of the correlation matrix.
pub fn eigen_entropy<T: Scalar>(frame: &CorrelationFrame<T>) -> Result<EigenEntropy<T>> {
    let n = frame.size();
    if n < 2 {
        return Err(Error::param("eigen-entropy needs at least two indices"));
    }
    let eig = sym_eigen(&frame.matrix)?;
    let top = eig.values[0];
    let gap_tol = T::lit(T::EIGEN_TOL.sqrt()) * top.abs().max(T::one());
    let degenerate = eig.values[0] - eig.values[1] <= gap_tol;
    let x = eig.vector(0);
    let total: T = x.iter().map(|v| v.abs()).sum();
    let entropy = -x.iter().map(|v| xlnx(v.abs() / total)).sum::<T>();
    Ok(EigenEntropy {
        entropy: entropy.max(T::zero()),
        top_eigenvalue: top,
        degenerate,
    })
}
