//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the pipeline can run on (`f32` or `f64`).
///
/// The associated constants carry precision-dependent tolerances so that
/// iterative routines (eigen-solvers, the portfolio QP, transport) stop at a
/// level the type can actually reach.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Relative tolerance for the off-diagonal norm in Jacobi sweeps.
    const EIGEN_TOL: f64;
    /// Relative KKT tolerance for the simplex-constrained QP.
    const QP_TOL: f64;
    /// Relative mass tolerance in optimal transport.
    const MASS_TOL: f64;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const EIGEN_TOL: f64 = 1e-6;
    const QP_TOL: f64 = 1e-5;
    const MASS_TOL: f64 = 1e-6;
}

impl Scalar for f64 {
    const EIGEN_TOL: f64 = 1e-14;
    const QP_TOL: f64 = 1e-11;
    const MASS_TOL: f64 = 1e-13;
}

/// `0 * ln 0 := 0` convention for entropy sums.
#[inline]
pub(crate) fn xlnx<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x * x.ln()
    } else {
        T::zero()
    }
}

/// Arithmetic mean, `None` for an empty iterator.
pub(crate) fn mean<T: Scalar, I: IntoIterator<Item = T>>(it: I) -> Option<T> {
    let mut n = 0usize;
    let mut acc = T::zero();
    for x in it {
        acc = acc + x;
        n += 1;
    }
    (n > 0).then(|| acc / T::from_usize_lossy(n))
}
