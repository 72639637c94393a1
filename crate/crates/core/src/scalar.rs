//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the simulator is generic over.
///
/// Tolerances are attached to the type because a covariance check that is
/// meaningful in `f64` is pure rounding noise in `f32`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance for symmetry of covariance and noise matrices.
    const SYMMETRY_TOL: f64;
    /// Absolute tolerance (units of N₀) for uncertainty-principle checks.
    const PHYSICALITY_TOL: f64;
    /// Tolerance used by the Jacobi eigensolver to declare convergence.
    const EIGEN_TOL: f64;

    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn symmetry_tol() -> Self {
        Self::lit(Self::SYMMETRY_TOL)
    }

    fn physicality_tol() -> Self {
        Self::lit(Self::PHYSICALITY_TOL)
    }
}

impl Real for f64 {
    const SYMMETRY_TOL: f64 = 1e-12;
    const PHYSICALITY_TOL: f64 = 1e-9;
    const EIGEN_TOL: f64 = 1e-15;
}

impl Real for f32 {
    const SYMMETRY_TOL: f64 = 1e-5;
    const PHYSICALITY_TOL: f64 = 1e-4;
    const EIGEN_TOL: f64 = 1e-7;
}
