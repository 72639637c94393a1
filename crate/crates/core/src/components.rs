//! Physical building blocks: beamsplitters, phase-insensitive amplifiers,
//! losses, the two-mode squeezer behind the EPR source, and displacements.

use crate::channel::GaussianChannel;
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::state::GaussianState;

/// Declarative description of a single optical component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentSpec<T> {
    /// Intensity transmittance `t ∈ [0, 1]`.
    Beamsplitter(T),
    /// Intensity gain `G ≥ 1`, quantum limited.
    Amplifier(T),
    /// Transmission efficiency `η ∈ [0, 1]`.
    Loss(T),
    /// Squeezing parameter `r ≥ 0`.
    TwoModeSqueezer(T),
    Displacement(T, T),
}

impl<T: Real> ComponentSpec<T> {
    pub fn build(&self, n0: T) -> Result<GaussianChannel<T>> {
        match *self {
            Self::Beamsplitter(t) => beamsplitter(t, n0),
            Self::Amplifier(g) => amplifier(g, n0),
            Self::Loss(eta) => loss(eta, n0),
            Self::TwoModeSqueezer(r) => two_mode_squeezer(r, n0),
            Self::Displacement(dx, dy) => displacement(dx, dy, n0),
        }
    }
}

fn unit_interval<T: Real>(name: &str, v: T) -> Result<()> {
    if !(v >= T::zero() && v <= T::one()) {
        return invalid(format!("{name} = {v} outside [0, 1]"));
    }
    Ok(())
}

/// Lossless two-port mixer. With input modes `(u, v)` the outputs are
/// `(√t·u + √(1−t)·v, −√(1−t)·u + √t·v)` on both quadratures.
pub fn beamsplitter<T: Real>(t: T, n0: T) -> Result<GaussianChannel<T>> {
    unit_interval("beamsplitter transmittance", t)?;
    let a = t.sqrt();
    let b = (T::one() - t).sqrt();
    let z = T::zero();
    #[rustfmt::skip]
    let m = Matrix::from_row_slice(4, 4, &[
         a,  z,  b,  z,
         z,  a,  z,  b,
        -b,  z,  a,  z,
         z, -b,  z,  a,
    ]);
    GaussianChannel::new_unchecked(m, Matrix::zeros(4, 4), vec![T::zero(); 4], n0)
}

/// Phase-insensitive quantum-limited amplifier: `T = √G·I`, `N = (G−1)·N₀·I`.
pub fn amplifier<T: Real>(gain: T, n0: T) -> Result<GaussianChannel<T>> {
    if !(gain >= T::one() && gain.is_finite()) {
        return invalid(format!("amplifier gain {gain} must be ≥ 1"));
    }
    GaussianChannel::new_unchecked(
        Matrix::scaled_identity(2, gain.sqrt()),
        Matrix::scaled_identity(2, (gain - T::one()) * n0),
        vec![T::zero(); 2],
        n0,
    )
}

/// Pure loss: `T = √η·I`, `N = (1−η)·N₀·I`.
pub fn loss<T: Real>(eta: T, n0: T) -> Result<GaussianChannel<T>> {
    unit_interval("loss efficiency", eta)?;
    GaussianChannel::new_unchecked(
        Matrix::scaled_identity(2, eta.sqrt()),
        Matrix::scaled_identity(2, (T::one() - eta) * n0),
        vec![T::zero(); 2],
        n0,
    )
}

/// Two-mode squeezer correlating X and anticorrelating Y of the two modes.
pub fn two_mode_squeezer<T: Real>(r: T, n0: T) -> Result<GaussianChannel<T>> {
    if !(r >= T::zero() && r.is_finite()) {
        return invalid(format!("squeezing parameter {r} must be ≥ 0"));
    }
    let c = r.cosh();
    let s = r.sinh();
    let z = T::zero();
    #[rustfmt::skip]
    let m = Matrix::from_row_slice(4, 4, &[
        c,  z,  s,  z,
        z,  c,  z, -s,
        s,  z,  c,  z,
        z, -s,  z,  c,
    ]);
    GaussianChannel::new_unchecked(m, Matrix::zeros(4, 4), vec![T::zero(); 4], n0)
}

/// Two-mode squeezed vacuum. Each arm has variance `cosh(2r)·N₀`;
/// `Var(X_a − X_b) = Var(Y_a + Y_b) = 2e^{−2r}·N₀`.
pub fn epr_source<T: Real>(r: T, n0: T) -> Result<GaussianState<T>> {
    let squeezer = two_mode_squeezer(r, n0)?;
    GaussianState::vacuum(2, n0)?.apply(&squeezer, &[0, 1])
}

pub fn displacement<T: Real>(dx: T, dy: T, n0: T) -> Result<GaussianChannel<T>> {
    if !(dx.is_finite() && dy.is_finite()) {
        return invalid("displacement must be finite");
    }
    GaussianChannel::new_unchecked(Matrix::identity(2), Matrix::zeros(2, 2), vec![dx, dy], n0)
}
