//! Fidelity formulas, noise/fidelity conversions, cloning limits and the
//! classical / quantum-fax / teleportation classification.

use std::fmt;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::state::GaussianState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    /// `F ≤ 1/2`: reachable by measure-and-resend.
    Classical,
    /// `1/2 < F ≤ 2/3`: entanglement helped, but a better copy may exist.
    QuantumFax,
    /// `F > 2/3`: no better copy can exist anywhere else.
    Teleportation,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Classical => "classical",
            Region::QuantumFax => "quantum_fax",
            Region::Teleportation => "teleportation",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityVerdict<T> {
    pub fidelity: T,
    pub region: Region,
}

/// Coherent-state fidelity of a unity-gain device with equivalent input
/// noises `noise_x`, `noise_y`: `2 / √((2 + N_X/N₀)(2 + N_Y/N₀))`.
pub fn fidelity_unity_gain<T: Real>(noise_x: T, noise_y: T, n0: T) -> Result<T> {
    if !(noise_x >= T::zero() && noise_y >= T::zero()) {
        return invalid(format!("equivalent noises ({noise_x}, {noise_y}) must be ≥ 0"));
    }
    let two = T::lit(2.0);
    Ok(two / ((two + noise_x / n0) * (two + noise_y / n0)).sqrt())
}

/// Inverse of [`fidelity_unity_gain`] on the symmetric diagonal:
/// `N = (2/F − 2)·N₀`.
pub fn noise_from_fidelity<T: Real>(fidelity: T, n0: T) -> Result<T> {
    if !(fidelity > T::zero() && fidelity <= T::one()) {
        return invalid(format!("fidelity {fidelity} outside (0, 1]"));
    }
    let two = T::lit(2.0);
    Ok((two / fidelity - two) * n0)
}

/// Overlap `⟨ψ|ρ|ψ⟩` between a pure single-mode Gaussian `input` and an
/// arbitrary single-mode Gaussian `output`.
///
/// With `Σ = V_out + V_in` and `δ` the mean difference,
/// `F = 2N₀/√det Σ · exp(−½ δᵀ Σ⁻¹ δ)`. For a coherent input and matched
/// means this is the unity-gain formula with `V_out = (N₀ + N)·I`.
pub fn gaussian_fidelity<T: Real>(input: &GaussianState<T>, output: &GaussianState<T>) -> Result<T> {
    if input.n_modes() != 1 || output.n_modes() != 1 {
        return invalid("gaussian_fidelity compares single-mode states");
    }
    let n0 = input.n0();
    let purity_gap = (input.cov().determinant() - n0 * n0).abs();
    if purity_gap > T::lit(1e3) * T::physicality_tol() * n0 * n0 {
        return invalid("reference state for gaussian_fidelity must be pure");
    }
    let sigma: Matrix<T> = input.cov() + output.cov();
    let inv = sigma.inverse()?;
    let delta: Vec<T> = output
        .mean()
        .iter()
        .zip(input.mean())
        .map(|(&o, &i)| o - i)
        .collect();
    let quad = delta
        .iter()
        .zip(inv.mul_vec(&delta))
        .fold(T::zero(), |acc, (&d, w)| acc + d * w);
    let det = sigma.determinant();
    Ok(T::lit(2.0) * n0 / det.sqrt() * (-T::lit(0.5) * quad).exp())
}

/// Symmetric `1 → M` cloning limit: `(2(M−1)/M · N₀, M/(2M−1))`.
pub fn cloning_limit<T: Real>(copies: usize, n0: T) -> Result<(T, T)> {
    if copies == 0 {
        return invalid("cloning limit needs M ≥ 1");
    }
    let m = T::lit(copies as f64);
    let noise = T::lit(2.0) * (m - T::one()) / m * n0;
    let fidelity = m / (T::lit(2.0) * m - T::one());
    Ok((noise, fidelity))
}

/// Boundaries are exclusive on the upper side: teleportation requires
/// `F > 2/3` strictly, and `F = 1/2` is still classical.
pub fn classify<T: Real>(fidelity: T) -> Result<FidelityVerdict<T>> {
    if !(fidelity >= T::zero() && fidelity <= T::one()) {
        return invalid(format!("fidelity {fidelity} outside [0, 1]"));
    }
    let region = if fidelity <= T::lit(0.5) {
        Region::Classical
    } else if fidelity <= T::lit(2.0) / T::lit(3.0) {
        Region::QuantumFax
    } else {
        Region::Teleportation
    };
    Ok(FidelityVerdict { fidelity, region })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unity_gain_reference_points() {
        assert_eq!(fidelity_unity_gain(0.0f64, 0.0, 1.0).unwrap(), 1.0);
        assert!((fidelity_unity_gain(1.0f64, 1.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((fidelity_unity_gain(2.0f64, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // N₀ is symbolic
        assert!((fidelity_unity_gain(0.5f64, 0.5, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(fidelity_unity_gain(-0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn noise_from_fidelity_reference_points() {
        assert!((noise_from_fidelity(0.58f64, 1.0).unwrap() - 1.448).abs() < 1e-3);
        assert!((noise_from_fidelity(0.74f64, 1.0).unwrap() - 0.703).abs() < 1e-3);
        assert_eq!(noise_from_fidelity(1.0f64, 1.0).unwrap(), 0.0);
        assert!(noise_from_fidelity(0.0f64, 1.0).is_err());
        assert!(noise_from_fidelity(1.01f64, 1.0).is_err());
    }

    #[test]
    fn cloning_limit_values() {
        assert_eq!(cloning_limit::<f64>(1, 1.0).unwrap(), (0.0, 1.0));
        let (n, f) = cloning_limit::<f64>(2, 1.0).unwrap();
        assert!((n - 1.0).abs() < 1e-15 && (f - 2.0 / 3.0).abs() < 1e-15);
        let (n, f) = cloning_limit::<f64>(1_000_000, 1.0).unwrap();
        assert!((n - 2.0).abs() < 1e-5 && (f - 0.5).abs() < 1e-6);
        assert!(cloning_limit::<f64>(0, 1.0).is_err());
    }

    #[test]
    fn classify_regions() {
        assert_eq!(classify(0.58).unwrap().region, Region::QuantumFax);
        assert_eq!(classify(0.74).unwrap().region, Region::Teleportation);
        assert_eq!(classify(0.3).unwrap().region, Region::Classical);
        assert_eq!(classify(0.5).unwrap().region, Region::Classical);
        assert_eq!(classify(2.0 / 3.0).unwrap().region, Region::QuantumFax);
        assert_eq!(classify(2.0 / 3.0 + 1e-6).unwrap().region, Region::Teleportation);
        assert!(classify(1.1).is_err());
        assert!(classify(-0.1).is_err());
    }

    #[test]
    fn identical_coherent_states_have_unit_fidelity() {
        let a = GaussianState::coherent(1.5, -0.5, 1.0).unwrap();
        assert!((gaussian_fidelity::<f64>(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_fidelity_requires_pure_reference() {
        let th = GaussianState::thermal(2.0, 1.0).unwrap();
        let v = GaussianState::vacuum(1, 1.0).unwrap();
        assert!(gaussian_fidelity(&th, &v).is_err());
        assert!(gaussian_fidelity(&v, &th).is_ok());
    }
}
