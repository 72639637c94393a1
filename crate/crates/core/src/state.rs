//! Multimode Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are ordered X₁,Y₁,X₂,Y₂,… and normalized so that
//! `[X, Y] = 2i·N₀`: the vacuum has `ΔX² = ΔY² = N₀`. Means are in units of
//! √N₀, covariances in units of N₀.

use std::collections::BTreeSet;

use crate::channel::GaussianChannel;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

/// Addresses one quadrature of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadratureIndex {
    pub mode: usize,
    pub axis: Axis,
}

impl QuadratureIndex {
    pub fn x(mode: usize) -> Self {
        Self { mode, axis: Axis::X }
    }

    pub fn y(mode: usize) -> Self {
        Self { mode, axis: Axis::Y }
    }

    /// Row of this quadrature in the phase-space vector.
    #[inline]
    pub fn row(self) -> usize {
        2 * self.mode
            + match self.axis {
                Axis::X => 0,
                Axis::Y => 1,
            }
    }
}

/// Classical feed-forward: displace `target` by `gain` times the outcome of
/// a homodyne measurement of `measured`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedForward<T> {
    pub measured: QuadratureIndex,
    pub target: QuadratureIndex,
    pub gain: T,
}

#[derive(Clone, PartialEq)]
pub struct GaussianState<T> {
    mean: Vec<T>,
    cov: Matrix<T>,
    n0: T,
}

impl<T: std::fmt::Debug> std::fmt::Debug for GaussianState<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianState")
            .field("n_modes", &(self.mean.len() / 2))
            .field("n0", &self.n0)
            .field("mean", &self.mean)
            .field("cov", &self.cov)
            .finish()
    }
}

impl<T: Real> GaussianState<T> {
    /// Validated constructor: dimensions, symmetry and the uncertainty
    /// principle (all symplectic eigenvalues ≥ N₀ up to tolerance).
    pub fn new(mean: Vec<T>, cov: Matrix<T>, n0: T) -> Result<Self> {
        let state = Self::new_unchecked(mean, cov, n0)?;
        state.check_physical()?;
        Ok(state)
    }

    fn new_unchecked(mean: Vec<T>, cov: Matrix<T>, n0: T) -> Result<Self> {
        if !(n0 > T::zero() && n0.is_finite()) {
            return invalid("N₀ must be positive and finite");
        }
        if mean.is_empty() || !mean.len().is_multiple_of(2) {
            return invalid(format!(
                "mean vector length {} is not a positive even number",
                mean.len()
            ));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().any(|m| !m.is_finite()) || cov.as_slice().iter().any(|c| !c.is_finite()) {
            return invalid("state contains non-finite entries");
        }
        cov.check_symmetric()?;
        Ok(Self {
            mean,
            cov: cov.symmetrized(),
            n0,
        })
    }

    pub fn vacuum(n_modes: usize, n0: T) -> Result<Self> {
        if n_modes == 0 {
            return invalid("vacuum needs at least one mode");
        }
        Self::new_unchecked(
            vec![T::zero(); 2 * n_modes],
            Matrix::scaled_identity(2 * n_modes, n0),
            n0,
        )
    }

    /// Coherent state: a displaced single-mode vacuum.
    pub fn coherent(x_mean: T, y_mean: T, n0: T) -> Result<Self> {
        if !(x_mean.is_finite() && y_mean.is_finite()) {
            return invalid("coherent amplitude must be finite");
        }
        Self::new_unchecked(vec![x_mean, y_mean], Matrix::scaled_identity(2, n0), n0)
    }

    /// Single-mode thermal state with quadrature variance `variance` (≥ N₀).
    pub fn thermal(variance: T, n0: T) -> Result<Self> {
        Self::new(vec![T::zero(); 2], Matrix::scaled_identity(2, variance), n0)
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix<T> {
        &self.cov
    }

    #[inline]
    pub fn n0(&self) -> T {
        self.n0
    }

    pub fn mean_of(&self, q: QuadratureIndex) -> T {
        self.mean[q.row()]
    }

    pub fn variance(&self, q: QuadratureIndex) -> T {
        self.cov[(q.row(), q.row())]
    }

    pub fn covariance(&self, a: QuadratureIndex, b: QuadratureIndex) -> T {
        self.cov[(a.row(), b.row())]
    }

    /// Symplectic eigenvalues, ascending, one per mode.
    ///
    /// Computed as the singular values of `V^{1/2} Ω V^{1/2}`, which is
    /// antisymmetric with eigenvalues `±iν`.
    pub fn symplectic_eigenvalues(&self) -> Vec<T> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + i·N₀·Ω`; non-negative
    /// exactly when every symplectic eigenvalue is at least N₀.
    pub fn uncertainty_margin(&self) -> T {
        let imag = Matrix::symplectic_form(self.n_modes()).scale(self.n0);
        self.cov.hermitian_eigenvalues(&imag)[0]
    }

    /// Enforces `V + i·N₀·Ω ⪰ 0`.
    ///
    /// The Hermitian form is tested instead of the symplectic eigenvalues
    /// directly: for strongly squeezed states the latter are ill-conditioned
    /// (entries of order `e^{2r}·N₀` make them move by `~e^{2r}·ε`), while
    /// Hermitian eigenvalues only move by `ε·‖V‖`. The tolerance therefore
    /// scales with `max(N₀, max|V_ij|)`.
    pub fn check_physical(&self) -> Result<()> {
        let scale = self.n0.max(self.cov.max_abs());
        let margin = self.uncertainty_margin();
        if margin < -T::physicality_tol() * scale {
            return Err(Error::Unphysical {
                what: "state (uncertainty principle violated)",
                min_eigenvalue: margin.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Block direct sum: `self` occupies the first modes.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        ensure_same_n0(self.n0, other.n0)?;
        let mut mean = self.mean.clone();
        mean.extend_from_slice(&other.mean);
        Ok(Self {
            mean,
            cov: self.cov.direct_sum(&other.cov),
            n0: self.n0,
        })
    }

    /// Reduced state on `keep` (in the given order).
    pub fn partial_state(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return invalid("partial_state needs at least one mode to keep");
        }
        self.check_modes(keep)?;
        let rows = mode_rows(keep);
        Ok(Self {
            mean: rows.iter().map(|&r| self.mean[r]).collect(),
            cov: self.cov.submatrix(&rows, &rows),
            n0: self.n0,
        })
    }

    /// Shifts the mean by `d` (length 2·n_modes).
    pub fn displace(&self, d: &[T]) -> Result<Self> {
        if d.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: d.len(),
            });
        }
        let mut out = self.clone();
        for (m, &x) in out.mean.iter_mut().zip(d) {
            *m = *m + x;
        }
        Ok(out)
    }

    /// Conditions on a homodyne outcome of `q` and removes the measured mode.
    ///
    /// Gaussian conditioning on a single quadrature: with `σ = Var(q)`,
    /// `μ ← μ + V_{·q}(outcome − μ_q)/σ` and `V ← V − V_{·q}V_{q·}/σ`.
    pub fn homodyne_condition(&self, q: QuadratureIndex, outcome: T) -> Result<Self> {
        if self.n_modes() < 2 {
            return invalid("homodyne conditioning needs at least two modes");
        }
        self.check_modes(&[q.mode])?;
        let k = q.row();
        let sigma = self.cov[(k, k)];
        if sigma <= T::zero() {
            return Err(Error::Internal(format!(
                "measured quadrature variance {sigma} is not positive"
            )));
        }
        let keep: Vec<usize> = (0..self.n_modes()).filter(|&m| m != q.mode).collect();
        let rows = mode_rows(&keep);
        let innovation = outcome - self.mean[k];
        let mean = rows
            .iter()
            .map(|&r| self.mean[r] + self.cov[(r, k)] * innovation / sigma)
            .collect();
        let cov = Matrix::from_fn(rows.len(), rows.len(), |i, j| {
            let (ri, rj) = (rows[i], rows[j]);
            self.cov[(ri, rj)] - self.cov[(ri, k)] * self.cov[(k, rj)] / sigma
        });
        Self::new_unchecked(mean, cov, self.n0)
    }

    /// Unconditional state after homodyne measurements whose outcomes drive
    /// displacements on other modes. Averaged over outcomes this is a linear
    /// map on the joint state; the measured modes are then discarded.
    pub fn feed_forward(&self, corrections: &[FeedForward<T>]) -> Result<Self> {
        let measured: BTreeSet<usize> = corrections.iter().map(|c| c.measured.mode).collect();
        let all: Vec<usize> = corrections
            .iter()
            .flat_map(|c| [c.measured.mode, c.target.mode])
            .collect();
        self.check_modes_in_range(&all)?;
        if corrections.iter().any(|c| measured.contains(&c.target.mode)) {
            return invalid("feed-forward target is a measured mode");
        }
        let keep: Vec<usize> = (0..self.n_modes())
            .filter(|m| !measured.contains(m))
            .collect();
        if keep.is_empty() {
            return invalid("feed-forward leaves no modes");
        }
        let dim = self.mean.len();
        let mut map = Matrix::identity(dim);
        for c in corrections {
            let (t, m) = (c.target.row(), c.measured.row());
            map[(t, m)] = map[(t, m)] + c.gain;
        }
        let rows = mode_rows(&keep);
        let map = map.submatrix(&rows, &(0..dim).collect::<Vec<_>>());
        let state = Self::new_unchecked(map.mul_vec(&self.mean), map.congruence(&self.cov), self.n0)?;
        state.check_physical()?;
        Ok(state)
    }

    /// Applies `channel` to `targets`.
    ///
    /// When the channel is square the outputs replace the targets in place.
    /// Otherwise the result lists the untouched modes first, in their
    /// original order, followed by the channel outputs.
    pub fn apply(&self, channel: &GaussianChannel<T>, targets: &[usize]) -> Result<Self> {
        ensure_same_n0(self.n0, channel.n0())?;
        if targets.len() != channel.in_modes() {
            return Err(Error::DimensionMismatch {
                expected: channel.in_modes(),
                got: targets.len(),
            });
        }
        self.check_modes(targets)?;

        let n = self.n_modes();
        let spectators: Vec<usize> = (0..n).filter(|m| !targets.contains(m)).collect();
        let out_modes = channel.out_modes();
        let (total, out_pos, spec_pos): (usize, Vec<usize>, Vec<usize>) =
            if out_modes == targets.len() {
                (n, targets.to_vec(), spectators.clone())
            } else {
                let s = spectators.len();
                (s + out_modes, (s..s + out_modes).collect(), (0..s).collect())
            };

        let mut t = Matrix::zeros(2 * total, 2 * n);
        let mut noise = Matrix::zeros(2 * total, 2 * total);
        let mut shift = vec![T::zero(); 2 * total];
        for (&src, &dst) in spectators.iter().zip(&spec_pos) {
            t[(2 * dst, 2 * src)] = T::one();
            t[(2 * dst + 1, 2 * src + 1)] = T::one();
        }
        let ct = channel.transform();
        let cn = channel.added_noise();
        let cs = channel.shift();
        for (o, &dst) in out_pos.iter().enumerate() {
            for a in 0..2 {
                let row = 2 * dst + a;
                let local = 2 * o + a;
                for (i, &src) in targets.iter().enumerate() {
                    for b in 0..2 {
                        t[(row, 2 * src + b)] = ct[(local, 2 * i + b)];
                    }
                }
                shift[row] = cs[local];
                for (o2, &dst2) in out_pos.iter().enumerate() {
                    for b in 0..2 {
                        noise[(row, 2 * dst2 + b)] = cn[(local, 2 * o2 + b)];
                    }
                }
            }
        }
        let mean: Vec<T> = t
            .mul_vec(&self.mean)
            .into_iter()
            .zip(shift)
            .map(|(m, s)| m + s)
            .collect();
        let cov = &t.congruence(&self.cov) + &noise;
        let state = Self::new_unchecked(mean, cov, self.n0)?;
        state.check_physical()?;
        Ok(state)
    }

    fn check_modes(&self, modes: &[usize]) -> Result<()> {
        self.check_modes_in_range(modes)?;
        let distinct: BTreeSet<_> = modes.iter().collect();
        if distinct.len() != modes.len() {
            return invalid(format!("mode list {modes:?} has duplicates"));
        }
        Ok(())
    }

    fn check_modes_in_range(&self, modes: &[usize]) -> Result<()> {
        if let Some(&bad) = modes.iter().find(|&&m| m >= self.n_modes()) {
            return invalid(format!(
                "mode {bad} out of range for a {}-mode state",
                self.n_modes()
            ));
        }
        Ok(())
    }
}

/// Symplectic eigenvalues of a covariance matrix, ascending.
///
/// With `V = L·Lᵀ`, the antisymmetric `Lᵀ·Ω·L` has eigenvalues `±iν`; its
/// Gram matrix carries each `ν²` twice. Falls back to `V^{1/2}` when `V` is
/// singular.
pub fn symplectic_eigenvalues<T: Real>(cov: &Matrix<T>) -> Vec<T> {
    let n = cov.nrows() / 2;
    let omega = Matrix::symplectic_form(n);
    let m = match cov.cholesky() {
        Ok(l) => &(&l.transpose() * &omega) * &l,
        Err(_) => {
            let root = cov.sqrt_psd();
            &(&root * &omega) * &root
        }
    };
    let gram = &m.transpose() * &m;
    let sq = gram.symmetric_eigenvalues();
    sq.chunks(2)
        .map(|p| ((p[0] + p[1]) * T::lit(0.5)).max(T::zero()).sqrt())
        .collect()
}

pub(crate) fn mode_rows(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

pub(crate) fn ensure_same_n0<T: Real>(a: T, b: T) -> Result<()> {
    if (a - b).abs() > T::symmetry_tol() * a.abs().max(b.abs()) {
        return invalid(format!("mismatched shot-noise units: {a} vs {b}"));
    }
    Ok(())
}
