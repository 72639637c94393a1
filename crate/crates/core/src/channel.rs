//! Gaussian channels: `mean → T·mean + d`, `cov → T·cov·Tᵀ + N`.

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::state::{ensure_same_n0, mode_rows};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel<T> {
    in_modes: usize,
    out_modes: usize,
    transform: Matrix<T>,
    added_noise: Matrix<T>,
    shift: Vec<T>,
    n0: T,
}

impl<T: Real> GaussianChannel<T> {
    /// Validated constructor. Rejects channels whose added noise is too small
    /// to respect the uncertainty principle:
    /// `N + i·N₀·(Ω_out − T·Ω_in·Tᵀ) ⪰ 0`.
    pub fn new(transform: Matrix<T>, added_noise: Matrix<T>, n0: T) -> Result<Self> {
        let out = transform.nrows();
        Self::with_shift(transform, added_noise, vec![T::zero(); out], n0)
    }

    pub fn with_shift(
        transform: Matrix<T>,
        added_noise: Matrix<T>,
        shift: Vec<T>,
        n0: T,
    ) -> Result<Self> {
        let ch = Self::new_unchecked(transform, added_noise, shift, n0)?;
        ch.check_physical()?;
        Ok(ch)
    }

    pub(crate) fn new_unchecked(
        transform: Matrix<T>,
        added_noise: Matrix<T>,
        shift: Vec<T>,
        n0: T,
    ) -> Result<Self> {
        if !(n0 > T::zero() && n0.is_finite()) {
            return invalid("N₀ must be positive and finite");
        }
        let (rows, cols) = (transform.nrows(), transform.ncols());
        if rows == 0 || cols == 0 || rows % 2 != 0 || cols % 2 != 0 {
            return invalid(format!("transform shape {rows}x{cols} is not 2·out × 2·in"));
        }
        if added_noise.nrows() != rows || added_noise.ncols() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: added_noise.nrows(),
            });
        }
        if shift.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: shift.len(),
            });
        }
        let finite = transform
            .as_slice()
            .iter()
            .chain(added_noise.as_slice())
            .chain(&shift)
            .all(|x| x.is_finite());
        if !finite {
            return invalid("channel contains non-finite entries");
        }
        added_noise.check_symmetric()?;
        Ok(Self {
            in_modes: cols / 2,
            out_modes: rows / 2,
            transform,
            added_noise: added_noise.symmetrized(),
            shift,
            n0,
        })
    }

    pub fn identity(n_modes: usize, n0: T) -> Result<Self> {
        if n_modes == 0 {
            return invalid("identity channel needs at least one mode");
        }
        let dim = 2 * n_modes;
        Self::new_unchecked(
            Matrix::identity(dim),
            Matrix::zeros(dim, dim),
            vec![T::zero(); dim],
            n0,
        )
    }

    /// `in_modes → in_modes + extra`: passes the inputs through and appends
    /// `extra` vacuum ancillas.
    pub fn append_vacuum(in_modes: usize, extra: usize, n0: T) -> Result<Self> {
        if in_modes == 0 {
            return invalid("append_vacuum needs at least one input mode");
        }
        let (din, dout) = (2 * in_modes, 2 * (in_modes + extra));
        let t = Matrix::from_fn(dout, din, |i, j| if i == j { T::one() } else { T::zero() });
        let noise = Matrix::from_fn(dout, dout, |i, j| {
            if i == j && i >= din {
                n0
            } else {
                T::zero()
            }
        });
        Self::new_unchecked(t, noise, vec![T::zero(); dout], n0)
    }

    #[inline]
    pub fn in_modes(&self) -> usize {
        self.in_modes
    }

    #[inline]
    pub fn out_modes(&self) -> usize {
        self.out_modes
    }

    pub fn transform(&self) -> &Matrix<T> {
        &self.transform
    }

    pub fn added_noise(&self) -> &Matrix<T> {
        &self.added_noise
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    #[inline]
    pub fn n0(&self) -> T {
        self.n0
    }

    /// Spectrum of `N + i·N₀·(Ω_out − T·Ω_in·Tᵀ)`, ascending. A physical
    /// channel has no eigenvalue below zero; a quantum-limited one has a zero.
    pub fn physicality_spectrum(&self) -> Vec<T> {
        let omega_out = Matrix::symplectic_form(self.out_modes);
        let omega_in = Matrix::symplectic_form(self.in_modes);
        let mapped = &(&self.transform * &omega_in) * &self.transform.transpose();
        let imag = (&omega_out - &mapped).scale(self.n0);
        self.added_noise.hermitian_eigenvalues(&imag)
    }

    pub fn check_physical(&self) -> Result<()> {
        let scale = self.n0.max(self.added_noise.max_abs());
        let tol = T::physicality_tol() * scale;
        let psd_min = self.added_noise.symmetric_eigenvalues()[0];
        if psd_min < -tol {
            return Err(Error::Unphysical {
                what: "channel added noise (not positive semidefinite)",
                min_eigenvalue: psd_min.to_f64_lossy(),
            });
        }
        let min = self.physicality_spectrum()[0];
        if min < -tol {
            return Err(Error::Unphysical {
                what: "channel (added noise below the quantum limit)",
                min_eigenvalue: min.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// True when the channel is a noiseless symplectic map (`TΩTᵀ = Ω`).
    pub fn is_symplectic(&self, tol: T) -> bool {
        if self.in_modes != self.out_modes || self.added_noise.max_abs() > tol {
            return false;
        }
        let omega = Matrix::symplectic_form(self.in_modes);
        let mapped = &(&self.transform * &omega) * &self.transform.transpose();
        (&mapped - &omega).max_abs() <= tol
    }

    /// `outer ∘ inner`: apply `inner` first.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        ensure_same_n0(outer.n0, inner.n0)?;
        if outer.in_modes != inner.out_modes {
            return Err(Error::DimensionMismatch {
                expected: outer.in_modes,
                got: inner.out_modes,
            });
        }
        let transform = &outer.transform * &inner.transform;
        let noise = &outer.transform.congruence(&inner.added_noise) + &outer.added_noise;
        let shift = outer
            .transform
            .mul_vec(&inner.shift)
            .into_iter()
            .zip(&outer.shift)
            .map(|(a, &b)| a + b)
            .collect();
        Self::new_unchecked(transform, noise, shift, outer.n0)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        Self::compose(next, self)
    }

    /// Parallel composition: `self` on the first modes, `other` on the rest.
    pub fn parallel(&self, other: &Self) -> Result<Self> {
        ensure_same_n0(self.n0, other.n0)?;
        let mut shift = self.shift.clone();
        shift.extend_from_slice(&other.shift);
        Self::new_unchecked(
            self.transform.direct_sum(&other.transform),
            self.added_noise.direct_sum(&other.added_noise),
            shift,
            self.n0,
        )
    }

    /// Lifts a square channel to act on `targets` of an `n_modes` register,
    /// identity elsewhere.
    pub fn embed(&self, n_modes: usize, targets: &[usize]) -> Result<Self> {
        if self.in_modes != self.out_modes {
            return invalid("only square channels can be embedded in place");
        }
        if targets.len() != self.in_modes {
            return Err(Error::DimensionMismatch {
                expected: self.in_modes,
                got: targets.len(),
            });
        }
        let mut seen = vec![false; n_modes];
        for &t in targets {
            if t >= n_modes || std::mem::replace(&mut seen[t], true) {
                return invalid(format!("bad embedding targets {targets:?} in {n_modes} modes"));
            }
        }
        let dim = 2 * n_modes;
        let rows = mode_rows(targets);
        let mut t = Matrix::identity(dim);
        let mut noise = Matrix::zeros(dim, dim);
        let mut shift = vec![T::zero(); dim];
        for (i, &ri) in rows.iter().enumerate() {
            for (j, &rj) in rows.iter().enumerate() {
                t[(ri, rj)] = self.transform[(i, j)];
                noise[(ri, rj)] = self.added_noise[(i, j)];
            }
            shift[ri] = self.shift[i];
        }
        Self::new_unchecked(t, noise, shift, self.n0)
    }

    /// Reorders modes: output mode `k` is input mode `order[k]`.
    pub fn permutation(order: &[usize], n0: T) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &o in order {
            if o >= n || std::mem::replace(&mut seen[o], true) {
                return invalid(format!("{order:?} is not a permutation"));
            }
        }
        let rows = mode_rows(order);
        let t = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            if rows[i] == j {
                T::one()
            } else {
                T::zero()
            }
        });
        Self::new_unchecked(t, Matrix::zeros(2 * n, 2 * n), vec![T::zero(); 2 * n], n0)
    }
}
