//! Cloning machines built from an amplifier and a beamsplitter fan-out, and
//! the equivalent-input-noise analysis used to test them against the
//! duplication and `1 → M` bounds.

use crate::channel::GaussianChannel;
use crate::components::{amplifier, beamsplitter};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::state::GaussianState;

/// Anything that maps one input mode to a fixed number of output modes.
pub trait Device<T: Real> {
    fn n0(&self) -> T;
    fn outputs(&self) -> usize;
    fn respond(&self, input: &GaussianState<T>) -> Result<GaussianState<T>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClonerCircuit<T> {
    copies: usize,
    channel: GaussianChannel<T>,
    label: String,
}

impl<T: Real> ClonerCircuit<T> {
    pub fn new(channel: GaussianChannel<T>, label: impl Into<String>) -> Result<Self> {
        if channel.in_modes() != 1 {
            return invalid("a cloner has exactly one input mode");
        }
        channel.check_physical()?;
        Ok(Self {
            copies: channel.out_modes(),
            channel,
            label: label.into(),
        })
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn channel(&self) -> &GaussianChannel<T> {
        &self.channel
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T: Real> Device<T> for ClonerCircuit<T> {
    fn n0(&self) -> T {
        self.channel.n0()
    }

    fn outputs(&self) -> usize {
        self.copies
    }

    fn respond(&self, input: &GaussianState<T>) -> Result<GaussianState<T>> {
        if input.n_modes() != 1 {
            return invalid("cloner input must be a single mode");
        }
        input.apply(&self.channel, &[0])
    }
}

/// Amplifier of gain 2 followed by a 50/50 split against vacuum.
pub fn duplicator<T: Real>(n0: T) -> Result<ClonerCircuit<T>> {
    let mut c = cloner_1_to_m(2, n0)?;
    c.label = "duplicator".into();
    Ok(c)
}

/// Amplifier of gain `M` followed by a balanced cascade of `M − 1`
/// beamsplitters.
///
/// Stage `k` mixes the remaining carrier (second port) with a fresh vacuum
/// (first port) on `beamsplitter(1/rem)`, where `rem = M − k` outputs are
/// still to be produced. The second output port is peeled off as copy `k`,
/// the first carries the remainder. With the carrier on the second port both
/// outputs keep a positive gain.
pub fn cloner_1_to_m<T: Real>(copies: usize, n0: T) -> Result<ClonerCircuit<T>> {
    if copies == 0 {
        return invalid("a cloner needs at least one copy");
    }
    let mut ch = amplifier(T::lit(copies as f64), n0)?;
    for k in 0..copies - 1 {
        let rem = copies - k;
        ch = ch.then(&GaussianChannel::append_vacuum(k + 1, 1, n0)?)?;
        let bs = beamsplitter(T::one() / T::lit(rem as f64), n0)?.embed(k + 2, &[k + 1, k])?;
        ch = ch.then(&bs)?;
    }
    ClonerCircuit::new(ch, format!("1->{copies} cloner"))
}

/// Amplifier of gain `G` followed by one beamsplitter of transmittance `t`.
/// Output 0 has gain `√(Gt)`, output 1 has gain `√(G(1−t))`.
pub fn amplifier_split_cloner<T: Real>(gain: T, t: T, n0: T) -> Result<ClonerCircuit<T>> {
    if !(t > T::zero() && t < T::one()) {
        return invalid(format!("split transmittance {t} outside (0, 1)"));
    }
    let ch = amplifier(gain, n0)?
        .then(&GaussianChannel::append_vacuum(1, 1, n0)?)?
        .then(&beamsplitter(t, n0)?.embed(2, &[1, 0])?)?;
    ClonerCircuit::new(ch, format!("amplifier G={gain} split t={t}"))
}

/// Coherent probe states used to fit a device's linear response.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEnsemble<T> {
    means: Vec<(T, T)>,
}

impl<T: Real> ProbeEnsemble<T> {
    pub fn new(means: Vec<(T, T)>) -> Result<Self> {
        if means.len() < 3 {
            return invalid("probe ensemble needs at least 3 coherent states");
        }
        if means.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return invalid("probe means must be finite");
        }
        let (x0, y0) = means[0];
        let scale = means
            .iter()
            .fold(T::zero(), |acc, &(x, y)| acc.max((x - x0).abs()).max((y - y0).abs()));
        let mut area = T::zero();
        for &(xi, yi) in &means[1..] {
            for &(xj, yj) in &means[1..] {
                area = area.max(((xi - x0) * (yj - y0) - (yi - y0) * (xj - x0)).abs());
            }
        }
        if scale == T::zero() || area <= T::lit(1e-9) * scale * scale {
            return invalid("probe means are collinear; gains cannot be fitted");
        }
        Ok(Self { means })
    }

    /// `(0,0), (d,0), (0,d), (d,d)` with `d = 10·√N₀`.
    pub fn standard(n0: T) -> Self {
        let d = T::lit(10.0) * n0.sqrt();
        let z = T::zero();
        Self {
            means: vec![(z, z), (d, z), (z, d), (d, d)],
        }
    }

    pub fn means(&self) -> &[(T, T)] {
        &self.means
    }

    pub fn states(&self, n0: T) -> Result<Vec<GaussianState<T>>> {
        self.means
            .iter()
            .map(|&(x, y)| GaussianState::coherent(x, y, n0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputNoise<T> {
    pub gain_x: T,
    pub gain_y: T,
    /// Equivalent input noise on X, units of N₀.
    pub noise_x: T,
    pub noise_y: T,
}

/// Per-output gains and equivalent input noises, plus pairwise correlations
/// of the added noises referred to the input (`⟨B_i B_j⟩ / (g_i g_j)`).
/// The diagonal of `corr_x`/`corr_y` repeats the per-output noises.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport<T> {
    outputs: Vec<OutputNoise<T>>,
    corr_x: Matrix<T>,
    corr_y: Matrix<T>,
    n0: T,
}

impl<T: Real> NoiseReport<T> {
    /// Builds a report directly. Used for hand-made fixtures; physical
    /// devices go through [`equivalent_noise`].
    pub fn from_parts(
        outputs: Vec<OutputNoise<T>>,
        corr_x: Matrix<T>,
        corr_y: Matrix<T>,
        n0: T,
    ) -> Result<Self> {
        let m = outputs.len();
        if m == 0 {
            return invalid("a noise report needs at least one output");
        }
        for c in [&corr_x, &corr_y] {
            if c.nrows() != m || c.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: c.nrows(),
                });
            }
        }
        Ok(Self {
            outputs,
            corr_x,
            corr_y,
            n0,
        })
    }

    /// Unity-gain report with uncorrelated outputs and the given noises.
    pub fn uncorrelated(noises: &[(T, T)], n0: T) -> Result<Self> {
        let outputs: Vec<_> = noises
            .iter()
            .map(|&(nx, ny)| OutputNoise {
                gain_x: T::one(),
                gain_y: T::one(),
                noise_x: nx,
                noise_y: ny,
            })
            .collect();
        let cx: Vec<T> = noises.iter().map(|n| n.0).collect();
        let cy: Vec<T> = noises.iter().map(|n| n.1).collect();
        Self::from_parts(outputs, Matrix::from_diagonal(&cx), Matrix::from_diagonal(&cy), n0)
    }

    pub fn outputs(&self) -> &[OutputNoise<T>] {
        &self.outputs
    }

    pub fn output(&self, i: usize) -> &OutputNoise<T> {
        &self.outputs[i]
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn corr_x(&self) -> &Matrix<T> {
        &self.corr_x
    }

    pub fn corr_y(&self) -> &Matrix<T> {
        &self.corr_y
    }

    pub fn n0(&self) -> T {
        self.n0
    }

    /// Report restricted to output `i`.
    pub fn single(&self, i: usize) -> Self {
        Self {
            outputs: vec![self.outputs[i]],
            corr_x: Matrix::from_diagonal(&[self.corr_x[(i, i)]]),
            corr_y: Matrix::from_diagonal(&[self.corr_y[(i, i)]]),
            n0: self.n0,
        }
    }

    /// Mean correlation of output `i` with every other output, zero for a
    /// single-output report.
    pub fn mean_corr(&self, i: usize) -> (T, T) {
        let m = self.outputs.len();
        if m < 2 {
            return (T::zero(), T::zero());
        }
        let (mut sx, mut sy) = (T::zero(), T::zero());
        for j in (0..m).filter(|&j| j != i) {
            sx = sx + self.corr_x[(i, j)];
            sy = sy + self.corr_y[(i, j)];
        }
        let d = T::lit((m - 1) as f64);
        (sx / d, sy / d)
    }

    /// True when every output carries the same noises to within `tol·N₀`.
    pub fn is_symmetric(&self, tol: T) -> bool {
        let first = self.outputs[0];
        let lim = tol * self.n0;
        self.outputs.iter().all(|o| {
            (o.noise_x - first.noise_x).abs() <= lim && (o.noise_y - first.noise_y).abs() <= lim
        })
    }
}

/// Fits gains and equivalent input noises of `device` from its response to
/// a coherent probe ensemble.
pub fn equivalent_noise<T: Real, D: Device<T> + ?Sized>(
    device: &D,
    probes: &ProbeEnsemble<T>,
) -> Result<NoiseReport<T>> {
    let n0 = device.n0();
    let mut means = Vec::with_capacity(probes.means().len());
    let mut cov = None;
    for input in probes.states(n0)? {
        let out = device.respond(&input)?;
        if out.n_modes() != device.outputs() {
            return Err(Error::DimensionMismatch {
                expected: device.outputs(),
                got: out.n_modes(),
            });
        }
        means.push(out.mean().to_vec());
        cov.get_or_insert_with(|| out.cov().clone());
    }
    let cov = cov.expect("probe ensemble is non-empty");
    report_from_moments(probes, &means, &cov, (n0, n0), n0)
}

/// Shared extraction of a [`NoiseReport`] from output moments.
///
/// `output_means[p]` is the output mean vector for probe `p`, `output_cov`
/// the output covariance (identical for every coherent probe of a Gaussian
/// device), and `input_var` the probes' own `(ΔX_in², ΔY_in²)`.
pub fn report_from_moments<T: Real>(
    probes: &ProbeEnsemble<T>,
    output_means: &[Vec<T>],
    output_cov: &Matrix<T>,
    input_var: (T, T),
    n0: T,
) -> Result<NoiseReport<T>> {
    let pm = probes.means();
    if output_means.len() != pm.len() {
        return Err(Error::DimensionMismatch {
            expected: pm.len(),
            got: output_means.len(),
        });
    }
    let dim = output_cov.nrows();
    if dim == 0 || !dim.is_multiple_of(2) || output_means.iter().any(|m| m.len() != dim) {
        return invalid("output moments have inconsistent dimensions");
    }

    // least squares fit of each output quadrature on (1, x_in, y_in)
    let mut normal = Matrix::<T>::zeros(3, 3);
    for &(x, y) in pm {
        let row = [T::one(), x, y];
        for i in 0..3 {
            for j in 0..3 {
                normal[(i, j)] = normal[(i, j)] + row[i] * row[j];
            }
        }
    }
    let normal_inv = normal.inverse()?;
    let fit = |q: usize| -> [T; 3] {
        let mut rhs = [T::zero(); 3];
        for (&(x, y), m) in pm.iter().zip(output_means) {
            let row = [T::one(), x, y];
            for i in 0..3 {
                rhs[i] = rhs[i] + row[i] * m[q];
            }
        }
        let c = normal_inv.mul_vec(&rhs);
        [c[0], c[1], c[2]]
    };

    let m = dim / 2;
    let mut gx = Vec::with_capacity(m);
    let mut gy = Vec::with_capacity(m);
    for i in 0..m {
        gx.push(fit(2 * i)[1]);
        gy.push(fit(2 * i + 1)[2]);
    }
    let floor = T::epsilon().sqrt();
    if let Some(i) = (0..m).find(|&i| gx[i].abs() < floor || gy[i].abs() < floor) {
        return invalid(format!("output {i} has zero gain; noise cannot be referred to the input"));
    }

    let corr = |gains: &[T], offset: usize, var_in: T| {
        Matrix::from_fn(m, m, |i, j| {
            let g = gains[i] * gains[j];
            (output_cov[(2 * i + offset, 2 * j + offset)] - g * var_in) / g
        })
    };
    let corr_x = corr(&gx, 0, input_var.0);
    let corr_y = corr(&gy, 1, input_var.1);
    let outputs = (0..m)
        .map(|i| OutputNoise {
            gain_x: gx[i],
            gain_y: gy[i],
            noise_x: corr_x[(i, i)],
            noise_y: corr_y[(i, i)],
        })
        .collect();
    NoiseReport::from_parts(outputs, corr_x, corr_y, n0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck<T> {
    pub passed: bool,
    /// Smallest relevant noise product minus the bound, units of N₀².
    pub margin: T,
}

/// `N_{X_a}·N_{Y_b} ≥ N₀²` and `N_{X_b}·N_{Y_a} ≥ N₀²`.
pub fn check_duplication_bound<T: Real>(report: &NoiseReport<T>) -> Result<BoundCheck<T>> {
    if report.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: report.len(),
        });
    }
    let (a, b) = (report.output(0), report.output(1));
    let bound = report.n0 * report.n0;
    let min = (a.noise_x * b.noise_y).min(b.noise_x * a.noise_y);
    Ok(BoundCheck {
        passed: min >= bound * (T::one() - T::physicality_tol()),
        margin: min - bound,
    })
}

/// `N_X·N_Y ≥ (2(M−1)/M)²·N₀²` for a symmetric `M`-output report.
pub fn check_1_to_m_bound<T: Real>(report: &NoiseReport<T>, copies: usize) -> Result<BoundCheck<T>> {
    if copies == 0 {
        return invalid("M must be ≥ 1");
    }
    if report.len() != copies {
        return Err(Error::DimensionMismatch {
            expected: copies,
            got: report.len(),
        });
    }
    if !report.is_symmetric(T::physicality_tol()) {
        return invalid("the 1->M bound applies to symmetric reports only");
    }
    let m = T::lit(copies as f64);
    let root = T::lit(2.0) * (m - T::one()) / m * report.n0;
    let bound = root * root;
    let o = report.output(0);
    let product = o.noise_x * o.noise_y;
    Ok(BoundCheck {
        passed: product >= bound * (T::one() - T::physicality_tol()),
        margin: product - bound,
    })
}
