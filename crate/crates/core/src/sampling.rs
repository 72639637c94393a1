//! Independent Monte Carlo path: shot-by-shot quadrature samples drawn from
//! Gaussian Wigner functions, and estimators that re-derive the analytic
//! results from them.
//!
//! Reproducibility contract:
//! * Generator: ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//!   `seed_from_u64(seed)`; independent streams use `set_stream(stream)`.
//! * Normals: basic Box–Muller. Each pair consumes two uniforms `u₁, u₂`
//!   (in that order, `u₁` mapped to `(0, 1]`), yields `√(−2 ln u₁)·cos 2πu₂`
//!   first and `√(−2 ln u₁)·sin 2πu₂` second.
//! * Correlation: lower Cholesky factor of `cov + 10⁻¹²·N₀·I`, sample
//!   `mean + L·z` with `z` filled in row order.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::cloning::{report_from_moments, Device, NoiseReport, ProbeEnsemble};
use crate::components::{epr_source, loss};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::state::{GaussianState, QuadratureIndex};
use crate::teleport::{TeleportConfig, Teleporter};

/// Deterministic generator for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Box–Muller standard normal source with a frozen consumption order.
pub struct NormalSource {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            rng: stream_rng(seed, stream),
            spare: None,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn fill<T: Real>(&mut self, out: &mut [T]) {
        for z in out {
            *z = T::lit(self.next_normal());
        }
    }
}

/// Draws `mean + L·z` for a fixed covariance.
struct GaussianSampler<T> {
    mean: Vec<T>,
    chol: Matrix<T>,
}

impl<T: Real> GaussianSampler<T> {
    fn new(mean: &[T], cov: &Matrix<T>, n0: T) -> Result<Self> {
        let reg = cov + &Matrix::scaled_identity(cov.nrows(), T::lit(1e-12) * n0);
        let chol = reg
            .cholesky()
            .map_err(|e| Error::Internal(format!("covariance cannot be sampled: {e}")))?;
        Ok(Self {
            mean: mean.to_vec(),
            chol,
        })
    }

    fn draw(&self, normals: &mut NormalSource, z: &mut [T], out: &mut [T]) {
        normals.fill(z);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.chol.row(i);
            let mut acc = self.mean[i];
            for k in 0..=i {
                acc = acc + row[k] * z[k];
            }
            *o = acc;
        }
    }
}

/// `n_shots × width` block of quadrature outcomes, units of √N₀.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T> {
    n_shots: usize,
    width: usize,
    values: Vec<T>,
    pub seed: u64,
    pub stream: u64,
    pub provenance: String,
}

impl<T: Real> SampleBatch<T> {
    /// Wraps externally produced shots, `width` values per shot in row order.
    pub fn from_values(values: Vec<T>, width: usize, provenance: impl Into<String>) -> Result<Self> {
        if width == 0 || !width.is_multiple_of(2) || values.is_empty() || !values.len().is_multiple_of(width) {
            return invalid(format!(
                "{} values do not form whole shots of width {width}",
                values.len()
            ));
        }
        Ok(Self {
            n_shots: values.len() / width,
            width,
            values,
            seed: 0,
            stream: 0,
            provenance: provenance.into(),
        })
    }

    pub fn n_shots(&self) -> usize {
        self.n_shots
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shot(&self, i: usize) -> &[T] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// CSV with header `shot,X1,Y1,X2,Y2,…`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "shot")?;
        for m in 1..=self.width / 2 {
            write!(w, ",X{m},Y{m}")?;
        }
        writeln!(w)?;
        for i in 0..self.n_shots {
            write!(w, "{i}")?;
            for &v in self.shot(i) {
                write!(w, ",{}", format_number(v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Number formatting shared by every CSV artifact: 9 significant digits,
/// scientific notation.
pub fn format_number<T: Real>(x: T) -> String {
    format!("{:.8e}", x.to_f64_lossy())
}

pub fn sample_state<T: Real>(state: &GaussianState<T>, n_shots: usize, seed: u64) -> Result<SampleBatch<T>> {
    sample_state_stream(state, n_shots, seed, 0)
}

pub fn sample_state_stream<T: Real>(
    state: &GaussianState<T>,
    n_shots: usize,
    seed: u64,
    stream: u64,
) -> Result<SampleBatch<T>> {
    if n_shots == 0 {
        return invalid("need at least one shot");
    }
    let width = state.mean().len();
    let sampler = GaussianSampler::new(state.mean(), state.cov(), state.n0())?;
    let mut normals = NormalSource::new(seed, stream);
    let mut values = vec![T::zero(); n_shots * width];
    let mut z = vec![T::zero(); width];
    for shot in values.chunks_exact_mut(width) {
        sampler.draw(&mut normals, &mut z, shot);
    }
    Ok(SampleBatch {
        n_shots,
        width,
        values,
        seed,
        stream,
        provenance: format!("{}-mode gaussian state", state.n_modes()),
    })
}

/// Unbiased sample mean and covariance (two-pass).
pub fn empirical_covariance<T: Real>(batch: &SampleBatch<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = batch.n_shots;
    if n < 2 {
        return invalid("empirical covariance needs at least two shots");
    }
    let w = batch.width;
    let mut mean = vec![T::zero(); w];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(batch.shot(i)) {
            *m = *m + v;
        }
    }
    let nt = T::lit(n as f64);
    for m in &mut mean {
        *m = *m / nt;
    }
    // upper triangle, row-major, accumulated shot by shot
    let mut upper = vec![T::zero(); w * (w + 1) / 2];
    let mut centered = vec![T::zero(); w];
    for shot in batch.values.chunks_exact(w) {
        for ((c, &v), &m) in centered.iter_mut().zip(shot).zip(&mean) {
            *c = v - m;
        }
        let mut k = 0;
        for a in 0..w {
            let ca = centered[a];
            for (acc, &cb) in upper[k..k + w - a].iter_mut().zip(&centered[a..]) {
                *acc = *acc + ca * cb;
            }
            k += w - a;
        }
    }
    let denom = T::lit((n - 1) as f64);
    let mut cov = Matrix::zeros(w, w);
    let mut k = 0;
    for a in 0..w {
        for b in a..w {
            let v = upper[k] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
            k += 1;
        }
    }
    Ok((mean, cov))
}

/// Standard error of a sample variance: `√(2/(n−1))·variance`.
pub fn variance_standard_error<T: Real>(variance: T, n_shots: usize) -> T {
    (T::lit(2.0) / T::lit((n_shots.max(2) - 1) as f64)).sqrt() * variance.abs()
}

/// Per-shot teleportation. For each shot the two homodyne outcomes are drawn
/// from their joint marginal, the receivers' state is conditioned on them
/// and sampled, and the outcome-proportional displacements are added.
///
/// Columns are Bob's `(X, Y)` followed by Eve's when she taps.
pub fn shotwise_teleport<T: Real>(
    input: &GaussianState<T>,
    cfg: &TeleportConfig<T>,
    n_shots: usize,
    seed: u64,
) -> Result<SampleBatch<T>> {
    shotwise_teleport_stream(input, cfg, n_shots, seed, 0)
}

pub fn shotwise_teleport_stream<T: Real>(
    input: &GaussianState<T>,
    cfg: &TeleportConfig<T>,
    n_shots: usize,
    seed: u64,
    stream: u64,
) -> Result<SampleBatch<T>> {
    if n_shots == 0 {
        return invalid("need at least one shot");
    }
    let n0 = input.n0();
    let tele = Teleporter::new(*cfg, n0)?;
    let joint = tele.pre_measurement_state(input)?;
    let qx = QuadratureIndex::x(1);
    let qy = QuadratureIndex::y(0);

    // joint marginal of the two measured quadratures
    let record_mean = [joint.mean_of(qx), joint.mean_of(qy)];
    let record_cov = Matrix::from_row_slice(
        2,
        2,
        &[
            joint.variance(qx),
            joint.covariance(qx, qy),
            joint.covariance(qy, qx),
            joint.variance(qy),
        ],
    );
    let record = GaussianSampler::new(&record_mean, &record_cov, n0)?;

    // Conditioning on X of port 2 removes it, so port 1 stays mode 0.
    let condition = |x: T, y: T| -> Result<GaussianState<T>> {
        joint.homodyne_condition(qx, x)?.homodyne_condition(qy, y)
    };
    let base = condition(record_mean[0], record_mean[1])?;
    let dx = condition(record_mean[0] + T::one(), record_mean[1])?;
    let dy = condition(record_mean[0], record_mean[1] + T::one())?;
    let slope = |shifted: &GaussianState<T>| -> Vec<T> {
        shifted.mean().iter().zip(base.mean()).map(|(&a, &b)| a - b).collect()
    };
    let (slope_x, slope_y) = (slope(&dx), slope(&dy));
    let residual = GaussianSampler::new(&vec![T::zero(); base.mean().len()], base.cov(), n0)?;
    let (kx, ky) = tele.correction_gains();

    let width = base.mean().len();
    let mut normals = NormalSource::new(seed, stream);
    let mut values = vec![T::zero(); n_shots * width];
    let mut z2 = [T::zero(); 2];
    let mut outcome = [T::zero(); 2];
    let mut z = vec![T::zero(); width];
    for shot in values.chunks_exact_mut(width) {
        record.draw(&mut normals, &mut z2, &mut outcome);
        residual.draw(&mut normals, &mut z, shot);
        let (ex, ey) = (outcome[0] - record_mean[0], outcome[1] - record_mean[1]);
        for (i, v) in shot.iter_mut().enumerate() {
            let mut q = *v + base.mean()[i] + slope_x[i] * ex + slope_y[i] * ey;
            q = q + if i % 2 == 0 { kx * outcome[0] } else { ky * outcome[1] };
            *v = q;
        }
    }
    Ok(SampleBatch {
        n_shots,
        width,
        values,
        seed,
        stream,
        provenance: format!(
            "shotwise teleport r={} g={} eta_a={} eta_b={} eve={}",
            cfg.squeeze, cfg.gain, cfg.loss_alice, cfg.loss_bob, cfg.eve_taps_bob_arm
        ),
    })
}

/// Noise report re-estimated from samples: each probe's output state is
/// sampled on its own stream, gains come from the sample means and the
/// noises from the pooled sample covariance.
pub fn sampled_noise_report<T: Real, D: Device<T> + Sync + ?Sized>(
    device: &D,
    probes: &ProbeEnsemble<T>,
    n_shots: usize,
    seed: u64,
) -> Result<NoiseReport<T>> {
    let n0 = device.n0();
    let inputs = probes.states(n0)?;
    let moments = inputs
        .par_iter()
        .enumerate()
        .map(|(p, input)| {
            let out = device.respond(input)?;
            empirical_covariance(&sample_state_stream(&out, n_shots, seed, p as u64)?)
        })
        .collect::<Result<Vec<_>>>()?;
    pooled_report(probes, moments, n0)
}

/// Like [`sampled_noise_report`] but every probe goes through the per-shot
/// teleportation protocol.
pub fn shotwise_noise_report<T: Real>(
    cfg: &TeleportConfig<T>,
    probes: &ProbeEnsemble<T>,
    n_shots: usize,
    seed: u64,
    n0: T,
) -> Result<NoiseReport<T>> {
    let inputs = probes.states(n0)?;
    let moments = inputs
        .par_iter()
        .enumerate()
        .map(|(p, input)| {
            empirical_covariance(&shotwise_teleport_stream(input, cfg, n_shots, seed, p as u64)?)
        })
        .collect::<Result<Vec<_>>>()?;
    pooled_report(probes, moments, n0)
}

fn pooled_report<T: Real>(
    probes: &ProbeEnsemble<T>,
    moments: Vec<(Vec<T>, Matrix<T>)>,
    n0: T,
) -> Result<NoiseReport<T>> {
    let k = T::lit(moments.len() as f64);
    let dim = moments[0].1.nrows();
    let mut pooled = Matrix::zeros(dim, dim);
    for (_, c) in &moments {
        pooled = &pooled + c;
    }
    let pooled = pooled.scale(T::one() / k);
    let means: Vec<Vec<T>> = moments.into_iter().map(|(m, _)| m).collect();
    report_from_moments(probes, &means, &pooled, (n0, n0), n0)
}

/// Sampled estimate of the conditional variance `V(X_b | X_a)` on an EPR
/// pair with efficiency `eta` on both arms, from the sample regression of
/// `X_b` on `X_a`.
pub fn sampled_conditional_variance<T: Real>(
    squeeze: T,
    eta: T,
    n0: T,
    n_shots: usize,
    seed: u64,
) -> Result<T> {
    let l = loss(eta, n0)?;
    let state = epr_source(squeeze, n0)?.apply(&l, &[0])?.apply(&l, &[1])?;
    let (_, cov) = empirical_covariance(&sample_state(&state, n_shots, seed)?)?;
    let (va, vb, c) = (cov[(0, 0)], cov[(2, 2)], cov[(0, 2)]);
    Ok(vb - c * c / va)
}
