//! Analytic-versus-sampled comparisons with standard errors.
//!
//! A sampled noise report pools the covariances of `P` probe batches of
//! `n_p` shots each and fits gains by least squares on the batch means.
//! For Gaussian samples the mean and covariance estimates are independent,
//! so to first order the input-referred noise `N = V_out/g² − V_in` has
//!
//! `Var(N̂) = 2V_r²/(P(n_p−1)) + 4V_r²·(V_r·f/n_p)`
//!
//! with `V_r = V_out/g²` and `f` the slope entry of the inverse normal
//! matrix of the probe design.

use cvclone::sampling::variance_standard_error;
use cvclone::{fidelity_unity_gain, Matrix, ProbeEnsemble, Report};

use crate::CliError;

/// A comparison fails when the sampled value is this many standard errors
/// from the analytic one.
pub const GATE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: String,
    pub analytic: f64,
    pub sampled: f64,
    pub standard_error: f64,
}

impl Comparison {
    pub fn new(quantity: impl Into<String>, analytic: f64, sampled: f64, standard_error: f64) -> Self {
        Self {
            quantity: quantity.into(),
            analytic,
            sampled,
            standard_error,
        }
    }

    pub fn z(&self) -> f64 {
        (self.sampled - self.analytic) / self.standard_error
    }

    pub fn passed(&self) -> bool {
        self.z().abs() <= GATE
    }
}

/// Standard error of `2/√((2+N_X/N₀)(2+N_Y/N₀))` by first-order propagation.
pub fn fidelity_se(nx: f64, ny: f64, se_x: f64, se_y: f64, n0: f64) -> f64 {
    let (ax, ay) = (2.0 + nx / n0, 2.0 + ny / n0);
    let f = 2.0 / (ax * ay).sqrt();
    0.5 * f * ((se_x / (n0 * ax)).powi(2) + (se_y / (n0 * ay)).powi(2)).sqrt()
}

/// Shots per probe when a report gets `shots` in total.
pub fn shots_per_probe(shots: usize, probes: &ProbeEnsemble<f64>) -> Result<usize, CliError> {
    let per = shots / probes.means().len();
    if per < 2 {
        return Err(CliError::Usage(format!(
            "invalid value for key `samples`: {shots} shots leave fewer than 2 per probe"
        )));
    }
    Ok(per)
}

/// Diagonal slope entries of `(XᵀX)⁻¹` for the design rows `(1, x, y)`.
fn slope_factors(probes: &ProbeEnsemble<f64>) -> Result<(f64, f64), CliError> {
    let mut normal = Matrix::<f64>::zeros(3, 3);
    for &(x, y) in probes.means() {
        let row = [1.0, x, y];
        for i in 0..3 {
            for j in 0..3 {
                normal[(i, j)] += row[i] * row[j];
            }
        }
    }
    let inv = normal.inverse()?;
    Ok((inv[(1, 1)], inv[(2, 2)]))
}

/// Per-output noises, unity-gain fidelities and off-diagonal correlations of
/// a sampled report against the analytic one. `input_var` is the probes' own
/// quadrature variance (N₀ for coherent probes) and `per_probe` the shots in
/// each probe batch.
pub fn compare_reports(
    label: &str,
    analytic: &Report,
    sampled: &Report,
    probes: &ProbeEnsemble<f64>,
    input_var: f64,
    per_probe: usize,
) -> Result<Vec<Comparison>, CliError> {
    let n0 = analytic.n0();
    let pooled = (probes.means().len() * (per_probe - 1)) as f64;
    let np = per_probe as f64;
    let (fx, fy) = slope_factors(probes)?;
    let noise_se = |v: f64, f: f64| v * (2.0 / pooled + 4.0 * v * f / np).sqrt();
    let corr_se = |vi: f64, vj: f64, c: f64, f: f64| {
        ((vi * vj + c * c) / pooled + c * c * f * (vi + vj + 2.0 * c) / np).sqrt()
    };

    let mut out = Vec::new();
    for (i, (a, s)) in analytic.outputs().iter().zip(sampled.outputs()).enumerate() {
        let se_x = noise_se(input_var + a.noise_x, fx);
        let se_y = noise_se(input_var + a.noise_y, fy);
        out.push(Comparison::new(format!("{label} out{i} noise_x"), a.noise_x, s.noise_x, se_x));
        out.push(Comparison::new(format!("{label} out{i} noise_y"), a.noise_y, s.noise_y, se_y));
        let unity = |g: f64| (g - 1.0).abs() < 1e-9;
        if unity(a.gain_x) && unity(a.gain_y) {
            let fa = fidelity_unity_gain(a.noise_x.max(0.0), a.noise_y.max(0.0), n0)?;
            let fs = fidelity_unity_gain(s.noise_x.max(0.0), s.noise_y.max(0.0), n0)?;
            let se = fidelity_se(a.noise_x, a.noise_y, se_x, se_y, n0);
            out.push(Comparison::new(format!("{label} out{i} fidelity"), fa, fs, se));
        }
    }
    let m = analytic.len();
    for (axis, ca, cs, f) in [
        ("x", analytic.corr_x(), sampled.corr_x(), fx),
        ("y", analytic.corr_y(), sampled.corr_y(), fy),
    ] {
        for i in 0..m {
            for j in i + 1..m {
                let (vi, vj, c) = (input_var + ca[(i, i)], input_var + ca[(j, j)], input_var + ca[(i, j)]);
                out.push(Comparison::new(
                    format!("{label} corr_{axis}_{i}_{j}"),
                    ca[(i, j)],
                    cs[(i, j)],
                    corr_se(vi, vj, c, f),
                ));
            }
        }
    }
    Ok(out)
}

/// Variance and covariance entries of a single sampled batch.
pub fn compare_covariances(label: &str, analytic: &Matrix<f64>, sampled: &Matrix<f64>, shots: usize) -> Vec<Comparison> {
    let mut out = Vec::new();
    for i in 0..analytic.nrows() {
        for j in i..analytic.ncols() {
            let a = analytic[(i, j)];
            let se = if i == j {
                variance_standard_error(a, shots)
            } else {
                ((analytic[(i, i)] * analytic[(j, j)] + a * a) / (shots as f64 - 1.0)).sqrt()
            };
            out.push(Comparison::new(format!("{label} cov_{i}_{j}"), a, sampled[(i, j)], se));
        }
    }
    out
}

pub fn worst(comparisons: &[Comparison]) -> f64 {
    comparisons.iter().map(|c| c.z().abs()).fold(0.0, f64::max)
}

pub fn summary_line(comparisons: &[Comparison], n_shots: usize, seed: u64) -> String {
    let failed = comparisons.iter().filter(|c| !c.passed()).count();
    format!(
        "monte carlo ({n_shots} shots, seed {seed}): {} of {} quantities within {GATE} SE, worst |z| = {:.2}",
        comparisons.len() - failed,
        comparisons.len(),
        worst(comparisons)
    )
}
