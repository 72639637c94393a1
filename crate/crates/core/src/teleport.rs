//! EPR-based continuous-variable teleportation with squeezing, losses and
//! gain, plus the two adversarial pictures: an Alice who keeps a duplicate,
//! and an Eve who collects the light lost from Bob's EPR arm.
//!
//! Register layout during the protocol: mode 0 is the input, mode 1 Alice's
//! EPR arm, mode 2 Bob's arm and, when Eve taps, mode 3 is Eve's port.
//! Alice mixes modes 0 and 1 on a 50/50 beamsplitter, measures X on the
//! second port and Y on the first, and Bob displaces his arm by
//! `(−g√2·x, g√2·y)`. Averaged over outcomes this is a linear feed-forward,
//! so the unconditional output is computed exactly.

use rayon::prelude::*;

use crate::channel::GaussianChannel;
use crate::cloning::{equivalent_noise, Device, NoiseReport, OutputNoise, ProbeEnsemble};
use crate::components::{beamsplitter, epr_source, loss};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::metrics::{fidelity_unity_gain, gaussian_fidelity, noise_from_fidelity};
use crate::scalar::Real;
use crate::state::{FeedForward, GaussianState, QuadratureIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportConfig<T> {
    /// Two-mode squeezing parameter `r ≥ 0` of the EPR source.
    pub squeeze: T,
    /// Classical gain `g > 0`, shared by both quadrature corrections.
    pub gain: T,
    /// Transmission of Alice's EPR arm.
    pub loss_alice: T,
    /// Transmission of Bob's EPR arm.
    pub loss_bob: T,
    /// Route the light lost from Bob's arm to Eve instead of the environment.
    pub eve_taps_bob_arm: bool,
}

impl<T: Real> TeleportConfig<T> {
    /// Lossless, unity gain, no eavesdropper.
    pub fn ideal(squeeze: T) -> Self {
        Self {
            squeeze,
            gain: T::one(),
            loss_alice: T::one(),
            loss_bob: T::one(),
            eve_taps_bob_arm: false,
        }
    }

    pub fn with_gain(mut self, gain: T) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_losses(mut self, alice: T, bob: T) -> Self {
        self.loss_alice = alice;
        self.loss_bob = bob;
        self
    }

    pub fn with_eve(mut self, taps: bool) -> Self {
        self.eve_taps_bob_arm = taps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.squeeze >= T::zero() && self.squeeze.is_finite()) {
            return invalid(format!("squeezing r = {} must be ≥ 0", self.squeeze));
        }
        if !(self.gain > T::zero() && self.gain.is_finite()) {
            return invalid(format!("classical gain {} must be > 0", self.gain));
        }
        for (name, v) in [("loss_alice", self.loss_alice), ("loss_bob", self.loss_bob)] {
            if !(v >= T::zero() && v <= T::one()) {
                return invalid(format!("{name} = {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// The whole protocol seen as a device: one input mode, Bob's output and,
/// when Eve taps, Eve's output.
#[derive(Debug, Clone)]
pub struct Teleporter<T> {
    cfg: TeleportConfig<T>,
    n0: T,
    /// `±1`: Eve's phase orientation. A π rotation of her mode is free, and
    /// she keeps whichever orientation gives her the lower noise.
    eve_orientation: T,
}

impl<T: Real> Teleporter<T> {
    pub fn new(cfg: TeleportConfig<T>, n0: T) -> Result<Self> {
        cfg.validate()?;
        let mut tele = Self {
            cfg,
            n0,
            eve_orientation: T::one(),
        };
        if cfg.eve_taps_bob_arm {
            let probes = ProbeEnsemble::standard(n0);
            let product = |t: &Self| -> Result<T> {
                let o = *equivalent_noise(t, &probes)?.output(1);
                Ok(o.noise_x * o.noise_y)
            };
            let upright = product(&tele)?;
            let flipped_tele = Self {
                eve_orientation: -T::one(),
                ..tele.clone()
            };
            if product(&flipped_tele)? < upright {
                tele = flipped_tele;
            }
        }
        Ok(tele)
    }

    pub fn config(&self) -> &TeleportConfig<T> {
        &self.cfg
    }

    pub fn eve_orientation(&self) -> T {
        self.eve_orientation
    }

    /// Joint state just before Alice's measurement: modes
    /// `[port 1, port 2, Bob, (Eve)]`.
    pub fn pre_measurement_state(&self, input: &GaussianState<T>) -> Result<GaussianState<T>> {
        if input.n_modes() != 1 {
            return invalid("teleportation input must be a single mode");
        }
        let n0 = self.n0;
        let mut joint = input.tensor(&epr_source(self.cfg.squeeze, n0)?)?;
        joint = joint.apply(&loss(self.cfg.loss_alice, n0)?, &[1])?;
        if self.cfg.eve_taps_bob_arm {
            joint = joint.apply(&GaussianChannel::append_vacuum(3, 1, n0)?, &[0, 1, 2])?;
            joint = joint.apply(&beamsplitter(self.cfg.loss_bob, n0)?, &[2, 3])?;
            if self.eve_orientation < T::zero() {
                let flip = GaussianChannel::new(Matrix::scaled_identity(2, -T::one()), Matrix::zeros(2, 2), n0)?;
                joint = joint.apply(&flip, &[3])?;
            }
        } else {
            joint = joint.apply(&loss(self.cfg.loss_bob, n0)?, &[2])?;
        }
        joint.apply(&beamsplitter(T::lit(0.5), n0)?, &[0, 1])
    }

    /// Displacement coefficients applied per unit homodyne outcome:
    /// `(on X from port 2, on Y from port 1)`.
    pub fn correction_gains(&self) -> (T, T) {
        let k = self.cfg.gain * T::SQRT_2();
        (-k, k)
    }

    pub fn receivers(&self) -> Vec<usize> {
        if self.cfg.eve_taps_bob_arm {
            vec![2, 3]
        } else {
            vec![2]
        }
    }
}

impl<T: Real> Device<T> for Teleporter<T> {
    fn n0(&self) -> T {
        self.n0
    }

    fn outputs(&self) -> usize {
        self.receivers().len()
    }

    fn respond(&self, input: &GaussianState<T>) -> Result<GaussianState<T>> {
        let joint = self.pre_measurement_state(input)?;
        let (kx, ky) = self.correction_gains();
        let corrections: Vec<_> = self
            .receivers()
            .into_iter()
            .flat_map(|m| {
                [
                    FeedForward {
                        measured: QuadratureIndex::x(1),
                        target: QuadratureIndex::x(m),
                        gain: kx,
                    },
                    FeedForward {
                        measured: QuadratureIndex::y(0),
                        target: QuadratureIndex::y(m),
                        gain: ky,
                    },
                ]
            })
            .collect();
        joint.feed_forward(&corrections)
    }
}

#[derive(Debug, Clone)]
pub struct TeleportOutcome<T> {
    pub bob_state: GaussianState<T>,
    pub eve_state: Option<GaussianState<T>>,
    pub bob_report: NoiseReport<T>,
    pub eve_report: Option<NoiseReport<T>>,
    /// Unity-gain fidelity from Bob's equivalent noises.
    pub fidelity_bob: T,
    pub fidelity_eve: Option<T>,
    /// Direct overlap of Bob's output with the input (differs from
    /// `fidelity_bob` only when `g ≠ 1`).
    pub overlap_bob: T,
}

pub fn bk_teleport<T: Real>(input: &GaussianState<T>, cfg: &TeleportConfig<T>) -> Result<TeleportOutcome<T>> {
    if input.n_modes() != 1 {
        return invalid("teleportation input must be a single mode");
    }
    let n0 = input.n0();
    let tele = Teleporter::new(*cfg, n0)?;
    let out = tele.respond(input)?;
    let report = equivalent_noise(&tele, &ProbeEnsemble::standard(n0))?;

    let bob_state = out.partial_state(&[0])?;
    let bob_report = report.single(0);
    let fidelity_bob = report_fidelity(bob_report.output(0), n0)?;
    let overlap_bob = gaussian_fidelity(input, &bob_state)?;
    let (eve_state, eve_report, fidelity_eve) = if cfg.eve_taps_bob_arm {
        let r = report.single(1);
        let f = report_fidelity(r.output(0), n0)?;
        (Some(out.partial_state(&[1])?), Some(r), Some(f))
    } else {
        (None, None, None)
    };
    Ok(TeleportOutcome {
        bob_state,
        eve_state,
        bob_report,
        eve_report,
        fidelity_bob,
        fidelity_eve,
        overlap_bob,
    })
}

fn report_fidelity<T: Real>(o: &OutputNoise<T>, n0: T) -> Result<T> {
    // clamp rounding residue around a noiseless device
    let floor = |v: T| if v < T::zero() && v > -T::physicality_tol() * n0 { T::zero() } else { v };
    fidelity_unity_gain(floor(o.noise_x), floor(o.noise_y), n0)
}

#[derive(Debug, Clone)]
pub struct CheatOutcome<T> {
    pub alice_report: NoiseReport<T>,
    pub bob_report: NoiseReport<T>,
    pub alice_state: GaussianState<T>,
    pub bob_state: GaussianState<T>,
    pub alice_fidelity: T,
    pub bob_fidelity: T,
}

/// Alice duplicates the input, keeps one copy and teleports the other
/// perfectly. Her copy sits on the duplication boundary `N_a·N_b = N₀²`,
/// with `N_b` fixed by the fidelity Bob is meant to observe.
///
/// Refused when the target is not in `(1/2, 2/3]`: at or below 1/2 Alice has
/// nothing to hide, above 2/3 no such copy can exist.
pub fn cheating_alice<T: Real>(input: &GaussianState<T>, bob_fidelity_target: T) -> Result<CheatOutcome<T>> {
    if input.n_modes() != 1 {
        return invalid("cheating_alice input must be a single mode");
    }
    let n0 = input.n0();
    if !(bob_fidelity_target > T::lit(0.5) && bob_fidelity_target <= T::one()) {
        return invalid(format!(
            "target fidelity {bob_fidelity_target} must lie in (1/2, 2/3]"
        ));
    }
    let bob_noise = noise_from_fidelity(bob_fidelity_target, n0)?;
    if bob_noise < n0 * (T::one() - T::physicality_tol()) {
        return invalid(format!(
            "target fidelity {bob_fidelity_target} exceeds 2/3: Bob's noise product would be below N₀²"
        ));
    }
    let alice_noise = n0 * n0 / bob_noise;
    let noisy = |n: T| -> Result<GaussianState<T>> {
        GaussianState::new(
            input.mean().to_vec(),
            input.cov() + &Matrix::scaled_identity(2, n),
            n0,
        )
    };
    Ok(CheatOutcome {
        alice_report: NoiseReport::uncorrelated(&[(alice_noise, alice_noise)], n0)?,
        bob_report: NoiseReport::uncorrelated(&[(bob_noise, bob_noise)], n0)?,
        alice_state: noisy(alice_noise)?,
        bob_state: noisy(bob_noise)?,
        alice_fidelity: fidelity_unity_gain(alice_noise, alice_noise, n0)?,
        bob_fidelity: fidelity_unity_gain(bob_noise, bob_noise, n0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveScanRow<T> {
    pub eta: T,
    pub bob_noise_x: T,
    pub bob_noise_y: T,
    pub bob_fidelity: T,
    pub eve_noise_x: T,
    pub eve_noise_y: T,
    pub eve_fidelity: T,
}

impl<T: Real> EveScanRow<T> {
    /// Bob's noise minus Eve's, each taken as `√(N_X·N_Y)`.
    pub fn advantage_eve(&self) -> T {
        (self.bob_noise_x * self.bob_noise_y).sqrt() - (self.eve_noise_x * self.eve_noise_y).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct EveScan<T> {
    pub rows: Vec<EveScanRow<T>>,
    /// Efficiency at which Bob's and Eve's noises coincide, when the scan
    /// brackets it.
    pub crossing: Option<T>,
}

/// One point of the eavesdropping picture: Eve holds the light lost from
/// Bob's arm (efficiency `eta`), Alice's arm is lossless.
pub fn eve_point<T: Real>(squeeze: T, eta: T, gain: T, n0: T) -> Result<EveScanRow<T>> {
    let cfg = TeleportConfig::ideal(squeeze)
        .with_gain(gain)
        .with_losses(T::one(), eta)
        .with_eve(true);
    let out = bk_teleport(&GaussianState::vacuum(1, n0)?, &cfg)?;
    let bob = *out.bob_report.output(0);
    let eve = *out.eve_report.as_ref().expect("eve taps").output(0);
    Ok(EveScanRow {
        eta,
        bob_noise_x: bob.noise_x,
        bob_noise_y: bob.noise_y,
        bob_fidelity: out.fidelity_bob,
        eve_noise_x: eve.noise_x,
        eve_noise_y: eve.noise_y,
        eve_fidelity: out.fidelity_eve.expect("eve taps"),
    })
}

/// Runs [`eve_point`] at each efficiency and locates the Bob/Eve crossing.
///
/// The crossing is bracketed on the scan grid and then refined by bisection
/// on the exact covariance model, so its accuracy does not depend on the
/// grid spacing.
// negated comparisons also reject NaN
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn eve_vs_bob_scan<T: Real>(squeeze: T, etas: &[T], gain: T, n0: T) -> Result<EveScan<T>> {
    if !(squeeze > T::zero()) {
        return invalid("eavesdropping scan needs r > 0");
    }
    let rows = etas
        .par_iter()
        .map(|&eta| eve_point(squeeze, eta, gain, n0))
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].eta.partial_cmp(&rows[b].eta).expect("finite eta"));
    let mut crossing = None;
    for w in order.windows(2) {
        let (lo, hi) = (&rows[w[0]], &rows[w[1]]);
        let (dlo, dhi) = (lo.advantage_eve(), hi.advantage_eve());
        if dlo == T::zero() {
            crossing = Some(lo.eta);
            break;
        }
        if dhi == T::zero() {
            crossing = Some(hi.eta);
            break;
        }
        if (dlo < T::zero()) != (dhi < T::zero()) {
            crossing = Some(bisect_crossing(squeeze, gain, n0, (lo.eta, dlo), hi.eta)?);
            break;
        }
    }
    Ok(EveScan { rows, crossing })
}

fn bisect_crossing<T: Real>(squeeze: T, gain: T, n0: T, lo: (T, T), hi: T) -> Result<T> {
    let (mut a, mut fa) = lo;
    let mut b = hi;
    for _ in 0..200 {
        let mid = (a + b) * T::lit(0.5);
        if mid <= a || mid >= b || (b - a) <= T::epsilon() * T::lit(4.0) {
            break;
        }
        let fm = eve_point(squeeze, mid, gain, n0)?.advantage_eve();
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok((a + b) * T::lit(0.5))
}

/// Variance of X on one EPR arm after conditioning on a homodyne
/// measurement of X on the other, both arms with efficiency `eta`.
/// Values below N₀ certify conditional squeezing.
pub fn conditional_squeezing<T: Real>(squeeze: T, eta: T, n0: T) -> Result<T> {
    let l = loss(eta, n0)?;
    let state = epr_source(squeeze, n0)?.apply(&l, &[0])?.apply(&l, &[1])?;
    let cond = state.homodyne_condition(QuadratureIndex::x(0), T::zero())?;
    Ok(cond.variance(QuadratureIndex::x(0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TeleportConfig::ideal(-0.1).validate().is_err());
        assert!(TeleportConfig::ideal(0.1).with_gain(0.0).validate().is_err());
        assert!(TeleportConfig::ideal(0.1).with_losses(1.2, 1.0).validate().is_err());
        assert!(TeleportConfig::ideal(0.1).with_losses(0.3, 0.0).validate().is_ok());
    }

    #[test]
    fn multimode_input_rejected() {
        let two = GaussianState::<f64>::vacuum(2, 1.0).unwrap();
        assert!(bk_teleport(&two, &TeleportConfig::ideal(0.5)).is_err());
        assert!(cheating_alice(&two, 0.6).is_err());
    }

    #[test]
    fn cheat_outside_quantum_fax_window_refused() {
        let c = GaussianState::<f64>::coherent(1.0, 2.0, 1.0).unwrap();
        assert!(cheating_alice(&c, 0.5).is_err());
        assert!(cheating_alice(&c, 0.7).is_err());
        assert!(cheating_alice(&c, 0.51).is_ok());
    }

    #[test]
    fn scan_requires_squeezing() {
        assert!(eve_vs_bob_scan(0.0, &[0.5], 1.0, 1.0).is_err());
    }
}
