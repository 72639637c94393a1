use cvclone::sampling::{
    empirical_covariance, sampled_conditional_variance, shotwise_noise_report, shotwise_teleport,
    variance_standard_error,
};
use cvclone::teleport::{eve_point, CheatOutcome};
use cvclone::{
    bk_teleport, cheating_alice, classify, conditional_squeezing, eve_vs_bob_scan,
    fidelity_unity_gain, Config, Config32, Device, ProbeEnsemble, Region, State, State32, Teleporter,
};
use proptest::prelude::*;

const N0: f64 = 1.0;

/// Bob's equivalent noise per quadrature at unity gain with efficiencies
/// `ea` (Alice's arm) and `eb` (Bob's arm), from the EPR covariance:
/// Var(X_B − X_A') with both arms attenuated.
fn bob_noise_oracle(r: f64, ea: f64, eb: f64) -> f64 {
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    (ea * c + 1.0 - ea + eb * c + 1.0 - eb - 2.0 * (ea * eb).sqrt() * s) * N0
}

/// Conditional X variance of one arm given the other, both arms at
/// efficiency `eta`.
fn conditional_oracle(r: f64, eta: f64) -> f64 {
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let arm = eta * c + 1.0 - eta;
    (arm - eta * eta * s * s / arm) * N0
}

fn vacuum() -> State {
    State::vacuum(1, N0).unwrap()
}

#[test]
fn zero_squeezing_is_measure_and_resend() {
    let out = bk_teleport(&vacuum(), &Config::ideal(0.0)).unwrap();
    let o = out.bob_report.output(0);
    assert!((o.noise_x - 2.0 * N0).abs() < 1e-9 && (o.noise_y - 2.0 * N0).abs() < 1e-9);
    assert!((out.fidelity_bob - 0.5).abs() < 1e-9);
    assert_eq!(classify(out.fidelity_bob - 1e-12).unwrap().region, Region::Classical);
}

#[test]
fn threshold_squeezing_gives_two_thirds() {
    let r = (2.0f64).ln() / 2.0;
    let out = bk_teleport(&vacuum(), &Config::ideal(r)).unwrap();
    let o = out.bob_report.output(0);
    assert!((o.noise_x - N0).abs() < 1e-9 && (o.noise_y - N0).abs() < 1e-9);
    assert!((out.fidelity_bob - 2.0 / 3.0).abs() < 1e-9);
    assert!((out.overlap_bob - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn strong_squeezing_is_nearly_perfect() {
    let out = bk_teleport(&State::coherent(1.0, -3.0, N0).unwrap(), &Config::ideal(5.0)).unwrap();
    assert!(out.fidelity_bob > 0.9999);
    assert!((out.bob_report.output(0).noise_x - 2.0 * (-10.0f64).exp()).abs() < 1e-9);
}

#[test]
fn ideal_noise_follows_squeezing() {
    for r in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let out = bk_teleport(&vacuum(), &Config::ideal(r)).unwrap();
        let want = 2.0 * (-2.0 * r).exp() * N0;
        assert!((out.bob_report.output(0).noise_x - want).abs() < 1e-9, "r={r}");
    }
}

#[test]
fn lossy_arms_match_closed_form() {
    for (r, ea, eb) in [(0.5, 1.0, 0.8), (1.0, 0.7, 0.9), (0.3, 0.5, 0.5), (1.5, 0.95, 0.2)] {
        let cfg = Config::ideal(r).with_losses(ea, eb);
        let out = bk_teleport(&vacuum(), &cfg).unwrap();
        let want = bob_noise_oracle(r, ea, eb);
        let o = out.bob_report.output(0);
        assert!((o.noise_x - want).abs() < 1e-9 && (o.noise_y - want).abs() < 1e-9, "{cfg:?}");
        assert!((out.fidelity_bob - fidelity_unity_gain(want, want, N0).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn unity_gain_preserves_the_mean() {
    for (x, y) in [(0.0, 0.0), (3.0, -2.0), (-10.0, 7.5)] {
        let input = State::coherent(x, y, N0).unwrap();
        let cfg = Config::ideal(0.8).with_losses(0.9, 0.6);
        let out = bk_teleport(&input, &cfg).unwrap();
        assert!((out.bob_state.mean()[0] - x).abs() < 1e-10);
        assert!((out.bob_state.mean()[1] - y).abs() < 1e-10);
    }
}

#[test]
fn non_unity_gain_scales_the_output() {
    let input = State::coherent(2.0, 1.0, N0).unwrap();
    let out = bk_teleport(&input, &Config::ideal(0.7).with_gain(0.8)).unwrap();
    let o = out.bob_report.output(0);
    assert!((o.gain_x - 0.8).abs() < 1e-10 && (o.gain_y - 0.8).abs() < 1e-10);
    assert!((out.bob_state.mean()[0] - 1.6).abs() < 1e-10);
    // direct overlap with the input: diagonal Σ = V_out + N₀, δ = (−0.4, −0.2)
    let v = out.bob_state.cov();
    assert!(v[(0, 1)].abs() < 1e-12);
    let (sx, sy) = (v[(0, 0)] + N0, v[(1, 1)] + N0);
    let want = 2.0 * N0 / (sx * sy).sqrt() * (-0.5 * (0.16 / sx + 0.04 / sy)).exp();
    assert!((out.overlap_bob - want).abs() < 1e-12);
    assert!((out.overlap_bob - out.fidelity_bob).abs() > 1e-3);
}

#[test]
fn bob_fidelity_is_monotone() {
    let fid = |r: f64, eb: f64| bk_teleport(&vacuum(), &Config::ideal(r).with_losses(1.0, eb)).unwrap().fidelity_bob;
    let rs = [0.0, 0.1, 0.3, 0.6, 1.0, 1.5, 2.5];
    for w in rs.windows(2) {
        assert!(fid(w[1], 1.0) > fid(w[0], 1.0));
    }
    let etas = [1.0, 0.9, 0.7, 0.5, 0.3, 0.1];
    for w in etas.windows(2) {
        assert!(fid(0.8, w[1]) < fid(0.8, w[0]));
    }
}

#[test]
fn cheating_alice_numbers() {
    let input = State::coherent(1.0, 1.0, N0).unwrap();
    let CheatOutcome { alice_report, bob_report, alice_fidelity, bob_fidelity, alice_state, .. } =
        cheating_alice(&input, 0.58).unwrap();
    assert!((bob_report.output(0).noise_x - 1.448).abs() < 1e-3);
    assert!((alice_report.output(0).noise_x - 0.690).abs() < 1e-3);
    assert!((alice_fidelity - 0.743).abs() < 1e-3);
    assert!((bob_fidelity - 0.58).abs() < 1e-12);
    assert_eq!(classify(alice_fidelity).unwrap().region, Region::Teleportation);
    assert_eq!(alice_state.mean(), input.mean());

    let at_limit = cheating_alice(&input, 2.0 / 3.0).unwrap();
    assert!((at_limit.alice_report.output(0).noise_x - N0).abs() < 1e-12);
    assert!((at_limit.alice_fidelity - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn cheating_beyond_two_thirds_is_refused() {
    let input = vacuum();
    for f in [0.6667, 0.7, 0.9, 1.0] {
        assert!(cheating_alice(&input, f).is_err(), "F={f}");
    }
    assert!(cheating_alice(&input, 0.5).is_err());
}

#[test]
fn eve_crossing_sits_at_one_half() {
    let etas: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for r in [0.2, 0.5, 1.0] {
        let scan = eve_vs_bob_scan(r, &etas, 1.0, N0).unwrap();
        let crossing = scan.crossing.expect("scan brackets the crossing");
        assert!((crossing - 0.5).abs() < 1e-6, "r={r}: {crossing}");
        let row = eve_point(r, 0.25, 1.0, N0).unwrap();
        assert!(row.eve_fidelity > row.bob_fidelity, "r={r}");
        let top = eve_point(r, 1.0, 1.0, N0).unwrap();
        assert!(top.eve_fidelity <= 0.5, "r={r}: {}", top.eve_fidelity);
    }
}

#[test]
fn eve_and_bob_mirror_each_other() {
    for r in [0.2, 0.7, 1.3] {
        for eta in [0.1, 0.25, 0.4, 0.6, 0.9] {
            let row = eve_point(r, eta, 1.0, N0).unwrap();
            assert!((row.bob_noise_x - bob_noise_oracle(r, 1.0, eta)).abs() < 1e-9);
            assert!((row.eve_noise_x - bob_noise_oracle(r, 1.0, 1.0 - eta)).abs() < 1e-9);
            assert!((row.eve_noise_y - row.eve_noise_x).abs() < 1e-9);
        }
    }
}

#[test]
fn conditional_squeezing_boundary() {
    for r in [0.5, 1.0, 2.0] {
        assert!((conditional_squeezing(r, 0.5, N0).unwrap() - N0).abs() < 1e-9, "r={r}");
    }
    let below = conditional_squeezing(1.0, 0.6, N0).unwrap();
    let above = conditional_squeezing(1.0, 0.4, N0).unwrap();
    assert!(below < N0 && above > N0);
    assert!((below - conditional_oracle(1.0, 0.6)).abs() < 1e-12);
    assert!((above - conditional_oracle(1.0, 0.4)).abs() < 1e-12);
    assert!(conditional_squeezing(8.0, 1.0, N0).unwrap() < 1e-6);
}

#[test]
fn single_precision_teleport() {
    let cfg = Config32::ideal((2.0f32).ln() / 2.0);
    let out = bk_teleport(&State32::vacuum(1, 1.0).unwrap(), &cfg).unwrap();
    assert!((out.fidelity_bob - 2.0 / 3.0).abs() < 1e-4);
}

// ---- shotwise protocol against the analytic channel ----

fn assert_cov_within_se(analytic: &cvclone::Matrix<f64>, sampled: &cvclone::Matrix<f64>, n: usize) {
    for i in 0..analytic.nrows() {
        for j in 0..analytic.ncols() {
            let (a, s) = (analytic[(i, j)], sampled[(i, j)]);
            // variance SE on the diagonal, covariance SE √((V_ii V_jj + V_ij²)/(n−1)) off it
            let se = if i == j {
                variance_standard_error(a, n)
            } else {
                ((analytic[(i, i)] * analytic[(j, j)] + a * a) / (n as f64 - 1.0)).sqrt()
            };
            assert!((a - s).abs() < 5.0 * se, "({i},{j}): analytic {a} sampled {s} se {se}");
        }
    }
}

#[test]
fn shotwise_matches_analytic_at_classical_point() {
    let n = 1_000_000;
    let input = State::coherent(1.5, -0.5, N0).unwrap();
    let cfg = Config::ideal(0.0);
    let (mean, cov) = empirical_covariance(&shotwise_teleport(&input, &cfg, n, 5).unwrap()).unwrap();
    let analytic = bk_teleport(&input, &cfg).unwrap().bob_state;
    assert_cov_within_se(analytic.cov(), &cov, n);
    for k in 0..2 {
        assert!((mean[k] - input.mean()[k]).abs() < 5.0 * (cov[(k, k)] / n as f64).sqrt());
    }
    // added noise ≈ 2N₀
    assert!((cov[(0, 0)] - N0 - 2.0 * N0).abs() < 5.0 * variance_standard_error(3.0 * N0, n));
}

#[test]
fn shotwise_matches_analytic_with_eve() {
    let n = 1_000_000;
    let input = State::coherent(-2.0, 4.0, N0).unwrap();
    let cfg = Config::ideal(0.6).with_losses(0.9, 0.35).with_eve(true);
    let batch = shotwise_teleport(&input, &cfg, n, 77).unwrap();
    assert_eq!(batch.width(), 4);
    let (_, cov) = empirical_covariance(&batch).unwrap();
    let joint = Teleporter::new(cfg, N0).unwrap().respond(&input).unwrap();
    assert_cov_within_se(joint.cov(), &cov, n);
    let out = bk_teleport(&input, &cfg).unwrap();
    assert_eq!(joint.partial_state(&[1]).unwrap(), out.eve_state.unwrap());
}

#[test]
fn shotwise_fidelity_at_threshold() {
    let n = 1_000_000;
    let cfg = Config::ideal((2.0f64).ln() / 2.0);
    let report = shotwise_noise_report(&cfg, &ProbeEnsemble::standard(N0), n, 11, N0).unwrap();
    let o = report.output(0);
    let f = fidelity_unity_gain(o.noise_x, o.noise_y, N0).unwrap();
    assert!((f - 2.0 / 3.0).abs() < 0.005, "{f}");
    assert!((o.gain_x - 1.0).abs() < 1e-2);
}

#[test]
fn sampled_conditional_variance_agrees() {
    let n = 1_000_000;
    for (r, eta) in [(1.0, 0.6), (1.0, 0.5), (0.5, 0.4)] {
        let v = sampled_conditional_variance(r, eta, N0, n, 31).unwrap();
        let want = conditional_oracle(r, eta);
        assert!((v - want).abs() < 5.0 * variance_standard_error(want, n), "r={r} η={eta}: {v} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossing_is_input_independent(r in 0.05..2.0f64, x in -10.0..10.0f64, y in -10.0..10.0f64) {
        let cfg = Config::ideal(r).with_losses(1.0, 0.5).with_eve(true);
        let out = bk_teleport(&State::coherent(x, y, N0).unwrap(), &cfg).unwrap();
        let (b, e) = (out.bob_report.output(0), out.eve_report.as_ref().unwrap().output(0));
        prop_assert!((b.noise_x - e.noise_x).abs() < 1e-9 && (b.noise_y - e.noise_y).abs() < 1e-9);
    }

    #[test]
    fn bob_noise_product_respects_no_cloning(r in 0.0..3.0f64, ea in 0.0..=1.0f64, eb in 0.0..=1.0f64) {
        // whenever Bob beats N₀², nobody else can hold a copy better than N₀²/N_b
        let out = bk_teleport(&vacuum(), &Config::ideal(r).with_losses(ea, eb)).unwrap();
        let o = out.bob_report.output(0);
        prop_assert!(o.noise_x >= -1e-9 && o.noise_y >= -1e-9);
        prop_assert!((o.noise_x - bob_noise_oracle(r, ea, eb)).abs() < 1e-8 * (2.0 * r).cosh());
        prop_assert!(out.fidelity_bob >= 0.0 && out.fidelity_bob <= 1.0);
    }

    #[test]
    fn cheat_keeps_alice_ahead(f in 0.501..0.6666f64) {
        let out = cheating_alice(&vacuum(), f).unwrap();
        prop_assert!(out.alice_fidelity > out.bob_fidelity);
        let product = out.alice_report.output(0).noise_x * out.bob_report.output(0).noise_x;
        prop_assert!((product - N0 * N0).abs() < 1e-12);
    }

    #[test]
    fn conditional_variance_closed_form(r in 0.0..3.0f64, eta in 0.0..=1.0f64) {
        let v = conditional_squeezing(r, eta, N0).unwrap();
        prop_assert!((v - conditional_oracle(r, eta)).abs() < 1e-9 * (2.0 * r).cosh());
        // conditional squeezing exactly when η > 1/2
        if r > 0.05 && (eta - 0.5).abs() > 1e-3 {
            prop_assert_eq!(v < N0, eta > 0.5);
        }
    }
}
