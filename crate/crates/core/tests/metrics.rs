use cvclone::{
    classify, cloning_limit, fidelity_unity_gain, gaussian_fidelity, noise_from_fidelity, Matrix,
    Region, State,
};
use proptest::prelude::*;

const N0: f64 = 1.0;

/// `F = 4πN₀·∫ W_in·W_out` evaluated by a plain Riemann sum over a wide
/// phase-space grid. Independent of the closed form under test.
fn overlap_oracle(input: &State, output: &State) -> f64 {
    let n0 = input.n0();
    let wigner = |s: &State| {
        let (m, c) = (s.mean().to_vec(), s.cov().clone());
        let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
        let (a, b, d) = (c[(1, 1)] / det, -c[(0, 1)] / det, c[(0, 0)] / det);
        move |x: f64, y: f64| {
            let (u, v) = (x - m[0], y - m[1]);
            (-0.5 * (a * u * u + 2.0 * b * u * v + d * v * v)).exp()
                / (2.0 * std::f64::consts::PI * det.sqrt())
        }
    };
    let (wi, wo) = (wigner(input), wigner(output));
    let spread = input.cov().max_abs().max(output.cov().max_abs()).sqrt();
    let centre = |k: usize| 0.5 * (input.mean()[k] + output.mean()[k]);
    let reach = 12.0 * spread + 0.5 * (input.mean()[0] - output.mean()[0]).abs().max((input.mean()[1] - output.mean()[1]).abs());
    let steps = 600;
    let h = 2.0 * reach / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let x = centre(0) - reach + i as f64 * h;
        for j in 0..=steps {
            let y = centre(1) - reach + j as f64 * h;
            sum += wi(x, y) * wo(x, y);
        }
    }
    4.0 * std::f64::consts::PI * n0 * sum * h * h
}

fn noisy_copy(input: &State, nx: f64, ny: f64) -> State {
    State::new(
        input.mean().to_vec(),
        input.cov() + &Matrix::from_diagonal(&[nx, ny]),
        input.n0(),
    )
    .unwrap()
}

#[test]
fn unity_gain_reference_values() {
    assert_eq!(fidelity_unity_gain(0.0, 0.0, N0).unwrap(), 1.0);
    assert!((fidelity_unity_gain(N0, N0, N0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((fidelity_unity_gain(2.0 * N0, 2.0 * N0, N0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn fidelity_to_noise_reference_values() {
    assert!((noise_from_fidelity(0.58, N0).unwrap() - 1.448).abs() < 1e-3);
    assert!((noise_from_fidelity(0.74, N0).unwrap() - 0.703).abs() < 1e-3);
    assert_eq!(noise_from_fidelity(1.0, N0).unwrap(), 0.0);
}

#[test]
fn overlap_formula_matches_phase_space_integral() {
    let coherent = State::coherent(2.0, 0.0, N0).unwrap();
    let vacuum = State::vacuum(1, N0).unwrap();
    let f = gaussian_fidelity(&coherent, &vacuum).unwrap();
    let oracle = overlap_oracle(&coherent, &vacuum);
    assert!((f - oracle).abs() < 1e-9, "{f} vs {oracle}");
    // |δ|² = 4, Σ = 2N₀·I: e^{−|δ|²/(4N₀)}
    assert!((f - (-1.0f64).exp()).abs() < 1e-12);

    let squeezed = State::new(vec![0.5, -1.0], Matrix::from_row_slice(2, 2, &[0.5, 0.3, 0.3, 2.5]), N0).unwrap();
    let reference = State::coherent(1.5, 0.5, N0).unwrap();
    let f = gaussian_fidelity(&reference, &squeezed).unwrap();
    assert!((f - overlap_oracle(&reference, &squeezed)).abs() < 1e-9);

    let wide = noisy_copy(&reference, 1.0, 1.0);
    assert!((gaussian_fidelity(&reference, &wide).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((overlap_oracle(&reference, &wide) - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn overlap_oracle_with_other_vacuum_unit() {
    let n0 = 0.25;
    let a = State::coherent(0.3, 0.1, n0).unwrap();
    let b = State::new(vec![0.0, 0.4], Matrix::from_diagonal(&[0.4, 0.3]), n0).unwrap();
    let f = gaussian_fidelity(&a, &b).unwrap();
    assert!((f - overlap_oracle(&a, &b)).abs() < 1e-9);
}

#[test]
fn classification_points() {
    assert_eq!(classify(0.58).unwrap().region, Region::QuantumFax);
    assert_eq!(classify(0.74).unwrap().region, Region::Teleportation);
    assert_eq!(classify(0.3).unwrap().region, Region::Classical);
    assert_eq!(classify(0.5).unwrap().region, Region::Classical);
    assert_eq!(classify(2.0 / 3.0).unwrap().region, Region::QuantumFax);
    assert_eq!(classify(2.0 / 3.0 + 1e-6).unwrap().region, Region::Teleportation);
    assert_eq!(Region::QuantumFax.to_string(), "quantum_fax");
}

#[test]
fn cloning_limits() {
    assert_eq!(cloning_limit(1, N0).unwrap(), (0.0, 1.0));
    let (n, f) = cloning_limit(2, N0).unwrap();
    assert!((n - N0).abs() < 1e-15 && (f - 2.0 / 3.0).abs() < 1e-15);
    let (n, f) = cloning_limit(5, N0).unwrap();
    assert!((n - 1.6).abs() < 1e-15 && (f - 5.0 / 9.0).abs() < 1e-15);
    let (n, f) = cloning_limit(1_000_000, N0).unwrap();
    assert!((n - 2.0).abs() < 1e-5 && (f - 0.5).abs() < 1e-6);
}

fn rank(r: Region) -> u8 {
    match r {
        Region::Classical => 0,
        Region::QuantumFax => 1,
        Region::Teleportation => 2,
    }
}

proptest! {
    #[test]
    fn unity_gain_round_trip(f in 0.01..=1.0f64, n0 in 0.1..4.0f64) {
        let n = noise_from_fidelity(f, n0).unwrap();
        prop_assert!((fidelity_unity_gain(n, n, n0).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn overlap_reduces_to_unity_gain(nx in 0.0..5.0f64, ny in 0.0..5.0f64,
                                     x in -20.0..20.0f64, y in -20.0..20.0f64) {
        let input = State::coherent(x, y, N0).unwrap();
        let f = gaussian_fidelity(&input, &noisy_copy(&input, nx, ny)).unwrap();
        prop_assert!((f - fidelity_unity_gain(nx, ny, N0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn classify_is_monotone(a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rank(classify(lo).unwrap().region) <= rank(classify(hi).unwrap().region));
    }

    #[test]
    fn cloning_limit_decreases_towards_one_half(m in 1..100_000usize) {
        let (_, f) = cloning_limit(m, N0).unwrap();
        let (_, g) = cloning_limit(m + 1, N0).unwrap();
        prop_assert!(g < f && g > 0.5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn overlap_formula_random_states(x in -3.0..3.0f64, y in -3.0..3.0f64,
                                     a in 1.0..3.0f64, b in 1.0..3.0f64, c in -0.5..0.5f64) {
        let input = State::coherent(0.5, -0.5, N0).unwrap();
        let out = State::new(vec![x, y], Matrix::from_row_slice(2, 2, &[a, c, c, b]), N0).unwrap();
        let f = gaussian_fidelity(&input, &out).unwrap();
        prop_assert!((f - overlap_oracle(&input, &out)).abs() < 1e-8);
    }
}
