//! The verification suite behind `cvclone verify`.
//!
//! Eleven numbered criteria, each a set of checks with fixed tolerances.
//! Every number that feeds a check is also written to a CSV artifact, and
//! the whole artifact set is built twice so the run can confirm its own
//! byte-for-byte reproducibility.

use rand::Rng;
use rayon::prelude::*;

use cvclone::sampling::{
    empirical_covariance, sample_state_stream, sampled_conditional_variance, sampled_noise_report,
    shotwise_teleport, stream_rng, variance_standard_error,
};
use cvclone::teleport::{eve_point, eve_vs_bob_scan};
use cvclone::{
    amplifier_split_cloner, bk_teleport, check_duplication_bound, cheating_alice, classify, cloner_1_to_m,
    cloning_limit, conditional_squeezing, equivalent_noise, fidelity_unity_gain, noise_from_fidelity, Config,
    Device, ProbeEnsemble, Region, Report, State, Teleporter,
};

use crate::commands::{clone_table, scan_header, scan_row, TeleportPoint};
use crate::mc::{self, Comparison};
use crate::table::{num, Table};
use crate::CliError;

pub const DEFAULT_SHOTS: usize = 1_000_000;

const EXACT: f64 = 1e-9;
const RANDOM_SPLIT_CLONERS: usize = 1000;
const SAMPLED_SPLIT_CLONERS: usize = 5;
const EVE_SQUEEZINGS: [f64; 3] = [0.2, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl Criterion {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || format!("{what}: got {got}, want {want} ± {tol}"));
    }

    fn compare(&mut self, c: &Comparison) {
        self.check(c.passed(), || {
            format!(
                "{}: sampled {} vs analytic {} ({:.2} SE)",
                c.quantity,
                c.sampled,
                c.analytic,
                c.z()
            )
        });
    }

    fn fail_on(&mut self, what: &str, e: impl std::fmt::Display) {
        self.check(false, || format!("{what}: {e}"));
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub criteria: Vec<Criterion>,
    /// `(file stem, table)`, in a fixed order.
    pub artifacts: Vec<(String, Table)>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(Criterion::passed)
    }

    pub fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.criteria {
            out.push(format!(
                "criterion {:>2} {}: {} ({} checks)",
                c.id,
                c.name,
                if c.passed() { "PASS" } else { "FAIL" },
                c.checks
            ));
            for f in &c.failures {
                out.push(format!("    {f}"));
            }
        }
        let failed = self.criteria.iter().filter(|c| !c.passed()).count();
        out.push(if failed == 0 {
            format!("verify: all {} criteria passed", self.criteria.len())
        } else {
            format!("verify: {failed} of {} criteria FAILED", self.criteria.len())
        });
        out
    }
}

/// Runs the suite. `shots` is the Monte Carlo sample count per estimate.
pub fn verify(seed: u64, shots: usize, n0: f64) -> Result<Verification, CliError> {
    mc::shots_per_probe(shots, &ProbeEnsemble::standard(n0))?;
    let (mut criteria, artifacts) = suite(seed, shots, n0)?;
    let (_, again) = suite(seed, shots, n0)?;

    let mut c11 = Criterion::new(11, "determinism");
    for ((name, a), (_, b)) in artifacts.iter().zip(&again) {
        c11.check(a.to_csv() == b.to_csv(), || format!("{name}.csv differs between two runs"));
    }
    criteria.push(c11);

    let mut overview = Table::new(&["criterion", "name", "passed", "checks", "failures"]);
    for c in &criteria {
        overview.push(vec![
            c.id.to_string(),
            c.name.replace(' ', "_"),
            c.passed().to_string(),
            c.checks.to_string(),
            c.failures.len().to_string(),
        ]);
    }
    let mut artifacts = artifacts;
    artifacts.push(("criteria".into(), overview));
    Ok(Verification { criteria, artifacts })
}

/// One Monte Carlo job; each has its own seed so jobs run in any order.
enum Job {
    Cloner { criterion: u8, label: String, copies: usize, split: Option<(f64, f64)> },
    Teleport { criterion: u8, label: String, cfg: Config },
    TeleportCovariance { criterion: u8, label: String, cfg: Config },
    CheatState { label: String, state: State, noise: f64 },
    Conditional { label: String, r: f64, eta: f64 },
}

impl Job {
    fn criterion(&self) -> u8 {
        match self {
            Job::Cloner { criterion, .. } | Job::Teleport { criterion, .. } | Job::TeleportCovariance { criterion, .. } => {
                *criterion
            }
            Job::CheatState { .. } => 6,
            Job::Conditional { .. } => 8,
        }
    }

    fn run(&self, n0: f64, shots: usize, seed: u64) -> Result<Vec<Comparison>, CliError> {
        let probes = ProbeEnsemble::standard(n0);
        Ok(match self {
            Job::Cloner { label, copies, split, .. } => {
                let cloner = match split {
                    Some((g, t)) => amplifier_split_cloner(*g, *t, n0)?,
                    None => cloner_1_to_m(*copies, n0)?,
                };
                let analytic = equivalent_noise(&cloner, &probes)?;
                let per = mc::shots_per_probe(shots, &probes)?;
                let sampled = sampled_noise_report(&cloner, &probes, per, seed)?;
                mc::compare_reports(label, &analytic, &sampled, &probes, n0, per)?
            }
            Job::Teleport { label, cfg, .. } => {
                let tele = Teleporter::new(*cfg, n0)?;
                let analytic = equivalent_noise(&tele, &probes)?;
                let per = mc::shots_per_probe(shots, &probes)?;
                let sampled = cvclone::sampling::shotwise_noise_report(cfg, &probes, per, seed, n0)?;
                mc::compare_reports(label, &analytic, &sampled, &probes, n0, per)?
            }
            Job::TeleportCovariance { label, cfg, .. } => {
                let input = State::coherent(1.5, -0.5, n0)?;
                let analytic = Teleporter::new(*cfg, n0)?.respond(&input)?;
                let (_, cov) = empirical_covariance(&shotwise_teleport(&input, cfg, shots, seed)?)?;
                mc::compare_covariances(label, analytic.cov(), &cov, shots)
            }
            Job::CheatState { label, state, noise } => {
                let (_, cov) = empirical_covariance(&sample_state_stream(state, shots, seed, 0)?)?;
                let se = variance_standard_error(n0 + noise, shots);
                vec![
                    Comparison::new(format!("{label} noise_x"), *noise, cov[(0, 0)] - n0, se),
                    Comparison::new(format!("{label} noise_y"), *noise, cov[(1, 1)] - n0, se),
                ]
            }
            Job::Conditional { label, r, eta } => {
                let analytic = conditional_squeezing(*r, *eta, n0)?;
                let sampled = sampled_conditional_variance(*r, *eta, n0, shots, seed)?;
                vec![Comparison::new(label.clone(), analytic, sampled, variance_standard_error(analytic, shots))]
            }
        })
    }
}

fn report_row(r: &Report, i: usize) -> (f64, f64) {
    (r.output(i).noise_x, r.output(i).noise_y)
}

type Artifacts = Vec<(String, Table)>;

fn suite(seed: u64, shots: usize, n0: f64) -> Result<(Vec<Criterion>, Artifacts), CliError> {
    let probes = ProbeEnsemble::standard(n0);
    let mut artifacts: Vec<(String, Table)> = Vec::new();
    let mut jobs: Vec<Job> = Vec::new();

    // 1. duplicator
    let mut c1 = Criterion::new(1, "duplicator limit");
    let duplicator = cloner_1_to_m(2, n0)?;
    let dup = equivalent_noise(&duplicator, &probes)?;
    for (i, o) in dup.outputs().iter().enumerate() {
        c1.close(&format!("output {i} noise_x"), o.noise_x, n0, EXACT * n0);
        c1.close(&format!("output {i} noise_y"), o.noise_y, n0, EXACT * n0);
        c1.close(&format!("output {i} fidelity"), fidelity_unity_gain(o.noise_x, o.noise_y, n0)?, 2.0 / 3.0, EXACT);
    }
    artifacts.push(("duplicator".into(), clone_table(&dup)));
    jobs.push(Job::Cloner { criterion: 1, label: "duplicator".into(), copies: 2, split: None });

    // 2. 1→M saturation
    let mut c2 = Criterion::new(2, "1->M saturation");
    let mut limits = Table::new(&["copies", "noise_x", "noise_y", "fidelity", "limit_noise", "limit_fidelity"]);
    for m in 1..=10usize {
        let report = equivalent_noise(&cloner_1_to_m(m, n0)?, &probes)?;
        let want_noise = 2.0 * (m as f64 - 1.0) / m as f64 * n0;
        let want_f = m as f64 / (2.0 * m as f64 - 1.0);
        for (i, o) in report.outputs().iter().enumerate() {
            c2.close(&format!("M={m} output {i} noise_x"), o.noise_x, want_noise, EXACT * n0);
            c2.close(&format!("M={m} output {i} noise_y"), o.noise_y, want_noise, EXACT * n0);
            let f = fidelity_unity_gain(o.noise_x.max(0.0), o.noise_y.max(0.0), n0)?;
            c2.close(&format!("M={m} output {i} fidelity"), f, want_f, EXACT);
        }
        let (ln, lf) = cloning_limit(m, n0)?;
        let (nx, ny) = report_row(&report, 0);
        limits.push(vec![
            m.to_string(),
            num(nx),
            num(ny),
            num(fidelity_unity_gain(nx.max(0.0), ny.max(0.0), n0)?),
            num(ln),
            num(lf),
        ]);
        jobs.push(Job::Cloner { criterion: 2, label: format!("1->{m}"), copies: m, split: None });
    }
    artifacts.push(("cloning_limits".into(), limits));

    // 3. duplication bound on random split cloners and hand-built violations
    let mut c3 = Criterion::new(3, "bound property");
    let mut rng = stream_rng(seed, 1_000_003);
    let mut bound = Table::new(&[
        "index", "gain", "split", "noise_ax", "noise_ay", "noise_bx", "noise_by", "margin", "passed",
    ]);
    for k in 0..RANDOM_SPLIT_CLONERS {
        // log-uniform gain in [1, 100], transmission in [0.01, 0.99]
        let g = 100f64.powf(rng.gen::<f64>());
        let t = 0.01 + 0.98 * rng.gen::<f64>();
        let report = equivalent_noise(&amplifier_split_cloner(g, t, n0)?, &probes)?;
        let check = check_duplication_bound(&report)?;
        c3.check(check.passed, || format!("split cloner G={g} t={t} fails with margin {}", check.margin));
        let (a, b) = (report_row(&report, 0), report_row(&report, 1));
        bound.push(vec![
            k.to_string(),
            num(g),
            num(t),
            num(a.0),
            num(a.1),
            num(b.0),
            num(b.1),
            num(check.margin),
            check.passed.to_string(),
        ]);
        if k < SAMPLED_SPLIT_CLONERS {
            jobs.push(Job::Cloner { criterion: 3, label: format!("split{k}"), copies: 2, split: Some((g, t)) });
        }
    }
    artifacts.push(("bound_property".into(), bound));
    let mut fixtures = Table::new(&["name", "noise_ax", "noise_ay", "noise_bx", "noise_by", "margin", "passed"]);
    let violations: [(&str, [(f64, f64); 2]); 3] = [
        ("both_below", [(0.5, 0.5), (0.5, 0.5)]),
        ("cross_pair", [(1.0, 0.2), (0.9, 1.0)]),
        ("just_below", [(0.99, 1.0), (1.0, 0.99)]),
    ];
    for (name, noises) in violations {
        let scaled = noises.map(|(x, y)| (x * n0, y * n0));
        let check = check_duplication_bound(&Report::uncorrelated(&scaled, n0)?)?;
        c3.check(!check.passed, || format!("hand-built violation `{name}` passed the bound check"));
        fixtures.push(vec![
            name.into(),
            num(scaled[0].0),
            num(scaled[0].1),
            num(scaled[1].0),
            num(scaled[1].1),
            num(check.margin),
            check.passed.to_string(),
        ]);
    }
    artifacts.push(("bound_fixtures".into(), fixtures));

    // 4, 5. classical limit and teleportation threshold
    let mut c4 = Criterion::new(4, "classical limit");
    let mut c5 = Criterion::new(5, "teleportation threshold");
    let vacuum = State::vacuum(1, n0)?;
    let threshold_r = 2f64.ln() / 2.0;
    let mut tele = Table::new(&["r", "gain", "noise_x", "noise_y", "fidelity", "region"]);
    for r in [0.0, threshold_r, 1.0] {
        let cfg = Config::ideal(r);
        let out = bk_teleport(&vacuum, &cfg)?;
        let (nx, ny) = report_row(&out.bob_report, 0);
        if r == 0.0 {
            c4.close("noise_x", nx, 2.0 * n0, EXACT * n0);
            c4.close("noise_y", ny, 2.0 * n0, EXACT * n0);
            c4.close("fidelity", out.fidelity_bob, 0.5, EXACT);
            jobs.push(Job::Teleport { criterion: 4, label: "teleport r=0".into(), cfg });
            jobs.push(Job::TeleportCovariance { criterion: 4, label: "teleport r=0".into(), cfg });
        } else if r == threshold_r {
            c5.close("fidelity", out.fidelity_bob, 2.0 / 3.0, EXACT);
            jobs.push(Job::Teleport { criterion: 5, label: "teleport r=ln2/2".into(), cfg });
            jobs.push(Job::TeleportCovariance { criterion: 5, label: "teleport r=ln2/2".into(), cfg });
        }
        tele.push(vec![
            num(r),
            num(1.0),
            num(nx),
            num(ny),
            num(out.fidelity_bob),
            classify(out.fidelity_bob)?.region.to_string(),
        ]);
    }
    let at = classify(2.0 / 3.0)?.region;
    c5.check(at == Region::QuantumFax, || format!("classify(2/3) = {at}, want quantum_fax"));
    let above = classify(2.0 / 3.0 + 1e-6)?.region;
    c5.check(above == Region::Teleportation, || format!("classify(2/3 + 1e-6) = {above}, want teleportation"));
    artifacts.push(("teleport".into(), tele));

    // 6. cheating Alice
    let mut c6 = Criterion::new(6, "cheating alice");
    let nb = noise_from_fidelity(0.58, n0)?;
    c6.close("noise_from_fidelity(0.58)", nb / n0, 1.448, 1e-3);
    let cheat_input = State::coherent(1.0, -1.0, n0)?;
    let cheat = cheating_alice(&cheat_input, 0.58)?;
    c6.close("alice fidelity", cheat.alice_fidelity, 0.743, 1e-3);
    let mut cheat_table = Table::new(&["party", "noise_x", "noise_y", "fidelity", "region"]);
    for (name, report, f, state) in [
        ("alice", &cheat.alice_report, cheat.alice_fidelity, &cheat.alice_state),
        ("bob", &cheat.bob_report, cheat.bob_fidelity, &cheat.bob_state),
    ] {
        let (nx, ny) = report_row(report, 0);
        cheat_table.push(vec![name.into(), num(nx), num(ny), num(f), classify(f)?.region.to_string()]);
        jobs.push(Job::CheatState { label: format!("cheat {name}"), state: state.clone(), noise: nx });
    }
    artifacts.push(("cheat".into(), cheat_table));

    // 7. Eve crossing
    let mut c7 = Criterion::new(7, "eve crossing");
    let etas: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut crossings = Table::new(&["r", "crossing", "bob_fidelity_at_0.25", "eve_fidelity_at_0.25"]);
    for r in EVE_SQUEEZINGS {
        let scan = eve_vs_bob_scan(r, &etas, 1.0, n0)?;
        let mut table = Table::new(&scan_header("eta"));
        for (i, row) in scan.rows.iter().enumerate() {
            let point = TeleportPoint {
                bob: crate::commands::PartyNoise {
                    gain: (1.0, 1.0),
                    noise: (row.bob_noise_x, row.bob_noise_y),
                    fidelity: row.bob_fidelity,
                },
                eve: Some(crate::commands::PartyNoise {
                    gain: (1.0, 1.0),
                    noise: (row.eve_noise_x, row.eve_noise_y),
                    fidelity: row.eve_fidelity,
                }),
            };
            table.push(scan_row(i, row.eta, &point)?);
        }
        artifacts.push((format!("eve_scan_r{r}"), table));
        match scan.crossing {
            Some(c) => c7.close(&format!("r={r} crossing"), c, 0.5, 1e-6),
            None => c7.fail_on(&format!("r={r} crossing"), "no crossing inside [0, 1]"),
        }
        let quarter = eve_point(r, 0.25, 1.0, n0)?;
        c7.check(quarter.eve_fidelity > quarter.bob_fidelity, || {
            format!("r={r}, eta=0.25: eve {} not above bob {}", quarter.eve_fidelity, quarter.bob_fidelity)
        });
        crossings.push(vec![
            num(r),
            scan.crossing.map(num).unwrap_or_default(),
            num(quarter.bob_fidelity),
            num(quarter.eve_fidelity),
        ]);
        for eta in [0.25, 0.5] {
            let cfg = Config::ideal(r).with_losses(1.0, eta).with_eve(true);
            jobs.push(Job::Teleport { criterion: 7, label: format!("eve r={r} eta={eta}"), cfg });
        }
    }
    artifacts.push(("eve_crossings".into(), crossings));

    // 8. conditional squeezing
    let mut c8 = Criterion::new(8, "conditional squeezing boundary");
    let mut cond = Table::new(&["r", "eta", "conditional_variance", "squeezed"]);
    for (r, eta) in [(0.5, 0.5), (1.0, 0.5), (2.0, 0.5), (1.0, 0.6), (1.0, 0.4)] {
        let v = conditional_squeezing(r, eta, n0)?;
        if eta == 0.5 {
            c8.close(&format!("r={r} eta=0.5"), v, n0, EXACT * n0);
        } else if eta > 0.5 {
            c8.check(v < n0, || format!("r={r} eta={eta}: {v} not below N0"));
        } else {
            c8.check(v > n0, || format!("r={r} eta={eta}: {v} not above N0"));
        }
        cond.push(vec![num(r), num(eta), num(v), (v < n0).to_string()]);
        jobs.push(Job::Conditional { label: format!("conditional r={r} eta={eta}"), r, eta });
    }
    artifacts.push(("conditional".into(), cond));

    // 9. region classification
    let mut c9 = Criterion::new(9, "region classification");
    let mut regions = Table::new(&["fidelity", "region"]);
    for (f, want) in [
        (0.5, Region::Classical),
        (0.58, Region::QuantumFax),
        (2.0 / 3.0, Region::QuantumFax),
        (0.74, Region::Teleportation),
    ] {
        let got = classify(f)?.region;
        if f != 2.0 / 3.0 {
            c9.check(got == want, || format!("classify({f}) = {got}, want {want}"));
        }
        regions.push(vec![num(f), got.to_string()]);
    }
    artifacts.push(("classification".into(), regions));

    // 10. shotwise oracle for everything above
    let mut c10 = Criterion::new(10, "oracle equivalence");
    let results: Vec<(u8, Result<Vec<Comparison>, CliError>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, job)| (job.criterion(), job.run(n0, shots, seed.wrapping_add(k as u64))))
        .collect();
    let mut mc_table = Table::new(&[
        "criterion", "quantity", "analytic", "sampled", "standard_error", "z_score", "passed",
    ]);
    for (criterion, result) in results {
        match result {
            Ok(cmp) => {
                for c in cmp {
                    c10.compare(&c);
                    if criterion == 1 {
                        c1.compare(&c);
                    }
                    mc_table.push(vec![
                        criterion.to_string(),
                        c.quantity.replace(' ', "_"),
                        num(c.analytic),
                        num(c.sampled),
                        num(c.standard_error),
                        num(c.z()),
                        c.passed().to_string(),
                    ]);
                }
            }
            Err(e) => c10.fail_on(&format!("monte carlo job for criterion {criterion}"), e),
        }
    }
    artifacts.push(("monte_carlo".into(), mc_table));

    Ok((vec![c1, c2, c3, c4, c5, c6, c7, c8, c9, c10], artifacts))
}
