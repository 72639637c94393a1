//! Protocol runs behind `clone`, `teleport`, `attack`, `conditional` and
//! `scan`. Each returns a summary block and one CSV table. With `samples > 0`
//! the table holds Monte Carlo estimates and the summary compares them with
//! the analytic values.

use rayon::prelude::*;

use cvclone::sampling::{
    empirical_covariance, sample_state, sampled_conditional_variance, sampled_noise_report,
    shotwise_noise_report, variance_standard_error,
};
use cvclone::teleport::eve_vs_bob_scan;
use cvclone::{
    amplifier_split_cloner, bk_teleport, check_1_to_m_bound, check_duplication_bound, cheating_alice,
    classify, cloner_1_to_m, cloning_limit, conditional_squeezing, equivalent_noise, fidelity_unity_gain,
    Cloner, Config, ProbeEnsemble, Report, State,
};

use crate::mc::{self, Comparison};
use crate::scenario::{AttackSpec, CloneSpec, Protocol, ScanSpec, TeleportSpec};
use crate::table::{num, Table};
use crate::CliError;

/// Result of one command: text for stdout, CSV tables and the verdict.
#[derive(Debug, Clone)]
pub struct Run {
    pub summary: Vec<String>,
    pub tables: Vec<(String, Table)>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Sampling {
    pub shots: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn enabled(self) -> bool {
        self.shots > 0
    }
}

fn db_of(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

fn in_n0(x: f64, n0: f64) -> String {
    format!("{:.4} N0", x / n0)
}

pub const CLONE_HEADER: [&str; 7] = ["output_index", "gain_x", "gain_y", "noise_x", "noise_y", "corr_x", "corr_y"];

pub const SCAN_HEADER_TAIL: [&str; 7] = [
    "bob_noise_x",
    "bob_noise_y",
    "bob_fidelity",
    "eve_noise_x",
    "eve_noise_y",
    "eve_fidelity",
    "region",
];

pub fn clone_table(report: &Report) -> Table {
    let mut t = Table::new(&CLONE_HEADER);
    for (i, o) in report.outputs().iter().enumerate() {
        let (cx, cy) = report.mean_corr(i);
        t.push(vec![
            i.to_string(),
            num(o.gain_x),
            num(o.gain_y),
            num(o.noise_x),
            num(o.noise_y),
            num(cx),
            num(cy),
        ]);
    }
    t
}

pub fn build_cloner(spec: &CloneSpec, n0: f64) -> Result<Cloner, CliError> {
    Ok(match *spec {
        CloneSpec::Symmetric { copies } => cloner_1_to_m(copies, n0)?,
        CloneSpec::Split { gain, t } => amplifier_split_cloner(gain, t, n0)?,
    })
}

pub fn clone(spec: &CloneSpec, n0: f64, mc: Sampling) -> Result<Run, CliError> {
    let cloner = build_cloner(spec, n0)?;
    let probes = ProbeEnsemble::standard(n0);
    let analytic = equivalent_noise(&cloner, &probes)?;
    let m = cloner.copies();

    let mut summary = vec![format!("clone 1->{m} ({}), N0 = {n0}", cloner.label())];
    for (i, o) in analytic.outputs().iter().enumerate() {
        let unity = (o.gain_x - 1.0).abs() < 1e-9 && (o.gain_y - 1.0).abs() < 1e-9;
        let fid = if unity {
            format!("fidelity {:.4}", fidelity_unity_gain(o.noise_x.max(0.0), o.noise_y.max(0.0), n0)?)
        } else {
            "fidelity n/a (gain != 1)".to_string()
        };
        summary.push(format!(
            "  output {i}: gain {:.4}/{:.4}, noise_x {}, noise_y {}, {fid}",
            o.gain_x,
            o.gain_y,
            in_n0(o.noise_x, n0),
            in_n0(o.noise_y, n0)
        ));
    }
    let saturation = 1e-9 * n0 * n0;
    let verdict = match spec {
        CloneSpec::Symmetric { copies } => {
            let (ln, lf) = cloning_limit(*copies, n0)?;
            summary.push(format!("  limit 1->{copies}: noise {}, fidelity {lf:.4}", in_n0(ln, n0)));
            let check = check_1_to_m_bound(&analytic, *copies)?;
            (check.passed, check.margin.abs() <= saturation, format!("1->{copies}"))
        }
        CloneSpec::Split { .. } => {
            let check = check_duplication_bound(&analytic)?;
            summary.push(format!("  noise product margin: {:.6} N0^2", check.margin / (n0 * n0)));
            (check.passed, check.margin.abs() <= saturation, "1->2".to_string())
        }
    };
    let mut passed = verdict.0;
    summary.push(format!(
        "  verdict: {} {} bound",
        match verdict {
            (false, _, _) => "violates",
            (true, true, _) => "saturates",
            (true, false, _) => "respects",
        },
        verdict.2
    ));

    let shown = if mc.enabled() {
        let per = mc::shots_per_probe(mc.shots, &probes)?;
        let sampled = sampled_noise_report(&cloner, &probes, per, mc.seed)?;
        let cmp = mc::compare_reports("clone", &analytic, &sampled, &probes, n0, per)?;
        passed &= cmp.iter().all(Comparison::passed);
        summary.push(format!("  {}", mc::summary_line(&cmp, mc.shots, mc.seed)));
        sampled
    } else {
        analytic
    };
    Ok(Run {
        summary,
        tables: vec![("clone".into(), clone_table(&shown))],
        passed,
    })
}

pub fn config_of(spec: &TeleportSpec) -> Config {
    Config::ideal(spec.r)
        .with_gain(spec.gain)
        .with_losses(spec.eta_alice, spec.eta_bob)
        .with_eve(spec.eve)
}

/// Noises and fidelities of Bob and, when tapping, Eve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartyNoise {
    pub gain: (f64, f64),
    pub noise: (f64, f64),
    pub fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportPoint {
    pub bob: PartyNoise,
    pub eve: Option<PartyNoise>,
}

fn party(report: &Report, i: usize) -> Result<PartyNoise, CliError> {
    let o = report.output(i);
    let floor = |v: f64| if v < 0.0 && v > -1e-9 * report.n0() { 0.0 } else { v };
    Ok(PartyNoise {
        gain: (o.gain_x, o.gain_y),
        noise: (o.noise_x, o.noise_y),
        fidelity: fidelity_unity_gain(floor(o.noise_x), floor(o.noise_y), report.n0())?,
    })
}

pub fn analytic_point(spec: &TeleportSpec, n0: f64) -> Result<(TeleportPoint, f64), CliError> {
    let input = State::coherent(spec.input.0, spec.input.1, n0)?;
    let out = bk_teleport(&input, &config_of(spec))?;
    let bob = party(&out.bob_report, 0)?;
    let eve = out.eve_report.as_ref().map(|r| party(r, 0)).transpose()?;
    Ok((TeleportPoint { bob, eve }, out.overlap_bob))
}

/// Joint Bob/Eve report re-estimated by the per-shot protocol, `shots` in
/// total spread over the probes. Also returns the shots per probe.
pub fn sampled_report(spec: &TeleportSpec, n0: f64, shots: usize, seed: u64) -> Result<(Report, usize), CliError> {
    let probes = ProbeEnsemble::standard(n0);
    let per = mc::shots_per_probe(shots, &probes)?;
    Ok((shotwise_noise_report(&config_of(spec), &probes, per, seed, n0)?, per))
}

pub fn point_from_report(report: &Report) -> Result<TeleportPoint, CliError> {
    Ok(TeleportPoint {
        bob: party(report, 0)?,
        eve: if report.len() > 1 { Some(party(report, 1)?) } else { None },
    })
}

fn analytic_joint_report(spec: &TeleportSpec, n0: f64) -> Result<Report, CliError> {
    let tele = cvclone::Teleporter::new(config_of(spec), n0)?;
    Ok(equivalent_noise(&tele, &ProbeEnsemble::standard(n0))?)
}

fn party_line(name: &str, p: &PartyNoise, n0: f64) -> Result<String, CliError> {
    Ok(format!(
        "  {name}: noise_x {}, noise_y {}, fidelity {:.4} ({})",
        in_n0(p.noise.0, n0),
        in_n0(p.noise.1, n0),
        p.fidelity,
        classify(p.fidelity)?.region
    ))
}

fn squeeze_line(spec: &TeleportSpec) -> String {
    format!("r = {:.6} ({:.4} dB), gain {}", spec.r, db_of(spec.r), spec.gain)
}

/// Runs one point analytically and, if asked, by the shotwise oracle.
fn teleport_point(
    spec: &TeleportSpec,
    n0: f64,
    mc: Sampling,
    summary: &mut Vec<String>,
) -> Result<(TeleportPoint, bool), CliError> {
    let (point, overlap) = analytic_point(spec, n0)?;
    summary.push(party_line("bob", &point.bob, n0)?);
    if (spec.gain - 1.0).abs() > 1e-12 {
        summary.push(format!("  bob overlap with the input state: {overlap:.4}"));
    }
    if let Some(eve) = &point.eve {
        summary.push(party_line("eve", eve, n0)?);
    }
    if !mc.enabled() {
        return Ok((point, true));
    }
    let analytic = analytic_joint_report(spec, n0)?;
    let (sampled, per) = sampled_report(spec, n0, mc.shots, mc.seed)?;
    let cmp = mc::compare_reports("teleport", &analytic, &sampled, &ProbeEnsemble::standard(n0), n0, per)?;
    summary.push(format!("  {}", mc::summary_line(&cmp, mc.shots, mc.seed)));
    Ok((point_from_report(&sampled)?, cmp.iter().all(Comparison::passed)))
}

pub fn teleport(spec: &TeleportSpec, n0: f64, mc: Sampling) -> Result<Run, CliError> {
    let mut summary = vec![format!(
        "teleport {}, eta_alice {}, eta_bob {}, N0 = {n0}",
        squeeze_line(spec),
        spec.eta_alice,
        spec.eta_bob
    )];
    let (point, passed) = teleport_point(spec, n0, mc, &mut summary)?;
    let mut t = Table::new(&["party", "gain_x", "gain_y", "noise_x", "noise_y", "fidelity", "region"]);
    let parties = std::iter::once(("bob", point.bob)).chain(point.eve.map(|e| ("eve", e)));
    for (name, p) in parties {
        t.push(vec![
            name.into(),
            num(p.gain.0),
            num(p.gain.1),
            num(p.noise.0),
            num(p.noise.1),
            num(p.fidelity),
            classify(p.fidelity)?.region.to_string(),
        ]);
    }
    Ok(Run {
        summary,
        tables: vec![("teleport".into(), t)],
        passed,
    })
}

pub fn scan_header(swept: &str) -> Vec<String> {
    let mut h = vec!["index".to_string(), swept.to_string()];
    h.extend(SCAN_HEADER_TAIL.iter().map(|s| s.to_string()));
    h
}

pub fn scan_row(index: usize, value: f64, p: &TeleportPoint) -> Result<Vec<String>, CliError> {
    let mut row = vec![
        index.to_string(),
        num(value),
        num(p.bob.noise.0),
        num(p.bob.noise.1),
        num(p.bob.fidelity),
    ];
    match &p.eve {
        Some(e) => row.extend([num(e.noise.0), num(e.noise.1), num(e.fidelity)]),
        None => row.extend([String::new(), String::new(), String::new()]),
    }
    row.push(classify(p.bob.fidelity)?.region.to_string());
    Ok(row)
}

pub fn attack(spec: &AttackSpec, n0: f64, mc: Sampling) -> Result<Run, CliError> {
    match spec {
        AttackSpec::Eve(t) => {
            let mut summary = vec![format!(
                "attack: eve taps bob's arm, {}, eta {}, N0 = {n0}",
                squeeze_line(t),
                t.eta_bob
            )];
            let (point, passed) = teleport_point(t, n0, mc, &mut summary)?;
            let eve = point.eve.expect("eve taps");
            let gap = (point.bob.noise.0 * point.bob.noise.1).sqrt() - (eve.noise.0 * eve.noise.1).sqrt();
            summary.push(format!(
                "  verdict: {}",
                if gap.abs() <= 1e-6 * n0 {
                    "bob and eve copies equally noisy"
                } else if gap < 0.0 {
                    "bob holds the better copy"
                } else {
                    "eve holds the better copy"
                }
            ));
            let mut table = Table::new(&scan_header("eta"));
            table.push(scan_row(0, t.eta_bob, &point)?);
            Ok(Run {
                summary,
                tables: vec![("attack".into(), table)],
                passed,
            })
        }
        AttackSpec::Cheat { bob_fidelity, input } => cheat(*bob_fidelity, *input, n0, mc),
    }
}

fn cheat(target: f64, input: (f64, f64), n0: f64, mc: Sampling) -> Result<Run, CliError> {
    let state = State::coherent(input.0, input.1, n0)?;
    let out = cheating_alice(&state, target)?;
    let mut summary = vec![format!("attack: cheating alice shows bob fidelity {target}, N0 = {n0}")];
    let mut rows = vec![
        ("alice", *out.alice_report.output(0), out.alice_fidelity, &out.alice_state),
        ("bob", *out.bob_report.output(0), out.bob_fidelity, &out.bob_state),
    ];
    let mut passed = true;
    let mut cmp = Vec::new();
    if mc.enabled() {
        for (k, row) in rows.iter_mut().enumerate() {
            let (_, cov) = empirical_covariance(&sample_state(row.3, mc.shots, mc.seed.wrapping_add(k as u64))?)?;
            let (nx, ny) = (cov[(0, 0)] - n0, cov[(1, 1)] - n0);
            for (axis, a, s) in [("x", row.1.noise_x, nx), ("y", row.1.noise_y, ny)] {
                let se = variance_standard_error(n0 + a, mc.shots);
                cmp.push(Comparison::new(format!("{} noise_{axis}", row.0), a, s, se));
            }
            row.1.noise_x = nx;
            row.1.noise_y = ny;
            row.2 = fidelity_unity_gain(nx.max(0.0), ny.max(0.0), n0)?;
        }
        passed = cmp.iter().all(Comparison::passed);
    }
    let mut t = Table::new(&["party", "noise_x", "noise_y", "fidelity", "region"]);
    for (name, o, f, _) in &rows {
        summary.push(format!(
            "  {name}: noise {}, fidelity {f:.4} ({})",
            in_n0(o.noise_x, n0),
            classify(*f)?.region
        ));
        t.push(vec![
            name.to_string(),
            num(o.noise_x),
            num(o.noise_y),
            num(*f),
            classify(*f)?.region.to_string(),
        ]);
    }
    if mc.enabled() {
        summary.push(format!("  {}", mc::summary_line(&cmp, mc.shots, mc.seed)));
    }
    Ok(Run {
        summary,
        tables: vec![("attack".into(), t)],
        passed,
    })
}

pub fn conditional(r: f64, eta: f64, n0: f64, mc: Sampling) -> Result<Run, CliError> {
    let analytic = conditional_squeezing(r, eta, n0)?;
    let mut summary = vec![
        format!("conditional: r = {r:.6} ({:.4} dB), eta {eta}, N0 = {n0}", db_of(r)),
        format!("  conditional variance: {}", in_n0(analytic, n0)),
    ];
    let mut shown = analytic;
    let mut passed = true;
    if mc.enabled() {
        let sampled = sampled_conditional_variance(r, eta, n0, mc.shots, mc.seed)?;
        let c = Comparison::new("conditional variance", analytic, sampled, variance_standard_error(analytic, mc.shots));
        passed = c.passed();
        summary.push(format!("  {}", mc::summary_line(std::slice::from_ref(&c), mc.shots, mc.seed)));
        shown = sampled;
    }
    let squeezed = analytic < n0 * (1.0 - 1e-12);
    summary.push(format!(
        "  verdict: {}",
        if squeezed {
            "conditionally squeezed (below N0)"
        } else {
            "not squeezed"
        }
    ));
    let mut t = Table::new(&["r", "eta", "conditional_variance", "squeezed"]);
    t.push(vec![num(r), num(eta), num(shown), squeezed.to_string()]);
    Ok(Run {
        summary,
        tables: vec![("conditional".into(), t)],
        passed,
    })
}

/// Points run concurrently; point `i` samples with seed `seed + i`. Rows
/// come back in index order.
pub fn scan_points(spec: &ScanSpec, n0: f64, mc: Sampling) -> Result<Vec<TeleportPoint>, CliError> {
    spec.points
        .par_iter()
        .enumerate()
        .map(|(i, (_, p))| {
            if mc.enabled() {
                point_from_report(&sampled_report(p, n0, mc.shots, mc.seed.wrapping_add(i as u64))?.0)
            } else {
                Ok(analytic_point(p, n0)?.0)
            }
        })
        .collect()
}

pub fn scan_table(spec: &ScanSpec, points: &[TeleportPoint]) -> Result<Table, CliError> {
    let mut t = Table::new(&scan_header(&spec.swept));
    for (i, ((v, _), p)) in spec.points.iter().zip(points).enumerate() {
        t.push(scan_row(i, *v, p)?);
    }
    Ok(t)
}

pub fn scan(spec: &ScanSpec, n0: f64, mc: Sampling) -> Result<Run, CliError> {
    let points = scan_points(spec, n0, mc)?;
    let protocol = match spec.protocol {
        Protocol::Attack => "attack",
        Protocol::Teleport => "teleport",
    };
    let mut summary = vec![format!(
        "scan {protocol} over {} ({} points), {}, N0 = {n0}",
        spec.swept,
        points.len(),
        if mc.enabled() {
            format!("monte carlo {} shots per point, seed {}", mc.shots, mc.seed)
        } else {
            "analytic".to_string()
        }
    )];
    let best = points
        .iter()
        .zip(&spec.points)
        .max_by(|a, b| a.0.bob.fidelity.total_cmp(&b.0.bob.fidelity))
        .expect("a range has at least one point");
    summary.push(format!(
        "  best bob fidelity {:.4} at {} = {}",
        best.0.bob.fidelity, spec.swept, best.1 .0
    ));
    if spec.protocol == Protocol::Attack && spec.swept == "eta" {
        let first = spec.points[0].1;
        if first.r > 0.0 {
            let etas: Vec<f64> = spec.points.iter().map(|p| p.0).collect();
            match eve_vs_bob_scan(first.r, &etas, first.gain, n0)?.crossing {
                Some(c) => summary.push(format!("  bob/eve noise crossing at eta = {c:.9}")),
                None => summary.push("  bob/eve noises do not cross inside the range".into()),
            }
        }
    }
    Ok(Run {
        summary,
        tables: vec![("scan".into(), scan_table(spec, &points)?)],
        passed: true,
    })
}
