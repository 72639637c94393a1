//! Scenario files, flag merging and validation.
//!
//! A scenario file is UTF-8 text of `key = value` lines. `#` starts a
//! comment, blank lines are ignored and `-` in keys reads as `_`, so
//! `squeezing-db` and `squeezing_db` are the same key. Flags override file
//! values key by key. Every error names the offending key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Flag,
    File { line: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Flag => f.write_str("command line"),
            Origin::File { line } => write!(f, "scenario line {line}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    pub origin: Origin,
}

pub type Entries = BTreeMap<String, Entry>;

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn parse_file(text: &str) -> Result<Entries, CliError> {
    let mut out = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Usage(format!(
                "scenario line {line}: expected `key = value`, got `{content}`"
            )));
        };
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(CliError::Usage(format!("scenario line {line}: empty key")));
        }
        let entry = Entry {
            value: value.trim().to_string(),
            origin: Origin::File { line },
        };
        if let Some(prev) = out.insert(key.clone(), entry) {
            return Err(CliError::Usage(format!(
                "key `{key}` given twice ({} and scenario line {line})",
                prev.origin
            )));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Clone,
    Teleport,
    Attack,
    Conditional,
    Scan,
    Verify,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Clone => "clone",
            CommandKind::Teleport => "teleport",
            CommandKind::Attack => "attack",
            CommandKind::Conditional => "conditional",
            CommandKind::Scan => "scan",
            CommandKind::Verify => "verify",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            CommandKind::Clone => &["copies", "gain", "split"],
            CommandKind::Teleport => &[
                "r", "squeezing_db", "gain", "loss_alice", "loss_bob", "eve", "input_x", "input_y",
            ],
            CommandKind::Attack => &[
                "strategy", "r", "squeezing_db", "gain", "eta", "bob_fidelity", "input_x", "input_y",
            ],
            CommandKind::Conditional => &["r", "squeezing_db", "eta"],
            CommandKind::Scan => &["protocol", "r", "squeezing_db", "gain", "eta", "loss_alice", "loss_bob"],
            CommandKind::Verify => &[],
        }
    }
}

impl FromStr for CommandKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "clone" => CommandKind::Clone,
            "teleport" => CommandKind::Teleport,
            "attack" => CommandKind::Attack,
            "conditional" => CommandKind::Conditional,
            "scan" => CommandKind::Scan,
            "verify" => CommandKind::Verify,
            _ => return Err(()),
        })
    }
}

const GLOBAL_KEYS: &[&str] = &["command", "seed", "samples", "n0", "output", "format"];

/// Natural squeezing parameter from dB: `r = ln(10^{dB/10})/2`.
pub fn r_from_db(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum CloneSpec {
    Symmetric { copies: usize },
    Split { gain: f64, t: f64 },
}

/// One teleportation run. Efficiencies are transmissions, `1 − loss`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportSpec {
    pub r: f64,
    pub gain: f64,
    pub eta_alice: f64,
    pub eta_bob: f64,
    pub eve: bool,
    pub input: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    /// Eve holds the light lost from Bob's arm; Alice's arm is lossless.
    Eve(TeleportSpec),
    Cheat { bob_fidelity: f64, input: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Teleport,
    Attack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub protocol: Protocol,
    /// Name of the swept key, used as the second CSV column.
    pub swept: String,
    /// `(swept value, run)` in index order.
    pub points: Vec<(f64, TeleportSpec)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Clone(CloneSpec),
    Teleport(TeleportSpec),
    Attack(AttackSpec),
    Conditional { r: f64, eta: f64 },
    Scan(ScanSpec),
    Verify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub command: Command,
    pub seed: u64,
    /// `None` lets the command pick its default.
    pub samples: Option<usize>,
    pub n0: f64,
    pub output: Option<PathBuf>,
    /// Non-fatal notes for stderr, such as a dB/r conflict.
    pub warnings: Vec<String>,
}

/// Merges flag entries over file entries and validates the result.
pub fn build(
    flag_command: Option<&str>,
    flags: &[(&str, String)],
    file: Entries,
) -> Result<Scenario, CliError> {
    let mut entries = file;
    if let Some(cmd) = flag_command {
        entries.insert(
            "command".into(),
            Entry {
                value: cmd.into(),
                origin: Origin::Flag,
            },
        );
    }
    for (k, v) in flags {
        entries.insert(
            normalize_key(k),
            Entry {
                value: v.clone(),
                origin: Origin::Flag,
            },
        );
    }
    let f = Fields { entries };

    let kind = match f.entries.get("command") {
        None => return Err(CliError::Usage("missing command".into())),
        Some(e) => e.value.parse::<CommandKind>().map_err(|_| {
            f.error(
                "command",
                "expected one of clone, teleport, attack, conditional, scan, verify",
            )
        })?,
    };
    for key in f.entries.keys() {
        if !GLOBAL_KEYS.contains(&key.as_str()) && !kind.keys().contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown key `{key}` for command `{}` ({})",
                kind.name(),
                f.entries[key].origin
            )));
        }
    }

    let seed = f.parsed::<u64>("seed", "an unsigned 64-bit integer")?.unwrap_or(0);
    let samples = f.parsed::<usize>("samples", "a non-negative integer")?;
    let n0 = f.real("n0")?.unwrap_or(1.0);
    if n0 <= 0.0 {
        return Err(f.error("n0", "must be > 0"));
    }
    if let Some(e) = f.entries.get("format") {
        if e.value != "csv" {
            return Err(f.error("format", "only `csv` is supported"));
        }
    }
    let output = f.entries.get("output").map(|e| PathBuf::from(&e.value));

    let mut warnings = Vec::new();
    let command = match kind {
        CommandKind::Clone => Command::Clone(clone_spec(&f)?),
        CommandKind::Teleport => {
            let r = f.required(squeeze(&f, &mut warnings)?, "r` or `squeezing_db")?;
            Command::Teleport(TeleportSpec {
                r,
                gain: gain(&f)?,
                eta_alice: 1.0 - f.real_in("loss_alice", 0.0, 1.0)?.unwrap_or(0.0),
                eta_bob: 1.0 - f.real_in("loss_bob", 0.0, 1.0)?.unwrap_or(0.0),
                eve: f.parsed::<bool>("eve", "`true` or `false`")?.unwrap_or(false),
                input: input(&f)?,
            })
        }
        CommandKind::Attack => Command::Attack(attack_spec(&f, &mut warnings)?),
        CommandKind::Conditional => {
            let r = f.required(squeeze(&f, &mut warnings)?, "r` or `squeezing_db")?;
            let eta = f.required(f.real_in("eta", 0.0, 1.0)?, "eta")?;
            Command::Conditional { r, eta }
        }
        CommandKind::Scan => Command::Scan(scan_spec(&f, &mut warnings)?),
        CommandKind::Verify => Command::Verify,
    };
    Ok(Scenario {
        command,
        seed,
        samples,
        n0,
        output,
        warnings,
    })
}

struct Fields {
    entries: Entries,
}

impl Fields {
    fn error(&self, key: &str, what: &str) -> CliError {
        match self.entries.get(key) {
            Some(e) => CliError::Usage(format!(
                "invalid value `{}` for key `{key}` ({}): {what}",
                e.value, e.origin
            )),
            None => CliError::Usage(format!("key `{key}`: {what}")),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn parsed<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.error(key, &format!("expected {expected}"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, CliError> {
        let v = self.parsed::<f64>(key, "a real number")?;
        match v {
            Some(x) if !x.is_finite() => Err(self.error(key, "must be finite")),
            _ => Ok(v),
        }
    }

    fn real_in(&self, key: &str, lo: f64, hi: f64) -> Result<Option<f64>, CliError> {
        let v = self.real(key)?;
        if let Some(x) = v {
            check_range(x, lo, hi).map_err(|m| self.error(key, &m))?;
        }
        Ok(v)
    }

    fn missing(&self, key: &str) -> CliError {
        let cmd = self.entries.get("command").map(|e| e.value.as_str()).unwrap_or("?");
        CliError::Usage(format!("missing required key `{key}` for command `{cmd}`"))
    }

    fn required<T>(&self, v: Option<T>, key: &str) -> Result<T, CliError> {
        v.ok_or_else(|| self.missing(key))
    }

    fn forbid(&self, keys: &[&str], context: &str) -> Result<(), CliError> {
        for k in keys {
            if let Some(e) = self.entries.get(*k) {
                return Err(CliError::Usage(format!(
                    "key `{k}` does not apply to {context} ({})",
                    e.origin
                )));
            }
        }
        Ok(())
    }
}

fn check_range(x: f64, lo: f64, hi: f64) -> Result<(), String> {
    if x < lo || x > hi {
        Err(format!("must lie in [{lo}, {hi}]"))
    } else {
        Ok(())
    }
}

fn squeeze(f: &Fields, warnings: &mut Vec<String>) -> Result<Option<f64>, CliError> {
    let db = f.real_in("squeezing_db", 0.0, f64::MAX)?;
    let r = f.real_in("r", 0.0, f64::MAX)?;
    if let (Some(d), Some(_)) = (db, r) {
        warnings.push(squeeze_conflict(d));
    }
    Ok(db.map(r_from_db).or(r))
}

fn squeeze_conflict(db: impl fmt::Display) -> String {
    format!("both `squeezing_db` and `r` given; using squeezing_db = {db}")
}

fn gain(f: &Fields) -> Result<f64, CliError> {
    let g = f.real("gain")?.unwrap_or(1.0);
    if g <= 0.0 {
        return Err(f.error("gain", "must be > 0"));
    }
    Ok(g)
}

fn input(f: &Fields) -> Result<(f64, f64), CliError> {
    Ok((f.real("input_x")?.unwrap_or(0.0), f.real("input_y")?.unwrap_or(0.0)))
}

fn clone_spec(f: &Fields) -> Result<CloneSpec, CliError> {
    let copies = f.parsed::<usize>("copies", "a positive integer")?;
    if f.has("gain") || f.has("split") {
        let g = f.required(f.real("gain")?, "gain")?;
        let t = f.required(f.real("split")?, "split")?;
        if g < 1.0 {
            return Err(f.error("gain", "amplifier gain must be ≥ 1"));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(f.error("split", "must lie strictly between 0 and 1"));
        }
        if copies.is_some_and(|m| m != 2) {
            return Err(f.error("copies", "a split cloner has exactly 2 outputs"));
        }
        return Ok(CloneSpec::Split { gain: g, t });
    }
    let m = f.required(copies, "copies")?;
    if !(1..=64).contains(&m) {
        return Err(f.error("copies", "must lie in [1, 64]"));
    }
    Ok(CloneSpec::Symmetric { copies: m })
}

fn attack_spec(f: &Fields, warnings: &mut Vec<String>) -> Result<AttackSpec, CliError> {
    let strategy = f.entries.get("strategy").map(|e| e.value.as_str()).unwrap_or("eve");
    match strategy {
        "eve" => {
            f.forbid(&["bob_fidelity"], "strategy `eve`")?;
            let r = f.required(squeeze(f, warnings)?, "r` or `squeezing_db")?;
            let eta = f.required(f.real_in("eta", 0.0, 1.0)?, "eta")?;
            Ok(AttackSpec::Eve(TeleportSpec {
                r,
                gain: gain(f)?,
                eta_alice: 1.0,
                eta_bob: eta,
                eve: true,
                input: input(f)?,
            }))
        }
        "cheat" => {
            f.forbid(&["r", "squeezing_db", "gain", "eta"], "strategy `cheat`")?;
            let target = f.required(f.real("bob_fidelity")?, "bob_fidelity")?;
            if !(target > 0.5 && target <= 2.0 / 3.0) {
                return Err(f.error("bob_fidelity", "must lie in (1/2, 2/3]"));
            }
            Ok(AttackSpec::Cheat {
                bob_fidelity: target,
                input: input(f)?,
            })
        }
        _ => Err(f.error("strategy", "expected `eve` or `cheat`")),
    }
}

/// `start:stop:steps`, inclusive of both ends.
pub fn parse_range(text: &str) -> Option<Result<Vec<f64>, String>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 1 {
        return None;
    }
    let parse = || -> Result<Vec<f64>, String> {
        let [a, b, n] = parts[..] else {
            return Err("a range is `start:stop:steps`".into());
        };
        let start: f64 = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
        let stop: f64 = b.trim().parse().map_err(|_| format!("bad range stop `{b}`"))?;
        let steps: usize = n.trim().parse().map_err(|_| format!("bad step count `{n}`"))?;
        if !(start.is_finite() && stop.is_finite()) {
            return Err("range ends must be finite".into());
        }
        match steps {
            0 => Err("step count must be ≥ 1".into()),
            1 => Ok(vec![start]),
            _ => {
                let h = (stop - start) / (steps - 1) as f64;
                Ok((0..steps)
                    .map(|i| if i + 1 == steps { stop } else { start + i as f64 * h })
                    .collect())
            }
        }
    };
    Some(parse())
}

fn scan_spec(f: &Fields, warnings: &mut Vec<String>) -> Result<ScanSpec, CliError> {
    let protocol = match f.entries.get("protocol").map(|e| e.value.as_str()) {
        Some("attack") => Protocol::Attack,
        Some("teleport") => Protocol::Teleport,
        Some(_) => return Err(f.error("protocol", "expected `attack` or `teleport`")),
        None => return Err(f.missing("protocol")),
    };
    match protocol {
        Protocol::Attack => f.forbid(&["loss_alice", "loss_bob"], "an attack scan")?,
        Protocol::Teleport => f.forbid(&["eta"], "a teleport scan; use `loss_bob`")?,
    }

    let mut skip_r = false;
    if f.has("squeezing_db") && f.has("r") {
        warnings.push(squeeze_conflict(&f.entries["squeezing_db"].value));
        skip_r = true;
    }

    // (key, lo, hi); each is a scalar or the single sweep
    let bounds: &[(&str, f64, f64)] = &[
        ("r", 0.0, f64::MAX),
        ("squeezing_db", 0.0, f64::MAX),
        ("gain", f64::MIN_POSITIVE, f64::MAX),
        ("eta", 0.0, 1.0),
        ("loss_alice", 0.0, 1.0),
        ("loss_bob", 0.0, 1.0),
    ];
    let mut scalars: BTreeMap<&str, f64> = BTreeMap::new();
    let mut sweep: Option<(&str, Vec<f64>)> = None;
    for &(key, lo, hi) in bounds {
        let Some(e) = f.entries.get(key) else { continue };
        if key == "r" && skip_r {
            continue;
        }
        match parse_range(&e.value) {
            Some(range) => {
                let values = range.map_err(|m| f.error(key, &m))?;
                for &v in &values {
                    check_range(v, lo, hi).map_err(|m| f.error(key, &format!("every swept value {m}")))?;
                }
                if let Some((other, _)) = sweep {
                    return Err(f.error(key, &format!("only one key may be swept; `{other}` already is")));
                }
                sweep = Some((key, values));
            }
            None => {
                let v = f.real_in(key, lo, hi)?.expect("present");
                scalars.insert(key, v);
            }
        }
    }
    let Some((swept, values)) = sweep else {
        return Err(CliError::Usage("scan needs one key given as `start:stop:steps`".into()));
    };

    let squeeze_of = |key: &str, v: f64| if key == "squeezing_db" { r_from_db(v) } else { v };
    let squeeze_fixed = scalars
        .get("squeezing_db")
        .map(|&d| r_from_db(d))
        .or(scalars.get("r").copied());
    let sweeps_squeeze = swept == "r" || swept == "squeezing_db";
    if !sweeps_squeeze && squeeze_fixed.is_none() {
        return Err(f.missing("r` or `squeezing_db"));
    }
    if protocol == Protocol::Attack && swept != "eta" && !scalars.contains_key("eta") {
        return Err(f.missing("eta"));
    }

    let points = values
        .into_iter()
        .map(|v| {
            let pick = |key: &str, default: f64| {
                if swept == key {
                    v
                } else {
                    scalars.get(key).copied().unwrap_or(default)
                }
            };
            let r = if sweeps_squeeze { squeeze_of(swept, v) } else { squeeze_fixed.unwrap_or(0.0) };
            let spec = match protocol {
                Protocol::Attack => TeleportSpec {
                    r,
                    gain: pick("gain", 1.0),
                    eta_alice: 1.0,
                    eta_bob: pick("eta", 1.0),
                    eve: true,
                    input: (0.0, 0.0),
                },
                Protocol::Teleport => TeleportSpec {
                    r,
                    gain: pick("gain", 1.0),
                    eta_alice: 1.0 - pick("loss_alice", 0.0),
                    eta_bob: 1.0 - pick("loss_bob", 0.0),
                    eve: false,
                    input: (0.0, 0.0),
                },
            };
            (v, spec)
        })
        .collect();
    Ok(ScanSpec {
        protocol,
        swept: swept.to_string(),
        points,
    })
}
