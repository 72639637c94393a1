//! Command-line surface. Every value is taken as text here and typed later
//! in [`crate::scenario`], so flags and scenario files share one validator
//! and one set of error messages.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cvclone",
    version,
    about = "Gaussian cloning and teleportation benchmarks",
    long_about = "Runs cloning machines, EPR teleportation, eavesdropping and \
                  conditional-squeezing scenarios on exact Gaussian covariance \
                  models, with an optional shot-by-shot Monte Carlo cross-check.\n\n\
                  Exit codes: 0 success, 1 failed verification, 2 usage error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<CommandArgs>,

    /// Seed for every Monte Carlo stream.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<String>,

    /// Shots per Monte Carlo estimate; 0 keeps to the analytic path.
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<String>,

    /// Vacuum noise unit N₀.
    #[arg(long, global = true, value_name = "REAL")]
    pub n0: Option<String>,

    /// CSV destination: a file, or a directory for `verify`.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<String>,

    /// Output format. Only `csv` is supported.
    #[arg(long, global = true, value_name = "FORMAT")]
    pub format: Option<String>,

    /// Scenario file of `key = value` lines. Flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Symmetric 1→M cloner, or a two-output amplifier + splitter cloner.
    Clone(CloneArgs),
    /// EPR teleportation of a coherent state.
    Teleport(TeleportArgs),
    /// Eavesdropping on Bob's arm, or a cheating Alice.
    Attack(AttackArgs),
    /// Conditional squeezing of one EPR arm given a homodyne record of the other.
    Conditional(ConditionalArgs),
    /// Sweep one parameter of `teleport` or `attack`.
    Scan(ScanArgs),
    /// Run the full verification suite and write its CSV artifacts.
    Verify,
}

#[derive(Debug, Args, Default)]
pub struct SqueezeArgs {
    /// Two-mode squeezing parameter r.
    #[arg(long, value_name = "REAL")]
    pub r: Option<String>,

    /// Squeezing in dB; takes precedence over `--r`.
    #[arg(long = "squeezing-db", value_name = "DB")]
    pub squeezing_db: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CloneArgs {
    /// Number of copies M.
    #[arg(long, value_name = "M")]
    pub copies: Option<String>,

    /// Amplifier gain G of a two-output split cloner.
    #[arg(long, value_name = "G")]
    pub gain: Option<String>,

    /// Splitter transmission t of a two-output split cloner.
    #[arg(long, value_name = "T")]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TeleportArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,

    /// Classical feed-forward gain.
    #[arg(long, value_name = "G")]
    pub gain: Option<String>,

    /// Fraction of Alice's EPR arm lost.
    #[arg(long = "loss-alice", value_name = "FRACTION")]
    pub loss_alice: Option<String>,

    /// Fraction of Bob's EPR arm lost.
    #[arg(long = "loss-bob", value_name = "FRACTION")]
    pub loss_bob: Option<String>,

    /// Hand the light lost from Bob's arm to an eavesdropper.
    #[arg(long)]
    pub eve: bool,

    /// Input coherent amplitude on X.
    #[arg(long = "input-x", value_name = "REAL")]
    pub input_x: Option<String>,

    /// Input coherent amplitude on Y.
    #[arg(long = "input-y", value_name = "REAL")]
    pub input_y: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct AttackArgs {
    /// `eve` taps Bob's arm; `cheat` is Alice keeping a better copy.
    #[arg(long, value_name = "eve|cheat")]
    pub strategy: Option<String>,

    #[command(flatten)]
    pub squeeze: SqueezeArgs,

    /// Classical feed-forward gain.
    #[arg(long, value_name = "G")]
    pub gain: Option<String>,

    /// Transmission of Bob's arm; the rest goes to Eve.
    #[arg(long, value_name = "ETA")]
    pub eta: Option<String>,

    /// Fidelity a cheating Alice lets Bob see.
    #[arg(long = "bob-fidelity", value_name = "F")]
    pub bob_fidelity: Option<String>,

    /// Input coherent amplitude on X.
    #[arg(long = "input-x", value_name = "REAL")]
    pub input_x: Option<String>,

    /// Input coherent amplitude on Y.
    #[arg(long = "input-y", value_name = "REAL")]
    pub input_y: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,

    /// Transmission of each EPR arm.
    #[arg(long, value_name = "ETA")]
    pub eta: Option<String>,
}

/// Exactly one of the numeric parameters is given as `start:stop:steps`.
#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    /// Protocol to sweep: `attack` or `teleport`.
    #[arg(long = "command", visible_alias = "protocol", value_name = "attack|teleport")]
    pub protocol: Option<String>,

    #[command(flatten)]
    pub squeeze: SqueezeArgs,

    /// Classical feed-forward gain.
    #[arg(long, value_name = "G")]
    pub gain: Option<String>,

    /// Transmission of Bob's arm (attack).
    #[arg(long, value_name = "ETA")]
    pub eta: Option<String>,

    /// Fraction of Alice's EPR arm lost (teleport).
    #[arg(long = "loss-alice", value_name = "FRACTION")]
    pub loss_alice: Option<String>,

    /// Fraction of Bob's EPR arm lost (teleport).
    #[arg(long = "loss-bob", value_name = "FRACTION")]
    pub loss_bob: Option<String>,
}

impl Cli {
    /// Command name and `(key, value)` pairs of every flag that was given.
    pub fn flag_entries(&self) -> (Option<&'static str>, Vec<(&'static str, String)>) {
        let mut out = Vec::new();
        let mut push = |key: &'static str, value: &Option<String>| {
            if let Some(v) = value {
                out.push((key, v.clone()));
            }
        };
        push("seed", &self.seed);
        push("samples", &self.samples);
        push("n0", &self.n0);
        push("output", &self.output);
        push("format", &self.format);

        let name = match &self.command {
            None => None,
            Some(CommandArgs::Clone(a)) => {
                push("copies", &a.copies);
                push("gain", &a.gain);
                push("split", &a.split);
                Some("clone")
            }
            Some(CommandArgs::Teleport(a)) => {
                push("r", &a.squeeze.r);
                push("squeezing_db", &a.squeeze.squeezing_db);
                push("gain", &a.gain);
                push("loss_alice", &a.loss_alice);
                push("loss_bob", &a.loss_bob);
                push("input_x", &a.input_x);
                push("input_y", &a.input_y);
                if a.eve {
                    push("eve", &Some("true".into()));
                }
                Some("teleport")
            }
            Some(CommandArgs::Attack(a)) => {
                push("strategy", &a.strategy);
                push("r", &a.squeeze.r);
                push("squeezing_db", &a.squeeze.squeezing_db);
                push("gain", &a.gain);
                push("eta", &a.eta);
                push("bob_fidelity", &a.bob_fidelity);
                push("input_x", &a.input_x);
                push("input_y", &a.input_y);
                Some("attack")
            }
            Some(CommandArgs::Conditional(a)) => {
                push("r", &a.squeeze.r);
                push("squeezing_db", &a.squeeze.squeezing_db);
                push("eta", &a.eta);
                Some("conditional")
            }
            Some(CommandArgs::Scan(a)) => {
                push("protocol", &a.protocol);
                push("r", &a.squeeze.r);
                push("squeezing_db", &a.squeeze.squeezing_db);
                push("gain", &a.gain);
                push("eta", &a.eta);
                push("loss_alice", &a.loss_alice);
                push("loss_bob", &a.loss_bob);
                Some("scan")
            }
            Some(CommandArgs::Verify) => Some("verify"),
        };
        (name, out)
    }
}
