//! Gaussian continuous-variable quantum optics for cloning and teleportation
//! benchmarks.
//!
//! States are mean vectors and covariance matrices over the quadratures
//! X₁,Y₁,X₂,Y₂,… with `[X, Y] = 2i·N₀`, so the vacuum has variance N₀ on
//! each quadrature. Every numeric type is generic over [`Real`]; the `f64`
//! aliases below are what applications normally use.
//!
//! * [`state`] and [`channel`]: states, channels, conditioning, feed-forward.
//! * [`components`]: beamsplitter, amplifier, loss, EPR source, displacement.
//! * [`cloning`]: amplifier + beamsplitter cloners and their noise reports.
//! * [`teleport`]: EPR teleportation, cheating Alice, eavesdropping Eve,
//!   conditional squeezing.
//! * [`metrics`]: fidelities, cloning limits, region classification.
//! * [`sampling`]: the Monte Carlo cross-check path.

#![forbid(unsafe_code)]

pub mod channel;
pub mod cloning;
pub mod components;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod sampling;
pub mod scalar;
pub mod state;
pub mod teleport;

pub use channel::GaussianChannel;
pub use cloning::{
    amplifier_split_cloner, check_1_to_m_bound, check_duplication_bound, cloner_1_to_m,
    duplicator, equivalent_noise, BoundCheck, ClonerCircuit, Device, NoiseReport, OutputNoise,
    ProbeEnsemble,
};
pub use components::{amplifier, beamsplitter, displacement, epr_source, loss, ComponentSpec};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{
    classify, cloning_limit, fidelity_unity_gain, gaussian_fidelity, noise_from_fidelity,
    FidelityVerdict, Region,
};
pub use scalar::Real;
pub use state::{Axis, FeedForward, GaussianState, QuadratureIndex};
pub use teleport::{
    bk_teleport, cheating_alice, conditional_squeezing, eve_vs_bob_scan, TeleportConfig,
    TeleportOutcome, Teleporter,
};

pub type State = GaussianState<f64>;
pub type Channel = GaussianChannel<f64>;
pub type Report = NoiseReport<f64>;
pub type Cloner = ClonerCircuit<f64>;
pub type Config = TeleportConfig<f64>;
pub type Outcome = TeleportOutcome<f64>;

pub type State32 = GaussianState<f32>;
pub type Channel32 = GaussianChannel<f32>;
pub type Report32 = NoiseReport<f32>;
pub type Config32 = TeleportConfig<f32>;
