//! One-bit decentralized detection of an unknown deterministic scalar.
//!
//! Sensors observe `x_k = h_k·θ + w_k`, quantize to one bit against a
//! threshold `τ_k`, and send the bit over a binary symmetric channel with
//! bit-error probability `pe_k`. The fusion center tests `θ = 0` against
//! `θ ≠ 0` with either the Rao (score) test or the GLRT.
//!
//! Module map:
//! - [`noise`]: density families and their special functions ([`special`]).
//! - [`network`]: sensors, scenarios and Monte Carlo trial generation.
//! - [`design`]: per-sensor quantizer threshold optimization.
//! - [`fusion`]: likelihood, score, Fisher information, Rao and GLR statistics.
//! - [`asymptotics`]: weak-signal and CLT performance predictors.
//! - [`harness`]: ROC estimation, threshold calibration, detection-vs-K sweeps.
//! - [`cli`]: the `fuselab` command-line front end.

pub mod asymptotics;
pub mod checks;
pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod network;
pub mod noise;
pub mod optim;
pub mod special;

pub use error::{Error, Result};
pub use noise::NoiseModel;
pub use network::{ReceivedVector, Scenario, SensorSpec};
