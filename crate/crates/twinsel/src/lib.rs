//! Conditional preparation of sub-Poissonian light from twin-beam photocurrents.
//!
//! The crate simulates the intensity fluctuations of two quantum-correlated
//! beams ("twin beams"), applies a conditional selection protocol — keep the
//! signal sample only when the simultaneously recorded idler sample falls
//! inside a narrow band — and compares the noise statistics of the selected
//! ensemble against closed-form Gaussian predictions.
//!
//! Everything is expressed in shot-noise units: photocurrent samples are
//! mean-subtracted fluctuations normalised so that a coherent (shot-noise
//! limited) beam has variance 1. In these units the Fano factor of a beam is
//! simply its fluctuation variance, and "x dB below shot noise" means a
//! variance of `10^(-x/10)`.
//!
//! The pipeline is split into small layers:
//!
//! * [`noise`] — the shot-noise-unit / decibel bookkeeping ([`NoiseLevel`]).
//! * [`stats`] — estimators on recorded traces: variance, Fano factor,
//!   gemellity (twin-beam difference squeezing), histograms.
//! * [`trace`] — the [`Trace`] container pairing signal and idler samples.
//! * [`model`] — the Gaussian source model: covariance construction, optical
//!   loss, correlated sampling, dark noise, digitisation.
//! * [`select`] — the conditional selection engine.
//! * [`oracle`] — closed-form predictions the simulation is tested against.
//! * [`tracefile`] — plain-text persistence for traces.
//! * [`config`] — TOML scenario configuration.
//! * [`report`] — serialisable result records (JSON + CSV).
//! * [`scenario`] — end-to-end scenario runners used by the CLI.

pub mod config;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod select;
pub mod stats;
pub mod trace;
pub mod tracefile;

pub use config::{ScenarioConfig, ScenarioKind, Seeds, WidthConvention};
pub use model::{CovarianceMatrix, TwinBeamModel};
pub use noise::NoiseLevel;
pub use report::NoiseReport;
pub use scenario::{analyze_trace, generate_trace, run_scenario, ScenarioOutcome, TraceAnalysis};
pub use select::{ConditionalResult, SelectionBand};
pub use trace::{Trace, TraceMeta};
