//! Recovery of power-grid small-signal dynamic responses from ambient data.
//!
//! The library covers both sides of the validation loop:
//!
//! * **Model side** — build a linearized swing model from a case file
//!   ([`grid`]), diagonalize it ([`modal`]), and evaluate closed-form impulse
//!   responses and analytic cross-correlations, or integrate the dynamics
//!   exactly in the time domain ([`sim`]).
//! * **Data side** — recover normalized dynamic responses (frequency, rotor
//!   and bus angle, line flow) from ambient records by detrending, zero-phase
//!   bandpass filtering, cross-correlation and numerical differentiation
//!   ([`recovery`]), and score them against the model ([`metrics`]).
//!
//! Ambient records are produced by driving the linearized dynamics with white
//! noise whose covariance is proportional to the inertia matrix (or with
//! per-load noise mapped through the network reduction). Everything is
//! deterministic given a seed.

pub mod channel;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod modal;
pub mod recovery;
pub mod series;
pub mod sim;

pub use channel::ChannelId;
pub use error::{Error, Result};
pub use grid::{DampingSpec, GridCase, GridModel};
pub use modal::{ImpulseResponse, ModalDecomposition, ResponseKind};
pub use recovery::{recover_response, subtract_reference, RecoveredResponse, RecoveryConfig, ReferencePolicy};
pub use series::{CorrelationSequence, TimeSeries};
pub use sim::{AmbientConfig, PerturbationTarget, StateSpace};
