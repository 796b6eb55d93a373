//! Simulation and analysis toolkit for star-topology, wavelength-routed
//! quantum key distribution networks.
//!
//! A central passive quantum router built from wavelength multiplexers
//! connects every pair of users on a dedicated wavelength. The crate covers:
//!
//! - [`topology`]: wavelength planning (edge colouring of the complete graph)
//!   and the router model (port channel sets, isolation matrix, routing).
//! - [`optics`]: link budgets, detector gain, analytic QBER decomposition,
//!   inter-channel crosstalk and excess-error calibration.
//! - [`protocol`]: the four-phase single-detector BB84 session at pulse level.
//! - [`decoy`]: two-intensity decoy-state bounds and secure key rate.
//! - [`simulator`]: multi-session Monte-Carlo runs in single-link and
//!   concentration mode with deterministic per-session random streams.
//! - [`scenario`] and [`report`]: the scenario file format, the bundled
//!   Beijing field scenario and the machine-readable report records.

pub mod decoy;
pub mod optics;
pub mod protocol;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod simulator;
pub mod topology;
