//! Entanglement distribution simulator.
//!
//! Computes the delivered entangled-pair rate and end-to-end fidelity of a
//! terrestrial quantum-repeater chain and of a satellite dual-downlink path,
//! and compares the two over concrete station/orbit scenarios.
//!
//! Module map:
//!
//! - [`params`]: the simulation parameter set, config ingestion and validation
//! - [`memory`]: multimode heralded quantum memory efficiency
//! - [`ground_chain`]: repeater chain throughput, Werner fidelity, repeater-count optimizer
//! - [`space_link`]: Gaussian-beam downlink budget, pair rate, stray-light fidelity
//! - [`orbit`]: circular-orbit propagation and joint-visibility pass search
//! - [`scenario`]: built-in station scenarios, method comparison, crossover sweep
//! - [`mc_oracle`]: Monte Carlo cross-check of the analytic success probabilities
//! - [`cli`]: command-line front end

// Range checks are written as `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod ground_chain;
pub mod mc_oracle;
pub mod memory;
pub mod orbit;
pub mod params;
pub mod scenario;
pub mod space_link;

pub use error::{Error, Result};
pub use params::SystemParams;
