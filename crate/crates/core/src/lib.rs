//! Simulation of peer-effect regressions on networks whose outdegrees are
//! censored by the survey instrument.
//!
//! The pipeline for one replication is: draw traits and gregariousness
//! ([`netgen`]), build the true network, evolve the trait over it
//! ([`trait_process`]), censor the network ([`censoring`]), and regress the
//! new trait on the censored design ([`inference`]). [`montecarlo`] repeats
//! this over randomised scenarios and summarises the results.

pub mod censoring;
pub mod config;
pub mod error;
pub mod inference;
pub mod montecarlo;
pub mod netgen;
pub mod oracle;
pub mod tdist;
pub mod trait_process;

pub use error::{Error, Result};
