//! Frozen-envelope and singular-limit analysis of a FitzHugh-Nagumo neuron
//! driven by two interfering high-frequency carriers, plus a time-domain
//! simulator and the sweep experiments built on both.

pub mod cli;
pub mod config;
pub mod cubic;
pub mod error;
pub mod experiments;
pub mod frozen;
pub mod integrator;
pub mod model;
pub mod sim;
pub mod singular;

pub use error::{Error, Result};
pub use config::RunConfig;
pub use experiments::{ICGridResult, SweepResult, SweepSpec};
pub use integrator::IntegratorConfig;
pub use model::{Drive, Params, State};
pub use sim::{SpikeReport, Trajectory};
