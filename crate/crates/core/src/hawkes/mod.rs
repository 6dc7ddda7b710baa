//! Discrete-time multivariate Hawkes networks over bucketed event streams:
//! intensity and likelihood, branching simulation, and Gibbs fitting.

use thiserror::Error;

use crate::events::EventsError;

mod basis;
mod gibbs;
mod io;
mod network;
mod simulate;

pub use basis::{ImpulseBasis, DEFAULT_DT_MAX};
pub use gibbs::{
    fit, fit_traced, sample_parents, sample_parents_with, update_parameters, GammaPrior, GibbsConfig,
    NetworkParameters, Parent, ParentAssignment, PosteriorSummary,
};
pub use io::{
    read_network_spec, write_posterior_json, write_weight_csv, CredibleBand, NetworkSpec, PosteriorConfig, PosteriorReport,
};
pub use network::{intensity, log_likelihood, spectral_radius, HawkesNetwork};
pub use simulate::{simulate, simulate_on, Simulation};

#[derive(Debug, Error)]
pub enum HawkesError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parent assignment inconsistent with events: {0}")]
    Inconsistent(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("non-stationary network: spectral radius {0} >= 1")]
    NonStationary(f64),
    #[error(transparent)]
    Events(#[from] EventsError),
    #[error("network spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
