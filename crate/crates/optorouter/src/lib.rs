//! Numerical engine for a tunable single-photon multi-channel router built from
//! a driven optical cavity whose movable middle mirror is Coulomb-coupled to an
//! external nanomechanical resonator.
//!
//! The crate solves the classical steady state of the driven system, linearizes
//! the quantum Langevin equations around it, and evaluates the probe reflection
//! and transmission spectra together with the vacuum and thermal noise floors.
//! Channel detection and coupling sweeps sit on top of the spectra.
//!
//! Module map:
//! - [`params`]: physical constants, system parameters, derived couplings, regime checks
//! - [`steady_state`]: steady-state branches (cubic), stability, operating-point selection
//! - [`response`]: closed-form transfer coefficients, R/T and noise spectra
//! - [`oracle`]: independent frequency-domain linear-system solver used to verify `response`
//! - [`routing`]: channel detection, coupling sweeps, noise budgets
//! - [`cli_io`]: config-file loading, output serialization, CLI entry point

pub mod cli_io;
pub mod oracle;
pub mod params;
pub mod response;
pub mod routing;
pub mod steady_state;

pub use params::{PhysicalConstants, SystemParams};
pub use response::{ResponseMode, ResponseSet, Spectrum, SpectrumPoint};
pub use routing::{Channel, ChannelKind, RoutingReport};
pub use steady_state::{BranchSet, SteadyState};

/// Crate-level error type: every module error converts into this for callers
/// (such as the CLI) that need a single failure channel.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] params::ParamError),
    #[error(transparent)]
    Steady(#[from] steady_state::SteadyStateError),
    #[error(transparent)]
    Response(#[from] response::ResponseError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Routing(#[from] routing::RoutingError),
    #[error(transparent)]
    Config(#[from] cli_io::ConfigError),
    /// The closed-form response drifted away from the independent solver
    /// beyond the verification tolerance. Always a bug, never a tuning issue.
    #[error("verification failed: {0}")]
    Verify(String),
}

impl Error {
    /// Process exit code the CLI maps this error to: `1` for I/O and
    /// configuration problems, `2` for physics failures (no stable branch,
    /// singular response denominator, empty channel list, ...).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Config(_) => 1,
            Error::Routing(routing::RoutingError::GridTooCoarse { .. }) => 1,
            Error::Routing(routing::RoutingError::GridTooNarrow { .. }) => 1,
            Error::Response(response::ResponseError::NegativeTemperature { .. }) => 1,
            Error::Response(response::ResponseError::BadGrid { .. }) => 1,
            _ => 2,
        }
    }
}
