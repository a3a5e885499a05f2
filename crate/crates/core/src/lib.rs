//! Simulator and calculator suite for quantum-enhanced AFM beam-displacement
//! readout with a truncated nonlinear interferometer.
//!
//! The crate has four layers:
//!
//! * [`gaussian`] — exact Gaussian-state algebra (covariance matrices,
//!   symplectic transforms, loss channels, homodyne statistics). This is the
//!   from-first-principles verification path for the analytic formulas.
//! * [`model`] — the truncated-NLI measurement model: scene construction for
//!   both cantilever topologies, the analytic phase-sum variance, gain and
//!   squeezing conversions, and displacement SNR.
//! * [`budget`] — radiometric displacement-noise calculators (shot-noise
//!   limit, backaction, SQL, squeezed floor).
//! * [`spectrum`] — seeded Monte Carlo photocurrent synthesis and
//!   spectrum-analyzer emulation (Welch PSD, video filtering, trace
//!   averaging, SNR extraction).
//!
//! Quadrature convention used throughout: `x = a + a†`, `p = -i(a - a†)`,
//! so the vacuum variance is 1 per quadrature and the shot-noise limit of a
//! single homodyne is exactly 1.

pub mod budget;
pub mod config;
pub mod gaussian;
pub mod model;
pub mod output;
pub mod repro;
pub mod spectrum;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("numerical: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code contract: 0 success, 2 I/O, 3 validation, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            Error::InvalidArgument(_) | Error::Config(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
