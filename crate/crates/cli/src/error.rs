//! Error classification and process exit codes.
//!
//! Every failure surfaces as one of three categories with a fixed exit
//! code: configuration/parameter validation (2), unreadable or malformed
//! input files (3), and numerical failures in the solvers or statistics
//! (4). Success is 0. The mapping from library errors is by variant, so a
//! malformed CSV keeps its line-numbered message while still exiting 3.

use kcbs_core::bounds::BoundsError;
use kcbs_core::certify::CertifyError;
use kcbs_core::estimation::EstimationError;
use kcbs_core::fileio::IoFormatError;
use kcbs_core::randtests::RandTestsError;
use kcbs_core::sim::SimError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration or parameters (exit 2).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Missing, unreadable, or malformed input files (exit 3).
    #[error("input error: {0}")]
    Parse(String),
    /// Numerical failure inside a solver or estimator (exit 4).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<IoFormatError> for CliError {
    fn from(e: IoFormatError) -> Self {
        // every IoFormatError concerns a file the command was given
        CliError::Parse(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidParameter(_) => CliError::Config(e.to_string()),
            SimError::Io(inner) => inner.into(),
            SimError::LogMismatch(_) => CliError::Parse(e.to_string()),
            SimError::Qutrit(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Io(inner) => inner.into(),
            EstimationError::RowUnnormalized { .. } | EstimationError::BadTableShape(_) => {
                CliError::Parse(e.to_string())
            }
            // a log whose data cannot support estimation is a failure of
            // the run, not of the file format
            EstimationError::EmptyLog
            | EstimationError::UnobservedContext(_)
            | EstimationError::ZeroWeightObserved(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::BadParameter(_) => CliError::Config(e.to_string()),
            BoundsError::Io(inner) => inner.into(),
            BoundsError::BadCurve(_) => CliError::Parse(e.to_string()),
            BoundsError::OutOfRange { .. }
            | BoundsError::Infeasible { .. }
            | BoundsError::Simplex(_)
            | BoundsError::Qutrit(_)
            | BoundsError::SearchFailed(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::BadParameter(_) | CertifyError::UnknownTruth(_) => {
                CliError::Config(e.to_string())
            }
            CertifyError::Bounds(inner) => inner.into(),
            CertifyError::Sim(inner) => inner.into(),
            CertifyError::Estimation(inner) => inner.into(),
            CertifyError::Io(inner) => inner.into(),
        }
    }
}

impl From<RandTestsError> for CliError {
    fn from(e: RandTestsError) -> Self {
        match e {
            RandTestsError::InvalidBit { .. } => CliError::Parse(e.to_string()),
            RandTestsError::Io(inner) => inner.into(),
        }
    }
}
