//! Convergence, agreement, scaling and certification studies over the
//! vofrac solvers, with CSV and markdown output.

pub mod config;
pub mod report;
pub mod study;

pub use config::{parse_ladder, ProblemId, Rung, StudyKind, StudySpec};
pub use report::{fmt_sig, ConvergenceReport, Row, CSV_HEADER};
pub use study::run_study;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid study: {0}")]
    Config(String),

    #[error("cannot parse report: {0}")]
    Parse(String),

    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),

    #[error(transparent)]
    Core(#[from] vofrac_core::Error),
}
