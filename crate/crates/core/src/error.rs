//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by state construction, channel algebra, and tomography.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter fell outside its documented domain.
    #[error("parameter `{name}` = {value} outside valid range {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A matrix failed a structural validation (normalization, positivity,
    /// trace preservation, ...) beyond the stated tolerance.
    #[error("matrix validation failed: {0}")]
    MatrixValidation(String),

    /// A measurement set does not span enough of operator space for the
    /// requested reconstruction.
    #[error("measurement set is not informationally complete: {0}")]
    IncompleteMeasurements(String),

    /// The probe ensemble spans a proper subspace of density-matrix space,
    /// so process reconstruction is underdetermined.
    #[error("incomplete probe set: probe span has null space of dimension {null_dim}")]
    IncompleteProbes { null_dim: usize },

    /// Count data inconsistent with its declared layout.
    #[error("experiment data malformed: {0}")]
    MalformedData(String),

    /// An iterative solver failed to make progress.
    #[error("solver failure: {0}")]
    Solver(String),

    /// (De)serialization failure for one of the on-disk formats.
    #[error("serialization: {0}")]
    Serialization(String),
}
