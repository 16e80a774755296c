use thiserror::Error;

/// Errors surfaced by basis construction, diagonalization, dynamics,
/// and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two operands belong to incompatible geometries, sectors, or grids.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An eigensolver or integrator failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A matrix handed in as a density matrix violates hermiticity,
    /// unit trace, or positivity.
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}
