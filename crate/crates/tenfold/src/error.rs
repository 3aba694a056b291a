use thiserror::Error;

/// Crate-wide error type.
///
/// Numerical failures carry the offending residual so callers can report how
/// far an input was from satisfying a precondition.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("structure error: {context} (residual {residual:.3e}, tolerance {tol:.3e})")]
    Structure {
        context: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("branch cut: eigenphase within {margin:.3e} of pi")]
    BranchCut { margin: f64 },

    #[error("singular matrix: smallest singular value {sigma_min:.3e}")]
    Singular { sigma_min: f64 },

    #[error("signature error: {0}")]
    Signature(String),

    #[error("convention error: {0}")]
    Convention(String),

    #[error("parity error: {0}")]
    Parity(String),

    #[error("not equivariant: {context} (residual {residual:.3e})")]
    NotEquivariant { context: &'static str, residual: f64 },

    #[error("not in class {class}: membership residual {residual:.3e}")]
    NotInClass { class: &'static str, residual: f64 },

    #[error("not in the required fixed/inverted set: {context} (residual {residual:.3e})")]
    NotInvolutionCompatible { context: &'static str, residual: f64 },

    #[error("profile error: {0}")]
    Profile(String),

    #[error("optimizer failed to converge: {0}")]
    Convergence(String),

    #[error("internal consistency violation: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
