use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("x = {x} is outside the boundary domain (x >= 1 required)")]
    Domain { x: f64 },

    #[error("invalid tube: {0}")]
    InvalidTube(String),

    #[error("invalid reflection law: {0}")]
    InvalidLaw(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("ray does not point into the tube at its origin (residual {residual:e} after s_min)")]
    NotInward { residual: f64 },

    #[error(
        "no boundary crossing found before s = {s_max:e}; escape suspected from x = {x_origin}"
    )]
    EscapeSuspected { x_origin: f64, s_max: f64 },

    #[error(
        "root refinement did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EscapeSuspected { .. } | Error::NonConvergence { .. } | Error::NotInward { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
