use thiserror::Error;

/// Errors raised by the solvers and the reconstruction engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular operator: zero pivot in row {row}")]
    SingularOperator { row: usize },

    #[error("Newton iteration failed to converge at t = {time} (residual {residual:e})")]
    NewtonDivergence { time: f64, residual: f64 },

    #[error("solution blew up at t = {time} (|u| = {magnitude:e})")]
    BlowUp { time: f64, magnitude: f64 },

    #[error("initial data violates Dirichlet boundary data at the {side} endpoint")]
    InitialDataMismatch { side: &'static str },

    #[error("degenerate observations: determinant clamped at {clamped} of {total} nodes")]
    DegenerateObservations { clamped: usize, total: usize },

    #[error("no step size theta^l with l <= {ell_max} decreased the misfit")]
    StepsizeFailure { ell_max: u32 },

    #[error("relative error undefined: reference field is identically zero")]
    UndefinedRelativeError,
}

impl Error {
    /// True for failures of the forward solver itself.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NewtonDivergence { .. } | Error::BlowUp { .. } | Error::SingularOperator { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
