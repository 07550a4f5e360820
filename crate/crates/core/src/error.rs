use thiserror::Error;

/// Errors produced by the thin-film library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid thickness at node ({i}, {j}): g - f = {gap:e} must be positive")]
    InvalidThickness { i: usize, j: usize, gap: f64 },

    #[error("field spec parse error at column {column}: {message}")]
    FieldSpec { column: usize, message: String },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("no vortex attractor: max |xi0/d| = {max_abs:e}")]
    EmptyLambda { max_abs: f64 },

    #[error("lower critical field undefined: max |xi0/d| = 0")]
    UndefinedCriticalField,

    #[error("degenerate plaquette at ({i}, {j}): order parameter vanishes exactly on an edge")]
    DegeneratePlaquette { i: usize, j: usize },

    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point outside the unit disk: |x| = {0}")]
    OutOfDomain(f64),

    #[error("Green's function evaluated at coincident points")]
    SingularEvaluation,

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::FieldSpec { .. } | Error::InvalidArgument(_) => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
