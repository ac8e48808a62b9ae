use std::fmt;

use thiserror::Error;

/// Stability numbers observed over a full-order run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CflReport {
    /// max over the run of `dt * |wave speed| / dx` (summed over axes in 2D)
    pub advective: f64,
    /// max over the run of `2 * D * dt * sum(1/dx^2)` (explicit) or `D * dt / dx^2` (implicit)
    pub diffusive: f64,
    /// max |f(u)| observed
    pub max_speed: f64,
}

impl fmt::Display for CflReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "advective CFL {:.4}, diffusive number {:.4}, max |f(u)| {:.4}",
            self.advective, self.diffusive, self.max_speed
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("stability condition violated at step {step}: {report}")]
    Stability { step: usize, report: CflReport },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("Lagrangian grid tangled{}: min node gap {min_gap:e}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Tangled { step: Option<usize>, min_gap: f64 },

    #[error("rank deficiency: requested rank {requested}, achievable rank {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("prediction diverged after {steps} steps (spectral radius {spectral_radius:.6})")]
    Unstable { steps: usize, spectral_radius: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("container format: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerics (stability, tangling, rank, divergence).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Stability { .. }
                | Error::NonFinite { .. }
                | Error::Tangled { .. }
                | Error::RankDeficient { .. }
                | Error::Unstable { .. }
                | Error::Singular(_)
                | Error::Linalg(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self.root(),
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
