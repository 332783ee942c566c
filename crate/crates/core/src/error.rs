use crate::grid::GridError;
use crate::lp::{LpError, LpStatus};
use crate::scenario::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("market schedule has no {field} for '{unit}' at hour {hour}")]
    ScheduleGap {
        unit: String,
        hour: usize,
        field: &'static str,
    },
    #[error("{0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scenario is invalid ({} problems): {}", .0.len(), .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Scenario(Vec<Violation>),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("solver returned {status:?} for interval starting at hour {start}")]
    Solver { start: usize, status: LpStatus },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by input data rather than the solver.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Solver { .. } => false,
            Error::Lp(_) => false,
            Error::Context { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
