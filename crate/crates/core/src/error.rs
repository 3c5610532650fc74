use thiserror::Error;

use crate::geometry::HalfPlanePolygon;
use crate::optimizer::OptimTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported construction: {0}")]
    Unsupported(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("singular equilibrium system (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("oracle did not converge after {iterations} iterations (duality gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("line search stagnated at iteration {iteration}")]
    Stagnation {
        iteration: usize,
        shape: Box<HalfPlanePolygon>,
        trace: Box<OptimTrace>,
    },

    #[error("solver failed at iteration {iteration}: {source}")]
    SolverAt {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Config(_)
            | Error::InvalidShape(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Stagnation { .. } => 4,
            _ => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn exit_codes() {
        let parse = Error::Parse {
            line: 3,
            message: "x".into(),
        };
        assert_eq!(parse.exit_code(), 2);
        assert_eq!(Error::Config("c".into()).exit_code(), 2);
        assert_eq!(Error::SingularSystem { condition: 1e20 }.exit_code(), 3);
        let stuck = Error::Stagnation {
            iteration: 4,
            shape: Box::new(fixtures::unit_square()),
            trace: Box::default(),
        };
        assert_eq!(stuck.exit_code(), 4);
    }
}
