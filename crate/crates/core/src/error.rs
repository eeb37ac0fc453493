use thiserror::Error;

use crate::feval::EvalResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated sum could not meet its tolerance within the term cap.
    #[error("tolerance {tol:e} not reached after {terms} terms (best bound {best_bound})")]
    Truncation {
        terms: usize,
        tol: f64,
        best_bound: String,
    },

    /// An iterative method (root finding, quadrature doubling) did not converge.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// Two rigorous evaluators disagree beyond their combined bounds.
    #[error("consistency alarm: {0}")]
    Consistency(Box<ConsistencyAlarm>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Every member value that took part in a failed agreement check.
#[derive(Debug, Clone)]
pub struct ConsistencyAlarm {
    pub context: String,
    pub members: Vec<EvalResult>,
}

impl std::fmt::Display for ConsistencyAlarm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.context)?;
        for m in &self.members {
            write!(
                f,
                "; {:?} = {} ± {}",
                m.method,
                crate::precision::format_short(&m.value, 30),
                crate::precision::format_short(&m.error_bound, 6)
            )?;
        }
        Ok(())
    }
}
