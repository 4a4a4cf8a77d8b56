use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A hypothesis or target could not be evaluated on some point.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A query or randomizer broke its declared contract (range, label flag).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("budget exceeded on index {index}: spent {spent}, requested {requested}, cap {cap}")]
    BudgetExceeded {
        index: u64,
        spent: f64,
        requested: f64,
        cap: f64,
    },

    #[error("query budget exhausted: {issued} queries issued, budget {budget}")]
    QueryBudget { issued: usize, budget: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("insufficient samples: protocol needs n >= {required}, dataset has {available}")]
    Sizing { required: u64, available: u64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("learning failed: {0}")]
    LearningFailure(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Budget, sizing and precondition failures are "expected" refusals; the
    /// CLI maps them to a distinct exit status.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::QueryBudget { .. }
                | Error::Sizing { .. }
                | Error::Precondition(_)
        )
    }
}
