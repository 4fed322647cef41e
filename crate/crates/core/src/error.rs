use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {0} outside 0..=3")]
    IndexOutOfRange(usize),
    #[error("singular metric (|det g| = {det:e})")]
    SingularMetric { det: f64 },
    #[error("metric signature is not (-+++): {negative} negative eigenvalue(s)")]
    Signature { negative: usize },
    #[error("jet carries order {have} data but order {need} is required")]
    InsufficientOrder { have: usize, need: usize },
    #[error("unsupported truncation order {0}")]
    UnsupportedOrder(i64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("syntax error at byte {offset}: {message} (expected one of: {})", expected.join(", "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown identifier `{name}` in {context}")]
    UnknownIdentifier { name: String, context: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("linear system inconsistent (residual {0:e})")]
    Inconsistent(f64),
    #[error("signature lost at step {step} (t = {t})")]
    SignatureLost { step: usize, t: f64 },
    #[error("constraint drift at step {step} (t = {t}): ricci norm {value:e}")]
    ConstraintDrift { step: usize, t: f64, value: f64 },
    #[error("newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
