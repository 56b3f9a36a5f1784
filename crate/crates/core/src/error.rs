use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph is not connected ({0} components)")]
    Disconnected(usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),
    #[error("point ({x}, {y}) lies above the coding function")]
    PointAboveCurve { x: f64, y: f64 },
    #[error("hausdorff distance between an empty and a nonempty set is undefined")]
    EmptyPointSet,
    #[error("oracle gave up after {0} attempts")]
    BudgetExhausted(usize),
    #[error("chain did not converge: autocorrelation time {tau:.1} exceeds {limit:.1} steps")]
    NonConvergence { tau: f64, limit: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {p} is not in [0, 1]")))
    }
}
