//! KPI tables, validation against logged times, and annual extrapolation.

mod extrapolation;
mod kpi;
mod validation;

pub use extrapolation::*;
pub use kpi::*;
pub use validation::*;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("no {baseline} runs for day `{day}`")]
    MissingBaseline { day: String, baseline: crate::sim::Strategy },
    #[error("no runs to aggregate")]
    Empty,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
