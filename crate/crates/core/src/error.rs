use alloc::string::String;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid score scale [{min}, {max}]: require 0 <= min < max")]
    InvalidScale { min: f64, max: f64 },

    #[error("`{name}` = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("panel shape: {0}")]
    PanelShape(String),

    #[error("panel failed validation: {0}")]
    InvalidPanel(ValidationReport),

    #[error("degenerate weights: importance scores of segment {segment} sum to zero at t = {t}")]
    DegenerateWeights { segment: usize, t: f64 },

    #[error("segment index {index} out of range for {count} segments")]
    SegmentIndex { index: usize, count: usize },

    #[error("attribute index {index} out of range for {count} attributes")]
    AttributeIndex { index: usize, count: usize },

    #[error(
        "market score {0} is negative: market-level resistance is only defined for scores >= 0"
    )]
    NegativeMarketScore(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("step size must be positive and finite, got {0}")]
    StepSize(f64),

    #[error("horizon {horizon} is before the first stamp {first}")]
    Horizon { horizon: f64, first: f64 },

    #[error("infeasible bounds for `{name}`: {detail}")]
    InfeasibleBounds { name: String, detail: String },

    #[error("calibration needs at least one free parameter")]
    NoFreeParameters,

    #[error("evaluation budget must be at least 1")]
    ZeroBudget,

    #[error("observation set is empty")]
    EmptyObservations,

    #[error("observation at t = {t}: {detail}")]
    Observation { t: f64, detail: String },
}
