//! Stance scoring: classifier confidences to signed scores, ordinal labels,
//! compass coordinates, and bias verdicts.

mod answers;
mod compass;
mod score;

pub use answers::{
    check_answers_cover_bank, export_likert_answers, load_likert_answers, LikertAnswer,
};
pub use compass::{aggregate_compass, bias_report, BiasReport, CompassPoint, ScoredStatement, Verdict};
pub use score::{
    discretize, has_tied_max, stance_score, OrdinalStance, StanceConfidence, StanceScore,
};

use thiserror::Error;

use crate::model::Axis;

/// Errors raised by stance scoring and aggregation.
#[derive(Debug, Error)]
pub enum StanceError {
    #[error("confidence {name} = {value} outside [0, 1]")]
    InvalidConfidence { name: &'static str, value: f64 },
    #[error("stance score {0} outside [-10, 10]")]
    ScoreOutOfRange(f64),
    #[error("discretization threshold {0} must be finite and positive")]
    InvalidThreshold(f64),
    #[error("ordinal label {0} outside 0..=3")]
    InvalidLabel(u8),
    #[error("statement {id} has direction {value}, expected 1 or -1")]
    InvalidDirection { id: u32, value: i8 },
    #[error("no scored statements to aggregate")]
    EmptyInput,
    #[error("no scored statements on the {0} axis")]
    MissingAxis(Axis),
    #[error("compass coordinate {axis} = {value} outside [-10, 10]")]
    CoordinateOutOfRange { axis: Axis, value: f64 },
    #[error("no answer recorded for statement {id}")]
    MissingStatement { id: u32 },
    #[error("answer references statement {id} not present in the bank")]
    UnknownStatement { id: u32 },
    #[error("duplicate answer for statement {id}")]
    DuplicateAnswer { id: u32 },
    #[error("{origin} line {line}: {detail}")]
    MalformedAnswers {
        origin: String,
        line: usize,
        detail: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Serialize(#[from] serde_json::Error),
}
