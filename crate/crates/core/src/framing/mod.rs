//! Media framing analysis: frame ratio tables, entity prominence, sentiment
//! aggregation, lexical polarity, and polarization.

mod entities;
mod frames;
mod sentiment;

pub use entities::{
    canonicalize_entity, entity_prominence, EntityCategory, EntityMention, EntityShare,
};
pub use frames::{frame_ratio, FrameAssignment, FrameRatios, FrameRegistry, FRAME_COUNT};
pub use sentiment::{
    entity_sentiment_distribution, lexical_polarity_rate, polarization_score, sentiment_bias,
    SentimentDistribution, SentimentLabel, SentimentMass,
};

use thiserror::Error;

/// Errors raised by framing computations.
#[derive(Debug, Error)]
pub enum FramingError {
    #[error("frame registry must hold exactly {FRAME_COUNT} frames, got {0}")]
    RegistrySize(usize),
    #[error("duplicate frame name {0:?}")]
    DuplicateFrame(String),
    #[error("unknown frame {0:?}")]
    UnknownFrame(String),
    #[error("headline {headline_id} carries no frames")]
    NoFrames { headline_id: String },
    #[error("entity surface {0:?} canonicalizes to an empty key")]
    EmptySurface(String),
    #[error("no records in group")]
    EmptyGroup,
    #[error("entity {key:?} has zero total sentiment mass")]
    EmptyEntity { key: String },
    #[error("all sentiment scores are zero")]
    ZeroMass,
    #[error("negative sentiment mass for {context}: {value}")]
    NegativeMass { context: String, value: f64 },
    #[error("sentiment distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("sentiment component {name} = {value} outside [0, 1]")]
    InvalidComponent { name: &'static str, value: f64 },
    #[error("polarity {0} outside [-1, 1]")]
    PolarityOutOfRange(f64),
    #[error("need at least {need} values, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {detail}")]
    Malformed { origin: String, detail: String },
}
