//! Agreement and uncertainty statistics: Fleiss and Cohen kappa, bootstrap
//! confidence intervals, confidence-weighted means, and prompt sensitivity.

mod agreement;
mod bootstrap;
mod sensitivity;

pub use agreement::{cohen_kappa, fleiss_kappa, kappa_band, AnnotationMatrix};
pub use bootstrap::{
    bootstrap_stance, bootstrap_statistic, confidence_weighted_mean, low_confidence_fraction,
    BootstrapResult, LowConfidence,
};
pub use sensitivity::{prompt_sensitivity, PairAgreement, PromptSensitivityReport, VariantStance};

use thiserror::Error;

/// Errors raised by the statistics routines.
#[derive(Debug, Error)]
pub enum StatsError {
    #[error("chance agreement equals 1, kappa is undefined")]
    DegenerateChance,
    #[error("rating lists differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least {need} values, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("weights sum to zero")]
    ZeroWeight,
    #[error("weight {0} outside [0, 1]")]
    InvalidWeight(f64),
    #[error("empty input")]
    EmptyInput,
    #[error("need at least two prompt variants, found {found}")]
    TooFewVariants { found: usize },
    #[error("threshold {0} must lie in (0, 1]")]
    InvalidThreshold(f64),
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
    #[error("resample count must be at least 1")]
    InvalidResamples,
    #[error("annotation matrix {0}")]
    MatrixShape(String),
    #[error("at least two raters are required, got {0}")]
    TooFewRaters(u32),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {detail}")]
    Malformed { origin: String, detail: String },
}
