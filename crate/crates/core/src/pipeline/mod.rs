//! Audit orchestration: run configuration, durable run directories, the
//! audit commands themselves, and report rendering.

mod agreement;
mod config;
mod framing;
mod manifest;
mod pct;
mod report;
mod sensitivity;

pub use agreement::{run_agreement, AgreementReport};
pub use config::{
    FramingConfig, GatewayConfig, PctConfig, RunConfig, StatsConfig, DEFAULT_TAU,
};
pub use framing::{
    run_framing_audit, EntityReportRow, FramingAuditOutcome, FramingGroupRow, FramingReport,
};
pub use manifest::{AuditManifest, FailureRecord, RunPaths, UnitRecord};
pub use pct::{run_pct_audit, PctAuditOutcome, PctMetricsRow, PctReport, StatementScoreRow};
pub use report::{render_report, ReportFormat};
pub use sensitivity::{
    run_prompt_sensitivity, SensitivityEntry, SensitivityOutcome, SensitivityReportFile,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::framing::FramingError;
use crate::gateway::GatewayError;
use crate::model::ModelError;
use crate::stance::StanceError;
use crate::stats::StatsError;

/// Errors raised while orchestrating an audit run.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run {0:?} has no artifacts to report on")]
    UnknownRun(String),
    #[error("{}: {detail}", path.display())]
    Malformed { path: PathBuf, detail: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stance(#[from] StanceError),
    #[error(transparent)]
    Framing(#[from] FramingError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// Process exit code for this error: 3 for configuration problems,
    /// 1 otherwise. Partial completions are not errors; commands report
    /// them in their outcome and the binary maps those to exit code 2.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) => 3,
            _ => 1,
        }
    }
}

pub(crate) fn io_error(path: impl Into<PathBuf>, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.into(),
        source,
    }
}
