//! Annotator agreement command over a stored rating matrix.

use std::path::Path;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use crate::pipeline::config::RunConfig;
use crate::pipeline::manifest::{write_json, AuditManifest, RunPaths};
use crate::pipeline::PipelineError;
use crate::stats::{fleiss_kappa, kappa_band, AnnotationMatrix, StatsError};

/// Chance-corrected agreement over one annotation matrix.
///
/// A degenerate matrix, where every rating lands in a single category, leaves
/// no room for chance correction. That outcome is reported as `degenerate`
/// with no kappa rather than treated as an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    pub items: usize,
    pub categories: usize,
    pub raters: u32,
    pub kappa: Option<f64>,
    pub band: Option<String>,
    pub degenerate: bool,
}

/// On-disk shape of `reports/agreement.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct AgreementReportFile {
    pub run_id: String,
    pub report: AgreementReport,
}

/// Computes Fleiss' kappa for the matrix at `matrix_path`.
///
/// When a run context is given, the report also lands in that run's
/// `reports/agreement.json` and the manifest records the command.
pub fn run_agreement(
    matrix_path: &Path,
    run: Option<(&RunConfig, &str)>,
) -> Result<AgreementReport, PipelineError> {
    let started_at = Utc::now();
    let matrix = AnnotationMatrix::load(matrix_path)?;
    let report = match fleiss_kappa(&matrix) {
        Ok(kappa) => AgreementReport {
            items: matrix.n_items(),
            categories: matrix.n_categories(),
            raters: matrix.raters(),
            kappa: Some(kappa),
            band: Some(kappa_band(kappa).to_string()),
            degenerate: false,
        },
        Err(StatsError::DegenerateChance) => AgreementReport {
            items: matrix.n_items(),
            categories: matrix.n_categories(),
            raters: matrix.raters(),
            kappa: None,
            band: None,
            degenerate: true,
        },
        Err(error) => return Err(error.into()),
    };

    if let Some((config, run_id)) = run {
        let paths = RunPaths::new(&config.output_dir, run_id);
        paths.create()?;
        let mut manifest = AuditManifest::open(&paths, run_id, &config.digest())?;
        let report_path = paths.reports().join("agreement.json");
        write_json(
            &report_path,
            &AgreementReportFile {
                run_id: run_id.to_string(),
                report: report.clone(),
            },
        )?;
        manifest.record_command("agreement", started_at, vec![paths.relative(&report_path)]);
        manifest.save(&paths)?;
    }

    Ok(report)
}
