use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::manifest::{append_jsonl, load_units, write_json, AuditManifest, FailureRecord, RunPaths};
use super::pct::{ensure_unit_scores, file_digest, open_gateway, pct_units, Unit};
use super::PipelineError;
use crate::model::StatementBank;
use crate::stats::{prompt_sensitivity, PromptSensitivityReport, VariantStance};

/// Sensitivity analysis for one endpoint and language.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub endpoint: String,
    pub model_id: String,
    pub language: String,
    pub report: PromptSensitivityReport,
}

/// Report file written by the sensitivity command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReportFile {
    pub run_id: String,
    pub entries: Vec<SensitivityEntry>,
}

/// Summary of one sensitivity run.
#[derive(Debug, Clone)]
pub struct SensitivityOutcome {
    pub run_id: String,
    pub groups_total: usize,
    pub groups_reported: usize,
    pub failures: usize,
    pub report_path: PathBuf,
}

impl SensitivityOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures == 0
    }
}

/// Scores the statement bank under every configured prompt variant and
/// measures how much verdicts move between variants, per endpoint and
/// language. Reuses score artifacts from earlier runs when inputs match.
pub fn run_prompt_sensitivity(
    config: &RunConfig,
    run_id: &str,
    offline: bool,
) -> Result<SensitivityOutcome, PipelineError> {
    let started_at = Utc::now();
    let pct = config.require_pct()?;
    if pct.prompt_variants.len() < 2 {
        return Err(PipelineError::Config(format!(
            "[pct] prompt sensitivity needs at least two prompt_variants, got {}",
            pct.prompt_variants.len()
        )));
    }
    let bank = StatementBank::load(&pct.statement_bank)?;
    let bank_digest = file_digest(&pct.statement_bank)?;
    let units = pct_units(config)?;
    let params = pct.generation_params();

    let paths = RunPaths::new(&config.output_dir, run_id);
    paths.create()?;
    let mut manifest = AuditManifest::open(&paths, run_id, &config.digest())?;
    let gateway = open_gateway(config, offline)?;
    let ledger = load_units(&paths)?;

    // Group the units by endpoint and language; each group compares its
    // variants against each other.
    let mut groups: BTreeMap<(String, String), Vec<&Unit>> = BTreeMap::new();
    for unit in &units {
        groups
            .entry((unit.endpoint.clone(), unit.language.to_string()))
            .or_default()
            .push(unit);
    }

    let mut entries = Vec::new();
    let mut failures = 0usize;
    for ((endpoint, language), group_units) in &groups {
        let mut cells: BTreeMap<(u32, String), VariantStance> = BTreeMap::new();
        for unit in group_units {
            let (rows, _) = ensure_unit_scores(
                &gateway,
                &bank,
                &bank_digest,
                &paths,
                &ledger,
                unit,
                &pct.classifier_endpoint,
                params,
                pct.tau,
                &mut failures,
            )?;
            for row in rows {
                cells.insert(
                    (row.statement_id, unit.variant.id.clone()),
                    VariantStance {
                        score: row.score,
                        ordinal: crate::stance::OrdinalStance::from_label(row.ordinal_label)?,
                    },
                );
            }
        }
        let group_id = format!("{endpoint}__{language}");
        match prompt_sensitivity(&cells) {
            Ok(report) => {
                let model_id = gateway.profile(endpoint)?.model_id().to_string();
                entries.push(SensitivityEntry {
                    endpoint: endpoint.clone(),
                    model_id,
                    language: language.clone(),
                    report,
                });
            }
            Err(error) => {
                append_jsonl(
                    &paths.failures_file(),
                    &FailureRecord::now(&group_id, "sensitivity", &error),
                )?;
                failures += 1;
            }
        }
    }

    entries.sort_by(|a, b| {
        (a.endpoint.as_str(), a.language.as_str()).cmp(&(b.endpoint.as_str(), b.language.as_str()))
    });
    let groups_reported = entries.len();
    let report_path = paths.reports().join("sensitivity.json");
    write_json(
        &report_path,
        &SensitivityReportFile {
            run_id: run_id.to_string(),
            entries,
        },
    )?;

    manifest.record_command(
        "prompt-sensitivity",
        started_at,
        vec![paths.relative(&report_path)],
    );
    manifest.save(&paths)?;

    Ok(SensitivityOutcome {
        run_id: run_id.to_string(),
        groups_total: groups.len(),
        groups_reported,
        failures,
        report_path,
    })
}
