use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{RunConfig, StatsConfig};
use super::manifest::{
    append_jsonl, load_units, read_jsonl, write_json, write_jsonl, AuditManifest, FailureRecord,
    RunPaths, UnitRecord,
};
use super::{io_error, PipelineError};
use crate::gateway::{
    BlockingGateway, GatewayOptions, GenerationParams, PromptVariant, ResponseCache,
};
use crate::model::{Axis, LanguageCode, StatementBank};
use crate::stance::{
    aggregate_compass, bias_report, discretize, export_likert_answers, has_tied_max, stance_score,
    OrdinalStance, ScoredStatement, StanceConfidence, StanceScore, Verdict,
};
use crate::stats::{
    bootstrap_stance, bootstrap_statistic, confidence_weighted_mean, low_confidence_fraction,
};

/// Per-statement scoring result persisted under `scores/`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatementScoreRow {
    pub statement_id: u32,
    pub axis: Axis,
    pub direction: i8,
    pub confidence: StanceConfidence,
    pub score: StanceScore,
    /// The confidence maximum was attained by more than one level.
    pub tied: bool,
    pub ordinal_label: u8,
    pub max_confidence: f64,
}

/// Raw prompt and completion persisted under `raw/` for auditability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct RawExchangeRow {
    pub statement_id: u32,
    pub prompt: String,
    pub completion: String,
    pub retrieved_at: DateTime<Utc>,
    pub from_cache: bool,
}

/// Derived metrics for one endpoint, language, and prompt variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PctMetricsRow {
    pub unit_id: String,
    pub endpoint: String,
    pub model_id: String,
    pub language: String,
    pub variant: String,
    pub statements_total: usize,
    pub statements_scored: usize,
    pub economic: f64,
    pub social: f64,
    pub euclidean: f64,
    pub manhattan: f64,
    pub chebyshev: f64,
    pub verdict: Verdict,
    pub avg_confidence: f64,
    pub min_confidence: f64,
    pub max_confidence: f64,
    pub low_confidence_count: usize,
    pub low_confidence_fraction: f64,
    pub mean_score: f64,
    pub bootstrap_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub weighted_mean: f64,
    pub weighted_error: f64,
}

/// Report file written by the opinion audit: one metrics row per unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PctReport {
    pub run_id: String,
    pub rows: Vec<PctMetricsRow>,
}

/// Summary of one opinion audit run.
#[derive(Debug, Clone)]
pub struct PctAuditOutcome {
    pub run_id: String,
    pub units_total: usize,
    pub units_scored: usize,
    pub units_resumed: usize,
    pub failures: usize,
    pub report_path: PathBuf,
}

impl PctAuditOutcome {
    /// Whether every statement in every unit completed.
    pub fn is_complete(&self) -> bool {
        self.failures == 0
    }
}

pub(crate) struct Unit {
    pub id: String,
    pub endpoint: String,
    pub language: LanguageCode,
    pub variant: PromptVariant,
}

pub(crate) fn unit_id(endpoint: &str, language: &LanguageCode, variant_id: &str) -> String {
    format!("{endpoint}__{language}__{variant_id}")
}

pub(crate) struct UnitScoring {
    pub rows: Vec<StatementScoreRow>,
    pub raw: Vec<RawExchangeRow>,
    pub failures: Vec<FailureRecord>,
}

/// Scores every bank statement for one unit, isolating per-statement
/// failures so one refusal or outage does not void the rest of the unit.
pub(crate) fn score_unit(
    gateway: &BlockingGateway,
    bank: &StatementBank,
    unit: &Unit,
    classifier_endpoint: &str,
    params: GenerationParams,
    tau: f64,
) -> UnitScoring {
    // The gateway's per-endpoint semaphore enforces the real concurrency
    // bound; the buffer here just needs to be at least as wide.
    const BUFFER: usize = 32;
    type ScoreOutcome = Result<(StatementScoreRow, RawExchangeRow), (u32, &'static str, String)>;
    let results: Vec<ScoreOutcome> = gateway.run(async {
            stream::iter(bank.statements())
                .map(|statement| {
                    let client = gateway.inner();
                    let language = &unit.language;
                    let variant = &unit.variant;
                    let endpoint = unit.endpoint.as_str();
                    async move {
                        let id = statement.id;
                        let text = statement.text_in(language).ok_or_else(|| {
                            (id, "prompt", format!("statement has no {language} text"))
                        })?;
                        let prompt = variant.render(text, language);
                        let completion = client
                            .generate_text(endpoint, &prompt, params)
                            .await
                            .map_err(|e| (id, "generate", e.to_string()))?;
                        let confidence = client
                            .classify_stance(classifier_endpoint, text, &completion.text)
                            .await
                            .map_err(|e| (id, "classify", e.to_string()))?;
                        let score = stance_score(&confidence);
                        let ordinal = discretize(score, tau)
                            .map_err(|e| (id, "discretize", e.to_string()))?;
                        let row = StatementScoreRow {
                            statement_id: id,
                            axis: statement.axis,
                            direction: statement.direction,
                            max_confidence: confidence.max_confidence(),
                            tied: has_tied_max(&confidence),
                            ordinal_label: ordinal.label(),
                            confidence,
                            score,
                        };
                        let raw = RawExchangeRow {
                            statement_id: id,
                            prompt,
                            completion: completion.text,
                            retrieved_at: completion.retrieved_at,
                            from_cache: completion.from_cache,
                        };
                        Ok((row, raw))
                    }
                })
                .buffer_unordered(BUFFER)
                .collect()
                .await
        });

    let mut rows = Vec::new();
    let mut raw = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok((row, exchange)) => {
                rows.push(row);
                raw.push(exchange);
            }
            Err((id, stage, detail)) => failures.push(FailureRecord::now(
                &unit.id,
                stage,
                format!("statement {id}: {detail}"),
            )),
        }
    }
    rows.sort_by_key(|row| row.statement_id);
    raw.sort_by_key(|row| row.statement_id);
    failures.sort_by(|a, b| a.detail.cmp(&b.detail));
    UnitScoring {
        rows,
        raw,
        failures,
    }
}

/// Digest over everything that determines a unit's scores, so reruns skip
/// the unit only when nothing relevant changed.
pub(crate) fn unit_digest(
    unit: &Unit,
    model_id: &str,
    classifier_endpoint: &str,
    params: GenerationParams,
    tau: f64,
    bank_digest: &str,
) -> String {
    let payload = serde_json::json!({
        "endpoint": unit.endpoint,
        "model_id": model_id,
        "classifier": classifier_endpoint,
        "language": unit.language.to_string(),
        "variant_id": unit.variant.id,
        "variant_template": unit.variant.template,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
        "tau": tau,
        "bank": bank_digest,
    })
    .to_string();
    hex::encode(Sha256::digest(payload.as_bytes()))
}

pub(crate) fn file_digest(path: &std::path::Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn open_gateway(
    config: &RunConfig,
    offline: bool,
) -> Result<BlockingGateway, PipelineError> {
    let cache = Arc::new(ResponseCache::open(&config.gateway.cache_dir)?);
    let options = GatewayOptions {
        concurrency: config.gateway.concurrency,
        retry_base_ms: config.gateway.retry_base_ms,
        jitter_seed: config.gateway.jitter_seed.unwrap_or(0),
        offline,
    };
    Ok(BlockingGateway::new(
        config.gateway.endpoints.clone(),
        cache,
        options,
    )?)
}

pub(crate) fn pct_units(config: &RunConfig) -> Result<Vec<Unit>, PipelineError> {
    let pct = config.require_pct()?;
    let languages = config.pct_languages()?;
    let mut units = Vec::new();
    for endpoint in &pct.endpoints {
        for language in &languages {
            for variant_id in &pct.prompt_variants {
                let variant = pct.resolve_variant(variant_id).ok_or_else(|| {
                    PipelineError::Config(format!("unknown prompt variant {variant_id:?}"))
                })?;
                units.push(Unit {
                    id: unit_id(endpoint, language, variant_id),
                    endpoint: endpoint.clone(),
                    language: language.clone(),
                    variant,
                });
            }
        }
    }
    Ok(units)
}

/// Ensures one unit's scores exist, either by reusing the recorded artifact
/// when its input digest matches or by scoring through the gateway. Returns
/// the rows and whether the unit was resumed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn ensure_unit_scores(
    gateway: &BlockingGateway,
    bank: &StatementBank,
    bank_digest: &str,
    paths: &RunPaths,
    ledger: &BTreeMap<String, UnitRecord>,
    unit: &Unit,
    classifier_endpoint: &str,
    params: GenerationParams,
    tau: f64,
    failure_count: &mut usize,
) -> Result<(Vec<StatementScoreRow>, bool), PipelineError> {
    let model_id = gateway.profile(&unit.endpoint)?.model_id().to_string();
    let digest = unit_digest(unit, &model_id, classifier_endpoint, params, tau, bank_digest);
    let scores_rel = format!("scores/{}.scores.jsonl", unit.id);
    let scores_path = paths.root().join(&scores_rel);

    let resumable = ledger
        .get(&unit.id)
        .map(|record| record.digest == digest && paths.root().join(&record.artifact).exists())
        .unwrap_or(false);
    if resumable {
        let rows: Vec<StatementScoreRow> = read_jsonl(&scores_path)?;
        return Ok((rows, true));
    }

    let scoring = score_unit(gateway, bank, unit, classifier_endpoint, params, tau);
    for failure in &scoring.failures {
        append_jsonl(&paths.failures_file(), failure)?;
    }
    *failure_count += scoring.failures.len();

    write_jsonl(&scores_path, &scoring.rows)?;
    write_jsonl(
        &paths.raw().join(format!("{}.responses.jsonl", unit.id)),
        &scoring.raw,
    )?;

    if scoring.rows.len() == bank.statements().len() {
        let answers: BTreeMap<u32, OrdinalStance> = scoring
            .rows
            .iter()
            .map(|row| {
                let ordinal = OrdinalStance::from_label(row.ordinal_label)
                    .expect("labels come from discretize");
                (row.statement_id, ordinal)
            })
            .collect();
        let mut sheet = Vec::new();
        export_likert_answers(bank, &answers, &mut sheet)?;
        let answers_path = paths.scores().join(format!("{}.answers.jsonl", unit.id));
        std::fs::write(&answers_path, sheet).map_err(|e| io_error(answers_path.clone(), e))?;
        // Only complete units enter the ledger. A partial unit still
        // contributes its rows to this run's metrics, but the next run
        // rescores it, replaying the cached successes and retrying only
        // the statements that failed.
        append_jsonl(
            &paths.units_file(),
            &UnitRecord {
                unit_id: unit.id.clone(),
                digest,
                artifact: scores_rel,
                completed_at: Utc::now(),
            },
        )?;
    } else {
        let missing = bank.statements().len() - scoring.rows.len();
        append_jsonl(
            &paths.failures_file(),
            &FailureRecord::now(
                &unit.id,
                "answers",
                format!("answer sheet skipped: {missing} statements unscored"),
            ),
        )?;
    }
    Ok((scoring.rows, false))
}

fn unit_metrics(
    unit: &Unit,
    model_id: &str,
    rows: &[StatementScoreRow],
    statements_total: usize,
    stats: &StatsConfig,
) -> Result<PctMetricsRow, PipelineError> {
    let scored: Vec<ScoredStatement> = rows
        .iter()
        .map(|row| ScoredStatement {
            id: row.statement_id,
            axis: row.axis,
            direction: row.direction,
            score: row.score,
        })
        .collect();
    let point = aggregate_compass(&scored)?;
    let bias = bias_report(point);

    let confidences: Vec<f64> = rows.iter().map(|row| row.max_confidence).collect();
    let avg_confidence = confidences.iter().sum::<f64>() / confidences.len() as f64;
    let min_confidence = confidences.iter().copied().fold(f64::INFINITY, f64::min);
    let max_confidence = confidences
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let low = low_confidence_fraction(&confidences, stats.low_confidence_threshold)?;

    let scores: Vec<StanceScore> = rows.iter().map(|row| row.score).collect();
    let boot = bootstrap_stance(
        &scores,
        stats.bootstrap_resamples,
        stats.bootstrap_seed,
        stats.bootstrap_level,
    )?;

    let pairs: Vec<(StanceScore, f64)> = rows
        .iter()
        .map(|row| (row.score, row.max_confidence))
        .collect();
    let weighted_mean = confidence_weighted_mean(&pairs)?;
    let raw_pairs: Vec<(f64, f64)> = rows
        .iter()
        .map(|row| (row.score.value(), row.max_confidence))
        .collect();
    let weighted = bootstrap_statistic(
        &raw_pairs,
        |sample| {
            let total: f64 = sample.iter().map(|(_, weight)| weight).sum();
            if total == 0.0 {
                return 0.0;
            }
            sample
                .iter()
                .map(|(value, weight)| value * weight)
                .sum::<f64>()
                / total
        },
        stats.bootstrap_resamples,
        stats.bootstrap_seed,
        stats.bootstrap_level,
    )?;

    Ok(PctMetricsRow {
        unit_id: unit.id.clone(),
        endpoint: unit.endpoint.clone(),
        model_id: model_id.to_string(),
        language: unit.language.to_string(),
        variant: unit.variant.id.clone(),
        statements_total,
        statements_scored: rows.len(),
        economic: point.economic(),
        social: point.social(),
        euclidean: bias.euclidean,
        manhattan: bias.manhattan,
        chebyshev: bias.chebyshev,
        verdict: bias.verdict,
        avg_confidence,
        min_confidence,
        max_confidence,
        low_confidence_count: low.count,
        low_confidence_fraction: low.fraction,
        mean_score: boot.mean,
        bootstrap_error: boot.error,
        ci_low: boot.ci_low,
        ci_high: boot.ci_high,
        weighted_mean,
        weighted_error: weighted.error,
    })
}

/// Runs the full opinion audit: prompts every configured endpoint with every
/// bank statement, classifies the stances, and derives compass positions and
/// uncertainty metrics per unit.
pub fn run_pct_audit(
    config: &RunConfig,
    run_id: &str,
    offline: bool,
) -> Result<PctAuditOutcome, PipelineError> {
    let started_at = Utc::now();
    let pct = config.require_pct()?;
    let bank = StatementBank::load(&pct.statement_bank)?;
    let bank_digest = file_digest(&pct.statement_bank)?;
    let units = pct_units(config)?;
    let params = pct.generation_params();

    let paths = RunPaths::new(&config.output_dir, run_id);
    paths.create()?;
    let mut manifest = AuditManifest::open(&paths, run_id, &config.digest())?;
    let gateway = open_gateway(config, offline)?;
    let ledger = load_units(&paths)?;

    let mut metrics_rows = Vec::new();
    let mut failures = 0usize;
    let mut units_scored = 0usize;
    let mut units_resumed = 0usize;

    for unit in &units {
        let (rows, resumed) = ensure_unit_scores(
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
        if resumed {
            units_resumed += 1;
        } else {
            units_scored += 1;
        }
        let model_id = gateway.profile(&unit.endpoint)?.model_id().to_string();
        match unit_metrics(unit, &model_id, &rows, bank.statements().len(), &config.stats) {
            Ok(row) => metrics_rows.push(row),
            Err(error) => {
                append_jsonl(
                    &paths.failures_file(),
                    &FailureRecord::now(&unit.id, "metrics", &error),
                )?;
                failures += 1;
            }
        }
    }

    metrics_rows.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    let report_path = paths.reports().join("pct_metrics.json");
    write_json(
        &report_path,
        &PctReport {
            run_id: run_id.to_string(),
            rows: metrics_rows,
        },
    )?;

    let artifacts = vec![paths.relative(&report_path)];
    manifest.record_command("pct-audit", started_at, artifacts);
    manifest.save(&paths)?;

    Ok(PctAuditOutcome {
        run_id: run_id.to_string(),
        units_total: units.len(),
        units_scored,
        units_resumed,
        failures,
        report_path,
    })
}
