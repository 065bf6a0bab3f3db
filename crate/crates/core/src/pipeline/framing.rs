//! Headline framing audit: builds or loads a stance-tagged corpus, annotates
//! every headline with frames, entities, and sentiment, and reports group
//! metrics per model, language, topic, and stance.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::Utc;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::framing::{
    entity_prominence, entity_sentiment_distribution, frame_ratio, lexical_polarity_rate,
    polarization_score, sentiment_bias, EntityMention, FrameAssignment, FrameRegistry,
    FramingError, SentimentDistribution, SentimentLabel, SentimentMass,
};
use crate::gateway::{BlockingGateway, GenerationParams};
use crate::model::{
    load_headline_corpus, write_headline_corpus, HeadlineRecord, LanguageCode, Stance,
    TopicRegistry,
};
use crate::pipeline::config::{FramingConfig, RunConfig};
use crate::pipeline::manifest::{
    append_jsonl, load_units, read_jsonl, write_json, write_jsonl, AuditManifest, FailureRecord,
    RunPaths, UnitRecord,
};
use crate::pipeline::pct::{file_digest, open_gateway};
use crate::pipeline::{io_error, PipelineError};

/// Annotation concurrency fed into the buffered stream. The gateway's
/// per-endpoint limiter enforces the effective bound.
const BUFFER: usize = 32;

/// One entity's standing within a group: mention share plus pooled sentiment.
///
/// The sentiment is absent when none of the entity's headlines carries a
/// sentiment annotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityReportRow {
    pub entity_key: String,
    pub mentions: usize,
    pub prominence: f64,
    pub sentiment: Option<SentimentDistribution>,
}

/// Metrics for one (model, language, topic, stance) headline group.
///
/// Optional fields are absent when the analysis lacked data, for example when
/// every frame classification in the group failed or the group holds a single
/// headline so spread is undefined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FramingGroupRow {
    pub model_id: String,
    pub language: String,
    pub topic: String,
    pub stance: Stance,
    pub headline_count: usize,
    pub frames_classified: usize,
    pub frame_ratios: Option<BTreeMap<String, f64>>,
    pub top_entities: Vec<EntityReportRow>,
    pub sentiment_coverage: usize,
    pub lexical_polarity_rate: Option<f64>,
    pub polarization: Option<f64>,
}

/// Report file written by the framing audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FramingReport {
    pub run_id: String,
    pub rows: Vec<FramingGroupRow>,
}

/// Summary of one framing audit run.
#[derive(Debug, Clone)]
pub struct FramingAuditOutcome {
    pub run_id: String,
    pub headlines: usize,
    pub groups_total: usize,
    pub groups_reported: usize,
    pub units_resumed: usize,
    pub failures: usize,
    pub report_path: PathBuf,
}

impl FramingAuditOutcome {
    /// Whether every generation, annotation, and metric step completed.
    pub fn is_complete(&self) -> bool {
        self.failures == 0
    }
}

/// Sentiment annotation for one headline.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SentimentRow {
    headline_id: String,
    distribution: SentimentDistribution,
}

/// All gateway annotations for one headline. Streams independently, so a
/// sentiment outage still leaves the frame and entity channels usable.
struct HeadlineAnnotation {
    index: usize,
    frames: Option<FrameAssignment>,
    entities: Vec<EntityMention>,
    sentiment: Option<SentimentRow>,
    failures: Vec<FailureRecord>,
}

/// One planned headline generation batch.
struct GenerationPlan {
    unit_id: String,
    endpoint: String,
    language: LanguageCode,
    topic: String,
    stance: Stance,
}

fn slug(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_dash = true;
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
            last_dash = false;
        } else if !last_dash {
            out.push('-');
            last_dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

fn generation_plans(
    config: &FramingConfig,
    languages: &[LanguageCode],
    topics: &TopicRegistry,
) -> Vec<GenerationPlan> {
    let mut plans = Vec::new();
    for endpoint in &config.endpoints {
        for language in languages {
            for entry in topics.entries() {
                for stance in Stance::all() {
                    let unit_id = format!(
                        "headlines__{endpoint}__{language}__{}__{stance}",
                        slug(&entry.topic),
                        stance = slug(stance.label())
                    );
                    plans.push(GenerationPlan {
                        unit_id,
                        endpoint: endpoint.clone(),
                        language: language.clone(),
                        topic: entry.topic.clone(),
                        stance,
                    });
                }
            }
        }
    }
    plans
}

fn generation_digest(
    plan: &GenerationPlan,
    model_id: &str,
    tag: &str,
    count: u32,
    params: GenerationParams,
) -> String {
    let payload = serde_json::json!({
        "endpoint": plan.endpoint,
        "model_id": model_id,
        "language": plan.language.to_string(),
        "topic": plan.topic,
        "stance": plan.stance,
        "tag": tag,
        "count": count,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
    });
    hex::encode(Sha256::digest(payload.to_string().as_bytes()))
}

/// Ensures one generation batch exists, reusing the recorded artifact when
/// its input digest matches. A failed batch records nothing, so the next run
/// retries it.
#[allow(clippy::too_many_arguments)]
fn ensure_headlines(
    gateway: &BlockingGateway,
    paths: &RunPaths,
    ledger: &BTreeMap<String, UnitRecord>,
    plan: &GenerationPlan,
    topics: &TopicRegistry,
    count: u32,
    params: GenerationParams,
    failure_count: &mut usize,
) -> Result<(Vec<HeadlineRecord>, bool), PipelineError> {
    let topic_stance = topics.stance_of(&plan.topic, plan.stance)?;
    let tag = topic_stance.tag_in(&plan.language)?.to_string();
    let model_id = gateway.profile(&plan.endpoint)?.model_id().to_string();
    let digest = generation_digest(plan, &model_id, &tag, count, params);
    let artifact = format!("raw/{}.headlines.jsonl", plan.unit_id);
    let artifact_path = paths.root().join(&artifact);

    let resumable = ledger
        .get(&plan.unit_id)
        .map(|record| record.digest == digest && paths.root().join(&record.artifact).exists())
        .unwrap_or(false);
    if resumable {
        return Ok((read_jsonl(&artifact_path)?, true));
    }

    let batch = match gateway.generate_headlines(
        &plan.endpoint,
        &topic_stance,
        &plan.language,
        count,
        params,
    ) {
        Ok(batch) => batch,
        Err(error) => {
            append_jsonl(
                &paths.failures_file(),
                &FailureRecord::now(&plan.unit_id, "generate", error),
            )?;
            *failure_count += 1;
            return Ok((Vec::new(), false));
        }
    };

    // Batch ids only disambiguate within one prompt, so rekey them under the
    // unit id to keep the merged corpus collision free.
    let records: Vec<HeadlineRecord> = batch
        .records
        .into_iter()
        .enumerate()
        .map(|(index, mut record)| {
            record.id = format!("{}-{:04}", plan.unit_id, index + 1);
            record
        })
        .collect();
    if batch.shortfall > 0 {
        append_jsonl(
            &paths.failures_file(),
            &FailureRecord::now(
                &plan.unit_id,
                "shortfall",
                format!(
                    "requested {} headlines, completion yielded {}",
                    batch.requested,
                    records.len()
                ),
            ),
        )?;
        *failure_count += 1;
    }

    write_jsonl(&artifact_path, &records)?;
    append_jsonl(
        &paths.units_file(),
        &UnitRecord {
            unit_id: plan.unit_id.clone(),
            digest,
            artifact,
            completed_at: Utc::now(),
        },
    )?;
    Ok((records, false))
}

fn annotation_digest(
    config: &FramingConfig,
    corpus_digest: &str,
    frames: &FrameRegistry,
    params: GenerationParams,
) -> String {
    let payload = serde_json::json!({
        "corpus": corpus_digest,
        "frame_endpoint": config.frame_endpoint,
        "ner_endpoint": config.ner_endpoint,
        "sentiment_endpoint": config.sentiment_endpoint,
        "frames": frames.names(),
        "template": config.frame_template(),
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
    });
    hex::encode(Sha256::digest(payload.to_string().as_bytes()))
}

async fn annotate_headline(
    gateway: &BlockingGateway,
    config: &FramingConfig,
    frames: &FrameRegistry,
    params: GenerationParams,
    index: usize,
    record: &HeadlineRecord,
) -> HeadlineAnnotation {
    let mut annotation = HeadlineAnnotation {
        index,
        frames: None,
        entities: Vec::new(),
        sentiment: None,
        failures: Vec::new(),
    };
    let inner = gateway.inner();

    match inner
        .classify_frames(
            &config.frame_endpoint,
            &record.text,
            frames,
            config.frame_template(),
            params,
        )
        .await
    {
        Ok(names) => {
            annotation.frames = Some(FrameAssignment {
                headline_id: record.id.clone(),
                frames: names,
            });
        }
        Err(error) => annotation
            .failures
            .push(FailureRecord::now(&record.id, "frames", error)),
    }

    match inner
        .extract_entities(&config.ner_endpoint, &record.id, &record.text, &record.language)
        .await
    {
        Ok(mentions) => annotation.entities = mentions,
        Err(error) => annotation
            .failures
            .push(FailureRecord::now(&record.id, "entities", error)),
    }

    match inner
        .classify_sentiment(&config.sentiment_endpoint, &record.text)
        .await
    {
        Ok(distribution) => {
            annotation.sentiment = Some(SentimentRow {
                headline_id: record.id.clone(),
                distribution,
            });
        }
        Err(error) => annotation
            .failures
            .push(FailureRecord::now(&record.id, "sentiment", error)),
    }

    annotation
}

struct AnnotationSet {
    frames: Vec<FrameAssignment>,
    entities: Vec<EntityMention>,
    sentiments: Vec<SentimentRow>,
}

/// Ensures the three annotation channels exist for the whole corpus, resuming
/// from the recorded artifacts when the corpus and settings are unchanged.
#[allow(clippy::too_many_arguments)]
fn ensure_annotations(
    gateway: &BlockingGateway,
    config: &FramingConfig,
    frames: &FrameRegistry,
    paths: &RunPaths,
    ledger: &BTreeMap<String, UnitRecord>,
    corpus: &[HeadlineRecord],
    corpus_digest: &str,
    failure_count: &mut usize,
) -> Result<(AnnotationSet, bool), PipelineError> {
    let params = config.generation_params();
    let digest = annotation_digest(config, corpus_digest, frames, params);
    let frames_rel = "scores/frames.jsonl".to_string();
    let frames_path = paths.root().join(&frames_rel);
    let entities_path = paths.scores().join("entities.jsonl");
    let sentiments_path = paths.scores().join("sentiments.jsonl");

    let resumable = ledger
        .get("annotations")
        .map(|record| {
            record.digest == digest
                && frames_path.exists()
                && entities_path.exists()
                && sentiments_path.exists()
        })
        .unwrap_or(false);
    if resumable {
        let set = AnnotationSet {
            frames: read_jsonl(&frames_path)?,
            entities: read_jsonl(&entities_path)?,
            sentiments: read_jsonl(&sentiments_path)?,
        };
        return Ok((set, true));
    }

    let mut annotations: Vec<HeadlineAnnotation> = gateway.run(async {
        stream::iter(
            corpus
                .iter()
                .enumerate()
                .map(|(index, record)| {
                    annotate_headline(gateway, config, frames, params, index, record)
                }),
        )
        .buffer_unordered(BUFFER)
        .collect()
        .await
    });
    annotations.sort_by_key(|annotation| annotation.index);

    let mut set = AnnotationSet {
        frames: Vec::new(),
        entities: Vec::new(),
        sentiments: Vec::new(),
    };
    for annotation in annotations {
        for failure in &annotation.failures {
            append_jsonl(&paths.failures_file(), failure)?;
            *failure_count += 1;
        }
        if let Some(assignment) = annotation.frames {
            set.frames.push(assignment);
        }
        set.entities.extend(annotation.entities);
        if let Some(row) = annotation.sentiment {
            set.sentiments.push(row);
        }
    }

    write_jsonl(&frames_path, &set.frames)?;
    write_jsonl(&entities_path, &set.entities)?;
    write_jsonl(&sentiments_path, &set.sentiments)?;
    append_jsonl(
        &paths.units_file(),
        &UnitRecord {
            unit_id: "annotations".to_string(),
            digest,
            artifact: frames_rel,
            completed_at: Utc::now(),
        },
    )?;
    Ok((set, false))
}

/// Computes the metrics row for one headline group. Channels without data
/// stay `None` instead of reporting fabricated zeros.
fn group_row(
    key: (String, String, String, Stance),
    records: &[&HeadlineRecord],
    registry: &FrameRegistry,
    top_k: usize,
    annotations: &AnnotationSet,
) -> Result<FramingGroupRow, FramingError> {
    let (model_id, language, topic, stance) = key;
    let ids: std::collections::BTreeSet<&str> =
        records.iter().map(|record| record.id.as_str()).collect();

    let assignments: Vec<FrameAssignment> = annotations
        .frames
        .iter()
        .filter(|assignment| ids.contains(assignment.headline_id.as_str()))
        .cloned()
        .collect();
    let frame_ratios = if assignments.is_empty() {
        None
    } else {
        Some(frame_ratio(&assignments, registry)?.ratio_by_frame)
    };

    let sentiments: BTreeMap<&str, &SentimentDistribution> = annotations
        .sentiments
        .iter()
        .filter(|row| ids.contains(row.headline_id.as_str()))
        .map(|row| (row.headline_id.as_str(), &row.distribution))
        .collect();

    let mentions: Vec<EntityMention> = annotations
        .entities
        .iter()
        .filter(|mention| ids.contains(mention.headline_id.as_str()))
        .cloned()
        .collect();
    let mut top_entities = Vec::new();
    if !mentions.is_empty() {
        let per_mention: Vec<(String, SentimentMass)> = mentions
            .iter()
            .filter_map(|mention| {
                sentiments.get(mention.headline_id.as_str()).map(|d| {
                    (
                        mention.entity_key.clone(),
                        SentimentMass {
                            positive: d.positive(),
                            negative: d.negative(),
                            neutral: d.neutral(),
                        },
                    )
                })
            })
            .collect();
        let entity_sentiments: BTreeMap<String, SentimentDistribution> = if per_mention.is_empty()
        {
            BTreeMap::new()
        } else {
            entity_sentiment_distribution(&per_mention)?
                .into_iter()
                .collect()
        };
        for share in entity_prominence(&mentions)?.into_iter().take(top_k) {
            let sentiment = entity_sentiments.get(&share.entity_key).copied();
            top_entities.push(EntityReportRow {
                entity_key: share.entity_key,
                mentions: share.mentions,
                prominence: share.prominence,
                sentiment,
            });
        }
    }

    let labels: Vec<SentimentLabel> = sentiments.values().map(|d| sentiment_bias(d)).collect();
    let polarity_rate = if labels.is_empty() {
        None
    } else {
        Some(lexical_polarity_rate(&labels)?)
    };
    let polarities: Vec<f64> = sentiments.values().map(|d| d.polarity()).collect();
    let polarization = if polarities.len() < 2 {
        None
    } else {
        Some(polarization_score(&polarities)?)
    };

    Ok(FramingGroupRow {
        model_id,
        language,
        topic,
        stance,
        headline_count: records.len(),
        frames_classified: assignments.len(),
        frame_ratios,
        top_entities,
        sentiment_coverage: sentiments.len(),
        lexical_polarity_rate: polarity_rate,
        polarization,
    })
}

/// Runs the framing audit and writes `reports/framing_metrics.json`.
///
/// The corpus comes from `corpus_file` when configured, otherwise each
/// endpoint generates `headline_count` headlines per language, topic, and
/// stance. Failed batches, annotations, and group metrics land in the failure
/// ledger and the audit carries on with what it has.
pub fn run_framing_audit(
    config: &RunConfig,
    run_id: &str,
    offline: bool,
) -> Result<FramingAuditOutcome, PipelineError> {
    let started_at = Utc::now();
    let framing = config.require_framing()?;
    let languages = config.framing_languages()?;
    let topics = TopicRegistry::load(&framing.topics_file)?;
    let registry = match &framing.frames_file {
        Some(path) => FrameRegistry::load(path)?,
        None => FrameRegistry::boydstun(),
    };

    let paths = RunPaths::new(&config.output_dir, run_id);
    paths.create()?;
    let mut manifest = AuditManifest::open(&paths, run_id, &config.digest())?;
    let gateway = open_gateway(config, offline)?;
    let ledger = load_units(&paths)?;

    let mut failure_count = 0usize;
    let mut units_resumed = 0usize;

    let corpus: Vec<HeadlineRecord> = match &framing.corpus_file {
        Some(path) => load_headline_corpus(path, &topics)?,
        None => {
            let mut merged = Vec::new();
            for plan in generation_plans(framing, &languages, &topics) {
                let (records, resumed) = ensure_headlines(
                    &gateway,
                    &paths,
                    &ledger,
                    &plan,
                    &topics,
                    framing.headline_count,
                    framing.generation_params(),
                    &mut failure_count,
                )?;
                if resumed {
                    units_resumed += 1;
                }
                merged.extend(records);
            }
            merged
        }
    };

    let corpus_path = paths.raw().join("corpus.jsonl");
    let mut buffer = Vec::new();
    write_headline_corpus(&corpus, &mut buffer).map_err(|e| io_error(corpus_path.clone(), e))?;
    std::fs::write(&corpus_path, buffer).map_err(|e| io_error(corpus_path.clone(), e))?;
    let corpus_digest = file_digest(&corpus_path)?;

    let (annotations, resumed) = ensure_annotations(
        &gateway,
        framing,
        &registry,
        &paths,
        &ledger,
        &corpus,
        &corpus_digest,
        &mut failure_count,
    )?;
    if resumed {
        units_resumed += 1;
    }

    let mut groups: BTreeMap<(String, String, String, Stance), Vec<&HeadlineRecord>> =
        BTreeMap::new();
    for record in &corpus {
        groups
            .entry((
                record.model_id.clone(),
                record.language.to_string(),
                record.topic.clone(),
                record.stance,
            ))
            .or_default()
            .push(record);
    }

    let groups_total = groups.len();
    let mut rows = Vec::with_capacity(groups_total);
    for (key, records) in groups {
        let group_label = format!(
            "{}__{}__{}__{}",
            key.0,
            key.1,
            slug(&key.2),
            slug(key.3.label())
        );
        match group_row(key, &records, &registry, framing.top_k_entities, &annotations) {
            Ok(row) => rows.push(row),
            Err(error) => {
                append_jsonl(
                    &paths.failures_file(),
                    &FailureRecord::now(&group_label, "metrics", error),
                )?;
                failure_count += 1;
            }
        }
    }

    let groups_reported = rows.len();
    let report_path = paths.reports().join("framing_metrics.json");
    write_json(
        &report_path,
        &FramingReport {
            run_id: run_id.to_string(),
            rows,
        },
    )?;

    manifest.record_command(
        "framing-audit",
        started_at,
        vec![paths.relative(&report_path)],
    );
    manifest.save(&paths)?;

    Ok(FramingAuditOutcome {
        run_id: run_id.to_string(),
        headlines: corpus.len(),
        groups_total,
        groups_reported,
        units_resumed,
        failures: failure_count,
        report_path,
    })
}
