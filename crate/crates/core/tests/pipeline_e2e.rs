//! End-to-end pipeline tests against the scripted mock server: full audit
//! runs, resume and retry behavior, artifact-to-report consistency, and the
//! process-level exit code contract.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;

use biaslens::framing::{EntityMention, FrameAssignment, SentimentDistribution};
use biaslens::gateway::mock::{FailRule, MockScenario, MockServer};
use biaslens::gateway::EndpointKind;
use biaslens::model::{write_headline_corpus, HeadlineRecord, LanguageCode, Stance};
use biaslens::pipeline::{
    render_report, run_framing_audit, run_pct_audit, FailureRecord, FramingConfig, FramingReport,
    GatewayConfig, PctConfig, PctReport, PipelineError, ReportFormat, RunConfig, RunPaths,
    StatsConfig,
};

fn workspace_file(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(relative)
}

fn english() -> LanguageCode {
    LanguageCode::new("en").unwrap()
}

fn base_config(server: &MockServer, cache_dir: &Path, output_dir: &Path) -> RunConfig {
    let mut endpoints = vec![
        server.endpoint("chat", EndpointKind::Chat),
        server.endpoint("classify", EndpointKind::Classifier),
        server.endpoint("ner", EndpointKind::Ner),
        server.endpoint("sentiment", EndpointKind::Sentiment),
    ];
    for profile in &mut endpoints {
        profile.requests_per_minute = 600_000;
        profile.max_retries = 1;
    }
    endpoints[0].model = Some("mock-chat".to_string());
    RunConfig {
        output_dir: output_dir.to_path_buf(),
        pct: None,
        framing: None,
        stats: StatsConfig {
            bootstrap_resamples: 200,
            bootstrap_seed: 3,
            bootstrap_level: 0.95,
            low_confidence_threshold: 0.5,
        },
        gateway: GatewayConfig {
            cache_dir: cache_dir.to_path_buf(),
            concurrency: 4,
            retry_base_ms: 1,
            jitter_seed: Some(0),
            endpoints,
        },
    }
}

fn pct_section() -> PctConfig {
    PctConfig {
        statement_bank: workspace_file("data/demo_bank.jsonl"),
        languages: vec!["en".to_string()],
        endpoints: vec!["chat".to_string()],
        classifier_endpoint: "classify".to_string(),
        tau: 2.5,
        prompt_variants: vec!["base".to_string(), "v1".to_string()],
        variant_templates: BTreeMap::new(),
        temperature: 0.0,
        top_p: 1.0,
        max_tokens: 150,
    }
}

fn framing_section(corpus_file: Option<PathBuf>) -> FramingConfig {
    FramingConfig {
        topics_file: workspace_file("data/topics.json"),
        frames_file: Some(workspace_file("data/frames.json")),
        languages: vec!["en".to_string()],
        endpoints: vec!["chat".to_string()],
        ner_endpoint: "ner".to_string(),
        sentiment_endpoint: "sentiment".to_string(),
        frame_endpoint: "chat".to_string(),
        frame_prompt_template: None,
        headline_count: 3,
        top_k_entities: 5,
        temperature: 0.5,
        top_p: 1.0,
        max_tokens: 400,
        corpus_file,
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect()
}

#[test]
fn pct_rerun_resumes_every_unit_without_network() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut config = base_config(&server, cache_dir.path(), out.path());
    config.pct = Some(pct_section());

    let first = run_pct_audit(&config, "resume", false).unwrap();
    assert!(first.is_complete());
    assert_eq!(first.units_total, 2);
    assert_eq!(first.units_scored, 2);
    assert_eq!(first.units_resumed, 0);
    let report_bytes = std::fs::read(&first.report_path).unwrap();
    let requests = server.total_requests();

    let second = run_pct_audit(&config, "resume", false).unwrap();
    assert!(second.is_complete());
    assert_eq!(second.units_resumed, 2);
    assert_eq!(second.units_scored, 0);
    assert_eq!(server.total_requests(), requests, "resume must not hit the network");
    assert_eq!(
        std::fs::read(&second.report_path).unwrap(),
        report_bytes,
        "resumed report must be byte-identical"
    );
}

#[test]
fn transient_failure_leaves_partial_unit_that_reruns_to_completion() {
    // Statement 1's text appears in both the generation prompt and the
    // classification request; two injected 503s exhaust the single retry,
    // so the statement fails on the first pass and succeeds on the next.
    let server = MockServer::start(MockScenario {
        fail_rules: vec![FailRule {
            contains: vec!["Lower corporate taxes".to_string()],
            status: 503,
            times: Some(2),
        }],
        ..MockScenario::default()
    });
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut config = base_config(&server, cache_dir.path(), out.path());
    config.pct = Some(pct_section());

    let first = run_pct_audit(&config, "retry", false).unwrap();
    assert!(!first.is_complete());
    assert_eq!(first.failures, 1, "one statement failed");
    let paths = RunPaths::new(&config.output_dir, "retry");
    let ledger: Vec<FailureRecord> = read_jsonl(&paths.failures_file());
    let stages: Vec<&str> = ledger.iter().map(|f| f.stage.as_str()).collect();
    assert!(
        stages.contains(&"generate") && stages.contains(&"answers"),
        "ledger records the failure and the skipped answer sheet: {stages:?}"
    );
    let report: PctReport =
        serde_json::from_slice(&std::fs::read(&first.report_path).unwrap()).unwrap();
    let scored: Vec<usize> = report.rows.iter().map(|r| r.statements_scored).collect();
    assert!(scored.contains(&61) && scored.contains(&62), "scored {scored:?}");

    let requests = server.total_requests();
    let second = run_pct_audit(&config, "retry", false).unwrap();
    assert!(second.is_complete());
    assert_eq!(second.units_resumed, 1, "intact unit resumes");
    assert_eq!(second.units_scored, 1, "partial unit is rescored");
    // One generation request, plus a classification unless the other
    // variant's identical opinion already seeded the cache.
    let delta = server.total_requests() - requests;
    assert!(
        (1..=2).contains(&delta),
        "only the failed statement goes out, saw {delta} requests"
    );
    let report: PctReport =
        serde_json::from_slice(&std::fs::read(&second.report_path).unwrap()).unwrap();
    assert!(report.rows.iter().all(|r| r.statements_scored == 62));
}

#[test]
fn offline_cold_cache_fails_everything_then_online_run_recovers() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut config = base_config(&server, cache_dir.path(), out.path());
    config.pct = Some(pct_section());

    let offline = run_pct_audit(&config, "cold", true).unwrap();
    assert!(!offline.is_complete());
    assert_eq!(
        offline.failures,
        2 * (62 + 1),
        "every statement misses the cache and both empty units fail their metrics"
    );
    assert_eq!(server.total_requests(), 0, "offline mode must not touch the network");

    let online = run_pct_audit(&config, "cold", false).unwrap();
    assert!(online.is_complete());
    assert_eq!(online.units_scored, 2, "failed units are retried, not resumed");
    assert_eq!(online.units_resumed, 0);
}

#[derive(Deserialize)]
struct SentimentRow {
    headline_id: String,
    distribution: SentimentDistribution,
}

fn fixture_corpus() -> Vec<HeadlineRecord> {
    let mut records = Vec::new();
    let texts_pro = [
        "Universal Schooling Drive Reaches Punjab Villages",
        "Teachers Union Hails New Science Curriculum",
        "Lahore Literacy Program Doubles Enrollment",
        "Senate Backs Modern Classrooms Initiative",
        "Education Ministry Expands Scholarship Fund",
        "Karachi Parents Celebrate New Public Schools",
    ];
    let texts_opp = [
        "Seminary Leaders Warn Against Curriculum Overhaul",
        "Critics Say Reform Sidelines Religious Instruction",
        "Madrassa Council Rejects Secular Syllabus Push",
        "Traditional Schools Defend Time-tested Methods",
        "Clerics Rally Against Education Spending Bill",
    ];
    for (index, text) in texts_pro.iter().enumerate() {
        records.push(HeadlineRecord {
            id: format!("edu-pro-{}", index + 1),
            topic: "Education".to_string(),
            stance: Stance::Proponent,
            language: english(),
            model_id: "fixture-model".to_string(),
            text: text.to_string(),
            generation_prompt_id: "fixture".to_string(),
        });
    }
    for (index, text) in texts_opp.iter().enumerate() {
        records.push(HeadlineRecord {
            id: format!("edu-opp-{}", index + 1),
            topic: "Education".to_string(),
            stance: Stance::Opponent,
            language: english(),
            model_id: "fixture-model".to_string(),
            text: text.to_string(),
            generation_prompt_id: "fixture".to_string(),
        });
    }
    records
}

#[test]
fn framing_report_matches_hand_tally_of_recorded_annotations() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let corpus_dir = tempfile::tempdir().unwrap();

    let corpus_path = corpus_dir.path().join("corpus.jsonl");
    let corpus = fixture_corpus();
    let mut buffer = Vec::new();
    write_headline_corpus(&corpus, &mut buffer).unwrap();
    std::fs::write(&corpus_path, buffer).unwrap();

    let mut config = base_config(&server, cache_dir.path(), out.path());
    config.framing = Some(framing_section(Some(corpus_path)));

    let outcome = run_framing_audit(&config, "tally", false).unwrap();
    assert!(outcome.is_complete(), "{} failures", outcome.failures);
    assert_eq!(outcome.headlines, 11);
    assert_eq!(outcome.groups_total, 2);
    assert_eq!(outcome.groups_reported, 2);

    let paths = RunPaths::new(&config.output_dir, "tally");
    let assignments: Vec<FrameAssignment> =
        read_jsonl(&paths.root().join("scores/frames.jsonl"));
    let mentions: Vec<EntityMention> = read_jsonl(&paths.root().join("scores/entities.jsonl"));
    let sentiments: Vec<SentimentRow> = read_jsonl(&paths.root().join("scores/sentiments.jsonl"));
    let report: FramingReport =
        serde_json::from_slice(&std::fs::read(&outcome.report_path).unwrap()).unwrap();

    for row in &report.rows {
        assert_eq!(row.model_id, "fixture-model");
        assert_eq!(row.language, "en");
        assert_eq!(row.topic, "Education");
        let members: Vec<&HeadlineRecord> = corpus
            .iter()
            .filter(|record| record.stance == row.stance)
            .collect();
        let ids: Vec<&str> = members.iter().map(|record| record.id.as_str()).collect();
        assert_eq!(row.headline_count, members.len());

        let group_assignments: Vec<&FrameAssignment> = assignments
            .iter()
            .filter(|a| ids.contains(&a.headline_id.as_str()))
            .collect();
        assert_eq!(row.frames_classified, group_assignments.len());
        let ratios = row.frame_ratios.as_ref().expect("group has classified frames");
        assert_eq!(ratios.len(), 15, "every registry frame appears, zeros included");
        for (frame, ratio) in ratios {
            let count = group_assignments
                .iter()
                .filter(|a| a.frames.contains(frame))
                .count();
            assert_eq!(
                *ratio,
                count as f64 / group_assignments.len() as f64,
                "frame {frame} in {:?}",
                row.stance
            );
        }

        let group_mentions: Vec<&EntityMention> = mentions
            .iter()
            .filter(|m| ids.contains(&m.headline_id.as_str()))
            .collect();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for mention in &group_mentions {
            *counts.entry(mention.entity_key.as_str()).or_insert(0) += 1;
        }
        let mut expected: Vec<(&str, usize)> = counts.into_iter().collect();
        expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        expected.truncate(5);
        assert_eq!(row.top_entities.len(), expected.len());
        for (entity, (key, count)) in row.top_entities.iter().zip(&expected) {
            assert_eq!(entity.entity_key, *key);
            assert_eq!(entity.mentions, *count);
            assert_eq!(entity.prominence, *count as f64 / group_mentions.len() as f64);
        }

        let group_sentiments: Vec<&SentimentRow> = sentiments
            .iter()
            .filter(|s| ids.contains(&s.headline_id.as_str()))
            .collect();
        assert_eq!(row.sentiment_coverage, group_sentiments.len());
        let mut positive = 0i64;
        let mut negative = 0i64;
        for sentiment in &group_sentiments {
            let (p, n, u) = (
                sentiment.distribution.positive(),
                sentiment.distribution.negative(),
                sentiment.distribution.neutral(),
            );
            if u >= p && u >= n {
                continue;
            }
            if p >= n {
                positive += 1;
            } else {
                negative += 1;
            }
        }
        let rate = (positive - negative) as f64 / group_sentiments.len() as f64;
        assert_eq!(row.lexical_polarity_rate, Some(rate));

        let polarities: Vec<f64> = group_sentiments
            .iter()
            .map(|s| s.distribution.polarity())
            .collect();
        let mean = polarities.iter().sum::<f64>() / polarities.len() as f64;
        let mean_square =
            polarities.iter().map(|v| v * v).sum::<f64>() / polarities.len() as f64;
        let spread = (mean_square - mean * mean).max(0.0).sqrt();
        let reported = row.polarization.expect("groups have at least two headlines");
        assert!(
            (reported - spread).abs() < 1e-9,
            "polarization {reported} vs tally {spread}"
        );
    }
}

#[test]
fn framing_rerun_resumes_generation_and_annotation_units() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut config = base_config(&server, cache_dir.path(), out.path());
    config.framing = Some(framing_section(None));

    let first = run_framing_audit(&config, "framing-resume", false).unwrap();
    assert!(first.is_complete());
    assert_eq!(first.headlines, 3 * 11 * 2, "count per topic and stance");
    assert_eq!(first.units_resumed, 0);
    let requests = server.total_requests();

    let second = run_framing_audit(&config, "framing-resume", false).unwrap();
    assert!(second.is_complete());
    assert_eq!(
        second.units_resumed,
        22 + 1,
        "every generation batch plus the annotation pass"
    );
    assert_eq!(server.total_requests(), requests);
}

#[test]
fn report_renders_identically_and_rejects_unknown_runs() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut config = base_config(&server, cache_dir.path(), out.path());
    config.pct = Some(pct_section());
    run_pct_audit(&config, "render", false).unwrap();

    let mut first = Vec::new();
    render_report(&config.output_dir, "render", ReportFormat::Tabular, &mut first).unwrap();
    let mut second = Vec::new();
    render_report(&config.output_dir, "render", ReportFormat::Tabular, &mut second).unwrap();
    assert_eq!(first, second, "re-rendering must be byte-identical");

    let mut plot = Vec::new();
    render_report(&config.output_dir, "render", ReportFormat::Plotdata, &mut plot).unwrap();
    let value: serde_json::Value = serde_json::from_slice(&plot).unwrap();
    assert_eq!(value["run_id"], "render");
    assert!(value["series"].is_array());

    let mut sink = Vec::new();
    let error = render_report(&config.output_dir, "no-such-run", ReportFormat::Tabular, &mut sink)
        .unwrap_err();
    assert!(matches!(error, PipelineError::UnknownRun(_)));
    assert_eq!(error.exit_code(), 1);
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "output_dir = [1, 2]\n").unwrap();
    let error = RunConfig::load(&path).unwrap_err();
    assert!(matches!(error, PipelineError::Config(_)));
    assert_eq!(error.exit_code(), 3);
}

#[test]
fn missing_audit_section_is_a_config_error() {
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let server = MockServer::start(MockScenario::default());
    let config = base_config(&server, cache_dir.path(), out.path());

    let error = run_pct_audit(&config, "none", false).unwrap_err();
    assert!(matches!(error, PipelineError::Config(_)));
    assert_eq!(error.exit_code(), 3);
    let error = run_framing_audit(&config, "none", false).unwrap_err();
    assert_eq!(error.exit_code(), 3);
}

#[test]
fn binary_exit_codes_follow_the_contract() {
    let binary = env!("CARGO_BIN_EXE_biaslens");
    let dir = tempfile::tempdir().unwrap();

    let status = Command::new(binary).arg("--help").status().unwrap();
    assert_eq!(status.code(), Some(0), "--help exits cleanly");

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "gateway = 5\n").unwrap();
    let status = Command::new(binary)
        .args(["--config", broken.to_str().unwrap(), "validate"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3), "malformed config exits 3");

    let absent = dir.path().join("absent.toml");
    let status = Command::new(binary)
        .args(["--config", absent.to_str().unwrap(), "validate"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3), "unreadable config exits 3");

    let status = Command::new(binary).arg("no-such-command").output().unwrap();
    assert_eq!(status.status.code(), Some(3), "usage errors exit 3");

    let minimal = dir.path().join("minimal.toml");
    std::fs::write(
        &minimal,
        format!(
            "output_dir = {:?}\n[gateway]\ncache_dir = {:?}\n",
            dir.path().join("runs"),
            dir.path().join("cache")
        ),
    )
    .unwrap();
    let status = Command::new(binary)
        .args([
            "--config",
            minimal.to_str().unwrap(),
            "--run-id",
            "ghost",
            "report",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1), "reporting a missing run exits 1");
}
