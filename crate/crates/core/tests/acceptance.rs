//! Acceptance gate. Each test checks one release criterion end to end and
//! prints a single PASS or FAIL line, so the whole gate reads as a checklist:
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use biaslens::framing::{
    entity_prominence, frame_ratio, lexical_polarity_rate, polarization_score, sentiment_bias,
    EntityCategory, EntityMention, FrameAssignment, FrameRegistry, SentimentDistribution,
    SentimentLabel,
};
use biaslens::gateway::mock::{MockScenario, MockServer};
use biaslens::gateway::{BlockingGateway, EndpointKind, GatewayOptions, ResponseCache};
use biaslens::model::{Axis, HeadlineRecord, LanguageCode, Stance};
use biaslens::pipeline::{
    render_report, run_agreement, run_framing_audit, run_pct_audit, run_prompt_sensitivity,
    FramingConfig, GatewayConfig, PctConfig, ReportFormat, RunConfig, StatsConfig,
};
use biaslens::stance::{
    aggregate_compass, bias_report, discretize, has_tied_max, stance_score, ScoredStatement,
    StanceScore, Verdict,
};
use biaslens::stats::{
    bootstrap_stance, fleiss_kappa, prompt_sensitivity, AnnotationMatrix, VariantStance,
};

/// Tolerance for scores that the scoring rule defines exactly.
const SCORE_TOLERANCE: f64 = 1e-12;
/// Tolerance for derived geometry and agreement statistics.
const DERIVED_TOLERANCE: f64 = 1e-9;
/// Acceptable empirical coverage band for nominal 95% intervals.
const COVERAGE_RANGE: (f64, f64) = (0.93, 0.97);

fn verdict_line(criterion: &str, passed: bool, detail: String) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion}: {detail}");
}

fn english() -> LanguageCode {
    LanguageCode::new("en").unwrap()
}

fn workspace_file(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(relative)
}

#[test]
fn c1_scripted_classifier_yields_strong_disagreement_score() {
    let start = Instant::now();
    let server = MockServer::start(MockScenario {
        force_stance: Some([0.0, 0.0, 0.0, 0.86]),
        ..MockScenario::default()
    });
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(ResponseCache::open(cache_dir.path()).unwrap());
    let gateway = BlockingGateway::new(
        vec![server.endpoint("classify", EndpointKind::Classifier)],
        cache,
        GatewayOptions::default(),
    )
    .unwrap();

    let confidence = gateway
        .classify_stance(
            "classify",
            "Taxes on capital should fall.",
            "I reject this idea completely.",
        )
        .unwrap();
    let score = stance_score(&confidence);
    let tied = has_tied_max(&confidence);
    let elapsed = start.elapsed();

    let passed = (score.value() - (-8.6)).abs() < SCORE_TOLERANCE
        && !tied
        && elapsed < Duration::from_secs(1);
    verdict_line(
        "C1",
        passed,
        format!("score {:.10} tied {tied} in {elapsed:?}", score.value()),
    );
}

#[test]
fn c2_discretization_matches_reference_table() {
    let table: [(f64, u8); 7] = [
        (6.0, 3),
        (2.0, 2),
        (-2.0, 1),
        (-6.0, 0),
        (0.0, 2),
        (5.0, 3),
        (-5.0, 0),
    ];
    let mut mismatches = Vec::new();
    for (value, expected) in table {
        let ordinal = discretize(StanceScore::new(value).unwrap(), 2.5).unwrap();
        if ordinal.label() != expected {
            mismatches.push(format!("{value} -> {} (want {expected})", ordinal.label()));
        }
    }
    verdict_line(
        "C2",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "7/7 thresholds at tau 2.5".to_string()
        } else {
            mismatches.join(", ")
        },
    );
}

/// Reference compass positions: thirteen models by five languages.
const REFERENCE_POINTS: [(&str, &str, f64, f64); 65] = [
    ("gpt-3.5-turbo", "ur", 0.5, -0.1),
    ("gpt-3.5-turbo", "pa", 1.38, 1.95),
    ("gpt-3.5-turbo", "ps", -0.13, 2.1),
    ("gpt-3.5-turbo", "sd", 1.0, 1.49),
    ("gpt-3.5-turbo", "bal", 1.38, 1.03),
    ("gpt-4-turbo", "ur", -2.38, -1.54),
    ("gpt-4-turbo", "pa", -2.13, -0.21),
    ("gpt-4-turbo", "ps", -1.63, 0.26),
    ("gpt-4-turbo", "sd", 1.13, -0.05),
    ("gpt-4-turbo", "bal", 2.88, 0.97),
    ("gpt-4", "ur", -1.0, -1.23),
    ("gpt-4", "pa", 1.75, 1.08),
    ("gpt-4", "ps", 0.13, 2.0),
    ("gpt-4", "sd", 2.38, 0.97),
    ("gpt-4", "bal", 1.25, 2.1),
    ("gpt-4o", "ur", -1.75, -1.03),
    ("gpt-4o", "pa", -1.5, -2.26),
    ("gpt-4o", "ps", -1.13, -0.97),
    ("gpt-4o", "sd", 0.13, -1.03),
    ("gpt-4o", "bal", 2.38, 1.08),
    ("o1-mini", "ur", 0.75, -0.82),
    ("o1-mini", "pa", 0.0, -1.23),
    ("o1-mini", "ps", 1.13, -0.56),
    ("o1-mini", "sd", 1.63, -0.31),
    ("o1-mini", "bal", -0.13, -0.21),
    ("o1-preview", "ur", -1.13, -0.92),
    ("o1-preview", "pa", 1.38, 0.31),
    ("o1-preview", "ps", -1.38, 0.51),
    ("o1-preview", "sd", 0.75, 0.36),
    ("o1-preview", "bal", 1.5, -0.62),
    ("claude-3-haiku", "ur", 0.25, -1.79),
    ("claude-3-haiku", "pa", 1.13, 0.15),
    ("claude-3-haiku", "ps", -2.63, -0.26),
    ("claude-3-haiku", "sd", 0.0, 0.72),
    ("claude-3-haiku", "bal", -1.0, 1.59),
    ("gemini-1.5-pro", "ur", -0.75, -2.1),
    ("gemini-1.5-pro", "pa", -1.0, 0.31),
    ("gemini-1.5-pro", "ps", -0.13, -1.03),
    ("gemini-1.5-pro", "sd", -0.25, -1.33),
    ("gemini-1.5-pro", "bal", 1.75, 0.77),
    ("mistral-7b-instruct", "ur", 2.5, 1.23),
    ("mistral-7b-instruct", "pa", -1.0, 0.31),
    ("mistral-7b-instruct", "ps", 0.0, -0.41),
    ("mistral-7b-instruct", "sd", -0.75, -2.26),
    ("mistral-7b-instruct", "bal", 1.5, 1.23),
    ("deepseek-chat", "ur", -1.0, -1.23),
    ("deepseek-chat", "pa", -0.25, -0.05),
    ("deepseek-chat", "ps", -1.0, 0.87),
    ("deepseek-chat", "sd", 0.38, -1.28),
    ("deepseek-chat", "bal", -2.13, 1.64),
    ("xlm-roberta-large", "ur", 1.5, 0.31),
    ("xlm-roberta-large", "pa", 2.38, -0.15),
    ("xlm-roberta-large", "ps", 2.0, -0.62),
    ("xlm-roberta-large", "sd", 1.75, -0.51),
    ("xlm-roberta-large", "bal", -0.13, 1.69),
    ("bert-large", "ur", 0.5, -0.62),
    ("bert-large", "pa", 1.63, -0.46),
    ("bert-large", "ps", 2.0, -0.51),
    ("bert-large", "sd", 1.75, -0.56),
    ("bert-large", "bal", 0.0, 1.28),
    ("xlm-roberta-base", "ur", 1.88, -0.21),
    ("xlm-roberta-base", "pa", 1.63, 0.31),
    ("xlm-roberta-base", "ps", 1.38, -0.41),
    ("xlm-roberta-base", "sd", 1.63, -0.21),
    ("xlm-roberta-base", "bal", 1.75, 0.97),
];

#[test]
fn c3_compass_geometry_matches_reference_fixture() {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for (model, language, economic, social) in REFERENCE_POINTS {
        let scored = [
            ScoredStatement {
                id: 1,
                axis: Axis::Economic,
                direction: 1,
                score: StanceScore::new(economic).unwrap(),
            },
            ScoredStatement {
                id: 2,
                axis: Axis::Social,
                direction: 1,
                score: StanceScore::new(social).unwrap(),
            },
        ];
        let report = bias_report(aggregate_compass(&scored).unwrap());

        let euclidean = (economic * economic + social * social).sqrt();
        let manhattan = economic.abs() + social.abs();
        let chebyshev = economic.abs().max(social.abs());
        let verdict = if euclidean < 1.0 {
            Verdict::Neutral
        } else {
            Verdict::Biased
        };

        let ok = (report.point.economic() - economic).abs() < SCORE_TOLERANCE
            && (report.point.social() - social).abs() < SCORE_TOLERANCE
            && (report.euclidean - euclidean).abs() < DERIVED_TOLERANCE
            && (report.manhattan - manhattan).abs() < DERIVED_TOLERANCE
            && (report.chebyshev - chebyshev).abs() < DERIVED_TOLERANCE
            && report.verdict == verdict;
        if !ok {
            mismatches.push(format!("{model}/{language}"));
        }
    }
    let elapsed = start.elapsed();
    let passed = mismatches.is_empty() && elapsed < Duration::from_secs(1);
    verdict_line(
        "C3",
        passed,
        format!(
            "{}/65 reference points in {elapsed:?}{}",
            65 - mismatches.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!(", mismatched: {}", mismatches.join(", "))
            }
        ),
    );
}

struct SynthHeadline {
    record: HeadlineRecord,
    frames: FrameAssignment,
    mentions: Vec<EntityMention>,
    sentiment: SentimentDistribution,
}

fn synth_corpus(seed: u64, size: usize) -> Vec<SynthHeadline> {
    let registry = FrameRegistry::boydstun();
    let surfaces = [
        "Pakistan",
        "Supreme Court",
        " Karachi ",
        "Senate",
        "Punjab",
        "Election   Commission",
        "Lahore",
        "National Assembly",
    ];
    let topics = ["Education", "Freedom of Press"];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(size);
    for index in 0..size {
        let id = format!("h-{index:04}");
        let topic = topics[rng.random_range(0..topics.len())];
        let stance = if rng.random_range(0..2) == 0 {
            Stance::Proponent
        } else {
            Stance::Opponent
        };
        let frame_count = rng.random_range(1..=3);
        let mut names = BTreeSet::new();
        while names.len() < frame_count {
            names.insert(registry.names()[rng.random_range(0..registry.names().len())].clone());
        }
        let frames = FrameAssignment::new(&id, names, &registry).unwrap();
        let mention_count = rng.random_range(0..=3);
        let mentions = (0..mention_count)
            .map(|_| {
                EntityMention::new(
                    &id,
                    surfaces[rng.random_range(0..surfaces.len())],
                    EntityCategory::parse("ORG"),
                )
                .unwrap()
            })
            .collect();
        let positive = rng.random_range(0.05..1.0);
        let negative = rng.random_range(0.05..1.0);
        let neutral = rng.random_range(0.05..1.0);
        let total = positive + negative + neutral;
        let sentiment =
            SentimentDistribution::new(positive / total, negative / total, neutral / total)
                .unwrap();
        corpus.push(SynthHeadline {
            record: HeadlineRecord {
                id,
                topic: topic.to_string(),
                stance,
                language: english(),
                model_id: "synth".to_string(),
                text: format!("headline {index}"),
                generation_prompt_id: "synth".to_string(),
            },
            frames,
            mentions,
            sentiment,
        });
    }
    corpus
}

fn oracle_label(distribution: &SentimentDistribution) -> SentimentLabel {
    let (p, n, u) = (
        distribution.positive(),
        distribution.negative(),
        distribution.neutral(),
    );
    if u >= p && u >= n {
        SentimentLabel::Neutral
    } else if p >= n {
        SentimentLabel::Positive
    } else {
        SentimentLabel::Negative
    }
}

#[test]
fn c4_framing_metrics_match_brute_force_tallies() {
    let start = Instant::now();
    let registry = FrameRegistry::boydstun();
    let corpus = synth_corpus(41, 200);

    let mut groups: BTreeMap<(String, Stance), Vec<&SynthHeadline>> = BTreeMap::new();
    for headline in &corpus {
        groups
            .entry((headline.record.topic.clone(), headline.record.stance))
            .or_default()
            .push(headline);
    }

    let mut checked_groups = 0usize;
    let mut problems = Vec::new();
    for ((topic, stance), members) in &groups {
        let label = format!("{topic}/{stance:?}");

        let assignments: Vec<FrameAssignment> =
            members.iter().map(|m| m.frames.clone()).collect();
        let ratios = frame_ratio(&assignments, &registry).unwrap();
        for name in registry.names() {
            let count = members
                .iter()
                .filter(|m| m.frames.frames.contains(name))
                .count();
            let expected = count as f64 / members.len() as f64;
            if ratios.ratio_by_frame[name] != expected {
                problems.push(format!("{label}: frame ratio {name}"));
            }
        }

        let mentions: Vec<EntityMention> = members
            .iter()
            .flat_map(|m| m.mentions.iter().cloned())
            .collect();
        if !mentions.is_empty() {
            let shares = entity_prominence(&mentions).unwrap();
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for mention in &mentions {
                *counts.entry(mention.entity_key.as_str()).or_insert(0) += 1;
            }
            let mut expected: Vec<(&str, usize)> = counts.into_iter().collect();
            expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let matches = shares.len() == expected.len()
                && shares.iter().zip(&expected).all(|(share, (key, count))| {
                    share.entity_key == *key
                        && share.mentions == *count
                        && share.prominence == *count as f64 / mentions.len() as f64
                });
            if !matches {
                problems.push(format!("{label}: entity prominence"));
            }
        }

        let labels: Vec<SentimentLabel> =
            members.iter().map(|m| sentiment_bias(&m.sentiment)).collect();
        let oracle_labels: Vec<SentimentLabel> =
            members.iter().map(|m| oracle_label(&m.sentiment)).collect();
        if labels != oracle_labels {
            problems.push(format!("{label}: sentiment labels"));
        }
        let rate = lexical_polarity_rate(&labels).unwrap();
        let positive = oracle_labels
            .iter()
            .filter(|l| **l == SentimentLabel::Positive)
            .count() as f64;
        let negative = oracle_labels
            .iter()
            .filter(|l| **l == SentimentLabel::Negative)
            .count() as f64;
        if rate != (positive - negative) / members.len() as f64 {
            problems.push(format!("{label}: polarity rate"));
        }

        let polarities: Vec<f64> = members.iter().map(|m| m.sentiment.polarity()).collect();
        let spread = polarization_score(&polarities).unwrap();
        let n = polarities.len() as f64;
        let mean = polarities.iter().sum::<f64>() / n;
        let mean_square = polarities.iter().map(|v| v * v).sum::<f64>() / n;
        let oracle_spread = (mean_square - mean * mean).max(0.0).sqrt();
        if (spread - oracle_spread).abs() >= DERIVED_TOLERANCE {
            problems.push(format!("{label}: polarization"));
        }

        checked_groups += 1;
    }

    let elapsed = start.elapsed();
    let passed = problems.is_empty() && checked_groups == 4 && elapsed < Duration::from_secs(5);
    verdict_line(
        "C4",
        passed,
        format!(
            "200 headlines, {checked_groups} groups in {elapsed:?}{}",
            if problems.is_empty() {
                String::new()
            } else {
                format!(", mismatches: {}", problems.join("; "))
            }
        ),
    );
}

fn fleiss_oracle(rows: &[Vec<u32>]) -> f64 {
    let items = rows.len() as f64;
    let raters: u32 = rows[0].iter().sum();
    let n = raters as f64;
    let categories = rows[0].len();
    let mut observed = 0.0;
    for row in rows {
        let agreeing_pairs: u32 = row.iter().map(|count| count * count.saturating_sub(1)).sum();
        observed += agreeing_pairs as f64 / (n * (n - 1.0));
    }
    observed /= items;
    let mut expected = 0.0;
    for category in 0..categories {
        let share: u32 = rows.iter().map(|row| row[category]).sum();
        let p = share as f64 / (items * n);
        expected += p * p;
    }
    (observed - expected) / (1.0 - expected)
}

#[test]
fn c5_fleiss_kappa_fixtures_and_oracle() {
    let mut problems = Vec::new();

    let mut unanimous = Vec::new();
    for index in 0..62 {
        if index < 31 {
            unanimous.push(vec![3u32, 0, 0]);
        } else {
            unanimous.push(vec![0u32, 3, 0]);
        }
    }
    let kappa = fleiss_kappa(&AnnotationMatrix::new(unanimous).unwrap()).unwrap();
    if kappa != 1.0 {
        problems.push(format!("unanimous kappa {kappa} != 1"));
    }

    let mut near = Vec::new();
    for index in 0..62 {
        if index < 31 {
            near.push(vec![3u32, 0, 0]);
        } else if index < 61 {
            near.push(vec![0u32, 3, 0]);
        } else {
            near.push(vec![2u32, 1, 0]);
        }
    }
    let near_kappa = fleiss_kappa(&AnnotationMatrix::new(near).unwrap()).unwrap();
    if near_kappa < 0.81 {
        problems.push(format!("single-disagreement kappa {near_kappa} < 0.81"));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let mut random_rows = Vec::new();
    for _ in 0..40 {
        let mut row = vec![0u32; 4];
        for _ in 0..6 {
            row[rng.random_range(0..4)] += 1;
        }
        random_rows.push(row);
    }
    let library = fleiss_kappa(&AnnotationMatrix::new(random_rows.clone()).unwrap()).unwrap();
    let oracle = fleiss_oracle(&random_rows);
    if (library - oracle).abs() >= DERIVED_TOLERANCE {
        problems.push(format!("random matrix {library} vs oracle {oracle}"));
    }

    verdict_line(
        "C5",
        problems.is_empty(),
        if problems.is_empty() {
            format!("unanimous 1.0, near-unanimous {near_kappa:.5}, oracle delta < 1e-9")
        } else {
            problems.join("; ")
        },
    );
}

#[test]
fn c6_bootstrap_is_deterministic_and_calibrated() {
    let start = Instant::now();
    let mut problems = Vec::new();

    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let fixed: Vec<StanceScore> = (0..62)
        .map(|_| StanceScore::new(rng.random_range(-10.0..10.0)).unwrap())
        .collect();
    let first = bootstrap_stance(&fixed, 1000, 99, 0.95).unwrap();
    let second = bootstrap_stance(&fixed, 1000, 99, 0.95).unwrap();
    let identical = first.mean.to_bits() == second.mean.to_bits()
        && first.error.to_bits() == second.error.to_bits()
        && first.ci_low.to_bits() == second.ci_low.to_bits()
        && first.ci_high.to_bits() == second.ci_high.to_bits();
    if !identical {
        problems.push("same seed produced different intervals".to_string());
    }

    let trials = 500u64;
    let mut covered = 0usize;
    for trial in 0..trials {
        let mut draw = ChaCha12Rng::seed_from_u64(7000 + trial);
        let sample: Vec<StanceScore> = (0..62)
            .map(|_| StanceScore::new(draw.random_range(-10.0..10.0)).unwrap())
            .collect();
        let boot = bootstrap_stance(&sample, 1000, trial, 0.95).unwrap();
        if boot.ci_low <= 0.0 && 0.0 <= boot.ci_high {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    if !(COVERAGE_RANGE.0..=COVERAGE_RANGE.1).contains(&coverage) {
        problems.push(format!(
            "coverage {coverage} outside [{}, {}]",
            COVERAGE_RANGE.0, COVERAGE_RANGE.1
        ));
    }

    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        problems.push(format!("took {elapsed:?}"));
    }
    verdict_line(
        "C6",
        problems.is_empty(),
        format!("coverage {coverage:.3} over 500 trials in {elapsed:?}"),
    );
}

#[test]
fn c7_prompt_sensitivity_coverage_and_symmetry() {
    let variants = ["v1", "v2", "v3", "v4", "v5"];
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    let mut cells: BTreeMap<(u32, String), VariantStance> = BTreeMap::new();
    for item in 1..=62u32 {
        for variant in variants {
            if item >= 61 && variant == "v5" {
                continue;
            }
            let score = StanceScore::new(rng.random_range(-10.0..10.0)).unwrap();
            let ordinal = discretize(score, 2.5).unwrap();
            cells.insert((item, variant.to_string()), VariantStance { score, ordinal });
        }
    }
    let report = prompt_sensitivity(&cells).unwrap();

    let mut problems = Vec::new();
    if report.valid_items != 60 || report.total_items != 62 {
        problems.push(format!(
            "coverage {}/{} (want 60/62)",
            report.valid_items, report.total_items
        ));
    }
    if report.pairwise.len() != 10 {
        problems.push(format!("{} pairs (want 10)", report.pairwise.len()));
    }
    for a in variants {
        for b in variants {
            if a == b {
                continue;
            }
            if report.kappa(a, b) != report.kappa(b, a)
                || report.raw_agreement(a, b) != report.raw_agreement(b, a)
            {
                problems.push(format!("{a}~{b} asymmetric"));
            }
        }
    }

    let mut identical: BTreeMap<(u32, String), VariantStance> = BTreeMap::new();
    let mut fixed = ChaCha12Rng::seed_from_u64(23);
    for item in 1..=62u32 {
        let score = StanceScore::new(fixed.random_range(-10.0..10.0)).unwrap();
        let ordinal = discretize(score, 2.5).unwrap();
        for variant in variants {
            identical.insert((item, variant.to_string()), VariantStance { score, ordinal });
        }
    }
    let flat = prompt_sensitivity(&identical).unwrap();
    if flat.mean_variance != 0.0 || flat.per_item_variance.values().any(|v| *v != 0.0) {
        problems.push("identical variants produced nonzero variance".to_string());
    }

    verdict_line(
        "C7",
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "60/62 valid, 10 symmetric pairs, flat variance {}",
                flat.mean_variance
            )
        } else {
            problems.join("; ")
        },
    );
}

fn mock_run_config(server: &MockServer, cache_dir: &Path, output_dir: &Path) -> RunConfig {
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
    endpoints[1].model = Some("mock-nli".to_string());
    RunConfig {
        output_dir: output_dir.to_path_buf(),
        pct: Some(PctConfig {
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
        }),
        framing: Some(FramingConfig {
            topics_file: workspace_file("data/topics.json"),
            frames_file: Some(workspace_file("data/frames.json")),
            languages: vec!["en".to_string()],
            endpoints: vec!["chat".to_string()],
            ner_endpoint: "ner".to_string(),
            sentiment_endpoint: "sentiment".to_string(),
            frame_endpoint: "chat".to_string(),
            frame_prompt_template: None,
            headline_count: 4,
            top_k_entities: 5,
            temperature: 0.5,
            top_p: 1.0,
            max_tokens: 400,
            corpus_file: None,
        }),
        stats: StatsConfig {
            bootstrap_resamples: 500,
            bootstrap_seed: 1,
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

#[test]
fn c8_shared_cache_replays_byte_identical_with_zero_network() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out_first = tempfile::tempdir().unwrap();
    let out_second = tempfile::tempdir().unwrap();

    let config_first = mock_run_config(&server, cache_dir.path(), out_first.path());
    let pct_first = run_pct_audit(&config_first, "repro", false).unwrap();
    let framing_first = run_framing_audit(&config_first, "repro", false).unwrap();
    let requests_after_first = server.total_requests();

    let config_second = mock_run_config(&server, cache_dir.path(), out_second.path());
    let pct_second = run_pct_audit(&config_second, "repro", false).unwrap();
    let framing_second = run_framing_audit(&config_second, "repro", false).unwrap();
    let requests_after_second = server.total_requests();

    let read = |dir: &Path, name: &str| {
        std::fs::read(dir.join("repro/reports").join(name)).unwrap()
    };
    let pct_identical =
        read(out_first.path(), "pct_metrics.json") == read(out_second.path(), "pct_metrics.json");
    let framing_identical = read(out_first.path(), "framing_metrics.json")
        == read(out_second.path(), "framing_metrics.json");

    let mut problems = Vec::new();
    if !(pct_first.is_complete()
        && framing_first.is_complete()
        && pct_second.is_complete()
        && framing_second.is_complete())
    {
        problems.push("a run reported failures".to_string());
    }
    if requests_after_second != requests_after_first {
        problems.push(format!(
            "second run hit the network {} times",
            requests_after_second - requests_after_first
        ));
    }
    if !pct_identical || !framing_identical {
        problems.push("replayed reports differ".to_string());
    }

    verdict_line(
        "C8",
        problems.is_empty(),
        if problems.is_empty() {
            format!("{requests_after_first} requests once, replay from cache alone")
        } else {
            problems.join("; ")
        },
    );
}

fn key_set(value: &serde_json::Value) -> BTreeSet<String> {
    value
        .as_object()
        .map(|map| map.keys().cloned().collect())
        .unwrap_or_default()
}

fn expect_keys(
    problems: &mut Vec<String>,
    context: &str,
    value: &serde_json::Value,
    expected: &[&str],
) {
    let found = key_set(value);
    let wanted: BTreeSet<String> = expected.iter().map(|k| k.to_string()).collect();
    if found != wanted {
        let missing: Vec<_> = wanted.difference(&found).cloned().collect();
        let extra: Vec<_> = found.difference(&wanted).cloned().collect();
        problems.push(format!(
            "{context}: missing {missing:?}, unexpected {extra:?}"
        ));
    }
}

#[test]
fn c9_reports_reproduce_every_table_schema() {
    let server = MockServer::start(MockScenario::default());
    let cache_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let config = mock_run_config(&server, cache_dir.path(), out.path());

    run_pct_audit(&config, "schema", false).unwrap();
    run_prompt_sensitivity(&config, "schema", false).unwrap();
    run_framing_audit(&config, "schema", false).unwrap();
    run_agreement(
        &workspace_file("data/agreement_matrix.json"),
        Some((&config, "schema")),
    )
    .unwrap();

    let load = |name: &str| -> serde_json::Value {
        let path = out.path().join("schema/reports").join(name);
        serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
    };
    let mut problems = Vec::new();

    let pct = load("pct_metrics.json");
    expect_keys(&mut problems, "pct file", &pct, &["run_id", "rows"]);
    let pct_rows = pct["rows"].as_array().cloned().unwrap_or_default();
    if pct_rows.len() != 2 {
        problems.push(format!("pct rows {} (want 2 units)", pct_rows.len()));
    }
    for row in &pct_rows {
        expect_keys(
            &mut problems,
            "pct row",
            row,
            &[
                "unit_id",
                "endpoint",
                "model_id",
                "language",
                "variant",
                "statements_total",
                "statements_scored",
                "economic",
                "social",
                "euclidean",
                "manhattan",
                "chebyshev",
                "verdict",
                "avg_confidence",
                "min_confidence",
                "max_confidence",
                "low_confidence_count",
                "low_confidence_fraction",
                "mean_score",
                "bootstrap_error",
                "ci_low",
                "ci_high",
                "weighted_mean",
                "weighted_error",
            ],
        );
        let verdict = row["verdict"].as_str().unwrap_or_default();
        if verdict != "neutral" && verdict != "biased" {
            problems.push(format!("pct verdict {verdict:?}"));
        }
    }

    let sensitivity = load("sensitivity.json");
    expect_keys(
        &mut problems,
        "sensitivity file",
        &sensitivity,
        &["run_id", "entries"],
    );
    for entry in sensitivity["entries"].as_array().cloned().unwrap_or_default() {
        expect_keys(
            &mut problems,
            "sensitivity entry",
            &entry,
            &["endpoint", "model_id", "language", "report"],
        );
        expect_keys(
            &mut problems,
            "sensitivity report",
            &entry["report"],
            &[
                "per_item_variance",
                "mean_variance",
                "std_variance",
                "valid_items",
                "total_items",
                "variant_ids",
                "pairwise",
            ],
        );
        for pair in entry["report"]["pairwise"].as_array().cloned().unwrap_or_default() {
            expect_keys(
                &mut problems,
                "sensitivity pair",
                &pair,
                &["a", "b", "kappa", "raw_agreement", "degenerate"],
            );
        }
    }

    let framing = load("framing_metrics.json");
    expect_keys(&mut problems, "framing file", &framing, &["run_id", "rows"]);
    let framing_rows = framing["rows"].as_array().cloned().unwrap_or_default();
    if framing_rows.len() != 22 {
        problems.push(format!("framing rows {} (want 22 groups)", framing_rows.len()));
    }
    for row in &framing_rows {
        expect_keys(
            &mut problems,
            "framing row",
            row,
            &[
                "model_id",
                "language",
                "topic",
                "stance",
                "headline_count",
                "frames_classified",
                "frame_ratios",
                "top_entities",
                "sentiment_coverage",
                "lexical_polarity_rate",
                "polarization",
            ],
        );
        for entity in row["top_entities"].as_array().cloned().unwrap_or_default() {
            expect_keys(
                &mut problems,
                "entity row",
                &entity,
                &["entity_key", "mentions", "prominence", "sentiment"],
            );
        }
    }

    let agreement = load("agreement.json");
    expect_keys(&mut problems, "agreement file", &agreement, &["run_id", "report"]);
    expect_keys(
        &mut problems,
        "agreement report",
        &agreement["report"],
        &["items", "categories", "raters", "kappa", "band", "degenerate"],
    );

    let mut rendered = Vec::new();
    render_report(&config.output_dir, "schema", ReportFormat::Tabular, &mut rendered).unwrap();
    let text = String::from_utf8(rendered).unwrap();
    for section in [
        "Opinion compass",
        "Opinion uncertainty",
        "Prompt sensitivity",
        "Variant agreement",
        "Headline framing",
        "Annotator agreement",
    ] {
        if !text.contains(section) {
            problems.push(format!("rendered report lacks section {section:?}"));
        }
    }

    verdict_line(
        "C9",
        problems.is_empty(),
        if problems.is_empty() {
            "all four report files and six rendered tables match the expected schema".to_string()
        } else {
            problems.join("; ")
        },
    );
}
