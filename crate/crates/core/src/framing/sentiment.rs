use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FramingError;

/// Normalized sentiment probabilities. Components lie in `[0, 1]` and sum to
/// one within `1e-9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct SentimentDistribution {
    positive: f64,
    negative: f64,
    neutral: f64,
}

#[derive(Deserialize)]
struct RawDistribution {
    positive: f64,
    negative: f64,
    neutral: f64,
}

impl TryFrom<RawDistribution> for SentimentDistribution {
    type Error = FramingError;

    fn try_from(raw: RawDistribution) -> Result<Self, Self::Error> {
        SentimentDistribution::new(raw.positive, raw.negative, raw.neutral)
    }
}

impl SentimentDistribution {
    pub fn new(positive: f64, negative: f64, neutral: f64) -> Result<Self, FramingError> {
        for (name, value) in [
            ("positive", positive),
            ("negative", negative),
            ("neutral", neutral),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(FramingError::InvalidComponent { name, value });
            }
        }
        let sum = positive + negative + neutral;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FramingError::NotNormalized { sum });
        }
        Ok(SentimentDistribution {
            positive,
            negative,
            neutral,
        })
    }

    /// Normalizes raw nonnegative scores into a distribution.
    pub fn from_raw(mass: SentimentMass) -> Result<Self, FramingError> {
        mass.validate("sentiment scores")?;
        let total = mass.positive + mass.negative + mass.neutral;
        if total <= 0.0 {
            return Err(FramingError::ZeroMass);
        }
        SentimentDistribution::new(
            mass.positive / total,
            mass.negative / total,
            mass.neutral / total,
        )
    }

    pub fn positive(&self) -> f64 {
        self.positive
    }

    pub fn negative(&self) -> f64 {
        self.negative
    }

    pub fn neutral(&self) -> f64 {
        self.neutral
    }

    /// Signed polarity of this distribution: positive minus negative mass,
    /// in `[-1, 1]`.
    pub fn polarity(&self) -> f64 {
        self.positive - self.negative
    }
}

/// Raw nonnegative sentiment scores before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SentimentMass {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

impl SentimentMass {
    fn validate(&self, context: &str) -> Result<(), FramingError> {
        for value in [self.positive, self.negative, self.neutral] {
            if !value.is_finite() || value < 0.0 {
                return Err(FramingError::NegativeMass {
                    context: context.to_string(),
                    value,
                });
            }
        }
        Ok(())
    }

    fn add(&mut self, other: &SentimentMass) {
        self.positive += other.positive;
        self.negative += other.negative;
        self.neutral += other.neutral;
    }
}

/// Dominant sentiment class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
}

impl SentimentLabel {
    pub fn label(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
        }
    }
}

impl std::fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Picks the dominant sentiment of a distribution.
///
/// Exact ties resolve conservatively: neutral beats positive beats negative,
/// so a split between the polar classes never invents a leaning.
pub fn sentiment_bias(distribution: &SentimentDistribution) -> SentimentLabel {
    let mut best = SentimentLabel::Neutral;
    let mut best_value = distribution.neutral();
    if distribution.positive() > best_value {
        best = SentimentLabel::Positive;
        best_value = distribution.positive();
    }
    if distribution.negative() > best_value {
        best = SentimentLabel::Negative;
    }
    best
}

/// Aggregates per-mention sentiment scores into one distribution per entity.
///
/// Scores are summed componentwise over each entity's mentions, then
/// normalized by the entity's total mass. Entities whose mentions carry zero
/// total mass are rejected rather than silently dropped. Output is sorted by
/// entity key.
pub fn entity_sentiment_distribution(
    per_mention: &[(String, SentimentMass)],
) -> Result<Vec<(String, SentimentDistribution)>, FramingError> {
    if per_mention.is_empty() {
        return Err(FramingError::EmptyGroup);
    }
    let mut sums: BTreeMap<&str, SentimentMass> = BTreeMap::new();
    for (key, mass) in per_mention {
        mass.validate(&format!("entity {key}"))?;
        sums.entry(key.as_str()).or_default().add(mass);
    }
    let mut result = Vec::with_capacity(sums.len());
    for (key, mass) in sums {
        let total = mass.positive + mass.negative + mass.neutral;
        if total <= 0.0 {
            return Err(FramingError::EmptyEntity {
                key: key.to_string(),
            });
        }
        let distribution = SentimentDistribution::new(
            mass.positive / total,
            mass.negative / total,
            mass.neutral / total,
        )?;
        result.push((key.to_string(), distribution));
    }
    Ok(result)
}

/// Lexical polarity rate: positive minus negative headline counts over the
/// group size, in `[-1, 1]`.
pub fn lexical_polarity_rate(labels: &[SentimentLabel]) -> Result<f64, FramingError> {
    if labels.is_empty() {
        return Err(FramingError::EmptyGroup);
    }
    let positive = labels
        .iter()
        .filter(|l| **l == SentimentLabel::Positive)
        .count() as f64;
    let negative = labels
        .iter()
        .filter(|l| **l == SentimentLabel::Negative)
        .count() as f64;
    Ok((positive - negative) / labels.len() as f64)
}

/// Population standard deviation of per-headline polarities.
///
/// Zero means every headline carries the same polarity; values grow as the
/// group splits toward the extremes.
pub fn polarization_score(polarities: &[f64]) -> Result<f64, FramingError> {
    if polarities.len() < 2 {
        return Err(FramingError::InsufficientData {
            need: 2,
            got: polarities.len(),
        });
    }
    for value in polarities {
        if !value.is_finite() || !(-1.0..=1.0).contains(value) {
            return Err(FramingError::PolarityOutOfRange(*value));
        }
    }
    let n = polarities.len() as f64;
    let mean = polarities.iter().sum::<f64>() / n;
    let variance = polarities.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(variance.sqrt())
}
