use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{cohen_kappa, StatsError};
use crate::stance::{OrdinalStance, StanceScore};

/// One prompt variant's verdict on one statement.
#[derive(Debug, Clone, Copy)]
pub struct VariantStance {
    pub score: StanceScore,
    pub ordinal: OrdinalStance,
}

/// Agreement between one pair of prompt variants. Pairs are stored once with
/// `a < b`; lookups through the report are symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub a: String,
    pub b: String,
    pub kappa: f64,
    pub raw_agreement: f64,
    /// True when chance agreement was 1 because both variants answered every
    /// item identically with a single label; kappa is reported as 1 there.
    pub degenerate: bool,
}

/// Stability summary of stance scores across prompt variants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptSensitivityReport {
    /// Population variance of normalized scores per statement, over the
    /// statements covered by every variant.
    pub per_item_variance: BTreeMap<u32, f64>,
    pub mean_variance: f64,
    pub std_variance: f64,
    /// Statements covered by every variant.
    pub valid_items: usize,
    /// Statements covered by at least one variant.
    pub total_items: usize,
    pub variant_ids: Vec<String>,
    pub pairwise: Vec<PairAgreement>,
}

impl PromptSensitivityReport {
    /// Pairwise agreement looked up symmetrically.
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairAgreement> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.pairwise.iter().find(|p| p.a == lo && p.b == hi)
    }

    pub fn kappa(&self, a: &str, b: &str) -> Option<f64> {
        self.pair(a, b).map(|p| p.kappa)
    }

    pub fn raw_agreement(&self, a: &str, b: &str) -> Option<f64> {
        self.pair(a, b).map(|p| p.raw_agreement)
    }
}

/// Measures how much stance verdicts move when the prompt wording changes.
///
/// `cells` maps `(statement id, variant id)` to that variant's verdict.
/// Statements missing any variant are excluded from every aggregate; the
/// report still counts them through `total_items`. Scores are normalized to
/// `[-1, 1]` before the variance is taken.
pub fn prompt_sensitivity(
    cells: &BTreeMap<(u32, String), VariantStance>,
) -> Result<PromptSensitivityReport, StatsError> {
    let variant_ids: Vec<String> = cells
        .keys()
        .map(|(_, variant)| variant.clone())
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();
    if variant_ids.len() < 2 {
        return Err(StatsError::TooFewVariants {
            found: variant_ids.len(),
        });
    }
    let all_items: BTreeSet<u32> = cells.keys().map(|(id, _)| *id).collect();
    let valid_ids: Vec<u32> = all_items
        .iter()
        .copied()
        .filter(|id| {
            variant_ids
                .iter()
                .all(|variant| cells.contains_key(&(*id, variant.clone())))
        })
        .collect();
    if valid_ids.is_empty() {
        return Err(StatsError::EmptyInput);
    }

    let mut per_item_variance = BTreeMap::new();
    for id in &valid_ids {
        let normalized: Vec<f64> = variant_ids
            .iter()
            .map(|variant| cells[&(*id, variant.clone())].score.value() / 10.0)
            .collect();
        per_item_variance.insert(*id, population_variance(&normalized));
    }
    let variances: Vec<f64> = per_item_variance.values().copied().collect();
    let mean_variance = variances.iter().sum::<f64>() / variances.len() as f64;
    let std_variance = population_variance(&variances).sqrt();

    let mut pairwise = Vec::new();
    for (i, a) in variant_ids.iter().enumerate() {
        for b in variant_ids.iter().skip(i + 1) {
            let labels_a: Vec<u8> = valid_ids
                .iter()
                .map(|id| cells[&(*id, a.clone())].ordinal.label())
                .collect();
            let labels_b: Vec<u8> = valid_ids
                .iter()
                .map(|id| cells[&(*id, b.clone())].ordinal.label())
                .collect();
            let matches = labels_a
                .iter()
                .zip(&labels_b)
                .filter(|(x, y)| x == y)
                .count();
            let raw_agreement = matches as f64 / valid_ids.len() as f64;
            let (kappa, degenerate) = match cohen_kappa(&labels_a, &labels_b) {
                Ok(kappa) => (kappa, false),
                // Chance agreement 1 forces observed agreement 1: both
                // variants answered identically, so report perfect accord.
                Err(StatsError::DegenerateChance) => (1.0, true),
                Err(other) => return Err(other),
            };
            pairwise.push(PairAgreement {
                a: a.clone(),
                b: b.clone(),
                kappa,
                raw_agreement,
                degenerate,
            });
        }
    }

    Ok(PromptSensitivityReport {
        per_item_variance,
        mean_variance,
        std_variance,
        valid_items: valid_ids.len(),
        total_items: all_items.len(),
        variant_ids,
        pairwise,
    })
}

fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}
