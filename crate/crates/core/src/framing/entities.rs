use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FramingError;

/// Coarse entity category reported by the NER endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityCategory {
    Person,
    Organization,
    Location,
    Misc,
}

impl EntityCategory {
    /// Maps common NER tag spellings onto the four categories; anything
    /// unrecognized lands in `Misc`.
    pub fn parse(raw: &str) -> EntityCategory {
        match raw.trim().to_lowercase().as_str() {
            "per" | "person" | "people" => EntityCategory::Person,
            "org" | "organization" | "organisation" => EntityCategory::Organization,
            "loc" | "location" | "gpe" | "place" => EntityCategory::Location,
            _ => EntityCategory::Misc,
        }
    }
}

/// Collapses surface variants of an entity onto one key: case-folded,
/// stripped of surrounding punctuation, internal whitespace runs collapsed
/// to single spaces.
pub fn canonicalize_entity(surface: &str) -> String {
    let lowered = surface.to_lowercase();
    let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One entity occurrence inside a headline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityMention {
    pub headline_id: String,
    pub surface: String,
    pub entity_key: String,
    pub category: EntityCategory,
}

impl EntityMention {
    /// Builds a mention, deriving the canonical key from the surface form.
    /// Surfaces that canonicalize to nothing, such as bare punctuation, are
    /// rejected.
    pub fn new(
        headline_id: &str,
        surface: &str,
        category: EntityCategory,
    ) -> Result<Self, FramingError> {
        let entity_key = canonicalize_entity(surface);
        if entity_key.is_empty() {
            return Err(FramingError::EmptySurface(surface.to_string()));
        }
        Ok(EntityMention {
            headline_id: headline_id.to_string(),
            surface: surface.to_string(),
            entity_key,
            category,
        })
    }
}

/// One entity's share of all mentions in a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityShare {
    pub entity_key: String,
    pub mentions: usize,
    pub prominence: f64,
}

/// Computes each entity's share of the group's mentions.
///
/// Shares sum to one and the output is sorted by descending prominence with
/// ties broken by ascending entity key, so equal inputs always render in the
/// same order.
pub fn entity_prominence(mentions: &[EntityMention]) -> Result<Vec<EntityShare>, FramingError> {
    if mentions.is_empty() {
        return Err(FramingError::EmptyGroup);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for mention in mentions {
        *counts.entry(mention.entity_key.as_str()).or_insert(0) += 1;
    }
    let total = mentions.len() as f64;
    let mut shares: Vec<EntityShare> = counts
        .into_iter()
        .map(|(key, count)| EntityShare {
            entity_key: key.to_string(),
            mentions: count,
            prominence: count as f64 / total,
        })
        .collect();
    shares.sort_by(|a, b| {
        b.mentions
            .cmp(&a.mentions)
            .then_with(|| a.entity_key.cmp(&b.entity_key))
    });
    Ok(shares)
}
