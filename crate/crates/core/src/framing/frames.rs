use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FramingError;

/// Number of frames in the policy frames codebook.
pub const FRAME_COUNT: usize = 15;

const DEFAULT_FRAMES: [&str; FRAME_COUNT] = [
    "Economic",
    "Morality",
    "Fairness and Equality",
    "Health and Safety",
    "Cultural Identity",
    "Capacity and Resources",
    "Legality/Constitutionality",
    "Policy Prescription",
    "Crime and Punishment",
    "Security and Defense",
    "Quality of Life",
    "Political",
    "Public Opinion",
    "External Regulation",
    "Other",
];

/// The fixed 15-entry frame codebook.
///
/// The default registry uses the Boydstun policy frame names. Deployments may
/// rename entries through a config file, but the registry always holds
/// exactly fifteen unique frames.
#[derive(Debug, Clone)]
pub struct FrameRegistry {
    names: Vec<String>,
}

impl FrameRegistry {
    /// The built-in Boydstun policy frame names.
    pub fn boydstun() -> Self {
        FrameRegistry {
            names: DEFAULT_FRAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn from_names(names: Vec<String>) -> Result<Self, FramingError> {
        if names.len() != FRAME_COUNT {
            return Err(FramingError::RegistrySize(names.len()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.trim().is_empty() {
                return Err(FramingError::UnknownFrame(name.clone()));
            }
            if !seen.insert(name.trim().to_lowercase()) {
                return Err(FramingError::DuplicateFrame(name.clone()));
            }
        }
        Ok(FrameRegistry { names })
    }

    /// Reads a registry from a JSON file holding an array of 15 names.
    pub fn load(path: &Path) -> Result<Self, FramingError> {
        let file = File::open(path).map_err(|e| FramingError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let names: Vec<String> =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| FramingError::Malformed {
                origin: path.display().to_string(),
                detail: e.to_string(),
            })?;
        Self::from_names(names)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Maps a raw frame mention to its canonical registry name, matching
    /// case-insensitively after trimming.
    pub fn resolve(&self, raw: &str) -> Result<&str, FramingError> {
        let needle = raw.trim().to_lowercase();
        self.names
            .iter()
            .find(|name| name.to_lowercase() == needle)
            .map(String::as_str)
            .ok_or_else(|| FramingError::UnknownFrame(raw.to_string()))
    }
}

/// The set of frames one classified headline carries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameAssignment {
    pub headline_id: String,
    pub frames: BTreeSet<String>,
}

impl FrameAssignment {
    /// Builds an assignment, resolving every frame against the registry.
    pub fn new(
        headline_id: &str,
        frames: impl IntoIterator<Item = String>,
        registry: &FrameRegistry,
    ) -> Result<Self, FramingError> {
        let mut resolved = BTreeSet::new();
        for frame in frames {
            resolved.insert(registry.resolve(&frame)?.to_string());
        }
        if resolved.is_empty() {
            return Err(FramingError::NoFrames {
                headline_id: headline_id.to_string(),
            });
        }
        Ok(FrameAssignment {
            headline_id: headline_id.to_string(),
            frames: resolved,
        })
    }
}

/// Per-frame share of headlines in one group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRatios {
    pub headline_count: usize,
    pub ratio_by_frame: BTreeMap<String, f64>,
}

/// Computes the share of headlines carrying each frame.
///
/// The denominator is the headline count, so a frame appearing in every
/// headline has ratio 1 and the ratios of multi-frame headlines may sum past
/// one across frames. Every registry frame appears in the output, zero or
/// not.
pub fn frame_ratio(
    assignments: &[FrameAssignment],
    registry: &FrameRegistry,
) -> Result<FrameRatios, FramingError> {
    if assignments.is_empty() {
        return Err(FramingError::EmptyGroup);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for assignment in assignments {
        if assignment.frames.is_empty() {
            return Err(FramingError::NoFrames {
                headline_id: assignment.headline_id.clone(),
            });
        }
        for frame in &assignment.frames {
            registry.resolve(frame)?;
            *counts.entry(frame.as_str()).or_insert(0) += 1;
        }
    }
    let total = assignments.len();
    let ratio_by_frame = registry
        .names()
        .iter()
        .map(|name| {
            let count = counts.get(name.as_str()).copied().unwrap_or(0);
            (name.clone(), count as f64 / total as f64)
        })
        .collect();
    Ok(FrameRatios {
        headline_count: total,
        ratio_by_frame,
    })
}
