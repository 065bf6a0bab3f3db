use std::collections::HashMap;
use std::fs::File;
use std::hash::Hash;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Item-by-category count matrix for a fixed panel of raters.
///
/// Row `i` holds how many raters assigned item `i` to each category, so every
/// row sums to the same rater count.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct AnnotationMatrix {
    counts: Vec<Vec<u32>>,
    raters: u32,
}

impl TryFrom<Vec<Vec<u32>>> for AnnotationMatrix {
    type Error = StatsError;

    fn try_from(counts: Vec<Vec<u32>>) -> Result<Self, Self::Error> {
        AnnotationMatrix::new(counts)
    }
}

impl From<AnnotationMatrix> for Vec<Vec<u32>> {
    fn from(matrix: AnnotationMatrix) -> Self {
        matrix.counts
    }
}

impl AnnotationMatrix {
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self, StatsError> {
        if counts.is_empty() {
            return Err(StatsError::MatrixShape("has no items".to_string()));
        }
        let categories = counts[0].len();
        if categories == 0 {
            return Err(StatsError::MatrixShape("has no categories".to_string()));
        }
        let raters: u32 = counts[0].iter().sum();
        if raters == 0 {
            return Err(StatsError::MatrixShape(
                "rows must sum to a positive rater count".to_string(),
            ));
        }
        for (index, row) in counts.iter().enumerate() {
            if row.len() != categories {
                return Err(StatsError::MatrixShape(format!(
                    "row {index} has {} categories, expected {categories}",
                    row.len()
                )));
            }
            let sum: u32 = row.iter().sum();
            if sum != raters {
                return Err(StatsError::MatrixShape(format!(
                    "row {index} sums to {sum}, expected {raters}"
                )));
            }
        }
        Ok(AnnotationMatrix { counts, raters })
    }

    /// Reads a matrix from a JSON file holding a 2D array of counts.
    pub fn load(path: &Path) -> Result<Self, StatsError> {
        let file = File::open(path).map_err(|e| StatsError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let counts: Vec<Vec<u32>> =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| StatsError::Malformed {
                origin: path.display().to_string(),
                detail: e.to_string(),
            })?;
        Self::new(counts)
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    pub fn n_categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }
}

/// Fleiss' kappa for a fixed-size rater panel.
///
/// Returns [`StatsError::DegenerateChance`] when every rating lands in a
/// single category, where chance agreement is 1 and the ratio is undefined.
pub fn fleiss_kappa(matrix: &AnnotationMatrix) -> Result<f64, StatsError> {
    let n = f64::from(matrix.raters());
    if matrix.raters() < 2 {
        return Err(StatsError::TooFewRaters(matrix.raters()));
    }
    let items = matrix.n_items() as f64;
    let mut category_mass = vec![0.0f64; matrix.n_categories()];
    let mut observed_sum = 0.0f64;
    for row in matrix.counts() {
        let mut squares = 0.0f64;
        for (j, count) in row.iter().enumerate() {
            let c = f64::from(*count);
            category_mass[j] += c;
            squares += c * c;
        }
        observed_sum += (squares - n) / (n * (n - 1.0));
    }
    let observed = observed_sum / items;
    let chance: f64 = category_mass
        .iter()
        .map(|mass| {
            let p = mass / (items * n);
            p * p
        })
        .sum();
    if 1.0 - chance == 0.0 {
        return Err(StatsError::DegenerateChance);
    }
    Ok((observed - chance) / (1.0 - chance))
}

/// Cohen's kappa between two raters over the same items.
///
/// Returns [`StatsError::DegenerateChance`] when chance agreement is 1,
/// which happens exactly when both raters use a single shared category.
pub fn cohen_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    // Marginals are accumulated per category in first-appearance order, so
    // the chance sum is evaluated in a reproducible order and equal inputs
    // give bit-identical results.
    fn slot<'x, T: Eq + Hash>(
        index: &mut HashMap<&'x T, usize>,
        counts: &mut Vec<(usize, usize)>,
        label: &'x T,
    ) -> usize {
        *index.entry(label).or_insert_with(|| {
            counts.push((0, 0));
            counts.len() - 1
        })
    }

    let n = a.len() as f64;
    let mut matches = 0usize;
    let mut index: HashMap<&T, usize> = HashMap::new();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for (left, right) in a.iter().zip(b) {
        if left == right {
            matches += 1;
        }
        let slot_a = slot(&mut index, &mut counts, left);
        counts[slot_a].0 += 1;
        let slot_b = slot(&mut index, &mut counts, right);
        counts[slot_b].1 += 1;
    }
    let observed = matches as f64 / n;
    let chance: f64 = counts
        .iter()
        .map(|(count_a, count_b)| (*count_a as f64 / n) * (*count_b as f64 / n))
        .sum();
    if 1.0 - chance == 0.0 {
        return Err(StatsError::DegenerateChance);
    }
    Ok((observed - chance) / (1.0 - chance))
}

/// Places a kappa value on the conventional agreement scale.
pub fn kappa_band(kappa: f64) -> &'static str {
    if kappa < 0.0 {
        "Poor agreement"
    } else if kappa <= 0.20 {
        "Slight agreement"
    } else if kappa <= 0.40 {
        "Fair agreement"
    } else if kappa <= 0.60 {
        "Moderate agreement"
    } else if kappa <= 0.80 {
        "Substantial agreement"
    } else {
        "Almost perfect agreement"
    }
}
