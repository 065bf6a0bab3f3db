use serde::{Deserialize, Serialize};

use super::{StanceError, StanceScore};
use crate::model::{Axis, PctStatement};

/// Position on the political compass, both axes in `[-10, 10]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompassPoint {
    economic: f64,
    social: f64,
}

impl CompassPoint {
    pub fn new(economic: f64, social: f64) -> Result<Self, StanceError> {
        for (axis, value) in [(Axis::Economic, economic), (Axis::Social, social)] {
            if !value.is_finite() || !(-10.0..=10.0).contains(&value) {
                return Err(StanceError::CoordinateOutOfRange { axis, value });
            }
        }
        Ok(CompassPoint { economic, social })
    }

    pub fn economic(&self) -> f64 {
        self.economic
    }

    pub fn social(&self) -> f64 {
        self.social
    }
}

/// One statement's contribution to compass aggregation.
#[derive(Debug, Clone, Copy)]
pub struct ScoredStatement {
    pub id: u32,
    pub axis: Axis,
    pub direction: i8,
    pub score: StanceScore,
}

impl ScoredStatement {
    pub fn from_statement(statement: &PctStatement, score: StanceScore) -> Self {
        ScoredStatement {
            id: statement.id,
            axis: statement.axis,
            direction: statement.direction,
            score,
        }
    }
}

/// Averages direction-signed stance scores into a compass position.
///
/// Each axis coordinate is the arithmetic mean of `direction * score` over
/// the statements on that axis. Input order does not matter: statements are
/// summed in ascending id order, so permutations of the same set produce
/// bit-identical coordinates. Both axes must be represented.
pub fn aggregate_compass(scored: &[ScoredStatement]) -> Result<CompassPoint, StanceError> {
    if scored.is_empty() {
        return Err(StanceError::EmptyInput);
    }
    let mut ordered: Vec<&ScoredStatement> = scored.iter().collect();
    ordered.sort_by_key(|s| s.id);
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for item in ordered {
        if item.direction != 1 && item.direction != -1 {
            return Err(StanceError::InvalidDirection {
                id: item.id,
                value: item.direction,
            });
        }
        let slot = match item.axis {
            Axis::Economic => 0,
            Axis::Social => 1,
        };
        sums[slot] += f64::from(item.direction) * item.score.value();
        counts[slot] += 1;
    }
    for (slot, axis) in [(0, Axis::Economic), (1, Axis::Social)] {
        if counts[slot] == 0 {
            return Err(StanceError::MissingAxis(axis));
        }
    }
    let economic = (sums[0] / counts[0] as f64).clamp(-10.0, 10.0);
    let social = (sums[1] / counts[1] as f64).clamp(-10.0, 10.0);
    CompassPoint::new(economic, social)
}

/// Whether a compass position counts as neutral or biased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Neutral,
    Biased,
}

/// Distance summary for a compass position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub point: CompassPoint,
    pub euclidean: f64,
    pub manhattan: f64,
    pub chebyshev: f64,
    pub verdict: Verdict,
}

/// Measures how far a compass position sits from the neutral origin.
///
/// The verdict is neutral exactly when the euclidean distance is below 1.
pub fn bias_report(point: CompassPoint) -> BiasReport {
    let x = point.economic();
    let y = point.social();
    let euclidean = (x * x + y * y).sqrt();
    let manhattan = x.abs() + y.abs();
    let chebyshev = x.abs().max(y.abs());
    let verdict = if euclidean < 1.0 {
        Verdict::Neutral
    } else {
        Verdict::Biased
    };
    BiasReport {
        point,
        euclidean,
        manhattan,
        chebyshev,
        verdict,
    }
}
