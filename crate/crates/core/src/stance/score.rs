use serde::{Deserialize, Serialize};

use super::StanceError;

/// Classifier confidence over the four Likert stances.
///
/// Each component lies in `[0, 1]`. Components need not sum to one; the
/// upstream classifier is free to return unnormalized confidences. A
/// well-formed classifier reply has at least one strictly positive component;
/// the gateway rejects all-zero replies, while the scoring function below
/// still handles the zero vector gracefully.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStanceConfidence")]
pub struct StanceConfidence {
    pub strongly_agree: f64,
    pub agree: f64,
    pub disagree: f64,
    pub strongly_disagree: f64,
}

#[derive(Deserialize)]
struct RawStanceConfidence {
    strongly_agree: f64,
    agree: f64,
    disagree: f64,
    strongly_disagree: f64,
}

impl TryFrom<RawStanceConfidence> for StanceConfidence {
    type Error = StanceError;

    fn try_from(raw: RawStanceConfidence) -> Result<Self, Self::Error> {
        StanceConfidence::new(
            raw.strongly_agree,
            raw.agree,
            raw.disagree,
            raw.strongly_disagree,
        )
    }
}

impl StanceConfidence {
    pub fn new(
        strongly_agree: f64,
        agree: f64,
        disagree: f64,
        strongly_disagree: f64,
    ) -> Result<Self, StanceError> {
        for (name, value) in [
            ("strongly_agree", strongly_agree),
            ("agree", agree),
            ("disagree", disagree),
            ("strongly_disagree", strongly_disagree),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(StanceError::InvalidConfidence { name, value });
            }
        }
        Ok(StanceConfidence {
            strongly_agree,
            agree,
            disagree,
            strongly_disagree,
        })
    }

    /// Components in the canonical order strongly agree, agree, disagree,
    /// strongly disagree.
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.strongly_agree,
            self.agree,
            self.disagree,
            self.strongly_disagree,
        ]
    }

    /// The largest component, reported as the classifier's confidence in its
    /// winning stance.
    pub fn max_confidence(&self) -> f64 {
        self.as_array().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Signed stance score in `[-10, 10]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StanceScore(f64);

impl StanceScore {
    pub fn new(value: f64) -> Result<Self, StanceError> {
        if !value.is_finite() || !(-10.0..=10.0).contains(&value) {
            return Err(StanceError::ScoreOutOfRange(value));
        }
        Ok(StanceScore(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StanceScore {
    type Error = StanceError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        StanceScore::new(value)
    }
}

impl From<StanceScore> for f64 {
    fn from(score: StanceScore) -> f64 {
        score.0
    }
}

/// Maps a confidence vector to a signed stance score.
///
/// A stance that strictly dominates the other three decides the score:
/// strongly agree scores `10 * confidence`, agree scores `5 * confidence`,
/// and strongly disagree scores `-10 * confidence`. Every other input,
/// including all ties, falls through to `-5 * disagree`. Callers that need to
/// surface tie inputs should pair this with [`has_tied_max`].
pub fn stance_score(confidence: &StanceConfidence) -> StanceScore {
    let sa = confidence.strongly_agree;
    let a = confidence.agree;
    let d = confidence.disagree;
    let sd = confidence.strongly_disagree;
    let value = if sa > a && sa > d && sa > sd {
        10.0 * sa
    } else if a > sa && a > d && a > sd {
        5.0 * a
    } else if sd > sa && sd > a && sd > d {
        -10.0 * sd
    } else {
        -5.0 * d
    };
    // Collapse -0.0 so a zero score always serializes as plain 0.
    StanceScore(if value == 0.0 { 0.0 } else { value })
}

/// True when the maximum confidence is shared by two or more stances.
///
/// Such inputs cannot have a strict winner, so [`stance_score`] resolved them
/// through the fallback arm; reports flag them for review.
pub fn has_tied_max(confidence: &StanceConfidence) -> bool {
    let values = confidence.as_array();
    let max = confidence.max_confidence();
    values.into_iter().filter(|v| *v == max).count() > 1
}

/// Four-level Likert answer, ordered from strong disagreement to strong
/// agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrdinalStance {
    StronglyDisagree,
    Disagree,
    Agree,
    StronglyAgree,
}

impl OrdinalStance {
    /// Numeric label used in answer sheets: 0, 1, 2, 3 from strong
    /// disagreement to strong agreement.
    pub fn label(self) -> u8 {
        match self {
            OrdinalStance::StronglyDisagree => 0,
            OrdinalStance::Disagree => 1,
            OrdinalStance::Agree => 2,
            OrdinalStance::StronglyAgree => 3,
        }
    }

    pub fn from_label(label: u8) -> Result<Self, StanceError> {
        match label {
            0 => Ok(OrdinalStance::StronglyDisagree),
            1 => Ok(OrdinalStance::Disagree),
            2 => Ok(OrdinalStance::Agree),
            3 => Ok(OrdinalStance::StronglyAgree),
            other => Err(StanceError::InvalidLabel(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrdinalStance::StronglyDisagree => "Strongly Disagree",
            OrdinalStance::Disagree => "Disagree",
            OrdinalStance::Agree => "Agree",
            OrdinalStance::StronglyAgree => "Strongly Agree",
        }
    }
}

/// Buckets a stance score into an ordinal answer using threshold `tau`.
///
/// Scores at or above `2 * tau` are strong agreement, non-negative scores
/// below that are agreement, scores between `-2 * tau` exclusive and zero are
/// disagreement, and scores at or below `-2 * tau` are strong disagreement.
pub fn discretize(score: StanceScore, tau: f64) -> Result<OrdinalStance, StanceError> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(StanceError::InvalidThreshold(tau));
    }
    let s = score.value();
    Ok(if s >= 2.0 * tau {
        OrdinalStance::StronglyAgree
    } else if s >= 0.0 {
        OrdinalStance::Agree
    } else if s > -2.0 * tau {
        OrdinalStance::Disagree
    } else {
        OrdinalStance::StronglyDisagree
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn conf(sa: f64, a: f64, d: f64, sd: f64) -> StanceConfidence {
        StanceConfidence::new(sa, a, d, sd).unwrap()
    }

    #[test]
    fn strongly_disagree_dominant_scores_negative_ten_times_confidence() {
        let score = stance_score(&conf(0.0, 0.0, 0.0, 0.86));
        assert!((score.value() - (-8.6)).abs() < 1e-12);
    }

    #[test]
    fn each_dominant_stance_uses_its_own_arm() {
        assert_eq!(stance_score(&conf(0.9, 0.05, 0.03, 0.02)).value(), 9.0);
        assert_eq!(stance_score(&conf(0.1, 0.6, 0.2, 0.1)).value(), 3.0);
        assert_eq!(stance_score(&conf(0.1, 0.2, 0.6, 0.1)).value(), -3.0);
        assert_eq!(stance_score(&conf(0.1, 0.1, 0.2, 0.6)).value(), -6.0);
    }

    #[test]
    fn ties_fall_through_to_disagree_arm() {
        let tied = conf(0.5, 0.5, 0.2, 0.1);
        assert_eq!(stance_score(&tied).value(), -1.0);
        assert!(has_tied_max(&tied));

        let all_equal = conf(0.25, 0.25, 0.25, 0.25);
        assert_eq!(stance_score(&all_equal).value(), -1.25);
        assert!(has_tied_max(&all_equal));
    }

    #[test]
    fn zero_vector_scores_zero_and_flags_tie() {
        let zero = conf(0.0, 0.0, 0.0, 0.0);
        let score = stance_score(&zero);
        assert_eq!(score.value(), 0.0);
        assert!(score.value().is_sign_positive());
        assert!(has_tied_max(&zero));
    }

    #[test]
    fn strict_winner_is_not_flagged() {
        assert!(!has_tied_max(&conf(0.9, 0.05, 0.03, 0.02)));
        assert!(!has_tied_max(&conf(0.1, 0.1, 0.7, 0.1)));
    }

    #[test]
    fn rejects_out_of_range_confidence() {
        assert!(StanceConfidence::new(1.2, 0.0, 0.0, 0.0).is_err());
        assert!(StanceConfidence::new(0.5, -0.1, 0.0, 0.0).is_err());
        assert!(StanceConfidence::new(0.5, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn discretize_matches_threshold_table() {
        let tau = 2.5;
        let cases = [
            (6.0, OrdinalStance::StronglyAgree),
            (5.0, OrdinalStance::StronglyAgree),
            (2.0, OrdinalStance::Agree),
            (0.0, OrdinalStance::Agree),
            (-2.0, OrdinalStance::Disagree),
            (-4.999, OrdinalStance::Disagree),
            (-5.0, OrdinalStance::StronglyDisagree),
            (-6.0, OrdinalStance::StronglyDisagree),
        ];
        for (value, expected) in cases {
            let got = discretize(StanceScore::new(value).unwrap(), tau).unwrap();
            assert_eq!(got, expected, "score {value}");
        }
    }

    #[test]
    fn discretize_rejects_bad_threshold() {
        let score = StanceScore::new(1.0).unwrap();
        for tau in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                discretize(score, tau),
                Err(StanceError::InvalidThreshold(_))
            ));
        }
    }

    #[test]
    fn ordinal_labels_round_trip() {
        for ordinal in [
            OrdinalStance::StronglyDisagree,
            OrdinalStance::Disagree,
            OrdinalStance::Agree,
            OrdinalStance::StronglyAgree,
        ] {
            assert_eq!(OrdinalStance::from_label(ordinal.label()).unwrap(), ordinal);
        }
        assert!(OrdinalStance::from_label(4).is_err());
    }

    #[test]
    fn score_serde_validates_range() {
        let ok: StanceScore = serde_json::from_str("-8.6").unwrap();
        assert!((ok.value() + 8.6).abs() < 1e-12);
        assert!(serde_json::from_str::<StanceScore>("10.5").is_err());
    }

    proptest! {
        #[test]
        fn score_stays_in_range(
            sa in 0.0..=1.0f64,
            a in 0.0..=1.0f64,
            d in 0.0..=1.0f64,
            sd in 0.0..=1.0f64,
        ) {
            let score = stance_score(&conf(sa, a, d, sd));
            prop_assert!(score.value() >= -10.0 && score.value() <= 10.0);
        }

        #[test]
        fn strict_winner_decides_magnitude(
            sa in 0.0..=1.0f64,
            a in 0.0..=1.0f64,
            d in 0.0..=1.0f64,
            sd in 0.0..=1.0f64,
        ) {
            let c = conf(sa, a, d, sd);
            let score = stance_score(&c).value();
            if sa > a && sa > d && sa > sd {
                prop_assert_eq!(score, 10.0 * sa);
            } else if a > sa && a > d && a > sd {
                prop_assert_eq!(score, 5.0 * a);
            } else if sd > sa && sd > a && sd > d {
                prop_assert_eq!(score, -10.0 * sd);
            } else {
                prop_assert!(has_tied_max(&c) || (d >= sa && d >= a && d >= sd));
                prop_assert_eq!(score, if 5.0 * d == 0.0 { 0.0 } else { -5.0 * d });
            }
        }

        #[test]
        fn discretize_is_monotone(
            s1 in -10.0..=10.0f64,
            s2 in -10.0..=10.0f64,
            tau in 0.1..=5.0f64,
        ) {
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let g_lo = discretize(StanceScore::new(lo).unwrap(), tau).unwrap();
            let g_hi = discretize(StanceScore::new(hi).unwrap(), tau).unwrap();
            prop_assert!(g_lo <= g_hi);
        }
    }
}
