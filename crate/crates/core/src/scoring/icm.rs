use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ImageScore, Outcome, PresentationOutcome, ScoringError};
use crate::ids::ImageId;
use crate::scheduler::{IntervalSpec, SlotKind};

/// Interval-weighted score of one image.
///
/// A hit at interval `t` earns `t / T`; a miss costs `(T - t) / T`, so
/// forgetting after a short gap weighs more than forgetting after a long one.
/// The score is the mean over all `n` repeat responses. The no-penalty
/// variant scores a hit as 1 and a miss as 0, which is the plain hit rate.
pub fn score_image(
    category: &str,
    outcomes: &[PresentationOutcome],
    spec: &IntervalSpec,
) -> Result<ImageScore, ScoringError> {
    let first = outcomes.first().ok_or(ScoringError::NoResponses)?;
    let max = f64::from(spec.max_interval());
    let mut weighted = 0.0;
    let mut hits = 0usize;

    for o in outcomes {
        if o.image_id != first.image_id {
            return Err(ScoringError::MixedImages(
                first.image_id.clone(),
                o.image_id.clone(),
            ));
        }
        if o.kind != SlotKind::TargetRepeat {
            return Err(ScoringError::NotARepeat {
                image: o.image_id.clone(),
                slot: o.slot_index,
            });
        }
        let t = match o.interval {
            Some(t) if spec.contains(t) => f64::from(t),
            other => {
                return Err(ScoringError::IntervalNotAllowed {
                    image: o.image_id.clone(),
                    slot: o.slot_index,
                    interval: other,
                })
            }
        };
        if o.outcome == Outcome::Hit {
            weighted += t / max;
            hits += 1;
        } else {
            weighted -= (max - t) / max;
        }
    }

    let n = outcomes.len() as f64;
    Ok(ImageScore {
        image_id: first.image_id.clone(),
        category: category.to_owned(),
        icmscore: weighted / n,
        icmscore_no_penalty: hits as f64 / n,
        n_responses: outcomes.len(),
    })
}

/// Attributed outcomes of one participant session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOutcomes {
    pub session_id: String,
    pub category: String,
    pub outcomes: Vec<PresentationOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedImage {
    pub image_id: ImageId,
    pub category: String,
    pub n_responses: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    /// Sorted by category, then image id.
    pub scores: Vec<ImageScore>,
    pub excluded: Vec<ExcludedImage>,
}

/// Scores every target image across sessions. Images with fewer than
/// `min_responses` repeat responses are listed in `excluded` instead.
pub fn aggregate_scores(
    sessions: &[SessionOutcomes],
    spec: &IntervalSpec,
    min_responses: usize,
) -> Result<ScoreTable, ScoringError> {
    let mut grouped: BTreeMap<(&str, &ImageId), Vec<PresentationOutcome>> = BTreeMap::new();
    for session in sessions {
        for o in session
            .outcomes
            .iter()
            .filter(|o| o.kind == SlotKind::TargetRepeat)
        {
            grouped
                .entry((session.category.as_str(), &o.image_id))
                .or_default()
                .push(o.clone());
        }
    }

    let mut table = ScoreTable::default();
    for ((category, image_id), outcomes) in grouped {
        if outcomes.len() < min_responses.max(1) {
            table.excluded.push(ExcludedImage {
                image_id: image_id.clone(),
                category: category.to_owned(),
                n_responses: outcomes.len(),
            });
            continue;
        }
        table.scores.push(score_image(category, &outcomes, spec)?);
    }
    Ok(table)
}
