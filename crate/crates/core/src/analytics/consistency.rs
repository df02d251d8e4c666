use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{spearman, AnalyticsError};
use crate::ids::ImageId;
use crate::scheduler::{IntervalSpec, SlotKind};
use crate::scoring::{aggregate_scores, SessionOutcomes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitHalf {
    pub mean_rho: f64,
    /// Sample standard deviation over runs; 0 for a single run.
    pub std_rho: f64,
    pub runs: Vec<f64>,
}

/// Split-half reliability of ICMscores.
///
/// Each run shuffles participants and splits them into two halves of sizes
/// `floor(n/2)` and `ceil(n/2)`, scores every image within each half and
/// takes the Spearman correlation over images scored in both halves.
/// Participants are ordered by first appearance before shuffling, so the
/// result depends only on input order and `seed`, never on participant ids.
pub fn split_half_consistency(
    sessions: &[SessionOutcomes],
    spec: &IntervalSpec,
    runs: usize,
    seed: u64,
) -> Result<SplitHalf, AnalyticsError> {
    let mut participants: Vec<&str> = Vec::new();
    let mut by_participant: HashMap<&str, Vec<&SessionOutcomes>> = HashMap::new();
    for s in sessions {
        let entry = by_participant.entry(s.session_id.as_str()).or_default();
        if entry.is_empty() {
            participants.push(&s.session_id);
        }
        entry.push(s);
    }

    let mut seen: BTreeMap<&ImageId, Vec<&str>> = BTreeMap::new();
    for s in sessions {
        for o in s
            .outcomes
            .iter()
            .filter(|o| o.kind == SlotKind::TargetRepeat)
        {
            let who = seen.entry(&o.image_id).or_default();
            if !who.contains(&s.session_id.as_str()) {
                who.push(&s.session_id);
            }
        }
    }
    if let Some((image, who)) = seen.iter().find(|(_, who)| who.len() < 2) {
        return Err(AnalyticsError::InsufficientParticipants {
            image: (*image).clone(),
            found: who.len(),
        });
    }
    if seen.is_empty() {
        return Err(AnalyticsError::DegenerateInput("no repeat outcomes".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rhos = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut order = participants.clone();
        order.shuffle(&mut rng);
        let (a, b) = order.split_at(order.len() / 2);
        let half = |ids: &[&str]| -> Vec<SessionOutcomes> {
            ids.iter()
                .flat_map(|id| by_participant[id].iter().map(|s| (*s).clone()))
                .collect()
        };
        let left = aggregate_scores(&half(a), spec, 1)?;
        let right = aggregate_scores(&half(b), spec, 1)?;
        let right: HashMap<(&str, &ImageId), f64> = right
            .scores
            .iter()
            .map(|s| ((s.category.as_str(), &s.image_id), s.icmscore))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = left
            .scores
            .iter()
            .filter_map(|s| {
                right
                    .get(&(s.category.as_str(), &s.image_id))
                    .map(|r| (s.icmscore, *r))
            })
            .unzip();
        rhos.push(spearman(&xs, &ys)?);
    }

    let n = rhos.len() as f64;
    let mean_rho = if rhos.is_empty() {
        0.0
    } else {
        rhos.iter().sum::<f64>() / n
    };
    let std_rho = if rhos.len() < 2 {
        0.0
    } else {
        (rhos.iter().map(|r| (r - mean_rho).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(SplitHalf {
        mean_rho,
        std_rho,
        runs: rhos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{Outcome, PresentationOutcome};
    use rand::Rng;

    fn repeat(image: usize, hit: bool, t: u32) -> PresentationOutcome {
        PresentationOutcome {
            image_id: format!("img{image:03}").into(),
            slot_index: 0,
            kind: SlotKind::TargetRepeat,
            pressed: hit,
            outcome: if hit { Outcome::Hit } else { Outcome::Miss },
            interval: Some(t),
            reaction_time_ms: None,
        }
    }

    fn session(id: &str, outcomes: Vec<PresentationOutcome>) -> SessionOutcomes {
        SessionOutcomes {
            session_id: id.into(),
            category: "teapot".into(),
            outcomes,
        }
    }

    #[test]
    fn identical_responders_agree_perfectly() {
        // image i is hit at interval 8 * (1 + i % 4) iff i % 3 != 0
        let sessions: Vec<_> = (0..8)
            .map(|p| {
                session(
                    &format!("p{p}"),
                    (0..20)
                        .map(|i| repeat(i, i % 3 != 0, 8 * (1 + i as u32 % 4)))
                        .collect(),
                )
            })
            .collect();
        let out = split_half_consistency(&sessions, &IntervalSpec::default(), 5, 1).unwrap();
        assert!((out.mean_rho - 1.0).abs() < 1e-12);
        assert!(out.std_rho.abs() < 1e-12);
        assert_eq!(out.runs.len(), 5);
    }

    #[test]
    fn null_responders_are_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let sessions: Vec<_> = (0..40)
            .map(|p| {
                session(
                    &format!("p{p}"),
                    (0..200)
                        .map(|i| {
                            repeat(
                                i,
                                rng.random_bool(0.6),
                                [8, 16, 24, 32][rng.random_range(0..4)],
                            )
                        })
                        .collect(),
                )
            })
            .collect();
        let out = split_half_consistency(&sessions, &IntervalSpec::default(), 10, 3).unwrap();
        assert!(out.mean_rho.abs() < 0.15, "mean_rho {}", out.mean_rho);
    }

    #[test]
    fn relabeling_participants_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sessions: Vec<_> = (0..12)
            .map(|p| {
                session(
                    &format!("p{p}"),
                    (0..30)
                        .map(|i| repeat(i, rng.random_bool(0.5), 16))
                        .collect(),
                )
            })
            .collect();
        let relabeled: Vec<_> = sessions
            .iter()
            .enumerate()
            .map(|(i, s)| session(&format!("zz{}", 100 - i), s.outcomes.clone()))
            .collect();
        let spec = IntervalSpec::default();
        assert_eq!(
            split_half_consistency(&sessions, &spec, 4, 8).unwrap(),
            split_half_consistency(&relabeled, &spec, 4, 8).unwrap()
        );
    }

    #[test]
    fn single_participant_images_rejected() {
        let sessions = vec![session("p0", vec![repeat(0, true, 8)])];
        assert!(matches!(
            split_half_consistency(&sessions, &IntervalSpec::default(), 1, 0),
            Err(AnalyticsError::InsufficientParticipants { found: 1, .. })
        ));
    }
}
