use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::scheduler::{IntervalSpec, SlotKind};
use crate::scoring::{Outcome, PresentationOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPoint {
    pub accuracy: f64,
    pub f1: f64,
    /// Repeat presentations at this interval.
    pub n: usize,
    pub hits: usize,
    /// False positives apportioned to this interval.
    pub false_positives: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalCurve {
    pub points: BTreeMap<u32, IntervalPoint>,
    /// Allowed intervals with no repeat outcomes.
    pub missing: Vec<u32>,
}

impl IntervalCurve {
    /// `t,accuracy,f1,n` rows for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,accuracy,f1,n\n");
        for (t, p) in &self.points {
            out.push_str(&format!("{t},{},{},{}\n", p.accuracy, p.f1, p.n));
        }
        out
    }
}

/// Curve for the outcomes of a single trial.
pub fn interval_performance(
    outcomes: &[PresentationOutcome],
    spec: &IntervalSpec,
) -> IntervalCurve {
    interval_performance_trials([outcomes], spec)
}

/// Accuracy and F1 per interval, pooled over trials.
///
/// Recall at `t` is the hit rate of repeats at `t`. False positives carry no
/// interval, so each trial's false-positive count is split across interval
/// buckets in proportion to that trial's share of repeats at each `t`; the
/// apportioned counts feed the per-interval precision.
pub fn interval_performance_trials<'a, I>(trials: I, spec: &IntervalSpec) -> IntervalCurve
where
    I: IntoIterator<Item = &'a [PresentationOutcome]>,
{
    #[derive(Default)]
    struct Bucket {
        n: usize,
        hits: usize,
        fp: f64,
    }
    let mut buckets: BTreeMap<u32, Bucket> = BTreeMap::new();

    for trial in trials {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        let mut false_positives = 0usize;
        for o in trial {
            match (o.kind, o.interval) {
                (SlotKind::TargetRepeat, Some(t)) if spec.contains(t) => {
                    let b = buckets.entry(t).or_default();
                    b.n += 1;
                    b.hits += usize::from(o.outcome == Outcome::Hit);
                    *counts.entry(t).or_default() += 1;
                }
                (SlotKind::TargetRepeat, t) => {
                    warn!(
                        "slot {}: repeat interval {t:?} not in the allowed set, ignored",
                        o.slot_index
                    )
                }
                _ => false_positives += usize::from(o.outcome == Outcome::FalsePositive),
            }
        }
        let repeats: usize = counts.values().sum();
        if repeats == 0 {
            continue;
        }
        for (t, c) in counts {
            buckets.get_mut(&t).expect("bucket created above").fp +=
                false_positives as f64 * c as f64 / repeats as f64;
        }
    }

    let mut curve = IntervalCurve::default();
    for &t in spec.allowed() {
        let Some(b) = buckets.get(&t) else {
            warn!("interval {t} has no repeat outcomes, point omitted");
            curve.missing.push(t);
            continue;
        };
        let hits = b.hits as f64;
        let recall = hits / b.n as f64;
        let precision = if hits + b.fp > 0.0 {
            hits / (hits + b.fp)
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        curve.points.insert(
            t,
            IntervalPoint {
                accuracy: recall,
                f1,
                n: b.n,
                hits: b.hits,
                false_positives: b.fp,
            },
        );
    }
    curve
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repeat(hit: bool, t: u32) -> PresentationOutcome {
        PresentationOutcome {
            image_id: "x".into(),
            slot_index: 0,
            kind: SlotKind::TargetRepeat,
            pressed: hit,
            outcome: if hit { Outcome::Hit } else { Outcome::Miss },
            interval: Some(t),
            reaction_time_ms: None,
        }
    }

    fn foil(pressed: bool) -> PresentationOutcome {
        PresentationOutcome {
            image_id: "f".into(),
            slot_index: 0,
            kind: SlotKind::Foil,
            pressed,
            outcome: if pressed {
                Outcome::FalsePositive
            } else {
                Outcome::CorrectRejection
            },
            interval: None,
            reaction_time_ms: None,
        }
    }

    #[test]
    fn all_hits() {
        let outcomes: Vec<_> = [8, 16, 24, 32].iter().map(|&t| repeat(true, t)).collect();
        let curve = interval_performance(&outcomes, &IntervalSpec::default());
        assert!(curve.missing.is_empty());
        for p in curve.points.values() {
            assert_eq!(p.accuracy, 1.0);
            assert_eq!(p.f1, 1.0);
        }
    }

    #[test]
    fn recall_only_f1() {
        let mut outcomes = Vec::new();
        for (t, hits) in [(8, 9), (16, 8), (24, 6), (32, 5)] {
            for i in 0..10 {
                outcomes.push(repeat(i < hits, t));
            }
            outcomes.push(foil(false));
        }
        let curve = interval_performance(&outcomes, &IntervalSpec::default());
        for (t, acc) in [(8, 0.9), (16, 0.8), (24, 0.6), (32, 0.5)] {
            let p = curve.points[&t];
            assert!((p.accuracy - acc).abs() < 1e-15);
            assert!((p.f1 - 2.0 * acc / (1.0 + acc)).abs() < 1e-15);
        }
    }

    #[test]
    fn false_positives_split_by_repeat_share() {
        // 3 repeats at 8, 1 at 16, 4 false positives: 3 and 1 apportioned
        let outcomes = vec![
            repeat(true, 8),
            repeat(true, 8),
            repeat(false, 8),
            repeat(true, 16),
            foil(true),
            foil(true),
            foil(true),
            foil(true),
            foil(false),
        ];
        let spec = IntervalSpec::new([8, 16], 16).unwrap();
        let curve = interval_performance(&outcomes, &spec);
        let p8 = curve.points[&8];
        assert!((p8.false_positives - 3.0).abs() < 1e-15);
        let (precision, recall) = (2.0 / 5.0, 2.0 / 3.0);
        assert!((p8.f1 - 2.0 * precision * recall / (precision + recall)).abs() < 1e-15);
        let p16 = curve.points[&16];
        assert!((p16.false_positives - 1.0).abs() < 1e-15);
        assert!((p16.f1 - 2.0 * 0.5 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn empty_buckets_are_reported() {
        let curve = interval_performance(&[repeat(true, 8)], &IntervalSpec::default());
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.missing, vec![16, 24, 32]);
        assert_eq!(curve.to_csv(), "t,accuracy,f1,n\n8,1,1,1\n");
    }
}
