use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{IntervalSpec, SlotKind, StimulusPlan};
use crate::ids::ImageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SlotIndexGap,
    EmptySlot,
    TargetMultiplicity,
    FoilMultiplicity,
    MixedRoles,
    RepeatBeforeFirst,
    IntervalNotAllowed,
    CategoryMismatch,
    UnknownImage,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SlotIndexGap => "slot index gap",
            Self::EmptySlot => "empty slot",
            Self::TargetMultiplicity => "target multiplicity",
            Self::FoilMultiplicity => "foil multiplicity",
            Self::MixedRoles => "mixed roles",
            Self::RepeatBeforeFirst => "repeat before first presentation",
            Self::IntervalNotAllowed => "interval not allowed",
            Self::CategoryMismatch => "category mismatch",
            Self::UnknownImage => "unknown image",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slots: Vec<usize>,
    pub image_id: Option<ImageId>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at slots {:?}", self.kind, self.slots)?;
        if let Some(id) = &self.image_id {
            write!(f, " ({id})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, slots: Vec<usize>, image_id: Option<&ImageId>) {
        self.violations.push(Violation {
            kind,
            slots,
            image_id: image_id.cloned(),
        });
    }
}

/// Checks every structural invariant of a plan. Never fails; an empty report
/// means the plan is valid.
pub fn validate_plan(plan: &StimulusPlan, spec: &IntervalSpec) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (position, slot) in plan.slots.iter().enumerate() {
        if slot.slot_index != position {
            report.push(
                ViolationKind::SlotIndexGap,
                vec![position],
                Some(&slot.image_id),
            );
        }
        if slot.image_id.as_str().is_empty() {
            report.push(ViolationKind::EmptySlot, vec![position], None);
        }
    }

    let mut by_image: BTreeMap<&ImageId, Vec<(usize, SlotKind)>> = BTreeMap::new();
    for slot in &plan.slots {
        by_image
            .entry(&slot.image_id)
            .or_default()
            .push((slot.slot_index, slot.kind));
    }

    for (id, uses) in by_image {
        let slots: Vec<usize> = uses.iter().map(|(s, _)| *s).collect();
        let foils = uses.iter().filter(|(_, k)| *k == SlotKind::Foil).count();
        if foils > 0 && foils < uses.len() {
            report.push(ViolationKind::MixedRoles, slots, Some(id));
            continue;
        }
        if foils > 0 {
            if foils != 1 {
                report.push(ViolationKind::FoilMultiplicity, slots, Some(id));
            }
            continue;
        }

        let firsts: Vec<usize> = uses
            .iter()
            .filter(|(_, k)| *k == SlotKind::TargetFirst)
            .map(|(s, _)| *s)
            .collect();
        let repeats: Vec<usize> = uses
            .iter()
            .filter(|(_, k)| *k == SlotKind::TargetRepeat)
            .map(|(s, _)| *s)
            .collect();
        if uses.len() != 2 || firsts.len() != 1 || repeats.len() != 1 {
            report.push(ViolationKind::TargetMultiplicity, slots, Some(id));
            continue;
        }
        let (first, repeat) = (firsts[0], repeats[0]);
        if repeat <= first {
            report.push(ViolationKind::RepeatBeforeFirst, slots, Some(id));
            continue;
        }
        let interval = u32::try_from(repeat - first).unwrap_or(u32::MAX);
        if !spec.contains(interval) {
            report.push(ViolationKind::IntervalNotAllowed, slots, Some(id));
        }
    }

    report
}

/// Checks that every image in `plan` maps to the plan's category.
pub fn validate_categories<'a, F>(plan: &StimulusPlan, category_of: F) -> ValidationReport
where
    F: Fn(&ImageId) -> Option<&'a str>,
{
    let mut report = ValidationReport::default();
    for slot in &plan.slots {
        match category_of(&slot.image_id) {
            None => report.push(
                ViolationKind::UnknownImage,
                vec![slot.slot_index],
                Some(&slot.image_id),
            ),
            Some(c) if c != plan.category => report.push(
                ViolationKind::CategoryMismatch,
                vec![slot.slot_index],
                Some(&slot.image_id),
            ),
            Some(_) => {}
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::{plan_sequence, StimulusImage};

    fn valid_plan() -> StimulusPlan {
        let targets: Vec<_> = (0..10)
            .map(|i| StimulusImage::new(format!("t{i}"), "flower"))
            .collect();
        let foils: Vec<_> = (0..60)
            .map(|i| StimulusImage::new(format!("f{i}"), "flower"))
            .collect();
        plan_sequence("flower", &targets, &foils, &IntervalSpec::default(), 5).unwrap()
    }

    #[test]
    fn triple_target_is_detected() {
        let mut plan = valid_plan();
        let target = plan.targets().next().unwrap().clone();
        let foil_slot = plan
            .slots
            .iter()
            .position(|s| s.kind == SlotKind::Foil)
            .unwrap();
        plan.slots[foil_slot].image_id = target;
        plan.slots[foil_slot].kind = SlotKind::TargetRepeat;
        let report = validate_plan(&plan, &IntervalSpec::default());
        assert!(report.has(ViolationKind::TargetMultiplicity));
        assert_eq!(report.violations[0].kind.to_string(), "target multiplicity");
    }

    #[test]
    fn interval_nine_is_not_allowed() {
        let mut plan = StimulusPlan::empty("flower", 0);
        for i in 0..10 {
            plan.slots.push(super::super::SlotAssignment {
                slot_index: i,
                image_id: ImageId::new(format!("f{i}")),
                kind: SlotKind::Foil,
            });
        }
        plan.slots[0].image_id = "A".into();
        plan.slots[0].kind = SlotKind::TargetFirst;
        plan.slots[9].image_id = "A".into();
        plan.slots[9].kind = SlotKind::TargetRepeat;
        let report = validate_plan(&plan, &IntervalSpec::default());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::IntervalNotAllowed);
        assert_eq!(report.violations[0].slots, vec![0, 9]);
        assert_eq!(
            report.violations[0].kind.to_string(),
            "interval not allowed"
        );
    }

    #[test]
    fn duplicate_foil_and_gaps_are_detected() {
        let mut plan = valid_plan();
        let foils: Vec<usize> = plan
            .slots
            .iter()
            .filter(|s| s.kind == SlotKind::Foil)
            .map(|s| s.slot_index)
            .collect();
        let dup = plan.slots[foils[0]].image_id.clone();
        plan.slots[foils[1]].image_id = dup;
        assert!(validate_plan(&plan, &IntervalSpec::default()).has(ViolationKind::FoilMultiplicity));

        let mut plan = valid_plan();
        plan.slots.remove(3);
        assert!(validate_plan(&plan, &IntervalSpec::default()).has(ViolationKind::SlotIndexGap));
    }

    #[test]
    fn repeat_before_first_is_detected() {
        let mut plan = valid_plan();
        let target = plan.targets().next().unwrap().clone();
        for slot in plan.slots.iter_mut().filter(|s| s.image_id == target) {
            slot.kind = match slot.kind {
                SlotKind::TargetFirst => SlotKind::TargetRepeat,
                _ => SlotKind::TargetFirst,
            };
        }
        assert!(
            validate_plan(&plan, &IntervalSpec::default()).has(ViolationKind::RepeatBeforeFirst)
        );
    }

    #[test]
    fn category_lookup() {
        let plan = valid_plan();
        assert!(validate_categories(&plan, |_| Some("flower")).is_empty());
        let report = validate_categories(&plan, |id| {
            if id.as_str() == "t3" {
                Some("phone")
            } else {
                Some("flower")
            }
        });
        assert_eq!(report.violations.len(), 2);
        assert!(report.has(ViolationKind::CategoryMismatch));
        assert!(validate_categories(&plan, |_| None).has(ViolationKind::UnknownImage));
    }
}
