//! Stimulus sequence construction for single-category recognition trials.
//!
//! A plan is a list of slots. Each target occupies two slots, its first
//! presentation and its repeat, separated by a slot offset drawn from an
//! [`IntervalSpec`]; every other slot holds a foil that appears exactly once.
//! An interval of `t` means the repeat sits at `first_slot + t`, so `t - 1`
//! images are shown in between.

mod validate;

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::ImageId;

pub use validate::{
    validate_categories, validate_plan, ValidationReport, Violation, ViolationKind,
};

/// Maximum interval used by the default protocol.
pub const DEFAULT_MAX_INTERVAL: u32 = 32;
/// Intervals used by the default protocol.
pub const DEFAULT_INTERVALS: [u32; 4] = [8, 16, 24, 32];
/// Full restarts attempted before placement gives up.
pub const DEFAULT_MAX_RESTARTS: usize = 50;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("interval spec has no allowed intervals")]
    EmptyIntervals,
    #[error("interval {interval} is not a positive offset bounded by max interval {max}")]
    IntervalOutOfRange { interval: u32, max: u32 },
    #[error("plan needs {needed} foils but only {available} are available")]
    InsufficientFoils { needed: usize, available: usize },
    #[error("no collision-free placement within {max_slots} slots after {attempts} attempts")]
    InfeasiblePlacement { attempts: usize, max_slots: usize },
    #[error("image {image} belongs to category {found:?}, expected {expected:?}")]
    CategoryMismatch {
        image: ImageId,
        expected: String,
        found: String,
    },
    #[error("image {0} is listed more than once")]
    DuplicateImage(ImageId),
    #[error("image {0} is both a target and a foil")]
    OverlappingPools(ImageId),
    #[error("slot {slot} is already occupied (placing {image})")]
    SlotCollision { slot: usize, image: ImageId },
    #[error("image {0} does not occur in the plan")]
    UnknownTarget(ImageId),
    #[error("image {0} is not presented twice")]
    NotRepeated(ImageId),
}

/// Set of allowed slot offsets together with the maximum interval `T` used
/// to normalise scores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntervalSpecRepr", into = "IntervalSpecRepr")]
pub struct IntervalSpec {
    allowed: BTreeSet<u32>,
    max_interval: u32,
}

#[derive(Serialize, Deserialize)]
struct IntervalSpecRepr {
    allowed: Vec<u32>,
    max_interval: u32,
}

impl TryFrom<IntervalSpecRepr> for IntervalSpec {
    type Error = SchedulerError;

    fn try_from(repr: IntervalSpecRepr) -> Result<Self, Self::Error> {
        IntervalSpec::new(repr.allowed, repr.max_interval)
    }
}

impl From<IntervalSpec> for IntervalSpecRepr {
    fn from(spec: IntervalSpec) -> Self {
        Self {
            allowed: spec.allowed.into_iter().collect(),
            max_interval: spec.max_interval,
        }
    }
}

impl IntervalSpec {
    pub fn new(
        allowed: impl IntoIterator<Item = u32>,
        max_interval: u32,
    ) -> Result<Self, SchedulerError> {
        let allowed: BTreeSet<u32> = allowed.into_iter().collect();
        if allowed.is_empty() {
            return Err(SchedulerError::EmptyIntervals);
        }
        if let Some(&bad) = allowed.iter().find(|&&t| t == 0 || t > max_interval) {
            return Err(SchedulerError::IntervalOutOfRange {
                interval: bad,
                max: max_interval,
            });
        }
        Ok(Self {
            allowed,
            max_interval,
        })
    }

    pub fn allowed(&self) -> &BTreeSet<u32> {
        &self.allowed
    }

    pub fn max_interval(&self) -> u32 {
        self.max_interval
    }

    pub fn min_interval(&self) -> u32 {
        *self
            .allowed
            .iter()
            .next()
            .expect("non-empty by construction")
    }

    pub fn contains(&self, t: u32) -> bool {
        self.allowed.contains(&t)
    }
}

impl Default for IntervalSpec {
    fn default() -> Self {
        Self::new(DEFAULT_INTERVALS, DEFAULT_MAX_INTERVAL).expect("default spec is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    TargetFirst,
    TargetRepeat,
    Foil,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub slot_index: usize,
    pub image_id: ImageId,
    pub kind: SlotKind,
}

/// Ordered slot-by-slot sequence for one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusPlan {
    pub category: String,
    pub seed: u64,
    pub slots: Vec<SlotAssignment>,
}

impl StimulusPlan {
    pub fn empty(category: impl Into<String>, seed: u64) -> Self {
        Self {
            category: category.into(),
            seed,
            slots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, index: usize) -> Option<&SlotAssignment> {
        self.slots.get(index)
    }

    /// Target ids in order of first presentation.
    pub fn targets(&self) -> impl Iterator<Item = &ImageId> {
        self.slots
            .iter()
            .filter(|s| s.kind == SlotKind::TargetFirst)
            .map(|s| &s.image_id)
    }

    pub fn foils(&self) -> impl Iterator<Item = &ImageId> {
        self.slots
            .iter()
            .filter(|s| s.kind == SlotKind::Foil)
            .map(|s| &s.image_id)
    }

    /// Interval of every repeat slot, keyed by slot index.
    pub fn repeat_intervals(&self) -> HashMap<usize, u32> {
        let mut first: HashMap<&ImageId, usize> = HashMap::new();
        let mut out = HashMap::new();
        for slot in &self.slots {
            match slot.kind {
                SlotKind::TargetFirst => {
                    first.insert(&slot.image_id, slot.slot_index);
                }
                SlotKind::TargetRepeat => {
                    if let Some(&f) = first.get(&slot.image_id) {
                        if slot.slot_index > f {
                            out.insert(slot.slot_index, (slot.slot_index - f) as u32);
                        }
                    }
                }
                SlotKind::Foil => {}
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Second slot index minus first slot index for `target`.
pub fn interval_of(plan: &StimulusPlan, target: &ImageId) -> Result<u32, SchedulerError> {
    let mut first = None;
    let mut repeat = None;
    let mut seen = false;
    for slot in plan.slots.iter().filter(|s| &s.image_id == target) {
        seen = true;
        match slot.kind {
            SlotKind::TargetFirst => first = first.or(Some(slot.slot_index)),
            SlotKind::TargetRepeat => repeat = repeat.or(Some(slot.slot_index)),
            SlotKind::Foil => {}
        }
    }
    if !seen {
        return Err(SchedulerError::UnknownTarget(target.clone()));
    }
    match (first, repeat) {
        (Some(f), Some(r)) if r > f => Ok((r - f) as u32),
        _ => Err(SchedulerError::NotRepeated(target.clone())),
    }
}

/// An image offered to the scheduler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusImage {
    pub id: ImageId,
    pub category: String,
}

impl StimulusImage {
    pub fn new(id: impl Into<ImageId>, category: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            category: category.into(),
        }
    }
}

/// Explicit placement of one target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetPlacement {
    pub image: StimulusImage,
    pub first_slot: usize,
    pub interval: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOptions {
    pub max_restarts: usize,
    /// Upper bound on sequence length; `None` lets length follow placement.
    pub max_slots: Option<usize>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            max_restarts: DEFAULT_MAX_RESTARTS,
            max_slots: None,
        }
    }
}

/// Builds a plan with the default [`PlanOptions`].
pub fn plan_sequence(
    category: &str,
    targets: &[StimulusImage],
    foil_pool: &[StimulusImage],
    spec: &IntervalSpec,
    seed: u64,
) -> Result<StimulusPlan, SchedulerError> {
    plan_sequence_with(
        category,
        targets,
        foil_pool,
        spec,
        seed,
        PlanOptions::default(),
    )
}

/// Randomised greedy placement.
///
/// Each attempt shuffles the targets and draws every interval uniformly from
/// `spec`. Targets are then placed in order at the lowest slot `s` such that
/// both `s` and `s + t` are free. Holes left behind become foil slots, filled
/// left to right from a shuffled foil pool. An attempt is rejected when it
/// needs more foils than the pool holds or exceeds `max_slots`.
pub fn plan_sequence_with(
    category: &str,
    targets: &[StimulusImage],
    foil_pool: &[StimulusImage],
    spec: &IntervalSpec,
    seed: u64,
    options: PlanOptions,
) -> Result<StimulusPlan, SchedulerError> {
    check_pools(category, targets, foil_pool)?;
    if targets.is_empty() {
        return Ok(StimulusPlan::empty(category, seed));
    }

    let intervals: Vec<u32> = spec.allowed().iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fewest_holes = usize::MAX;
    let mut too_long = false;
    let attempts = options.max_restarts + 1;

    for _ in 0..attempts {
        let mut order: Vec<&StimulusImage> = targets.iter().collect();
        order.shuffle(&mut rng);
        let drawn: Vec<u32> = order
            .iter()
            .map(|_| intervals[rng.random_range(0..intervals.len())])
            .collect();

        let placements = greedy_place(&order, &drawn);
        let length = placements
            .iter()
            .map(|p| p.first_slot + p.interval as usize + 1)
            .max()
            .unwrap_or(0);
        if options.max_slots.is_some_and(|max| length > max) {
            too_long = true;
            continue;
        }
        let holes = length - 2 * targets.len();
        if holes > foil_pool.len() {
            fewest_holes = fewest_holes.min(holes);
            continue;
        }

        let mut foils: Vec<&StimulusImage> = foil_pool.iter().collect();
        foils.shuffle(&mut rng);
        return assemble(category, seed, &placements, &foils);
    }

    if fewest_holes != usize::MAX {
        Err(SchedulerError::InsufficientFoils {
            needed: fewest_holes,
            available: foil_pool.len(),
        })
    } else {
        debug_assert!(too_long);
        Err(SchedulerError::InfeasiblePlacement {
            attempts,
            max_slots: options.max_slots.unwrap_or(usize::MAX),
        })
    }
}

/// Builds a plan from caller-chosen target placements. Foils are shuffled
/// with `seed` and fill the holes left to right.
pub fn plan_from_placements(
    category: &str,
    placements: &[TargetPlacement],
    foil_pool: &[StimulusImage],
    seed: u64,
) -> Result<StimulusPlan, SchedulerError> {
    let targets: Vec<StimulusImage> = placements.iter().map(|p| p.image.clone()).collect();
    check_pools(category, &targets, foil_pool)?;
    let mut foils: Vec<&StimulusImage> = foil_pool.iter().collect();
    foils.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    assemble(category, seed, placements, &foils)
}

fn check_pools(
    category: &str,
    targets: &[StimulusImage],
    foil_pool: &[StimulusImage],
) -> Result<(), SchedulerError> {
    let mut target_ids = HashSet::new();
    for image in targets.iter().chain(foil_pool) {
        if image.category != category {
            return Err(SchedulerError::CategoryMismatch {
                image: image.id.clone(),
                expected: category.to_owned(),
                found: image.category.clone(),
            });
        }
    }
    for t in targets {
        if !target_ids.insert(&t.id) {
            return Err(SchedulerError::DuplicateImage(t.id.clone()));
        }
    }
    let mut foil_ids = HashSet::new();
    for f in foil_pool {
        if target_ids.contains(&f.id) {
            return Err(SchedulerError::OverlappingPools(f.id.clone()));
        }
        if !foil_ids.insert(&f.id) {
            return Err(SchedulerError::DuplicateImage(f.id.clone()));
        }
    }
    Ok(())
}

fn greedy_place(order: &[&StimulusImage], intervals: &[u32]) -> Vec<TargetPlacement> {
    let mut occupied: Vec<bool> = Vec::new();
    let is_free = |occ: &Vec<bool>, slot: usize| occ.get(slot).is_none_or(|o| !o);
    let mut frontier = 0;
    let mut placements = Vec::with_capacity(order.len());

    for (image, &t) in order.iter().zip(intervals) {
        while !is_free(&occupied, frontier) {
            frontier += 1;
        }
        let mut first = frontier;
        while !(is_free(&occupied, first) && is_free(&occupied, first + t as usize)) {
            first += 1;
        }
        let repeat = first + t as usize;
        if occupied.len() <= repeat {
            occupied.resize(repeat + 1, false);
        }
        occupied[first] = true;
        occupied[repeat] = true;
        placements.push(TargetPlacement {
            image: (*image).clone(),
            first_slot: first,
            interval: t,
        });
    }
    placements
}

fn assemble(
    category: &str,
    seed: u64,
    placements: &[TargetPlacement],
    foils: &[&StimulusImage],
) -> Result<StimulusPlan, SchedulerError> {
    let length = placements
        .iter()
        .map(|p| p.first_slot + p.interval as usize + 1)
        .max()
        .unwrap_or(0);
    let mut slots: Vec<Option<SlotAssignment>> = vec![None; length];

    for p in placements {
        let repeat = p.first_slot + p.interval as usize;
        for (slot, kind) in [
            (p.first_slot, SlotKind::TargetFirst),
            (repeat, SlotKind::TargetRepeat),
        ] {
            if slots[slot].is_some() || p.interval == 0 {
                return Err(SchedulerError::SlotCollision {
                    slot,
                    image: p.image.id.clone(),
                });
            }
            slots[slot] = Some(SlotAssignment {
                slot_index: slot,
                image_id: p.image.id.clone(),
                kind,
            });
        }
    }

    let holes = slots.iter().filter(|s| s.is_none()).count();
    if holes > foils.len() {
        return Err(SchedulerError::InsufficientFoils {
            needed: holes,
            available: foils.len(),
        });
    }

    let mut next_foil = foils.iter();
    let slots = slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.unwrap_or_else(|| SlotAssignment {
                slot_index: i,
                image_id: next_foil.next().expect("hole count checked").id.clone(),
                kind: SlotKind::Foil,
            })
        })
        .collect();

    Ok(StimulusPlan {
        category: category.to_owned(),
        seed,
        slots,
    })
}
