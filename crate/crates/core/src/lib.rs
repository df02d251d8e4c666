//! Core library for intra-class memorability experiments.
//!
//! A trial is a continuous recognition task over images of a single object
//! category: every target is shown twice at a controlled slot interval and
//! foils fill the remaining slots. The modules here cover the whole offline
//! path from a trial to the numbers reported about it:
//!
//! - [`scheduler`] builds and validates stimulus plans.
//! - [`scoring`] attributes keypresses to presentations, applies participant
//!   quality control and computes interval-weighted ICMscores.
//! - [`analytics`] stratifies scored images, runs the correlation analyses and
//!   builds interval-performance curves.
//! - [`cl_metrics`] evaluates continual-learning accuracy matrices.
//! - [`simulant`] is a seeded participant model used as a test oracle.
//! - [`eventlog`] is the JSONL record format shared by the live service and
//!   the simulant.

pub mod analytics;
pub mod cl_metrics;
pub mod eventlog;
pub mod ids;
pub mod pipeline;
pub mod scheduler;
pub mod scoring;
pub mod simulant;

pub use ids::ImageId;
pub use scheduler::{IntervalSpec, SlotAssignment, SlotKind, StimulusPlan};
pub use scoring::{ImageScore, Outcome, PresentationOutcome, QcReason, QcVerdict, ResponseEvent};
