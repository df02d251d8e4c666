//! Analyses over scored images.

mod consistency;
mod embeddings;
mod intervals;
mod stats;
mod stratify;

use thiserror::Error;

use crate::ids::ImageId;
use crate::scoring::ScoringError;

pub use consistency::{split_half_consistency, SplitHalf};
pub use embeddings::{
    centroid_distance_correlation, parse_embeddings, EmbeddingRecord, EmbeddingSet, POOLED_CATEGORY,
};
pub use intervals::{
    interval_performance, interval_performance_trials, IntervalCurve, IntervalPoint,
};
pub use stats::{average_ranks, pearson, spearman, Correlation};
pub use stratify::{stratify, StratifiedSplit};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("need at least {needed} scored images, found {available}")]
    InsufficientImages { needed: usize, available: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("scores span several categories ({0} and {1})")]
    MixedCategories(String, String),
    #[error("image {0} has no embedding")]
    MissingEmbedding(ImageId),
    #[error("embedding file: {0}")]
    MalformedEmbeddings(String),
    #[error("image {image} has {found} participants, need at least 2")]
    InsufficientParticipants { image: ImageId, found: usize },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
