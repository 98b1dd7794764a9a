//! Multi-label tweet sentiment pipeline.
//!
//! Raw tweets are normalized ([`normalize`]), mapped onto GloVe vectors
//! ([`embedding`]) and classified over eleven sentiment labels by an LSTM or
//! bidirectional LSTM trained from scratch ([`net`]). Predictions are scored
//! with the multi-label metric suite in [`metrics`] and summarized by the
//! corpus analytics in [`analytics`], rendered to CSV/SVG by [`report`].

pub mod analytics;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod labels;
pub mod metrics;
pub mod net;
pub mod normalize;
pub mod pipeline;
pub mod report;

pub use labels::{LabelVector, Sentiment, LABEL_NAMES, NUM_LABELS};
