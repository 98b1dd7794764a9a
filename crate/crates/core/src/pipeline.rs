//! Text-to-scores glue shared by the CLI and the end-to-end tests.

use ndarray::Array2;

use crate::corpus::LabeledExample;
use crate::embedding::{encode, EmbeddingTable, EncodedSequence};
use crate::labels::{LabelVector, NUM_LABELS};
use crate::metrics::{evaluate, EvaluationReport, MetricError};
use crate::net::{forward, forward_with_masks, train, NetError, NetworkParameters, Scalar, TrainConfig, TrainOutcome};
use crate::normalize::{preprocess, RewriteTable};

/// Normalizer, embeddings and sequence length used to turn text into input.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub rewrites: RewriteTable,
    pub embeddings: EmbeddingTable,
    pub max_len: usize,
}

impl Encoder {
    pub fn new(rewrites: RewriteTable, embeddings: EmbeddingTable, max_len: usize) -> Self {
        Encoder {
            rewrites,
            embeddings,
            max_len,
        }
    }

    pub fn encode(&self, text: &str) -> EncodedSequence {
        encode(&preprocess(text, &self.rewrites), &self.embeddings, self.max_len)
    }

    pub fn encode_labeled(&self, examples: &[LabeledExample]) -> Vec<(EncodedSequence, LabelVector)> {
        examples.iter().map(|e| (self.encode(&e.text), e.labels)).collect()
    }

    /// Sigmoid scores for one text. A text with no tokens is scored as a
    /// single padding step so every input gets a prediction.
    pub fn scores<T: Scalar>(&self, params: &NetworkParameters<T>, text: &str) -> Result<[f64; NUM_LABELS], NetError> {
        score_sequence(&self.encode(text), &self.embeddings, params)
    }
}

/// Scores an encoded sequence, treating an empty one as a single pad step.
pub fn score_sequence<T: Scalar>(
    seq: &EncodedSequence,
    table: &EmbeddingTable,
    params: &NetworkParameters<T>,
) -> Result<[f64; NUM_LABELS], NetError> {
    if seq.true_length() > 0 {
        return Ok(forward(seq, table, params)?.scores());
    }
    let pad = Array2::zeros((1, params.dims().input_dim));
    Ok(forward_with_masks(pad.view(), params, None)?.scores())
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub fn train_examples(
    encoder: &Encoder,
    examples: &[LabeledExample],
    params: NetworkParameters<f32>,
    config: &TrainConfig,
) -> Result<TrainOutcome<f32>, NetError> {
    train(&encoder.encode_labeled(examples), &encoder.embeddings, params, config)
}

/// Scores every example and computes the metric report.
pub fn evaluate_examples<T: Scalar>(
    encoder: &Encoder,
    examples: &[LabeledExample],
    params: &NetworkParameters<T>,
    threshold: f64,
) -> Result<EvaluationReport, PipelineError> {
    let truth: Vec<LabelVector> = examples.iter().map(|e| e.labels).collect();
    let scores = examples
        .iter()
        .map(|e| encoder.scores(params, &e.text))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(evaluate(&truth, &scores, threshold)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::load_glove;
    use crate::net::{Architecture, NetworkDims};

    #[test]
    fn empty_text_still_scores() {
        let table = load_glove("flu 0.1 0.2\ncold 0.3 -0.1\n".as_bytes(), 2).unwrap();
        let enc = Encoder::new(RewriteTable::default_table(), table, 5);
        let p: NetworkParameters<f32> =
            NetworkParameters::init(Architecture::Lstm, NetworkDims { input_dim: 2, hidden1: 3, hidden2: 2 }, 0.5, 1)
                .unwrap();
        let s = enc.scores(&p, "https://t.co/abc").unwrap();
        assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(enc.scores(&p, "flu cold").unwrap(), s);
    }
}
