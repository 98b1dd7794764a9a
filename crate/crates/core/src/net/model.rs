use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;

use super::lstm::{backprop_sequence, run_sequence, SequenceCache};
use super::params::{NetworkParameters, RecurrentLayer};
use super::{NetError, Scalar};
use crate::embedding::{embed_valid, EmbeddingTable, EncodedSequence};
use crate::labels::{LabelVector, NUM_LABELS};

/// Probability clamp used by the loss.
pub const BCE_EPSILON: f64 = 1e-7;
/// Default decision threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Sigmoid scores and the labels they select.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub scores: [f64; NUM_LABELS],
    pub labels: LabelVector,
}

impl Prediction {
    pub fn from_scores(scores: [f64; NUM_LABELS], threshold: f64) -> Self {
        Prediction {
            scores,
            labels: LabelVector::from_scores(&scores, threshold),
        }
    }
}

/// Mean element-wise binary cross-entropy with probabilities clamped to
/// `[ε, 1−ε]`.
pub fn bce_loss(scores: &[f64; NUM_LABELS], target: &LabelVector) -> f64 {
    let mut total = 0.0;
    for (k, &s) in scores.iter().enumerate() {
        let p = s.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        total -= if target.get(k) { p.ln() } else { (1.0 - p).ln() };
    }
    total / NUM_LABELS as f64
}

/// Multiplicative inverted-dropout masks: each entry is 0 or `1/(1−rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks<T> {
    /// `L × layer1 output width`.
    pub layer1: Array2<T>,
    /// Layer 2's final representation width.
    pub layer2: Array1<T>,
}

impl<T: Scalar> DropoutMasks<T> {
    pub fn sample<R: Rng>(len: usize, width1: usize, width2: usize, rate: f64, rng: &mut R) -> Self {
        let keep = 1.0 - rate;
        let scale = T::of(1.0 / keep);
        let mut draw = || if rng.gen::<f64>() < keep { scale } else { T::zero() };
        let layer1 = Array2::from_shape_simple_fn((len, width1), &mut draw);
        let layer2 = Array1::from_shape_simple_fn(width2, &mut draw);
        DropoutMasks { layer1, layer2 }
    }

    fn for_params<R: Rng>(len: usize, params: &NetworkParameters<T>, rng: &mut R) -> Self {
        Self::sample(
            len,
            params.layer1.output_dim(),
            params.final_dim(),
            params.dropout_rate,
            rng,
        )
    }
}

#[derive(Debug, Clone)]
struct LayerCache<T> {
    forward: SequenceCache<T>,
    backward: Option<SequenceCache<T>>,
    outputs: Array2<T>,
}

fn run_layer<T: Scalar>(layer: &RecurrentLayer<T>, inputs: ArrayView2<'_, T>) -> LayerCache<T> {
    let forward = run_sequence(&layer.forward, inputs, false);
    let backward = layer.backward.as_ref().map(|p| run_sequence(p, inputs, true));
    let outputs = match &backward {
        Some(b) => ndarray::concatenate![ndarray::Axis(1), forward.outputs(), b.outputs()],
        None => forward.outputs(),
    };
    LayerCache {
        forward,
        backward,
        outputs,
    }
}

fn backprop_layer<T: Scalar>(
    layer: &RecurrentLayer<T>,
    cache: &LayerCache<T>,
    d_out: ArrayView2<'_, T>,
    grad: &mut RecurrentLayer<T>,
) -> Array2<T> {
    let h = layer.hidden_dim();
    let mut dx = backprop_sequence(
        &layer.forward,
        &cache.forward,
        d_out.slice(s![.., ..h]),
        &mut grad.forward,
    );
    if let (Some(p), Some(c), Some(g)) = (&layer.backward, &cache.backward, grad.backward.as_mut()) {
        dx += &backprop_sequence(p, c, d_out.slice(s![.., h..]), g);
    }
    dx
}

/// Everything a backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    fingerprint: u64,
    layer1: LayerCache<T>,
    masks: Option<DropoutMasks<T>>,
    layer2: LayerCache<T>,
    representation: Array1<T>,
    scores: Array1<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn scores(&self) -> [f64; NUM_LABELS] {
        let mut out = [0.0; NUM_LABELS];
        for (o, s) in out.iter_mut().zip(self.scores.iter()) {
            *o = s.to_f64().unwrap_or(f64::NAN);
        }
        out
    }

    pub fn prediction(&self, threshold: f64) -> Prediction {
        Prediction::from_scores(self.scores(), threshold)
    }

    /// Per-timestep layer-1 outputs before dropout (`L × width`).
    pub fn layer1_outputs(&self) -> &Array2<T> {
        &self.layer1.outputs
    }

    /// The vector fed to the output layer, after dropout.
    pub fn representation(&self) -> &Array1<T> {
        &self.representation
    }

    pub fn is_training(&self) -> bool {
        self.masks.is_some()
    }

    pub fn len(&self) -> usize {
        self.layer1.outputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sequence_inputs<T: Scalar>(
    seq: &EncodedSequence,
    table: &EmbeddingTable,
    params: &NetworkParameters<T>,
) -> Result<Array2<T>, NetError> {
    if table.dimension() != params.dims().input_dim {
        return Err(NetError::DimensionMismatch {
            what: "embedding dimension",
            expected: params.dims().input_dim,
            found: table.dimension(),
        });
    }
    Ok(embed_valid(seq, table)?.mapv(|v| T::of(v as f64)))
}

/// Runs the network over `inputs` (`L × input_dim`, valid timesteps only).
/// With `masks`, dropout is applied as recorded; without, the pass is the
/// deterministic inference pass.
pub fn forward_with_masks<T: Scalar>(
    inputs: ArrayView2<'_, T>,
    params: &NetworkParameters<T>,
    masks: Option<&DropoutMasks<T>>,
) -> Result<ForwardCache<T>, NetError> {
    let len = inputs.nrows();
    if len == 0 {
        return Err(NetError::EmptySequence);
    }
    let dims = params.dims();
    if inputs.ncols() != dims.input_dim {
        return Err(NetError::DimensionMismatch {
            what: "input width",
            expected: dims.input_dim,
            found: inputs.ncols(),
        });
    }
    if let Some(m) = masks {
        if m.layer1.shape() != [len, params.layer1.output_dim()] || m.layer2.len() != params.final_dim() {
            return Err(NetError::DimensionMismatch {
                what: "dropout mask",
                expected: params.layer1.output_dim(),
                found: m.layer1.ncols(),
            });
        }
    }

    let layer1 = run_layer(&params.layer1, inputs);
    let layer2_in = match masks {
        Some(m) => &layer1.outputs * &m.layer1,
        None => layer1.outputs.clone(),
    };
    let layer2 = run_layer(&params.layer2, layer2_in.view());

    let h2 = params.layer2.hidden_dim();
    let mut representation = Array1::zeros(params.final_dim());
    representation
        .slice_mut(s![..h2])
        .assign(&layer2.outputs.slice(s![len - 1, ..h2]));
    if params.layer2.backward.is_some() {
        representation
            .slice_mut(s![h2..])
            .assign(&layer2.outputs.slice(s![0, h2..]));
    }
    if let Some(m) = masks {
        representation *= &m.layer2;
    }

    let logits = representation.dot(&params.output_w) + &params.output_b;
    let scores = logits.mapv(|z| T::one() / (T::one() + (-z).exp()));
    Ok(ForwardCache {
        fingerprint: params.fingerprint(),
        layer1,
        masks: masks.cloned(),
        layer2,
        representation,
        scores,
    })
}

/// Inference-mode forward pass.
pub fn forward<T: Scalar>(
    seq: &EncodedSequence,
    table: &EmbeddingTable,
    params: &NetworkParameters<T>,
) -> Result<ForwardCache<T>, NetError> {
    if seq.true_length() == 0 {
        return Err(NetError::EmptySequence);
    }
    let inputs = sequence_inputs(seq, table, params)?;
    forward_with_masks(inputs.view(), params, None)
}

/// Training-mode forward pass; dropout masks are drawn from `rng`.
pub fn forward_train<T: Scalar, R: Rng>(
    seq: &EncodedSequence,
    table: &EmbeddingTable,
    params: &NetworkParameters<T>,
    rng: &mut R,
) -> Result<ForwardCache<T>, NetError> {
    if seq.true_length() == 0 {
        return Err(NetError::EmptySequence);
    }
    let inputs = sequence_inputs(seq, table, params)?;
    let masks = DropoutMasks::for_params(inputs.nrows(), params, rng);
    forward_with_masks(inputs.view(), params, Some(&masks))
}

/// Exact gradients of [`bce_loss`] with respect to every parameter.
///
/// The output-layer gradient uses the sigmoid/BCE identity `(s − y)/11`
/// on the unclamped scores.
pub fn backward<T: Scalar>(
    cache: &ForwardCache<T>,
    params: &NetworkParameters<T>,
    target: &LabelVector,
) -> Result<NetworkParameters<T>, NetError> {
    if cache.fingerprint != params.fingerprint() {
        return Err(NetError::StaleCache);
    }
    let len = cache.len();
    let mut grad = params.zeros_like();
    let n = T::of(NUM_LABELS as f64);
    let d_logits = Array1::from_shape_fn(NUM_LABELS, |k| {
        let y = if target.get(k) { T::one() } else { T::zero() };
        (cache.scores[k] - y) / n
    });
    grad.output_b.assign(&d_logits);
    grad.output_w.assign(
        &cache
            .representation
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&d_logits.view().insert_axis(ndarray::Axis(0))),
    );

    let mut d_rep = params.output_w.dot(&d_logits);
    if let Some(m) = &cache.masks {
        d_rep *= &m.layer2;
    }
    let h2 = params.layer2.hidden_dim();
    let mut d_out2 = Array2::zeros((len, params.layer2.output_dim()));
    d_out2.slice_mut(s![len - 1, ..h2]).assign(&d_rep.slice(s![..h2]));
    if params.layer2.backward.is_some() {
        d_out2.slice_mut(s![0, h2..]).assign(&d_rep.slice(s![h2..]));
    }
    let mut d_out1 = backprop_layer(&params.layer2, &cache.layer2, d_out2.view(), &mut grad.layer2);
    if let Some(m) = &cache.masks {
        d_out1 *= &m.layer1;
    }
    backprop_layer(&params.layer1, &cache.layer1, d_out1.view(), &mut grad.layer1);
    Ok(grad)
}

/// Inference plus thresholding.
pub fn predict<T: Scalar>(
    seq: &EncodedSequence,
    table: &EmbeddingTable,
    params: &NetworkParameters<T>,
    threshold: f64,
) -> Result<Prediction, NetError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(NetError::InvalidConfig(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    Ok(forward(seq, table, params)?.prediction(threshold))
}
