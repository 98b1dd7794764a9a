use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetError, Scalar};
use crate::labels::NUM_LABELS;

/// Reference dropout rate.
pub const DEFAULT_DROPOUT: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Lstm,
    BdLstm,
}

impl Architecture {
    pub fn tag(self) -> &'static str {
        match self {
            Architecture::Lstm => "lstm",
            Architecture::BdLstm => "bdlstm",
        }
    }

    pub fn directions(self) -> usize {
        match self {
            Architecture::Lstm => 1,
            Architecture::BdLstm => 2,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lstm" => Ok(Architecture::Lstm),
            "bdlstm" | "bd-lstm" | "bilstm" => Ok(Architecture::BdLstm),
            other => Err(NetError::InvalidConfig(format!("unknown architecture {other:?}"))),
        }
    }
}

/// Gate blocks, in the column order used by [`LayerParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];
}

/// Weights of one LSTM direction.
///
/// The four gates are stored side by side: `w` is `input_dim × 4·hidden`,
/// `u` is `hidden × 4·hidden` and `b` has `4·hidden` entries, with column
/// block `g` holding gate `g` in [`Gate`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub w: Array2<T>,
    pub u: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LayerParams {
            w: Array2::zeros((input_dim, 4 * hidden_dim)),
            u: Array2::zeros((hidden_dim, 4 * hidden_dim)),
            b: Array1::zeros(4 * hidden_dim),
        }
    }

    /// Glorot-uniform gate matrices, forget bias 1, other biases 0.
    pub fn glorot<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let w_limit = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let u_limit = (6.0 / (2 * hidden_dim) as f64).sqrt();
        for gate in Gate::ALL {
            let cols = gate_cols(gate, hidden_dim);
            p.w.slice_mut(s![.., cols.clone()])
                .mapv_inplace(|_| T::of(rng.gen_range(-w_limit..w_limit)));
            p.u.slice_mut(s![.., cols])
                .mapv_inplace(|_| T::of(rng.gen_range(-u_limit..u_limit)));
        }
        p.b.slice_mut(s![gate_cols(Gate::Forget, hidden_dim)]).fill(T::one());
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn gate_w(&self, gate: Gate) -> ArrayView2<'_, T> {
        self.w.slice(s![.., gate_cols(gate, self.hidden_dim())])
    }

    pub fn gate_u(&self, gate: Gate) -> ArrayView2<'_, T> {
        self.u.slice(s![.., gate_cols(gate, self.hidden_dim())])
    }

    pub fn gate_b(&self, gate: Gate) -> ArrayView1<'_, T> {
        self.b.slice(s![gate_cols(gate, self.hidden_dim())])
    }

    pub(crate) fn check_shapes(&self) -> Result<(), NetError> {
        let h = self.hidden_dim();
        if self.u.ncols() != 4 * h || self.w.ncols() != 4 * h || self.b.len() != 4 * h {
            return Err(NetError::DimensionMismatch {
                what: "gate block width",
                expected: 4 * h,
                found: self.w.ncols(),
            });
        }
        Ok(())
    }
}

pub(crate) fn gate_cols(gate: Gate, hidden: usize) -> std::ops::Range<usize> {
    let g = gate as usize;
    g * hidden..(g + 1) * hidden
}

/// One recurrent layer: a forward direction and, for BD-LSTM, a backward one.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentLayer<T> {
    pub forward: LayerParams<T>,
    pub backward: Option<LayerParams<T>>,
}

impl<T: Scalar> RecurrentLayer<T> {
    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    /// Width of the per-timestep output (hidden size times direction count).
    pub fn output_dim(&self) -> usize {
        self.hidden_dim() * if self.backward.is_some() { 2 } else { 1 }
    }

    fn directions(&self) -> impl Iterator<Item = &LayerParams<T>> {
        std::iter::once(&self.forward).chain(self.backward.as_ref())
    }
}

/// Layer sizes. The reference configuration is 300 → 128 → 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkDims {
    pub input_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
}

impl Default for NetworkDims {
    fn default() -> Self {
        NetworkDims {
            input_dim: 300,
            hidden1: 128,
            hidden2: 64,
        }
    }
}

/// All trainable weights plus the settings needed to rebuild the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParameters<T> {
    pub architecture: Architecture,
    pub layer1: RecurrentLayer<T>,
    pub layer2: RecurrentLayer<T>,
    /// `final_hidden × 11`.
    pub output_w: Array2<T>,
    pub output_b: Array1<T>,
    pub dropout_rate: f64,
    pub rng_seed: u64,
}

impl<T: Scalar> NetworkParameters<T> {
    /// Freshly initialized parameters, fully determined by `seed`.
    pub fn init(
        architecture: Architecture,
        dims: NetworkDims,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self, NetError> {
        validate_dims(dims)?;
        validate_dropout(dropout_rate)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dirs = architecture.directions();
        let layer = |input: usize, hidden: usize, rng: &mut ChaCha8Rng| RecurrentLayer {
            forward: LayerParams::glorot(input, hidden, rng),
            backward: (dirs == 2).then(|| LayerParams::glorot(input, hidden, rng)),
        };
        let layer1 = layer(dims.input_dim, dims.hidden1, &mut rng);
        let layer2 = layer(dims.hidden1 * dirs, dims.hidden2, &mut rng);
        let final_dim = dims.hidden2 * dirs;
        let limit = (6.0 / (final_dim + NUM_LABELS) as f64).sqrt();
        let output_w = Array2::from_shape_fn((final_dim, NUM_LABELS), |_| {
            T::of(rng.gen_range(-limit..limit))
        });
        Ok(NetworkParameters {
            architecture,
            layer1,
            layer2,
            output_w,
            output_b: Array1::zeros(NUM_LABELS),
            dropout_rate,
            rng_seed: seed,
        })
    }

    /// Same shapes and settings, every tensor zeroed. Used for gradients and
    /// optimizer moments.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }

    pub fn dims(&self) -> NetworkDims {
        NetworkDims {
            input_dim: self.layer1.forward.input_dim(),
            hidden1: self.layer1.hidden_dim(),
            hidden2: self.layer2.hidden_dim(),
        }
    }

    pub fn final_dim(&self) -> usize {
        self.layer2.output_dim()
    }

    /// Every tensor as a flat slice, in the fixed order used for
    /// serialization and optimizer state.
    pub fn tensors(&self) -> Vec<(String, &[T])> {
        let mut out = Vec::new();
        for (lname, layer) in [("layer1", &self.layer1), ("layer2", &self.layer2)] {
            for (dname, p) in ["fwd", "bwd"].iter().zip(layer.directions()) {
                out.push((format!("{lname}.{dname}.w"), flat(&p.w)));
                out.push((format!("{lname}.{dname}.u"), flat(&p.u)));
                out.push((format!("{lname}.{dname}.b"), flat1(&p.b)));
            }
        }
        out.push(("output.w".to_string(), flat(&self.output_w)));
        out.push(("output.b".to_string(), flat1(&self.output_b)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [T])> {
        let mut out = Vec::new();
        for (lname, layer) in [("layer1", &mut self.layer1), ("layer2", &mut self.layer2)] {
            let dirs = std::iter::once(&mut layer.forward).chain(layer.backward.as_mut());
            for (dname, p) in ["fwd", "bwd"].iter().zip(dirs) {
                out.push((format!("{lname}.{dname}.w"), flat_mut(&mut p.w)));
                out.push((format!("{lname}.{dname}.u"), flat_mut(&mut p.u)));
                out.push((format!("{lname}.{dname}.b"), flat1_mut(&mut p.b)));
            }
        }
        out.push(("output.w".to_string(), flat_mut(&mut self.output_w)));
        out.push(("output.b".to_string(), flat1_mut(&mut self.output_b)));
        out
    }

    /// Tensor names with their 2-D (or 1-D) shapes, in `tensors()` order.
    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (lname, layer) in [("layer1", &self.layer1), ("layer2", &self.layer2)] {
            for (dname, p) in ["fwd", "bwd"].iter().zip(layer.directions()) {
                out.push((format!("{lname}.{dname}.w"), p.w.shape().to_vec()));
                out.push((format!("{lname}.{dname}.u"), p.u.shape().to_vec()));
                out.push((format!("{lname}.{dname}.b"), p.b.shape().to_vec()));
            }
        }
        out.push(("output.w".to_string(), self.output_w.shape().to_vec()));
        out.push(("output.b".to_string(), self.output_b.shape().to_vec()));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// FNV-1a over every parameter's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, t) in self.tensors() {
            for v in t {
                hash ^= v.to_f64().unwrap_or(f64::NAN).to_bits();
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }

    /// Converts every tensor to another float type.
    pub fn cast<U: Scalar>(&self) -> NetworkParameters<U> {
        let layer = |l: &RecurrentLayer<T>| RecurrentLayer {
            forward: cast_layer(&l.forward),
            backward: l.backward.as_ref().map(cast_layer),
        };
        NetworkParameters {
            architecture: self.architecture,
            layer1: layer(&self.layer1),
            layer2: layer(&self.layer2),
            output_w: self.output_w.mapv(|v| U::of(v.to_f64().unwrap_or(f64::NAN))),
            output_b: self.output_b.mapv(|v| U::of(v.to_f64().unwrap_or(f64::NAN))),
            dropout_rate: self.dropout_rate,
            rng_seed: self.rng_seed,
        }
    }

    /// Checks structural consistency between layers and the architecture tag.
    pub fn validate(&self) -> Result<(), NetError> {
        validate_dropout(self.dropout_rate)?;
        let dirs = self.architecture.directions();
        for (layer, name) in [(&self.layer1, "layer1"), (&self.layer2, "layer2")] {
            if layer.backward.is_some() != (dirs == 2) {
                return Err(NetError::InvalidConfig(format!(
                    "{name} direction count does not match architecture {}",
                    self.architecture
                )));
            }
            for p in layer.directions() {
                p.check_shapes()?;
                if p.hidden_dim() != layer.hidden_dim() || p.input_dim() != layer.forward.input_dim() {
                    return Err(NetError::DimensionMismatch {
                        what: "direction shapes",
                        expected: layer.hidden_dim(),
                        found: p.hidden_dim(),
                    });
                }
            }
        }
        if self.layer2.forward.input_dim() != self.layer1.output_dim() {
            return Err(NetError::DimensionMismatch {
                what: "layer2 input",
                expected: self.layer1.output_dim(),
                found: self.layer2.forward.input_dim(),
            });
        }
        if self.output_w.shape() != [self.final_dim(), NUM_LABELS] || self.output_b.len() != NUM_LABELS {
            return Err(NetError::DimensionMismatch {
                what: "output layer",
                expected: self.final_dim(),
                found: self.output_w.nrows(),
            });
        }
        Ok(())
    }
}

fn cast_layer<T: Scalar, U: Scalar>(p: &LayerParams<T>) -> LayerParams<U> {
    let c = |v: &T| U::of(v.to_f64().unwrap_or(f64::NAN));
    LayerParams {
        w: p.w.map(c),
        u: p.u.map(c),
        b: p.b.map(c),
    }
}

fn flat<T>(a: &Array2<T>) -> &[T] {
    a.as_slice().expect("parameter matrices are contiguous")
}

fn flat1<T>(a: &Array1<T>) -> &[T] {
    a.as_slice().expect("parameter vectors are contiguous")
}

fn flat_mut<T>(a: &mut Array2<T>) -> &mut [T] {
    a.as_slice_mut().expect("parameter matrices are contiguous")
}

fn flat1_mut<T>(a: &mut Array1<T>) -> &mut [T] {
    a.as_slice_mut().expect("parameter vectors are contiguous")
}

pub(crate) fn validate_dropout(rate: f64) -> Result<(), NetError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NetError::InvalidConfig(format!(
            "dropout rate {rate} outside [0, 1)"
        )));
    }
    Ok(())
}

fn validate_dims(dims: NetworkDims) -> Result<(), NetError> {
    if dims.input_dim == 0 || dims.hidden1 == 0 || dims.hidden2 == 0 {
        return Err(NetError::InvalidConfig(format!("zero-sized layer in {dims:?}")));
    }
    Ok(())
}
