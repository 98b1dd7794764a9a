//! Model file format.
//!
//! ```text
//! "SPNET"             5 bytes
//! version             u8
//! header length       u32 LE
//! header              UTF-8 JSON: architecture, dims, dropout, labels, array layout
//! per array:          u32 LE element count, then f32 LE values
//! crc32               u32 LE over every preceding byte
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::params::{Architecture, LayerParams, NetworkParameters, RecurrentLayer};
use super::NetError;
use crate::labels::{LABEL_NAMES, NUM_LABELS};

pub const MAGIC: &[u8; 5] = b"SPNET";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ArraySpec {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    architecture: String,
    input_dim: usize,
    hidden1: usize,
    hidden2: usize,
    num_labels: usize,
    labels: Vec<String>,
    dropout_rate: f64,
    rng_seed: u64,
    arrays: Vec<ArraySpec>,
    #[serde(default)]
    annotations: BTreeMap<String, String>,
}

pub fn save_model<W: Write>(params: &NetworkParameters<f32>, out: W) -> Result<(), NetError> {
    save_model_with_annotations(params, &BTreeMap::new(), out)
}

/// Writes the model plus free-form string annotations stored in the header.
pub fn save_model_with_annotations<W: Write>(
    params: &NetworkParameters<f32>,
    annotations: &BTreeMap<String, String>,
    mut out: W,
) -> Result<(), NetError> {
    params.validate()?;
    let dims = params.dims();
    let header = Header {
        architecture: params.architecture.tag().to_string(),
        input_dim: dims.input_dim,
        hidden1: dims.hidden1,
        hidden2: dims.hidden2,
        num_labels: NUM_LABELS,
        labels: LABEL_NAMES.iter().map(|s| s.to_string()).collect(),
        dropout_rate: params.dropout_rate,
        rng_seed: params.rng_seed,
        arrays: params
            .shapes()
            .into_iter()
            .map(|(name, shape)| ArraySpec { name, shape })
            .collect(),
        annotations: annotations.clone(),
    };
    let header_bytes = serde_json::to_vec(&header).expect("header serializes");

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(FORMAT_VERSION);
    buf.extend_from_slice(&(header_bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_bytes);
    for (_, tensor) in params.tensors() {
        buf.extend_from_slice(&(tensor.len() as u32).to_le_bytes());
        for v in tensor {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&buf)?;
    Ok(())
}

pub fn load_model<R: Read>(input: R) -> Result<NetworkParameters<f32>, NetError> {
    load_model_with_annotations(input).map(|(p, _)| p)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| NetError::CorruptPayload("unexpected end of payload".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>, NetError> {
        let bytes = self.take(count.checked_mul(4).ok_or_else(|| {
            NetError::CorruptPayload("array length overflow".into())
        })?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

pub fn load_model_with_annotations<R: Read>(
    mut input: R,
) -> Result<(NetworkParameters<f32>, BTreeMap<String, String>), NetError> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() < MAGIC.len() + 1 || &data[..MAGIC.len()] != MAGIC {
        return Err(NetError::CorruptPayload("missing SPNET magic".into()));
    }
    let version = data[MAGIC.len()];
    if version != FORMAT_VERSION {
        return Err(NetError::FormatVersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if data.len() < MAGIC.len() + 1 + 4 + 4 {
        return Err(NetError::CorruptPayload("payload too short".into()));
    }
    let (body, crc_bytes) = data.split_at(data.len() - 4);
    let stored = u32::from_le_bytes([crc_bytes[0], crc_bytes[1], crc_bytes[2], crc_bytes[3]]);
    if crc32fast::hash(body) != stored {
        return Err(NetError::CorruptPayload("checksum mismatch".into()));
    }

    let mut cur = Cursor {
        data: body,
        pos: MAGIC.len() + 1,
    };
    let header_len = cur.u32()? as usize;
    let header: Header = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| NetError::CorruptPayload(format!("header: {e}")))?;
    if header.num_labels != NUM_LABELS
        || header.labels.iter().map(String::as_str).ne(LABEL_NAMES.iter().copied())
    {
        return Err(NetError::CorruptPayload("label set differs from the canonical 11".into()));
    }
    let architecture: Architecture = header.architecture.parse()?;

    let mut arrays = BTreeMap::new();
    for spec in &header.arrays {
        let count = cur.u32()? as usize;
        let expected: usize = spec.shape.iter().product();
        if count != expected {
            return Err(NetError::CorruptPayload(format!(
                "array {} holds {count} values, shape says {expected}",
                spec.name
            )));
        }
        arrays.insert(spec.name.clone(), (spec.shape.clone(), cur.f32s(count)?));
    }
    if cur.pos != body.len() {
        return Err(NetError::CorruptPayload("trailing bytes after arrays".into()));
    }

    let mut store = ArrayStore(arrays);
    let mut layer = |prefix: &str| -> Result<LayerParams<f32>, NetError> {
        Ok(LayerParams {
            w: store.matrix(&format!("{prefix}.w"))?,
            u: store.matrix(&format!("{prefix}.u"))?,
            b: store.vector(&format!("{prefix}.b"))?,
        })
    };
    let bidirectional = architecture == Architecture::BdLstm;
    let layer1 = RecurrentLayer {
        forward: layer("layer1.fwd")?,
        backward: if bidirectional { Some(layer("layer1.bwd")?) } else { None },
    };
    let layer2 = RecurrentLayer {
        forward: layer("layer2.fwd")?,
        backward: if bidirectional { Some(layer("layer2.bwd")?) } else { None },
    };
    let params = NetworkParameters {
        architecture,
        layer1,
        layer2,
        output_w: store.matrix("output.w")?,
        output_b: store.vector("output.b")?,
        dropout_rate: header.dropout_rate,
        rng_seed: header.rng_seed,
    };
    if !store.0.is_empty() {
        return Err(NetError::CorruptPayload("unexpected extra arrays".into()));
    }
    params
        .validate()
        .map_err(|e| NetError::CorruptPayload(format!("inconsistent shapes: {e}")))?;
    let dims = params.dims();
    if (dims.input_dim, dims.hidden1, dims.hidden2) != (header.input_dim, header.hidden1, header.hidden2) {
        return Err(NetError::CorruptPayload("header dims disagree with arrays".into()));
    }
    Ok((params, header.annotations))
}

struct ArrayStore(BTreeMap<String, (Vec<usize>, Vec<f32>)>);

impl ArrayStore {
    fn take(&mut self, name: &str, rank: usize) -> Result<(Vec<usize>, Vec<f32>), NetError> {
        let (shape, values) = self
            .0
            .remove(name)
            .ok_or_else(|| NetError::CorruptPayload(format!("missing array {name}")))?;
        if shape.len() != rank {
            return Err(NetError::CorruptPayload(format!("{name} has rank {}", shape.len())));
        }
        Ok((shape, values))
    }

    fn matrix(&mut self, name: &str) -> Result<Array2<f32>, NetError> {
        let (shape, values) = self.take(name, 2)?;
        Array2::from_shape_vec((shape[0], shape[1]), values)
            .map_err(|e| NetError::CorruptPayload(format!("{name}: {e}")))
    }

    fn vector(&mut self, name: &str) -> Result<Array1<f32>, NetError> {
        Ok(Array1::from_vec(self.take(name, 1)?.1))
    }
}
