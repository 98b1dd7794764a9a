//! GloVe vector loading and token-sequence encoding.

use std::collections::HashMap;
use std::io::BufRead;

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

use crate::normalize::TokenSequence;

/// Row reserved for padding; always zeros.
pub const PAD_INDEX: usize = 0;
/// Row reserved for out-of-vocabulary tokens.
pub const UNK_INDEX: usize = 1;

/// Default sequence length cap.
pub const DEFAULT_MAX_LEN: usize = 60;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {value:?} as a finite number")]
    ParseError { line: usize, value: String },
    #[error("duplicate word {0:?}")]
    DuplicateWord(String),
    #[error("embedding file contains no vectors")]
    Empty,
    #[error("expected dimension must be positive")]
    ZeroDimension,
    #[error("row index {index} out of range for table with {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },
    #[error("reading embedding file: {0}")]
    Io(#[from] std::io::Error),
}

/// Word → vector table with reserved pad and unk rows.
///
/// Row 0 is the pad row, row 1 the unk row (mean of all loaded vectors), and
/// words follow in file order from row 2.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f32>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory `(word, vector)` pairs.
    pub fn from_pairs<I>(dimension: usize, pairs: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        if dimension == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut flat: Vec<f32> = vec![0.0; 2 * dimension];
        for (i, (word, vector)) in pairs.into_iter().enumerate() {
            if vector.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    line: i + 1,
                    expected: dimension,
                    found: vector.len(),
                });
            }
            if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
                return Err(EmbeddingError::ParseError {
                    line: i + 1,
                    value: bad.to_string(),
                });
            }
            if index.insert(word.clone(), words.len() + 2).is_some() {
                return Err(EmbeddingError::DuplicateWord(word));
            }
            words.push(word);
            flat.extend_from_slice(&vector);
        }
        if words.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        let mut vectors = Array2::from_shape_vec((words.len() + 2, dimension), flat)
            .expect("row count matches flat buffer");

        // Accumulate the mean in f64 so the unk row does not depend on
        // summation drift over large vocabularies.
        let mut mean = vec![0.0f64; dimension];
        for row in vectors.rows().into_iter().skip(2) {
            for (m, &v) in mean.iter_mut().zip(row.iter()) {
                *m += v as f64;
            }
        }
        let n = words.len() as f64;
        for (dst, m) in vectors.row_mut(UNK_INDEX).iter_mut().zip(&mean) {
            *dst = (m / n) as f32;
        }
        Ok(EmbeddingTable {
            dimension,
            words,
            index,
            vectors,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of words, excluding the pad and unk rows.
    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn rows(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn row_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, row: usize) -> Option<ArrayView1<'_, f32>> {
        (row < self.rows()).then(|| self.vectors.row(row))
    }

    pub fn word_vector(&self, word: &str) -> Option<ArrayView1<'_, f32>> {
        self.row_of(word).map(|r| self.vectors.row(r))
    }

    pub fn unk_vector(&self) -> ArrayView1<'_, f32> {
        self.vectors.row(UNK_INDEX)
    }

    pub fn matrix(&self) -> &Array2<f32> {
        &self.vectors
    }
}

/// Reads a GloVe text file: one `word v1 ... vD` line per word.
///
/// Blank lines are skipped. Line numbers in errors are 1-based.
pub fn load_glove<R: BufRead>(source: R, expected_dim: usize) -> Result<EmbeddingTable, EmbeddingError> {
    if expected_dim == 0 {
        return Err(EmbeddingError::ZeroDimension);
    }
    let mut pairs = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if values.len() != expected_dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected: expected_dim,
                found: values.len(),
            });
        }
        let mut vector = Vec::with_capacity(expected_dim);
        for v in values {
            match v.parse::<f32>() {
                Ok(x) if x.is_finite() => vector.push(x),
                _ => {
                    return Err(EmbeddingError::ParseError {
                        line: line_no,
                        value: v.to_string(),
                    })
                }
            }
        }
        if seen.insert(word.to_string(), ()).is_some() {
            return Err(EmbeddingError::DuplicateWord(word.to_string()));
        }
        pairs.push((word.to_string(), vector));
    }
    EmbeddingTable::from_pairs(expected_dim, pairs)
}

/// Counts the values on the first non-blank line, for callers that do not
/// know the file's dimension up front.
pub fn sniff_dimension<R: BufRead>(source: R) -> Result<Option<usize>, EmbeddingError> {
    for line in source.lines() {
        let line = line?;
        let n = line.split_whitespace().count();
        if n > 0 {
            return Ok(Some(n - 1));
        }
    }
    Ok(None)
}

/// Fixed-length row indices plus the count of real (non-pad) positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedSequence {
    indices: Vec<usize>,
    true_length: usize,
}

impl EncodedSequence {
    /// Builds a sequence directly; positions at or past `true_length` are forced to pad.
    pub fn from_indices(mut indices: Vec<usize>, true_length: usize) -> Self {
        let true_length = true_length.min(indices.len());
        for i in indices.iter_mut().skip(true_length) {
            *i = PAD_INDEX;
        }
        EncodedSequence {
            indices,
            true_length,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn true_length(&self) -> usize {
        self.true_length
    }

    pub fn max_len(&self) -> usize {
        self.indices.len()
    }

    pub fn valid(&self) -> &[usize] {
        &self.indices[..self.true_length]
    }
}

/// Maps tokens to table rows, truncating at the tail and padding to `max_len`.
pub fn encode(tokens: &TokenSequence, table: &EmbeddingTable, max_len: usize) -> EncodedSequence {
    let mut indices = vec![PAD_INDEX; max_len];
    let mut true_length = 0;
    for (slot, tok) in indices.iter_mut().zip(tokens.iter()) {
        *slot = table.row_of(tok).unwrap_or(UNK_INDEX);
        true_length += 1;
    }
    EncodedSequence {
        indices,
        true_length,
    }
}

/// Looks up every position, pad rows included, as a `max_len × dimension` matrix.
pub fn embed(seq: &EncodedSequence, table: &EmbeddingTable) -> Result<Array2<f32>, EmbeddingError> {
    let mut out = Array2::zeros((seq.max_len(), table.dimension()));
    for (t, &idx) in seq.indices().iter().enumerate() {
        let row = table.vector(idx).ok_or(EmbeddingError::IndexOutOfRange {
            index: idx,
            rows: table.rows(),
        })?;
        out.row_mut(t).assign(&row);
    }
    Ok(out)
}

/// Rows `0..true_length` only; what the recurrent layers consume.
pub fn embed_valid(seq: &EncodedSequence, table: &EmbeddingTable) -> Result<Array2<f32>, EmbeddingError> {
    let mut out = Array2::zeros((seq.true_length(), table.dimension()));
    for (t, &idx) in seq.valid().iter().enumerate() {
        let row = table.vector(idx).ok_or(EmbeddingError::IndexOutOfRange {
            index: idx,
            rows: table.rows(),
        })?;
        out.row_mut(t).assign(&row);
    }
    Ok(out)
}
