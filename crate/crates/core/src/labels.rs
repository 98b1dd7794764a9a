//! The fixed sentiment label set and its binary vector encoding.

use std::fmt;

/// Number of sentiment labels.
pub const NUM_LABELS: usize = 11;

/// Canonical label names, in slot order.
pub const LABEL_NAMES: [&str; NUM_LABELS] = [
    "optimistic",
    "thankful",
    "empathetic",
    "pessimistic",
    "anxious",
    "sad",
    "annoyed",
    "denial",
    "official report",
    "surprise",
    "joking",
];

/// One sentiment label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sentiment {
    Optimistic,
    Thankful,
    Empathetic,
    Pessimistic,
    Anxious,
    Sad,
    Annoyed,
    Denial,
    OfficialReport,
    Surprise,
    Joking,
}

impl Sentiment {
    pub const ALL: [Sentiment; NUM_LABELS] = [
        Sentiment::Optimistic,
        Sentiment::Thankful,
        Sentiment::Empathetic,
        Sentiment::Pessimistic,
        Sentiment::Anxious,
        Sentiment::Sad,
        Sentiment::Annoyed,
        Sentiment::Denial,
        Sentiment::OfficialReport,
        Sentiment::Surprise,
        Sentiment::Joking,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        LABEL_NAMES[self.index()]
    }

    /// Case-insensitive lookup by canonical name; underscores count as spaces.
    pub fn from_name(name: &str) -> Option<Sentiment> {
        let wanted = name.trim().to_lowercase().replace('_', " ");
        LABEL_NAMES
            .iter()
            .position(|n| *n == wanted)
            .map(|i| Sentiment::ALL[i])
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An 11-slot binary vector in canonical label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelVector([bool; NUM_LABELS]);

impl LabelVector {
    pub fn new(bits: [bool; NUM_LABELS]) -> Self {
        LabelVector(bits)
    }

    pub fn empty() -> Self {
        LabelVector([false; NUM_LABELS])
    }

    pub fn from_sentiments(active: &[Sentiment]) -> Self {
        let mut bits = [false; NUM_LABELS];
        for s in active {
            bits[s.index()] = true;
        }
        LabelVector(bits)
    }

    /// Builds a vector from 0/1 integers; `None` on any other value or wrong length.
    pub fn from_u8s(values: &[u8]) -> Option<Self> {
        if values.len() != NUM_LABELS {
            return None;
        }
        let mut bits = [false; NUM_LABELS];
        for (b, &v) in bits.iter_mut().zip(values) {
            *b = match v {
                0 => false,
                1 => true,
                _ => return None,
            };
        }
        Some(LabelVector(bits))
    }

    /// Thresholds scores element-wise: slot k is set iff `scores[k] >= threshold`.
    pub fn from_scores(scores: &[f64; NUM_LABELS], threshold: f64) -> Self {
        let mut bits = [false; NUM_LABELS];
        for (b, &s) in bits.iter_mut().zip(scores) {
            *b = s >= threshold;
        }
        LabelVector(bits)
    }

    pub fn bits(&self) -> &[bool; NUM_LABELS] {
        &self.0
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn set(&mut self, k: usize, value: bool) {
        self.0[k] = value;
    }

    pub fn contains(&self, s: Sentiment) -> bool {
        self.0[s.index()]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn active(&self) -> impl Iterator<Item = Sentiment> + '_ {
        Sentiment::ALL.iter().copied().filter(|s| self.contains(*s))
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.0;
        for b in bits.iter_mut() {
            *b = !*b;
        }
        LabelVector(bits)
    }

    pub fn as_f64(&self) -> [f64; NUM_LABELS] {
        let mut out = [0.0; NUM_LABELS];
        for (o, &b) in out.iter_mut().zip(&self.0) {
            *o = if b { 1.0 } else { 0.0 };
        }
        out
    }
}

impl AsRef<[bool]> for LabelVector {
    fn as_ref(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.active().map(Sentiment::name).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}
