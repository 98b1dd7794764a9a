//! Tweet text normalization and tokenization.
//!
//! `normalize_tweet` runs a fixed sequence of rewrites over raw tweet text:
//!
//! 1. Unicode lowercasing.
//! 2. `#` replaced by a space, so `#COVID` keeps its word.
//! 3. Emoji joiners and variation selectors (U+200D, U+FE0E, U+FE0F) removed.
//! 4. URLs and `@mentions` removed.
//! 5. Emoji entries of the [`RewriteTable`] replaced by their words.
//! 6. Any remaining emoji codepoint dropped.
//! 7. Word entries of the [`RewriteTable`] replaced by their words.
//! 8. Whitespace collapsed and trimmed.
//!
//! Every removal leaves a space behind and every replacement is padded with
//! spaces, so no step can glue fragments into a new match for an earlier
//! step. That is what makes the function idempotent.

use std::collections::HashMap;
use std::io::Read;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S*").expect("url regex"));
static MENTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@[\p{L}\p{N}_]+").expect("mention regex"));
static PICTOGRAPH_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"[\p{Extended_Pictographic}\p{Emoji_Modifier}\x{1F1E6}-\x{1F1FF}\x{20E3}\x{E0020}-\x{E007F}]",
    )
    .expect("pictograph regex")
});

const JOINERS: [char; 3] = ['\u{200D}', '\u{FE0E}', '\u{FE0F}'];

/// The rewrites shown as examples for the tweet corpus this pipeline targets.
const DEFAULT_ENTRIES: [(&str, &str); 9] = [
    ("omg", "oh my god"),
    ("btw", "by the way"),
    ("socialdistancing", "social distancing"),
    ("\u{1F60A}", "smiling face"),
    ("\u{2639}", "sad face"),
    ("\u{1F6CF}", "bed"),
    ("\u{1F525}", "fire"),
    ("\u{1F609}", "wink"),
    ("\u{1F602}", "laugh"),
];

#[derive(Debug, Error)]
pub enum RewriteTableError {
    #[error("line {line}: expected `pattern<TAB>replacement`")]
    MissingTab { line: usize },
    #[error("empty pattern")]
    EmptyPattern,
    #[error("duplicate pattern {0:?}")]
    DuplicatePattern(String),
    #[error("replacement {replacement:?} for {pattern:?} must be lowercase ASCII words")]
    InvalidReplacement { pattern: String, replacement: String },
    #[error("pattern {0:?} can never match normalized text")]
    UnmatchablePattern(String),
    #[error("replacement for {pattern:?} contains rewritable pattern {inner:?}")]
    SelfReferential { pattern: String, inner: String },
    #[error("reading rewrite table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteEntry {
    pub pattern: String,
    pub replacement: String,
}

/// Ordered pattern → replacement rewrites.
///
/// Patterns are stored lowercased with emoji joiners removed, the form they
/// take in text by the time rewrites run. Patterns containing an emoji
/// codepoint match anywhere; other patterns match whole words only.
#[derive(Debug, Clone)]
pub struct RewriteTable {
    entries: Vec<RewriteEntry>,
    lookup: HashMap<String, String>,
    emoji_re: Option<Regex>,
    word_re: Option<Regex>,
}

fn canonical_pattern(raw: &str) -> String {
    raw.to_lowercase().chars().filter(|c| !JOINERS.contains(c)).collect()
}

fn is_emoji_pattern(pattern: &str) -> bool {
    PICTOGRAPH_RE.is_match(pattern)
}

fn char_matches(re: &Regex, c: char) -> bool {
    let mut buf = [0u8; 4];
    re.is_match(c.encode_utf8(&mut buf))
}

fn is_word_char(c: char) -> bool {
    static WORD_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\w$").expect("word regex"));
    char_matches(&WORD_RE, c)
}

fn is_mark(c: char) -> bool {
    static MARK_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{M}$").expect("mark regex"));
    char_matches(&MARK_RE, c)
}

/// Builds a leftmost-first alternation; longer patterns come first so a
/// prefix never shadows a longer entry.
fn build_alternation<'a>(patterns: impl Iterator<Item = &'a str>, word_bounded: bool) -> Option<Regex> {
    let mut sorted: Vec<&str> = patterns.collect();
    if sorted.is_empty() {
        return None;
    }
    sorted.sort_by_key(|p| std::cmp::Reverse(p.chars().count()));
    let alts: Vec<String> = sorted
        .iter()
        .map(|p| {
            let mut alt = String::new();
            let starts_word = p.chars().next().is_some_and(is_word_char);
            let ends_word = p.chars().last().is_some_and(is_word_char);
            if word_bounded && starts_word {
                alt.push_str(r"\b");
            }
            alt.push_str(&regex::escape(p));
            if word_bounded && ends_word {
                alt.push_str(r"\b");
            }
            alt
        })
        .collect();
    Some(Regex::new(&alts.join("|")).expect("escaped alternation is a valid regex"))
}

impl RewriteTable {
    /// The nine-entry default table.
    pub fn default_table() -> Self {
        Self::from_entries(DEFAULT_ENTRIES.iter().map(|(p, r)| (p.to_string(), r.to_string())))
            .expect("default rewrite table is valid")
    }

    pub fn empty() -> Self {
        Self::from_entries(std::iter::empty()).expect("empty table is valid")
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, RewriteTableError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut out = Vec::new();
        let mut lookup = HashMap::new();
        for (raw_pattern, raw_replacement) in entries {
            let pattern = canonical_pattern(raw_pattern.trim());
            if pattern.is_empty() {
                return Err(RewriteTableError::EmptyPattern);
            }
            if pattern.chars().any(|c| c.is_whitespace() || c == '#' || c == '@') {
                return Err(RewriteTableError::UnmatchablePattern(raw_pattern));
            }
            let replacement = raw_replacement.split_whitespace().collect::<Vec<_>>().join(" ");
            if replacement.is_empty()
                || !replacement.chars().all(|c| c.is_ascii_lowercase() || c == ' ')
            {
                return Err(RewriteTableError::InvalidReplacement {
                    pattern: raw_pattern,
                    replacement: raw_replacement,
                });
            }
            if lookup.insert(pattern.clone(), replacement.clone()).is_some() {
                return Err(RewriteTableError::DuplicatePattern(pattern));
            }
            out.push(RewriteEntry { pattern, replacement });
        }

        let emoji_re = build_alternation(
            out.iter().map(|e| e.pattern.as_str()).filter(|p| is_emoji_pattern(p)),
            false,
        );
        let word_re = build_alternation(
            out.iter().map(|e| e.pattern.as_str()).filter(|p| !is_emoji_pattern(p)),
            true,
        );
        if let Some(re) = &word_re {
            for e in &out {
                if let Some(m) = re.find(&e.replacement) {
                    return Err(RewriteTableError::SelfReferential {
                        pattern: e.pattern.clone(),
                        inner: m.as_str().to_string(),
                    });
                }
            }
        }
        Ok(RewriteTable {
            entries: out,
            lookup,
            emoji_re,
            word_re,
        })
    }

    /// Parses the tab-separated table format. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, RewriteTableError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern, replacement) = line
                .split_once('\t')
                .ok_or(RewriteTableError::MissingTab { line: i + 1 })?;
            entries.push((pattern.to_string(), replacement.to_string()));
        }
        Self::from_entries(entries)
    }

    pub fn load<R: Read>(mut reader: R) -> Result<Self, RewriteTableError> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::parse(&text)
    }

    /// Appends entries from `other`; a pattern present in both is an error.
    pub fn extended_with(&self, other: &RewriteTable) -> Result<Self, RewriteTableError> {
        Self::from_entries(
            self.entries
                .iter()
                .chain(other.entries.iter())
                .map(|e| (e.pattern.clone(), e.replacement.clone())),
        )
    }

    pub fn entries(&self) -> &[RewriteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn replacement(&self, pattern: &str) -> Option<&str> {
        self.lookup.get(&canonical_pattern(pattern)).map(String::as_str)
    }

    /// Serializes back to the tab-separated file format.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&e.pattern);
            s.push('\t');
            s.push_str(&e.replacement);
            s.push('\n');
        }
        s
    }

    fn apply(&self, re: &Option<Regex>, text: &str) -> String {
        match re {
            Some(re) => re
                .replace_all(text, |caps: &regex::Captures<'_>| {
                    let key = &caps[0];
                    format!(" {} ", self.lookup.get(key).map(String::as_str).unwrap_or(""))
                })
                .into_owned(),
            None => text.to_string(),
        }
    }
}

impl Default for RewriteTable {
    fn default() -> Self {
        Self::default_table()
    }
}

/// Normalizes raw tweet text. Total, deterministic and idempotent.
pub fn normalize_tweet(raw: &str, table: &RewriteTable) -> String {
    let lowered = raw.to_lowercase().replace('#', " ");
    let unjoined: String = lowered.chars().filter(|c| !JOINERS.contains(c)).collect();
    let no_urls = URL_RE.replace_all(&unjoined, " ");
    let no_mentions = MENTION_RE.replace_all(&no_urls, " ");
    let emoji_done = table.apply(&table.emoji_re, &no_mentions);
    let dropped = PICTOGRAPH_RE.replace_all(&emoji_done, " ");
    let words_done = table.apply(&table.word_re, &dropped);
    words_done.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid token {0:?}")]
pub struct InvalidToken(pub String);

/// Lowercase word tokens: letters, digits, combining marks, apostrophe and hyphen.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(Vec<String>);

fn is_token_char(c: char) -> bool {
    c == '\'' || c == '-' || c.is_alphanumeric() || is_mark(c)
}

fn is_valid_token(t: &str) -> bool {
    !t.is_empty()
        && t.chars().all(|c| is_token_char(c) && !c.is_uppercase())
        && t.chars().any(char::is_alphanumeric)
}

impl TokenSequence {
    /// Validates each word against the token alphabet.
    pub fn from_words<I, S>(words: I) -> Result<Self, InvalidToken>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = words.into_iter().map(Into::into).collect();
        if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
            return Err(InvalidToken(bad.clone()));
        }
        Ok(TokenSequence(tokens))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Splits normalized text into tokens.
///
/// Any character outside the token alphabet acts as a separator, which
/// strips edge punctuation. Fragments with no letter or digit (a lone `-`,
/// a stray `'`) are dropped.
pub fn tokenize(clean: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in clean.split_whitespace() {
        let lowered = chunk.to_lowercase().replace('\u{2019}', "'");
        for piece in lowered.split(|c: char| !is_token_char(c) || c.is_uppercase()) {
            if !piece.is_empty() && piece.chars().any(char::is_alphanumeric) {
                tokens.push(piece.to_string());
            }
        }
    }
    TokenSequence(tokens)
}

/// `normalize_tweet` followed by `tokenize`.
pub fn preprocess(raw: &str, table: &RewriteTable) -> TokenSequence {
    tokenize(&normalize_tweet(raw, table))
}
