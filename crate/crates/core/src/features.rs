//! Sparse feature extraction for tokens and texts.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::error::{Error, Result};

pub const VOCAB_FORMAT: &str = "featvocab-v1";

/// Feature string to dense index map. Frozen vocabularies never grow.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocab {
    index: HashMap<String, u32>,
    names: Vec<String>,
    frozen: bool,
}

impl FeatureVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn get(&self, feature: &str) -> Option<u32> {
        self.index.get(feature).copied()
    }

    /// Index of `feature`, inserting it when the vocab is not frozen.
    pub fn lookup_or_insert(&mut self, feature: &str) -> Option<u32> {
        if let Some(&i) = self.index.get(feature) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.names.len() as u32;
        self.index.insert(feature.to_owned(), i);
        self.names.push(feature.to_owned());
        Some(i)
    }

    pub fn name(&self, index: u32) -> Option<&str> {
        self.names.get(index as usize).map(String::as_str)
    }

    /// Header line followed by one `feature<TAB>index` line per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("{VOCAB_FORMAT}\tfrozen={}\tsize={}\n", u8::from(self.frozen), self.len());
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(name);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`FeatureVocab::to_text`]. Returns the vocab and
    /// the number of lines consumed.
    pub fn parse_lines<'a>(mut lines: impl Iterator<Item = &'a str>) -> Result<(Self, usize)> {
        let bad = |msg: String| Error::ModelFormat(format!("feature vocab: {msg}"));
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 3 || fields[0] != VOCAB_FORMAT {
            return Err(bad(format!("unsupported header {header:?}")));
        }
        let frozen = match fields[1] {
            "frozen=1" => true,
            "frozen=0" => false,
            other => return Err(bad(format!("bad frozen flag {other:?}"))),
        };
        let size: usize = fields[2]
            .strip_prefix("size=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad size field {:?}", fields[2])))?;
        let mut vocab = FeatureVocab::new();
        for expected in 0..size {
            let line = lines.next().ok_or_else(|| bad("truncated entries".into()))?;
            let (name, idx) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad(format!("malformed entry {line:?}")))?;
            if idx.parse::<usize>().ok() != Some(expected) {
                return Err(bad(format!("entry {line:?} out of order")));
            }
            if vocab.lookup_or_insert(name) != Some(expected as u32) {
                return Err(bad(format!("duplicate feature {name:?}")));
            }
        }
        vocab.frozen = frozen;
        Ok((vocab, size + 1))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::corpus::write_file(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse_lines(text.lines())?.0)
    }
}

/// Sorted `(index, weight)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(Vec<(u32, f64)>);

impl SparseVector {
    /// Sorts and merges duplicate indices by summing their weights.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => out.push((i, w)),
            }
        }
        Self(out)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.0
            .binary_search_by_key(&index, |p| p.0)
            .map(|k| self.0[k].1)
            .unwrap_or(0.0)
    }
}

/// Maps features through `vocab`, accumulating repeats.
pub fn vectorize<S: AsRef<str>>(features: &[S], vocab: &mut FeatureVocab) -> SparseVector {
    let pairs = features
        .iter()
        .filter_map(|f| vocab.lookup_or_insert(f.as_ref()).map(|i| (i, 1.0)))
        .collect();
    SparseVector::from_pairs(pairs)
}

/// Like [`vectorize`] but never grows the vocab.
pub fn vectorize_frozen<S: AsRef<str>>(features: &[S], vocab: &FeatureVocab) -> SparseVector {
    let pairs = features
        .iter()
        .filter_map(|f| vocab.get(f.as_ref()).map(|i| (i, 1.0)))
        .collect();
    SparseVector::from_pairs(pairs)
}

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

fn fold(token: &str) -> String {
    token.to_lowercase()
}

/// Collapsed character-class pattern: `X` upper, `x` lower, `d` digit, `p` other.
pub fn shape(token: &str) -> String {
    let mut out = String::new();
    for ch in token.chars() {
        let class = if ch.is_uppercase() {
            'X'
        } else if ch.is_alphabetic() {
            'x'
        } else if ch.is_numeric() {
            'd'
        } else {
            'p'
        };
        if !out.ends_with(class) {
            out.push(class);
        }
    }
    out
}

/// Feature template for the token at `position`.
pub fn token_features(sequence: &TokenSequence, position: usize) -> Result<Vec<String>> {
    let tokens = sequence.tokens();
    if position >= tokens.len() {
        return Err(Error::InvalidData(format!(
            "position {position} out of range for sequence of length {}",
            tokens.len()
        )));
    }
    let tok = &tokens[position];
    let lower = fold(tok);
    let prev = if position == 0 { BOS.to_owned() } else { fold(&tokens[position - 1]) };
    let next = tokens.get(position + 1).map(|t| fold(t)).unwrap_or_else(|| EOS.to_owned());

    let mut feats = Vec::with_capacity(14);
    feats.push("bias".to_owned());
    feats.push(format!("w0={lower}"));
    feats.push(format!("w-1={prev}"));
    feats.push(format!("w+1={next}"));
    let chars: Vec<char> = lower.chars().collect();
    for k in 1..=3.min(chars.len()) {
        let pre: String = chars[..k].iter().collect();
        let suf: String = chars[chars.len() - k..].iter().collect();
        feats.push(format!("pre{k}={pre}"));
        feats.push(format!("suf{k}={suf}"));
    }
    if tok.chars().any(|c| c.is_ascii_digit() || c.is_numeric()) {
        feats.push("has_digit".to_owned());
    }
    feats.push(format!("shape={}", shape(tok)));
    Ok(feats)
}

/// Unigram, bigram and per-token character trigram features.
pub fn text_features(text: &TokenSequence) -> Vec<String> {
    let folded: Vec<String> = text.tokens().iter().map(|t| fold(t)).collect();
    let mut feats = Vec::new();
    for w in &folded {
        feats.push(format!("u={w}"));
    }
    for pair in folded.windows(2) {
        feats.push(format!("b={}_{}", pair[0], pair[1]));
    }
    for w in &folded {
        let padded: Vec<char> = std::iter::once('<').chain(w.chars()).chain(std::iter::once('>')).collect();
        for tri in padded.windows(3) {
            feats.push(format!("c={}", tri.iter().collect::<String>()));
        }
    }
    feats
}
