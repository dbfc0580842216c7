//! Corpus ingestion, validation and partitioning.
//!
//! Two on-disk formats are supported:
//!
//! * sequence corpora: one `token<TAB>label` line per token (the label column
//!   is absent for unlabeled pools), sequences separated by a blank line;
//! * text corpora: one `text<TAB>label` (or bare `text`) line per example.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OUTSIDE: &str = "O";

/// A non-empty run of whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::InvalidData("token sequence is empty".into()));
        }
        for tok in &tokens {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::InvalidData(format!("invalid token {tok:?}")));
            }
        }
        Ok(Self(tokens))
    }

    /// Splits `text` on whitespace runs.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Sequence,
    Classification,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Sequence => "sequence",
            TaskKind::Classification => "classification",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Gold,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Annotation {
    /// One label per token.
    Tags(Vec<String>),
    /// One class for the whole text.
    Class(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: u64,
    pub tokens: TokenSequence,
    pub annotation: Option<Annotation>,
    pub origin: Origin,
}

impl Example {
    pub fn tags(&self) -> Option<&[String]> {
        match &self.annotation {
            Some(Annotation::Tags(t)) => Some(t),
            _ => None,
        }
    }

    pub fn class(&self) -> Option<&str> {
        match &self.annotation {
            Some(Annotation::Class(c)) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    BioChunked,
    Flat,
}

/// The label inventory of a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    kind: SchemeKind,
    labels: Vec<String>,
}

/// Tag set of the dialectal Twitter POS corpus.
pub const POS_TAGS: [&str; 21] = [
    "ADV",
    "ADJ",
    "CONJ",
    "DET",
    "NOUN",
    "NSUFF",
    "NUM",
    "PART",
    "PUNC",
    "PRON",
    "PREP",
    "V",
    "ABBREV",
    "VSUFF",
    "FOREIGN",
    "FUT_PART",
    "PROG_PART",
    "EMOT",
    "MENTION",
    "HASH",
    "URL",
];

impl LabelScheme {
    pub fn new(kind: SchemeKind, labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidData("label scheme is empty".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::InvalidData(format!("invalid label {l:?}")));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidData(format!("duplicate label {l:?}")));
            }
        }
        if kind == SchemeKind::BioChunked {
            if !seen.contains(OUTSIDE) {
                return Err(Error::InvalidData("BIO scheme lacks \"O\"".into()));
            }
            for l in &labels {
                if l == OUTSIDE {
                    continue;
                }
                match split_bio(l) {
                    Some(('I', ty)) => {
                        if !seen.contains(format!("B-{ty}").as_str()) {
                            return Err(Error::InvalidData(format!("{l:?} has no matching B-{ty}")));
                        }
                    }
                    Some(('B', _)) => {}
                    _ => return Err(Error::InvalidData(format!("{l:?} is not a BIO label"))),
                }
            }
        }
        Ok(Self { kind, labels })
    }

    /// BIO scheme over the given entity types, e.g. `["LOC", "ORG", "PER"]`.
    pub fn bio(types: &[&str]) -> Self {
        let mut labels = vec![OUTSIDE.to_owned()];
        for ty in types {
            labels.push(format!("B-{ty}"));
            labels.push(format!("I-{ty}"));
        }
        Self::new(SchemeKind::BioChunked, labels).expect("well-formed BIO types")
    }

    /// Location, organization and person entities.
    pub fn ner() -> Self {
        Self::bio(&["LOC", "ORG", "PER"])
    }

    pub fn pos() -> Self {
        Self::new(SchemeKind::Flat, POS_TAGS.iter().map(|s| s.to_string()).collect())
            .expect("static tag set")
    }

    /// Builds a scheme from a label list, treating it as BIO when it contains
    /// `O` and every other label carries a `B-`/`I-` prefix.
    pub fn infer(labels: Vec<String>) -> Result<Self> {
        let bio = labels.iter().any(|l| l == OUTSIDE)
            && labels.iter().all(|l| l == OUTSIDE || split_bio(l).is_some());
        let kind = if bio {
            SchemeKind::BioChunked
        } else {
            SchemeKind::Flat
        };
        Self::new(kind, labels)
    }

    /// Reads a scheme file: one label per line.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let labels: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect();
        Self::infer(labels)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = self.labels.join("\n");
        body.push('\n');
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn is_bio(&self) -> bool {
        self.kind == SchemeKind::BioChunked
    }
}

/// Splits `B-X`/`I-X` into its prefix character and type.
pub fn split_bio(label: &str) -> Option<(char, &str)> {
    let rest = label.strip_prefix("B-").map(|t| ('B', t));
    let rest = rest.or_else(|| label.strip_prefix("I-").map(|t| ('I', t)));
    rest.filter(|(_, t)| !t.is_empty())
}

/// Whether `label` may follow `prev` (`None` at sequence start).
pub fn bio_transition_ok(prev: Option<&str>, label: &str) -> bool {
    match split_bio(label) {
        Some(('I', ty)) => match prev.and_then(split_bio) {
            Some((_, prev_ty)) => prev_ty == ty,
            None => false,
        },
        _ => true,
    }
}

pub fn is_bio_legal(labels: &[String]) -> bool {
    let mut prev = None;
    for l in labels {
        if !bio_transition_ok(prev, l) {
            return false;
        }
        prev = Some(l.as_str());
    }
    true
}

/// Rewrites every illegal `I-X` to `B-X`.
pub fn repair_bio(labels: &mut [String]) {
    for j in 0..labels.len() {
        let ok = {
            let prev = if j == 0 { None } else { Some(labels[j - 1].as_str()) };
            bio_transition_ok(prev, &labels[j])
        };
        if !ok {
            let ty = split_bio(&labels[j]).map(|(_, t)| t.to_owned()).unwrap_or_default();
            labels[j] = format!("B-{ty}");
        }
    }
}

/// An ordered collection of examples sharing one task and label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    task: TaskKind,
    label_set: Vec<String>,
    examples: Vec<Example>,
}

impl Corpus {
    /// Validates id ordering and that every annotation fits the task and label set.
    pub fn new(task: TaskKind, label_set: Vec<String>, examples: Vec<Example>) -> Result<Self> {
        for pair in examples.windows(2) {
            if pair[0].id >= pair[1].id {
                return Err(Error::InvalidData(format!(
                    "example ids not strictly increasing ({} then {})",
                    pair[0].id, pair[1].id
                )));
            }
        }
        for ex in &examples {
            match (&ex.annotation, task) {
                (None, _) => {}
                (Some(Annotation::Tags(tags)), TaskKind::Sequence) => {
                    if tags.len() != ex.tokens.len() {
                        return Err(Error::ShapeMismatch(format!(
                            "example {}: {} labels for {} tokens",
                            ex.id,
                            tags.len(),
                            ex.tokens.len()
                        )));
                    }
                    if let Some(bad) = tags.iter().find(|t| !label_set.contains(t)) {
                        return Err(Error::InvalidData(format!("example {}: unknown label {bad:?}", ex.id)));
                    }
                }
                (Some(Annotation::Class(c)), TaskKind::Classification) => {
                    if !label_set.contains(c) {
                        return Err(Error::InvalidData(format!("example {}: unknown class {c:?}", ex.id)));
                    }
                }
                _ => {
                    return Err(Error::InvalidData(format!(
                        "example {}: annotation does not match a {task} task",
                        ex.id
                    )))
                }
            }
        }
        Ok(Self {
            task,
            label_set,
            examples,
        })
    }

    pub fn empty(task: TaskKind, label_set: Vec<String>) -> Self {
        Self {
            task,
            label_set,
            examples: Vec::new(),
        }
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.examples.iter().map(|e| e.id)
    }

    pub fn max_id(&self) -> Option<u64> {
        self.examples.last().map(|e| e.id)
    }

    /// True when every example carries an annotation.
    pub fn is_labeled(&self) -> bool {
        self.examples.iter().all(|e| e.annotation.is_some())
    }

    pub fn token_count(&self) -> usize {
        self.examples.iter().map(|e| e.tokens.len()).sum()
    }

    /// Copy of this corpus with annotations removed.
    pub fn unlabeled(&self) -> Corpus {
        let examples = self
            .examples
            .iter()
            .map(|e| Example {
                annotation: None,
                ..e.clone()
            })
            .collect();
        Corpus {
            task: self.task,
            label_set: self.label_set.clone(),
            examples,
        }
    }

    /// Same examples under a different (superset) label set.
    pub fn with_label_set(self, label_set: Vec<String>) -> Result<Corpus> {
        Corpus::new(self.task, label_set, self.examples)
    }

    /// Shifts every id by `offset`.
    pub fn offset_ids(mut self, offset: u64) -> Corpus {
        for ex in &mut self.examples {
            ex.id += offset;
        }
        self
    }
}

/// Reads a CoNLL-style sequence corpus.
///
/// A file whose lines carry a single column is read as an unlabeled pool.
pub fn read_sequence_corpus(path: impl AsRef<Path>, scheme: &LabelScheme, repair: bool) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence_corpus(&text, scheme, repair)
}

pub fn parse_sequence_corpus(text: &str, scheme: &LabelScheme, repair: bool) -> Result<Corpus> {
    let mut examples = Vec::new();
    let mut labeled: Option<bool> = None;
    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut tag_lines: Vec<usize> = Vec::new();

    let mut flush = |tokens: &mut Vec<String>, tags: &mut Vec<String>, tag_lines: &mut Vec<usize>| -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let annotation = if tags.is_empty() {
            None
        } else {
            if scheme.is_bio() {
                if repair {
                    repair_bio(tags);
                } else {
                    let mut prev = None;
                    for (l, line) in tags.iter().zip(tag_lines.iter()) {
                        if !bio_transition_ok(prev, l) {
                            return Err(Error::IllegalTransition {
                                line: *line,
                                label: l.clone(),
                            });
                        }
                        prev = Some(l.as_str());
                    }
                }
            }
            Some(Annotation::Tags(std::mem::take(tags)))
        };
        let id = examples.len() as u64;
        examples.push(Example {
            id,
            tokens: TokenSequence::new(std::mem::take(tokens))?,
            annotation,
            origin: Origin::Gold,
        });
        tag_lines.clear();
        Ok(())
    };

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags, &mut tag_lines)?;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let has_label = match cols.len() {
            1 => false,
            2 => true,
            n => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 1 or 2 tab-separated columns, found {n}"),
                })
            }
        };
        match labeled {
            None => labeled = Some(has_label),
            Some(l) if l != has_label => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "label column present on some lines but not others".into(),
                })
            }
            _ => {}
        }
        let token = cols[0];
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("invalid token {token:?}"),
            });
        }
        tokens.push(token.to_owned());
        if has_label {
            let label = cols[1];
            if !scheme.contains(label) {
                return Err(Error::UnknownLabel {
                    line: line_no,
                    label: label.to_owned(),
                });
            }
            tags.push(label.to_owned());
            tag_lines.push(line_no);
        }
    }
    flush(&mut tokens, &mut tags, &mut tag_lines)?;

    if examples.is_empty() {
        return Err(Error::Empty("sequence corpus has no sequences".into()));
    }
    Corpus::new(TaskKind::Sequence, scheme.labels().to_vec(), examples)
}

/// Writes a sequence corpus in the format read by [`read_sequence_corpus`].
pub fn write_sequence_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for ex in corpus.examples() {
        let tags = ex.tags();
        for (j, tok) in ex.tokens.tokens().iter().enumerate() {
            out.push_str(tok);
            if let Some(tags) = tags {
                out.push('\t');
                out.push_str(&tags[j]);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Reads a one-example-per-line text corpus.
///
/// For labeled corpora the class set is the sorted set of observed labels.
pub fn read_text_corpus(path: impl AsRef<Path>, labeled: bool) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_text_corpus(&text, labeled)
}

pub fn parse_text_corpus(text: &str, labeled: bool) -> Result<Corpus> {
    let mut rows = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (body, label) = match (labeled, cols.as_slice()) {
            (true, [body, label]) => (*body, Some(*label)),
            (false, [body]) => (*body, None),
            (true, _) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected `text<TAB>label`".into(),
                })
            }
            (false, _) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "unlabeled text line contains a tab".into(),
                })
            }
        };
        if body.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty text field".into(),
            });
        }
        if let Some(label) = label {
            if label.trim().is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("invalid label {label:?}"),
                });
            }
        }
        let tokens = TokenSequence::from_text(body).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        rows.push((tokens, label.map(str::to_owned)));
    }
    if rows.is_empty() {
        return Err(Error::Empty("text corpus has no examples".into()));
    }
    let label_set: Vec<String> = rows
        .iter()
        .filter_map(|(_, l)| l.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let examples = rows
        .into_iter()
        .enumerate()
        .map(|(i, (tokens, label))| Example {
            id: i as u64,
            tokens,
            annotation: label.map(Annotation::Class),
            origin: Origin::Gold,
        })
        .collect();
    Corpus::new(TaskKind::Classification, label_set, examples)
}

pub fn write_text_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for ex in corpus.examples() {
        out.push_str(&ex.tokens.to_string());
        if let Some(c) = ex.class() {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// Writes `corpus` in the format matching its task kind.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    match corpus.task() {
        TaskKind::Sequence => write_sequence_corpus(corpus, path),
        TaskKind::Classification => write_text_corpus(corpus, path),
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Seeded, unstratified partition of `corpus`.
///
/// Split sizes are `floor(n * f_i)`; the remainder goes to the first split.
/// Each split keeps ids and is ordered by id.
pub fn split_corpus(corpus: &Corpus, fractions: &[f64], seed: u64) -> Result<Vec<Corpus>> {
    if fractions.is_empty() || fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::Config("split fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions sum to {total}, not 1")));
    }
    let n = corpus.len();
    let mut sizes: Vec<usize> = fractions
        .iter()
        .map(|f| (n as f64 * f + 1e-9).floor() as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    sizes[0] += n - assigned.min(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut out = Vec::with_capacity(sizes.len());
    let mut cursor = 0;
    for size in sizes {
        let mut idx: Vec<usize> = order[cursor..cursor + size].to_vec();
        cursor += size;
        idx.sort_unstable();
        let examples = idx.into_iter().map(|i| corpus.examples[i].clone()).collect();
        out.push(Corpus {
            task: corpus.task,
            label_set: corpus.label_set.clone(),
            examples,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ner() -> LabelScheme {
        LabelScheme::ner()
    }

    #[test]
    fn minimal_sequence_file() {
        let c = parse_sequence_corpus("John\tB-PER\nruns\tO\n\n", &ner(), false).unwrap();
        assert_eq!(c.len(), 1);
        let ex = &c.examples()[0];
        assert_eq!(ex.tokens.tokens(), ["John", "runs"]);
        assert_eq!(ex.tags().unwrap(), ["B-PER", "O"]);
        assert_eq!(ex.origin, Origin::Gold);
    }

    #[test]
    fn repair_rewrites_leading_inside() {
        let c = parse_sequence_corpus("runs\tI-PER\nfast\tO\n", &ner(), true).unwrap();
        assert_eq!(c.examples()[0].tags().unwrap(), ["B-PER", "O"]);
        let err = parse_sequence_corpus("runs\tI-PER\nfast\tO\n", &ner(), false).unwrap_err();
        assert!(matches!(err, Error::IllegalTransition { line: 1, .. }));
    }

    #[test]
    fn repair_handles_type_change() {
        let mut tags: Vec<String> = ["B-LOC", "I-PER", "I-PER", "O", "I-ORG"].map(String::from).to_vec();
        repair_bio(&mut tags);
        assert_eq!(tags, ["B-LOC", "B-PER", "I-PER", "O", "B-ORG"]);
        assert!(is_bio_legal(&tags));
    }

    #[test]
    fn unknown_label_is_rejected() {
        let err = parse_sequence_corpus("Cairo\tB-GPE\n", &ner(), true).unwrap_err();
        assert!(err.to_string().contains("unknown label"));
    }

    #[test]
    fn malformed_and_empty_inputs() {
        assert!(matches!(
            parse_sequence_corpus("a\tO\tx\n", &ner(), false),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_sequence_corpus("\n\n", &ner(), false), Err(Error::Empty(_))));
        assert!(matches!(
            parse_sequence_corpus("a\tO\nb\n", &ner(), false),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn consecutive_blank_lines_are_skipped() {
        let c = parse_sequence_corpus("a\tO\n\n\n\nb\tO\n", &ner(), false).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.ids().collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn unlabeled_sequence_pool() {
        let c = parse_sequence_corpus("a\nb\n\nc\n", &ner(), false).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.examples().iter().all(|e| e.annotation.is_none()));
    }

    #[test]
    fn text_corpus_cases() {
        let c = parse_text_corpus("great phone\tsarcastic\n", true).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.examples()[0].class(), Some("sarcastic"));
        assert_eq!(c.label_set(), ["sarcastic"]);

        let u = parse_text_corpus("a b\nc\nd e f\n", false).unwrap();
        assert_eq!(u.len(), 3);
        assert!(!u.examples().iter().any(|e| e.annotation.is_some()));
        assert!(u.label_set().is_empty());

        assert!(parse_text_corpus("\tsarcastic\n", true).is_err());
        assert!(parse_text_corpus("no label here\n", true).is_err());
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let text: String = (0..10).map(|i| format!("w{i}\tO\n\n")).collect();
        let c = parse_sequence_corpus(&text, &ner(), false).unwrap();
        let parts = split_corpus(&c, &[0.3, 0.7], 7).unwrap();
        assert_eq!(parts.iter().map(Corpus::len).collect::<Vec<_>>(), [3, 7]);
        let parts = split_corpus(&c, &[0.25, 0.25, 0.5], 7).unwrap();
        // floor(2.5) = 2 twice, remainder 1 to the first split
        assert_eq!(parts.iter().map(Corpus::len).collect::<Vec<_>>(), [3, 2, 5]);
        let whole = split_corpus(&c, &[1.0], 3).unwrap();
        assert_eq!(whole, vec![c.clone()]);
        assert_eq!(split_corpus(&c, &[0.3, 0.7], 11).unwrap(), split_corpus(&c, &[0.3, 0.7], 11).unwrap());
        assert!(split_corpus(&c, &[0.3, 0.6], 1).is_err());
    }

    #[test]
    fn scheme_validation() {
        assert!(LabelScheme::new(SchemeKind::BioChunked, vec!["B-X".into()]).is_err());
        assert!(LabelScheme::new(SchemeKind::BioChunked, vec!["O".into(), "I-X".into()]).is_err());
        assert_eq!(LabelScheme::pos().labels().len(), 21);
        assert_eq!(ner().labels().len(), 7);
        let inferred = LabelScheme::infer(vec!["O".into(), "B-A".into(), "I-A".into()]).unwrap();
        assert!(inferred.is_bio());
        assert!(!LabelScheme::infer(vec!["NOUN".into(), "V".into()]).unwrap().is_bio());
    }
}
