//! Chunk-level and classification metrics plus error-category accounting.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_bio, Corpus, OUTSIDE};
use crate::error::{Error, Result};

/// A typed span `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chunk {
    pub ty: String,
    pub start: usize,
    pub end: usize,
}

/// Reads chunks from a BIO sequence.
///
/// `B-X (I-X)*` is one chunk. An `I-X` that does not continue a chunk of type
/// `X` opens a new one. Labels that are neither `O` nor `B-`/`I-` prefixed are
/// treated as outside.
pub fn extract_chunks<S: AsRef<str>>(labels: &[S]) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut open: Option<(&str, usize)> = None;
    for (j, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        match split_bio(label) {
            Some(('I', ty)) if open.is_some_and(|(t, _)| t == ty) => {}
            Some((_, ty)) => {
                if let Some((t, s)) = open.take() {
                    chunks.push(Chunk { ty: t.to_owned(), start: s, end: j });
                }
                open = Some((ty, j));
            }
            None => {
                if let Some((t, s)) = open.take() {
                    chunks.push(Chunk { ty: t.to_owned(), start: s, end: j });
                }
            }
        }
    }
    if let Some((t, s)) = open {
        chunks.push(Chunk {
            ty: t.to_owned(),
            start: s,
            end: labels.len(),
        });
    }
    chunks
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Gold occurrences (`tp + fn`).
    pub support: usize,
}

impl ClassScore {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            support: tp + fn_,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Binary confusion counts (entity vs `O` per token, or positive vs rest).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ErrorCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn from_pairs<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>, positive: impl Fn(&str) -> bool) -> Self {
        let mut c = ErrorCounts::default();
        for (g, p) in pairs {
            match (positive(g), positive(p)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Per entity type (sequence tasks) or per class.
    pub per_class: BTreeMap<String, ClassScore>,
    /// Mean F1 over the types or classes present in gold.
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// Token accuracy, or example accuracy for classification.
    pub accuracy: f64,
    /// Token-level entity-vs-`O` counts; `None` for classification reports.
    pub counts: Option<ErrorCounts>,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let width = self.per_class.keys().map(String::len).max().unwrap_or(5).max(9);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$} {:>9} {:>9} {:>9} {:>9}",
            "", "precision", "recall", "f1", "support"
        );
        for (name, s) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$} {:>9.4} {:>9.4} {:>9.4} {:>9}",
                name, s.precision, s.recall, s.f1, s.support
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<width$} {:>9.4}", "macro f1", self.macro_f1);
        let _ = writeln!(out, "{:<width$} {:>9.4}", "micro f1", self.micro_f1);
        let _ = writeln!(out, "{:<width$} {:>9.4}", "accuracy", self.accuracy);
        if let Some(c) = &self.counts {
            let _ = writeln!(out);
            for (name, v) in [("tp", c.tp), ("fp", c.fp), ("fn", c.fn_), ("tn", c.tn)] {
                let _ = writeln!(out, "{:<width$} {:>9}", name, v);
            }
        }
        out
    }

    /// `key=value` lines.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "macro_f1={}", self.macro_f1);
        let _ = writeln!(out, "micro_f1={}", self.micro_f1);
        let _ = writeln!(out, "accuracy={}", self.accuracy);
        for (name, s) in &self.per_class {
            let _ = writeln!(out, "class.{name}.precision={}", s.precision);
            let _ = writeln!(out, "class.{name}.recall={}", s.recall);
            let _ = writeln!(out, "class.{name}.f1={}", s.f1);
            let _ = writeln!(out, "class.{name}.support={}", s.support);
        }
        if let Some(c) = &self.counts {
            let _ = writeln!(out, "tp={}\nfp={}\nfn={}\ntn={}", c.tp, c.fp, c.fn_, c.tn);
        }
        out
    }
}

fn gold_tags(gold: &Corpus, pred: &[Vec<String>]) -> Result<Vec<Vec<String>>> {
    if gold.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gold sequences, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    gold.examples()
        .iter()
        .zip(pred)
        .map(|(ex, p)| {
            let tags = ex
                .tags()
                .ok_or_else(|| Error::InvalidData(format!("example {} is not sequence-labeled", ex.id)))?;
            if tags.len() != p.len() {
                return Err(Error::ShapeMismatch(format!(
                    "example {}: {} gold labels, {} predicted",
                    ex.id,
                    tags.len(),
                    p.len()
                )));
            }
            Ok(tags.to_vec())
        })
        .collect()
}

/// Exact-match chunk scoring.
pub fn entity_f1(gold: &Corpus, pred: &[Vec<String>]) -> Result<EvalReport> {
    let gold_tags = gold_tags(gold, pred)?;
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut gold_types = HashSet::new();
    let mut correct_tokens = 0;
    let mut total_tokens = 0;
    let mut errors = ErrorCounts::default();

    for (g, p) in gold_tags.iter().zip(pred) {
        let gc: HashSet<Chunk> = extract_chunks(g).into_iter().collect();
        let pc: HashSet<Chunk> = extract_chunks(p).into_iter().collect();
        for c in &gc {
            gold_types.insert(c.ty.clone());
            let e = counts.entry(c.ty.clone()).or_default();
            if pc.contains(c) {
                e.0 += 1;
            } else {
                e.2 += 1;
            }
        }
        for c in pc.difference(&gc) {
            counts.entry(c.ty.clone()).or_default().1 += 1;
        }
        total_tokens += g.len();
        correct_tokens += g.iter().zip(p).filter(|(a, b)| a == b).count();
        let e = ErrorCounts::from_pairs(g.iter().map(String::as_str).zip(p.iter().map(String::as_str)), |l| l != OUTSIDE);
        errors.tp += e.tp;
        errors.fp += e.fp;
        errors.fn_ += e.fn_;
        errors.tn += e.tn;
    }

    let per_class: BTreeMap<String, ClassScore> = counts
        .iter()
        .map(|(ty, &(tp, fp, fn_))| (ty.clone(), ClassScore::from_counts(tp, fp, fn_)))
        .collect();
    let (tp, fp, fn_) = counts
        .values()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(EvalReport {
        macro_f1: macro_mean(&per_class, &gold_types),
        micro_f1: ClassScore::from_counts(tp, fp, fn_).f1,
        accuracy: ratio(correct_tokens, total_tokens),
        per_class,
        counts: Some(errors),
    })
}

fn macro_mean(per_class: &BTreeMap<String, ClassScore>, gold: &HashSet<String>) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let sum: f64 = per_class
        .iter()
        .filter(|(k, _)| gold.contains(*k))
        .map(|(_, s)| s.f1)
        .sum();
    sum / gold.len() as f64
}

/// Fraction of tokens whose predicted label equals the gold label.
pub fn token_accuracy(gold: &Corpus, pred: &[Vec<String>]) -> Result<f64> {
    let gold_tags = gold_tags(gold, pred)?;
    let total: usize = gold_tags.iter().map(Vec::len).sum();
    let correct: usize = gold_tags
        .iter()
        .zip(pred)
        .map(|(g, p)| g.iter().zip(p).filter(|(a, b)| a == b).count())
        .sum();
    Ok(ratio(correct, total))
}

/// Per-tag token scores for flat tag sets, with the macro mean over gold tags.
pub fn tag_report(gold: &Corpus, pred: &[Vec<String>]) -> Result<EvalReport> {
    let gold_tags = gold_tags(gold, pred)?;
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut gold_set = HashSet::new();
    let (mut correct, mut total) = (0, 0);
    for (g, p) in gold_tags.iter().zip(pred) {
        for (gt, pt) in g.iter().zip(p) {
            gold_set.insert(gt.clone());
            total += 1;
            if gt == pt {
                correct += 1;
                counts.entry(gt.clone()).or_default().0 += 1;
            } else {
                counts.entry(pt.clone()).or_default().1 += 1;
                counts.entry(gt.clone()).or_default().2 += 1;
            }
        }
    }
    let per_class: BTreeMap<String, ClassScore> = counts
        .iter()
        .map(|(c, &(tp, fp, fn_))| (c.clone(), ClassScore::from_counts(tp, fp, fn_)))
        .collect();
    let accuracy = ratio(correct, total);
    Ok(EvalReport {
        macro_f1: macro_mean(&per_class, &gold_set),
        micro_f1: accuracy,
        accuracy,
        per_class,
        counts: None,
    })
}

fn gold_classes<'a>(gold: &'a Corpus, pred: &[String]) -> Result<Vec<&'a str>> {
    if pred.is_empty() {
        return Err(Error::Empty("prediction list is empty".into()));
    }
    if gold.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gold examples, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    gold.examples()
        .iter()
        .map(|ex| {
            ex.class()
                .ok_or_else(|| Error::InvalidData(format!("example {} has no class label", ex.id)))
        })
        .collect()
}

/// Per-class precision/recall/F1 with the macro mean over gold classes.
pub fn classification_macro_f1(gold: &Corpus, pred: &[String]) -> Result<EvalReport> {
    let g = gold_classes(gold, pred)?;
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut gold_set = HashSet::new();
    for (gc, pc) in g.iter().zip(pred) {
        gold_set.insert(gc.to_string());
        if *gc == pc.as_str() {
            counts.entry(gc.to_string()).or_default().0 += 1;
        } else {
            counts.entry(pc.clone()).or_default().1 += 1;
            counts.entry(gc.to_string()).or_default().2 += 1;
        }
    }
    let per_class: BTreeMap<String, ClassScore> = counts
        .iter()
        .map(|(c, &(tp, fp, fn_))| (c.clone(), ClassScore::from_counts(tp, fp, fn_)))
        .collect();
    let correct = g.iter().zip(pred).filter(|(a, b)| **a == b.as_str()).count();
    let accuracy = ratio(correct, g.len());
    Ok(EvalReport {
        macro_f1: macro_mean(&per_class, &gold_set),
        // single-label multi-class micro F1 equals accuracy
        micro_f1: accuracy,
        accuracy,
        per_class,
        counts: None,
    })
}

/// Signed percentage change per error category between two systems.
///
/// Error categories (FP, FN) improve when they shrink: `(a - b) / a`; correct
/// categories (TP, TN) improve when they grow: `(b - a) / a`. `None` when the
/// baseline count is zero but the other is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryChange {
    pub tp: Option<f64>,
    pub fp: Option<f64>,
    #[serde(rename = "fn")]
    pub fn_: Option<f64>,
    pub tn: Option<f64>,
}

fn pct(base: usize, gain: i64) -> Option<f64> {
    if base == 0 {
        (gain == 0).then_some(0.0)
    } else {
        Some(100.0 * gain as f64 / base as f64)
    }
}

impl CategoryChange {
    pub fn between(a: &ErrorCounts, b: &ErrorCounts) -> Self {
        let d = |x: usize, y: usize| y as i64 - x as i64;
        Self {
            tp: pct(a.tp, d(a.tp, b.tp)),
            fp: pct(a.fp, -d(a.fp, b.fp)),
            fn_: pct(a.fn_, -d(a.fn_, b.fn_)),
            tn: pct(a.tn, d(a.tn, b.tn)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCategoryReport {
    pub a: EvalReport,
    pub b: EvalReport,
    pub counts_a: ErrorCounts,
    pub counts_b: ErrorCounts,
    pub change: CategoryChange,
}

impl ErrorCategoryReport {
    pub fn to_table(&self, name_a: &str, name_b: &str) -> String {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:+.1} %"),
            None => "n/a".to_owned(),
        };
        let rows = [
            ("True Positives", self.counts_a.tp, self.counts_b.tp, self.change.tp),
            ("False Positives", self.counts_a.fp, self.counts_b.fp, self.change.fp),
            ("False Negatives", self.counts_a.fn_, self.counts_b.fn_, self.change.fn_),
            ("True Negatives", self.counts_a.tn, self.counts_b.tn, self.change.tn),
        ];
        let mut out = format!("{:<16} {:>9} {:>9} {:>14}\n", "Measure", name_a, name_b, "% improvement");
        for (name, a, b, c) in rows {
            let _ = writeln!(out, "{:<16} {:>9} {:>9} {:>14}", name, a, b, fmt(c));
        }
        out
    }
}

/// Token-level entity-vs-`O` comparison of two prediction sets on one gold corpus.
pub fn error_category_report(
    gold: &Corpus,
    pred_a: &[Vec<String>],
    pred_b: &[Vec<String>],
) -> Result<ErrorCategoryReport> {
    let a = entity_f1(gold, pred_a)?;
    let b = entity_f1(gold, pred_b)?;
    let counts_a = a.counts.expect("sequence reports carry counts");
    let counts_b = b.counts.expect("sequence reports carry counts");
    Ok(ErrorCategoryReport {
        change: CategoryChange::between(&counts_a, &counts_b),
        a,
        b,
        counts_a,
        counts_b,
    })
}

/// Classification variant of [`error_category_report`] with `positive` as the
/// positive class.
pub fn class_error_category_report(
    gold: &Corpus,
    pred_a: &[String],
    pred_b: &[String],
    positive: &str,
) -> Result<ErrorCategoryReport> {
    let a = classification_macro_f1(gold, pred_a)?;
    let b = classification_macro_f1(gold, pred_b)?;
    let g = gold_classes(gold, pred_a)?;
    let count = |pred: &[String]| {
        ErrorCounts::from_pairs(g.iter().copied().zip(pred.iter().map(String::as_str)), |c| c == positive)
    };
    let counts_a = count(pred_a);
    let counts_b = count(pred_b);
    Ok(ErrorCategoryReport {
        change: CategoryChange::between(&counts_a, &counts_b),
        a,
        b,
        counts_a,
        counts_b,
    })
}
