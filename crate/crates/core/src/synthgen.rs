//! Paired source/target corpora with controllable lexical shift.
//!
//! Both domains share one hidden Markov chain over states (labels for
//! sequence tasks, classes for classification). Each state owns a word list
//! with Zipfian emission weights. The target domain replaces a fraction
//! `shift_rate` of every state's word types with target-only synonyms, so
//! emissions shift while transitions stay fixed.

use std::collections::HashSet;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{bio_transition_ok, Annotation, Corpus, Example, LabelScheme, Origin, TaskKind, TokenSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub task: TaskKind,
    /// Hidden state names; they are the labels (sequence) or classes.
    pub states: Vec<String>,
    pub initial: Vec<f64>,
    /// Row-stochastic, `transitions[from][to]`.
    pub transitions: Vec<Vec<f64>>,
    /// Word types per state; both domains have the same sizes.
    pub vocab_sizes: Vec<usize>,
    /// Exponent of the per-state Zipf emission weights `1 / rank^s`.
    #[serde(default = "default_zipf")]
    pub zipf_exponent: f64,
    /// Explicit per-state emission distributions; overrides the Zipf weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emissions: Option<Vec<Vec<f64>>>,
    /// States whose words are written capitalized in both domains.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capitalized: Vec<bool>,
    /// Fraction of each state's word types replaced in the target domain.
    pub shift_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

fn default_zipf() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

/// Corpora produced by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpora {
    pub source_labeled: Corpus,
    pub target_unlabeled: Corpus,
    pub target_test: Corpus,
}

const ROW_TOL: f64 = 1e-9;

fn check_row(name: &str, row: &[f64], len: usize) -> Result<()> {
    if row.len() != len {
        return Err(Error::Config(format!("{name}: expected {len} entries, found {}", row.len())));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Config(format!("{name}: entries must be finite and non-negative")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::Config(format!("{name}: sums to {sum}, not 1")));
    }
    Ok(())
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.states.len();
        if n < 2 && self.task == TaskKind::Classification {
            return Err(Error::Config("classification needs at least two states".into()));
        }
        if n == 0 {
            return Err(Error::Config("no hidden states".into()));
        }
        check_row("initial", &self.initial, n)?;
        if self.transitions.len() != n {
            return Err(Error::Config(format!("transition matrix needs {n} rows")));
        }
        for (i, row) in self.transitions.iter().enumerate() {
            check_row(&format!("transitions[{i}]"), row, n)?;
        }
        if self.vocab_sizes.len() != n || self.vocab_sizes.contains(&0) {
            return Err(Error::Config("vocab_sizes needs one positive size per state".into()));
        }
        if let Some(em) = &self.emissions {
            if em.len() != n {
                return Err(Error::Config(format!("emissions needs {n} rows")));
            }
            for (i, row) in em.iter().enumerate() {
                check_row(&format!("emissions[{i}]"), row, self.vocab_sizes[i])?;
            }
        }
        if !self.capitalized.is_empty() && self.capitalized.len() != n {
            return Err(Error::Config(format!("capitalized needs {n} entries or none")));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(Error::Config("zipf_exponent must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.shift_rate) {
            return Err(Error::Config(format!("shift_rate must lie in [0, 1], got {}", self.shift_rate)));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config("need 1 <= min_len <= max_len".into()));
        }
        if self.task == TaskKind::Sequence {
            let scheme = LabelScheme::infer(self.states.clone())?;
            if scheme.is_bio() {
                for (to, name) in self.states.iter().enumerate() {
                    if self.initial[to] > 0.0 && !bio_transition_ok(None, name) {
                        return Err(Error::Config(format!("chain may start in {name}")));
                    }
                    for (from, prev) in self.states.iter().enumerate() {
                        if self.transitions[from][to] > 0.0 && !bio_transition_ok(Some(prev), name) {
                            return Err(Error::Config(format!("chain allows {prev} -> {name}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ShiftSpec = toml::from_str(text).map_err(|e| Error::Config(format!("shift spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("shift spec serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// NER-shaped chain over `O` and BIO tags for LOC, ORG and PER.
    pub fn ner_benchmark(shift_rate: f64, seed: u64) -> Self {
        let states = LabelScheme::ner().labels().to_vec();
        // order: O, B-LOC, I-LOC, B-ORG, I-ORG, B-PER, I-PER
        let transitions = vec![
            vec![0.79, 0.07, 0.0, 0.07, 0.0, 0.07, 0.0],
            vec![0.55, 0.0, 0.45, 0.0, 0.0, 0.0, 0.0],
            vec![0.80, 0.0, 0.20, 0.0, 0.0, 0.0, 0.0],
            vec![0.25, 0.0, 0.0, 0.0, 0.75, 0.0, 0.0],
            vec![0.60, 0.0, 0.0, 0.0, 0.40, 0.0, 0.0],
            vec![0.35, 0.0, 0.0, 0.0, 0.0, 0.0, 0.65],
            vec![0.85, 0.0, 0.0, 0.0, 0.0, 0.0, 0.15],
        ];
        Self {
            task: TaskKind::Sequence,
            states,
            initial: vec![0.76, 0.08, 0.0, 0.08, 0.0, 0.08, 0.0],
            transitions,
            vocab_sizes: vec![300, 60, 60, 60, 60, 60, 60],
            zipf_exponent: 1.0,
            emissions: None,
            capitalized: vec![false, true, true, true, true, true, true],
            shift_rate,
            min_len: 8,
            max_len: 20,
            seed,
        }
    }

    /// Two sticky states with an 80/20 stationary split; a document's class
    /// is its majority state.
    pub fn skewed_classification_benchmark(shift_rate: f64, seed: u64) -> Self {
        Self {
            task: TaskKind::Classification,
            states: vec!["neg".into(), "pos".into()],
            initial: vec![0.8, 0.2],
            transitions: vec![vec![0.975, 0.025], vec![0.1, 0.9]],
            vocab_sizes: vec![200, 200],
            zipf_exponent: 1.0,
            emissions: None,
            capitalized: Vec::new(),
            shift_rate,
            min_len: 6,
            max_len: 14,
            seed,
        }
    }
}

/// Word lists per state for both domains plus emission samplers.
#[derive(Debug, Clone)]
pub struct Lexicon {
    source: Vec<Vec<String>>,
    target: Vec<Vec<String>>,
    emit: Vec<WeightedIndex<f64>>,
}

impl Lexicon {
    pub fn words(&self, domain: Domain, state: usize) -> &[String] {
        match domain {
            Domain::Source => &self.source[state],
            Domain::Target => &self.target[state],
        }
    }

    /// Number of word types that differ between the domains.
    pub fn shifted_types(&self) -> usize {
        self.source
            .iter()
            .zip(&self.target)
            .map(|(s, t)| s.iter().zip(t).filter(|(a, b)| a != b).count())
            .sum()
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn fresh_word(rng: &mut ChaCha8Rng, used: &mut HashSet<String>, capitalize: bool) -> String {
    loop {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
        }
        if rng.gen_bool(0.5) {
            w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
        }
        if capitalize {
            w = w[..1].to_uppercase() + &w[1..];
        }
        if used.insert(w.clone()) {
            return w;
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub const LEXICON_STREAM: u64 = 0;
pub const SOURCE_LABELED_STREAM: u64 = 1;
pub const TARGET_UNLABELED_STREAM: u64 = 2;
pub const TARGET_TEST_STREAM: u64 = 3;

/// Builds both domains' word lists from `spec.seed`.
pub fn build_lexicon(spec: &ShiftSpec) -> Result<Lexicon> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, LEXICON_STREAM);
    let mut used = HashSet::new();
    let mut source = Vec::new();
    let mut target = Vec::new();
    let mut emit = Vec::new();
    for (s, &size) in spec.vocab_sizes.iter().enumerate() {
        let cap = spec.capitalized.get(s).copied().unwrap_or(false);
        let words: Vec<String> = (0..size).map(|_| fresh_word(&mut rng, &mut used, cap)).collect();
        let replaced = (spec.shift_rate * size as f64).round() as usize;
        let mut idx: Vec<usize> = (0..size).collect();
        idx.shuffle(&mut rng);
        let mut shifted = words.clone();
        for &k in &idx[..replaced] {
            shifted[k] = fresh_word(&mut rng, &mut used, cap);
        }
        let weights: Vec<f64> = match &spec.emissions {
            Some(em) => em[s].clone(),
            None => (1..=size).map(|r| (r as f64).powf(-spec.zipf_exponent)).collect(),
        };
        emit.push(WeightedIndex::new(weights).map_err(|e| Error::Config(format!("emissions[{s}]: {e}")))?);
        source.push(words);
        target.push(shifted);
    }
    Ok(Lexicon { source, target, emit })
}

fn sample_states(spec: &ShiftSpec, init: &WeightedIndex<f64>, trans: &[WeightedIndex<f64>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let len = rng.gen_range(spec.min_len..=spec.max_len);
    let mut states = Vec::with_capacity(len);
    let mut s = init.sample(rng);
    states.push(s);
    for _ in 1..len {
        s = trans[s].sample(rng);
        states.push(s);
    }
    states
}

/// Most frequent state; ties go to the lower index.
fn majority(states: &[usize], n: usize) -> usize {
    let mut counts = vec![0usize; n];
    for &s in states {
        counts[s] += 1;
    }
    let mut best = 0;
    for k in 1..n {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best
}

/// Samples `n` examples from one domain using RNG stream `stream`.
pub fn sample_corpus(
    spec: &ShiftSpec,
    lexicon: &Lexicon,
    domain: Domain,
    n: usize,
    labeled: bool,
    stream: u64,
) -> Result<Corpus> {
    let mut rng = stream_rng(spec.seed, stream);
    let init = WeightedIndex::new(&spec.initial).map_err(|e| Error::Config(format!("initial: {e}")))?;
    let trans = spec
        .transitions
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::Config(format!("transitions: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut examples = Vec::with_capacity(n);
    for id in 0..n {
        let states = sample_states(spec, &init, &trans, &mut rng);
        let tokens: Vec<String> = states
            .iter()
            .map(|&s| lexicon.words(domain, s)[lexicon.emit[s].sample(&mut rng)].clone())
            .collect();
        let annotation = labeled.then(|| match spec.task {
            TaskKind::Sequence => Annotation::Tags(states.iter().map(|&s| spec.states[s].clone()).collect()),
            TaskKind::Classification => Annotation::Class(spec.states[majority(&states, spec.states.len())].clone()),
        });
        examples.push(Example {
            id: id as u64,
            tokens: TokenSequence::new(tokens)?,
            annotation,
            origin: Origin::Gold,
        });
    }
    Corpus::new(spec.task, spec.states.clone(), examples)
}

/// Labeled source corpus, unlabeled target pool and labeled target test set.
pub fn generate(
    spec: &ShiftSpec,
    n_source_labeled: usize,
    n_target_unlabeled: usize,
    n_target_test: usize,
) -> Result<SynthCorpora> {
    if n_source_labeled == 0 || n_target_unlabeled == 0 || n_target_test == 0 {
        return Err(Error::Config("corpus sizes must be at least 1".into()));
    }
    let lex = build_lexicon(spec)?;
    Ok(SynthCorpora {
        source_labeled: sample_corpus(spec, &lex, Domain::Source, n_source_labeled, true, SOURCE_LABELED_STREAM)?,
        target_unlabeled: sample_corpus(spec, &lex, Domain::Target, n_target_unlabeled, false, TARGET_UNLABELED_STREAM)?,
        target_test: sample_corpus(spec, &lex, Domain::Target, n_target_test, true, TARGET_TEST_STREAM)?,
    })
}
