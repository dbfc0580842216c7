//! Helpers shared by the integration tests: random instances and
//! definition-level oracles that do not go through the library's own
//! inference code.
#![allow(dead_code)]

use pseudolabel::corpus::{Annotation, Corpus, Example, Origin, TaskKind, TokenSequence};
use pseudolabel::crf::CrfModel;
use pseudolabel::eval::Chunk;
use pseudolabel::features::{text_features, token_features, vectorize_frozen};
use pseudolabel::maxent::MaxentModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &["ab", "Bc", "cd", "d1", "ef", "Fg", "g-h", "hi"];

pub fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn random_tokens(rng: &mut ChaCha8Rng, len: usize) -> TokenSequence {
    TokenSequence::new((0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()).collect()).unwrap()
}

pub fn seq_example(id: u64, tokens: TokenSequence, tags: Vec<String>) -> Example {
    Example {
        id,
        tokens,
        annotation: Some(Annotation::Tags(tags)),
        origin: Origin::Gold,
    }
}

pub fn class_example(id: u64, tokens: TokenSequence, class: &str) -> Example {
    Example {
        id,
        tokens,
        annotation: Some(Annotation::Class(class.to_string())),
        origin: Origin::Gold,
    }
}

/// A flat-label CRF with uniform random weights in `[-scale, scale]` and a
/// small labeled batch drawn over the same words.
pub fn random_crf(rng: &mut ChaCha8Rng, max_len: usize, max_labels: usize, scale: f64) -> (CrfModel, Vec<Example>) {
    let n_labels = rng.gen_range(1..=max_labels);
    let labels: Vec<String> = (0..n_labels).map(|i| format!("T{i}")).collect();
    let n_examples = rng.gen_range(1..=3);
    let examples: Vec<Example> = (0..n_examples)
        .map(|id| {
            let len = rng.gen_range(1..=max_len);
            let tags = (0..len).map(|_| labels[rng.gen_range(0..n_labels)].clone()).collect();
            seq_example(id as u64, random_tokens(rng, len), tags)
        })
        .collect();
    let corpus = Corpus::new(TaskKind::Sequence, labels.clone(), examples.clone()).unwrap();
    let vocab = CrfModel::fit_vocab(&corpus).unwrap();
    let mut model = CrfModel::new(labels, vocab).unwrap();
    for w in model.emission_mut() {
        *w = rng.gen_range(-scale..=scale);
    }
    for w in model.transition_mut() {
        *w = rng.gen_range(-scale..=scale);
    }
    (model, examples)
}

/// Every label-index path of length `len` over `n` labels.
pub fn all_paths(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

/// Path score straight from the feature templates and weight layout.
pub fn path_score(model: &CrfModel, tokens: &TokenSequence, path: &[usize]) -> f64 {
    let l = model.num_labels();
    let mut s = 0.0;
    for (j, &y) in path.iter().enumerate() {
        let x = vectorize_frozen(&token_features(tokens, j).unwrap(), model.vocab());
        for &(f, v) in x.entries() {
            s += v * model.emission()[f as usize * l + y];
        }
        if j > 0 {
            s += model.transition()[path[j - 1] * l + y];
        }
    }
    s
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Summed negative log-likelihood plus `l2 / 2 * ||w||^2` by enumeration.
pub fn crf_loss_brute(model: &CrfModel, batch: &[Example], l2: f64) -> f64 {
    let l = model.num_labels();
    let mut loss = 0.0;
    for ex in batch {
        let paths = all_paths(l, ex.tokens.len());
        let scores: Vec<f64> = paths.iter().map(|p| path_score(model, &ex.tokens, p)).collect();
        let gold = model.label_indices(ex.tags().unwrap()).unwrap();
        loss += log_sum_exp(&scores) - path_score(model, &ex.tokens, &gold);
    }
    let sq: f64 = model.emission().iter().chain(model.transition()).map(|w| w * w).sum();
    loss + 0.5 * l2 * sq
}

pub fn random_maxent(rng: &mut ChaCha8Rng, max_classes: usize, scale: f64) -> (MaxentModel, Vec<Example>) {
    let n_classes = rng.gen_range(2..=max_classes);
    let classes: Vec<String> = (0..n_classes).map(|i| format!("c{i}")).collect();
    let n = rng.gen_range(1..=4);
    let examples: Vec<Example> = (0..n)
        .map(|id| {
            let len = rng.gen_range(1..=5);
            let c = &classes[rng.gen_range(0..n_classes)];
            class_example(id as u64, random_tokens(rng, len), c)
        })
        .collect();
    let corpus = Corpus::new(TaskKind::Classification, classes.clone(), examples.clone()).unwrap();
    let mut model = MaxentModel::new(classes, MaxentModel::fit_vocab(&corpus)).unwrap();
    for w in model.weights_mut() {
        *w = rng.gen_range(-scale..=scale);
    }
    for b in model.bias_mut() {
        *b = rng.gen_range(-scale..=scale);
    }
    (model, examples)
}

/// Cross-entropy plus `l2 / 2 * ||W||^2` (bias unpenalized), computed directly.
pub fn maxent_loss_direct(model: &MaxentModel, batch: &[Example], l2: f64) -> f64 {
    let c = model.num_classes();
    let mut loss = 0.0;
    for ex in batch {
        let x = vectorize_frozen(&text_features(&ex.tokens), model.vocab());
        let scores: Vec<f64> = (0..c)
            .map(|k| {
                model.bias()[k]
                    + x.entries()
                        .iter()
                        .map(|&(f, v)| v * model.weights()[f as usize * c + k])
                        .sum::<f64>()
            })
            .collect();
        let gold = model.class_index(ex.class().unwrap()).unwrap();
        loss += log_sum_exp(&scores) - scores[gold];
    }
    loss + 0.5 * l2 * model.weights().iter().map(|w| w * w).sum::<f64>()
}

fn tag_and_type(label: &str) -> (char, &str) {
    match label.split_once('-') {
        Some(("B", ty)) => ('B', ty),
        Some(("I", ty)) => ('I', ty),
        _ => ('O', ""),
    }
}

/// Chunks by the classic start/end-of-chunk predicates (BIO subset).
pub fn oracle_chunks(labels: &[String]) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let (mut prev_tag, mut prev_ty) = ('O', "");
    let mut start = None;
    for j in 0..=labels.len() {
        let (tag, ty) = if j < labels.len() { tag_and_type(&labels[j]) } else { ('O', "") };
        let end = matches!((prev_tag, tag), ('B', 'B') | ('B', 'O') | ('I', 'B') | ('I', 'O'))
            || (prev_tag != 'O' && prev_ty != ty);
        let begin = tag == 'B' || (prev_tag == 'O' && tag == 'I') || (tag != 'O' && prev_ty != ty);
        if end {
            if let Some(s) = start.take() {
                chunks.push(Chunk {
                    ty: prev_ty.to_string(),
                    start: s,
                    end: j,
                });
            }
        }
        if begin {
            start = Some(j);
        }
        prev_tag = tag;
        prev_ty = ty;
    }
    chunks
}

pub fn random_bio(rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
    const POOL: &[&str] = &["O", "O", "B-LOC", "I-LOC", "B-PER", "I-PER", "B-ORG", "I-ORG"];
    (0..len).map(|_| POOL[rng.gen_range(0..POOL.len())].to_string()).collect()
}

/// All index subsets of `0..n`.
pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

/// The unique `min(k, n)`-subset whose members all outrank every non-member
/// (higher confidence, then lower id), found by enumeration.
pub fn oracle_top(cands: &[(u64, f64)], k: usize) -> Vec<u64> {
    let outranks = |a: (u64, f64), b: (u64, f64)| a.1 > b.1 || (a.1 == b.1 && a.0 < b.0);
    let want = k.min(cands.len());
    let mut found: Vec<Vec<u64>> = subsets(cands.len())
        .filter(|s| s.len() == want)
        .filter(|s| {
            s.iter().all(|&i| {
                (0..cands.len())
                    .filter(|j| !s.contains(j))
                    .all(|j| outranks(cands[i], cands[j]))
            })
        })
        .map(|s| {
            let mut ids: Vec<u64> = s.iter().map(|&i| cands[i].0).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    assert_eq!(found.len(), 1, "ranking must be total");
    found.pop().unwrap()
}

/// Runs the loop twice and asserts, after every iteration: ids are
/// conserved, `L` and `U` are disjoint, gold and admitted pseudo-labels never
/// change, and both runs agree exactly. Returns the number of iterations.
pub fn assert_loop_invariants<L>(
    config: &pseudolabel::selftrain::SelfTrainConfig,
    gold: &Corpus,
    unlabeled: &Corpus,
    dev: &Corpus,
    learner: &L,
) -> usize
where
    L: pseudolabel::learner::Learner,
    L::Model: PartialEq + std::fmt::Debug,
{
    use pseudolabel::corpus::Annotation;
    use std::collections::{BTreeMap, BTreeSet};

    let offset = gold.max_id().map_or(0, |m| m + 1);
    let all_ids: BTreeSet<u64> = gold.ids().chain(unlabeled.ids().map(|i| i + offset)).collect();
    let gold_ann: BTreeMap<u64, Option<Annotation>> =
        gold.examples().iter().map(|e| (e.id, e.annotation.clone())).collect();

    let run = || {
        let mut frozen: BTreeMap<u64, Option<Annotation>> = BTreeMap::new();
        let mut trace = Vec::new();
        let out = pseudolabel::selftrain::self_train_observed(config, gold, unlabeled, dev, learner, |st, model| {
            let l: BTreeSet<u64> = st.labeled.ids().collect();
            let u: BTreeSet<u64> = st.unlabeled.ids().collect();
            assert!(l.is_disjoint(&u), "L and U overlap");
            assert_eq!(l.union(&u).copied().collect::<BTreeSet<_>>(), all_ids, "ids not conserved");
            for ex in st.labeled.examples() {
                match ex.origin {
                    Origin::Gold => assert_eq!(gold_ann.get(&ex.id), Some(&ex.annotation), "gold label changed"),
                    Origin::Pseudo => {
                        let prev = frozen.entry(ex.id).or_insert_with(|| ex.annotation.clone());
                        assert_eq!(prev, &ex.annotation, "pseudo-label changed");
                    }
                }
            }
            assert!(st.unlabeled.examples().iter().all(|e| e.annotation.is_none()));
            let rec = st.log.last().unwrap();
            trace.push((rec.iteration, rec.labeled, rec.unlabeled, rec.selected, rec.dev_metric, l, model.clone()));
        })
        .unwrap();
        (trace, out.best_iteration, out.model)
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "runs differ under the same seed");
    first.0.len()
}
