//! Confidence-based example selection and the self-training loop.
//!
//! Each iteration trains the learner on the labeled pool `L`, predicts every
//! example still in the unlabeled pool `U`, and moves the examples admitted by
//! the selection policy (with their predicted labels frozen) from `U` to `L`.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Annotation, Corpus, Example, Origin, TaskKind};
use crate::error::{Error, Result};
use crate::learner::{Learner, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Admit every example whose confidence is at least `tau`.
    Threshold { tau: f64 },
    /// Admit the `s` most confident examples.
    TopK { s: usize },
    /// Admit the `floor(s / C)` most confident examples of each predicted
    /// class, `C` being the number of classes. Classification only.
    ClassBalanced { s: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfTrainConfig {
    pub policy: SelectionPolicy,
    /// Training epochs per iteration.
    pub k_epochs: usize,
    pub max_iterations: usize,
    /// Stop after this many consecutive iterations without dev improvement;
    /// 0 disables the check.
    pub patience: usize,
    /// Continue from the previous iteration's model instead of re-initializing.
    pub warm_start: bool,
    pub seed: u64,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        Self {
            policy: SelectionPolicy::Threshold { tau: 0.9 },
            k_epochs: 5,
            max_iterations: 20,
            patience: 10,
            warm_start: true,
            seed: 0,
        }
    }
}

impl SelfTrainConfig {
    pub fn validate(&self, task: TaskKind, num_classes: usize) -> Result<()> {
        match self.policy {
            SelectionPolicy::Threshold { tau } => {
                if !(tau > 0.0 && tau <= 1.0) {
                    return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
                }
            }
            SelectionPolicy::TopK { s } => {
                if s == 0 {
                    return Err(Error::Config("S must be positive".into()));
                }
            }
            SelectionPolicy::ClassBalanced { s } => {
                if task != TaskKind::Classification {
                    return Err(Error::Config("class-balanced selection requires a classification task".into()));
                }
                if num_classes < 2 || s < num_classes {
                    return Err(Error::Config(format!(
                        "class-balanced selection needs S >= C >= 2 (S = {s}, C = {num_classes})"
                    )));
                }
            }
        }
        if self.k_epochs == 0 {
            return Err(Error::Config("K (epochs per iteration) must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: u64,
    /// Example confidence: minimum token confidence, or top-class probability.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCandidate {
    pub id: u64,
    pub class: usize,
    pub confidence: f64,
}

/// Descending confidence, then ascending id.
fn by_confidence(a: (f64, u64), b: (f64, u64)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Ids with confidence `>= tau`, ascending.
pub fn select_by_threshold(candidates: &[Candidate], tau: f64) -> Vec<u64> {
    let mut ids: Vec<u64> = candidates
        .iter()
        .filter(|c| c.confidence >= tau)
        .map(|c| c.id)
        .collect();
    ids.sort_unstable();
    ids
}

/// The `s` most confident ids (lower id wins ties), returned ascending.
pub fn select_top_k(candidates: &[Candidate], s: usize) -> Vec<u64> {
    let mut ranked: Vec<(f64, u64)> = candidates
        .iter()
        .filter(|c| !c.confidence.is_nan())
        .map(|c| (c.confidence, c.id))
        .collect();
    ranked.sort_by(|a, b| by_confidence(*a, *b));
    let mut ids: Vec<u64> = ranked.into_iter().take(s).map(|(_, id)| id).collect();
    ids.sort_unstable();
    ids
}

/// Up to `floor(s / num_classes)` most confident ids per predicted class,
/// returned ascending.
pub fn select_class_balanced(candidates: &[ClassCandidate], s: usize, num_classes: usize) -> Vec<u64> {
    if num_classes == 0 {
        return Vec::new();
    }
    let quota = s / num_classes;
    let mut ids = Vec::new();
    for class in 0..num_classes {
        let mut ranked: Vec<(f64, u64)> = candidates
            .iter()
            .filter(|c| c.class == class && !c.confidence.is_nan())
            .map(|c| (c.confidence, c.id))
            .collect();
        ranked.sort_by(|a, b| by_confidence(*a, *b));
        ids.extend(ranked.into_iter().take(quota).map(|(_, id)| id));
    }
    ids.sort_unstable();
    ids
}

/// One line of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `|L|` used for training in this iteration.
    pub labeled: usize,
    /// `|U|` scored in this iteration.
    pub unlabeled: usize,
    pub selected: usize,
    pub dev_metric: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTrainState {
    /// Gold examples plus admitted pseudo-labeled examples, ordered by id.
    pub labeled: Corpus,
    /// Examples not yet admitted, ordered by id.
    pub unlabeled: Corpus,
    pub iteration: usize,
    pub log: Vec<IterationRecord>,
    /// Added to every unlabeled-pool id so they cannot collide with gold ids.
    pub unlabeled_id_offset: u64,
}

impl SelfTrainState {
    /// Line-delimited JSON, one record per iteration.
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SelfTrainOutcome<M> {
    /// Model with the best dev metric over all iterations (earliest on ties).
    pub model: M,
    pub best_iteration: usize,
    pub best_dev_metric: f64,
    pub state: SelfTrainState,
}

/// Runs the self-training loop. See [`self_train_observed`].
pub fn self_train<L: Learner>(
    config: &SelfTrainConfig,
    gold: &Corpus,
    unlabeled: &Corpus,
    dev: &Corpus,
    learner: &L,
) -> Result<SelfTrainOutcome<L::Model>> {
    self_train_observed(config, gold, unlabeled, dev, learner, |_, _| {})
}

fn pseudo_annotation(task: TaskKind, pred: &Prediction) -> Annotation {
    match task {
        TaskKind::Sequence => Annotation::Tags(pred.labels.clone()),
        TaskKind::Classification => Annotation::Class(pred.labels[0].clone()),
    }
}

/// Runs the self-training loop, calling `observe` with the state and current
/// model at the end of every iteration.
///
/// The loop stops when `U` is empty, nothing is selected, `max_iterations` is
/// reached, or the dev metric has not improved for `patience` iterations.
/// Annotations on `unlabeled` are ignored.
pub fn self_train_observed<L, F>(
    config: &SelfTrainConfig,
    gold: &Corpus,
    unlabeled: &Corpus,
    dev: &Corpus,
    learner: &L,
    mut observe: F,
) -> Result<SelfTrainOutcome<L::Model>>
where
    L: Learner,
    F: FnMut(&SelfTrainState, &L::Model),
{
    let task = gold.task();
    config.validate(task, gold.label_set().len())?;
    if gold.is_empty() || !gold.is_labeled() {
        return Err(Error::InvalidData("gold corpus must be non-empty and labeled".into()));
    }
    if dev.is_empty() || !dev.is_labeled() {
        return Err(Error::InvalidData("dev corpus must be non-empty and labeled".into()));
    }
    if unlabeled.task() != task || dev.task() != task {
        return Err(Error::Config("gold, unlabeled and dev corpora must share a task kind".into()));
    }

    let offset = gold.max_id().map_or(0, |m| m + 1);
    let mut state = SelfTrainState {
        labeled: gold.clone(),
        unlabeled: Corpus::new(task, gold.label_set().to_vec(), unlabeled.unlabeled().into_examples())?
            .offset_ids(offset),
        iteration: 0,
        log: Vec::new(),
        unlabeled_id_offset: offset,
    };

    let mut model: Option<L::Model> = None;
    let mut best: Option<(f64, usize, L::Model)> = None;
    let mut stale = 0;

    loop {
        let started = Instant::now();
        state.iteration += 1;
        let seed = config.seed.wrapping_add(state.iteration as u64 - 1);
        let init = match (&model, config.warm_start) {
            (Some(m), true) => Some(m.clone()),
            (Some(m), false) => Some(learner.reset(m)),
            (None, _) => None,
        };
        let current = learner.train(&state.labeled, dev, config.k_epochs, seed, init.as_ref())?;
        let metric = learner.dev_metric(&current, dev)?;
        match &best {
            Some((b, _, _)) if metric <= *b => stale += 1,
            _ => {
                best = Some((metric, state.iteration, current.clone()));
                stale = 0;
            }
        }

        let trained_on = state.labeled.len();
        let scored = state.unlabeled.len();
        let mut selected = 0;
        let stop_early = config.patience > 0 && stale >= config.patience;
        if !state.unlabeled.is_empty() && state.iteration < config.max_iterations && !stop_early {
            let preds = state
                .unlabeled
                .examples()
                .par_iter()
                .map(|ex| learner.predict(&current, &ex.tokens).map(|p| (ex.id, p)))
                .collect::<Result<Vec<_>>>()?;
            let chosen = select(config.policy, gold.label_set(), &preds)?;
            selected = chosen.len();
            if !chosen.is_empty() {
                admit(&mut state, task, &preds, &chosen)?;
            }
        }
        state.log.push(IterationRecord {
            iteration: state.iteration,
            labeled: trained_on,
            unlabeled: scored,
            selected,
            dev_metric: metric,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        observe(&state, &current);
        model = Some(current);
        if selected == 0 {
            break;
        }
    }

    let (best_dev_metric, best_iteration, model) = best.expect("at least one iteration ran");
    Ok(SelfTrainOutcome {
        model,
        best_iteration,
        best_dev_metric,
        state,
    })
}

fn select(policy: SelectionPolicy, classes: &[String], preds: &[(u64, Prediction)]) -> Result<Vec<u64>> {
    let candidates = || -> Vec<Candidate> {
        preds
            .iter()
            .map(|(id, p)| Candidate {
                id: *id,
                confidence: p.confidence,
            })
            .collect()
    };
    Ok(match policy {
        SelectionPolicy::Threshold { tau } => select_by_threshold(&candidates(), tau),
        SelectionPolicy::TopK { s } => select_top_k(&candidates(), s),
        SelectionPolicy::ClassBalanced { s } => {
            let cands = preds
                .iter()
                .map(|(id, p)| {
                    let class = classes
                        .iter()
                        .position(|c| *c == p.labels[0])
                        .ok_or_else(|| Error::InvalidData(format!("predicted class {:?} unknown", p.labels[0])))?;
                    Ok(ClassCandidate {
                        id: *id,
                        class,
                        confidence: p.confidence,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            select_class_balanced(&cands, s, classes.len())
        }
    })
}

/// Moves `chosen` (ascending ids) from `U` to `L` with frozen pseudo-labels.
fn admit(state: &mut SelfTrainState, task: TaskKind, preds: &[(u64, Prediction)], chosen: &[u64]) -> Result<()> {
    let label_set = state.labeled.label_set().to_vec();
    let mut keep = Vec::with_capacity(state.unlabeled.len());
    let mut moved = Vec::with_capacity(chosen.len());
    // preds are aligned with the unlabeled examples
    for (ex, (id, pred)) in std::mem::replace(&mut state.unlabeled, Corpus::empty(task, label_set.clone()))
        .into_examples()
        .into_iter()
        .zip(preds)
    {
        debug_assert_eq!(ex.id, *id);
        if chosen.binary_search(id).is_ok() {
            moved.push(Example {
                annotation: Some(pseudo_annotation(task, pred)),
                origin: Origin::Pseudo,
                ..ex
            });
        } else {
            keep.push(ex);
        }
    }
    let mut labeled = std::mem::replace(&mut state.labeled, Corpus::empty(task, label_set.clone())).into_examples();
    labeled.extend(moved);
    labeled.sort_by_key(|e| e.id);
    state.labeled = Corpus::new(task, label_set.clone(), labeled)?;
    state.unlabeled = Corpus::new(task, label_set, keep)?;
    Ok(())
}
