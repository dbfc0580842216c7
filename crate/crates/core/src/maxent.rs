//! Multinomial logistic regression over sparse text features.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Corpus, Example, TaskKind, TokenSequence};
use crate::error::{Error, Result};
use crate::eval;
use crate::features::{text_features, vectorize, vectorize_frozen, FeatureVocab, SparseVector};
use crate::learner::{Learner, Prediction, TrainHyper};
use crate::optim::AdaGrad;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentModel {
    classes: Vec<String>,
    class_index: HashMap<String, usize>,
    vocab: FeatureVocab,
    /// Row-major `[feature][class]`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Class distribution for one text.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs {
    pub probs: Vec<f64>,
    /// Most probable class; ties go to the lower index.
    pub class: usize,
    /// Probability of `class`.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Softmax of `scores`, stable under large magnitudes.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl MaxentModel {
    pub fn new(classes: Vec<String>, mut vocab: FeatureVocab) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::Config(format!(
                "classifier needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        vocab.freeze();
        let class_index = classes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Ok(Self {
            weights: vec![0.0; vocab.len() * classes.len()],
            bias: vec![0.0; classes.len()],
            classes,
            class_index,
            vocab,
        })
    }

    pub fn fit_vocab(corpus: &Corpus) -> FeatureVocab {
        let mut vocab = FeatureVocab::new();
        for ex in corpus.examples() {
            vectorize(&text_features(&ex.tokens), &mut vocab);
        }
        vocab.freeze();
        vocab
    }

    pub fn from_weights(classes: Vec<String>, vocab: FeatureVocab, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        let mut model = Self::new(classes, vocab)?;
        if weights.len() != model.weights.len() || bias.len() != model.bias.len() {
            return Err(Error::ModelFormat("weight block sizes do not match vocab and classes".into()));
        }
        if weights.iter().chain(&bias).any(|w| !w.is_finite()) {
            return Err(Error::Numeric("non-finite maxent weight".into()));
        }
        model.weights = weights;
        model.bias = bias;
        Ok(model)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn vocab(&self) -> &FeatureVocab {
        &self.vocab
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.class_index.get(class).copied()
    }

    pub fn reset_weights(&self) -> Self {
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w = 0.0);
        m.bias.iter_mut().for_each(|w| *w = 0.0);
        m
    }

    pub fn encode(&self, text: &TokenSequence) -> SparseVector {
        vectorize_frozen(&text_features(text), &self.vocab)
    }

    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        let c = self.num_classes();
        let mut s = self.bias.clone();
        for &(f, v) in x.entries() {
            let w = &self.weights[f as usize * c..(f as usize + 1) * c];
            for (si, wi) in s.iter_mut().zip(w) {
                *si += v * wi;
            }
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite class score".into()));
        }
        Ok(s)
    }

    fn proba_encoded(&self, x: &SparseVector) -> Result<ClassProbs> {
        let probs = softmax(&self.scores(x)?);
        let mut class = 0;
        for k in 1..probs.len() {
            if probs[k] > probs[class] {
                class = k;
            }
        }
        Ok(ClassProbs {
            confidence: probs[class],
            class,
            probs,
        })
    }

    pub fn predict_proba(&self, text: &TokenSequence) -> Result<ClassProbs> {
        self.proba_encoded(&self.encode(text))
    }

    fn batch_gradient(&self, batch: &[(&SparseVector, usize)], l2: f64, grad: &mut MaxentGradient) -> Result<f64> {
        grad.weights.iter_mut().for_each(|g| *g = 0.0);
        grad.bias.iter_mut().for_each(|g| *g = 0.0);
        let c = self.num_classes();
        let mut loss = 0.0;
        for (x, gold) in batch {
            let scores = self.scores(x)?;
            let mut p = softmax(&scores);
            loss -= p[*gold].ln();
            p[*gold] -= 1.0;
            for &(f, v) in x.entries() {
                let g = &mut grad.weights[f as usize * c..(f as usize + 1) * c];
                for (gk, pk) in g.iter_mut().zip(&p) {
                    *gk += v * pk;
                }
            }
            for (gb, pk) in grad.bias.iter_mut().zip(&p) {
                *gb += pk;
            }
        }
        if l2 > 0.0 {
            let mut sq = 0.0;
            for (g, w) in grad.weights.iter_mut().zip(&self.weights) {
                *g += l2 * w;
                sq += w * w;
            }
            loss += 0.5 * l2 * sq;
        }
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite maxent loss {loss}")));
        }
        Ok(loss)
    }
}

fn encode_labeled(model: &MaxentModel, ex: &Example) -> Result<(SparseVector, usize)> {
    let class = ex
        .class()
        .ok_or_else(|| Error::InvalidData(format!("example {} has no class label", ex.id)))?;
    let idx = model
        .class_index(class)
        .ok_or_else(|| Error::InvalidData(format!("class {class:?} not in model class set")))?;
    Ok((model.encode(&ex.tokens), idx))
}

/// Summed cross-entropy of `batch` plus `l2 / 2 * ||W||^2` (bias unpenalized)
/// and its gradient.
pub fn maxent_gradient(model: &MaxentModel, batch: &[Example], l2: f64) -> Result<(f64, MaxentGradient)> {
    if batch.is_empty() {
        return Err(Error::InvalidData("gradient batch is empty".into()));
    }
    let data = batch
        .iter()
        .map(|ex| encode_labeled(model, ex))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&SparseVector, usize)> = data.iter().map(|(x, y)| (x, *y)).collect();
    let mut grad = MaxentGradient {
        weights: vec![0.0; model.weights.len()],
        bias: vec![0.0; model.bias.len()],
    };
    let loss = model.batch_gradient(&refs, l2, &mut grad)?;
    Ok((loss, grad))
}

pub fn maxent_predictions(model: &MaxentModel, corpus: &Corpus) -> Result<Vec<String>> {
    corpus
        .examples()
        .par_iter()
        .map(|ex| model.predict_proba(&ex.tokens).map(|p| model.classes[p.class].clone()))
        .collect()
}

/// Macro-F1 over the dev classes.
pub fn maxent_dev_metric(model: &MaxentModel, dev: &Corpus) -> Result<f64> {
    let preds = maxent_predictions(model, dev)?;
    Ok(eval::classification_macro_f1(dev, &preds)?.macro_f1)
}

/// Same contract as [`crate::crf::crf_train`], with cross-entropy loss.
pub fn maxent_train(
    train: &Corpus,
    dev: &Corpus,
    epochs: usize,
    hyper: &TrainHyper,
    init: Option<&MaxentModel>,
) -> Result<MaxentModel> {
    hyper.validate()?;
    if epochs == 0 {
        return init
            .cloned()
            .ok_or_else(|| Error::Config("epochs must be positive".into()));
    }
    if train.task() != TaskKind::Classification {
        return Err(Error::Config("maxent requires a classification corpus".into()));
    }
    if train.is_empty() || !train.is_labeled() {
        return Err(Error::InvalidData("maxent training corpus must be non-empty and labeled".into()));
    }
    let mut model = match init {
        Some(m) => m.clone(),
        None => MaxentModel::new(train.label_set().to_vec(), MaxentModel::fit_vocab(train))?,
    };
    let data = train
        .examples()
        .par_iter()
        .map(|ex| encode_labeled(&model, ex))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut w_opt = AdaGrad::new(hyper.learning_rate, model.weights.len());
    let mut b_opt = AdaGrad::new(hyper.learning_rate, model.bias.len());
    let mut grad = MaxentGradient {
        weights: vec![0.0; model.weights.len()],
        bias: vec![0.0; model.bias.len()],
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut best: Option<(f64, MaxentModel)> = None;
    let mut stale = 0;
    for _epoch in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch_size) {
            let batch: Vec<(&SparseVector, usize)> = chunk.iter().map(|&i| (&data[i].0, data[i].1)).collect();
            model.batch_gradient(&batch, hyper.l2, &mut grad)?;
            w_opt.step(&mut model.weights, &grad.weights);
            b_opt.step(&mut model.bias, &grad.bias);
        }
        if dev.is_empty() {
            continue;
        }
        let metric = maxent_dev_metric(&model, dev)?;
        match &best {
            Some((b, _)) if metric <= *b => stale += 1,
            _ => {
                best = Some((metric, model.clone()));
                stale = 0;
            }
        }
        if hyper.patience.is_some_and(|p| stale >= p) {
            break;
        }
    }
    Ok(best.map(|(_, m)| m).unwrap_or(model))
}

/// [`Learner`] adapter for the maxent classifier.
#[derive(Debug, Clone, Default)]
pub struct MaxentLearner {
    pub hyper: TrainHyper,
}

impl Learner for MaxentLearner {
    type Model = MaxentModel;

    fn train(
        &self,
        train: &Corpus,
        dev: &Corpus,
        epochs: usize,
        seed: u64,
        init: Option<&MaxentModel>,
    ) -> Result<MaxentModel> {
        let hyper = TrainHyper {
            seed,
            ..self.hyper.clone()
        };
        maxent_train(train, dev, epochs, &hyper, init)
    }

    fn predict(&self, model: &MaxentModel, tokens: &TokenSequence) -> Result<Prediction> {
        let p = model.predict_proba(tokens)?;
        Ok(Prediction {
            labels: vec![model.classes[p.class].clone()],
            confidences: vec![p.confidence],
            confidence: p.confidence,
        })
    }

    fn dev_metric(&self, model: &MaxentModel, dev: &Corpus) -> Result<f64> {
        maxent_dev_metric(model, dev)
    }

    fn reset(&self, model: &MaxentModel) -> MaxentModel {
        model.reset_weights()
    }
}
