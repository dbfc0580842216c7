//! Linear-chain conditional random field.
//!
//! Scores are `sum_j W[x_j, y_j] + sum_j T[y_{j-1}, y_j]`; there are no
//! start or end potentials. Inference runs in log space.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Corpus, Example, LabelScheme, TaskKind, TokenSequence};
use crate::error::{Error, Result};
use crate::eval;
use crate::features::{token_features, vectorize, vectorize_frozen, FeatureVocab, SparseVector};
use crate::learner::{Learner, Prediction, TrainHyper};
use crate::optim::AdaGrad;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    vocab: FeatureVocab,
    /// Row-major `[feature][label]`.
    emission: Vec<f64>,
    /// Row-major `[previous label][label]`.
    transition: Vec<f64>,
}

/// Per-position posterior distribution over labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    num_labels: usize,
    probs: Vec<f64>,
}

impl MarginalTable {
    pub fn len(&self) -> usize {
        self.probs.len() / self.num_labels
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn row(&self, position: usize) -> &[f64] {
        &self.probs[position * self.num_labels..(position + 1) * self.num_labels]
    }

    pub fn get(&self, position: usize, label: usize) -> f64 {
        self.probs[position * self.num_labels + label]
    }
}

/// Gradient blocks laid out like the model's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfGradient {
    pub emission: Vec<f64>,
    pub transition: Vec<f64>,
}

/// Token features of a sequence mapped through a frozen vocab.
pub type Encoded = Vec<SparseVector>;

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl CrfModel {
    /// Zero-weight model over `labels`; the vocab is frozen.
    pub fn new(labels: Vec<String>, mut vocab: FeatureVocab) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Config("CRF needs at least one label".into()));
        }
        vocab.freeze();
        let label_index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let l = labels.len();
        Ok(Self {
            emission: vec![0.0; vocab.len() * l],
            transition: vec![0.0; l * l],
            labels,
            label_index,
            vocab,
        })
    }

    /// Builds the feature vocab from every token of `corpus`.
    pub fn fit_vocab(corpus: &Corpus) -> Result<FeatureVocab> {
        let mut vocab = FeatureVocab::new();
        for ex in corpus.examples() {
            for j in 0..ex.tokens.len() {
                vectorize(&token_features(&ex.tokens, j)?, &mut vocab);
            }
        }
        vocab.freeze();
        Ok(vocab)
    }

    pub fn from_weights(
        labels: Vec<String>,
        vocab: FeatureVocab,
        emission: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Self::new(labels, vocab)?;
        if emission.len() != model.emission.len() || transition.len() != model.transition.len() {
            return Err(Error::ModelFormat("weight block sizes do not match vocab and labels".into()));
        }
        if emission.iter().chain(&transition).any(|w| !w.is_finite()) {
            return Err(Error::Numeric("non-finite CRF weight".into()));
        }
        model.emission = emission;
        model.transition = transition;
        Ok(model)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn vocab(&self) -> &FeatureVocab {
        &self.vocab
    }

    pub fn emission(&self) -> &[f64] {
        &self.emission
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn emission_mut(&mut self) -> &mut [f64] {
        &mut self.emission
    }

    pub fn transition_mut(&mut self) -> &mut [f64] {
        &mut self.transition
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn scheme(&self) -> Result<LabelScheme> {
        LabelScheme::infer(self.labels.clone())
    }

    pub fn reset_weights(&self) -> Self {
        let mut m = self.clone();
        m.emission.iter_mut().for_each(|w| *w = 0.0);
        m.transition.iter_mut().for_each(|w| *w = 0.0);
        m
    }

    pub fn encode(&self, tokens: &TokenSequence) -> Result<Encoded> {
        (0..tokens.len())
            .map(|j| Ok(vectorize_frozen(&token_features(tokens, j)?, &self.vocab)))
            .collect()
    }

    pub fn label_indices(&self, labels: &[String]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.label_index(l)
                    .ok_or_else(|| Error::InvalidData(format!("label {l:?} not in model label set")))
            })
            .collect()
    }

    /// Position-major `n x L` emission scores.
    fn emission_scores(&self, enc: &Encoded) -> Result<Vec<f64>> {
        let l = self.num_labels();
        let mut scores = vec![0.0; enc.len() * l];
        for (j, x) in enc.iter().enumerate() {
            let row = &mut scores[j * l..(j + 1) * l];
            for &(f, v) in x.entries() {
                let w = &self.emission[f as usize * l..(f as usize + 1) * l];
                for (s, wy) in row.iter_mut().zip(w) {
                    *s += v * wy;
                }
            }
        }
        if scores.iter().chain(&self.transition).any(|s| !s.is_finite()) {
            return Err(Error::Numeric("non-finite CRF score (NaN or infinite weight)".into()));
        }
        Ok(scores)
    }

    fn score_encoded(&self, enc: &Encoded, labels: &[usize]) -> Result<f64> {
        let l = self.num_labels();
        let em = self.emission_scores(enc)?;
        let mut score = 0.0;
        for (j, &y) in labels.iter().enumerate() {
            score += em[j * l + y];
            if j > 0 {
                score += self.transition[labels[j - 1] * l + y];
            }
        }
        Ok(score)
    }

    /// Unnormalized log score of a complete labeling.
    pub fn score_sequence(&self, tokens: &TokenSequence, labels: &[String]) -> Result<f64> {
        if labels.len() != tokens.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} tokens",
                labels.len(),
                tokens.len()
            )));
        }
        let idx = self.label_indices(labels)?;
        self.score_encoded(&self.encode(tokens)?, &idx)
    }

    /// Forward and backward log messages plus `log Z`.
    fn lattice(&self, em: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let l = self.num_labels();
        let mut alpha = vec![0.0; n * l];
        let mut beta = vec![0.0; n * l];
        let mut buf = vec![0.0; l];
        alpha[..l].copy_from_slice(&em[..l]);
        for j in 1..n {
            for y in 0..l {
                for (yp, b) in buf.iter_mut().enumerate() {
                    *b = alpha[(j - 1) * l + yp] + self.transition[yp * l + y];
                }
                alpha[j * l + y] = em[j * l + y] + log_sum_exp(&buf);
            }
        }
        for j in (0..n - 1).rev() {
            for yp in 0..l {
                for (y, b) in buf.iter_mut().enumerate() {
                    *b = self.transition[yp * l + y] + em[(j + 1) * l + y] + beta[(j + 1) * l + y];
                }
                beta[j * l + yp] = log_sum_exp(&buf);
            }
        }
        let log_z = log_sum_exp(&alpha[(n - 1) * l..]);
        (alpha, beta, log_z)
    }

    fn marginals_encoded(&self, enc: &Encoded) -> Result<(MarginalTable, f64)> {
        let n = enc.len();
        if n == 0 {
            return Err(Error::InvalidData("empty sequence".into()));
        }
        let l = self.num_labels();
        let em = self.emission_scores(enc)?;
        let (alpha, beta, log_z) = self.lattice(&em, n);
        let mut probs: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| (a + b - log_z).exp()).collect();
        for row in probs.chunks_mut(l) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        Ok((MarginalTable { num_labels: l, probs }, log_z))
    }

    /// Posterior label marginals and the log partition function.
    pub fn forward_backward(&self, tokens: &TokenSequence) -> Result<(MarginalTable, f64)> {
        self.marginals_encoded(&self.encode(tokens)?)
    }

    fn viterbi_encoded(&self, enc: &Encoded) -> Result<Vec<usize>> {
        let n = enc.len();
        if n == 0 {
            return Err(Error::InvalidData("empty sequence".into()));
        }
        let l = self.num_labels();
        let em = self.emission_scores(enc)?;
        let mut delta = em[..l].to_vec();
        let mut back = vec![0usize; n * l];
        for j in 1..n {
            let mut next = vec![0.0; l];
            for y in 0..l {
                let mut best = 0;
                let mut best_score = delta[0] + self.transition[y];
                for yp in 1..l {
                    let s = delta[yp] + self.transition[yp * l + y];
                    if s > best_score {
                        best = yp;
                        best_score = s;
                    }
                }
                back[j * l + y] = best;
                next[y] = best_score + em[j * l + y];
            }
            delta = next;
        }
        let mut last = 0;
        for y in 1..l {
            if delta[y] > delta[last] {
                last = y;
            }
        }
        let mut path = vec![0; n];
        path[n - 1] = last;
        for j in (1..n).rev() {
            path[j - 1] = back[j * l + path[j]];
        }
        Ok(path)
    }

    /// Highest-scoring labeling with per-token marginal confidences.
    ///
    /// Ties break toward the lower label index.
    pub fn viterbi(&self, tokens: &TokenSequence) -> Result<Prediction> {
        let enc = self.encode(tokens)?;
        let path = self.viterbi_encoded(&enc)?;
        let (marg, _) = self.marginals_encoded(&enc)?;
        let confidences = path.iter().enumerate().map(|(j, &y)| marg.get(j, y)).collect();
        let labels = path.iter().map(|&y| self.labels[y].clone()).collect();
        Ok(Prediction::from_token_confidences(labels, confidences))
    }

    /// Adds `expected - empirical` feature counts of one sequence into `grad`
    /// and returns its negative log-likelihood.
    fn accumulate(&self, enc: &Encoded, gold: &[usize], grad: &mut CrfGradient) -> Result<f64> {
        let n = enc.len();
        let l = self.num_labels();
        let em = self.emission_scores(enc)?;
        let (alpha, beta, log_z) = self.lattice(&em, n);

        let mut gold_score = 0.0;
        for j in 0..n {
            gold_score += em[j * l + gold[j]];
            if j > 0 {
                gold_score += self.transition[gold[j - 1] * l + gold[j]];
            }
        }

        let mut node = vec![0.0; l];
        for (j, x) in enc.iter().enumerate() {
            for y in 0..l {
                node[y] = (alpha[j * l + y] + beta[j * l + y] - log_z).exp();
            }
            node[gold[j]] -= 1.0;
            for &(f, v) in x.entries() {
                let g = &mut grad.emission[f as usize * l..(f as usize + 1) * l];
                for (gy, p) in g.iter_mut().zip(&node) {
                    *gy += v * p;
                }
            }
            if j > 0 {
                for yp in 0..l {
                    let a = alpha[(j - 1) * l + yp];
                    for y in 0..l {
                        let p = (a + self.transition[yp * l + y] + em[j * l + y] + beta[j * l + y] - log_z).exp();
                        grad.transition[yp * l + y] += p;
                    }
                }
                grad.transition[gold[j - 1] * l + gold[j]] -= 1.0;
            }
        }
        Ok(log_z - gold_score)
    }

    fn zero_gradient(&self) -> CrfGradient {
        CrfGradient {
            emission: vec![0.0; self.emission.len()],
            transition: vec![0.0; self.transition.len()],
        }
    }

    fn batch_gradient(&self, batch: &[(&Encoded, &[usize])], l2: f64, grad: &mut CrfGradient) -> Result<f64> {
        grad.emission.iter_mut().for_each(|g| *g = 0.0);
        grad.transition.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (enc, gold) in batch {
            loss += self.accumulate(enc, gold, grad)?;
        }
        if l2 > 0.0 {
            let mut sq = 0.0;
            for (g, w) in grad.emission.iter_mut().zip(&self.emission) {
                *g += l2 * w;
                sq += w * w;
            }
            for (g, w) in grad.transition.iter_mut().zip(&self.transition) {
                *g += l2 * w;
                sq += w * w;
            }
            loss += 0.5 * l2 * sq;
        }
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite CRF loss {loss}")));
        }
        Ok(loss)
    }
}

fn encode_labeled(model: &CrfModel, ex: &Example) -> Result<(Encoded, Vec<usize>)> {
    let tags = ex
        .tags()
        .ok_or_else(|| Error::InvalidData(format!("example {} has no sequence labels", ex.id)))?;
    Ok((model.encode(&ex.tokens)?, model.label_indices(tags)?))
}

/// Summed negative log-likelihood of `batch` plus `l2 / 2 * ||w||^2`, and its
/// gradient (expected minus empirical counts plus `l2 * w`).
pub fn crf_gradient(model: &CrfModel, batch: &[Example], l2: f64) -> Result<(f64, CrfGradient)> {
    if batch.is_empty() {
        return Err(Error::InvalidData("gradient batch is empty".into()));
    }
    let encoded = batch
        .iter()
        .map(|ex| encode_labeled(model, ex))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&Encoded, &[usize])> = encoded.iter().map(|(e, g)| (e, g.as_slice())).collect();
    let mut grad = model.zero_gradient();
    let loss = model.batch_gradient(&refs, l2, &mut grad)?;
    Ok((loss, grad))
}

/// Viterbi labels for every example, in corpus order.
pub fn crf_predictions(model: &CrfModel, corpus: &Corpus) -> Result<Vec<Vec<String>>> {
    corpus
        .examples()
        .par_iter()
        .map(|ex| model.viterbi(&ex.tokens).map(|p| p.labels))
        .collect()
}

/// Entity macro-F1 for BIO label sets, token accuracy otherwise.
pub fn crf_dev_metric(model: &CrfModel, dev: &Corpus) -> Result<f64> {
    let preds = crf_predictions(model, dev)?;
    if model.scheme()?.is_bio() {
        Ok(eval::entity_f1(dev, &preds)?.macro_f1)
    } else {
        eval::token_accuracy(dev, &preds)
    }
}

/// Mini-batch AdaGrad training with best-on-dev parameter selection.
///
/// With `init` the run continues from that model (and its frozen vocab);
/// otherwise a vocab is fit on `train` and weights start at zero. `epochs == 0`
/// is only valid with `init` and returns it unchanged. An empty `dev` returns
/// the parameters after the last epoch.
pub fn crf_train(
    train: &Corpus,
    dev: &Corpus,
    epochs: usize,
    hyper: &TrainHyper,
    init: Option<&CrfModel>,
) -> Result<CrfModel> {
    hyper.validate()?;
    if epochs == 0 {
        return init
            .cloned()
            .ok_or_else(|| Error::Config("epochs must be positive".into()));
    }
    if train.task() != TaskKind::Sequence {
        return Err(Error::Config("CRF requires a sequence corpus".into()));
    }
    if train.is_empty() || !train.is_labeled() {
        return Err(Error::InvalidData("CRF training corpus must be non-empty and labeled".into()));
    }
    let mut model = match init {
        Some(m) => m.clone(),
        None => CrfModel::new(train.label_set().to_vec(), CrfModel::fit_vocab(train)?)?,
    };

    let data = train
        .examples()
        .par_iter()
        .map(|ex| encode_labeled(&model, ex))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut emission_opt = AdaGrad::new(hyper.learning_rate, model.emission.len());
    let mut transition_opt = AdaGrad::new(hyper.learning_rate, model.transition.len());
    let mut grad = model.zero_gradient();
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut best: Option<(f64, CrfModel)> = None;
    let mut stale = 0;
    for _epoch in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch_size) {
            let batch: Vec<(&Encoded, &[usize])> = chunk.iter().map(|&i| (&data[i].0, data[i].1.as_slice())).collect();
            model.batch_gradient(&batch, hyper.l2, &mut grad)?;
            emission_opt.step(&mut model.emission, &grad.emission);
            transition_opt.step(&mut model.transition, &grad.transition);
        }
        if dev.is_empty() {
            continue;
        }
        let metric = crf_dev_metric(&model, dev)?;
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

/// [`Learner`] adapter for the CRF tagger.
#[derive(Debug, Clone, Default)]
pub struct CrfLearner {
    pub hyper: TrainHyper,
}

impl Learner for CrfLearner {
    type Model = CrfModel;

    fn train(
        &self,
        train: &Corpus,
        dev: &Corpus,
        epochs: usize,
        seed: u64,
        init: Option<&CrfModel>,
    ) -> Result<CrfModel> {
        let hyper = TrainHyper {
            seed,
            ..self.hyper.clone()
        };
        crf_train(train, dev, epochs, &hyper, init)
    }

    fn predict(&self, model: &CrfModel, tokens: &TokenSequence) -> Result<Prediction> {
        model.viterbi(tokens)
    }

    fn dev_metric(&self, model: &CrfModel, dev: &Corpus) -> Result<f64> {
        crf_dev_metric(model, dev)
    }

    fn reset(&self, model: &CrfModel) -> CrfModel {
        model.reset_weights()
    }
}
