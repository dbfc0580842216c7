//! Shared training contract and prediction type for the CRF and maxent learners.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TokenSequence};
use crate::error::{Error, Result};

/// Optimizer and regularization settings shared by both learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub learning_rate: f64,
    /// L2 coefficient; the penalty is `l2 / 2 * ||w||^2`.
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop an inner training run after this many epochs without dev
    /// improvement. `None` runs every requested epoch.
    pub patience: Option<usize>,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-4,
            batch_size: 16,
            seed: 0,
            patience: None,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Labels and confidences predicted for one example.
///
/// For sequences `confidences[j]` is the posterior marginal of the predicted
/// label at position `j` and `confidence` is their minimum. For classification
/// `labels` and `confidences` have one entry: the top class and its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<String>,
    pub confidences: Vec<f64>,
    pub confidence: f64,
}

impl Prediction {
    pub fn from_token_confidences(labels: Vec<String>, confidences: Vec<f64>) -> Self {
        let confidence = confidences.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            labels,
            confidences,
            confidence,
        }
    }
}

/// A trainable model family usable by the self-training loop.
pub trait Learner: Sync {
    type Model: Clone + Send + Sync;

    /// Trains for `epochs` epochs, continuing from `init` when given.
    fn train(
        &self,
        train: &Corpus,
        dev: &Corpus,
        epochs: usize,
        seed: u64,
        init: Option<&Self::Model>,
    ) -> Result<Self::Model>;

    fn predict(&self, model: &Self::Model, tokens: &TokenSequence) -> Result<Prediction>;

    /// Metric used for model selection; larger is better.
    fn dev_metric(&self, model: &Self::Model, dev: &Corpus) -> Result<f64>;

    /// Same vocabulary and labels, all weights zero.
    fn reset(&self, model: &Self::Model) -> Self::Model;
}
