//! Zero-shot vs. self-training comparisons on synthetic shifted corpora.
//!
//! A run generates a labeled source corpus, an unlabeled target pool and a
//! labeled target set that is split 30/70 into dev and test. The zero-shot
//! baseline is trained on source data only; the self-trained model adds
//! pseudo-labeled target examples. The ablation swaps the target pool for an
//! equally sized unlabeled source pool.

use serde::{Deserialize, Serialize};

use crate::corpus::{split_corpus, Corpus};
use crate::crf::{crf_predictions, crf_train, CrfLearner, CrfModel};
use crate::error::Result;
use crate::eval;
use crate::learner::TrainHyper;
use crate::maxent::{maxent_predictions, maxent_train, MaxentLearner};
use crate::selftrain::{self_train, SelectionPolicy, SelfTrainConfig};
use crate::synthgen::{build_lexicon, generate, sample_corpus, Domain, ShiftSpec};

/// RNG stream of the held-out source test set.
pub const SOURCE_TEST_STREAM: u64 = 4;
/// RNG stream of the unlabeled source pool used by the ablation.
pub const SOURCE_POOL_STREAM: u64 = 5;

/// Fractions of the labeled target set used for dev and test.
pub const DEV_TEST_SPLIT: [f64; 2] = [0.3, 0.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub spec: ShiftSpec,
    pub n_source: usize,
    pub n_source_test: usize,
    pub n_unlabeled: usize,
    /// Labeled target examples, split into dev and test.
    pub n_target_labeled: usize,
    pub hyper: TrainHyper,
    /// Epochs for the source-only baseline.
    pub baseline_epochs: usize,
    pub selftrain: SelfTrainConfig,
}

/// Synthetic corpora for one seed.
#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub source: Corpus,
    pub source_test: Corpus,
    pub target_pool: Corpus,
    pub source_pool: Corpus,
    pub target_dev: Corpus,
    pub target_test: Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRun {
    pub seed: u64,
    /// Entity macro-F1 of the source-only model on source test data.
    pub source_test_f1: f64,
    /// Entity macro-F1 of the source-only model on target test data.
    pub zero_shot_f1: f64,
    pub self_trained_f1: f64,
    /// Self-training with the unlabeled source pool instead of the target pool.
    pub source_pool_f1: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRun {
    pub seed: u64,
    pub zero_shot_f1: f64,
    pub balanced_f1: f64,
    pub top_s_f1: f64,
}

impl Benchmark {
    /// NER-shaped sequence benchmark: shift rate 0.5, threshold 0.90.
    pub fn ner(seed: u64) -> Self {
        Self {
            spec: ShiftSpec::ner_benchmark(0.5, seed),
            n_source: 400,
            n_source_test: 300,
            n_unlabeled: 1000,
            n_target_labeled: 600,
            hyper: TrainHyper::default(),
            baseline_epochs: 20,
            selftrain: SelfTrainConfig {
                policy: SelectionPolicy::Threshold { tau: 0.9 },
                k_epochs: 5,
                max_iterations: 10,
                patience: 10,
                warm_start: true,
                seed,
            },
        }
    }

    /// Skewed two-class benchmark: 80/20 class split, shift rate 0.7, S = 50.
    ///
    /// The stronger shift leaves most minority-class documents without known
    /// evidence, which is where per-class selection matters.
    pub fn skewed_classification(seed: u64) -> Self {
        Self {
            spec: ShiftSpec::skewed_classification_benchmark(0.7, seed),
            n_source: 400,
            n_source_test: 300,
            n_unlabeled: 2000,
            n_target_labeled: 1000,
            hyper: TrainHyper::default(),
            baseline_epochs: 20,
            selftrain: SelfTrainConfig {
                policy: SelectionPolicy::ClassBalanced { s: 50 },
                k_epochs: 5,
                max_iterations: 10,
                patience: 10,
                warm_start: true,
                seed,
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.spec.seed = seed;
        self.selftrain.seed = seed;
        self.hyper.seed = seed;
        self
    }

    pub fn data(&self) -> Result<BenchmarkData> {
        let spec = &self.spec;
        let gen = generate(spec, self.n_source, self.n_unlabeled, self.n_target_labeled)?;
        let lex = build_lexicon(spec)?;
        let source_test = sample_corpus(spec, &lex, Domain::Source, self.n_source_test, true, SOURCE_TEST_STREAM)?;
        let source_pool = sample_corpus(spec, &lex, Domain::Source, self.n_unlabeled, false, SOURCE_POOL_STREAM)?;
        let mut parts = split_corpus(&gen.target_test, &DEV_TEST_SPLIT, spec.seed)?.into_iter();
        let target_dev = parts.next().expect("two splits");
        let target_test = parts.next().expect("two splits");
        Ok(BenchmarkData {
            source: gen.source_labeled,
            source_test,
            target_pool: gen.target_unlabeled,
            source_pool,
            target_dev,
            target_test,
        })
    }

    /// Source-only CRF selected on target dev.
    pub fn baseline_crf(&self, data: &BenchmarkData) -> Result<CrfModel> {
        crf_train(&data.source, &data.target_dev, self.baseline_epochs, &self.hyper, None)
    }

    pub fn run_sequence(&self, with_ablation: bool) -> Result<SequenceRun> {
        let data = self.data()?;
        let baseline = self.baseline_crf(&data)?;
        let learner = CrfLearner {
            hyper: self.hyper.clone(),
        };
        let st = self_train(&self.selftrain, &data.source, &data.target_pool, &data.target_dev, &learner)?;
        let source_pool_f1 = if with_ablation {
            let abl = self_train(&self.selftrain, &data.source, &data.source_pool, &data.target_dev, &learner)?;
            Some(crf_entity_f1(&abl.model, &data.target_test)?)
        } else {
            None
        };
        Ok(SequenceRun {
            seed: self.spec.seed,
            source_test_f1: crf_entity_f1(&baseline, &data.source_test)?,
            zero_shot_f1: crf_entity_f1(&baseline, &data.target_test)?,
            self_trained_f1: crf_entity_f1(&st.model, &data.target_test)?,
            source_pool_f1,
            iterations: st.state.iteration,
        })
    }

    /// Compares class-balanced selection with plain top-S at the same `S`.
    pub fn run_classification(&self) -> Result<ClassificationRun> {
        let data = self.data()?;
        let baseline = maxent_train(&data.source, &data.target_dev, self.baseline_epochs, &self.hyper, None)?;
        let learner = MaxentLearner {
            hyper: self.hyper.clone(),
        };
        let s = match self.selftrain.policy {
            SelectionPolicy::ClassBalanced { s } | SelectionPolicy::TopK { s } => s,
            SelectionPolicy::Threshold { .. } => 50,
        };
        let balanced_cfg = SelfTrainConfig {
            policy: SelectionPolicy::ClassBalanced { s },
            ..self.selftrain.clone()
        };
        let top_cfg = SelfTrainConfig {
            policy: SelectionPolicy::TopK { s },
            ..self.selftrain.clone()
        };
        let balanced = self_train(&balanced_cfg, &data.source, &data.target_pool, &data.target_dev, &learner)?;
        let top = self_train(&top_cfg, &data.source, &data.target_pool, &data.target_dev, &learner)?;
        let score = |m| -> Result<f64> {
            let preds = maxent_predictions(m, &data.target_test)?;
            Ok(eval::classification_macro_f1(&data.target_test, &preds)?.macro_f1)
        };
        Ok(ClassificationRun {
            seed: self.spec.seed,
            zero_shot_f1: score(&baseline)?,
            balanced_f1: score(&balanced.model)?,
            top_s_f1: score(&top.model)?,
        })
    }
}

pub fn crf_entity_f1(model: &CrfModel, gold: &Corpus) -> Result<f64> {
    Ok(eval::entity_f1(gold, &crf_predictions(model, gold)?)?.macro_f1)
}
