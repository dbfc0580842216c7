//! Self-training transfer from a labeled source domain to an unlabeled
//! target domain, for sequence labeling (linear-chain CRF) and text
//! classification (multinomial logistic regression).
//!
//! The pieces:
//!
//! * [`corpus`] reads, validates and splits CoNLL-style and line-per-example corpora;
//! * [`features`] turns tokens and texts into sparse feature vectors;
//! * [`crf`] and [`maxent`] are the learners, both producing confidences;
//! * [`selftrain`] holds the selection policies and the self-training loop;
//! * [`eval`] scores predictions (chunk F1, accuracy, macro F1, error categories);
//! * [`synthgen`] generates source/target corpora with a controllable lexical shift;
//! * [`experiment`] runs the zero-shot vs. self-training comparisons on them.

pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod learner;
pub mod maxent;
pub mod modelfile;
pub mod optim;
pub mod selftrain;
pub mod synthgen;

pub use error::{Error, ErrorKind, Result};
