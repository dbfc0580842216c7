use std::path::{Path, PathBuf};

use pseudolabel::corpus::{
    read_sequence_corpus, read_text_corpus, write_corpus, Annotation, Corpus, Example, LabelScheme, Origin, TaskKind,
};
use pseudolabel::crf::{crf_predictions, crf_train, CrfLearner};
use pseudolabel::eval::{self, EvalReport};
use pseudolabel::experiment::Benchmark;
use pseudolabel::maxent::{maxent_predictions, maxent_train, MaxentLearner};
use pseudolabel::modelfile::Model;
use pseudolabel::selftrain::{self_train, SelectionPolicy, SelfTrainState};
use pseudolabel::synthgen::ShiftSpec;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{io, CliError, Result};

fn read_corpus(cfg: &ExperimentConfig, scheme: Option<&LabelScheme>, path: &Path, labeled: bool) -> Result<Corpus> {
    let corpus = match cfg.task {
        TaskKind::Sequence => {
            let scheme = scheme.ok_or_else(|| CliError::Config("sequence tasks need `scheme`".into()))?;
            read_sequence_corpus(path, scheme, cfg.repair_bio)?
        }
        TaskKind::Classification => read_text_corpus(path, labeled)?,
    };
    if labeled && !corpus.is_labeled() {
        return Err(pseudolabel::Error::InvalidData(format!("{}: expected a labeled corpus", path.display())).into());
    }
    Ok(corpus)
}

/// Reads `path` in the format and label set `model` expects.
fn read_for_model(model: &Model, path: &Path, labeled: bool) -> Result<Corpus> {
    let corpus = match model {
        Model::Crf(m) => read_sequence_corpus(path, &m.scheme()?, false)?,
        Model::Maxent(m) => {
            let c = read_text_corpus(path, labeled)?;
            if let Some(bad) = c.label_set().iter().find(|l| m.class_index(l).is_none()) {
                return Err(pseudolabel::Error::InvalidData(format!("class {bad:?} is unknown to the model")).into());
            }
            c
        }
    };
    if labeled && !corpus.is_labeled() {
        return Err(pseudolabel::Error::InvalidData(format!("{}: expected a labeled corpus", path.display())).into());
    }
    Ok(corpus)
}

enum Predictions {
    Tags(Vec<Vec<String>>),
    Classes(Vec<String>),
}

fn predict_all(model: &Model, corpus: &Corpus) -> Result<Predictions> {
    Ok(match model {
        Model::Crf(m) => Predictions::Tags(crf_predictions(m, corpus)?),
        Model::Maxent(m) => Predictions::Classes(maxent_predictions(m, corpus)?),
    })
}

fn score(gold: &Corpus, pred: &Predictions) -> Result<EvalReport> {
    Ok(match pred {
        Predictions::Tags(p) => {
            if LabelScheme::infer(gold.label_set().to_vec())?.is_bio() {
                eval::entity_f1(gold, p)?
            } else {
                eval::tag_report(gold, p)?
            }
        }
        Predictions::Classes(p) => eval::classification_macro_f1(gold, p)?,
    })
}

fn evaluate_model(model: &Model, gold: &Corpus) -> Result<EvalReport> {
    score(gold, &predict_all(model, gold)?)
}

pub fn report_text(command: &str, hash: &str, extra: &[(&str, String)], report: &EvalReport) -> String {
    let mut out = format!("# pseudolabel {command}\nconfig_hash={hash}\n");
    for (k, v) in extra {
        out.push_str(&format!("{k}={v}\n"));
    }
    out.push('\n');
    out.push_str(&report.to_table());
    out.push('\n');
    out.push_str(&report.to_records());
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io(path))
}

fn empty_like(corpus: &Corpus) -> Corpus {
    Corpus::empty(corpus.task(), corpus.label_set().to_vec())
}

struct Inputs {
    train: Corpus,
    dev: Corpus,
    test: Corpus,
}

fn load_inputs(cfg: &ExperimentConfig, dev_required: bool) -> Result<(Inputs, Option<LabelScheme>)> {
    let train_path = cfg.require("train", &cfg.paths.train)?;
    let test_path = cfg.require("test", &cfg.paths.test)?;
    let dev_path = if dev_required || cfg.paths.dev.is_some() {
        Some(cfg.require("dev", &cfg.paths.dev)?)
    } else {
        None
    };
    let scheme = cfg.label_scheme()?;
    if cfg.task == TaskKind::Sequence && scheme.is_none() {
        return Err(CliError::Config("sequence tasks need `scheme`".into()));
    }
    let train = read_corpus(cfg, scheme.as_ref(), &train_path, true)?;
    let dev = match dev_path {
        Some(p) => read_corpus(cfg, scheme.as_ref(), &p, true)?,
        None => empty_like(&train),
    };
    let test = read_corpus(cfg, scheme.as_ref(), &test_path, true)?;
    Ok((Inputs { train, dev, test }, scheme))
}

pub struct RunSummary {
    pub out: PathBuf,
    pub report: EvalReport,
}

/// Supervised training on gold data only.
pub fn train(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (data, _) = load_inputs(cfg, false)?;
    let out = cfg.out_dir()?;
    let hyper = cfg.hyper();
    let model = match cfg.task {
        TaskKind::Sequence => Model::Crf(crf_train(&data.train, &data.dev, cfg.learner.epochs, &hyper, None)?),
        TaskKind::Classification => {
            Model::Maxent(maxent_train(&data.train, &data.dev, cfg.learner.epochs, &hyper, None)?)
        }
    };
    model.save(out.join("model.bin"))?;
    let report = evaluate_model(&model, &data.test)?;
    let extra = [("command", "train".to_string()), ("train_size", data.train.len().to_string())];
    write(&out.join("report.txt"), &report_text("train", &cfg.hash(), &extra, &report))?;
    Ok(RunSummary { out, report })
}

/// Self-training from gold data plus an unlabeled pool.
pub fn selftrain(cfg: &ExperimentConfig) -> Result<RunSummary> {
    if cfg.task == TaskKind::Sequence && matches!(cfg.selftrain.policy, SelectionPolicy::ClassBalanced { .. }) {
        return Err(CliError::Config("class-balanced selection requires a classification task".into()));
    }
    let unlabeled_path = cfg.require("unlabeled", &cfg.paths.unlabeled)?;
    let (data, scheme) = load_inputs(cfg, true)?;
    let unlabeled = read_corpus(cfg, scheme.as_ref(), &unlabeled_path, false)?;
    let out = cfg.out_dir()?;
    let st = cfg.selftrain_config();
    let hyper = cfg.hyper();

    let (model, best_iteration, best_dev, state): (Model, usize, f64, SelfTrainState) = match cfg.task {
        TaskKind::Sequence => {
            let r = self_train(&st, &data.train, &unlabeled, &data.dev, &CrfLearner { hyper })?;
            (Model::Crf(r.model), r.best_iteration, r.best_dev_metric, r.state)
        }
        TaskKind::Classification => {
            let r = self_train(&st, &data.train, &unlabeled, &data.dev, &MaxentLearner { hyper })?;
            (Model::Maxent(r.model), r.best_iteration, r.best_dev_metric, r.state)
        }
    };
    model.save(out.join("model.bin"))?;
    write(&out.join("iterations.jsonl"), &state.log_jsonl())?;
    let ext = if cfg.task == TaskKind::Sequence { "tsv" } else { "txt" };
    write_corpus(&state.labeled, out.join(format!("labeled.{ext}")))?;
    let report = evaluate_model(&model, &data.test)?;
    let pseudo = state.labeled.examples().iter().filter(|e| e.origin == Origin::Pseudo).count();
    let extra = [
        ("command", "selftrain".to_string()),
        ("iterations", state.iteration.to_string()),
        ("best_iteration", best_iteration.to_string()),
        ("best_dev_metric", best_dev.to_string()),
        ("pseudo_labeled", pseudo.to_string()),
        ("unlabeled_remaining", state.unlabeled.len().to_string()),
    ];
    write(&out.join("report.txt"), &report_text("selftrain", &cfg.hash(), &extra, &report))?;
    Ok(RunSummary { out, report })
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(io(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub enum EvalSource<'a> {
    Model(&'a Path),
    /// A labeled predictions file; sequence files are read with `scheme`.
    Predictions(&'a Path),
}

/// Scores a model, or a predictions file, against a labeled test corpus.
pub fn evaluate(source: EvalSource, test: &Path, scheme: Option<&LabelScheme>) -> Result<String> {
    let (gold, pred, digest) = match source {
        EvalSource::Model(path) => {
            let model = Model::load(path)?;
            if let Some(s) = scheme {
                if s.labels() != model.labels() {
                    return Err(pseudolabel::Error::InvalidData(format!(
                        "label scheme {:?} does not match the model's labels {:?}",
                        s.labels(),
                        model.labels()
                    ))
                    .into());
                }
            }
            let gold = read_for_model(&model, test, true)?;
            let pred = predict_all(&model, &gold)?;
            (gold, pred, file_digest(path)?)
        }
        EvalSource::Predictions(path) => {
            let (gold, pred) = match scheme {
                Some(s) => {
                    let gold = read_sequence_corpus(test, s, false)?;
                    // model output may open chunks with I-; repairing keeps the scored chunks
                    let pred = read_sequence_corpus(path, s, true)?;
                    let tags = pred
                        .examples()
                        .iter()
                        .map(|e| e.tags().map(<[String]>::to_vec))
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| pseudolabel::Error::InvalidData("predictions file is unlabeled".into()))?;
                    (gold, Predictions::Tags(tags))
                }
                None => {
                    let gold = read_text_corpus(test, true)?;
                    let pred = read_text_corpus(path, true)?;
                    let classes = pred.examples().iter().map(|e| e.class().unwrap_or_default().to_owned()).collect();
                    (gold, Predictions::Classes(classes))
                }
            };
            (gold, pred, file_digest(path)?)
        }
    };
    let report = score(&gold, &pred)?;
    let hash = hex::encode(Sha256::digest(format!("evaluate\n{digest}\n{}\n", file_digest(test)?).as_bytes()));
    Ok(report_text("evaluate", &hash, &[("command", "evaluate".into())], &report))
}

/// Labels every example of `input` and writes the result in corpus format.
pub fn predict(model_path: &Path, input: &Path, output: &Path) -> Result<usize> {
    let model = Model::load(model_path)?;
    let corpus = read_for_model(&model, input, false)?.unlabeled();
    let labeled: Vec<Example> = match predict_all(&model, &corpus)? {
        Predictions::Tags(tags) => corpus
            .examples()
            .iter()
            .zip(tags)
            .map(|(e, t)| Example {
                annotation: Some(Annotation::Tags(t)),
                ..e.clone()
            })
            .collect(),
        Predictions::Classes(classes) => corpus
            .examples()
            .iter()
            .zip(classes)
            .map(|(e, c)| Example {
                annotation: Some(Annotation::Class(c)),
                ..e.clone()
            })
            .collect(),
    };
    let n = labeled.len();
    write_corpus(&Corpus::new(corpus.task(), model.labels().to_vec(), labeled)?, output)?;
    Ok(n)
}

#[derive(Debug, Clone)]
pub struct SynthSizes {
    pub source: usize,
    pub source_test: usize,
    pub unlabeled: usize,
    pub target: usize,
}

/// Generates benchmark corpora from a shift spec into `out`.
pub fn synth(spec_path: &Path, seed: Option<u64>, sizes: &SynthSizes, out: &Path) -> Result<Vec<PathBuf>> {
    let mut spec = ShiftSpec::read(spec_path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    // only the corpus sizes of the benchmark matter for data generation
    let bench = Benchmark {
        spec,
        n_source: sizes.source,
        n_source_test: sizes.source_test,
        n_unlabeled: sizes.unlabeled,
        n_target_labeled: sizes.target,
        ..Benchmark::ner(0)
    };
    let data = bench.data()?;
    std::fs::create_dir_all(out).map_err(io(out))?;
    let ext = if bench.spec.task == TaskKind::Sequence { "tsv" } else { "txt" };
    let mut written = Vec::new();
    for (name, corpus) in [
        ("source", &data.source),
        ("source_test", &data.source_test),
        ("source_pool", &data.source_pool),
        ("unlabeled", &data.target_pool),
        ("dev", &data.target_dev),
        ("test", &data.target_test),
    ] {
        let path = out.join(format!("{name}.{ext}"));
        write_corpus(corpus, &path)?;
        written.push(path);
    }
    if bench.spec.task == TaskKind::Sequence {
        let path = out.join("scheme.txt");
        LabelScheme::infer(bench.spec.states.clone())?.write(&path)?;
        written.push(path);
    }
    let path = out.join("spec.toml");
    write(&path, &bench.spec.to_toml())?;
    written.push(path);
    Ok(written)
}
