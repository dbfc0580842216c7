//! `pseudolabel` command-line front-end.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pseudolabel::corpus::LabelScheme;

use crate::commands::{EvalSource, SynthSizes};
use crate::config::{ExperimentConfig, Overrides};
use crate::error::Result;

#[derive(Parser)]
#[command(name = "pseudolabel", version, about = "Self-training experiments for sequence labeling and text classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on gold data only and report test scores.
    Train(RunArgs),
    /// Self-train with an unlabeled pool and report test scores.
    Selftrain(RunArgs),
    /// Score a model (or a predictions file) on a labeled corpus.
    Evaluate {
        #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
        model: Option<PathBuf>,
        /// Labeled predictions, e.g. written by `predict`.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        /// `ner`, `pos` or a scheme file. Must match the model's labels;
        /// required for sequence predictions files.
        #[arg(long)]
        scheme: Option<String>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label a corpus with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate source/target corpora from a shift spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 400)]
        n_source: usize,
        #[arg(long, default_value_t = 300)]
        n_source_test: usize,
        #[arg(long, default_value_t = 1000)]
        n_unlabeled: usize,
        /// Labeled target examples, split 30/70 into dev and test.
        #[arg(long, default_value_t = 600)]
        n_target: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// threshold, top-k or class-balanced
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    k_epochs: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, overrides_with = "cold_start")]
    warm_start: bool,
    #[arg(long, overrides_with = "warm_start")]
    cold_start: bool,
    /// Output directory; overrides `paths.out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            policy: self.policy.clone(),
            tau: self.tau,
            s: self.s,
            k_epochs: self.k_epochs,
            max_iters: self.max_iters,
            patience: self.patience,
            warm_start: match (self.warm_start, self.cold_start) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
            out: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn parse_scheme(s: &str) -> Result<LabelScheme> {
    Ok(match s {
        "ner" => LabelScheme::ner(),
        "pos" => LabelScheme::pos(),
        path => LabelScheme::read(Path::new(path))?,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let s = commands::train(&args.config()?)?;
            println!("{}", s.report.to_table().trim_end());
            println!("wrote {}", s.out.display());
        }
        Command::Selftrain(args) => {
            let s = commands::selftrain(&args.config()?)?;
            println!("{}", s.report.to_table().trim_end());
            println!("wrote {}", s.out.display());
        }
        Command::Evaluate {
            model,
            predictions,
            test,
            scheme,
            out,
        } => {
            let scheme = scheme.as_deref().map(parse_scheme).transpose()?;
            let source = match (&model, &predictions) {
                (Some(m), _) => EvalSource::Model(m),
                (None, Some(p)) => EvalSource::Predictions(p),
                (None, None) => unreachable!("clap requires one of --model/--predictions"),
            };
            let text = commands::evaluate(source, &test, scheme.as_ref())?;
            if let Some(out) = out {
                std::fs::write(&out, &text).map_err(error::io(&out))?;
            }
            print!("{text}");
        }
        Command::Predict { model, input, output } => {
            let n = commands::predict(&model, &input, &output)?;
            println!("labeled {n} examples into {}", output.display());
        }
        Command::Synth {
            spec,
            out,
            seed,
            n_source,
            n_source_test,
            n_unlabeled,
            n_target,
        } => {
            let sizes = SynthSizes {
                source: n_source,
                source_test: n_source_test,
                unlabeled: n_unlabeled,
                target: n_target,
            };
            for path in commands::synth(&spec, seed, &sizes, &out)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
