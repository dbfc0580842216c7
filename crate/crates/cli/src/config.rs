//! Experiment configuration file.
//!
//! ```toml
//! task = "sequence"          # or "classification"
//! seed = 1
//! scheme = "ner"             # "ner", "pos" or a scheme file (sequence tasks)
//! repair_bio = false
//!
//! [paths]                    # relative to the config file
//! train = "data/source.tsv"
//! dev = "data/dev.tsv"
//! test = "data/test.tsv"
//! unlabeled = "data/unlabeled.tsv"
//! out = "runs/ner"
//!
//! [learner]
//! epochs = 20
//! learning_rate = 0.1
//! l2 = 0.0001
//! batch_size = 16
//!
//! [selftrain]
//! policy = { kind = "threshold", tau = 0.9 }
//! k_epochs = 5
//! max_iterations = 20
//! patience = 10
//! warm_start = true
//! ```

use std::path::{Path, PathBuf};

use pseudolabel::corpus::{LabelScheme, TaskKind};
use pseudolabel::learner::TrainHyper;
use pseudolabel::selftrain::{SelectionPolicy, SelfTrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default)]
    pub repair_bio: bool,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub selftrain: SelfTrainSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlabeled: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    /// Inner early stopping on dev, in epochs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
}

impl Default for LearnerSection {
    fn default() -> Self {
        let h = TrainHyper::default();
        Self {
            epochs: 20,
            learning_rate: h.learning_rate,
            l2: h.l2,
            batch_size: h.batch_size,
            patience: h.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfTrainSection {
    pub policy: SelectionPolicy,
    pub k_epochs: usize,
    pub max_iterations: usize,
    pub patience: usize,
    pub warm_start: bool,
}

impl Default for SelfTrainSection {
    fn default() -> Self {
        let c = SelfTrainConfig::default();
        Self {
            policy: c.policy,
            k_epochs: c.k_epochs,
            max_iterations: c.max_iterations,
            patience: c.patience,
            warm_start: c.warm_start,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub policy: Option<String>,
    pub tau: Option<f64>,
    pub s: Option<usize>,
    pub k_epochs: Option<usize>,
    pub max_iters: Option<usize>,
    pub patience: Option<usize>,
    pub warm_start: Option<bool>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [&mut p.train, &mut p.dev, &mut p.test, &mut p.unlabeled, &mut p.out] {
            if let Some(path) = slot {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        if let Some(s) = &self.scheme {
            if !matches!(s.as_str(), "ner" | "pos") && Path::new(s).is_relative() {
                self.scheme = Some(base.join(s).to_string_lossy().into_owned());
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        let st = &mut self.selftrain;
        if let Some(name) = &o.policy {
            st.policy = match name.as_str() {
                "threshold" => SelectionPolicy::Threshold {
                    tau: o.tau.or(match st.policy {
                        SelectionPolicy::Threshold { tau } => Some(tau),
                        _ => None,
                    })
                    .unwrap_or(0.9),
                },
                "top-k" | "top_k" => SelectionPolicy::TopK {
                    s: o.s.or(policy_s(st.policy)).unwrap_or(100),
                },
                "class-balanced" | "class_balanced" => SelectionPolicy::ClassBalanced {
                    s: o.s.or(policy_s(st.policy)).unwrap_or(100),
                },
                other => return Err(CliError::Config(format!("unknown policy {other:?}"))),
            };
        }
        match (&mut st.policy, o.tau, o.s) {
            (SelectionPolicy::Threshold { tau }, Some(t), _) => *tau = t,
            (SelectionPolicy::TopK { s } | SelectionPolicy::ClassBalanced { s }, _, Some(v)) => *s = v,
            (_, None, None) => {}
            (_, Some(_), _) => return Err(CliError::Config("--tau applies to the threshold policy only".into())),
            (_, _, Some(_)) => return Err(CliError::Config("--s applies to top-k and class-balanced only".into())),
        }
        if let Some(k) = o.k_epochs {
            st.k_epochs = k;
        }
        if let Some(m) = o.max_iters {
            st.max_iterations = m;
        }
        if let Some(p) = o.patience {
            st.patience = p;
        }
        if let Some(w) = o.warm_start {
            st.warm_start = w;
        }
        if let Some(out) = &o.out {
            self.paths.out = Some(out.clone());
        }
        Ok(())
    }

    pub fn hyper(&self) -> TrainHyper {
        TrainHyper {
            learning_rate: self.learner.learning_rate,
            l2: self.learner.l2,
            batch_size: self.learner.batch_size,
            seed: self.seed,
            patience: self.learner.patience,
        }
    }

    pub fn selftrain_config(&self) -> SelfTrainConfig {
        let s = &self.selftrain;
        SelfTrainConfig {
            policy: s.policy,
            k_epochs: s.k_epochs,
            max_iterations: s.max_iterations,
            patience: s.patience,
            warm_start: s.warm_start,
            seed: self.seed,
        }
    }

    pub fn label_scheme(&self) -> Result<Option<LabelScheme>> {
        Ok(match self.scheme.as_deref() {
            None => None,
            Some("ner") => Some(LabelScheme::ner()),
            Some("pos") => Some(LabelScheme::pos()),
            Some(path) => Some(LabelScheme::read(path)?),
        })
    }

    /// Hex SHA-256 of the effective configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn require(&self, name: &str, path: &Option<PathBuf>) -> Result<PathBuf> {
        let path = path
            .clone()
            .ok_or_else(|| CliError::Config(format!("paths.{name} is not set")))?;
        if !path.exists() {
            return Err(CliError::Config(format!("paths.{name}: {} does not exist", path.display())));
        }
        Ok(path)
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let out = self
            .paths
            .out
            .clone()
            .ok_or_else(|| CliError::Config("paths.out is not set".into()))?;
        std::fs::create_dir_all(&out).map_err(io(&out))?;
        Ok(out)
    }
}

fn policy_s(p: SelectionPolicy) -> Option<usize> {
    match p {
        SelectionPolicy::TopK { s } | SelectionPolicy::ClassBalanced { s } => Some(s),
        SelectionPolicy::Threshold { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            task: TaskKind::Sequence,
            seed: 7,
            scheme: Some("ner".into()),
            repair_bio: true,
            paths: Paths {
                train: Some("a/train.tsv".into()),
                dev: None,
                test: Some("test.tsv".into()),
                unlabeled: Some("u.tsv".into()),
                out: Some("out".into()),
            },
            learner: LearnerSection {
                epochs: 3,
                learning_rate: 0.37,
                l2: 1e-7,
                batch_size: 5,
                patience: Some(2),
            },
            selftrain: SelfTrainSection {
                policy: SelectionPolicy::TopK { s: 50 },
                k_epochs: 2,
                max_iterations: 4,
                patience: 0,
                warm_start: false,
            },
        }
    }

    #[test]
    fn round_trips_losslessly() {
        let cfg = sample();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let minimal = ExperimentConfig::from_toml("task = \"classification\"\n").unwrap();
        assert_eq!(ExperimentConfig::from_toml(&minimal.to_toml()).unwrap(), minimal);
    }

    #[test]
    fn overrides_switch_policy() {
        let mut cfg = sample();
        cfg.apply(&Overrides {
            policy: Some("threshold".into()),
            tau: Some(0.8),
            warm_start: Some(true),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.selftrain.policy, SelectionPolicy::Threshold { tau: 0.8 });
        assert!(cfg.selftrain.warm_start);
        let err = cfg
            .apply(&Overrides {
                s: Some(3),
                ..Overrides::default()
            })
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_tracks_content() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("task = \"sequence\"\nsede = 3\n").is_err());
    }
}
