use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{LabelSpace, RecordFormat, SplitRatios};
use crate::ensemble::VotePolicy;
use crate::error::{Error, Result};
use crate::preprocess::Scenario;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    pub labeled: PathBuf,
    pub unlabeled: PathBuf,
    /// Record format of both files; guessed from the extension when absent.
    #[serde(default)]
    pub format: Option<RecordFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    pub model_id: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Share of the training partition this backend sees.
    #[serde(default = "default_subsample")]
    pub subsample: f64,
    /// Start from a saved adapter instead of an empty model.
    #[serde(default)]
    pub descriptor: Option<PathBuf>,
}

fn default_kind() -> String {
    crate::backend::LIGHTWEIGHT_KIND.to_owned()
}

fn default_alpha() -> f64 {
    1.0
}

fn default_subsample() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteConfig {
    #[serde(default = "default_min_votes")]
    pub min_votes: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_min_votes() -> usize {
    2
}

fn default_top_k() -> usize {
    3
}

impl Default for VoteConfig {
    fn default() -> Self {
        VoteConfig {
            min_votes: default_min_votes(),
            top_k: default_top_k(),
        }
    }
}

impl VoteConfig {
    pub fn policy(&self) -> VotePolicy {
        VotePolicy {
            min_votes: self.min_votes,
            ..Default::default()
        }
    }
}

/// Declarative description of one experiment, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: Scenario,
    /// Label names; the seven WoS domains when absent.
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    /// Default run directory when none is given on the command line.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Literature accuracies for the comparison report.
    #[serde(default)]
    pub baselines: Option<PathBuf>,
    pub corpus: CorpusPaths,
    #[serde(default)]
    pub split: SplitRatios,
    pub backends: Vec<BackendSpec>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub vote: VoteConfig,
}

/// Fields that change results. The run name, output directory and report
/// baselines are left out.
#[derive(Serialize)]
struct Semantic<'a> {
    seed: u64,
    scenario: Scenario,
    labels: &'a LabelSpace,
    corpus: &'a CorpusPaths,
    split: &'a SplitRatios,
    backends: &'a [BackendSpec],
    train: &'a TrainConfig,
    vote: &'a VoteConfig,
}

impl RunConfig {
    /// Parses a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus.labeled);
        fix(&mut self.corpus.unlabeled);
        if let Some(p) = self.output_dir.as_mut() {
            fix(p);
        }
        if let Some(p) = self.baselines.as_mut() {
            fix(p);
        }
        for b in &mut self.backends {
            if let Some(p) = b.descriptor.as_mut() {
                fix(p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn label_space(&self) -> Result<LabelSpace> {
        match &self.labels {
            Some(names) => LabelSpace::from_names(names),
            None => Ok(LabelSpace::wos7()),
        }
    }

    /// The top-level seed drives every stochastic stage.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn format_of(&self, path: &Path) -> Result<RecordFormat> {
        match self.corpus.format {
            Some(f) => Ok(f),
            None => RecordFormat::from_path(path),
        }
    }

    /// Keeps only the named backends, in the given order.
    pub fn select_backends(&mut self, ids: &[String]) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        let mut chosen = Vec::new();
        for id in ids {
            let spec = self
                .backends
                .iter()
                .find(|b| &b.model_id == id)
                .ok_or_else(|| Error::InvalidConfig(format!("no backend `{id}` in config")))?;
            chosen.push(spec.clone());
        }
        self.backends = chosen;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let labels = self.label_space()?;
        for p in [&self.corpus.labeled, &self.corpus.unlabeled] {
            if !p.is_file() {
                return bad(format!("corpus file {} does not exist", p.display()));
            }
            self.format_of(p)?;
        }
        if let Some(p) = &self.baselines {
            if !p.is_file() {
                return bad(format!("baselines file {} does not exist", p.display()));
            }
        }
        self.split.validate()?;
        if self.backends.is_empty() {
            return bad("at least one backend is required".into());
        }
        for (i, b) in self.backends.iter().enumerate() {
            if self.backends[..i].iter().any(|o| o.model_id == b.model_id) {
                return bad(format!("backend `{}` listed twice", b.model_id));
            }
            if b.model_id.is_empty() || b.model_id.contains(['/', '\\']) {
                return bad(format!("invalid model id `{}`", b.model_id));
            }
            if b.kind != crate::backend::LIGHTWEIGHT_KIND && b.descriptor.is_none() {
                return bad(format!(
                    "backend `{}` of kind `{}` needs a descriptor",
                    b.model_id, b.kind
                ));
            }
            if let Some(d) = &b.descriptor {
                if !d.is_file() {
                    return bad(format!("descriptor {} does not exist", d.display()));
                }
            }
            if !(b.subsample > 0.0 && b.subsample <= 1.0) {
                return bad(format!("backend `{}`: subsample must be in (0, 1]", b.model_id));
            }
            if !(b.alpha > 0.0 && b.alpha.is_finite()) {
                return bad(format!("backend `{}`: alpha must be > 0", b.model_id));
            }
        }
        self.train.validate()?;
        self.vote.policy().validate(self.backends.len())?;
        if self.vote.top_k < 1 || self.vote.top_k > labels.len() {
            return bad(format!("top_k must be in 1..={}", labels.len()));
        }
        Ok(())
    }

    /// Hash of every result-relevant field.
    pub fn fingerprint(&self) -> Result<String> {
        let labels = self.label_space()?;
        let train = self.train_config();
        let view = Semantic {
            seed: self.seed,
            scenario: self.scenario,
            labels: &labels,
            corpus: &self.corpus,
            split: &self.split,
            backends: &self.backends,
            train: &train,
            vote: &self.vote,
        };
        let json = serde_json::to_vec(&view)?;
        Ok(hex::encode(&Sha256::digest(&json)[..8]))
    }
}
