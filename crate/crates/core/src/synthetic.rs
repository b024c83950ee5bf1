//! Seeded generator for a desk-scale corpus: one private vocabulary per
//! class plus a shared noise vocabulary.

use std::collections::{HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::path::{Path, PathBuf};

use crate::corpus::{Corpus, Document, DomainLabel, LabelSpace, Source, SplitRatios};
use crate::error::{Error, Result};
use crate::pipeline::{BackendSpec, CorpusPaths, RunConfig, VoteConfig};
use crate::preprocess::Scenario;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub labels: LabelSpace,
    pub labeled_per_class: usize,
    pub unlabeled_per_class: usize,
    /// Words private to each class.
    pub class_vocab: usize,
    /// Words shared by all classes.
    pub noise_vocab: usize,
    /// Probability that a token is drawn from the noise vocabulary.
    pub noise_rate: f64,
    pub title_len: usize,
    pub abstract_len: usize,
    pub keywords: usize,
    /// Unlabeled documents (one per class, cycling) that restate a labeled
    /// document with different casing and punctuation.
    pub duplicates: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// 7 classes, 700 labeled and 210 unlabeled documents, 10% noise.
    fn default() -> Self {
        SyntheticSpec {
            labels: LabelSpace::wos7(),
            labeled_per_class: 100,
            unlabeled_per_class: 30,
            class_vocab: 40,
            noise_vocab: 80,
            noise_rate: 0.1,
            title_len: 6,
            abstract_len: 30,
            keywords: 4,
            duplicates: 7,
            seed: 20_240_101,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub labeled: Corpus,
    /// No gold labels; every document carries its generating class as
    /// query class.
    pub unlabeled: Corpus,
    /// Generating class of every unlabeled document.
    pub hidden_labels: HashMap<String, DomainLabel>,
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "pl", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ia", "eo"];

fn make_words(rng: &mut ChaCha8Rng, n: usize, used: &mut HashSet<String>) -> Vec<String> {
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.random_range(2..=4);
        let w: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
            .collect();
        if used.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

struct Sampler<'a> {
    class_words: &'a [String],
    noise: &'a [String],
    noise_rate: f64,
}

impl Sampler<'_> {
    fn words(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| {
                let pool = if rng.random_bool(self.noise_rate) {
                    self.noise
                } else {
                    self.class_words
                };
                pool.choose(rng).unwrap().clone()
            })
            .collect()
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut used = HashSet::new();
    let noise = make_words(&mut rng, spec.noise_vocab, &mut used);
    let vocabularies: Vec<Vec<String>> = spec
        .labels
        .labels()
        .iter()
        .map(|_| make_words(&mut rng, spec.class_vocab, &mut used))
        .collect();

    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    let mut hidden = HashMap::new();
    for (c, label) in spec.labels.labels().iter().enumerate() {
        let sampler = Sampler {
            class_words: &vocabularies[c],
            noise: &noise,
            noise_rate: spec.noise_rate,
        };
        let mut make = |id: String| {
            let title = sampler.words(&mut rng, spec.title_len);
            let title = title.iter().map(|w| capitalize(w)).collect::<Vec<_>>().join(" ");
            let abstract_text = format!("{}.", sampler.words(&mut rng, spec.abstract_len).join(" "));
            Document::new(id, title, abstract_text).with_keywords(sampler.words(&mut rng, spec.keywords))
        };
        for i in 0..spec.labeled_per_class {
            labeled.push(make(format!("L{c}-{i:04}")).with_label(label.clone()));
        }
        for i in 0..spec.unlabeled_per_class {
            let mut doc = make(format!("U{c}-{i:04}")).with_query_class(label.clone());
            doc.source = Source::Retrieved;
            hidden.insert(doc.id.clone(), label.clone());
            unlabeled.push(doc);
        }
    }

    // Overwrite the first unlabeled documents of successive classes with
    // restyled copies of labeled ones.
    let n_classes = spec.labels.len();
    for k in 0..spec.duplicates.min(unlabeled.len()) {
        let c = k % n_classes;
        let round = k / n_classes;
        let src = &labeled[c * spec.labeled_per_class + round % spec.labeled_per_class.max(1)];
        let target = c * spec.unlabeled_per_class + round;
        if target >= unlabeled.len() || round >= spec.unlabeled_per_class {
            break;
        }
        let dst = &mut unlabeled[target];
        dst.title = format!("{}!", src.title.to_uppercase());
        dst.abstract_text = src.abstract_text.replace(' ', " , ");
        dst.keywords = src.keywords.clone();
    }

    Ok(SyntheticCorpus {
        labeled: Corpus::new("synthetic-labeled", spec.labels.clone(), labeled)?,
        unlabeled: Corpus::new("synthetic-unlabeled", spec.labels.clone(), unlabeled)?,
        hidden_labels: hidden,
    })
}

/// Run configuration for a desk-scale experiment: four lightweight
/// backends, each on its own 70% share of the training partition.
pub fn desk_config(labeled: PathBuf, unlabeled: PathBuf, seed: u64) -> RunConfig {
    RunConfig {
        name: "desk".into(),
        seed,
        scenario: Scenario::AbstractAndKeywords,
        labels: None,
        output_dir: None,
        baselines: None,
        corpus: CorpusPaths {
            labeled,
            unlabeled,
            format: None,
        },
        split: SplitRatios::default(),
        backends: ["nb-a", "nb-b", "nb-c", "nb-d"]
            .iter()
            .map(|id| BackendSpec {
                model_id: (*id).into(),
                kind: crate::backend::LIGHTWEIGHT_KIND.into(),
                alpha: 1.0,
                subsample: 0.7,
                descriptor: None,
            })
            .collect(),
        train: TrainConfig {
            max_epochs: 4,
            batch_size: 32,
            max_len: 128,
            seed,
            ..TrainConfig::default()
        },
        vote: VoteConfig::default(),
    }
}

/// Writes `labeled.jsonl`, `unlabeled.jsonl` and `desk.toml` into `dir`
/// and returns the config path.
pub fn write_desk(dir: &Path, spec: &SyntheticSpec) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus = generate(spec)?;
    corpus.labeled.save_jsonl(&dir.join("labeled.jsonl"))?;
    corpus.unlabeled.save_jsonl(&dir.join("unlabeled.jsonl"))?;
    let config = desk_config("labeled.jsonl".into(), "unlabeled.jsonl".into(), spec.seed);
    let path = dir.join("desk.toml");
    std::fs::write(&path, config.to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
