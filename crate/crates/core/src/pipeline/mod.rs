//! Staged workflow over an append-only run directory.
//!
//! ```text
//! ingest -> split -> train -> infer -> vote -> expand -> train -> evaluate -> report
//! ```
//!
//! Every stage reads the artifacts of the stages before it, writes its own
//! directory under the run root, and appends one entry to `record.jsonl`.
//! The first `train` fits the backends on the original split; once `expand`
//! has run, `train` fits them again on the expanded split.

mod config;
mod record;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use config::{BackendSpec, CorpusPaths, RunConfig, VoteConfig};
pub use record::{unix_now, ExperimentRecord, RunDir, StageEntry, EVENTS_FILE, RECORD_FILE};

use crate::backend::{vocabulary_for, AdapterDescriptor, LightweightBackend, DESCRIPTOR_FILE};
use crate::corpus::{
    self, read_corpus_jsonl, seeded_permutation, shuffle_key, Corpus, DatasetBundle, Document, DomainLabel, LabelSpace,
    MergeReport, RecordError, SplitManifest, SplitRatios,
};
use crate::ensemble::{
    agreement_stats, infer, per_domain_agreement, predict_labels, vote_all, Prediction, VotePolicy, VoteRecord,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    confusion_indices, format_metrics_row, load_baselines, micro_metrics, render_comparison, ComparisonEntry,
    MetricsReport,
};
use crate::jsonl;
use crate::training::{lr_search, EpochRecord};

pub const STAGES: [&str; 8] = [
    "ingest", "split", "train", "infer", "vote", "expand", "evaluate", "report",
];

pub const CORPUS_FILE: &str = "ingest/corpus.jsonl";
pub const UNLABELED_FILE: &str = "ingest/unlabeled.jsonl";
pub const SPLIT_FILE: &str = "split/split.json";
pub const PREDICTIONS_FILE: &str = "infer/predictions.jsonl";
pub const VOTES_FILE: &str = "vote/votes.jsonl";
pub const REJECTIONS_FILE: &str = "vote/rejections.jsonl";
pub const AGREEMENT_FILE: &str = "vote/agreement.json";
pub const EXPANDED_CORPUS_FILE: &str = "expand/corpus.jsonl";
pub const EXPANDED_SPLIT_FILE: &str = "expand/split.json";
pub const METRICS_FILE: &str = "evaluate/metrics.jsonl";
pub const REPORT_FILE: &str = "report/report.md";

/// Which corpus a training run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Base,
    Expanded,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Base => "base",
            Phase::Expanded => "expanded",
        }
    }

    pub fn summary_file(&self) -> String {
        format!("train/{}/summary.json", self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub loaded: usize,
    pub rejected: Vec<RecordError>,
    pub duplicates_removed: usize,
    pub documents: usize,
    pub per_class: Vec<(DomainLabel, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub labeled: LoadSummary,
    pub unlabeled: LoadSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSummary {
    fn of(m: &SplitManifest) -> Self {
        SplitSummary {
            train: m.train.len(),
            validation: m.validation.len(),
            test: m.test.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model_id: String,
    pub learning_rate: f64,
    pub seed: u64,
    pub epoch: usize,
    pub val_micro_f1: f64,
    pub config_fingerprint: String,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendTrainSummary {
    pub model_id: String,
    pub train_documents: usize,
    pub best_lr: f64,
    pub best_val_micro_f1: f64,
    pub best_epoch: usize,
    /// Run directory of the best checkpoint, relative to the phase directory.
    pub checkpoint: String,
    pub diverged: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub phase: Phase,
    pub backends: Vec<BackendTrainSummary>,
}

impl TrainSummary {
    pub fn descriptor_path(&self, run: &RunDir, model_id: &str) -> Option<PathBuf> {
        self.backends.iter().find(|b| b.model_id == model_id).map(|b| {
            run.path(format!(
                "train/{}/{}/model/{DESCRIPTOR_FILE}",
                self.phase.as_str(),
                b.checkpoint
            ))
        })
    }
}

/// Per-domain agreement percentages of one model.
pub type DomainAgreement = (String, Vec<(DomainLabel, f64)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub total_models: usize,
    pub documents: usize,
    pub accepted: usize,
    pub histogram: Vec<(usize, usize)>,
    pub rejections: usize,
    /// Per model, per query domain: percentage of top-1 predictions that
    /// match the query class. Absent when some document has no query class.
    pub per_domain: Option<Vec<DomainAgreement>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandSummary {
    pub merge: MergeReport,
    pub per_class_before: Vec<(DomainLabel, usize)>,
    pub per_class_after: Vec<(DomainLabel, usize)>,
    pub split: SplitSummary,
}

/// One line of the metrics artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub phase: Phase,
    pub model_id: String,
    pub dataset: String,
    pub scenario: String,
    pub metrics: MetricsReport,
    pub confusion: Vec<Vec<u64>>,
}

pub const ENSEMBLE_MODEL_ID: &str = "hard-vote";

/// A configuration bound to a run directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: RunConfig,
    labels: LabelSpace,
    run: RunDir,
}

impl Pipeline {
    /// Validates the configuration and opens the run directory: `run_dir`
    /// if given, else the configured `output_dir`.
    pub fn open(config: RunConfig, run_dir: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let fingerprint = config.fingerprint()?;
        let root = run_dir
            .map(Path::to_path_buf)
            .or_else(|| config.output_dir.clone())
            .ok_or_else(|| Error::InvalidConfig("no run directory given and no output_dir configured".into()))?;
        let run_id = format!("{}-{fingerprint}", config.name);
        let run = RunDir::open(&root, run_id, fingerprint)?;
        let labels = config.label_space()?;
        Ok(Pipeline { config, labels, run })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn run_dir(&self) -> &RunDir {
        &self.run
    }

    pub fn run_stage(&self, stage: &str) -> Result<Value> {
        match stage {
            "ingest" => self.ingest().map(|s| json!(s)),
            "split" => self.split().map(|s| json!(s)),
            "train" => self.train().map(|s| json!(s)),
            "infer" => self.infer().map(|s| json!(s)),
            "vote" => self.vote().map(|s| json!(s)),
            "expand" => self.expand().map(|s| json!(s)),
            "evaluate" => self.evaluate().map(|s| json!(s)),
            "report" => self.report().map(|s| json!(s)),
            other => Err(Error::InvalidConfig(format!("unknown stage `{other}`"))),
        }
    }

    /// The full chain, training twice.
    pub fn run_all(&self) -> Result<()> {
        for stage in [
            "ingest", "split", "train", "infer", "vote", "expand", "train", "evaluate", "report",
        ] {
            self.run_stage(stage)?;
        }
        Ok(())
    }

    fn finish<T: Serialize>(&self, stage: &str, started: u64, summary: &T) -> Result<()> {
        self.run.record(stage, json!(summary), started)
    }

    fn load_labeled(&self) -> Result<Corpus> {
        let path = self.run.require(CORPUS_FILE, "ingested corpus")?;
        read_corpus_jsonl(&path, &self.config.name, &self.labels)
    }

    fn load_unlabeled(&self) -> Result<Corpus> {
        let path = self.run.require(UNLABELED_FILE, "ingested unlabeled documents")?;
        read_corpus_jsonl(&path, &format!("{}-unlabeled", self.config.name), &self.labels)
    }

    fn load_bundle(&self, corpus: &Corpus, split_file: &str) -> Result<DatasetBundle> {
        let path = self.run.require(split_file, "split")?;
        let manifest: SplitManifest = jsonl::read_json(&path)?;
        DatasetBundle::from_manifest(&manifest, corpus)
    }

    fn load_train_summary(&self, phase: Phase) -> Result<TrainSummary> {
        let what = format!("{} training summary", phase.as_str());
        jsonl::read_json(&self.run.require(phase.summary_file(), &what)?)
    }

    fn dataset_name(&self, corpus: &Corpus) -> String {
        format!("{}-{}", self.config.name, corpus.len())
    }

    fn load_one(&self, path: &Path) -> Result<(LoadSummary, Corpus)> {
        let format = self.config.format_of(path)?;
        let loaded = corpus::load_corpus(path, format, &self.labels)?;
        let n = loaded.corpus.len();
        let (corpus, removed) = corpus::deduplicate(loaded.corpus);
        let summary = LoadSummary {
            loaded: n,
            rejected: loaded.errors,
            duplicates_removed: removed,
            documents: corpus.len(),
            per_class: corpus.per_class_counts(),
        };
        Ok((summary, corpus))
    }

    /// Loads and deduplicates both record files.
    pub fn ingest(&self) -> Result<IngestSummary> {
        let started = unix_now();
        let (labeled, corpus) = self.load_one(&self.config.corpus.labeled)?;
        let (unlabeled, pool) = self.load_one(&self.config.corpus.unlabeled)?;
        if corpus.labeled_count() == 0 {
            return Err(Error::InvalidConfig("labeled corpus has no labeled documents".into()));
        }
        self.run.produce("ingest", |dir| {
            corpus.save_jsonl(&dir.join("corpus.jsonl"))?;
            pool.save_jsonl(&dir.join("unlabeled.jsonl"))
        })?;
        let summary = IngestSummary { labeled, unlabeled };
        self.run.log(
            "ingest",
            "loaded",
            json!({
                "labeled": summary.labeled.documents,
                "unlabeled": summary.unlabeled.documents,
                "rejected": summary.labeled.rejected.len() + summary.unlabeled.rejected.len(),
                "duplicates_removed": summary.labeled.duplicates_removed + summary.unlabeled.duplicates_removed,
                "per_class": summary.labeled.per_class,
            }),
        )?;
        self.finish("ingest", started, &summary)?;
        Ok(summary)
    }

    pub fn split(&self) -> Result<SplitSummary> {
        let started = unix_now();
        let corpus = self.load_labeled()?;
        let bundle = corpus::split(&corpus, self.config.split, self.config.seed)?;
        let manifest = bundle.manifest();
        self.run
            .produce("split", |dir| jsonl::write_json(&dir.join("split.json"), &manifest))?;
        let summary = SplitSummary::of(&manifest);
        self.run.log("split", "partitioned", json!(summary))?;
        self.finish("split", started, &summary)?;
        Ok(summary)
    }

    /// Trains on the original split, or on the expanded split once
    /// `expand` has run.
    pub fn train(&self) -> Result<TrainSummary> {
        self.train_phase(next_train_phase(&self.run))
    }

    fn phase_bundle(&self, phase: Phase) -> Result<(Corpus, DatasetBundle)> {
        match phase {
            Phase::Base => {
                let corpus = self.load_labeled()?;
                let bundle = self.load_bundle(&corpus, SPLIT_FILE)?;
                Ok((corpus, bundle))
            }
            Phase::Expanded => {
                let path = self.run.require(EXPANDED_CORPUS_FILE, "expanded corpus")?;
                let corpus = read_corpus_jsonl(&path, &self.config.name, &self.labels)?;
                let bundle = self.load_bundle(&corpus, EXPANDED_SPLIT_FILE)?;
                Ok((corpus, bundle))
            }
        }
    }

    /// The seeded share of the training partition a backend sees.
    fn subsample(&self, spec: &BackendSpec, train: &[Document]) -> Vec<Document> {
        let mut docs = train.to_vec();
        seeded_permutation(
            &mut docs,
            self.config.seed ^ shuffle_key(self.config.seed, &spec.model_id),
        );
        let keep = ((docs.len() as f64 * spec.subsample + 1e-9).floor() as usize).clamp(1, docs.len().max(1));
        docs.truncate(keep);
        docs
    }

    pub fn train_phase(&self, phase: Phase) -> Result<TrainSummary> {
        let started = unix_now();
        let (_, bundle) = self.phase_bundle(phase)?;
        let config = self.config.train_config();
        let scenario = self.config.scenario;
        let seed = self.config.seed;
        let rel = format!("train/{}", phase.as_str());

        let summary = self.run.produce(&rel, |dir| {
            let mut backends = Vec::new();
            for spec in &self.config.backends {
                let sub = DatasetBundle {
                    train: self.subsample(spec, &bundle.train),
                    ..bundle.clone()
                };
                let factory = || -> Result<LightweightBackend> {
                    match &spec.descriptor {
                        Some(d) => AdapterDescriptor::load(d),
                        None => LightweightBackend::untrained(
                            spec.model_id.clone(),
                            vocabulary_for(&sub.train, scenario),
                            self.labels.clone(),
                            spec.alpha,
                        ),
                    }
                };
                let search = lr_search(factory, &sub, scenario, &config)?;
                for run in &search.runs {
                    let run_dir = dir.join(format!("{}-{:e}-{seed}", spec.model_id, run.learning_rate));
                    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
                    jsonl::write_lines(&run_dir.join("trace.jsonl"), &run.records)?;
                    let ck = &run.checkpoint;
                    let meta = CheckpointMeta {
                        model_id: spec.model_id.clone(),
                        learning_rate: run.learning_rate,
                        seed,
                        epoch: ck.epoch,
                        val_micro_f1: ck.val_micro_f1,
                        config_fingerprint: ck.config_fingerprint.clone(),
                        stopped_early: run.stopped_early,
                    };
                    jsonl::write_json(&run_dir.join("checkpoint.json"), &meta)?;
                    ck.backend.save(&run_dir.join("model"))?;
                }
                let best = search.best();
                let entry = BackendTrainSummary {
                    model_id: spec.model_id.clone(),
                    train_documents: sub.train.len(),
                    best_lr: search.best_lr,
                    best_val_micro_f1: best.checkpoint.val_micro_f1,
                    best_epoch: best.checkpoint.epoch,
                    checkpoint: format!("{}-{:e}-{seed}", spec.model_id, search.best_lr),
                    diverged: search.diverged.clone(),
                };
                self.run.log(
                    "train",
                    "backend_done",
                    json!({
                        "phase": phase,
                        "model_id": entry.model_id,
                        "best_lr": entry.best_lr,
                        "best_val_micro_f1": entry.best_val_micro_f1,
                        "epochs": best.records.len(),
                    }),
                )?;
                backends.push(entry);
            }
            let summary = TrainSummary { phase, backends };
            jsonl::write_json(&dir.join("summary.json"), &summary)?;
            Ok(summary)
        })?;
        self.finish("train", started, &summary)?;
        Ok(summary)
    }

    fn load_backend(&self, summary: &TrainSummary, model_id: &str) -> Result<LightweightBackend> {
        let path = summary
            .descriptor_path(&self.run, model_id)
            .ok_or_else(|| Error::MissingArtifact {
                what: format!("checkpoint for `{model_id}`"),
                path: self.run.path(summary.phase.summary_file()),
            })?;
        AdapterDescriptor::load(&path)
    }

    /// Top-k predictions of every base backend on the unlabeled pool.
    pub fn infer(&self) -> Result<Value> {
        let started = unix_now();
        let summary = self.load_train_summary(Phase::Base)?;
        let pool = self.load_unlabeled()?;
        let t = &self.config.train;
        let mut predictions = Vec::new();
        let mut per_model = Vec::new();
        for b in &summary.backends {
            let backend = self.load_backend(&summary, &b.model_id)?;
            let out = infer(
                &backend,
                pool.documents(),
                self.config.scenario,
                t.max_len,
                self.config.vote.top_k,
                t.batch_size,
            )?;
            per_model.push(
                json!({"model_id": b.model_id, "predictions": out.predictions.len(), "skipped": out.skipped.len()}),
            );
            predictions.extend(out.predictions);
        }
        self.run.produce("infer", |dir| {
            jsonl::write_lines(&dir.join("predictions.jsonl"), &predictions)
        })?;
        let out = json!({ "documents": pool.len(), "models": per_model });
        self.run.log("infer", "predicted", out.clone())?;
        self.finish("infer", started, &out)?;
        Ok(out)
    }

    pub fn vote(&self) -> Result<AgreementReport> {
        let started = unix_now();
        let path = self.run.require(PREDICTIONS_FILE, "predictions")?;
        let predictions: Vec<Prediction> = jsonl::read_lines(&path)?;
        let pool = self.load_unlabeled()?;
        let summary = vote_all(&predictions, &self.config.vote.policy(), &self.labels)?;
        let stats = agreement_stats(&summary.accepted, &summary.rejected);

        let queries: HashMap<String, DomainLabel> = pool
            .documents()
            .iter()
            .filter_map(|d| d.query_class.clone().map(|q| (d.id.clone(), q)))
            .collect();
        let per_domain = if queries.len() == pool.len() {
            let mut tables = Vec::new();
            for m in &summary.models {
                let t = per_domain_agreement(&predictions, &queries, m)?;
                tables.push((m.clone(), t.into_iter().collect()));
            }
            Some(tables)
        } else {
            None
        };
        let report = AgreementReport {
            total_models: summary.models.len(),
            documents: stats.documents(),
            accepted: summary.accepted.len(),
            histogram: stats.histogram.iter().map(|(k, v)| (*k, *v)).collect(),
            rejections: stats.rejections,
            per_domain,
        };
        self.run.produce("vote", |dir| {
            jsonl::write_lines(&dir.join("votes.jsonl"), summary.accepted.iter().map(VoteRecord::from))?;
            jsonl::write_lines(&dir.join("rejections.jsonl"), &summary.rejected)?;
            jsonl::write_json(&dir.join("agreement.json"), &report)
        })?;
        self.run.log(
            "vote",
            "voted",
            json!({
                "accepted": report.accepted,
                "rejections": report.rejections,
                "histogram": report.histogram,
            }),
        )?;
        self.finish("vote", started, &report)?;
        Ok(report)
    }

    /// Merges vote-accepted documents into the labeled corpus. The original
    /// test partition stays the held-out set; everything else is re-split
    /// into train and validation.
    pub fn expand(&self) -> Result<ExpandSummary> {
        let started = unix_now();
        let votes: Vec<VoteRecord> = jsonl::read_lines(&self.run.require(VOTES_FILE, "votes")?)?;
        let original = self.load_labeled()?;
        let base = self.load_bundle(&original, SPLIT_FILE)?;
        let pool = self.load_unlabeled()?;
        let by_id: HashMap<&str, &Document> = pool.documents().iter().map(|d| (d.id.as_str(), d)).collect();
        let accepted = votes
            .iter()
            .map(|v| {
                by_id
                    .get(v.doc_id.as_str())
                    .map(|d| ((*d).clone(), v.label.clone()))
                    .ok_or_else(|| Error::InvalidConfig(format!("vote for unknown document `{}`", v.doc_id)))
            })
            .collect::<Result<Vec<_>>>()?;

        let per_class_before = original.per_class_counts();
        let (merged, merge) = corpus::merge(original, accepted)?;
        let manifest = expanded_manifest(&merged, &base, self.config.split, self.config.seed)?;
        let summary = ExpandSummary {
            merge,
            per_class_before,
            per_class_after: merged.per_class_counts(),
            split: SplitSummary::of(&manifest),
        };
        self.run.produce("expand", |dir| {
            merged.save_jsonl(&dir.join("corpus.jsonl"))?;
            jsonl::write_json(&dir.join("split.json"), &manifest)?;
            jsonl::write_json(&dir.join("report.json"), &summary)
        })?;
        self.run.log(
            "expand",
            "merged",
            json!({
                "original": merge.original,
                "accepted": merge.accepted,
                "collisions": merge.collisions,
                "total": merge.total,
                "per_class": summary.per_class_after,
            }),
        )?;
        self.finish("expand", started, &summary)?;
        Ok(summary)
    }

    fn phase_metrics(&self, phase: Phase, dataset: &str, test: &[Document]) -> Result<Vec<MetricsRecord>> {
        let summary = self.load_train_summary(phase)?;
        let t = &self.config.train;
        let scenario = self.config.scenario;
        let mut out = Vec::new();
        let mut predictions = Vec::new();
        for b in &summary.backends {
            let backend = self.load_backend(&summary, &b.model_id)?;
            let (golds, preds) = predict_labels(&backend, test, scenario, t.max_len, t.batch_size)?;
            let matrix = confusion_indices(self.labels.clone(), &golds, &preds)?;
            out.push(MetricsRecord {
                phase,
                model_id: b.model_id.clone(),
                dataset: dataset.to_owned(),
                scenario: scenario.to_string(),
                metrics: micro_metrics(&matrix)?,
                confusion: matrix.counts,
            });
            predictions.extend(infer(&backend, test, scenario, t.max_len, 1, t.batch_size)?.predictions);
        }

        let votes = vote_all(
            &predictions,
            &VotePolicy {
                min_votes: 1,
                ..Default::default()
            },
            &self.labels,
        )?;
        let voted: HashMap<&str, &DomainLabel> = votes.accepted.iter().map(|v| (v.doc_id.as_str(), &v.label)).collect();
        let mut golds = Vec::new();
        let mut preds = Vec::new();
        for doc in test {
            if let (Some(g), Some(p)) = (&doc.gold_label, voted.get(doc.id.as_str())) {
                golds.push(self.labels.index_of(g).expect("validated label"));
                preds.push(self.labels.index_of(p).expect("validated label"));
            }
        }
        let matrix = confusion_indices(self.labels.clone(), &golds, &preds)?;
        out.push(MetricsRecord {
            phase,
            model_id: ENSEMBLE_MODEL_ID.to_owned(),
            dataset: dataset.to_owned(),
            scenario: scenario.to_string(),
            metrics: micro_metrics(&matrix)?,
            confusion: matrix.counts,
        });
        Ok(out)
    }

    /// Scores every trained phase on the original held-out test partition.
    pub fn evaluate(&self) -> Result<Vec<MetricsRecord>> {
        let started = unix_now();
        let original = self.load_labeled()?;
        let base = self.load_bundle(&original, SPLIT_FILE)?;
        if base.test.is_empty() {
            return Err(Error::InvalidConfig("test partition is empty".into()));
        }
        let mut records = self.phase_metrics(Phase::Base, &self.dataset_name(&original), &base.test)?;
        if self.run.path(Phase::Expanded.summary_file()).exists() {
            let (expanded, _) = self.phase_bundle(Phase::Expanded)?;
            records.extend(self.phase_metrics(Phase::Expanded, &self.dataset_name(&expanded), &base.test)?);
        }
        self.run.produce("evaluate", |dir| {
            jsonl::write_lines(&dir.join("metrics.jsonl"), &records)
        })?;
        for r in &records {
            self.run.log(
                "evaluate",
                "scored",
                json!({
                    "phase": r.phase,
                    "model_id": r.model_id,
                    "accuracy": r.metrics.accuracy,
                    "micro_f1": r.metrics.micro_f1,
                }),
            )?;
        }
        let brief: Vec<Value> = records
            .iter()
            .map(|r| json!({"phase": r.phase, "model_id": r.model_id, "accuracy": r.metrics.accuracy}))
            .collect();
        self.finish("evaluate", started, &brief)?;
        Ok(records)
    }

    /// Markdown and CSV comparison of computed accuracies (and literature
    /// baselines when configured), plus count and agreement tables.
    pub fn report(&self) -> Result<Value> {
        let started = unix_now();
        let records: Vec<MetricsRecord> = jsonl::read_lines(&self.run.require(METRICS_FILE, "metrics")?)?;
        let baselines = match &self.config.baselines {
            Some(p) => load_baselines(p)?,
            None => Vec::new(),
        };
        let entries: Vec<ComparisonEntry> = records
            .iter()
            .map(|r| ComparisonEntry {
                model: r.model_id.clone(),
                dataset: r.dataset.clone(),
                report: r.metrics.clone(),
            })
            .collect();
        let table = render_comparison(&entries, &baselines);

        let mut md = format!("# Run {}\n\n", self.run.run_id());
        md.push_str(&format!("Scenario: `{}`\n\n", self.config.scenario));
        let expand_report = self.run.path("expand/report.json");
        if expand_report.exists() {
            let e: ExpandSummary = jsonl::read_json(&expand_report)?;
            md.push_str("## Documents per class\n\n| Domain | Original | Expanded |\n|---|---:|---:|\n");
            for ((label, before), (_, after)) in e.per_class_before.iter().zip(&e.per_class_after) {
                md.push_str(&format!("| {label} | {before} | {after} |\n"));
            }
            md.push_str(&format!(
                "| **Total** | **{}** | **{}** |\n\n{} accepted, {} collided with existing documents.\n\n",
                e.merge.original, e.merge.total, e.merge.accepted, e.merge.collisions
            ));
        }
        let agreement = self.run.path(AGREEMENT_FILE);
        if agreement.exists() {
            let a: AgreementReport = jsonl::read_json(&agreement)?;
            md.push_str(&format!(
                "## Model agreement ({} models)\n\n| Votes | Documents |\n|---:|---:|\n",
                a.total_models
            ));
            for (votes, n) in &a.histogram {
                md.push_str(&format!("| {votes} | {n} |\n"));
            }
            md.push_str(&format!("| rejected | {} |\n\n", a.rejections));
            if let Some(tables) = &a.per_domain {
                md.push_str("## Predictions vs. query classes (%)\n\n| Model | Domain | Agreement |\n|---|---|---:|\n");
                for (model, rows) in tables {
                    for (domain, pct) in rows {
                        md.push_str(&format!("| {model} | {domain} | {pct:.2} |\n"));
                    }
                }
                md.push('\n');
            }
        }
        md.push_str("## Held-out metrics\n\n| Phase | Model | Micro F1 | Micro Recall | Micro Precision | Accuracy |\n|---|---|---:|---:|---:|---:|\n");
        for r in &records {
            let row = format_metrics_row(&r.metrics);
            md.push_str(&format!("| {} | {} | {} |\n", r.phase.as_str(), r.model_id, row));
        }
        md.push_str("\n## Accuracy (%) comparison\n\n");
        md.push_str(&table.to_markdown());

        self.run.produce("report", |dir| {
            std::fs::write(dir.join("report.md"), &md).map_err(|e| Error::io(dir, e))?;
            std::fs::write(dir.join("comparison.md"), table.to_markdown()).map_err(|e| Error::io(dir, e))?;
            std::fs::write(dir.join("comparison.csv"), table.to_csv()).map_err(|e| Error::io(dir, e))
        })?;
        let out = json!({ "rows": table.rows.len(), "datasets": table.datasets });
        self.finish("report", started, &out)?;
        Ok(out)
    }
}

/// Keeps the base test partition and re-splits every other document of the
/// merged corpus into train and validation with the train:validation ratio.
pub fn expanded_manifest(
    merged: &Corpus,
    base: &DatasetBundle,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitManifest> {
    let test: std::collections::HashSet<&str> = base.test.iter().map(|d| d.id.as_str()).collect();
    let rest: Vec<Document> = merged
        .documents()
        .iter()
        .filter(|d| !test.contains(d.id.as_str()))
        .cloned()
        .collect();
    let share = ratios.train + ratios.validation;
    if share <= 0.0 {
        return Err(Error::InvalidRatios([ratios.train, ratios.validation, ratios.test]));
    }
    let inner = SplitRatios {
        train: ratios.train / share,
        validation: 1.0 - ratios.train / share,
        test: 0.0,
    };
    let rest = Corpus::new(merged.name(), merged.label_space().clone(), rest)?;
    let bundle = corpus::split(&rest, inner, seed)?;
    Ok(SplitManifest {
        seed,
        ratios,
        train: bundle.train.iter().map(|d| d.id.clone()).collect(),
        validation: bundle.validation.iter().map(|d| d.id.clone()).collect(),
        test: base.test.iter().map(|d| d.id.clone()).collect(),
    })
}

/// The phase a bare `train` invocation runs.
pub fn next_train_phase(run: &RunDir) -> Phase {
    if run.path(EXPANDED_SPLIT_FILE).exists() {
        Phase::Expanded
    } else {
        Phase::Base
    }
}

#[doc(hidden)]
pub fn epoch_trace(run: &RunDir, phase: Phase, checkpoint: &str) -> Result<Vec<EpochRecord>> {
    jsonl::read_lines(&run.path(format!("train/{}/{checkpoint}/trace.jsonl", phase.as_str())))
}
