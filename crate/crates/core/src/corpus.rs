//! Labeled and unlabeled document collections: loading, deduplication,
//! seeded splitting and merging of pseudo-labeled documents.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hasher;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use siphasher::sip::SipHasher13;

use crate::error::{Error, Result};
use crate::jsonl;
use crate::preprocess::clean_text;

/// One research domain, e.g. `Computer Science`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainLabel(String);

impl DomainLabel {
    pub fn new(name: impl Into<String>) -> Self {
        DomainLabel(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DomainLabel {
    fn from(s: &str) -> Self {
        DomainLabel::new(s)
    }
}

pub const COMPUTER_SCIENCE: &str = "Computer Science";
pub const CIVIL_ENGINEERING: &str = "Civil Engineering";
pub const ELECTRICAL_ENGINEERING: &str = "Electrical Engineering";
pub const MECHANICAL_ENGINEERING: &str = "Mechanical Engineering";
pub const MEDICAL_SCIENCES: &str = "Medical Sciences";
pub const PSYCHOLOGY: &str = "Psychology";
pub const BIOCHEMISTRY: &str = "Biochemistry";

// Short domain names used by the public WoS exports.
const ALIASES: &[(&str, &str)] = &[
    ("cs", COMPUTER_SCIENCE),
    ("civil", CIVIL_ENGINEERING),
    ("ece", ELECTRICAL_ENGINEERING),
    ("mae", MECHANICAL_ENGINEERING),
    ("medical", MEDICAL_SCIENCES),
    ("psychology", PSYCHOLOGY),
    ("biochemistry", BIOCHEMISTRY),
];

/// Ordered set of labels. The order defines probability-vector layout,
/// confusion-matrix axes and every deterministic tie rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSpace(Vec<DomainLabel>);

impl LabelSpace {
    pub fn new(labels: Vec<DomainLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidConfig("label space is empty".into()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label) {
                return Err(Error::InvalidConfig(format!("label `{label}` listed twice")));
            }
        }
        Ok(LabelSpace(labels))
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(names.iter().map(|n| DomainLabel::new(n.as_ref())).collect())
    }

    /// The seven domains of WoS-46985 / WoS-11967.
    pub fn wos7() -> Self {
        LabelSpace(
            [
                COMPUTER_SCIENCE,
                CIVIL_ENGINEERING,
                ELECTRICAL_ENGINEERING,
                MECHANICAL_ENGINEERING,
                MEDICAL_SCIENCES,
                PSYCHOLOGY,
                BIOCHEMISTRY,
            ]
            .into_iter()
            .map(DomainLabel::new)
            .collect(),
        )
    }

    /// The three domains of WoS-5736.
    pub fn wos3() -> Self {
        LabelSpace(
            [ELECTRICAL_ENGINEERING, PSYCHOLOGY, BIOCHEMISTRY]
                .into_iter()
                .map(DomainLabel::new)
                .collect(),
        )
    }

    pub fn labels(&self) -> &[DomainLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, label: &DomainLabel) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn contains(&self, label: &DomainLabel) -> bool {
        self.index_of(label).is_some()
    }

    pub fn get(&self, index: usize) -> Option<&DomainLabel> {
        self.0.get(index)
    }

    /// Maps a raw label string onto a member: exact match, then
    /// case-insensitive match, then the short WoS domain aliases.
    pub fn resolve(&self, raw: &str) -> Option<DomainLabel> {
        let raw = raw.trim();
        if let Some(l) = self.0.iter().find(|l| l.as_str() == raw) {
            return Some(l.clone());
        }
        let lower = raw.to_lowercase();
        if let Some(l) = self.0.iter().find(|l| l.as_str().to_lowercase() == lower) {
            return Some(l.clone());
        }
        ALIASES
            .iter()
            .find(|(alias, _)| *alias == lower)
            .and_then(|(_, full)| self.0.iter().find(|l| l.as_str() == *full))
            .cloned()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Original,
    Retrieved,
}

/// One scholarly record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default, deserialize_with = "keywords_field")]
    pub keywords: Vec<String>,
    #[serde(default, rename = "label", skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<DomainLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_class: Option<DomainLabel>,
    #[serde(default)]
    pub source: Source,
}

impl Document {
    pub fn new(id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            keywords: Vec::new(),
            gold_label: None,
            query_class: None,
            source: Source::Original,
        }
    }

    pub fn with_keywords<S: Into<String>>(mut self, keywords: impl IntoIterator<Item = S>) -> Self {
        self.keywords = keywords.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_label(mut self, label: impl Into<DomainLabel>) -> Self {
        self.gold_label = Some(label.into());
        self
    }

    pub fn with_query_class(mut self, label: impl Into<DomainLabel>) -> Self {
        self.query_class = Some(label.into());
        self
    }

    pub fn has_text(&self) -> bool {
        !self.title.trim().is_empty()
            || !self.abstract_text.trim().is_empty()
            || self.keywords.iter().any(|k| !k.trim().is_empty())
    }

    /// Content identity used for deduplication: cleaned title and cleaned
    /// abstract. Records with neither fall back to their cleaned keywords so
    /// keyword-only records are not all collapsed into one.
    pub fn dedup_key(&self) -> String {
        let title = clean_text(&self.title);
        let abstract_text = clean_text(&self.abstract_text);
        if title.is_empty() && abstract_text.is_empty() {
            return format!("\u{1}{}", clean_text(&self.keywords.join(" ")));
        }
        format!("{title}\u{0}{abstract_text}")
    }
}

/// Accepts either a JSON array of strings or a single `;`-delimited string.
fn keywords_field<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        List(Vec<String>),
        Joined(String),
        Null(()),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::List(list) => list,
        Raw::Joined(s) => split_keywords(&s),
        Raw::Null(()) => Vec::new(),
    })
}

pub(crate) fn split_keywords(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(str::to_owned)
        .collect()
}

/// A named document collection over a fixed label space.
///
/// Construction validates the collection: ids are unique, every record has
/// some text and every gold label belongs to the label space.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    name: String,
    label_space: LabelSpace,
    documents: Vec<Document>,
    class_counts: Vec<usize>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, label_space: LabelSpace, documents: Vec<Document>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(documents.len());
        let mut class_counts = vec![0; label_space.len()];
        for doc in &documents {
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if !doc.has_text() {
                return Err(Error::EmptyDocument(doc.id.clone()));
            }
            for label in doc.gold_label.iter().chain(doc.query_class.iter()) {
                if !label_space.contains(label) {
                    return Err(Error::UnknownLabel(label.to_string()));
                }
            }
            if let Some(label) = &doc.gold_label {
                class_counts[label_space.index_of(label).expect("checked above")] += 1;
            }
        }
        Ok(Corpus {
            name: name.into(),
            label_space,
            documents,
            class_counts,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Gold-label counts in label-space order.
    pub fn per_class_counts(&self) -> Vec<(DomainLabel, usize)> {
        self.label_space
            .labels()
            .iter()
            .cloned()
            .zip(self.class_counts.iter().copied())
            .collect()
    }

    pub fn count_for(&self, label: &DomainLabel) -> usize {
        self.label_space.index_of(label).map_or(0, |i| self.class_counts[i])
    }

    pub fn labeled_count(&self) -> usize {
        self.class_counts.iter().sum()
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        jsonl::write_lines(path, &self.documents)
    }
}

/// Supported input record layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFormat {
    /// Comma-delimited table with a header row.
    Csv,
    /// Tab-delimited table with a header row.
    Tsv,
    /// One JSON object per line.
    Jsonl,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" | "table" => Ok(RecordFormat::Csv),
            "tsv" => Ok(RecordFormat::Tsv),
            "jsonl" | "ndjson" | "json-lines" => Ok(RecordFormat::Jsonl),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

impl RecordFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        ext.parse()
    }
}

/// A record that could not be turned into a [`Document`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based record number (header excluded).
    pub record: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub errors: Vec<RecordError>,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: String,
    #[serde(default)]
    keywords: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    query_class: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

#[derive(Debug, Deserialize)]
struct JsonRow {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: String,
    #[serde(default, deserialize_with = "keywords_field")]
    keywords: Vec<String>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    query_class: Option<String>,
    #[serde(default)]
    source: Option<Source>,
}

struct RawRecord {
    id: String,
    title: String,
    abstract_text: String,
    keywords: Vec<String>,
    label: Option<String>,
    query_class: Option<String>,
    source: Source,
}

/// Loads a record file. Records that cannot become documents (no text,
/// label outside the label space, repeated id, unparsable line) are listed
/// in the returned error report instead of aborting the load.
pub fn load_corpus(path: &Path, format: RecordFormat, label_space: &LabelSpace) -> Result<LoadedCorpus> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus").to_owned();
    let mut errors = Vec::new();
    let raw = match format {
        RecordFormat::Csv => read_table(path, b',', &mut errors)?,
        RecordFormat::Tsv => read_table(path, b'\t', &mut errors)?,
        RecordFormat::Jsonl => read_jsonl(path, &mut errors)?,
    };

    let mut seen = HashSet::new();
    let mut documents = Vec::with_capacity(raw.len());
    for (record, rec) in raw {
        let fail = |reason: String| RecordError {
            record,
            id: Some(rec.id.clone()),
            reason,
        };
        let resolve = |raw: &Option<String>| -> std::result::Result<Option<DomainLabel>, String> {
            match raw.as_deref().map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => label_space
                    .resolve(s)
                    .map(Some)
                    .ok_or_else(|| format!("label `{s}` is not in the label space")),
            }
        };
        let gold_label = match resolve(&rec.label) {
            Ok(l) => l,
            Err(reason) => {
                errors.push(fail(reason));
                continue;
            }
        };
        let query_class = match resolve(&rec.query_class) {
            Ok(l) => l,
            Err(reason) => {
                errors.push(fail(reason));
                continue;
            }
        };
        let doc = Document {
            id: rec.id.clone(),
            title: rec.title,
            abstract_text: rec.abstract_text,
            keywords: rec.keywords,
            gold_label,
            query_class,
            source: rec.source,
        };
        if doc.id.trim().is_empty() {
            errors.push(fail("empty id".into()));
        } else if !doc.has_text() {
            errors.push(fail("title, abstract and keywords are all empty".into()));
        } else if !seen.insert(doc.id.clone()) {
            errors.push(fail("duplicate id".into()));
        } else {
            documents.push(doc);
        }
    }
    let corpus = Corpus::new(name, label_space.clone(), documents)?;
    Ok(LoadedCorpus { corpus, errors })
}

fn read_table(path: &Path, delimiter: u8, errors: &mut Vec<RecordError>) -> Result<Vec<(usize, RawRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if !headers.iter().any(|h| h == "id") {
        return Err(Error::malformed(path, "header has no `id` column"));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<TableRow>().enumerate() {
        let record = i + 1;
        match row {
            Ok(row) => out.push((
                record,
                RawRecord {
                    id: row.id,
                    title: row.title,
                    abstract_text: row.abstract_text,
                    keywords: split_keywords(&row.keywords),
                    label: row.label,
                    query_class: row.query_class,
                    source: match row.source.as_deref() {
                        Some("retrieved") => Source::Retrieved,
                        _ => Source::Original,
                    },
                },
            )),
            Err(e) => errors.push(RecordError {
                record,
                id: None,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn read_jsonl(path: &Path, errors: &mut Vec<RecordError>) -> Result<Vec<(usize, RawRecord)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut record = 0;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        record += 1;
        match serde_json::from_str::<JsonRow>(line) {
            Ok(row) => out.push((
                record,
                RawRecord {
                    id: row.id,
                    title: row.title,
                    abstract_text: row.abstract_text,
                    keywords: row.keywords,
                    label: row.label,
                    query_class: row.query_class,
                    source: row.source.unwrap_or_default(),
                },
            )),
            Err(e) => errors.push(RecordError {
                record,
                id: None,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::malformed(path, e.to_string())
    }
}

/// Reads a corpus previously written with [`Corpus::save_jsonl`]; any bad
/// record is an error.
pub fn read_corpus_jsonl(path: &Path, name: &str, label_space: &LabelSpace) -> Result<Corpus> {
    let docs: Vec<Document> = jsonl::read_lines(path)?;
    Corpus::new(name, label_space.clone(), docs)
}

/// Removes documents whose [`Document::dedup_key`] was already seen,
/// keeping the first occurrence. Returns the number removed.
pub fn deduplicate(corpus: Corpus) -> (Corpus, usize) {
    let before = corpus.len();
    let Corpus {
        name,
        label_space,
        documents,
        ..
    } = corpus;
    let mut seen = HashSet::with_capacity(documents.len());
    let kept: Vec<Document> = documents.into_iter().filter(|d| seen.insert(d.dedup_key())).collect();
    let removed = before - kept.len();
    let corpus = Corpus::new(name, label_space, kept).expect("subset of a valid corpus is valid");
    (corpus, removed)
}

/// Train / validation / test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        let ok = parts.iter().all(|p| p.is_finite() && *p >= 0.0) && (parts.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRatios(parts))
        }
    }

    /// `(train, validation, test)` sizes for `n` documents: validation and
    /// test get `floor(n * ratio)`, train absorbs the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon keeps products like 0.57 * 100 = 56.999.. from losing a document.
        let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let validation = floor(self.validation);
        let test = floor(self.test);
        (n - validation - test, validation, test)
    }
}

/// Disjoint partitions of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub label_space: LabelSpace,
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

/// Partition membership by document id; the on-disk form of a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetBundle {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn manifest(&self) -> SplitManifest {
        let ids = |docs: &[Document]| docs.iter().map(|d| d.id.clone()).collect();
        SplitManifest {
            seed: self.seed,
            ratios: self.ratios,
            train: ids(&self.train),
            validation: ids(&self.validation),
            test: ids(&self.test),
        }
    }

    /// Rebuilds a bundle from a manifest and the corpus it was cut from.
    pub fn from_manifest(manifest: &SplitManifest, corpus: &Corpus) -> Result<Self> {
        let by_id: HashMap<&str, &Document> = corpus.documents().iter().map(|d| (d.id.as_str(), d)).collect();
        let pick = |ids: &[String]| -> Result<Vec<Document>> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|d| (*d).clone())
                        .ok_or_else(|| Error::InvalidConfig(format!("split refers to unknown document `{id}`")))
                })
                .collect()
        };
        Ok(DatasetBundle {
            label_space: corpus.label_space().clone(),
            train: pick(&manifest.train)?,
            validation: pick(&manifest.validation)?,
            test: pick(&manifest.test)?,
            seed: manifest.seed,
            ratios: manifest.ratios,
        })
    }
}

/// Position of a document in the seeded permutation. Keyed on the id alone,
/// so the permutation does not depend on input order.
pub fn shuffle_key(seed: u64, id: &str) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, 0x5c1c_1a55_0000_0001);
    h.write(id.as_bytes());
    h.finish()
}

/// Orders documents by their seeded shuffle key (ties by id).
pub fn seeded_permutation(documents: &mut [Document], seed: u64) {
    documents.sort_by_cached_key(|d| (shuffle_key(seed, &d.id), d.id.clone()));
}

/// Shuffles deterministically and cuts contiguous train, validation and
/// test partitions (in that order) with sizes from [`SplitRatios::sizes`].
pub fn split(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<DatasetBundle> {
    ratios.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut docs = corpus.documents().to_vec();
    seeded_permutation(&mut docs, seed);
    let (n_train, n_val, _) = ratios.sizes(docs.len());
    let test = docs.split_off(n_train + n_val);
    let validation = docs.split_off(n_train);
    Ok(DatasetBundle {
        label_space: corpus.label_space().clone(),
        train: docs,
        validation,
        test,
        seed,
        ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    /// Size of the original corpus after deduplication.
    pub original: usize,
    pub accepted: usize,
    /// Accepted documents dropped because their content was already present.
    pub collisions: usize,
    pub total: usize,
}

/// Adds pseudo-labeled documents to a labeled corpus. Each accepted document
/// takes its voted label as gold label and is marked as retrieved; the union
/// is deduplicated with originals taking precedence.
pub fn merge(original: Corpus, accepted: Vec<(Document, DomainLabel)>) -> Result<(Corpus, MergeReport)> {
    for (doc, label) in &accepted {
        if !original.label_space().contains(label) {
            return Err(Error::UnknownLabel(format!("{label} (document `{}`)", doc.id)));
        }
    }
    let (original, _) = deduplicate(original);
    let n_original = original.len();
    let n_accepted = accepted.len();
    let name = original.name().to_owned();
    let label_space = original.label_space().clone();

    let mut keys: HashSet<String> = original.documents().iter().map(Document::dedup_key).collect();
    let mut documents = original.into_documents();
    let mut collisions = 0;
    for (mut doc, label) in accepted {
        if !keys.insert(doc.dedup_key()) {
            collisions += 1;
            continue;
        }
        doc.gold_label = Some(label);
        doc.source = Source::Retrieved;
        documents.push(doc);
    }
    let merged = Corpus::new(name, label_space, documents)?;
    let report = MergeReport {
        original: n_original,
        accepted: n_accepted,
        collisions,
        total: merged.len(),
    };
    Ok((merged, report))
}
