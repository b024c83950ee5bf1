//! Multi-model inference, top-k ranking, hard voting and agreement tables.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::backend::{encode_documents, ClassifierBackend};
use crate::corpus::{Document, DomainLabel, LabelSpace};
use crate::error::{Error, Result};
use crate::preprocess::{compose_input, encode, Scenario};

/// Ranked top-k labels of one model for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub model_id: String,
    pub scenario: Scenario,
    pub ranked: Vec<(DomainLabel, f64)>,
}

impl Prediction {
    pub fn top1(&self) -> (&DomainLabel, f64) {
        let (l, p) = &self.ranked[0];
        (l, *p)
    }
}

/// Top `k` labels by probability, descending; equal probabilities keep
/// label-space order.
pub fn rank_topk(distribution: &[f64], labels: &LabelSpace, k: usize) -> Result<Vec<(DomainLabel, f64)>> {
    if distribution.len() != labels.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} probabilities for {} labels",
            distribution.len(),
            labels.len()
        )));
    }
    if distribution.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = distribution.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
    }
    if k == 0 || k > labels.len() {
        return Err(Error::InvalidDistribution(format!(
            "k = {k} outside 1..={}",
            labels.len()
        )));
    }
    let mut order: Vec<usize> = (0..distribution.len()).collect();
    order.sort_by(|&a, &b| distribution[b].total_cmp(&distribution[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| (labels.labels()[i].clone(), distribution[i]))
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct InferenceOutput {
    pub predictions: Vec<Prediction>,
    /// Documents with no usable text for the scenario.
    pub skipped: Vec<String>,
}

/// Predicts top-k labels for every document with one backend.
pub fn infer<B: ClassifierBackend + ?Sized>(
    backend: &B,
    documents: &[Document],
    scenario: Scenario,
    max_len: usize,
    k: usize,
    batch_size: usize,
) -> Result<InferenceOutput> {
    let mut out = InferenceOutput::default();
    let mut ids = Vec::new();
    let mut examples = Vec::new();
    for doc in documents {
        match compose_input(doc, scenario) {
            Ok(text) => {
                examples.push(encode(&text, backend.tokenizer(), max_len)?);
                ids.push(doc.id.clone());
            }
            Err(Error::UnusableDocument { .. }) => out.skipped.push(doc.id.clone()),
            Err(e) => return Err(e),
        }
    }
    for (chunk, chunk_ids) in examples.chunks(batch_size.max(1)).zip(ids.chunks(batch_size.max(1))) {
        for (p, id) in backend.predict_proba(chunk)?.iter().zip(chunk_ids) {
            out.predictions.push(Prediction {
                doc_id: id.clone(),
                model_id: backend.model_id().to_owned(),
                scenario,
                ranked: rank_topk(p, backend.label_space(), k)?,
            });
        }
    }
    Ok(out)
}

/// Labeled evaluation helper: argmax labels for documents with gold labels.
pub fn predict_labels<B: ClassifierBackend + ?Sized>(
    backend: &B,
    documents: &[Document],
    scenario: Scenario,
    max_len: usize,
    batch_size: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (examples, _) = encode_documents(
        documents,
        scenario,
        backend.tokenizer(),
        backend.label_space(),
        max_len,
        true,
    )?;
    let mut golds = Vec::with_capacity(examples.len());
    let mut preds = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size.max(1)) {
        for (p, ex) in backend.predict_proba(chunk)?.iter().zip(chunk) {
            golds.push(ex.label_index.expect("labeled"));
            preds.push(crate::evaluation::argmax(p));
        }
    }
    Ok((golds, preds))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Highest summed top-1 probability, then label-space order.
    #[default]
    SummedTop1Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotePolicy {
    pub min_votes: usize,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl Default for VotePolicy {
    fn default() -> Self {
        VotePolicy {
            min_votes: 2,
            tie_break: TieBreak::SummedTop1Probability,
        }
    }
}

impl VotePolicy {
    pub fn validate(&self, n_models: usize) -> Result<()> {
        if self.min_votes < 1 || self.min_votes > n_models {
            return Err(Error::InvalidConfig(format!(
                "min_votes {} outside 1..={n_models}",
                self.min_votes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResult {
    pub doc_id: String,
    pub label: DomainLabel,
    pub votes: usize,
    pub total_models: usize,
    pub tie_broken: bool,
    pub summed_probability: f64,
}

/// A plurality label that did not reach the quorum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub doc_id: String,
    pub label: DomainLabel,
    pub votes: usize,
    pub total_models: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VoteOutcome {
    Accepted(VoteResult),
    Rejected(Rejection),
}

/// Hard vote over each model's top-1 label.
///
/// The label with the most votes wins. Among equally voted labels the one
/// with the larger sum of its voters' top-1 probabilities wins, then the
/// earlier label in the label space. Sums are taken over sorted
/// probabilities so the outcome does not depend on model order.
pub fn hard_vote(predictions: &[Prediction], policy: &VotePolicy, labels: &LabelSpace) -> Result<VoteOutcome> {
    let first = predictions.first().ok_or(Error::EmptyBatch)?;
    let mut models = HashSet::new();
    let mut top1: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for p in predictions {
        if p.doc_id != first.doc_id {
            return Err(Error::MismatchedDocument {
                expected: first.doc_id.clone(),
                found: p.doc_id.clone(),
            });
        }
        if !models.insert(p.model_id.as_str()) {
            return Err(Error::DuplicateModel(p.model_id.clone()));
        }
        let (label, prob) = p
            .ranked
            .first()
            .ok_or_else(|| Error::InvalidDistribution(format!("empty ranking from `{}`", p.model_id)))?;
        let i = labels
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        top1[i].push(*prob);
    }
    policy.validate(predictions.len())?;

    let sums: Vec<f64> = top1
        .iter_mut()
        .map(|ps| {
            ps.sort_by(f64::total_cmp);
            ps.iter().sum()
        })
        .collect();
    let max_votes = top1.iter().map(Vec::len).max().unwrap_or(0);
    let contenders: Vec<usize> = (0..labels.len()).filter(|&i| top1[i].len() == max_votes).collect();
    let winner = contenders
        .iter()
        .copied()
        .reduce(|best, i| if sums[i] > sums[best] { i } else { best })
        .expect("at least one prediction");

    let label = labels.labels()[winner].clone();
    let total_models = predictions.len();
    if max_votes < policy.min_votes {
        return Ok(VoteOutcome::Rejected(Rejection {
            doc_id: first.doc_id.clone(),
            label,
            votes: max_votes,
            total_models,
        }));
    }
    Ok(VoteOutcome::Accepted(VoteResult {
        doc_id: first.doc_id.clone(),
        label,
        votes: max_votes,
        total_models,
        tie_broken: contenders.len() > 1,
        summed_probability: sums[winner],
    }))
}

#[derive(Debug, Clone, Default)]
pub struct VoteSummary {
    pub accepted: Vec<VoteResult>,
    pub rejected: Vec<Rejection>,
    pub models: Vec<String>,
}

/// Groups a prediction dump by document (first-appearance order) and votes
/// each group. Every document must have exactly one prediction from every
/// model present in the dump.
pub fn vote_all(predictions: &[Prediction], policy: &VotePolicy, labels: &LabelSpace) -> Result<VoteSummary> {
    let mut models: Vec<String> = Vec::new();
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<Prediction>> = HashMap::new();
    for p in predictions {
        if !models.contains(&p.model_id) {
            models.push(p.model_id.clone());
        }
        groups
            .entry(p.doc_id.as_str())
            .or_insert_with(|| {
                order.push(p.doc_id.as_str());
                Vec::new()
            })
            .push(p.clone());
    }
    policy.validate(models.len().max(1))?;
    let mut summary = VoteSummary {
        models: models.clone(),
        ..Default::default()
    };
    for doc_id in order {
        let group = &groups[doc_id];
        if group.len() < models.len() {
            let missing = models
                .iter()
                .find(|m| !group.iter().any(|p| &p.model_id == *m))
                .expect("some model is missing");
            return Err(Error::MissingPrediction {
                doc_id: doc_id.to_owned(),
                model_id: missing.clone(),
            });
        }
        match hard_vote(group, policy, labels)? {
            VoteOutcome::Accepted(r) => summary.accepted.push(r),
            VoteOutcome::Rejected(r) => summary.rejected.push(r),
        }
    }
    Ok(summary)
}

/// Vote-count histogram of accepted documents plus the rejection count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub histogram: BTreeMap<usize, usize>,
    pub rejections: usize,
}

impl AgreementStats {
    pub fn documents(&self) -> usize {
        self.histogram.values().sum::<usize>() + self.rejections
    }
}

pub fn agreement_stats(results: &[VoteResult], rejections: &[Rejection]) -> AgreementStats {
    let mut histogram = BTreeMap::new();
    for r in results {
        *histogram.entry(r.votes).or_default() += 1;
    }
    AgreementStats {
        histogram,
        rejections: rejections.len(),
    }
}

/// For each query domain: percentage of its documents whose top-1 label
/// from `model_id` equals the domain.
pub fn per_domain_agreement(
    predictions: &[Prediction],
    query_classes: &HashMap<String, DomainLabel>,
    model_id: &str,
) -> Result<BTreeMap<DomainLabel, f64>> {
    let mut tally: BTreeMap<DomainLabel, (usize, usize)> = BTreeMap::new();
    for p in predictions.iter().filter(|p| p.model_id == model_id) {
        let query = query_classes
            .get(&p.doc_id)
            .ok_or_else(|| Error::MissingQueryClass(p.doc_id.clone()))?;
        let entry = tally.entry(query.clone()).or_default();
        entry.1 += 1;
        if p.top1().0 == query {
            entry.0 += 1;
        }
    }
    Ok(tally
        .into_iter()
        .map(|(d, (hit, n))| (d, 100.0 * hit as f64 / n as f64))
        .collect())
}

/// Interchange record for one vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub doc_id: String,
    pub label: DomainLabel,
    pub votes: usize,
    pub tie_broken: bool,
    pub summed_probability: f64,
}

impl From<&VoteResult> for VoteRecord {
    fn from(r: &VoteResult) -> Self {
        VoteRecord {
            doc_id: r.doc_id.clone(),
            label: r.label.clone(),
            votes: r.votes,
            tie_broken: r.tie_broken,
            summed_probability: r.summed_probability,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{COMPUTER_SCIENCE as CS, ELECTRICAL_ENGINEERING as ECE, PSYCHOLOGY as PSY};

    fn pred(model: &str, label: &str, p: f64) -> Prediction {
        Prediction {
            doc_id: "d".into(),
            model_id: model.into(),
            scenario: Scenario::Abstract,
            ranked: vec![(label.into(), p)],
        }
    }

    fn accepted(o: VoteOutcome) -> VoteResult {
        match o {
            VoteOutcome::Accepted(r) => r,
            VoteOutcome::Rejected(r) => panic!("rejected: {r:?}"),
        }
    }

    #[test]
    fn rank_orders_by_probability() {
        let ls = LabelSpace::from_names(&["A", "B", "C"]).unwrap();
        let r = rank_topk(&[0.1, 0.7, 0.2], &ls, 3).unwrap();
        assert_eq!(r, vec![("B".into(), 0.7), ("C".into(), 0.2), ("A".into(), 0.1)]);
        assert_eq!(rank_topk(&[0.0, 1.0, 0.0], &ls, 1).unwrap(), vec![("B".into(), 1.0)]);
        let u = [1.0 / 7.0; 7];
        let top: Vec<_> = rank_topk(&u, &LabelSpace::wos7(), 3)
            .unwrap()
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        assert_eq!(top, LabelSpace::wos7().labels()[..3].to_vec());
    }

    #[test]
    fn rank_rejects_bad_input() {
        let ls = LabelSpace::from_names(&["A", "B"]).unwrap();
        assert!(rank_topk(&[0.5, 0.6], &ls, 1).is_err());
        assert!(rank_topk(&[-0.5, 1.5], &ls, 1).is_err());
        assert!(rank_topk(&[0.5, 0.5], &ls, 3).is_err());
        assert!(rank_topk(&[1.0], &ls, 1).is_err());
    }

    #[test]
    fn unanimous_vote() {
        let ps: Vec<_> = ["a", "b", "c", "d"].iter().map(|m| pred(m, PSY, 0.9)).collect();
        let r = accepted(hard_vote(&ps, &VotePolicy::default(), &LabelSpace::wos7()).unwrap());
        assert_eq!((r.label.as_str(), r.votes, r.tie_broken), (PSY, 4, false));
    }

    #[test]
    fn plurality_vote() {
        let ps = vec![
            pred("a", CS, 0.9),
            pred("b", CS, 0.8),
            pred("c", ECE, 0.99),
            pred("d", CS, 0.6),
        ];
        let r = accepted(hard_vote(&ps, &VotePolicy::default(), &LabelSpace::wos7()).unwrap());
        assert_eq!((r.label.as_str(), r.votes, r.tie_broken), (CS, 3, false));
    }

    #[test]
    fn tie_goes_to_higher_summed_probability() {
        let ps = vec![
            pred("a", CS, 0.90),
            pred("b", ECE, 0.80),
            pred("c", CS, 0.70),
            pred("d", ECE, 0.85),
        ];
        let r = accepted(hard_vote(&ps, &VotePolicy::default(), &LabelSpace::wos7()).unwrap());
        assert_eq!((r.label.as_str(), r.votes, r.tie_broken), (ECE, 2, true));
        assert!((r.summed_probability - 1.65).abs() < 1e-12);
    }

    #[test]
    fn exact_tie_goes_to_label_order() {
        let ps = vec![pred("a", ECE, 0.5), pred("b", CS, 0.5)];
        let policy = VotePolicy {
            min_votes: 1,
            ..Default::default()
        };
        let r = accepted(hard_vote(&ps, &policy, &LabelSpace::wos7()).unwrap());
        assert_eq!(r.label.as_str(), CS);
    }

    #[test]
    fn quorum_rejects() {
        let ps = vec![pred("a", CS, 0.9), pred("b", ECE, 0.8), pred("c", PSY, 0.7)];
        match hard_vote(&ps, &VotePolicy::default(), &LabelSpace::wos7()).unwrap() {
            VoteOutcome::Rejected(r) => assert_eq!((r.label.as_str(), r.votes), (CS, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vote_input_errors() {
        let ls = LabelSpace::wos7();
        let dup = vec![pred("a", CS, 0.9), pred("a", CS, 0.8)];
        assert!(matches!(
            hard_vote(&dup, &VotePolicy::default(), &ls),
            Err(Error::DuplicateModel(_))
        ));
        let mut other = pred("b", CS, 0.9);
        other.doc_id = "e".into();
        let mixed = vec![pred("a", CS, 0.9), other];
        assert!(matches!(
            hard_vote(&mixed, &VotePolicy::default(), &ls),
            Err(Error::MismatchedDocument { .. })
        ));
        let one = vec![pred("a", CS, 0.9)];
        assert!(hard_vote(
            &one,
            &VotePolicy {
                min_votes: 2,
                ..Default::default()
            },
            &ls
        )
        .is_err());
    }

    #[test]
    fn vote_all_requires_every_model() {
        let mut dump = vec![pred("a", CS, 0.9), pred("b", CS, 0.9)];
        let mut lone = pred("a", PSY, 0.9);
        lone.doc_id = "e".into();
        dump.push(lone);
        assert!(matches!(
            vote_all(&dump, &VotePolicy::default(), &LabelSpace::wos7()),
            Err(Error::MissingPrediction { .. })
        ));
    }

    #[test]
    fn agreement_histogram() {
        let r = |votes| VoteResult {
            doc_id: "x".into(),
            label: CS.into(),
            votes,
            total_models: 4,
            tie_broken: false,
            summed_probability: 1.0,
        };
        let s = agreement_stats(&vec![r(4); 10], &[]);
        assert_eq!(s.histogram, BTreeMap::from([(4, 10)]));
        assert_eq!(s.rejections, 0);
        assert_eq!(agreement_stats(&[], &[]), AgreementStats::default());
    }

    #[test]
    fn domain_agreement_percentages() {
        let mut preds = Vec::new();
        let mut queries = HashMap::new();
        for i in 0..1000 {
            let label = if i < 911 { CS } else { ECE };
            let mut p = pred("bert", label, 0.9);
            p.doc_id = format!("d{i}");
            queries.insert(p.doc_id.clone(), DomainLabel::from(CS));
            preds.push(p);
        }
        let table = per_domain_agreement(&preds, &queries, "bert").unwrap();
        assert_eq!(format!("{:.2}", table[&DomainLabel::from(CS)]), "91.10");
        assert!((table[&DomainLabel::from(CS)] - 91.1).abs() < 1e-9);
        queries.remove("d0");
        assert!(matches!(
            per_domain_agreement(&preds, &queries, "bert"),
            Err(Error::MissingQueryClass(_))
        ));
    }
}
