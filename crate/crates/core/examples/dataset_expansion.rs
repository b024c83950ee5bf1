// Pseudo-label expansion by hand: train several models on different
// subsamples, vote over their predictions on an unlabeled pool, and merge
// the accepted documents into the labeled corpus.

use sciclass::backend::train_lightweight;
use sciclass::corpus::{deduplicate, merge, seeded_permutation, split, DatasetBundle, SplitRatios};
use sciclass::ensemble::{infer, vote_all, VotePolicy};
use sciclass::preprocess::Scenario;
use sciclass::synthetic::{generate, SyntheticSpec};

pub fn run_example() -> sciclass::Result<()> {
    let data = generate(&SyntheticSpec {
        labeled_per_class: 30,
        unlabeled_per_class: 10,
        ..SyntheticSpec::default()
    })?;
    let scenario = Scenario::AbstractAndKeywords;
    let (labeled, _) = deduplicate(data.labeled);
    let bundle = split(&labeled, SplitRatios::default(), 5)?;

    let mut predictions = Vec::new();
    for (i, id) in ["nb-1", "nb-2", "nb-3", "nb-4"].iter().enumerate() {
        let mut train = bundle.train.clone();
        seeded_permutation(&mut train, i as u64);
        train.truncate(train.len() * 2 / 3);
        let sub = DatasetBundle {
            train,
            ..bundle.clone()
        };
        let model = train_lightweight(id, &sub, scenario, 1.0, 128)?;
        predictions.extend(infer(&model, data.unlabeled.documents(), scenario, 128, 1, 32)?.predictions);
    }

    let votes = vote_all(&predictions, &VotePolicy::default(), labeled.label_space())?;
    let correct = votes
        .accepted
        .iter()
        .filter(|v| data.hidden_labels[&v.doc_id] == v.label)
        .count();
    println!(
        "{} of {} pool documents reached quorum ({} match their query class)",
        votes.accepted.len(),
        data.unlabeled.len(),
        correct
    );

    let pool: std::collections::HashMap<_, _> = data.unlabeled.documents().iter().map(|d| (d.id.as_str(), d)).collect();
    let accepted = votes
        .accepted
        .iter()
        .map(|v| (pool[v.doc_id.as_str()].clone(), v.label.clone()))
        .collect();
    let (expanded, report) = merge(labeled, accepted)?;
    println!(
        "{} original + {} accepted - {} collisions = {} documents",
        report.original, report.accepted, report.collisions, report.total
    );
    assert_eq!(expanded.len(), report.total);
    for (label, n) in expanded.per_class_counts() {
        println!("  {label:<24} {n}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
