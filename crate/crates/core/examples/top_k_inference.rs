// Batch top-k inference over an unlabeled pool, written as line-delimited
// prediction records.

use sciclass::backend::train_lightweight;
use sciclass::corpus::{split, SplitRatios};
use sciclass::ensemble::{infer, Prediction};
use sciclass::jsonl;
use sciclass::preprocess::Scenario;
use sciclass::synthetic::{generate, SyntheticSpec};

pub fn run_example() -> sciclass::Result<()> {
    let data = generate(&SyntheticSpec {
        labeled_per_class: 15,
        unlabeled_per_class: 2,
        duplicates: 0,
        ..SyntheticSpec::default()
    })?;
    let bundle = split(&data.labeled, SplitRatios::default(), 11)?;
    let model = train_lightweight("nb-topk", &bundle, Scenario::Abstract, 1.0, 64)?;

    let out = infer(&model, data.unlabeled.documents(), Scenario::Abstract, 64, 3, 16)?;
    let dir = tempfile::tempdir().map_err(|e| sciclass::Error::io(std::env::temp_dir(), e))?;
    let path = dir.path().join("predictions.jsonl");
    jsonl::write_lines(&path, &out.predictions)?;

    let back: Vec<Prediction> = jsonl::read_lines(&path)?;
    for p in back.iter().take(3) {
        let ranked: Vec<String> = p.ranked.iter().map(|(l, s)| format!("{l} {s:.3}")).collect();
        println!(
            "{} (query: {}): {}",
            p.doc_id,
            data.hidden_labels[&p.doc_id],
            ranked.join(" | ")
        );
    }
    println!("{} predictions, {} skipped", back.len(), out.skipped.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
