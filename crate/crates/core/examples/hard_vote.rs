// Hard voting over top-k predictions from several models, with quorum
// rejection, the summed-probability tie-break, and an agreement histogram.

use sciclass::corpus::LabelSpace;
use sciclass::ensemble::{agreement_stats, vote_all, Prediction, VotePolicy};
use sciclass::preprocess::Scenario;

fn pred(doc: &str, model: &str, label: &str, p: f64) -> Prediction {
    Prediction {
        doc_id: doc.into(),
        model_id: model.into(),
        scenario: Scenario::AbstractAndKeywords,
        ranked: vec![(label.into(), p)],
    }
}

pub fn run_example() -> sciclass::Result<()> {
    let labels = LabelSpace::wos7();
    let predictions = vec![
        // unanimous
        pred("d1", "bert", "Psychology", 0.97),
        pred("d1", "scibert", "Psychology", 0.95),
        pred("d1", "biobert", "Psychology", 0.91),
        pred("d1", "bluebert", "Psychology", 0.88),
        // 2-2 tie, decided by summed top-1 probability
        pred("d2", "bert", "Computer Science", 0.60),
        pred("d2", "scibert", "Electrical Engineering", 0.90),
        pred("d2", "biobert", "Computer Science", 0.55),
        pred("d2", "bluebert", "Electrical Engineering", 0.81),
        // no label reaches two votes
        pred("d3", "bert", "Biochemistry", 0.50),
        pred("d3", "scibert", "Medical Sciences", 0.40),
        pred("d3", "biobert", "Psychology", 0.45),
        pred("d3", "bluebert", "Civil Engineering", 0.35),
    ];
    let summary = vote_all(&predictions, &VotePolicy::default(), &labels)?;
    for r in &summary.accepted {
        println!(
            "{}: {} with {}/{} votes{}",
            r.doc_id,
            r.label,
            r.votes,
            r.total_models,
            if r.tie_broken { " (tie broken)" } else { "" }
        );
    }
    for r in &summary.rejected {
        println!("{}: rejected, best label {} had {} vote(s)", r.doc_id, r.label, r.votes);
    }
    let stats = agreement_stats(&summary.accepted, &summary.rejected);
    println!("votes histogram {:?}, rejections {}", stats.histogram, stats.rejections);
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
