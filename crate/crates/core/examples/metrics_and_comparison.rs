// Confusion matrix, micro-averaged metrics, and a comparison table that
// places computed accuracies next to published baselines.

use sciclass::corpus::LabelSpace;
use sciclass::evaluation::{
    confusion, format_metrics_row, load_baselines, micro_metrics, render_comparison, ComparisonEntry,
};

pub fn run_example() -> sciclass::Result<()> {
    let labels = LabelSpace::wos3();
    let names: Vec<_> = labels.labels().to_vec();
    let golds = [0, 0, 0, 1, 1, 2, 2, 2, 2, 1].map(|i| names[i].clone());
    let preds = [0, 0, 1, 1, 1, 2, 2, 0, 2, 1].map(|i| names[i].clone());
    let matrix = confusion(&labels, &golds, &preds)?;
    for (label, row) in names.iter().zip(&matrix.counts) {
        println!("{label:<24} {row:?}");
    }
    let report = micro_metrics(&matrix)?;
    println!(
        "micro F1 | recall | precision | accuracy: {}",
        format_metrics_row(&report)
    );
    for c in &report.per_class {
        println!(
            "  {:<24} P {:.3} R {:.3} F1 {:.3}",
            c.label, c.precision, c.recall, c.f1
        );
    }

    let baselines =
        load_baselines(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/literature_baselines.csv"))?;
    let entries = vec![ComparisonEntry {
        model: "nb (ours)".into(),
        dataset: "WoS-5736".into(),
        report,
    }];
    print!("{}", render_comparison(&entries, &baselines).to_markdown());
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
