// Fine-tuning with warmup/decay, early stopping and a learning-rate grid,
// on a small synthetic corpus.

use sciclass::backend::{vocabulary_for, LightweightBackend};
use sciclass::corpus::{split, SplitRatios};
use sciclass::preprocess::Scenario;
use sciclass::synthetic::{generate, SyntheticSpec};
use sciclass::training::{lr_search, schedule_multiplier, warmup_steps, TrainConfig};

pub fn run_example() -> sciclass::Result<()> {
    let total = 1000;
    let warmup = warmup_steps(total, 0.1);
    let curve: Vec<String> = [0, 50, 100, 550, 1000]
        .iter()
        .map(|&s| Ok(format!("{s}:{:.2}", schedule_multiplier(s, total, warmup)?)))
        .collect::<sciclass::Result<_>>()?;
    println!("schedule ({warmup} warmup steps): {}", curve.join("  "));

    let spec = SyntheticSpec {
        labeled_per_class: 20,
        unlabeled_per_class: 0,
        duplicates: 0,
        noise_rate: 0.75,
        title_len: 2,
        abstract_len: 10,
        keywords: 1,
        ..SyntheticSpec::default()
    };
    let corpus = generate(&spec)?.labeled;
    let bundle = split(&corpus, SplitRatios::default(), 3)?;
    let config = TrainConfig {
        max_epochs: 6,
        patience: 2,
        batch_size: 8,
        max_len: 64,
        ..TrainConfig::default()
    };
    let vocab = vocabulary_for(&bundle.train, Scenario::AbstractAndKeywords);
    let factory = || LightweightBackend::untrained("nb", vocab.clone(), corpus.label_space().clone(), 1.0);
    let search = lr_search(factory, &bundle, Scenario::AbstractAndKeywords, &config)?;

    for run in &search.runs {
        let scores: Vec<String> = run.records.iter().map(|r| format!("{:.3}", r.val_micro_f1)).collect();
        println!(
            "lr {:e}: epochs [{}] best epoch {} stopped early: {}",
            run.learning_rate,
            scores.join(", "),
            run.checkpoint.epoch,
            run.stopped_early
        );
    }
    println!(
        "selected lr {:e} (validation micro-F1 {:.3})",
        search.best_lr,
        search.best().checkpoint.val_micro_f1
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
