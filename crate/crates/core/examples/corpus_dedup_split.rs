// Loading a delimited record file, deduplicating, and a seeded
// train/validation/test split that can be saved and restored.

use sciclass::corpus::{deduplicate, load_corpus, split, DatasetBundle, LabelSpace, RecordFormat, SplitRatios};

const RECORDS: &str = "\
id,title,abstract,keywords,label
a1,Bridge Fatigue,Steel girders under cyclic load.,fatigue;steel,civil
a2,BRIDGE fatigue!,Steel girders under cyclic load,fatigue;steel,Civil Engineering
a3,Deep Nets,Training deep networks with dropout.,deep learning,CS
a4,,,,CS
a5,Anxiety Scales,Measuring anxiety in adolescents.,anxiety,Psychology
a6,Motor Control,Brushless motor drive design.,motors,ECE
a7,Enzyme Kinetics,Michaelis constants of mutants.,enzymes,Astrology
a8,Heat Pipes,Two-phase heat transfer in pipes.,thermal,MAE
a9,Sepsis Markers,Early sepsis detection in ICU.,sepsis,Medical
a10,Protein Folding,Chaperones assist folding.,proteins,biochemistry
";

pub fn run_example() -> sciclass::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| sciclass::Error::io(std::env::temp_dir(), e))?;
    let path = dir.path().join("records.csv");
    std::fs::write(&path, RECORDS).map_err(|e| sciclass::Error::io(&path, e))?;

    let loaded = load_corpus(&path, RecordFormat::Csv, &LabelSpace::wos7())?;
    for err in &loaded.errors {
        println!("skipped record {} ({:?}): {}", err.record, err.id, err.reason);
    }
    let (corpus, removed) = deduplicate(loaded.corpus);
    println!("{} documents after removing {removed} duplicate(s)", corpus.len());
    for (label, n) in corpus.per_class_counts() {
        println!("  {label:<24} {n}");
    }

    let bundle = split(&corpus, SplitRatios::new(0.6, 0.2, 0.2)?, 7)?;
    println!(
        "split sizes: train {}, validation {}, test {}",
        bundle.train.len(),
        bundle.validation.len(),
        bundle.test.len()
    );
    let manifest = bundle.manifest();
    let restored = DatasetBundle::from_manifest(&manifest, &corpus)?;
    assert_eq!(restored.test, bundle.test);
    println!("test ids: {:?}", manifest.test);
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
