// The staged workflow on a generated desk-scale corpus, driven from a TOML
// run configuration, followed by a look at the experiment record.

use sciclass::pipeline::{ExperimentRecord, Pipeline, RunConfig, REPORT_FILE};
use sciclass::synthetic::{write_desk, SyntheticSpec};

pub fn run_example() -> sciclass::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| sciclass::Error::io(std::env::temp_dir(), e))?;
    let config_path = write_desk(dir.path(), &SyntheticSpec::default())?;
    let mut config = RunConfig::load(&config_path)?;
    config.baselines = Some(std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/literature_baselines.csv"));

    let run_dir = dir.path().join("run");
    let pipeline = Pipeline::open(config, Some(&run_dir))?;
    for stage in [
        "ingest", "split", "train", "infer", "vote", "expand", "train", "evaluate", "report",
    ] {
        pipeline.run_stage(stage)?;
    }

    let record = ExperimentRecord::load(&run_dir)?;
    for entry in &record.entries {
        println!("{:<9} {}", entry.stage, entry.config_fingerprint);
    }
    if let Some(vote) = record.stage("vote") {
        println!("vote histogram: {}", vote.outputs["histogram"]);
    }
    let report = std::fs::read_to_string(run_dir.join(REPORT_FILE)).map_err(|e| sciclass::Error::io(&run_dir, e))?;
    let tail: Vec<&str> = report.lines().skip_while(|l| !l.starts_with("## Accuracy")).collect();
    println!("{}", tail.join("\n"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> sciclass::Result<()> {
    run_example()
}
