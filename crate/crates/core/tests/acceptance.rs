//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any fails.

mod common;

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{early_stop_oracle, scripted_bundle, ScriptedBackend};
use sciclass::backend::{AdapterDescriptor, LightweightBackend, DESCRIPTOR_FILE};
use sciclass::corpus::{split, Corpus, Document, DomainLabel, LabelSpace, SplitRatios};
use sciclass::ensemble::{vote_all, Prediction, VotePolicy};
use sciclass::evaluation::{confusion, load_baselines, micro_metrics, render_comparison};
use sciclass::jsonl;
use sciclass::pipeline::{AgreementReport, ExpandSummary, MetricsRecord, Phase, Pipeline, RunConfig, TrainSummary};
use sciclass::preprocess::{clean_text, encode, Scenario, Tokenizer};
use sciclass::synthetic::{write_desk, SyntheticSpec};
use sciclass::tokenizer::WordTokenizer;
use sciclass::training::{fine_tune, lr_search, TrainConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

// 1 ---------------------------------------------------------------------

/// Counts top-1 votes per label; ties on count go to the larger summed
/// probability, then to the earlier label.
fn vote_oracle(votes: &[(usize, f64)], n_labels: usize, quorum: usize) -> (usize, usize, bool) {
    let mut count = vec![0usize; n_labels];
    let mut probs: Vec<Vec<f64>> = vec![Vec::new(); n_labels];
    for &(l, p) in votes {
        count[l] += 1;
        probs[l].push(p);
    }
    let top = *count.iter().max().unwrap();
    let mut best = None;
    let mut best_sum = f64::NEG_INFINITY;
    for l in 0..n_labels {
        if count[l] != top {
            continue;
        }
        let mut ps = probs[l].clone();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s: f64 = ps.iter().sum();
        if best.is_none() || s > best_sum {
            best = Some(l);
            best_sum = s;
        }
    }
    (best.unwrap(), top, top >= quorum)
}

fn criterion_1() -> Outcome {
    let labels = LabelSpace::wos7();
    let models = ["m0", "m1", "m2", "m3"];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = [0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];
    let mut preds = Vec::new();
    let mut truth = Vec::new();
    for d in 0..1000 {
        // Half the documents draw from 3 labels only, which forces ties.
        let spread = if d % 2 == 0 { 3 } else { 7 };
        let mut votes = Vec::new();
        for m in models {
            let l = rng.random_range(0..spread);
            let p = if rng.random_bool(0.5) {
                *grid.choose(&mut rng).unwrap()
            } else {
                rng.random_range(0.15..1.0)
            };
            votes.push((l, p));
            preds.push(Prediction {
                doc_id: format!("d{d}"),
                model_id: m.into(),
                scenario: Scenario::AbstractAndKeywords,
                ranked: vec![(labels.labels()[l].clone(), p)],
            });
        }
        truth.push(vote_oracle(&votes, 7, 2));
    }
    let start = Instant::now();
    let summary = vote_all(&preds, &VotePolicy::default(), &labels).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let mut got: HashMap<String, (DomainLabel, usize, bool)> = HashMap::new();
    for r in &summary.accepted {
        got.insert(r.doc_id.clone(), (r.label.clone(), r.votes, true));
    }
    for r in &summary.rejected {
        got.insert(r.doc_id.clone(), (r.label.clone(), r.votes, false));
    }
    let mut ties = 0;
    for (d, &(l, n, ok)) in truth.iter().enumerate() {
        let g = &got[&format!("d{d}")];
        ensure!(
            g.0 == labels.labels()[l] && g.1 == n && g.2 == ok,
            "document d{d}: got {:?}, oracle ({}, {n}, {ok})",
            g,
            labels.labels()[l]
        );
    }
    for r in &summary.accepted {
        ties += r.tie_broken as usize;
    }
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    ensure!(ties > 0, "no tie cases were exercised");
    Ok(format!(
        "1000/1000 match ({} accepted, {} rejected, {ties} ties) in {elapsed:.1?}",
        summary.accepted.len(),
        summary.rejected.len()
    ))
}

// 2 ---------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for set in 0..200 {
        let k = rng.random_range(2..=9);
        let n = rng.random_range(1..=400);
        let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let labels = LabelSpace::from_names(&names).unwrap();
        let skill = rng.random_range(0.0..1.0);
        let golds: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let preds: Vec<usize> = golds
            .iter()
            .map(|&g| {
                if rng.random_bool(skill) {
                    g
                } else {
                    rng.random_range(0..k)
                }
            })
            .collect();
        let as_labels = |v: &[usize]| {
            v.iter()
                .map(|&i| DomainLabel::new(names[i].clone()))
                .collect::<Vec<_>>()
        };
        let m = confusion(&labels, &as_labels(&golds), &as_labels(&preds)).map_err(|e| e.to_string())?;
        let r = micro_metrics(&m).map_err(|e| e.to_string())?;

        ensure!(
            r.micro_precision == r.micro_recall && r.micro_recall == r.micro_f1 && r.micro_f1 == r.accuracy,
            "set {set}: identity broken {r:?}"
        );
        // Per-example recount, pooled over classes.
        let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
        for c in 0..k {
            for (&g, &p) in golds.iter().zip(&preds) {
                tp += (g == c && p == c) as u64;
                fp += (g != c && p == c) as u64;
                fneg += (g == c && p != c) as u64;
            }
        }
        let p_oracle = tp as f64 / (tp + fp) as f64;
        let r_oracle = tp as f64 / (tp + fneg) as f64;
        let f_oracle = 2.0 * p_oracle * r_oracle / (p_oracle + r_oracle).max(f64::MIN_POSITIVE);
        let acc_oracle = golds.iter().zip(&preds).filter(|(g, p)| g == p).count() as f64 / n as f64;
        for (name, got, want) in [
            ("precision", r.micro_precision, p_oracle),
            ("recall", r.micro_recall, r_oracle),
            ("f1", r.micro_f1, f_oracle),
            ("accuracy", r.accuracy, acc_oracle),
        ] {
            ensure!((got - want).abs() <= 1e-12, "set {set}: {name} {got} vs oracle {want}");
        }
    }
    Ok("200/200 prediction sets: identity exact, recount within 1e-12".into())
}

// 3 ---------------------------------------------------------------------

fn synthetic_ids(n: usize) -> Corpus {
    let docs = (0..n)
        .map(|i| Document::new(format!("doc-{i:06}"), format!("title {i}"), ""))
        .collect();
    Corpus::new("ids", LabelSpace::wos7(), docs).unwrap()
}

fn criterion_3() -> Outcome {
    let ratios = SplitRatios::default();
    let mut sizes = Vec::new();
    for n in [10usize, 8716, 53949] {
        let corpus = synthetic_ids(n);
        let a = split(&corpus, ratios, 42).map_err(|e| e.to_string())?.manifest();
        let b = split(&corpus, ratios, 42).map_err(|e| e.to_string())?.manifest();
        ensure!(a == b, "n={n}: two runs differ");

        // 10% of n, rounded down, for validation and test; train keeps the rest.
        let tenth = n / 10;
        let want = (n - 2 * tenth, tenth, tenth);
        let got = (a.train.len(), a.validation.len(), a.test.len());
        ensure!(got == want, "n={n}: sizes {got:?}, expected {want:?}");

        let mut seen = HashSet::new();
        for id in a.train.iter().chain(&a.validation).chain(&a.test) {
            ensure!(seen.insert(id.as_str()), "n={n}: {id} appears twice");
        }
        ensure!(seen.len() == n, "n={n}: {} of {n} ids assigned", seen.len());
        sizes.push(format!("{n}->{got:?}"));
    }
    Ok(format!("disjoint, exhaustive, reproducible: {}", sizes.join(" ")))
}

// 4 ---------------------------------------------------------------------

fn scripted_config(epochs: usize, rates: Vec<f64>) -> TrainConfig {
    TrainConfig {
        learning_rates: rates,
        max_epochs: epochs,
        patience: 3,
        batch_size: 16,
        max_len: 8,
        ..TrainConfig::default()
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bundle = scripted_bundle(100);
    let mut stopped = 0;
    for seq in 0..50 {
        let epochs = rng.random_range(4..=20);
        let levels: Vec<f64> = (0..rng.random_range(2..=6))
            .map(|_| rng.random_range(0..=100) as f64 / 100.0)
            .collect();
        let scores: Vec<f64> = (0..epochs).map(|_| *levels.choose(&mut rng).unwrap()).collect();
        let (want_epochs, want_best, want_score) = early_stop_oracle(&scores, 3);

        let config = scripted_config(epochs, vec![1e-6]);
        let out = fine_tune(
            ScriptedBackend::new(100, scores.clone()),
            &bundle,
            Scenario::Abstract,
            &config,
            1e-6,
        )
        .map_err(|e| e.to_string())?;
        ensure!(
            out.records.len() == want_epochs,
            "seq {seq} {scores:?}: ran {} epochs, oracle {want_epochs}",
            out.records.len()
        );
        ensure!(
            out.checkpoint.epoch == want_best,
            "seq {seq}: best epoch {} vs {want_best}",
            out.checkpoint.epoch
        );
        ensure!(
            out.checkpoint.val_micro_f1 == want_score,
            "seq {seq}: best score {} vs {want_score}",
            out.checkpoint.val_micro_f1
        );
        ensure!(
            out.checkpoint.backend.steps == want_best,
            "seq {seq}: checkpoint holds state after {} steps",
            out.checkpoint.backend.steps
        );
        stopped += (want_epochs < epochs) as usize;
    }
    ensure!(stopped > 0, "no sequence triggered early stopping");
    Ok(format!("50/50 sequences ({stopped} stopped early) match the oracle"))
}

// 5 ---------------------------------------------------------------------

fn search_with_peaks(peaks: &[(f64, f64)]) -> Result<f64, String> {
    const N: usize = 10_000;
    let bundle = scripted_bundle(N);
    let config = scripted_config(6, peaks.iter().map(|p| p.0).collect());
    let mut scripts = peaks
        .iter()
        .map(|&(_, peak)| vec![peak - 0.1, peak - 0.05, peak, peak - 0.01, peak - 0.02, peak]);
    let factory = || Ok(ScriptedBackend::new(N, scripts.next().unwrap()));
    let search = lr_search(factory, &bundle, Scenario::Abstract, &config).map_err(|e| e.to_string())?;
    for (run, &(lr, peak)) in search.runs.iter().zip(peaks) {
        if run.learning_rate != lr || run.checkpoint.val_micro_f1 != peak {
            return Err(format!(
                "rate {lr:e}: checkpoint score {} vs peak {peak}",
                run.checkpoint.val_micro_f1
            ));
        }
    }
    Ok(search.best_lr)
}

fn criterion_5() -> Outcome {
    let grid = [(2e-5, 0.80), (5e-6, 0.85), (1e-6, 0.8971), (2e-6, 0.88)];
    let best = search_with_peaks(&grid)?;
    ensure!(best == 1e-6, "selected {best:e} instead of 1e-6");

    let tie = [(2e-5, 0.88), (5e-6, 0.88), (1e-6, 0.85), (2e-6, 0.88)];
    let tie_best = search_with_peaks(&tie)?;
    ensure!(tie_best == 2e-6, "tie selected {tie_best:e} instead of 2e-6");

    let flat = [(2e-5, 0.9), (5e-6, 0.9), (1e-6, 0.9), (2e-6, 0.9)];
    let flat_best = search_with_peaks(&flat)?;
    ensure!(flat_best == 1e-6, "all-equal selected {flat_best:e}");
    Ok("peak 0.8971 at 1e-6 selected; ties resolve to the smaller rate".into())
}

// 6 and 7 ---------------------------------------------------------------

struct DeskRun {
    _dir: tempfile::TempDir,
    run: PathBuf,
    elapsed: Duration,
    spec: SyntheticSpec,
}

fn desk_run() -> &'static Result<DeskRun, String> {
    static RUN: OnceLock<Result<DeskRun, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let spec = SyntheticSpec::default();
        let config_path = write_desk(dir.path(), &spec).map_err(|e| e.to_string())?;
        let run = dir.path().join("run");
        let start = Instant::now();
        let config = RunConfig::load(&config_path).map_err(|e| e.to_string())?;
        Pipeline::open(config, Some(&run))
            .and_then(|p| p.run_all())
            .map_err(|e| e.to_string())?;
        Ok(DeskRun {
            _dir: dir,
            run,
            elapsed: start.elapsed(),
            spec,
        })
    })
}

fn read<T: serde::de::DeserializeOwned>(run: &Path, rel: &str) -> Result<T, String> {
    jsonl::read_json(&run.join(rel)).map_err(|e| e.to_string())
}

fn mean_accuracy(records: &[MetricsRecord], phase: Phase) -> f64 {
    let rs: Vec<f64> = records
        .iter()
        .filter(|r| r.phase == phase && r.model_id.starts_with("nb-"))
        .map(|r| r.metrics.accuracy)
        .collect();
    rs.iter().sum::<f64>() / rs.len() as f64
}

fn criterion_6() -> Outcome {
    let desk = desk_run().as_ref().map_err(Clone::clone)?;
    ensure!(
        desk.elapsed < Duration::from_secs(60),
        "pipeline took {:?}",
        desk.elapsed
    );
    let run = &desk.run;

    let base: TrainSummary = read(run, "train/base/summary.json")?;
    ensure!(base.backends.len() == 4, "{} backends trained", base.backends.len());
    let models: Vec<LightweightBackend> = base
        .backends
        .iter()
        .map(|b| AdapterDescriptor::load(&run.join(format!("train/base/{}/model/{DESCRIPTOR_FILE}", b.checkpoint))))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            ensure!(
                models[i].token_log_likelihoods() != models[j].token_log_likelihoods(),
                "backends {i} and {j} learned identical parameters"
            );
        }
    }

    let agreement: AgreementReport = read(run, "vote/agreement.json")?;
    let quorum = agreement.accepted as f64 / agreement.documents as f64;
    ensure!(
        agreement.documents == 210,
        "{} unlabeled documents voted",
        agreement.documents
    );
    ensure!(quorum >= 0.95, "quorum rate {quorum:.3}");

    let metrics: Vec<MetricsRecord> =
        jsonl::read_lines(&run.join(sciclass::pipeline::METRICS_FILE)).map_err(|e| e.to_string())?;
    let before = mean_accuracy(&metrics, Phase::Base);
    let after = mean_accuracy(&metrics, Phase::Expanded);
    ensure!(after >= before, "accuracy fell from {before:.4} to {after:.4}");
    Ok(format!(
        "chain done in {:.1?}; quorum {:.1}%; held-out accuracy {:.4} -> {:.4}",
        desk.elapsed,
        quorum * 100.0,
        before,
        after
    ))
}

fn criterion_7() -> Outcome {
    let desk = desk_run().as_ref().map_err(Clone::clone)?;
    let run = &desk.run;
    let e: ExpandSummary = read(run, "expand/report.json")?;
    let m = e.merge;
    let lines = |rel: &str| {
        std::fs::read_to_string(run.join(rel))
            .map(|s| s.lines().count())
            .unwrap_or(0)
    };
    let votes = lines("vote/votes.jsonl");
    ensure!(
        m.original == lines("ingest/corpus.jsonl"),
        "original {} vs ingested file",
        m.original
    );
    ensure!(m.accepted == votes, "accepted {} vs {votes} votes", m.accepted);
    ensure!(
        m.total == lines("expand/corpus.jsonl"),
        "total {} vs expanded file",
        m.total
    );
    ensure!(
        m.original + m.accepted - m.collisions == m.total,
        "{m:?} does not add up"
    );
    ensure!(
        m.collisions == desk.spec.duplicates,
        "{} collisions, {} planted",
        m.collisions,
        desk.spec.duplicates
    );
    let per_class: usize = e.per_class_after.iter().map(|(_, n)| n).sum();
    ensure!(per_class == m.total, "per-class counts sum to {per_class}");
    Ok(format!(
        "{} + {} - {} = {}",
        m.original, m.accepted, m.collisions, m.total
    ))
}

// 8 ---------------------------------------------------------------------

fn random_string(rng: &mut ChaCha8Rng) -> String {
    const POOLS: &[&str] = &[
        "abcdefghijklmnopqrstuvwxyz",
        "ABCDEFGHIJKLMNOPQRSTUVWXYZ",
        "0123456789",
        " \t\n\r.,;:!?-_()[]{}'\"/\\@#$%^&*+=<>|~`",
        "àéîõüßçñÀÉÎÕÜÇÑøåæœ",
        "αβγδεζηθΑΒΓΔΩωσς",
        "абвгдеёжзАБВГДЕЁЖЗ",
        "İıǅǈǋÅKΩ",
        "中文字符日本語한국어",
        "\u{0301}\u{0308}\u{200b}\u{00a0}\u{2003}",
        "😀🧬∑∫√∞½²³",
    ];
    let len = rng.random_range(0..60);
    (0..len)
        .map(|_| {
            let pool: Vec<char> = POOLS.choose(rng).unwrap().chars().collect();
            *pool.choose(rng).unwrap()
        })
        .collect()
}

fn in_output_language(s: &str) -> bool {
    let letter_ok = |c: char| c.is_alphabetic() && c.to_lowercase().eq(std::iter::once(c));
    !s.starts_with(' ') && !s.ends_with(' ') && !s.contains("  ") && s.chars().all(|c| c == ' ' || letter_ok(c))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cleaned = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let raw = random_string(&mut rng);
        let once = clean_text(&raw);
        ensure!(clean_text(&once) == once, "not idempotent on {raw:?}");
        ensure!(in_output_language(&once), "{raw:?} cleaned to {once:?}");
        cleaned.push(once);
    }
    let texts: Vec<&String> = cleaned.iter().filter(|t| !t.is_empty()).collect();
    let tokenizer = WordTokenizer::from_texts(texts.iter().step_by(2).map(|s| s.as_str()), 1);
    // Long inputs so that every bound is reached.
    let long: Vec<String> = texts
        .chunks(40)
        .map(|c| c.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "))
        .collect();
    let mut truncated = 0;
    for max_len in [8usize, 128, 512] {
        for text in texts.iter().map(|s| s.as_str()).chain(long.iter().map(String::as_str)) {
            let a = encode(text, &tokenizer, max_len).map_err(|e| e.to_string())?;
            let b = encode(text, &tokenizer, max_len).map_err(|e| e.to_string())?;
            ensure!(a == b, "encode is not deterministic");
            ensure!(
                a.input_ids.len() == max_len && a.attention_mask.len() == max_len,
                "length is not {max_len}"
            );
            let n_tokens = tokenizer.tokenize(text).len();
            let active = a.active_ids().len();
            ensure!(
                active == (n_tokens + 2).min(max_len),
                "{active} active ids for {n_tokens} tokens at {max_len}"
            );
            ensure!(
                a.input_ids[0] == tokenizer.cls_id() && a.input_ids[active - 1] == tokenizer.sep_id(),
                "markers missing"
            );
            ensure!(
                a.input_ids[active..].iter().all(|&t| t == tokenizer.pad_id()),
                "padding is not [PAD]"
            );
            truncated += (n_tokens + 2 > max_len) as usize;
        }
    }
    ensure!(truncated > 0, "no input was truncated");
    Ok(format!(
        "10000 strings clean idempotently; {} encodings bounded ({truncated} truncated)",
        3 * (texts.len() + long.len())
    ))
}

// 9 ---------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/literature_baselines.csv");
    let baselines = load_baselines(&path).map_err(|e| e.to_string())?;
    let table = render_comparison(&[], &baselines);
    let row = table
        .rows
        .iter()
        .find(|r| r.method == "HDLTex")
        .ok_or("no HDLTex row")?;
    let mut got = Vec::new();
    for ds in ["WoS-11967", "WoS-46985", "WoS-5736"] {
        let i = table
            .datasets
            .iter()
            .position(|d| d == ds)
            .ok_or(format!("no {ds} column"))?;
        got.push(row.cells[i].as_ref().ok_or(format!("empty {ds} cell"))?.text.clone());
    }
    ensure!(got == ["86.07", "76.58", "90.93"], "HDLTex row renders as {got:?}");
    let md = table.to_markdown();
    ensure!(
        md.contains("| HDLTex | **86.07** | **76.58** | **90.93** |"),
        "markdown row differs"
    );
    ensure!(
        table.to_csv().contains("HDLTex,*86.07*,*76.58*,*90.93*"),
        "csv row differs"
    );
    Ok(format!("HDLTex {}", got.join(" / ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("voting oracle equivalence", criterion_1),
        ("metric identity", criterion_2),
        ("split determinism and conservation", criterion_3),
        ("early stopping and checkpointing", criterion_4),
        ("learning-rate search", criterion_5),
        ("end-to-end desk-scale expansion", criterion_6),
        ("conservation of counts", criterion_7),
        ("preprocessing properties", criterion_8),
        ("report rendering", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
