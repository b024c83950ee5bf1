//! Confusion matrices, micro-averaged metrics and comparison tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{DomainLabel, LabelSpace};
use crate::error::{Error, Result};

/// Index of the largest probability; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = i;
        }
    }
    best
}

/// Rows are gold labels, columns predictions, both in label-space order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: LabelSpace,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: LabelSpace) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(labels: &LabelSpace, golds: &[DomainLabel], preds: &[DomainLabel]) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(Error::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    let index = |l: &DomainLabel| labels.index_of(l).ok_or_else(|| Error::UnknownLabel(l.to_string()));
    let mut m = ConfusionMatrix::new(labels.clone());
    for (g, p) in golds.iter().zip(preds) {
        m.counts[index(g)?][index(p)?] += 1;
    }
    Ok(m)
}

/// Same as [`confusion`] for label indices.
pub fn confusion_indices(labels: LabelSpace, golds: &[usize], preds: &[usize]) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(Error::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    let n = labels.len();
    let mut m = ConfusionMatrix::new(labels);
    for (&g, &p) in golds.iter().zip(preds) {
        if g >= n || p >= n {
            return Err(Error::UnknownLabel(format!("index {}", g.max(p))));
        }
        m.counts[g][p] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: DomainLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub micro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub n_examples: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro metrics pool counts over all classes. F1 is computed from counts
/// as `2TP / (2TP + FP + FN)`, which keeps it bit-identical to accuracy for
/// single-label predictions.
pub fn micro_metrics(m: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = m.counts.len();
    let tp = m.trace();
    let mut fp = 0;
    let mut fn_ = 0;
    let mut per_class = Vec::with_capacity(n);
    for c in 0..n {
        let tp_c = m.counts[c][c];
        let row: u64 = m.counts[c].iter().sum();
        let col: u64 = m.counts.iter().map(|r| r[c]).sum();
        fp += col - tp_c;
        fn_ += row - tp_c;
        per_class.push(ClassMetrics {
            label: m.labels.labels()[c].clone(),
            precision: ratio(tp_c, col),
            recall: ratio(tp_c, row),
            f1: ratio(2 * tp_c, row + col),
            support: row,
        });
    }
    Ok(MetricsReport {
        micro_f1: ratio(2 * tp, 2 * tp + fp + fn_),
        micro_precision: ratio(tp, tp + fp),
        micro_recall: ratio(tp, tp + fn_),
        accuracy: ratio(tp, total),
        per_class,
        n_examples: total,
    })
}

/// Micro F1 / recall / precision with four decimals and accuracy as an
/// integer percent, e.g. `0.8924 | 0.8924 | 0.8924 | 89%`.
pub fn format_metrics_row(r: &MetricsReport) -> String {
    format!(
        "{:.4} | {:.4} | {:.4} | {:.0}%",
        r.micro_f1,
        r.micro_recall,
        r.micro_precision,
        r.accuracy * 100.0
    )
}

/// One literature result: accuracy in percent, kept as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub method: String,
    pub dataset: String,
    pub accuracy: String,
}

/// Reads a `method,dataset,accuracy` table.
pub fn load_baselines(path: &Path) -> Result<Vec<BaselineRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<BaselineRow>() {
        let row = row.map_err(|e| Error::malformed(path, e.to_string()))?;
        if row.accuracy.parse::<f64>().is_err() {
            return Err(Error::malformed(
                path,
                format!("accuracy `{}` is not a number", row.accuracy),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A computed result to place in the comparison table.
#[derive(Debug, Clone)]
pub struct ComparisonEntry {
    pub model: String,
    pub dataset: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCell {
    pub text: String,
    pub bold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub cells: Vec<Option<ComparisonCell>>,
}

/// Accuracy (%) of methods over datasets; the maximum of each column is
/// marked bold (all of them on ties).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub datasets: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

/// Literature rows first, in file order, then one row per computed model.
/// Baseline values are reproduced verbatim; computed accuracies are shown
/// as percentages with two decimals.
pub fn render_comparison(entries: &[ComparisonEntry], baselines: &[BaselineRow]) -> ComparisonTable {
    let mut datasets: Vec<String> = Vec::new();
    let mut rows: Vec<(String, Vec<(String, String)>)> = Vec::new();
    let mut push = |method: &str, dataset: &str, text: String| {
        if !datasets.iter().any(|d| d == dataset) {
            datasets.push(dataset.to_owned());
        }
        match rows.iter_mut().find(|(m, _)| m == method) {
            Some((_, cells)) => cells.push((dataset.to_owned(), text)),
            None => rows.push((method.to_owned(), vec![(dataset.to_owned(), text)])),
        }
    };
    for b in baselines {
        push(&b.method, &b.dataset, b.accuracy.clone());
    }
    for e in entries {
        push(&e.model, &e.dataset, format!("{:.2}", e.report.accuracy * 100.0));
    }

    let value = |t: &str| t.parse::<f64>().unwrap_or(f64::NEG_INFINITY);
    let maxima: Vec<f64> = datasets
        .iter()
        .map(|d| {
            rows.iter()
                .flat_map(|(_, cells)| cells.iter())
                .filter(|(ds, _)| ds == d)
                .map(|(_, t)| value(t))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let rows = rows
        .into_iter()
        .map(|(method, cells)| ComparisonRow {
            cells: datasets
                .iter()
                .zip(&maxima)
                .map(|(d, &max)| {
                    cells.iter().rev().find(|(ds, _)| ds == d).map(|(_, t)| ComparisonCell {
                        bold: value(t) == max,
                        text: t.clone(),
                    })
                })
                .collect(),
            method,
        })
        .collect();
    ComparisonTable { datasets, rows }
}

impl ComparisonTable {
    /// Comma-delimited form; bold cells are wrapped in `*`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["method".to_owned()];
        header.extend(self.datasets.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.method.clone()];
            rec.extend(row.cells.iter().map(|c| match c {
                Some(c) if c.bold => format!("*{}*", c.text),
                Some(c) => c.text.clone(),
                None => String::new(),
            }));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Markdown table; bold cells use `**`.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("| Method | {} |\n", self.datasets.join(" | "));
        out.push_str(&format!("|---|{}\n", "---:|".repeat(self.datasets.len())));
        for row in &self.rows {
            let cells: Vec<String> = row
                .cells
                .iter()
                .map(|c| match c {
                    Some(c) if c.bold => format!("**{}**", c.text),
                    Some(c) => c.text.clone(),
                    None => "-".to_owned(),
                })
                .collect();
            out.push_str(&format!("| {} | {} |\n", row.method, cells.join(" | ")));
        }
        out
    }
}
