//! CSV tables and repeat summaries.

use std::fs::File;
use std::path::Path;

use qbag::metrics::{summarize_repeats, RepeatSummary};

use crate::runner::{sort_rows, MetricKind, ResultRow};
use crate::BenchError;

pub const RESULT_HEADER: [&str; 10] = [
    "dataset",
    "learner",
    "B",
    "delta",
    "repeat_index",
    "seed",
    "train_metric",
    "test_metric",
    "metric_kind",
    "mean_ensemble_variance",
];

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>, BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<(), BenchError> {
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Result rows in canonical order. Wall-clock times are left out so that
/// reruns produce identical bytes; see [`emit_timings`].
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), BenchError> {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(RESULT_HEADER).map_err(&err)?;
    for r in &rows {
        w.write_record([
            r.dataset.clone(),
            r.learner.clone(),
            r.b.to_string(),
            fixed(r.delta),
            r.repeat_index.to_string(),
            r.seed.to_string(),
            fixed(r.train_metric),
            fixed(r.test_metric),
            r.metric_kind.name().to_string(),
            fixed(r.mean_ensemble_variance),
        ])
        .map_err(&err)?;
    }
    finish(w, path)
}

/// Per-row wall-clock times, keyed like the result rows.
pub fn emit_timings(rows: &[ResultRow], path: &Path) -> Result<(), BenchError> {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record([
        "dataset",
        "learner",
        "B",
        "delta",
        "repeat_index",
        "wall_time_ms",
    ])
    .map_err(&err)?;
    for r in &rows {
        w.write_record([
            r.dataset.clone(),
            r.learner.clone(),
            r.b.to_string(),
            fixed(r.delta),
            r.repeat_index.to_string(),
            format!("{:.3}", r.wall_time_ms),
        ])
        .map_err(&err)?;
    }
    finish(w, path)
}

/// Parse a file written by [`emit_csv`]. Wall times read back as zero.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    let err = csv_err(path);
    let mut reader = csv::Reader::from_path(path).map_err(&err)?;
    let header = reader.headers().map_err(&err)?.clone();
    if header.iter().collect::<Vec<_>>() != RESULT_HEADER {
        return Err(BenchError::Csv {
            path: path.display().to_string(),
            message: "not a results table (unexpected header)".into(),
        });
    }
    let bad = |line: usize, what: &str| BenchError::Csv {
        path: path.display().to_string(),
        message: format!("record {line}: bad {what}"),
    };
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(&err)?;
        let num = |j: usize| {
            rec[j]
                .parse::<f64>()
                .map_err(|_| bad(i + 1, RESULT_HEADER[j]))
        };
        let int = |j: usize| {
            rec[j]
                .parse::<u64>()
                .map_err(|_| bad(i + 1, RESULT_HEADER[j]))
        };
        rows.push(ResultRow {
            dataset: rec[0].to_string(),
            learner: rec[1].to_string(),
            b: int(2)? as usize,
            delta: num(3)?,
            repeat_index: int(4)? as usize,
            seed: int(5)?,
            train_metric: num(6)?,
            test_metric: num(7)?,
            metric_kind: match &rec[8] {
                "accuracy" => MetricKind::Accuracy,
                "mse" => MetricKind::Mse,
                _ => return Err(bad(i + 1, "metric_kind")),
            },
            mean_ensemble_variance: num(9)?,
            wall_time_ms: 0.0,
        });
    }
    Ok(rows)
}

/// Test-metric summary of one group of rows. `delta` is `None` when the
/// group pools every delta.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub learner: String,
    pub delta: Option<f64>,
    pub b: usize,
    pub metric_kind: MetricKind,
    pub test: RepeatSummary,
    pub mean_train_metric: f64,
    pub mean_ensemble_variance: f64,
}

fn summarize_groups(rows: &[ResultRow], per_delta: bool) -> Vec<SummaryRow> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let key = |r: &ResultRow| {
        (
            r.dataset.clone(),
            r.learner.clone(),
            per_delta.then_some(r.delta.to_bits()),
            r.b,
        )
    };
    let mut groups: Vec<(_, Vec<&ResultRow>)> = Vec::new();
    for r in &sorted {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, members)) => members.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((dataset, learner, delta, b), members)| {
            let n = members.len() as f64;
            let tests: Vec<f64> = members.iter().map(|r| r.test_metric).collect();
            SummaryRow {
                dataset,
                learner,
                delta: delta.map(f64::from_bits),
                b,
                metric_kind: members[0].metric_kind.clone(),
                test: summarize_repeats(&tests).expect("groups are nonempty"),
                mean_train_metric: members.iter().map(|r| r.train_metric).sum::<f64>() / n,
                mean_ensemble_variance: members
                    .iter()
                    .map(|r| r.mean_ensemble_variance)
                    .sum::<f64>()
                    / n,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.dataset.as_str(), a.learner.as_str())
            .cmp(&(b.dataset.as_str(), b.learner.as_str()))
            .then_with(|| a.delta.unwrap_or(0.0).total_cmp(&b.delta.unwrap_or(0.0)))
            .then_with(|| a.b.cmp(&b.b))
    });
    out
}

/// One summary per (dataset, learner, delta, B) over repeats.
pub fn summarize_by_delta(rows: &[ResultRow]) -> Vec<SummaryRow> {
    summarize_groups(rows, true)
}

/// One summary per (dataset, learner, B), pooling every delta and repeat.
pub fn summarize_over_delta(rows: &[ResultRow]) -> Vec<SummaryRow> {
    summarize_groups(rows, false)
}

pub fn emit_summary(summary: &[SummaryRow], path: &Path) -> Result<(), BenchError> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    let with_delta = summary.iter().any(|s| s.delta.is_some());
    let mut header = vec!["dataset", "learner"];
    if with_delta {
        header.push("delta");
    }
    header.extend([
        "B",
        "metric_kind",
        "mean_test_metric",
        "std_test_metric",
        "n_runs",
        "mean_train_metric",
        "mean_ensemble_variance",
    ]);
    w.write_record(&header).map_err(&err)?;
    for s in summary {
        let mut rec = vec![s.dataset.clone(), s.learner.clone()];
        if with_delta {
            rec.push(s.delta.map(fixed).unwrap_or_default());
        }
        rec.extend([
            s.b.to_string(),
            s.metric_kind.name().to_string(),
            fixed(s.test.mean),
            fixed(s.test.std),
            s.test.n_repeats.to_string(),
            fixed(s.mean_train_metric),
            fixed(s.mean_ensemble_variance),
        ]);
        w.write_record(&rec).map_err(&err)?;
    }
    finish(w, path)
}
