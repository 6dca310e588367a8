use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::Method;
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::harness::{count, CountOptions};
use crate::samples::{decode_image, BenchmarkManifest};

/// One (image, method) evaluation. `estimate` is `None` when the image could
/// not be decoded or the method failed; `note` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub path: String,
    pub truth: usize,
    pub method: Method,
    pub estimate: Option<usize>,
    pub runtime_seconds: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Rows with an estimate.
    pub evaluated: usize,
    pub exact_match_rate: f64,
    pub within_one_rate: f64,
    pub mean_absolute_error: f64,
    pub mean_runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<MethodSummary>,
}

/// Runs every method on every manifest image. Images are processed in
/// parallel; rows come back in manifest order, methods in the given order.
pub fn run_benchmark(manifest: &BenchmarkManifest, methods: &[Method], options: &CountOptions) -> BenchReport {
    let rows: Vec<BenchRow> = manifest
        .entries
        .par_iter()
        .flat_map_iter(|entry| {
            let label = entry.path.display().to_string();
            let decoded = decode_image(manifest.resolve(entry));
            methods
                .iter()
                .map(|&method| {
                    let outcome = decoded
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|s| count(s, method, options).map_err(|e| e.to_string()));
                    match outcome {
                        Ok(est) => BenchRow {
                            path: label.clone(),
                            truth: entry.true_count,
                            method,
                            estimate: Some(est.estimate),
                            runtime_seconds: est.runtime_seconds,
                            note: None,
                        },
                        Err(reason) => BenchRow {
                            path: label.clone(),
                            truth: entry.true_count,
                            method,
                            estimate: None,
                            runtime_seconds: f64::NAN,
                            note: Some(reason),
                        },
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let summaries = methods.iter().map(|&m| summarize(&rows, m)).collect();
    BenchReport { rows, summaries }
}

fn summarize(rows: &[BenchRow], method: Method) -> MethodSummary {
    let scored: Vec<(usize, usize, f64)> = rows
        .iter()
        .filter(|r| r.method == method)
        .filter_map(|r| r.estimate.map(|e| (r.truth, e, r.runtime_seconds)))
        .collect();
    let n = scored.len() as f64;
    let rate = |pred: &dyn Fn(usize) -> bool| {
        if scored.is_empty() {
            f64::NAN
        } else {
            scored.iter().filter(|(t, e, _)| pred(t.abs_diff(*e))).count() as f64 / n
        }
    };
    let mean = |f: &dyn Fn(&(usize, usize, f64)) -> f64| {
        if scored.is_empty() {
            f64::NAN
        } else {
            scored.iter().map(f).sum::<f64>() / n
        }
    };
    MethodSummary {
        method,
        evaluated: scored.len(),
        exact_match_rate: rate(&|d| d == 0),
        within_one_rate: rate(&|d| d <= 1),
        mean_absolute_error: mean(&|(t, e, _)| t.abs_diff(*e) as f64),
        mean_runtime_seconds: mean(&|r| r.2),
    }
}

impl BenchReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Report CSV, header `path,truth,method,estimate,runtime_seconds`.
    /// Skipped rows leave `estimate` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,truth,method,estimate,runtime_seconds\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&r.path),
                r.truth,
                r.method,
                r.estimate.map(|e| e.to_string()).unwrap_or_default(),
                sig9(r.runtime_seconds)
            ));
        }
        out
    }

    /// Per-method aggregates. Rates of a method with no evaluated rows are
    /// written as `NaN`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "method,evaluated,exact_match_rate,within_one_rate,mean_absolute_error,mean_runtime_seconds\n",
        );
        for s in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.method,
                s.evaluated,
                sig9(s.exact_match_rate),
                sig9(s.within_one_rate),
                sig9(s.mean_absolute_error),
                sig9(s.mean_runtime_seconds)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
