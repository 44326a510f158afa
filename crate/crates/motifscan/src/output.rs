//! Report files written into the output directory.

use std::collections::BTreeMap;
use std::path::Path;

use motifscan_core::report::{fmt4, histograms, Histograms};
use motifscan_core::{Label, Mechanism, MetricsReport, QueryObject, Tile};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{AppError, Result};
use crate::pipeline::{Calibrated, ScorerRun};

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const HISTOGRAMS_JSON: &str = "histograms.json";
pub const NULL_JSON: &str = "null.json";
pub const RUN_META_JSON: &str = "run_meta.json";
pub const KEYPOINTS_JSON: &str = "keypoints.json";

pub const RESULTS_HEADER: [&str; 5] = ["image", "name", "text", "similarity", "p_value"];

fn csv_error(path: &Path, e: csv::Error) -> AppError {
    AppError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| AppError::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::json(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInfo {
    pub name: String,
    pub kind: String,
    pub text: String,
}

impl From<&QueryObject> for QueryInfo {
    fn from(q: &QueryObject) -> Self {
        Self {
            name: q.name.clone(),
            kind: q.kind().as_str().into(),
            text: q.display_text().into(),
        }
    }
}

/// One ranked target at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub rank: usize,
    pub image: String,
    pub name: String,
    pub label: Label,
    pub similarity: f64,
    pub p_value: f64,
    pub null_size: usize,
    pub mechanism: Mechanism,
    pub best_tile: Tile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub image: String,
    pub name: String,
    pub similarity: f64,
}

/// `results.json`: the search listing behind `results.csv`, unrounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub query: QueryInfo,
    pub object_type: String,
    pub model_name: String,
    pub backend: String,
    pub mechanism: Mechanism,
    pub targets: Vec<TargetRow>,
    pub references: Vec<ReferenceRow>,
}

impl ResultsFile {
    pub fn build(
        query: &QueryObject,
        corpus: &Corpus,
        run: &ScorerRun,
        calibrated: &Calibrated,
    ) -> Self {
        let records: BTreeMap<&str, _> = corpus
            .targets
            .iter()
            .chain(&corpus.references)
            .map(|r| (r.id.as_str(), r))
            .collect();
        let targets = run
            .ranked
            .items()
            .iter()
            .zip(&calibrated.pvalues)
            .enumerate()
            .map(|(i, (s, p))| {
                let rec = records[s.image_id.as_str()];
                TargetRow {
                    rank: i + 1,
                    image: rec.source_path.clone(),
                    name: s.image_id.clone(),
                    label: rec.label,
                    similarity: s.similarity,
                    p_value: p.p,
                    null_size: p.null_size,
                    mechanism: p.mechanism,
                    best_tile: s.best_tile,
                }
            })
            .collect();
        let references = run
            .references
            .iter()
            .map(|s| ReferenceRow {
                image: records[s.image_id.as_str()].source_path.clone(),
                name: s.image_id.clone(),
                similarity: s.similarity,
            })
            .collect();
        Self {
            query: query.into(),
            object_type: run.config.object_type().into(),
            model_name: run.config.model_name(),
            backend: run.config.backend.as_str().into(),
            mechanism: calibrated.mechanism,
            targets,
            references,
        }
    }

    /// Reference, matched (positive) and unmatched (negative) similarities.
    pub fn histograms(&self, bins: usize) -> Result<Histograms> {
        let reference: Vec<f64> = self.references.iter().map(|r| r.similarity).collect();
        let of = |label: Label| -> Vec<f64> {
            self.targets
                .iter()
                .filter(|t| t.label == label)
                .map(|t| t.similarity)
                .collect()
        };
        let (matched, unmatched) = (of(Label::Positive), of(Label::Negative));
        Ok(histograms(
            &[
                ("reference", &reference),
                ("matched", &matched),
                ("unmatched", &unmatched),
            ],
            bins,
        )?)
    }
}

pub fn write_results_csv(path: &Path, results: &ResultsFile) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(RESULTS_HEADER)
        .map_err(|e| csv_error(path, e))?;
    for t in &results.targets {
        w.write_record([
            t.image.as_str(),
            t.name.as_str(),
            results.query.text.as_str(),
            &fmt4(t.similarity),
            &fmt4(t.p_value),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// `0.01 -> "001"`, `0.1 -> "010"`: two or more decimals, point dropped.
pub fn threshold_token(t: f64) -> String {
    let mut digits = 2;
    while digits < 12 && format!("{t:.digits$}").parse::<f64>() != Ok(t) {
        digits += 1;
    }
    format!("{t:.digits$}").replace('.', "")
}

pub fn metrics_header(k: usize, thresholds: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["object_type", "model_name", "pvalue_type"]
        .map(String::from)
        .to_vec();
    h.push(format!("matches_in_first_{k}"));
    for &t in thresholds {
        let tok = threshold_token(t);
        h.push(format!("balanced_accuracy_{tok}"));
        h.push(format!("f1_score_{tok}"));
    }
    h
}

pub fn write_metrics_csv(
    path: &Path,
    k: usize,
    thresholds: &[f64],
    reports: &[MetricsReport],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(metrics_header(k, thresholds))
        .map_err(|e| csv_error(path, e))?;
    for r in reports {
        let mut row = vec![
            r.object_type.clone(),
            r.model_name.clone(),
            r.mechanism.to_string(),
            r.matches_at_k.to_string(),
        ];
        for &t in thresholds {
            let m = r
                .at(t)
                .expect("every configured threshold is evaluated")
                .metrics;
            row.push(format!("{:.6}", m.balanced_accuracy));
            row.push(format!("{:.6}", m.f1));
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}
