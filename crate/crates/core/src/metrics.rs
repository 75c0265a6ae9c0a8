//! Precision, recall and F1 of an estimated CPDAG against the true DAG on a
//! shared skeleton.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Cpdag, Dag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("estimate and truth have different skeletons")]
    SkeletonMismatch,
    #[error("the skeleton has no edges; metrics are undefined")]
    EmptySkeleton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub directed_correct: usize,
    pub directed_total: usize,
    pub edge_total: usize,
}

/// Precision is the share of directed edges with the true orientation (1
/// when nothing is directed); recall is the share of edges that are directed.
pub fn evaluate(estimate: &Cpdag, truth: &Dag) -> Result<EvalResult, MetricsError> {
    if estimate.num_vars() != truth.num_vars() || estimate.skeleton() != truth.skeleton() {
        return Err(MetricsError::SkeletonMismatch);
    }
    let edge_total = truth.num_edges();
    if edge_total == 0 {
        return Err(MetricsError::EmptySkeleton);
    }
    let directed_total = estimate.directed().len();
    let directed_correct = estimate.directed().iter().filter(|&&(i, j)| truth.has_edge(i, j)).count();
    let precision = if directed_total == 0 { 1.0 } else { directed_correct as f64 / directed_total as f64 };
    let recall = directed_total as f64 / edge_total as f64;
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(EvalResult { precision, recall, f1, directed_correct, directed_total, edge_total })
}

/// One CSV row: metadata columns followed by the metric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub repetition: usize,
    pub d: usize,
    pub n_env: usize,
    pub seed: u64,
    /// Swept parameter value, when the row belongs to a sweep.
    pub value: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub directed_correct: usize,
    pub directed_total: usize,
    pub edge_total: usize,
}

impl MetricsRow {
    pub fn new(method: &str, repetition: usize, d: usize, n_env: usize, seed: u64, value: Option<f64>, r: &EvalResult) -> Self {
        MetricsRow {
            method: method.to_string(),
            repetition,
            d,
            n_env,
            seed,
            value,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            directed_correct: r.directed_correct,
            directed_total: r.directed_total,
            edge_total: r.edge_total,
        }
    }
}

pub fn write_metrics_csv<W: std::io::Write>(rows: &[MetricsRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
