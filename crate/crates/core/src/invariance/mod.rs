//! Tests for "the conditional of X_j given Z is the same in environments e
//! and e'".
//!
//! Every data-driven test works on the stacked pair of environments with a
//! 0/1 indicator column and asks whether X_j is independent of that
//! indicator given Z. With Z empty this is a two-sample test on X_j.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::MultiEnvDataset;

pub mod ci;
pub mod fisher_z;
pub mod kci;
pub mod kernel;
pub mod linear;
pub mod oracle;
pub mod residual;
pub mod stats;

pub use fisher_z::FisherZInvariance;
pub use kci::{KciInvariance, KernelConfig, NullMethod};
pub use linear::LinearParamInvariance;
pub use oracle::OracleInvariance;
pub use residual::{Regressor, RegressionResidualInvariance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvarianceError {
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("pooled sample size {got} exceeds configured maximum {max}")]
    TooManySamples { max: usize, got: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("environment sample: {0}")]
    InvalidSample(String),
    #[error("unknown test `{0}`")]
    UnknownTest(String),
}

/// One environment's data: `n_e` rows by `d` columns, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSample {
    id: String,
    data: DMatrix<f64>,
}

impl EnvSample {
    pub fn new(id: impl Into<String>, data: DMatrix<f64>) -> Result<Self, InvarianceError> {
        if data.nrows() < 2 {
            return Err(InvarianceError::InvalidSample(format!("need at least 2 rows, got {}", data.nrows())));
        }
        if data.ncols() == 0 {
            return Err(InvarianceError::InvalidSample("no columns".into()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % data.nrows(), pos / data.nrows());
            return Err(InvarianceError::InvalidSample(format!("non-finite value at row {r}, column {c}")));
        }
        Ok(EnvSample { id: id.into(), data })
    }

    /// Builds from row-major values.
    pub fn from_rows(id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self, InvarianceError> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(InvarianceError::InvalidSample("ragged rows".into()));
        }
        Self::new(id, DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> EnvSample {
        EnvSample { id: self.id.clone(), data: self.data.map(f) }
    }

    pub(crate) fn truncated(&self, rows: usize) -> EnvSample {
        let rows = rows.min(self.n());
        EnvSample { id: self.id.clone(), data: self.data.rows(0, rows).into_owned() }
    }
}

/// Target `j`, conditioning set `Z`, environment pair `(e, e')` with `e < e'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvarianceQuery {
    pub target: usize,
    pub cond: Vec<usize>,
    pub env_a: usize,
    pub env_b: usize,
}

impl InvarianceQuery {
    pub fn new(target: usize, cond: impl IntoIterator<Item = usize>, env_a: usize, env_b: usize) -> Result<Self, InvarianceError> {
        let mut cond: Vec<usize> = cond.into_iter().collect();
        cond.sort_unstable();
        cond.dedup();
        if cond.contains(&target) {
            return Err(InvarianceError::InvalidQuery(format!("target {target} is in the conditioning set")));
        }
        if env_a == env_b {
            return Err(InvarianceError::InvalidQuery(format!("environment pair ({env_a}, {env_b}) is not a pair")));
        }
        let (env_a, env_b) = (env_a.min(env_b), env_a.max(env_b));
        Ok(InvarianceQuery { target, cond, env_a, env_b })
    }

    pub(crate) fn check_dims(&self, d: usize) -> Result<(), InvarianceError> {
        if self.target >= d || self.cond.iter().any(|&c| c >= d) {
            return Err(InvarianceError::InvalidQuery(format!("variable index out of range for d = {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub p_value: f64,
    pub statistic: f64,
    pub test_name: String,
}

impl TestResult {
    pub(crate) fn new(p_value: f64, statistic: f64, test_name: &str) -> Self {
        let p_value = if p_value.is_nan() { 1.0 } else { p_value.clamp(0.0, 1.0) };
        TestResult { p_value, statistic, test_name: test_name.to_string() }
    }
}

/// A two-environment equality-of-conditionals test.
pub trait InvarianceTest: Sync {
    fn name(&self) -> &'static str;
    fn test(&self, a: &EnvSample, b: &EnvSample, q: &InvarianceQuery) -> Result<TestResult, InvarianceError>;
}

/// Source of pairwise shift verdicts for the scorer: a test bound to data,
/// or a ground-truth oracle.
pub trait ShiftTester: Sync {
    fn num_vars(&self) -> usize;
    fn num_envs(&self) -> usize;
    fn test_query(&self, q: &InvarianceQuery) -> Result<TestResult, InvarianceError>;
}

/// A test bound to a dataset.
pub struct DatasetTester<'a> {
    data: &'a MultiEnvDataset,
    test: &'a dyn InvarianceTest,
}

impl<'a> DatasetTester<'a> {
    pub fn new(data: &'a MultiEnvDataset, test: &'a dyn InvarianceTest) -> Self {
        DatasetTester { data, test }
    }
}

impl ShiftTester for DatasetTester<'_> {
    fn num_vars(&self) -> usize {
        self.data.num_vars()
    }

    fn num_envs(&self) -> usize {
        self.data.num_envs()
    }

    fn test_query(&self, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        let envs = self.data.environments();
        let (a, b) = envs
            .get(q.env_a)
            .zip(envs.get(q.env_b))
            .ok_or_else(|| InvarianceError::InvalidQuery(format!("environment pair ({}, {}) out of range", q.env_a, q.env_b)))?;
        self.test.test(a, b, q)
    }
}

/// Columns of the stacked pair: target, indicator and conditioning variables.
pub(crate) struct StackedPair {
    pub target: Vec<f64>,
    pub indicator: Vec<f64>,
    pub cond: Vec<Vec<f64>>,
    pub n_a: usize,
    pub n_b: usize,
}

impl StackedPair {
    pub fn new(a: &EnvSample, b: &EnvSample, q: &InvarianceQuery) -> Result<Self, InvarianceError> {
        if a.d() != b.d() {
            return Err(InvarianceError::InvalidSample(format!("column counts differ: {} vs {}", a.d(), b.d())));
        }
        q.check_dims(a.d())?;
        let stack = |j: usize| -> Vec<f64> { a.column(j).iter().chain(b.column(j)).copied().collect() };
        let indicator = std::iter::repeat_n(0.0, a.n()).chain(std::iter::repeat_n(1.0, b.n())).collect();
        Ok(StackedPair {
            target: stack(q.target),
            indicator,
            cond: q.cond.iter().map(|&c| stack(c)).collect(),
            n_a: a.n(),
            n_b: b.n(),
        })
    }

    pub fn n(&self) -> usize {
        self.n_a + self.n_b
    }
}

/// Test selection by name, as used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Oracle,
    FisherZ,
    Linear,
    Kci,
    RegressionResidual,
}

impl std::str::FromStr for TestKind {
    type Err = InvarianceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(TestKind::Oracle),
            "fisher_z" => Ok(TestKind::FisherZ),
            "linear" => Ok(TestKind::Linear),
            "kci" => Ok(TestKind::Kci),
            "regression_residual" => Ok(TestKind::RegressionResidual),
            other => Err(InvarianceError::UnknownTest(other.to_string())),
        }
    }
}
