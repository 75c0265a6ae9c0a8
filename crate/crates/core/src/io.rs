//! Multi-environment datasets as one CSV file per environment.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariance::EnvSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("no dataset files given")]
    NoFiles,
    #[error("{path}: file is empty")]
    Empty { path: PathBuf },
    #[error("{path}: header row has no columns")]
    NoColumns { path: PathBuf },
    #[error("header of {other} differs from {first}")]
    HeaderMismatch { first: PathBuf, other: PathBuf },
    #[error("{path}: line {line}, column `{column}`: `{value}` is not a finite number")]
    NonNumeric { path: PathBuf, line: u64, column: String, value: String },
    #[error("{path}: line {line} has {got} fields, expected {expected}")]
    Ragged { path: PathBuf, line: u64, got: usize, expected: usize },
    #[error("{path}: needs at least 2 data rows, found {rows}")]
    TooFewRows { path: PathBuf, rows: usize },
    #[error("environment `{env}`, row {row}, column `{column}`: log of non-positive value {value}")]
    NonPositive { env: String, row: usize, column: String, value: f64 },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Ordered environments sharing one variable schema.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiEnvDataset {
    schema: Vec<String>,
    environments: Vec<EnvSample>,
}

impl MultiEnvDataset {
    pub fn new(schema: Vec<String>, environments: Vec<EnvSample>) -> Result<Self, IoError> {
        if environments.is_empty() {
            return Err(IoError::Invalid("at least one environment is required".into()));
        }
        if schema.is_empty() {
            return Err(IoError::Invalid("schema has no variables".into()));
        }
        let mut ids = BTreeSet::new();
        for env in &environments {
            if env.d() != schema.len() {
                return Err(IoError::Invalid(format!(
                    "environment `{}` has {} columns, schema has {}",
                    env.id(),
                    env.d(),
                    schema.len()
                )));
            }
            if !ids.insert(env.id()) {
                return Err(IoError::Invalid(format!("duplicate environment id `{}`", env.id())));
            }
        }
        Ok(MultiEnvDataset { schema, environments })
    }

    /// Default schema `X0, X1, ...`.
    pub fn unnamed(environments: Vec<EnvSample>) -> Result<Self, IoError> {
        let d = environments.first().map_or(0, EnvSample::d);
        Self::new((0..d).map(|j| format!("X{j}")).collect(), environments)
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn num_vars(&self) -> usize {
        self.schema.len()
    }

    pub fn num_envs(&self) -> usize {
        self.environments.len()
    }

    pub fn environments(&self) -> &[EnvSample] {
        &self.environments
    }

    pub fn total_rows(&self) -> usize {
        self.environments.iter().map(EnvSample::n).sum()
    }

    /// Keeps the first `rows` rows of every environment.
    pub fn truncated(&self, rows: usize) -> MultiEnvDataset {
        MultiEnvDataset {
            schema: self.schema.clone(),
            environments: self.environments.iter().map(|e| e.truncated(rows)).collect(),
        }
    }

    /// Row-concatenated data with the environment index appended as a last
    /// column.
    pub fn pooled_with_env_column(&self) -> DMatrix<f64> {
        let d = self.num_vars();
        let n = self.total_rows();
        let mut out = DMatrix::zeros(n, d + 1);
        let mut r0 = 0;
        for (e, env) in self.environments.iter().enumerate() {
            out.view_mut((r0, 0), (env.n(), d)).copy_from(env.data());
            out.view_mut((r0, d), (env.n(), 1)).fill(e as f64);
            r0 += env.n();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadOptions {
    /// Keep at most this many rows per environment.
    pub max_rows: Option<usize>,
}

/// One environment per file, in argument order. Environment ids are the
/// file stems.
pub fn load_multi_env<P: AsRef<Path> + Sync>(paths: &[P], opts: LoadOptions) -> Result<MultiEnvDataset, IoError> {
    if paths.is_empty() {
        return Err(IoError::NoFiles);
    }
    let loaded: Vec<(Vec<String>, EnvSample)> =
        paths.par_iter().map(|p| read_env_csv(p.as_ref(), opts)).collect::<Result<_, _>>()?;
    let first = &loaded[0].0;
    for (k, (header, _)) in loaded.iter().enumerate().skip(1) {
        if header != first {
            return Err(IoError::HeaderMismatch {
                first: paths[0].as_ref().to_path_buf(),
                other: paths[k].as_ref().to_path_buf(),
            });
        }
    }
    let schema = first.clone();
    MultiEnvDataset::new(schema, loaded.into_iter().map(|(_, e)| e).collect())
}

fn read_env_csv(path: &Path, opts: LoadOptions) -> Result<(Vec<String>, EnvSample), IoError> {
    let io_err = |e: &dyn std::fmt::Display| IoError::Io { path: path.to_path_buf(), message: e.to_string() };
    let text = fs::read_to_string(path).map_err(|e| io_err(&e))?;
    if text.trim().is_empty() {
        return Err(IoError::Empty { path: path.to_path_buf() });
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(|e| io_err(&e))?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IoError::NoColumns { path: path.to_path_buf() });
    }
    let d = header.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        if opts.max_rows.is_some_and(|m| rows >= m) {
            break;
        }
        let record = record.map_err(|e| io_err(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d {
            return Err(IoError::Ragged { path: path.to_path_buf(), line, got: record.len(), expected: d });
        }
        for (c, cell) in record.iter().enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(IoError::NonNumeric {
                        path: path.to_path_buf(),
                        line,
                        column: header[c].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(IoError::TooFewRows { path: path.to_path_buf(), rows });
    }
    let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    let data = DMatrix::from_row_slice(rows, d, &values);
    let env = EnvSample::new(id, data).map_err(|e| IoError::Invalid(e.to_string()))?;
    Ok((header, env))
}

/// Writes one environment with the shortest round-trip decimal form of
/// every value.
pub fn write_env_csv(path: &Path, schema: &[String], env: &EnvSample) -> Result<(), IoError> {
    let io_err = |e: &dyn std::fmt::Display| IoError::Io { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(&e))?;
    w.write_record(schema).map_err(|e| io_err(&e))?;
    let data = env.data();
    for r in 0..env.n() {
        w.write_record((0..env.d()).map(|c| format!("{}", data[(r, c)]))).map_err(|e| io_err(&e))?;
    }
    w.flush().map_err(|e| io_err(&e))
}

/// Writes `<dir>/<id>.csv` per environment and returns the paths in order.
pub fn save_multi_env(data: &MultiEnvDataset, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::Io { path: dir.to_path_buf(), message: e.to_string() })?;
    data.environments
        .iter()
        .map(|env| {
            let path = dir.join(format!("{}.csv", env.id()));
            write_env_csv(&path, &data.schema, env)?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    /// Natural logarithm; every entry must be positive.
    Log,
}

pub fn preprocess(data: &MultiEnvDataset, transform: Transform) -> Result<MultiEnvDataset, IoError> {
    match transform {
        Transform::None => Ok(data.clone()),
        Transform::Log => {
            for env in &data.environments {
                let m = env.data();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let v = m[(r, c)];
                        if v <= 0.0 {
                            return Err(IoError::NonPositive {
                                env: env.id().to_string(),
                                row: r,
                                column: data.schema[c].clone(),
                                value: v,
                            });
                        }
                    }
                }
            }
            Ok(MultiEnvDataset {
                schema: data.schema.clone(),
                environments: data.environments.iter().map(|e| e.map(f64::ln)).collect(),
            })
        }
    }
}
