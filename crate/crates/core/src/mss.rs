//! Mechanism Shift Score: oracle and empirical scoring of candidate DAGs,
//! argmin selection, and identifiability bound calculators.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AugmentedDag, Cpdag, Dag, GraphError, Vertex};
use crate::invariance::{InvarianceError, InvarianceQuery, InvarianceTest, ShiftTester, DatasetTester};
use crate::io::MultiEnvDataset;
use crate::mec::{cpdag_of, MecError};

/// Tolerance used to group soft scores into the argmin set.
pub const SOFT_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MssError {
    #[error("expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no candidate DAGs to score")]
    EmptyGraphSet,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("environment {env}: {size} shifted variables violates 0 < |I| < {d}")]
    NotSparse { env: usize, size: usize, d: usize },
    #[error("bivariate identification needs 2 variables, got {0}")]
    NotBivariate(usize),
    #[error("test failed for X{target} given {parents:?} on environments ({env_a}, {env_b}): {source}")]
    Test { target: Vertex, parents: Vec<Vertex>, env_a: usize, env_b: usize, source: InvarianceError },
    #[error("every candidate DAG has a failed test")]
    NothingScored,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mec(#[from] MecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftSemantics {
    /// Intervened mechanisms are redrawn per environment; any target in
    /// either environment differs.
    #[default]
    Resample,
    /// A mechanism is either baseline or one fixed alternative.
    Toggle,
}

/// Ground-truth DAG plus the shift-target set of every environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDocument", into = "ScenarioDocument")]
pub struct InterventionScenario {
    true_dag: Dag,
    targets: Vec<BTreeSet<Vertex>>,
    semantics: ShiftSemantics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    true_dag: Dag,
    targets: Vec<BTreeSet<Vertex>>,
    #[serde(default)]
    semantics: ShiftSemantics,
}

impl TryFrom<ScenarioDocument> for InterventionScenario {
    type Error = MssError;

    fn try_from(doc: ScenarioDocument) -> Result<Self, MssError> {
        InterventionScenario::new(doc.true_dag, doc.targets, doc.semantics)
    }
}

impl From<InterventionScenario> for ScenarioDocument {
    fn from(s: InterventionScenario) -> Self {
        ScenarioDocument { true_dag: s.true_dag, targets: s.targets, semantics: s.semantics }
    }
}

impl InterventionScenario {
    pub fn new(
        true_dag: Dag,
        targets: Vec<BTreeSet<Vertex>>,
        semantics: ShiftSemantics,
    ) -> Result<Self, MssError> {
        let d = true_dag.num_vars();
        if targets.is_empty() {
            return Err(MssError::InvalidScenario("at least one environment is required".into()));
        }
        for (e, t) in targets.iter().enumerate() {
            if let Some(&v) = t.iter().find(|&&v| v >= d) {
                return Err(MssError::InvalidScenario(format!("environment {e} targets vertex {v}, but d = {d}")));
            }
        }
        Ok(InterventionScenario { true_dag, targets, semantics })
    }

    pub fn true_dag(&self) -> &Dag {
        &self.true_dag
    }

    pub fn targets(&self) -> &[BTreeSet<Vertex>] {
        &self.targets
    }

    pub fn semantics(&self) -> ShiftSemantics {
        self.semantics
    }

    pub fn num_vars(&self) -> usize {
        self.true_dag.num_vars()
    }

    pub fn num_envs(&self) -> usize {
        self.targets.len()
    }

    /// Checks `0 < |I^e| < d` for every environment.
    pub fn check_sparse(&self) -> Result<(), MssError> {
        let d = self.num_vars();
        for (env, t) in self.targets.iter().enumerate() {
            if t.is_empty() || t.len() >= d {
                return Err(MssError::NotSparse { env, size: t.len(), d });
            }
        }
        Ok(())
    }

    /// Variables whose mechanism differs between environments `e` and `f`.
    pub fn pairwise_shift_set(&self, e: usize, f: usize) -> Result<BTreeSet<Vertex>, MssError> {
        let n = self.num_envs();
        if e == f || e >= n || f >= n {
            return Err(MssError::InvalidScenario(format!("environment pair ({e}, {f}) with {n} environments")));
        }
        let (a, b) = (&self.targets[e], &self.targets[f]);
        Ok(match self.semantics {
            ShiftSemantics::Resample => a.union(b).copied().collect(),
            ShiftSemantics::Toggle => a.symmetric_difference(b).copied().collect(),
        })
    }

    pub fn pairwise_augmented(&self, e: usize, f: usize) -> Result<AugmentedDag, MssError> {
        Ok(AugmentedDag::new(self.true_dag.clone(), self.pairwise_shift_set(e, f)?)?)
    }

    /// Augmented DAG whose environment children shift in at least one pair.
    pub fn union_augmented(&self) -> Result<AugmentedDag, MssError> {
        let mut all = BTreeSet::new();
        for (e, f) in env_pairs(self.num_envs()) {
            all.extend(self.pairwise_shift_set(e, f)?);
        }
        Ok(AugmentedDag::new(self.true_dag.clone(), all)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, MssError> {
        serde_json::from_str(text).map_err(|e| MssError::InvalidScenario(e.to_string()))
    }
}

/// All pairs `(e, f)` with `e < f`.
pub fn env_pairs(n_env: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_env).flat_map(move |e| (e + 1..n_env).map(move |f| (e, f)))
}

fn check_dims(g: &Dag, d: usize) -> Result<(), MssError> {
    if g.num_vars() != d {
        return Err(MssError::DimensionMismatch { expected: d, got: g.num_vars() });
    }
    Ok(())
}

/// Number of environment pairs in which `X_j` is d-connected to `E` given
/// the parents of `j` in `g`, in the pairwise augmented true DAG.
pub fn oracle_mss_j(g: &Dag, scenario: &InterventionScenario, j: Vertex) -> Result<usize, MssError> {
    check_dims(g, scenario.num_vars())?;
    crate::graph::check_vertex(j, g.num_vars())?;
    let mut count = 0;
    for (e, f) in env_pairs(scenario.num_envs()) {
        let aug = scenario.pairwise_augmented(e, f)?;
        if !aug.d_separated(j, aug.env(), g.parents(j))? {
            count += 1;
        }
    }
    Ok(count)
}

pub fn oracle_mss(g: &Dag, scenario: &InterventionScenario) -> Result<usize, MssError> {
    (0..g.num_vars()).map(|j| oracle_mss_j(g, scenario, j)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    #[default]
    Hard,
    Soft,
}

impl std::str::FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hard" => Ok(ScoreMode::Hard),
            "soft" => Ok(ScoreMode::Soft),
            other => Err(format!("unknown score mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    pub alpha: f64,
    pub mode: ScoreMode,
    pub use_cache: bool,
    /// Keep scoring when a test fails; DAGs that need the failed cell are
    /// left out of the argmin.
    pub best_effort: bool,
}

impl ScoreOptions {
    /// Bonferroni level `0.05 / d`, hard mode, caching on.
    pub fn new(d: usize) -> Self {
        ScoreOptions { alpha: default_alpha(d), mode: ScoreMode::Hard, use_cache: true, best_effort: false }
    }

    pub fn soft(mut self) -> Self {
        self.mode = ScoreMode::Soft;
        self
    }
}

pub fn default_alpha(d: usize) -> f64 {
    0.05 / d.max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagScore {
    pub dag: Dag,
    pub hard: usize,
    pub soft: f64,
    pub per_variable_hard: Vec<usize>,
    pub per_variable_soft: Vec<f64>,
    pub in_argmin: bool,
    /// False when some test needed by this DAG failed.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CacheStats {
    /// Distinct (mechanism, environment pair) cells.
    pub unique_cells: usize,
    /// Cell lookups made while summing scores.
    pub lookups: usize,
    /// Test evaluations actually run.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub target: Vertex,
    pub parents: Vec<Vertex>,
    pub env_a: usize,
    pub env_b: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub num_vars: usize,
    pub num_envs: usize,
    pub alpha: f64,
    pub mode: ScoreMode,
    pub dags: Vec<DagScore>,
    pub argmin: Vec<usize>,
    pub summary_cpdag: Cpdag,
    pub cache: CacheStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<CellFailure>,
}

impl ScoreReport {
    pub fn unique_argmin(&self) -> Option<&Dag> {
        match self.argmin.as_slice() {
            [i] => Some(&self.dags[*i].dag),
            _ => None,
        }
    }

    pub fn argmin_dags(&self) -> Vec<Dag> {
        self.argmin.iter().map(|&i| self.dags[i].dag.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Equality ignoring cache counters.
    pub fn same_scores(&self, other: &ScoreReport) -> bool {
        let strip = |r: &ScoreReport| ScoreReport { cache: CacheStats::default(), ..r.clone() };
        strip(self) == strip(other)
    }
}

type MechKey = (Vertex, Vec<Vertex>);

/// Scores every DAG in `g_set` against pairwise shift verdicts from `tester`.
pub fn score_dags(g_set: &[Dag], tester: &dyn ShiftTester, opts: ScoreOptions) -> Result<ScoreReport, MssError> {
    let first = g_set.first().ok_or(MssError::EmptyGraphSet)?;
    let d = tester.num_vars();
    for g in g_set {
        check_dims(g, d)?;
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(MssError::InvalidAlpha(opts.alpha));
    }
    let pairs: Vec<(usize, usize)> = env_pairs(tester.num_envs()).collect();

    let run = |(j, parents): &MechKey, (e, f): (usize, usize)| -> Result<f64, MssError> {
        let q = InvarianceQuery::new(*j, parents.iter().copied(), e, f).map_err(|source| MssError::Test {
            target: *j,
            parents: parents.clone(),
            env_a: e,
            env_b: f,
            source,
        })?;
        tester.test_query(&q).map(|r| r.p_value).map_err(|source| MssError::Test {
            target: *j,
            parents: parents.clone(),
            env_a: e,
            env_b: f,
            source,
        })
    };

    let lookups = g_set.len() * d * pairs.len();
    let mut failures = Vec::new();
    let mut fail = |err: MssError| -> Result<(), MssError> {
        match err {
            MssError::Test { target, parents, env_a, env_b, source } if opts.best_effort => {
                failures.push(CellFailure { target, parents, env_a, env_b, message: source.to_string() });
                Ok(())
            }
            other => Err(other),
        }
    };

    let keys: BTreeSet<MechKey> = g_set
        .iter()
        .flat_map(|g| (0..d).map(|j| (j, g.parents(j).to_vec())))
        .collect();
    let unique_cells = keys.len() * pairs.len();

    // p-values per DAG, per variable, per pair; None marks a failed cell.
    let mut table: Vec<Vec<Vec<Option<f64>>>> = Vec::with_capacity(g_set.len());
    let evaluations;
    if opts.use_cache {
        let cells: Vec<(&MechKey, (usize, usize))> =
            keys.iter().flat_map(|k| pairs.iter().map(move |&p| (k, p))).collect();
        let results: Vec<Result<f64, MssError>> = cells.par_iter().map(|(k, p)| run(k, *p)).collect();
        evaluations = cells.len();
        let mut cache: BTreeMap<(&MechKey, (usize, usize)), Option<f64>> = BTreeMap::new();
        for (cell, res) in cells.into_iter().zip(results) {
            let value = match res {
                Ok(p) => Some(p),
                Err(e) => {
                    fail(e)?;
                    None
                }
            };
            cache.insert(cell, value);
        }
        for g in g_set {
            table.push(
                (0..d)
                    .map(|j| {
                        let key = (j, g.parents(j).to_vec());
                        pairs.iter().map(|&p| cache[&(&key, p)]).collect()
                    })
                    .collect(),
            );
        }
    } else {
        evaluations = lookups;
        for g in g_set {
            let mut per_var = Vec::with_capacity(d);
            for j in 0..d {
                let key = (j, g.parents(j).to_vec());
                let results: Vec<Result<f64, MssError>> = pairs.par_iter().map(|&p| run(&key, p)).collect();
                let mut row = Vec::with_capacity(pairs.len());
                for res in results {
                    row.push(match res {
                        Ok(p) => Some(p),
                        Err(e) => {
                            fail(e)?;
                            None
                        }
                    });
                }
                per_var.push(row);
            }
            table.push(per_var);
        }
        failures.sort_by(|a, b| (a.target, &a.parents, a.env_a, a.env_b).cmp(&(b.target, &b.parents, b.env_a, b.env_b)));
        failures.dedup();
    }

    let mut dags: Vec<DagScore> = g_set
        .iter()
        .zip(&table)
        .map(|(g, rows)| {
            let per_variable_hard: Vec<usize> =
                rows.iter().map(|r| r.iter().flatten().filter(|&&p| p < opts.alpha).count()).collect();
            let per_variable_soft: Vec<f64> = rows.iter().map(|r| r.iter().flatten().map(|p| 1.0 - p).sum()).collect();
            DagScore {
                dag: g.clone(),
                hard: per_variable_hard.iter().sum(),
                soft: per_variable_soft.iter().sum(),
                per_variable_hard,
                per_variable_soft,
                in_argmin: false,
                complete: rows.iter().flatten().all(Option::is_some),
            }
        })
        .collect();

    let argmin = argmin_of(&dags, opts.mode).ok_or(MssError::NothingScored)?;
    for &i in &argmin {
        dags[i].in_argmin = true;
    }
    let members: Vec<Dag> = argmin.iter().map(|&i| dags[i].dag.clone()).collect();
    let mut summary_cpdag = cpdag_of(&members)?;
    if let Some(names) = first.names() {
        summary_cpdag = summary_cpdag.with_names(names.to_vec())?;
    }
    Ok(ScoreReport {
        num_vars: d,
        num_envs: tester.num_envs(),
        alpha: opts.alpha,
        mode: opts.mode,
        dags,
        argmin,
        summary_cpdag,
        cache: CacheStats { unique_cells, lookups, evaluations },
        failures,
    })
}

fn argmin_of(dags: &[DagScore], mode: ScoreMode) -> Option<Vec<usize>> {
    let scored = dags.iter().enumerate().filter(|(_, s)| s.complete);
    match mode {
        ScoreMode::Hard => {
            let best = scored.clone().map(|(_, s)| s.hard).min()?;
            Some(scored.filter(|(_, s)| s.hard == best).map(|(i, _)| i).collect())
        }
        ScoreMode::Soft => {
            let best = scored.clone().map(|(_, s)| s.soft).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))?;
            Some(scored.filter(|(_, s)| s.soft - best <= SOFT_TIE_TOLERANCE).map(|(i, _)| i).collect())
        }
    }
}

/// Scores candidate DAGs on data with a two-environment invariance test.
pub fn empirical_mss(
    g_set: &[Dag],
    data: &MultiEnvDataset,
    test: &dyn InvarianceTest,
    opts: ScoreOptions,
) -> Result<ScoreReport, MssError> {
    score_dags(g_set, &DatasetTester::new(data, test), opts)
}

/// Oracle report: hard scores from d-separation in the pairwise augmented
/// true DAGs.
pub fn oracle_report(g_set: &[Dag], scenario: &InterventionScenario) -> Result<ScoreReport, MssError> {
    let oracle = crate::invariance::OracleInvariance::new(scenario.clone());
    score_dags(g_set, &oracle, ScoreOptions::new(scenario.num_vars()))
}

/// `max(0, 1 - (1 - (1 - rho_ub_j) * rho_lb_min)^floor(n_env / 2))`.
pub fn lemma_parent_bound(n_env: usize, rho_lb_min: f64, rho_ub_j: f64) -> f64 {
    let base = 1.0 - (1.0 - rho_ub_j) * rho_lb_min;
    (1.0 - base.powi((n_env / 2) as i32)).max(0.0)
}

/// `max(0, 1 - mec_size * (1 - (1 - rho_ub_min) * rho_lb_min)^floor(n_env / 2))`.
pub fn theorem_graph_bound(n_env: usize, mec_size: usize, rho_lb_min: f64, rho_ub_min: f64) -> f64 {
    let base = 1.0 - (1.0 - rho_ub_min) * rho_lb_min;
    (1.0 - mec_size as f64 * base.powi((n_env / 2) as i32)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BivariateVerdict {
    /// X0 -> X1.
    Forward,
    /// X1 -> X0.
    Backward,
    Undecided,
}

fn bivariate_from_report(report: &ScoreReport) -> BivariateVerdict {
    match report.unique_argmin().map(|g| g.edges()) {
        Some([(0, 1)]) => BivariateVerdict::Forward,
        Some([(1, 0)]) => BivariateVerdict::Backward,
        _ => BivariateVerdict::Undecided,
    }
}

fn both_orientations() -> Vec<Dag> {
    vec![Dag::new(2, [(0, 1)]).expect("valid"), Dag::new(2, [(1, 0)]).expect("valid")]
}

/// Orients a bivariate pair by the strict minimizer of the shift score.
pub fn bivariate_identify(tester: &dyn ShiftTester, opts: ScoreOptions) -> Result<BivariateVerdict, MssError> {
    if tester.num_vars() != 2 {
        return Err(MssError::NotBivariate(tester.num_vars()));
    }
    Ok(bivariate_from_report(&score_dags(&both_orientations(), tester, opts)?))
}

pub fn bivariate_identify_oracle(scenario: &InterventionScenario) -> Result<BivariateVerdict, MssError> {
    if scenario.num_vars() != 2 {
        return Err(MssError::NotBivariate(scenario.num_vars()));
    }
    Ok(bivariate_from_report(&oracle_report(&both_orientations(), scenario)?))
}
