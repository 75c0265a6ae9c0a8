//! Random DAGs, per-environment mechanisms with sparse shifts, and ancestral
//! sampling of additive nonlinear models
//! `X_j = sum_i b_ji f_ji(X_i) + sigma_j eps_j`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, GraphError, Vertex};
use crate::invariance::EnvSample;
use crate::io::MultiEnvDataset;
use crate::mss::{InterventionScenario, MssError, ShiftSemantics};

/// Attempts per row before non-finite values become an error.
pub const ROW_RETRY_LIMIT: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("config field `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("mechanism for X{var} has {coefficients} coefficients for {parents} parents")]
    SpecMismatch { var: Vertex, coefficients: usize, parents: usize },
    #[error("non-finite values in row {row} after {ROW_RETRY_LIMIT} attempts")]
    NonFinite { row: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scenario(#[from] MssError),
    #[error("{0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Square,
    Cube,
    Tanh,
    Sinc,
}

impl Nonlinearity {
    pub const ALL: [Nonlinearity; 4] = [Nonlinearity::Square, Nonlinearity::Cube, Nonlinearity::Tanh, Nonlinearity::Sinc];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Square => x * x,
            Nonlinearity::Cube => x * x * x,
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Sinc => {
                if x == 0.0 {
                    1.0
                } else {
                    x.sin() / x
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// `U(1, 3)`, or `U(-1, 1)` when centered.
    Uniform,
}

/// Noise family choice for freshly drawn mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChoice {
    /// Fair coin between the two families.
    #[default]
    Coin,
    Gaussian,
    Uniform,
}

/// Mechanism of one variable; coefficients follow the sorted parent list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub coefficients: Vec<f64>,
    pub nonlinearities: Vec<Nonlinearity>,
    pub sigma: f64,
    pub noise: NoiseFamily,
}

/// All mechanisms of one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub mechanisms: Vec<Mechanism>,
    #[serde(default)]
    pub centered_uniform: bool,
}

impl MechanismSpec {
    pub fn check(&self, dag: &Dag) -> Result<(), SimError> {
        if self.mechanisms.len() != dag.num_vars() {
            return Err(SimError::Config {
                field: "mechanisms",
                message: format!("{} mechanisms for {} variables", self.mechanisms.len(), dag.num_vars()),
            });
        }
        for (j, m) in self.mechanisms.iter().enumerate() {
            let p = dag.parents(j).len();
            if m.coefficients.len() != p || m.nonlinearities.len() != p {
                return Err(SimError::SpecMismatch { var: j, coefficients: m.coefficients.len(), parents: p });
            }
            if !(m.sigma > 0.0) {
                return Err(SimError::Config { field: "sigma", message: format!("X{j} has sigma {}", m.sigma) });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum GraphModel {
    ErdosRenyi { density: f64 },
    Hub { attach: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftSpec {
    Count(usize),
    /// Rounded to the nearest count.
    Fraction(f64),
}

impl ShiftSpec {
    pub fn count(self, d: usize) -> usize {
        match self {
            ShiftSpec::Count(c) => c,
            ShiftSpec::Fraction(f) => (f * d as f64).round() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub d: usize,
    pub graph: GraphModel,
    pub n_env: usize,
    pub shifts: ShiftSpec,
    pub n_samples: usize,
    pub seed: u64,
    /// Require `0 < |I^e| < d`.
    pub sparse: bool,
    pub semantics: ShiftSemantics,
    pub centered_uniform: bool,
    pub noise: NoiseChoice,
    pub nonlinearities: Vec<Nonlinearity>,
    /// Resample the DAG until it has at least one edge.
    pub require_edges: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            d: 6,
            graph: GraphModel::ErdosRenyi { density: 0.3 },
            n_env: 5,
            shifts: ShiftSpec::Fraction(0.5),
            n_samples: 500,
            seed: 0,
            sparse: true,
            semantics: ShiftSemantics::Resample,
            centered_uniform: false,
            noise: NoiseChoice::Coin,
            nonlinearities: Nonlinearity::ALL.to_vec(),
            require_edges: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field, message: String| Err(SimError::Config { field, message });
        if self.d == 0 {
            return bad("d", "must be at least 1".into());
        }
        match self.graph {
            GraphModel::ErdosRenyi { density } if !(0.0..=1.0).contains(&density) => {
                return bad("graph.density", format!("{density} is outside [0, 1]"))
            }
            GraphModel::Hub { attach } if attach == 0 || attach >= self.d.max(2) => {
                return bad("graph.attach", format!("need 1 <= attach < d, got {attach}"))
            }
            _ => {}
        }
        if let ShiftSpec::Fraction(f) = self.shifts {
            if !(0.0..=1.0).contains(&f) {
                return bad("shifts.fraction", format!("{f} is outside [0, 1]"));
            }
        }
        let k = self.shifts.count(self.d);
        if k > self.d {
            return bad("shifts.count", format!("{k} exceeds d = {}", self.d));
        }
        if self.sparse && self.n_env > 0 && (k == 0 || k >= self.d) {
            return bad("shifts", format!("{k} shifts per environment is not sparse for d = {}", self.d));
        }
        if self.n_env == 0 {
            return bad("n_env", "must be at least 1".into());
        }
        if self.n_samples < 2 {
            return bad("n_samples", "must be at least 2".into());
        }
        if self.nonlinearities.is_empty() {
            return bad("nonlinearities", "list is empty".into());
        }
        if self.require_edges && (self.d < 2 || self.graph == (GraphModel::ErdosRenyi { density: 0.0 })) {
            return bad("require_edges", "the graph model cannot produce an edge".into());
        }
        Ok(())
    }
}

fn relabeled(d: usize, edges: Vec<(Vertex, Vertex)>, rng: &mut impl Rng) -> Dag {
    let mut perm: Vec<Vertex> = (0..d).collect();
    perm.shuffle(rng);
    Dag::new(d, edges.into_iter().map(|(i, j)| (perm[i], perm[j]))).expect("forward edges under a permutation stay acyclic")
}

/// Upper-triangular coin flips followed by a uniform relabeling.
pub fn sample_er_dag(d: usize, density: f64, rng: &mut impl Rng) -> Dag {
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                edges.push((i, j));
            }
        }
    }
    relabeled(d, edges, rng)
}

/// Preferential attachment: each new vertex receives edges from up to
/// `attach` earlier vertices drawn proportionally to their degree.
pub fn sample_hub_dag(d: usize, attach: usize, rng: &mut impl Rng) -> Dag {
    let mut degree = vec![0usize; d];
    let mut edges = Vec::new();
    for v in 1..d {
        let mut pool: Vec<Vertex> = (0..v).collect();
        for _ in 0..attach.min(v) {
            let total: usize = pool.iter().map(|&u| degree[u]).sum();
            let pick = if total == 0 {
                rng.random_range(0..pool.len())
            } else {
                let mut r = rng.random_range(0..total);
                pool.iter().position(|&u| {
                    if r < degree[u] {
                        true
                    } else {
                        r -= degree[u];
                        false
                    }
                })
                .expect("r < total")
            };
            let u = pool.swap_remove(pick);
            edges.push((u, v));
        }
        for &(u, w) in edges.iter().filter(|e| e.1 == v) {
            degree[u] += 1;
            degree[w] += 1;
        }
    }
    relabeled(d, edges, rng)
}

pub fn sample_dag(cfg: &SimConfig, rng: &mut impl Rng) -> Dag {
    loop {
        let g = match cfg.graph {
            GraphModel::ErdosRenyi { density } => sample_er_dag(cfg.d, density, rng),
            GraphModel::Hub { attach } => sample_hub_dag(cfg.d, attach, rng),
        };
        if !cfg.require_edges || g.num_edges() > 0 {
            return g;
        }
    }
}

/// `n_env` target sets of size `count`, uniform without replacement.
pub fn sample_targets(d: usize, n_env: usize, count: usize, rng: &mut impl Rng) -> Vec<BTreeSet<Vertex>> {
    (0..n_env)
        .map(|_| rand::seq::index::sample(rng, d, count.min(d)).into_iter().collect())
        .collect()
}

fn draw_mechanism(parents: usize, sigma: f64, cfg: &SimConfig, rng: &mut impl Rng) -> Mechanism {
    let coef = Uniform::new(0.5, 2.5).expect("valid range");
    let coefficients = (0..parents).map(|_| coef.sample(rng)).collect();
    let nonlinearities = (0..parents).map(|_| *cfg.nonlinearities.choose(rng).expect("validated nonempty")).collect();
    let noise = match cfg.noise {
        NoiseChoice::Coin => {
            if rng.random_bool(0.5) {
                NoiseFamily::Gaussian
            } else {
                NoiseFamily::Uniform
            }
        }
        NoiseChoice::Gaussian => NoiseFamily::Gaussian,
        NoiseChoice::Uniform => NoiseFamily::Uniform,
    };
    Mechanism { coefficients, nonlinearities, sigma, noise }
}

/// Baseline mechanisms with unit noise scale; each environment copies the
/// baseline and redraws its shifted mechanisms with `sigma ~ U(1, 3)`.
pub fn sample_scenario(cfg: &SimConfig, rng: &mut impl Rng) -> Result<(InterventionScenario, Vec<MechanismSpec>), SimError> {
    cfg.validate()?;
    let dag = sample_dag(cfg, rng);
    scenario_on(cfg, dag, rng)
}

fn scenario_on(cfg: &SimConfig, dag: Dag, rng: &mut impl Rng) -> Result<(InterventionScenario, Vec<MechanismSpec>), SimError> {
    let d = cfg.d;
    let baseline: Vec<Mechanism> = (0..d).map(|j| draw_mechanism(dag.parents(j).len(), 1.0, cfg, rng)).collect();
    let targets = sample_targets(d, cfg.n_env, cfg.shifts.count(d), rng);
    let sigma = Uniform::new(1.0, 3.0).expect("valid range");
    let specs = targets
        .iter()
        .map(|t| {
            let mut mechanisms = baseline.clone();
            for &j in t {
                let s = sigma.sample(rng);
                mechanisms[j] = draw_mechanism(dag.parents(j).len(), s, cfg, rng);
            }
            MechanismSpec { mechanisms, centered_uniform: cfg.centered_uniform }
        })
        .collect();
    let scenario = InterventionScenario::new(dag, targets, cfg.semantics)?;
    Ok((scenario, specs))
}

/// Ancestral sampling of `n` rows.
pub fn sample_data(spec: &MechanismSpec, dag: &Dag, n: usize, id: &str, rng: &mut impl Rng) -> Result<EnvSample, SimError> {
    spec.check(dag)?;
    let order = dag.topological_order()?;
    let d = dag.num_vars();
    let (lo, hi) = if spec.centered_uniform { (-1.0, 1.0) } else { (1.0, 3.0) };
    let unif = Uniform::new(lo, hi).expect("valid range");
    let mut data = DMatrix::zeros(n, d);
    let mut row = vec![0.0; d];
    for r in 0..n {
        let mut attempt = 0;
        loop {
            for &j in &order {
                let m = &spec.mechanisms[j];
                let eps: f64 = match m.noise {
                    NoiseFamily::Gaussian => StandardNormal.sample(rng),
                    NoiseFamily::Uniform => unif.sample(rng),
                };
                let signal: f64 = dag
                    .parents(j)
                    .iter()
                    .zip(m.coefficients.iter().zip(&m.nonlinearities))
                    .map(|(&i, (&b, f))| b * f.apply(row[i]))
                    .sum();
                row[j] = signal + m.sigma * eps;
            }
            if row.iter().all(|v| v.is_finite()) {
                break;
            }
            attempt += 1;
            if attempt >= ROW_RETRY_LIMIT {
                return Err(SimError::NonFinite { row: r });
            }
        }
        for j in 0..d {
            data[(r, j)] = row[j];
        }
    }
    EnvSample::new(id, data).map_err(|e| SimError::Data(e.to_string()))
}

/// Scenario, mechanisms and data of one simulated study.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: InterventionScenario,
    pub specs: Vec<MechanismSpec>,
    pub data: MultiEnvDataset,
}

/// Generator for the graph and scenario; environment `e` samples from the
/// substream `e + 1` of the same seed.
pub fn simulate(cfg: &SimConfig) -> Result<Simulation, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (scenario, specs) = sample_scenario(cfg, &mut rng)?;
    finish(cfg, scenario, specs)
}

/// Like [`simulate`] but on a given DAG; `cfg.d` must match it and the graph
/// model is ignored. Column names come from the DAG when it has them.
pub fn simulate_on_dag(cfg: &SimConfig, dag: &Dag) -> Result<Simulation, SimError> {
    if dag.num_vars() != cfg.d {
        return Err(SimError::Config { field: "d", message: format!("{} for a DAG on {} variables", cfg.d, dag.num_vars()) });
    }
    let cfg = SimConfig { require_edges: false, ..cfg.clone() };
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (scenario, specs) = scenario_on(&cfg, dag.clone(), &mut rng)?;
    finish(&cfg, scenario, specs)
}

fn finish(cfg: &SimConfig, scenario: InterventionScenario, specs: Vec<MechanismSpec>) -> Result<Simulation, SimError> {
    let dag = scenario.true_dag();
    let envs = specs
        .par_iter()
        .enumerate()
        .map(|(e, spec)| {
            let mut sub = ChaCha8Rng::seed_from_u64(cfg.seed);
            sub.set_stream(e as u64 + 1);
            sample_data(spec, dag, cfg.n_samples, &format!("env_{e}"), &mut sub)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let names = match dag.names() {
        Some(n) => n.to_vec(),
        None => (0..cfg.d).map(|j| format!("X{j}")).collect(),
    };
    let data = MultiEnvDataset::new(names, envs).map_err(|e| SimError::Data(e.to_string()))?;
    Ok(Simulation { scenario, specs, data })
}
