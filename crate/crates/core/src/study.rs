//! Oracle simulation studies: recall curves of the oracle shift score and the
//! oracle pooled PC, with bootstrap intervals.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, Vertex};
use crate::mec::{enumerate_mec, MecError, DEFAULT_MEC_LIMIT};
use crate::metrics::{evaluate, EvalResult, MetricsError};
use crate::mss::{oracle_report, InterventionScenario, MssError, ShiftSemantics};
use crate::pc::{pooled_pc_oracle, PcError};
use crate::sim::{sample_dag, sample_targets, GraphModel, ShiftSpec, SimConfig, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mec(#[from] MecError),
    #[error(transparent)]
    Mss(#[from] MssError),
    #[error(transparent)]
    Pc(#[from] PcError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("sweep: {0}")]
    Sweep(String),
}

/// Seed of repetition `rep`, independent of the sweep cell so that cells
/// share their random graphs.
pub fn derive_seed(master: u64, rep: u64) -> u64 {
    let mut z = master ^ rep.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Summary {
    let n = values.len();
    let m = mean(values);
    if n == 0 || resamples == 0 {
        return Summary { mean: m, lo: m, hi: m, n };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Summary { mean: m, lo: percentile(&means, tail), hi: percentile(&means, 1.0 - tail), n }
}

/// Bootstrap interval of the mean paired difference `a - b`.
pub fn paired_bootstrap_diff(a: &[f64], b: &[f64], resamples: usize, level: f64, seed: u64) -> Summary {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    bootstrap_mean_ci(&diff, resamples, level, seed)
}

/// Outcome of one oracle repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub mss: EvalResult,
    pub pooled_pc: EvalResult,
    /// The true DAG is the only minimizer.
    pub unique: bool,
    pub mec_size: usize,
}

/// Scores the MEC of `scenario.true_dag()` with the oracle score and runs
/// the oracle pooled PC on the same scenario.
pub fn oracle_outcome(scenario: &InterventionScenario, mec_limit: usize) -> Result<OracleOutcome, StudyError> {
    let truth = scenario.true_dag();
    let mec = enumerate_mec(truth, mec_limit)?;
    let report = oracle_report(&mec.members, scenario)?;
    let mss = evaluate(&report.summary_cpdag, truth)?;
    let pc = pooled_pc_oracle(&scenario.union_augmented()?)?;
    let pooled_pc = evaluate(&pc, truth)?;
    Ok(OracleOutcome { mss, pooled_pc, unique: report.unique_argmin() == Some(truth), mec_size: mec.len() })
}

/// Random DAG and uniformly drawn target sets, as in the simulated studies.
pub fn sample_oracle_scenario(cfg: &SimConfig, seed: u64) -> Result<InterventionScenario, StudyError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = sample_dag(cfg, &mut rng);
    let targets = sample_targets(cfg.d, cfg.n_env, cfg.shifts.count(cfg.d), &mut rng);
    Ok(InterventionScenario::new(dag, targets, cfg.semantics)?)
}

/// Independent per-environment targets: each variable is intervened with
/// probability `q`.
pub fn bernoulli_targets(d: usize, n_env: usize, q: f64, rng: &mut impl Rng) -> Vec<BTreeSet<Vertex>> {
    (0..n_env).map(|_| (0..d).filter(|_| rng.random_bool(q)).collect()).collect()
}

/// Per-environment intervention probability giving pairwise shift
/// probability `rho` under resampling: `1 - (1 - q)^2 = rho`.
pub fn per_env_probability(rho: f64) -> f64 {
    1.0 - (1.0 - rho).sqrt()
}

/// Monte-Carlo frequency of unique recovery of `dag` with Bernoulli targets
/// of pairwise shift probability `rho`.
pub fn unique_recovery_rate(dag: &Dag, n_env: usize, rho: f64, draws: usize, seed: u64) -> Result<f64, StudyError> {
    let mec = enumerate_mec(dag, DEFAULT_MEC_LIMIT)?;
    let q = per_env_probability(rho);
    let hits: Result<Vec<bool>, StudyError> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let targets = bernoulli_targets(dag.num_vars(), n_env, q, &mut rng);
            let s = InterventionScenario::new(dag.clone(), targets, ShiftSemantics::Resample)?;
            Ok(oracle_report(&mec.members, &s)?.unique_argmin() == Some(dag))
        })
        .collect();
    let hits = hits?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / draws as f64)
}

/// Protein names of the 11-variable signalling network.
pub const SACHS_VARIABLES: [&str; 11] = ["Raf", "Mek", "Plcg", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "P38", "Jnk"];

/// The 17-edge consensus signalling network, indexed as [`SACHS_VARIABLES`].
pub fn sachs_consensus_dag() -> Dag {
    const EDGES: [(Vertex, Vertex); 17] = [
        (8, 0),
        (8, 1),
        (8, 7),
        (8, 10),
        (8, 9),
        (7, 0),
        (7, 1),
        (7, 5),
        (7, 6),
        (7, 10),
        (7, 9),
        (0, 1),
        (1, 5),
        (5, 6),
        (2, 3),
        (2, 4),
        (4, 3),
    ];
    Dag::new(11, EDGES).expect("the consensus network is acyclic")
}

/// Simulation settings for a stand-in of the signalling data: 9
/// environments, one shifted protein each, and strictly positive values
/// (uniform noise on `[1, 3]`, positive weights, `tanh` links).
pub fn sachs_style_config(n_samples: usize, seed: u64) -> SimConfig {
    SimConfig {
        d: 11,
        n_env: 9,
        shifts: ShiftSpec::Count(1),
        n_samples,
        seed,
        noise: crate::sim::NoiseChoice::Uniform,
        nonlinearities: vec![crate::sim::Nonlinearity::Tanh],
        centered_uniform: false,
        ..SimConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NEnv,
    ShiftFraction,
    Density,
    D,
}

impl SweepAxis {
    fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig, StudyError> {
        let mut cfg = base.clone();
        let as_count = |v: f64, what: &str| -> Result<usize, StudyError> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(StudyError::Sweep(format!("{what} value {v} is not a whole number")))
            }
        };
        match self {
            SweepAxis::NEnv => cfg.n_env = as_count(value, "n_env")?,
            SweepAxis::ShiftFraction => cfg.shifts = ShiftSpec::Fraction(value),
            SweepAxis::Density => match cfg.graph {
                GraphModel::ErdosRenyi { .. } => cfg.graph = GraphModel::ErdosRenyi { density: value },
                GraphModel::Hub { .. } => return Err(StudyError::Sweep("density axis needs the erdos_renyi model".into())),
            },
            SweepAxis::D => cfg.d = as_count(value, "d")?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSweep {
    pub base: SimConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub repetitions: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_mec_limit")]
    pub mec_limit: usize,
}

fn default_resamples() -> usize {
    1000
}

fn default_mec_limit() -> usize {
    DEFAULT_MEC_LIMIT
}

/// One row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub method: String,
    pub repetitions: usize,
    pub mean_recall: f64,
    pub recall_lo: f64,
    pub recall_hi: f64,
    pub mean_precision: f64,
    /// Only defined for the shift score.
    pub unique_rate: Option<f64>,
}

/// Per-cell outcomes, indexed `[cell][repetition]`.
pub fn run_oracle_cells(sweep: &OracleSweep) -> Result<Vec<Vec<OracleOutcome>>, StudyError> {
    if sweep.repetitions == 0 {
        return Err(StudyError::Sweep("repetitions must be at least 1".into()));
    }
    let configs: Vec<SimConfig> = sweep.values.iter().map(|&v| sweep.axis.apply(&sweep.base, v)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..sweep.repetitions).map(move |r| (c, r))).collect();
    let outcomes: Vec<OracleOutcome> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let s = sample_oracle_scenario(&configs[c], derive_seed(sweep.base.seed, r as u64))?;
            oracle_outcome(&s, sweep.mec_limit)
        })
        .collect::<Result<_, StudyError>>()?;
    Ok(outcomes.chunks(sweep.repetitions).map(<[OracleOutcome]>::to_vec).collect())
}

pub fn curve_rows(sweep: &OracleSweep, cells: &[Vec<OracleOutcome>]) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    for (k, (value, outs)) in sweep.values.iter().zip(cells).enumerate() {
        for method in ["mss", "pooled_pc"] {
            let pick = |o: &OracleOutcome| if method == "mss" { o.mss } else { o.pooled_pc };
            let recall: Vec<f64> = outs.iter().map(|o| pick(o).recall).collect();
            let precision: Vec<f64> = outs.iter().map(|o| pick(o).precision).collect();
            let s = bootstrap_mean_ci(&recall, sweep.bootstrap_resamples, 0.95, derive_seed(sweep.base.seed, k as u64));
            let unique_rate =
                (method == "mss").then(|| outs.iter().filter(|o| o.unique).count() as f64 / outs.len() as f64);
            rows.push(CurveRow {
                axis: sweep.axis,
                value: *value,
                method: method.to_string(),
                repetitions: outs.len(),
                mean_recall: s.mean,
                recall_lo: s.lo,
                recall_hi: s.hi,
                mean_precision: mean(&precision),
                unique_rate,
            });
        }
    }
    rows
}

pub fn run_oracle_sweep(sweep: &OracleSweep) -> Result<Vec<CurveRow>, StudyError> {
    Ok(curve_rows(sweep, &run_oracle_cells(sweep)?))
}

pub fn write_curves_csv<W: std::io::Write>(rows: &[CurveRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
