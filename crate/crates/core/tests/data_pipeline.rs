mod common;

use std::collections::BTreeSet;

use common::{all_dags, random_dag};
use mss::graph::{Cpdag, Dag};
use mss::invariance::{InvarianceQuery, OracleInvariance, ShiftTester};
use mss::io::{load_multi_env, save_multi_env, LoadOptions};
use mss::mec::{cpdag_of, enumerate_mec, DEFAULT_MEC_LIMIT};
use mss::metrics::evaluate;
use mss::mss::{empirical_mss, oracle_mss, oracle_report, InterventionScenario, ScoreOptions, ShiftSemantics};
use mss::sim::{simulate, GraphModel, SimConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn simulation_is_deterministic_for_any_worker_count() {
    let cfg = SimConfig { d: 5, n_env: 4, n_samples: 200, seed: 31, ..SimConfig::default() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate(&cfg).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.scenario, b.scenario);
    assert_eq!(a.specs, b.specs);
    assert_eq!(a.data, b.data);
}

#[test]
fn unshifted_mechanisms_are_shared_and_targets_sparse() {
    for seed in 0..40 {
        let graph = if seed % 2 == 0 { GraphModel::ErdosRenyi { density: 0.4 } } else { GraphModel::Hub { attach: 2 } };
        let cfg = SimConfig { d: 6, n_env: 4, n_samples: 10, seed, graph, ..SimConfig::default() };
        let sim = simulate(&cfg).unwrap();
        let targets = sim.scenario.targets();
        for t in targets {
            assert!(!t.is_empty() && t.len() < cfg.d);
        }
        for j in 0..cfg.d {
            let untouched: Vec<usize> = (0..cfg.n_env).filter(|&e| !targets[e].contains(&j)).collect();
            for w in untouched.windows(2) {
                assert_eq!(sim.specs[w[0]].mechanisms[j], sim.specs[w[1]].mechanisms[j]);
            }
        }
    }
}

#[test]
fn saved_datasets_load_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let sim = simulate(&SimConfig { d: 4, n_env: 3, n_samples: 50, seed, ..SimConfig::default() }).unwrap();
        let sub = dir.path().join(seed.to_string());
        let paths = save_multi_env(&sim.data, &sub).unwrap();
        let back = load_multi_env(&paths, LoadOptions::default()).unwrap();
        assert_eq!(back, sim.data);
        let ids: Vec<&str> = back.environments().iter().map(|e| e.id()).collect();
        assert_eq!(ids, ["env_0", "env_1", "env_2"]);
    }
}

/// Feeding the generating scenario's oracle through the data path gives
/// the oracle scores.
#[test]
fn oracle_through_data_path_matches_oracle_scores() {
    for seed in 0..20 {
        let sim = simulate(&SimConfig { d: 5, n_env: 4, n_samples: 20, seed, ..SimConfig::default() }).unwrap();
        let mec = enumerate_mec(sim.scenario.true_dag(), DEFAULT_MEC_LIMIT).unwrap();
        let oracle = OracleInvariance::new(sim.scenario.clone());
        let report = empirical_mss(&mec.members, &sim.data, &oracle, ScoreOptions::new(5)).unwrap();
        for ds in &report.dags {
            assert_eq!(ds.hard, oracle_mss(&ds.dag, &sim.scenario).unwrap());
        }
    }
}

#[test]
fn oracle_precision_is_perfect() {
    let sets: Vec<BTreeSet<usize>> = (0..16).map(|m: usize| (0..4).filter(|v| m >> v & 1 == 1).collect()).collect();
    for d in 2..=4 {
        for g in all_dags(d) {
            if g.num_edges() == 0 {
                continue;
            }
            let mec = enumerate_mec(&g, DEFAULT_MEC_LIMIT).unwrap();
            let grid: Vec<&BTreeSet<usize>> = sets.iter().filter(|s| s.iter().all(|&v| v < d)).collect();
            for (k, a) in grid.iter().enumerate() {
                for b in &grid[k..] {
                    let s = InterventionScenario::new(g.clone(), vec![(*a).clone(), (*b).clone()], ShiftSemantics::Resample).unwrap();
                    let report = oracle_report(&mec.members, &s).unwrap();
                    let est = cpdag_of(&report.argmin_dags()).unwrap();
                    assert_eq!(evaluate(&est, &g).unwrap().precision, 1.0);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for rep in 0..200 {
        let cfg = SimConfig { seed: rep, ..SimConfig::default() };
        let s = mss::study::sample_oracle_scenario(&cfg, rng.random()).unwrap();
        let mec = enumerate_mec(s.true_dag(), DEFAULT_MEC_LIMIT).unwrap();
        let report = oracle_report(&mec.members, &s).unwrap();
        assert_eq!(evaluate(&report.summary_cpdag, s.true_dag()).unwrap().precision, 1.0);
    }
}

/// Linear-Gaussian SEM `X = B X + diag(sigma) eps`, with `b[(j, i)]` the
/// weight of i -> j.
struct LinearSem {
    b: DMatrix<f64>,
    sigma: DVector<f64>,
}

impl LinearSem {
    fn covariance(&self) -> DMatrix<f64> {
        let d = self.b.nrows();
        let inv = (DMatrix::identity(d, d) - &self.b).try_inverse().unwrap();
        let noise = DMatrix::from_diagonal(&self.sigma.map(|s| s * s));
        &inv * noise * inv.transpose()
    }

    /// Regression coefficients and residual variance of X_j on X_z.
    fn conditional(&self, j: usize, z: &[usize]) -> (Vec<f64>, f64) {
        let s = self.covariance();
        if z.is_empty() {
            return (Vec::new(), s[(j, j)]);
        }
        let szz = DMatrix::from_fn(z.len(), z.len(), |r, c| s[(z[r], z[c])]);
        let szj = DVector::from_fn(z.len(), |r, _| s[(z[r], j)]);
        let beta = szz.try_inverse().unwrap() * &szj;
        let var = s[(j, j)] - szj.dot(&beta);
        (beta.iter().copied().collect(), var)
    }
}

fn draw_mechanism(g: &Dag, j: usize, sem: &mut LinearSem, rng: &mut ChaCha8Rng) {
    for &i in g.parents(j) {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        sem.b[(j, i)] = sign * rng.random_range(0.5..2.0);
    }
    sem.sigma[j] = rng.random_range(0.5..2.0);
}

/// The oracle flags a change of `X_j | X_Z` between two environments exactly
/// when the population conditional of a linear-Gaussian model changes.
#[test]
fn oracle_matches_linear_gaussian_conditionals() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..150 {
        let d = rng.random_range(2..=5);
        let g = random_dag(d, rng.random_range(0.3..0.9), &mut rng);
        let mut base = LinearSem { b: DMatrix::zeros(d, d), sigma: DVector::zeros(d) };
        for j in 0..d {
            draw_mechanism(&g, j, &mut base, &mut rng);
        }
        let targets: BTreeSet<usize> = (0..d).filter(|_| rng.random_bool(0.4)).collect();
        let mut other = LinearSem { b: base.b.clone(), sigma: base.sigma.clone() };
        for &j in &targets {
            draw_mechanism(&g, j, &mut other, &mut rng);
        }
        let s = InterventionScenario::new(g.clone(), vec![BTreeSet::new(), targets], ShiftSemantics::Resample).unwrap();
        let oracle = OracleInvariance::new(s);
        for j in 0..d {
            let rest: Vec<usize> = (0..d).filter(|&v| v != j).collect();
            for m in 0..1usize << rest.len() {
                let z: Vec<usize> = rest.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &v)| v).collect();
                let (ba, va) = base.conditional(j, &z);
                let (bb, vb) = other.conditional(j, &z);
                // Inversion noise is ~1e-9; genuine changes are of order 0.1.
                let changed = (va - vb).abs() > 1e-6 * va.max(vb) || ba.iter().zip(&bb).any(|(x, y)| (x - y).abs() > 1e-6);
                let p = oracle.test_query(&InvarianceQuery::new(j, z.clone(), 0, 1).unwrap()).unwrap().p_value;
                assert_eq!(p == 0.0, changed, "{g:?} j={j} z={z:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

fn arb_estimate() -> impl Strategy<Value = (Dag, Cpdag, Vec<usize>)> {
    (2usize..=6, any::<u64>()).prop_map(|(d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut truth = random_dag(d, 0.6, &mut rng);
        while truth.num_edges() == 0 {
            truth = random_dag(d, 0.6, &mut rng);
        }
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for &(i, j) in truth.edges() {
            match rng.random_range(0..3) {
                0 => directed.push((i, j)),
                1 => directed.push((j, i)),
                _ => undirected.push((i.min(j), i.max(j))),
            }
        }
        let est = Cpdag::new(d, directed, undirected).unwrap();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        (truth, est, perm)
    })
}

proptest! {
    #[test]
    fn metrics_survive_joint_relabeling((truth, est, perm) in arb_estimate()) {
        let d = truth.num_vars();
        let r = evaluate(&est, &truth).unwrap();
        let t2 = truth.relabel(&perm).unwrap();
        let map = |s: &BTreeSet<(usize, usize)>, sort: bool| -> Vec<(usize, usize)> {
            s.iter().map(|&(i, j)| {
                let (a, b) = (perm[i], perm[j]);
                if sort { (a.min(b), a.max(b)) } else { (a, b) }
            }).collect()
        };
        let e2 = Cpdag::new(d, map(est.directed(), false), map(est.undirected(), true)).unwrap();
        prop_assert_eq!(evaluate(&e2, &t2).unwrap(), r);
    }
}
