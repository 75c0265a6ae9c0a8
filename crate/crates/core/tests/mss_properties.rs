mod common;

use std::collections::BTreeSet;

use common::{all_dags, random_dag};
use mss::graph::Dag;
use mss::invariance::{FisherZInvariance, OracleInvariance};
use mss::mec::{enumerate_mec, DEFAULT_MEC_LIMIT};
use mss::mss::{
    empirical_mss, env_pairs, oracle_mss, oracle_mss_j, oracle_report, score_dags, InterventionScenario, ScoreOptions,
    ShiftSemantics,
};
use mss::sim::{simulate, ShiftSpec, SimConfig};
use mss::study::unique_recovery_rate;
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scenario(seed: u64, max_d: usize, max_env: usize) -> InterventionScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=max_d);
    let g = random_dag(d, rng.random_range(0.2..0.9), &mut rng);
    let n_env = rng.random_range(2..=max_env);
    let targets = (0..n_env).map(|_| (0..d).filter(|_| rng.random_bool(0.35)).collect()).collect();
    let semantics = if rng.random_bool(0.5) { ShiftSemantics::Resample } else { ShiftSemantics::Toggle };
    InterventionScenario::new(g, targets, semantics).unwrap()
}

fn relabel_set(s: &BTreeSet<usize>, perm: &[usize]) -> BTreeSet<usize> {
    s.iter().map(|&v| perm[v]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scores_ignore_environment_order(seed in any::<u64>()) {
        let s = random_scenario(seed, 5, 4);
        let mut order: Vec<usize> = (0..s.num_envs()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let targets = order.iter().map(|&e| s.targets()[e].clone()).collect();
        let t = InterventionScenario::new(s.true_dag().clone(), targets, s.semantics()).unwrap();
        for g in enumerate_mec(s.true_dag(), DEFAULT_MEC_LIMIT).unwrap().members {
            prop_assert_eq!(oracle_mss(&g, &s).unwrap(), oracle_mss(&g, &t).unwrap());
        }
    }

    #[test]
    fn scores_survive_relabeling(seed in any::<u64>()) {
        let s = random_scenario(seed, 5, 3);
        let d = s.num_vars();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let targets = s.targets().iter().map(|t| relabel_set(t, &perm)).collect();
        let t = InterventionScenario::new(s.true_dag().relabel(&perm).unwrap(), targets, s.semantics()).unwrap();
        for g in enumerate_mec(s.true_dag(), DEFAULT_MEC_LIMIT).unwrap().members {
            let h = g.relabel(&perm).unwrap();
            for j in 0..d {
                prop_assert_eq!(oracle_mss_j(&g, &s, j).unwrap(), oracle_mss_j(&h, &t, perm[j]).unwrap());
            }
        }
    }

    #[test]
    fn scores_decompose_over_variables(seed in any::<u64>()) {
        let s = random_scenario(seed, 5, 4);
        let mec = enumerate_mec(s.true_dag(), DEFAULT_MEC_LIMIT).unwrap();
        let report = oracle_report(&mec.members, &s).unwrap();
        for ds in &report.dags {
            prop_assert_eq!(ds.hard, ds.per_variable_hard.iter().sum::<usize>());
            prop_assert!((ds.soft - ds.per_variable_soft.iter().sum::<f64>()).abs() < 1e-9);
            let direct: usize = (0..s.num_vars()).map(|j| oracle_mss_j(&ds.dag, &s, j).unwrap()).sum();
            prop_assert_eq!(ds.hard, direct);
            prop_assert_eq!(ds.hard, oracle_mss(&ds.dag, &s).unwrap());
        }
    }

    #[test]
    fn soft_and_hard_agree_for_zero_one_p_values(seed in any::<u64>()) {
        let s = random_scenario(seed, 5, 4);
        let mec = enumerate_mec(s.true_dag(), DEFAULT_MEC_LIMIT).unwrap();
        let oracle = OracleInvariance::new(s.clone());
        let opts = ScoreOptions::new(s.num_vars());
        let hard = score_dags(&mec.members, &oracle, opts).unwrap();
        let soft = score_dags(&mec.members, &oracle, opts.soft()).unwrap();
        prop_assert_eq!(&hard.argmin, &soft.argmin);
        for (h, s) in hard.dags.iter().zip(&soft.dags) {
            prop_assert_eq!(h.hard as f64, s.soft);
        }
    }

    #[test]
    fn truth_minimizes_every_variable_score(seed in any::<u64>()) {
        let s = random_scenario(seed, 5, 4);
        let truth = s.true_dag();
        let mec = enumerate_mec(truth, DEFAULT_MEC_LIMIT).unwrap();
        for g in &mec.members {
            for j in 0..s.num_vars() {
                prop_assert!(oracle_mss_j(truth, &s, j).unwrap() <= oracle_mss_j(g, &s, j).unwrap());
            }
        }
        let report = oracle_report(&mec.members, &s).unwrap();
        prop_assert!(report.argmin_dags().contains(truth));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cache_does_not_change_reports(seed in 0u64..10_000) {
        let cfg = SimConfig { d: 4, n_env: 3, shifts: ShiftSpec::Count(1), n_samples: 150, seed, ..SimConfig::default() };
        let sim = simulate(&cfg).unwrap();
        let mec = enumerate_mec(sim.scenario.true_dag(), DEFAULT_MEC_LIMIT).unwrap();
        for opts in [ScoreOptions::new(4), ScoreOptions::new(4).soft()] {
            let on = empirical_mss(&mec.members, &sim.data, &FisherZInvariance, opts).unwrap();
            let off = empirical_mss(&mec.members, &sim.data, &FisherZInvariance, ScoreOptions { use_cache: false, ..opts }).unwrap();
            prop_assert!(on.same_scores(&off));
            prop_assert!(on.cache.evaluations <= off.cache.evaluations);
        }
    }
}

/// Every pair that shifts j is charged to j under every DAG, whatever the
/// candidate parents.
#[test]
fn shifted_pairs_are_charged_under_every_dag() {
    for d in 2..=3 {
        let dags = all_dags(d);
        let sets: Vec<BTreeSet<usize>> = (0..1usize << d).map(|m| (0..d).filter(|v| m >> v & 1 == 1).collect()).collect();
        for truth in &dags {
            for a in &sets {
                for b in &sets {
                    for semantics in [ShiftSemantics::Resample, ShiftSemantics::Toggle] {
                        let s = InterventionScenario::new(truth.clone(), vec![a.clone(), b.clone()], semantics).unwrap();
                        let shifted = s.pairwise_shift_set(0, 1).unwrap();
                        for g in &dags {
                            for &j in &shifted {
                                assert_eq!(oracle_mss_j(g, &s, j).unwrap(), 1, "{truth:?} {g:?} {a:?} {b:?} {j}");
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn shifted_pairs_are_charged_on_four_nodes() {
    let dags = all_dags(4);
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..60 {
        let truth = dags.choose(&mut rng).unwrap();
        let targets: Vec<BTreeSet<usize>> = (0..3).map(|_| (0..4).filter(|_| rng.random_bool(0.4)).collect()).collect();
        let s = InterventionScenario::new(truth.clone(), targets, ShiftSemantics::Resample).unwrap();
        for g in &dags {
            for j in 0..4 {
                let floor = env_pairs(3).filter(|&(e, f)| s.pairwise_shift_set(e, f).unwrap().contains(&j)).count();
                assert!(oracle_mss_j(g, &s, j).unwrap() >= floor);
            }
        }
        for j in 0..4 {
            let count = env_pairs(3).filter(|&(e, f)| s.pairwise_shift_set(e, f).unwrap().contains(&j)).count();
            assert_eq!(oracle_mss_j(truth, &s, j).unwrap(), count);
        }
    }
}

/// Recovery frequency over 500 draws cannot fall as environments are added:
/// draws are nested, and extra pairs only widen the gap to wrong DAGs.
#[test]
fn unique_recovery_is_monotone_in_environments() {
    for (dag, rho) in [(Dag::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap(), 0.5), (Dag::new(3, [(0, 1), (0, 2)]).unwrap(), 0.3)] {
        let rates: Vec<f64> = (1..=8).map(|n| unique_recovery_rate(&dag, n, rho, 500, 77).unwrap()).collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
        assert!(rates[7] > rates[1]);
    }
}
