//! Every invariance test on one pair of environments: a shifted variable
//! and an invariant one.

use mss::invariance::{
    EnvSample, FisherZInvariance, InvarianceQuery, InvarianceTest, KciInvariance, LinearParamInvariance,
    RegressionResidualInvariance, Regressor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// X0 -> X1 with X1 = tanh(X0) + noise; `shift` moves the mechanism of X1.
fn env(id: &str, n: usize, shift: f64, rng: &mut ChaCha8Rng) -> Result<EnvSample, Box<dyn std::error::Error>> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let x0: f64 = rng.sample(StandardNormal);
            let x1 = (1.0 + shift) * x0.tanh() + shift + rng.sample::<f64, _>(StandardNormal);
            vec![x0, x1]
        })
        .collect();
    Ok(EnvSample::from_rows(id, &rows)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = env("a", 400, 0.0, &mut rng)?;
    let b = env("b", 400, 0.8, &mut rng)?;
    let tests: Vec<(&str, Box<dyn InvarianceTest>)> = vec![
        ("fisher_z", Box::new(FisherZInvariance)),
        ("linear", Box::new(LinearParamInvariance)),
        ("kci", Box::new(KciInvariance::default())),
        ("residual, kernel ridge", Box::new(RegressionResidualInvariance::new(Regressor::KernelRidge))),
        ("residual, linear", Box::new(RegressionResidualInvariance::new(Regressor::Linear))),
    ];
    let shifted = InvarianceQuery::new(1, [0], 0, 1)?;
    let invariant = InvarianceQuery::new(0, [], 0, 1)?;
    println!("{:<22} {:>12} {:>12}", "test", "p(X1 | X0)", "p(X0)");
    for (label, t) in &tests {
        let p1 = t.test(&a, &b, &shifted)?.p_value;
        let p0 = t.test(&a, &b, &invariant)?.p_value;
        println!("{label:<22} {p1:>12.3e} {p0:>12.3}");
    }
    Ok(())
}
