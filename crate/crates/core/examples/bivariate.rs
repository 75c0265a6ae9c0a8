//! Two variables, two environments: the direction is identified exactly
//! when one variable shifts and the other does not.

use mss::graph::Dag;
use mss::invariance::{DatasetTester, EnvSample, KciInvariance};
use mss::io::MultiEnvDataset;
use mss::mss::{bivariate_identify, bivariate_identify_oracle, InterventionScenario, ScoreOptions, ShiftSemantics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = Dag::new(2, [(0, 1)])?;
    for (name, second) in [("none", vec![]), ("cause", vec![0]), ("effect", vec![1]), ("both", vec![0, 1])] {
        let s = InterventionScenario::new(
            truth.clone(),
            vec![[].into(), second.into_iter().collect()],
            ShiftSemantics::Resample,
        )?;
        println!("oracle, shift {name:>6}: {:?}", bivariate_identify_oracle(&s)?);
    }

    // Data where only the cause's marginal moves.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sample = |id: &str, mean: f64| {
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| {
                let x: f64 = rng.sample::<f64, _>(StandardNormal) + mean;
                vec![x, x.tanh() + 0.5 * rng.sample::<f64, _>(StandardNormal)]
            })
            .collect();
        EnvSample::from_rows(id, &rows)
    };
    let data = MultiEnvDataset::unnamed(vec![sample("a", 0.0)?, sample("b", 1.5)?])?;
    let kci = KciInvariance::default();
    let verdict = bivariate_identify(&DatasetTester::new(&data, &kci), ScoreOptions::new(2))?;
    println!("KCI on data with a cause shift: {verdict:?}");
    Ok(())
}
