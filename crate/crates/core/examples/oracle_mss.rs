//! Oracle mechanism shift scores over a MEC: each candidate DAG is charged
//! one unit per variable and environment pair where its parents fail to
//! separate the variable from the environment.

use mss::graph::Dag;
use mss::mec::{enumerate_mec, DEFAULT_MEC_LIMIT};
use mss::mss::{oracle_mss, oracle_report, InterventionScenario, ShiftSemantics};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = Dag::new(4, [(0, 1), (1, 2), (2, 3)])?;
    let scenario = InterventionScenario::new(
        truth.clone(),
        vec![[0].into(), [1].into(), [3].into()],
        ShiftSemantics::Resample,
    )?;
    let mec = enumerate_mec(&truth, DEFAULT_MEC_LIMIT)?;
    for g in &mec.members {
        println!("{:?}: score {}", g.edges(), oracle_mss(g, &scenario)?);
    }
    let report = oracle_report(&mec.members, &scenario)?;
    println!("unique argmin: {}", report.unique_argmin().is_some_and(|g| g == &truth));
    println!("summary CPDAG directed: {:?}", report.summary_cpdag.directed());
    Ok(())
}
