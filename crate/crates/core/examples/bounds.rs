//! The identifiability lower bounds next to a Monte Carlo estimate of how
//! often the oracle score singles out the true DAG.

use mss::graph::Dag;
use mss::mec::{enumerate_mec, DEFAULT_MEC_LIMIT};
use mss::mss::{lemma_parent_bound, theorem_graph_bound};
use mss::study::unique_recovery_rate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chain = Dag::new(4, [(0, 1), (1, 2), (2, 3)])?;
    let mec_size = enumerate_mec(&chain, DEFAULT_MEC_LIMIT)?.len();
    let rho = 0.5;
    println!("chain on 4 nodes, MEC size {mec_size}, pairwise shift probability {rho}");
    println!("{:>5} {:>10} {:>10} {:>10}", "n_env", "parent", "graph", "observed");
    for n_env in [2, 4, 6, 8, 10] {
        let observed = unique_recovery_rate(&chain, n_env, rho, 2000, 17)?;
        println!(
            "{n_env:>5} {:>10.4} {:>10.4} {:>10.4}",
            lemma_parent_bound(n_env, rho, rho),
            theorem_graph_bound(n_env, mec_size, rho, rho),
            observed
        );
    }
    Ok(())
}
