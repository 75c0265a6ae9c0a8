//! Enumerating a Markov equivalence class, both from a member DAG and from
//! its CPDAG.

use mss::graph::Dag;
use mss::mec::{cpdag_of_dag, enumerate_extensions, enumerate_mec, DEFAULT_MEC_LIMIT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Dag::new(5, [(0, 1), (1, 2), (2, 3), (1, 3), (4, 3)])?;
    let cpdag = cpdag_of_dag(&g);
    println!("CPDAG directed   {:?}", cpdag.directed());
    println!("CPDAG undirected {:?}", cpdag.undirected());

    let mec = enumerate_mec(&g, DEFAULT_MEC_LIMIT)?;
    println!("{} members:", mec.len());
    for m in &mec.members {
        println!("  {:?}", m.edges());
    }
    let again = enumerate_extensions(&cpdag, DEFAULT_MEC_LIMIT)?;
    assert_eq!(again.members, mec.members);

    // The enumeration refuses to run past its limit.
    let complete = Dag::new(6, (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))))?;
    match enumerate_mec(&complete, 100) {
        Ok(m) => println!("complete graph MEC: {}", m.len()),
        Err(e) => println!("complete graph on 6 nodes: {e}"),
    }
    Ok(())
}
