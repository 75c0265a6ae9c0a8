//! d-separation queries on a small DAG, and on the same DAG augmented with
//! an environment node pointing into the shifted variables.

use mss::graph::{AugmentedDag, Dag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // X0 -> X1 -> X2 <- X3
    let g = Dag::new(4, [(0, 1), (1, 2), (3, 2)])?;
    let queries: [(usize, usize, &[usize]); 5] = [
        (0, 2, &[]),
        (0, 2, &[1]),
        (0, 3, &[]),
        (0, 3, &[2]),
        (0, 3, &[1]),
    ];
    for (a, b, z) in queries {
        println!("X{a} _||_ X{b} | {z:?}: {}", g.d_separated(a, b, z)?);
    }

    // The environment node E = X4 points into X1 only.
    let aug = AugmentedDag::new(g.clone(), [1])?;
    let e = aug.env();
    for j in 0..g.num_vars() {
        let pa = g.parents(j);
        println!("X{j} invariant given its parents {pa:?}: {}", aug.d_separated(j, e, pa)?);
    }
    Ok(())
}
