//! Reference implementations used as test oracles. They share no code with
//! the library: plain adjacency matrices and exhaustive search.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mss::graph::Dag;
use rand::seq::SliceRandom;
use rand::Rng;

/// `adj[i][j]` is true for an edge i -> j.
pub type Adj = Vec<Vec<bool>>;

pub fn adjacency(g: &Dag) -> Adj {
    let d = g.num_vars();
    let mut adj = vec![vec![false; d]; d];
    for &(i, j) in g.edges() {
        adj[i][j] = true;
    }
    adj
}

fn acyclic(adj: &Adj) -> bool {
    // Kahn's algorithm on in-degrees.
    let d = adj.len();
    let mut indeg: Vec<usize> = (0..d).map(|j| (0..d).filter(|&i| adj[i][j]).count()).collect();
    let mut stack: Vec<usize> = (0..d).filter(|&j| indeg[j] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for w in 0..d {
            if adj[v][w] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
    }
    seen == d
}

/// Every labeled DAG on `d` vertices: each unordered pair is absent or
/// oriented one of two ways, and cyclic assignments are dropped.
pub fn all_dags(d: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        let mut adj = vec![vec![false; d]; d];
        for &(i, j) in &pairs {
            match c % 3 {
                1 => {
                    edges.push((i, j));
                    adj[i][j] = true;
                }
                2 => {
                    edges.push((j, i));
                    adj[j][i] = true;
                }
                _ => {}
            }
            c /= 3;
        }
        if acyclic(&adj) {
            out.push(Dag::new(d, edges).expect("acyclic by construction"));
        }
    }
    out
}

/// Random DAG: coin flips over a random total order.
pub fn random_dag(d: usize, density: f64, rng: &mut impl Rng) -> Dag {
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if rng.random_bool(density) {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::new(d, edges).expect("consistent with a total order")
}

fn descendants(adj: &Adj, v: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![v];
    seen[v] = true;
    while let Some(u) = stack.pop() {
        for w in 0..adj.len() {
            if adj[u][w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// d-separation by listing every simple path in the skeleton and testing
/// each for blocking.
pub fn dsep_by_paths(adj: &Adj, a: usize, b: usize, z: &[usize]) -> bool {
    let d = adj.len();
    let in_z: Vec<bool> = (0..d).map(|v| z.contains(&v)).collect();
    let desc: Vec<Vec<bool>> = (0..d).map(|v| descendants(adj, v)).collect();
    let collider_open = |v: usize| (0..d).any(|w| desc[v][w] && in_z[w]);
    let mut path = vec![a];
    let mut on_path = vec![false; d];
    on_path[a] = true;
    !active_path_exists(adj, b, &in_z, &collider_open, &mut path, &mut on_path)
}

fn active_path_exists(
    adj: &Adj,
    b: usize,
    in_z: &[bool],
    collider_open: &dyn Fn(usize) -> bool,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
) -> bool {
    let last = *path.last().expect("path starts at a");
    if last == b {
        return path_is_active(adj, path, in_z, collider_open);
    }
    for next in 0..adj.len() {
        if on_path[next] || !(adj[last][next] || adj[next][last]) {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        let found = active_path_exists(adj, b, in_z, collider_open, path, on_path);
        on_path[next] = false;
        path.pop();
        if found {
            return true;
        }
    }
    false
}

fn path_is_active(adj: &Adj, path: &[usize], in_z: &[bool], collider_open: &dyn Fn(usize) -> bool) -> bool {
    path.windows(3).all(|w| {
        let (p, v, n) = (w[0], w[1], w[2]);
        if adj[p][v] && adj[n][v] {
            collider_open(v)
        } else {
            !in_z[v]
        }
    })
}

/// Skeleton and v-structures, the Markov equivalence invariants.
pub fn equivalence_key(g: &Dag) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>) {
    let adj = adjacency(g);
    let d = adj.len();
    let linked = |i: usize, j: usize| adj[i][j] || adj[j][i];
    let skeleton = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).filter(|&(i, j)| linked(i, j)).collect();
    let mut v = BTreeSet::new();
    for k in 0..d {
        for i in 0..d {
            for j in i + 1..d {
                if adj[i][k] && adj[j][k] && !linked(i, j) {
                    v.insert((i, j, k));
                }
            }
        }
    }
    (skeleton, v)
}

/// Asymptotic one-sample Kolmogorov-Smirnov p-value against U(0, 1), with
/// the usual small-sample correction of the statistic.
pub fn ks_uniform_p(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite p-values"));
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let t = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    // The alternating series is useless near zero, where the p-value is 1.
    if t < 0.3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
    }
    p.clamp(0.0, 1.0)
}
