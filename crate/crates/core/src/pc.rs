//! Stable PC over a pluggable conditional-independence test, and the pooled
//! variant that appends the environment index as an exogenous variable.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{AugmentedDag, Cpdag, Dag, GraphError, Vertex};
use crate::pdag::Pdag;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CiQuery {
    pub a: Vertex,
    pub b: Vertex,
    pub z: Vec<Vertex>,
}

impl CiQuery {
    pub fn new(a: Vertex, b: Vertex, z: Vec<Vertex>) -> Result<Self, PcError> {
        if a == b {
            return Err(PcError::Query(GraphError::SameEndpoints(a)));
        }
        if let Some(&v) = z.iter().find(|&&v| v == a || v == b) {
            return Err(PcError::Query(GraphError::EndpointConditioned(v)));
        }
        Ok(CiQuery { a, b, z })
    }
}

impl std::fmt::Display for CiQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} _||_ {} | {:?}", self.a, self.b, self.z)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcError {
    #[error("invalid query: {0}")]
    Query(GraphError),
    #[error("test failed on query {query}: {message}")]
    Test { query: CiQuery, message: String },
    #[error("PC needs at least 2 variables, got {0}")]
    TooFewVars(usize),
    #[error("test covers {test} variables, expected {expected}")]
    VarCount { test: usize, expected: usize },
    #[error("unknown test family `{0}`")]
    UnknownFamily(String),
    #[error("dataset: {0}")]
    Data(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A conditional-independence decision procedure.
pub trait CiTest: Sync {
    fn num_vars(&self) -> usize;
    /// `Ok(true)` when the test accepts independence.
    fn independent(&self, q: &CiQuery) -> Result<bool, String>;
}

/// Perfect test: independence iff d-separation in a known graph.
#[derive(Debug, Clone)]
pub struct OracleCi {
    graph: Dag,
}

impl OracleCi {
    pub fn new(graph: &Dag) -> Self {
        OracleCi { graph: graph.clone() }
    }

    pub fn augmented(graph: &AugmentedDag) -> Self {
        OracleCi { graph: graph.as_dag().clone() }
    }
}

impl CiTest for OracleCi {
    fn num_vars(&self) -> usize {
        self.graph.num_vars()
    }

    fn independent(&self, q: &CiQuery) -> Result<bool, String> {
        self.graph.d_separated(q.a, q.b, &q.z).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PcOptions {
    /// Largest conditioning set tried; `None` means `d - 2`.
    pub max_cond_size: Option<usize>,
    /// A vertex with no parents: its edges always point away from it.
    pub exogenous: Option<Vertex>,
}

/// Skeleton plus separating sets recorded at first discovery.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub adjacency: Vec<BTreeSet<Vertex>>,
    sepsets: Vec<Option<Vec<Vertex>>>,
    n: usize,
}

impl Skeleton {
    pub fn sepset(&self, a: Vertex, b: Vertex) -> Option<&[Vertex]> {
        self.sepsets[a.min(b) * self.n + a.max(b)].as_deref()
    }
}

/// PC with default options.
pub fn pc_algorithm(d: usize, test: &dyn CiTest, max_cond_size: Option<usize>) -> Result<Cpdag, PcError> {
    pc_with_options(d, test, PcOptions { max_cond_size, exogenous: None })
}

pub fn pc_with_options(d: usize, test: &dyn CiTest, opts: PcOptions) -> Result<Cpdag, PcError> {
    let skel = pc_skeleton(d, test, opts.max_cond_size.unwrap_or(d.saturating_sub(2)))?;
    Ok(orient(&skel, opts.exogenous).to_cpdag())
}

/// Order-independent adjacency search: neighbor sets are frozen at the start
/// of each level and removals take effect at the next level.
pub fn pc_skeleton(d: usize, test: &dyn CiTest, max_cond_size: usize) -> Result<Skeleton, PcError> {
    if d < 2 {
        return Err(PcError::TooFewVars(d));
    }
    if test.num_vars() != d {
        return Err(PcError::VarCount { test: test.num_vars(), expected: d });
    }
    let mut adjacency: Vec<BTreeSet<Vertex>> = (0..d).map(|i| (0..d).filter(|&j| j != i).collect()).collect();
    let mut sepsets = vec![None; d * d];
    let mut level = 0;
    while level <= max_cond_size {
        let frozen = adjacency.clone();
        let mut any_candidate = false;
        for a in 0..d {
            for &b in &frozen[a] {
                if !adjacency[a].contains(&b) {
                    continue;
                }
                let pool: Vec<Vertex> = frozen[a].iter().copied().filter(|&v| v != b).collect();
                if pool.len() < level {
                    continue;
                }
                any_candidate = true;
                for z in combinations(&pool, level) {
                    let q = CiQuery { a, b, z };
                    let indep = test.independent(&q).map_err(|message| PcError::Test { query: q.clone(), message })?;
                    if indep {
                        adjacency[a].remove(&b);
                        adjacency[b].remove(&a);
                        sepsets[a.min(b) * d + a.max(b)] = Some(q.z);
                        break;
                    }
                }
            }
        }
        if !any_candidate {
            break;
        }
        level += 1;
    }
    Ok(Skeleton { adjacency, sepsets, n: d })
}

fn orient(skel: &Skeleton, exogenous: Option<Vertex>) -> Pdag {
    let d = skel.n;
    let mut p = Pdag::new(d);
    for a in 0..d {
        for &b in &skel.adjacency[a] {
            if a < b {
                p.set_undirected(a, b);
            }
        }
    }
    for k in 0..d {
        if Some(k) == exogenous {
            continue;
        }
        let nb: Vec<Vertex> = skel.adjacency[k].iter().copied().collect();
        for (x, &a) in nb.iter().enumerate() {
            for &b in &nb[x + 1..] {
                if skel.adjacency[a].contains(&b) {
                    continue;
                }
                let in_sepset = skel.sepset(a, b).is_some_and(|s| s.contains(&k));
                if !in_sepset {
                    p.orient(a, k);
                    p.orient(b, k);
                }
            }
        }
    }
    if let Some(e) = exogenous {
        for v in 0..d {
            if v != e && p.adjacent(e, v) {
                p.set_directed(e, v);
            }
        }
    }
    p.meek_closure();
    p
}

/// All `k`-subsets of `pool` in lexicographic order.
pub(crate) fn combinations(pool: &[Vertex], k: usize) -> Vec<Vec<Vertex>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(pool: &[Vertex], k: usize, start: usize, current: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - current.len() {
                break;
            }
            current.push(pool[i]);
            rec(pool, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(pool, k, 0, &mut current, &mut out);
    out
}

/// Pooled PC over `d` data variables plus the environment index at `d`.
/// With a single environment the index is constant and is left out.
pub fn pooled_pc_with(d: usize, n_env: usize, test: &dyn CiTest, max_cond_size: Option<usize>) -> Result<Cpdag, PcError> {
    if n_env <= 1 {
        let restricted = Restricted { inner: test, d };
        return pc_algorithm(d, &restricted, max_cond_size);
    }
    let opts = PcOptions { max_cond_size: Some(max_cond_size.unwrap_or(d.saturating_sub(1))), exogenous: Some(d) };
    Ok(pc_with_options(d + 1, test, opts)?.restrict(d)?)
}

/// Oracle pooled PC on an augmented DAG whose environment children are the
/// union of all shifted variables.
pub fn pooled_pc_oracle(augmented: &AugmentedDag) -> Result<Cpdag, PcError> {
    let d = augmented.base().num_vars();
    let n_env = if augmented.env_children().is_empty() { 1 } else { 2 };
    pooled_pc_with(d, n_env, &OracleCi::augmented(augmented), None)
}

struct Restricted<'a> {
    inner: &'a dyn CiTest,
    d: usize,
}

impl CiTest for Restricted<'_> {
    fn num_vars(&self) -> usize {
        self.d
    }

    fn independent(&self, q: &CiQuery) -> Result<bool, String> {
        self.inner.independent(q)
    }
}
