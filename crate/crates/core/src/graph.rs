//! DAG and CPDAG types plus the d-separation oracle.
//!
//! Vertices are plain indices in `0..num_vars`. Names are optional metadata
//! and never take part in graph algorithms.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph with {num_vertices} vertices")]
    InvalidVertex { vertex: Vertex, num_vertices: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(Vertex),
    #[error("edge {0} -> {1} listed more than once")]
    DuplicateEdge(Vertex, Vertex),
    #[error("graph contains a directed cycle")]
    Cycle,
    #[error("query endpoints must differ (got {0} twice)")]
    SameEndpoints(Vertex),
    #[error("conditioning set contains query endpoint {0}")]
    EndpointConditioned(Vertex),
    #[error("pair {{{0}, {1}}} is both directed and undirected")]
    MixedAdjacency(Vertex, Vertex),
    #[error("expected {expected} names, got {got}")]
    NameCount { expected: usize, got: usize },
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("malformed graph document: {0}")]
    Format(String),
}

/// Directed acyclic graph over `num_vars` indexed variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "GraphDocument", try_from = "GraphDocument")]
pub struct Dag {
    num_vars: usize,
    edges: Vec<(Vertex, Vertex)>,
    names: Option<Vec<String>>,
    parents: Vec<Vec<Vertex>>,
    children: Vec<Vec<Vertex>>,
}

impl Dag {
    pub fn new(num_vars: usize, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Result<Self, GraphError> {
        if num_vars == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            check_vertex(i, num_vars)?;
            check_vertex(j, num_vars)?;
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !set.insert((i, j)) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut parents = vec![Vec::new(); num_vars];
        let mut children = vec![Vec::new(); num_vars];
        for &(i, j) in &edges {
            parents[j].push(i);
            children[i].push(j);
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }
        let dag = Dag { num_vars, edges, names: None, parents, children };
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn empty(num_vars: usize) -> Result<Self, GraphError> {
        Self::new(num_vars, std::iter::empty())
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() != self.num_vars {
            return Err(GraphError::NameCount { expected: self.num_vars, got: names.len() });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Edges sorted lexicographically.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: Vertex, j: Vertex) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    pub fn adjacent(&self, i: Vertex, j: Vertex) -> bool {
        self.has_edge(i, j) || self.has_edge(j, i)
    }

    pub fn parents(&self, j: Vertex) -> &[Vertex] {
        &self.parents[j]
    }

    pub fn children(&self, j: Vertex) -> &[Vertex] {
        &self.children[j]
    }

    /// Kahn's algorithm, always taking the smallest available index.
    pub fn topological_order(&self) -> Result<Vec<Vertex>, GraphError> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<Vertex> = (0..self.num_vars).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.num_vars);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == self.num_vars {
            Ok(order)
        } else {
            Err(GraphError::Cycle)
        }
    }

    /// Unordered adjacencies as `(min, max)` pairs.
    pub fn skeleton(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect()
    }

    /// Unshielded colliders `(i, k, j)` with `i -> k <- j`, `i < j` and `i`, `j` non-adjacent.
    pub fn v_structures(&self) -> BTreeSet<(Vertex, Vertex, Vertex)> {
        let mut out = BTreeSet::new();
        for k in 0..self.num_vars {
            let pa = &self.parents[k];
            for (a, &i) in pa.iter().enumerate() {
                for &j in &pa[a + 1..] {
                    if !self.adjacent(i, j) {
                        out.insert((i, k, j));
                    }
                }
            }
        }
        out
    }

    /// Vertex set of `z` together with all of its ancestors.
    pub fn ancestors_of(&self, z: &[Vertex]) -> Vec<bool> {
        let mut mark = vec![false; self.num_vars];
        let mut stack: Vec<Vertex> = z.to_vec();
        while let Some(v) = stack.pop() {
            if !mark[v] {
                mark[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        mark
    }

    /// Returns `true` iff every path between `a` and `b` is blocked by `z`.
    ///
    /// Reachability over (vertex, direction) states: a trail may leave a
    /// non-conditioned vertex in any direction unless it arrived through a
    /// parent, in which case it can only continue to children; a conditioned
    /// vertex (or one with a conditioned descendant) lets a trail bounce from
    /// parent to parent.
    pub fn d_separated(&self, a: Vertex, b: Vertex, z: &[Vertex]) -> Result<bool, GraphError> {
        check_vertex(a, self.num_vars)?;
        check_vertex(b, self.num_vars)?;
        if a == b {
            return Err(GraphError::SameEndpoints(a));
        }
        let mut in_z = vec![false; self.num_vars];
        for &v in z {
            check_vertex(v, self.num_vars)?;
            if v == a || v == b {
                return Err(GraphError::EndpointConditioned(v));
            }
            in_z[v] = true;
        }
        Ok(!self.reachable_active(a, &in_z, &self.ancestors_of(z))[b])
    }

    fn reachable_active(&self, source: Vertex, in_z: &[bool], anc_z: &[bool]) -> Vec<bool> {
        const UP: usize = 0;
        const DOWN: usize = 1;
        let n = self.num_vars;
        let mut visited = vec![[false; 2]; n];
        let mut reached = vec![false; n];
        let mut queue = VecDeque::new();
        queue.push_back((source, UP));
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !in_z[v] {
                reached[v] = true;
            }
            if dir == UP && !in_z[v] {
                for &p in &self.parents[v] {
                    queue.push_back((p, UP));
                }
                for &c in &self.children[v] {
                    queue.push_back((c, DOWN));
                }
            } else if dir == DOWN {
                if !in_z[v] {
                    for &c in &self.children[v] {
                        queue.push_back((c, DOWN));
                    }
                }
                if anc_z[v] {
                    for &p in &self.parents[v] {
                        queue.push_back((p, UP));
                    }
                }
            }
        }
        reached
    }

    /// Applies `perm` to every vertex: vertex `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[Vertex]) -> Result<Dag, GraphError> {
        let edges = self.edges.iter().map(|&(i, j)| (perm[i], perm[j]));
        let mut out = Dag::new(self.num_vars, edges)?;
        if let Some(names) = &self.names {
            let mut permuted = vec![String::new(); self.num_vars];
            for (v, name) in names.iter().enumerate() {
                permuted[perm[v]] = name.clone();
            }
            out.names = Some(permuted);
        }
        Ok(out)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            num_vars: self.num_vars,
            names: self.names.clone(),
            directed: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            undirected: None,
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self, GraphError> {
        if doc.undirected.as_ref().is_some_and(|u| !u.is_empty()) {
            return Err(GraphError::Format("a DAG document cannot list undirected edges".into()));
        }
        let dag = Dag::new(doc.num_vars, doc.directed.iter().map(|e| (e[0], e[1])))?;
        match &doc.names {
            Some(names) => dag.with_names(names.clone()),
            None => Ok(dag),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument = serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }
}

impl PartialOrd for Dag {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on `(num_vars, sorted edge list)`.
impl Ord for Dag {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num_vars, &self.edges).cmp(&(other.num_vars, &other.edges))
    }
}

pub(crate) fn check_vertex(v: Vertex, n: usize) -> Result<(), GraphError> {
    if v < n {
        Ok(())
    } else {
        Err(GraphError::InvalidVertex { vertex: v, num_vertices: n })
    }
}

/// A DAG extended with an environment indicator `E` that has no parents.
///
/// `E` is addressed by the index `base.num_vars()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedDag {
    base: Dag,
    env_children: BTreeSet<Vertex>,
    full: Dag,
}

impl AugmentedDag {
    pub fn new(base: Dag, env_children: impl IntoIterator<Item = Vertex>) -> Result<Self, GraphError> {
        let d = base.num_vars();
        let env_children: BTreeSet<Vertex> = env_children.into_iter().collect();
        for &c in &env_children {
            check_vertex(c, d)?;
        }
        let edges = base.edges().iter().copied().chain(env_children.iter().map(|&c| (d, c)));
        let full = Dag::new(d + 1, edges)?;
        Ok(AugmentedDag { base, env_children, full })
    }

    pub fn base(&self) -> &Dag {
        &self.base
    }

    pub fn env_children(&self) -> &BTreeSet<Vertex> {
        &self.env_children
    }

    /// Index of the environment node.
    pub fn env(&self) -> Vertex {
        self.base.num_vars()
    }

    /// The augmented graph as a plain DAG over `d + 1` vertices.
    pub fn as_dag(&self) -> &Dag {
        &self.full
    }

    pub fn d_separated(&self, a: Vertex, b: Vertex, z: &[Vertex]) -> Result<bool, GraphError> {
        self.full.d_separated(a, b, z)
    }
}

/// Partially directed graph summarizing a set of DAGs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "GraphDocument", try_from = "GraphDocument")]
pub struct Cpdag {
    num_vars: usize,
    directed: BTreeSet<(Vertex, Vertex)>,
    undirected: BTreeSet<(Vertex, Vertex)>,
    names: Option<Vec<String>>,
}

impl Cpdag {
    pub fn new(
        num_vars: usize,
        directed: impl IntoIterator<Item = (Vertex, Vertex)>,
        undirected: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self, GraphError> {
        if num_vars == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut dir = BTreeSet::new();
        for (i, j) in directed {
            check_vertex(i, num_vars)?;
            check_vertex(j, num_vars)?;
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            dir.insert((i, j));
        }
        let mut und = BTreeSet::new();
        for (i, j) in undirected {
            check_vertex(i, num_vars)?;
            check_vertex(j, num_vars)?;
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            let key = (i.min(j), i.max(j));
            if dir.contains(&(i, j)) || dir.contains(&(j, i)) {
                return Err(GraphError::MixedAdjacency(key.0, key.1));
            }
            if !und.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
        }
        Ok(Cpdag { num_vars, directed: dir, undirected: und, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() != self.num_vars {
            return Err(GraphError::NameCount { expected: self.num_vars, got: names.len() });
        }
        self.names = Some(names);
        Ok(self)
    }

    /// The DAG itself viewed as a fully directed CPDAG.
    pub fn from_dag(dag: &Dag) -> Self {
        Cpdag {
            num_vars: dag.num_vars(),
            directed: dag.edges().iter().copied().collect(),
            undirected: BTreeSet::new(),
            names: dag.names().map(<[String]>::to_vec),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn directed(&self) -> &BTreeSet<(Vertex, Vertex)> {
        &self.directed
    }

    /// Undirected edges stored as `(min, max)`.
    pub fn undirected(&self) -> &BTreeSet<(Vertex, Vertex)> {
        &self.undirected
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn skeleton(&self) -> BTreeSet<(Vertex, Vertex)> {
        self.directed
            .iter()
            .map(|&(i, j)| (i.min(j), i.max(j)))
            .chain(self.undirected.iter().copied())
            .collect()
    }

    pub fn num_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    /// Drops vertices `keep..num_vars` and every edge touching them.
    pub fn restrict(&self, keep: usize) -> Result<Cpdag, GraphError> {
        let dir = self.directed.iter().copied().filter(|&(i, j)| i < keep && j < keep);
        let und = self.undirected.iter().copied().filter(|&(i, j)| i < keep && j < keep);
        Cpdag::new(keep, dir, und)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            num_vars: self.num_vars,
            names: self.names.clone(),
            directed: self.directed.iter().map(|&(i, j)| [i, j]).collect(),
            undirected: Some(self.undirected.iter().map(|&(i, j)| [i, j]).collect()),
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self, GraphError> {
        let und = doc.undirected.iter().flatten().map(|e| (e[0], e[1]));
        let c = Cpdag::new(doc.num_vars, doc.directed.iter().map(|e| (e[0], e[1])), und)?;
        match &doc.names {
            Some(names) => c.with_names(names.clone()),
            None => Ok(c),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument = serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }
}

impl From<Dag> for GraphDocument {
    fn from(g: Dag) -> Self {
        g.to_document()
    }
}

impl TryFrom<GraphDocument> for Dag {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, GraphError> {
        Dag::from_document(&doc)
    }
}

impl From<Cpdag> for GraphDocument {
    fn from(c: Cpdag) -> Self {
        c.to_document()
    }
}

impl TryFrom<GraphDocument> for Cpdag {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, GraphError> {
        Cpdag::from_document(&doc)
    }
}

/// On-disk graph representation shared by DAGs and CPDAGs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub num_vars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub directed: Vec<[Vertex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undirected: Option<Vec<[Vertex; 2]>>,
}
