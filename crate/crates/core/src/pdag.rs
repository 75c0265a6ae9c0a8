//! Mutable partially directed graph used while orienting edges.

use std::collections::BTreeSet;

use crate::graph::{Cpdag, Dag, GraphError, Vertex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Pdag {
    n: usize,
    // dir[i * n + j]: i -> j
    dir: Vec<bool>,
    // und[i * n + j] == und[j * n + i]: i -- j
    und: Vec<bool>,
}

impl Pdag {
    pub fn new(n: usize) -> Self {
        Pdag { n, dir: vec![false; n * n], und: vec![false; n * n] }
    }

    pub fn from_cpdag(c: &Cpdag) -> Self {
        let mut p = Pdag::new(c.num_vars());
        for &(i, j) in c.directed() {
            p.set_directed(i, j);
        }
        for &(i, j) in c.undirected() {
            p.set_undirected(i, j);
        }
        p
    }

    /// Skeleton undirected, v-structures of `g` directed.
    pub fn pattern_of(g: &Dag) -> Self {
        let mut p = Pdag::new(g.num_vars());
        for (i, j) in g.skeleton() {
            p.set_undirected(i, j);
        }
        for (i, k, j) in g.v_structures() {
            p.set_directed(i, k);
            p.set_directed(j, k);
        }
        p
    }

    pub fn is_directed(&self, i: Vertex, j: Vertex) -> bool {
        self.dir[i * self.n + j]
    }

    pub fn is_undirected(&self, i: Vertex, j: Vertex) -> bool {
        self.und[i * self.n + j]
    }

    pub fn adjacent(&self, i: Vertex, j: Vertex) -> bool {
        self.is_directed(i, j) || self.is_directed(j, i) || self.is_undirected(i, j)
    }

    pub fn set_undirected(&mut self, i: Vertex, j: Vertex) {
        let n = self.n;
        self.dir[i * n + j] = false;
        self.dir[j * n + i] = false;
        self.und[i * n + j] = true;
        self.und[j * n + i] = true;
    }

    pub fn set_directed(&mut self, i: Vertex, j: Vertex) {
        let n = self.n;
        self.und[i * n + j] = false;
        self.und[j * n + i] = false;
        self.dir[j * n + i] = false;
        self.dir[i * n + j] = true;
    }

    /// Orients `i -- j` as `i -> j`; no-op unless the edge is currently undirected.
    pub fn orient(&mut self, i: Vertex, j: Vertex) -> bool {
        if self.is_undirected(i, j) {
            self.set_directed(i, j);
            true
        } else {
            false
        }
    }

    pub fn first_undirected(&self) -> Option<(Vertex, Vertex)> {
        (0..self.n).flat_map(|i| (i + 1..self.n).map(move |j| (i, j))).find(|&(i, j)| self.is_undirected(i, j))
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).map(move |j| (i, j))).filter(|&(i, j)| self.is_directed(i, j))
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j))).filter(|&(i, j)| self.is_undirected(i, j))
    }

    /// Colliders `i -> k <- j` with `i < j` non-adjacent, among directed edges only.
    pub fn directed_v_structures(&self) -> BTreeSet<(Vertex, Vertex, Vertex)> {
        let mut out = BTreeSet::new();
        for k in 0..self.n {
            let pa: Vec<Vertex> = (0..self.n).filter(|&i| self.is_directed(i, k)).collect();
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

    pub fn directed_part_acyclic(&self) -> bool {
        let n = self.n;
        let mut indeg: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| self.is_directed(i, j)).count()).collect();
        let mut stack: Vec<Vertex> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for c in 0..n {
                if self.is_directed(v, c) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        stack.push(c);
                    }
                }
            }
        }
        seen == n
    }

    /// Applies Meek rules R1-R4 until no undirected edge changes.
    pub fn meek_closure(&mut self) {
        let n = self.n;
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if a != b && self.is_undirected(a, b) && self.meek_forces(a, b) {
                        self.set_directed(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Whether some Meek rule orients the undirected edge `a -- b` as `a -> b`.
    fn meek_forces(&self, a: Vertex, b: Vertex) -> bool {
        let n = self.n;
        // R1: c -> a -- b, c and b non-adjacent.
        if (0..n).any(|c| c != b && self.is_directed(c, a) && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a -> c -> b.
        if (0..n).any(|c| self.is_directed(a, c) && self.is_directed(c, b)) {
            return true;
        }
        // R3: a -- c -> b, a -- d -> b, c and d non-adjacent.
        let mids: Vec<Vertex> = (0..n).filter(|&c| self.is_undirected(a, c) && self.is_directed(c, b)).collect();
        for (x, &c) in mids.iter().enumerate() {
            if mids[x + 1..].iter().any(|&d| !self.adjacent(c, d)) {
                return true;
            }
        }
        // R4: a -- c -> d -> b, a adjacent to d, c and b non-adjacent.
        for c in 0..n {
            if c == b || !self.is_undirected(a, c) || self.adjacent(c, b) {
                continue;
            }
            if (0..n).any(|d| self.is_directed(c, d) && self.is_directed(d, b) && self.adjacent(a, d)) {
                return true;
            }
        }
        false
    }

    pub fn to_cpdag(&self) -> Cpdag {
        Cpdag::new(self.n, self.directed_edges(), self.undirected_edges()).expect("pdag marks are consistent")
    }

    /// Only valid once every edge is directed.
    pub fn to_dag(&self) -> Result<Dag, GraphError> {
        Dag::new(self.n, self.directed_edges())
    }
}
