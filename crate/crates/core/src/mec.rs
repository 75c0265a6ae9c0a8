//! Markov equivalence class enumeration and CPDAG summaries.
//!
//! Enumeration walks the undirected edges of a partially directed graph in
//! index order, tries both orientations, closes each choice under the Meek
//! rules and prunes branches that create a cycle or an unshielded collider
//! absent from the input.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{Cpdag, Dag, GraphError, Vertex};
use crate::pdag::Pdag;

pub const DEFAULT_MEC_LIMIT: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MecError {
    #[error("equivalence class exceeds the limit of {limit} members (stopped after {partial})")]
    SizeLimit { limit: usize, partial: usize },
    #[error("CPDAG admits no consistent DAG extension")]
    NoExtension,
    #[error("cannot summarize an empty DAG set")]
    EmptySet,
    #[error("DAG {index} has {found} variables, expected {expected}")]
    VarCountMismatch { index: usize, expected: usize, found: usize },
    #[error("DAG {index} has a different skeleton from DAG 0")]
    SkeletonMismatch { index: usize },
    #[error("limit must be at least 1")]
    ZeroLimit,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MecEnumeration {
    /// Sorted lexicographically by edge list.
    pub members: Vec<Dag>,
    pub source_skeleton: BTreeSet<(Vertex, Vertex)>,
    pub source_v_structures: BTreeSet<(Vertex, Vertex, Vertex)>,
    pub truncated: bool,
}

impl MecEnumeration {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: &Dag) -> bool {
        self.members.binary_search_by(|m| m.edges().cmp(g.edges())).is_ok()
    }
}

/// The CPDAG of `g`'s equivalence class (pattern plus Meek closure).
pub fn cpdag_of_dag(g: &Dag) -> Cpdag {
    let mut p = Pdag::pattern_of(g);
    p.meek_closure();
    p.to_cpdag()
}

/// All DAGs with `g`'s skeleton and v-structures.
pub fn enumerate_mec(g: &Dag, limit: usize) -> Result<MecEnumeration, MecError> {
    if limit == 0 {
        return Err(MecError::ZeroLimit);
    }
    let mut start = Pdag::pattern_of(g);
    start.meek_closure();
    let allowed = g.v_structures();
    let mut members = Vec::new();
    extend(start, &allowed, limit, &mut members)?;
    finish(members, g.skeleton(), allowed, g.names())
}

/// All DAGs obtained by orienting the undirected edges of `c` without adding
/// cycles or v-structures.
pub fn enumerate_extensions(c: &Cpdag, limit: usize) -> Result<MecEnumeration, MecError> {
    if limit == 0 {
        return Err(MecError::ZeroLimit);
    }
    let mut start = Pdag::from_cpdag(c);
    let allowed = start.directed_v_structures();
    if !start.directed_part_acyclic() {
        return Err(MecError::NoExtension);
    }
    start.meek_closure();
    let mut members = Vec::new();
    extend(start, &allowed, limit, &mut members)?;
    if members.is_empty() {
        return Err(MecError::NoExtension);
    }
    finish(members, c.skeleton(), allowed, c.names())
}

fn finish(
    mut members: Vec<Dag>,
    skeleton: BTreeSet<(Vertex, Vertex)>,
    v_structures: BTreeSet<(Vertex, Vertex, Vertex)>,
    names: Option<&[String]>,
) -> Result<MecEnumeration, MecError> {
    members.sort();
    if let Some(names) = names {
        members = members.into_iter().map(|m| m.with_names(names.to_vec())).collect::<Result<_, _>>()?;
    }
    Ok(MecEnumeration { members, source_skeleton: skeleton, source_v_structures: v_structures, truncated: false })
}

fn admissible(p: &Pdag, allowed: &BTreeSet<(Vertex, Vertex, Vertex)>) -> bool {
    p.directed_part_acyclic() && p.directed_v_structures().is_subset(allowed)
}

fn extend(
    p: Pdag,
    allowed: &BTreeSet<(Vertex, Vertex, Vertex)>,
    limit: usize,
    out: &mut Vec<Dag>,
) -> Result<(), MecError> {
    if !admissible(&p, allowed) {
        return Ok(());
    }
    let Some((i, j)) = p.first_undirected() else {
        if out.len() == limit {
            return Err(MecError::SizeLimit { limit, partial: out.len() + 1 });
        }
        out.push(p.to_dag()?);
        return Ok(());
    };
    for (a, b) in [(i, j), (j, i)] {
        let mut next = p.clone();
        next.set_directed(a, b);
        next.meek_closure();
        extend(next, allowed, limit, out)?;
    }
    Ok(())
}

/// Summarizes DAGs over a shared skeleton: an edge is directed iff every DAG
/// agrees on its direction.
pub fn cpdag_of(dags: &[Dag]) -> Result<Cpdag, MecError> {
    let first = dags.first().ok_or(MecError::EmptySet)?;
    let n = first.num_vars();
    let skeleton = first.skeleton();
    for (index, g) in dags.iter().enumerate().skip(1) {
        if g.num_vars() != n {
            return Err(MecError::VarCountMismatch { index, expected: n, found: g.num_vars() });
        }
        if g.skeleton() != skeleton {
            return Err(MecError::SkeletonMismatch { index });
        }
    }
    let mut directed = Vec::new();
    let mut undirected = Vec::new();
    for &(i, j) in &skeleton {
        if dags.iter().all(|g| g.has_edge(i, j)) {
            directed.push((i, j));
        } else if dags.iter().all(|g| g.has_edge(j, i)) {
            directed.push((j, i));
        } else {
            undirected.push((i, j));
        }
    }
    let c = Cpdag::new(n, directed, undirected)?;
    match first.names() {
        Some(names) => Ok(c.with_names(names.to_vec())?),
        None => Ok(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_dags(n: usize) -> Vec<Dag> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        for code in 0..3usize.pow(pairs.len() as u32) {
            let mut c = code;
            let mut edges = Vec::new();
            for &(i, j) in &pairs {
                match c % 3 {
                    1 => edges.push((i, j)),
                    2 => edges.push((j, i)),
                    _ => {}
                }
                c /= 3;
            }
            if let Ok(g) = Dag::new(n, edges) {
                out.push(g);
            }
        }
        out
    }

    fn brute_mec(g: &Dag, universe: &[Dag]) -> Vec<Dag> {
        let (s, v) = (g.skeleton(), g.v_structures());
        let mut out: Vec<Dag> = universe.iter().filter(|h| h.skeleton() == s && h.v_structures() == v).cloned().collect();
        out.sort();
        out
    }

    #[test]
    fn three_node_sizes_match_brute_force() {
        let all = all_dags(3);
        assert_eq!(all.len(), 25);
        let collider = Dag::new(3, [(0, 1), (2, 1)]).unwrap();
        let chain = Dag::new(3, [(0, 1), (1, 2)]).unwrap();
        let complete = Dag::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        for (g, size) in [(collider, 1), (chain, 3), (complete, 6)] {
            let mec = enumerate_mec(&g, DEFAULT_MEC_LIMIT).unwrap();
            assert_eq!(mec.len(), size);
            assert_eq!(mec.members, brute_mec(&g, &all));
        }
    }

    #[test]
    fn size_limit_is_reported() {
        let complete = Dag::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let err = enumerate_mec(&complete, 4).unwrap_err();
        assert_eq!(err, MecError::SizeLimit { limit: 4, partial: 5 });
        assert_eq!(enumerate_mec(&complete, 0), Err(MecError::ZeroLimit));
    }

    #[test]
    fn extension_examples() {
        let triangle = Cpdag::new(3, [], [(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(enumerate_extensions(&triangle, 100).unwrap().len(), 6);
        let directed = Cpdag::new(3, [(0, 1), (2, 1)], []).unwrap();
        let ext = enumerate_extensions(&directed, 100).unwrap();
        assert_eq!(ext.members, vec![Dag::new(3, [(0, 1), (2, 1)]).unwrap()]);
        let pair = Cpdag::new(2, [], [(0, 1)]).unwrap();
        assert_eq!(enumerate_extensions(&pair, 100).unwrap().len(), 2);
    }

    #[test]
    fn inconsistent_cpdag_has_no_extension() {
        let cyclic = Cpdag::new(3, [(0, 1), (1, 2), (2, 0)], []).unwrap();
        assert_eq!(enumerate_extensions(&cyclic, 10), Err(MecError::NoExtension));
        // 0 -> 1 -- 2 <- 3 with 0, 2 and 1, 3 non-adjacent: either orientation
        // of 1 -- 2 creates a new collider.
        let squeezed = Cpdag::new(4, [(0, 1), (3, 2)], [(1, 2)]).unwrap();
        assert_eq!(enumerate_extensions(&squeezed, 10), Err(MecError::NoExtension));
    }

    #[test]
    fn cpdag_of_examples() {
        let a = Dag::new(2, [(0, 1)]).unwrap();
        let b = Dag::new(2, [(1, 0)]).unwrap();
        assert_eq!(cpdag_of(&[a.clone()]).unwrap(), Cpdag::new(2, [(0, 1)], []).unwrap());
        assert_eq!(cpdag_of(&[a.clone(), b]).unwrap(), Cpdag::new(2, [], [(0, 1)]).unwrap());
        let chain = Dag::new(3, [(0, 1), (1, 2)]).unwrap();
        let mec = enumerate_mec(&chain, 10).unwrap();
        assert_eq!(cpdag_of(&mec.members).unwrap(), Cpdag::new(3, [], [(0, 1), (1, 2)]).unwrap());
        assert_eq!(cpdag_of(&[]), Err(MecError::EmptySet));
        let other = Dag::new(3, [(0, 2)]).unwrap();
        assert_eq!(cpdag_of(&[chain, other]), Err(MecError::SkeletonMismatch { index: 1 }));
    }

    #[test]
    fn cpdag_of_dag_matches_summary_of_class() {
        for g in all_dags(4) {
            let mec = enumerate_mec(&g, DEFAULT_MEC_LIMIT).unwrap();
            assert_eq!(cpdag_of_dag(&g), cpdag_of(&mec.members).unwrap());
            assert!(mec.contains(&g));
        }
    }
}
