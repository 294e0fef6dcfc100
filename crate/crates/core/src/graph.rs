//! Finite (d+1)-regular graphs: ingestion, random generation and girth-type
//! measurements.
//!
//! Throughout the crate a graph is described by its *degree parameter* `d`:
//! every vertex has exactly `d + 1` neighbours, so the universal cover is the
//! (d+1)-regular tree.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge list is empty")]
    Empty,
    #[error("line {line}: malformed edge {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: self-loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("vertex {vertex} has degree {found}, expected {expected}")]
    NonRegular {
        vertex: usize,
        found: usize,
        expected: usize,
    },
    #[error("degree parameter d = {0} is unsupported (need d >= 2, i.e. at least 3-regular)")]
    UnsupportedDegree(usize),
    #[error("{vertices} vertices is too few for a {degree}-regular simple graph")]
    TooFewVertices { vertices: usize, degree: usize },
    #[error("(d+1)*n = {0} is odd, no regular graph exists")]
    ParityError(usize),
    #[error("configuration model produced no simple graph after {0} attempts")]
    RejectionLimitExceeded(usize),
    #[error("graph has self-loops or parallel edges; analysis requires a simple graph")]
    NotSimple,
}

/// Whether ingestion tolerates self-loops and parallel edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ingest {
    #[default]
    Simple,
    /// Accept loops and multi-edges. The result is flagged non-simple and is
    /// refused by every analysis entry point.
    Permissive,
}

/// An immutable (d+1)-regular graph with sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    d: usize,
    adjacency: Vec<Vec<usize>>,
    simple: bool,
}

impl RegularGraph {
    /// Builds a simple graph from an edge list over vertices `0..vertex_count`.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= vertex_count || v >= vertex_count {
                return Err(GraphError::MalformedLine {
                    line: i + 1,
                    content: format!("{u} {v}"),
                });
            }
            if u == v {
                return Err(GraphError::SelfLoop { line: i + 1, vertex: u });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if let Some(w) = nbrs.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge { line: 0, u, v: w[0] });
            }
        }
        Self::from_adjacency(adjacency, true)
    }

    fn from_adjacency(adjacency: Vec<Vec<usize>>, simple: bool) -> Result<Self, GraphError> {
        if adjacency.is_empty() {
            return Err(GraphError::Empty);
        }
        let degree = adjacency[0].len();
        for (vertex, nbrs) in adjacency.iter().enumerate() {
            if nbrs.len() != degree {
                return Err(GraphError::NonRegular {
                    vertex,
                    found: nbrs.len(),
                    expected: degree,
                });
            }
        }
        if degree < 3 {
            return Err(GraphError::UnsupportedDegree(degree.saturating_sub(1)));
        }
        if simple && adjacency.len() < degree + 1 {
            return Err(GraphError::TooFewVertices {
                vertices: adjacency.len(),
                degree,
            });
        }
        Ok(RegularGraph {
            d: degree - 1,
            adjacency,
            simple,
        })
    }

    /// The degree parameter `d`; every vertex has `d + 1` neighbours.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.d + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.vertex_count() * self.degree() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn is_simple(&self) -> bool {
        self.simple
    }

    pub(crate) fn require_simple(&self) -> Result<(), GraphError> {
        if self.simple {
            Ok(())
        } else {
            Err(GraphError::NotSimple)
        }
    }

    /// Edges `(u, v)` with `u <= v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            let mut loops = 0;
            for &v in nbrs {
                if u < v {
                    out.push((u, v));
                } else if u == v {
                    loops += 1;
                }
            }
            // a loop appears twice in its vertex's list
            for _ in 0..loops / 2 {
                out.push((u, u));
            }
        }
        out.sort_unstable();
        out
    }

    /// Serializes to the edge-list text format, one sorted `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    /// Returns a copy with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> RegularGraph {
        assert_eq!(perm.len(), self.vertex_count());
        let mut adjacency = vec![Vec::new(); self.vertex_count()];
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            adjacency[perm[u]] = nbrs.iter().map(|&v| perm[v]).collect();
            adjacency[perm[u]].sort_unstable();
        }
        RegularGraph {
            d: self.d,
            adjacency,
            simple: self.simple,
        }
    }

    /// BFS distances from `source`, `usize::MAX` for unreached vertices.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Number of vertices within distance `radius` of `center`.
    pub fn ball_size(&self, center: usize, radius: usize) -> usize {
        self.distances_from(center)
            .into_iter()
            .filter(|&r| r <= radius)
            .count()
    }
}

/// Parses the edge-list text format: whitespace-separated `u v` per line,
/// 0-based ids, `#` starts a comment.
pub fn load_graph(source: &str) -> Result<RegularGraph, GraphError> {
    load_graph_with(source, Ingest::Simple)
}

pub fn load_graph_with(source: &str, mode: Ingest) -> Result<RegularGraph, GraphError> {
    let mut edges = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let malformed = || GraphError::MalformedLine {
            line,
            content: raw.to_string(),
        };
        let mut fields = content.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed());
        };
        let u: usize = a.parse().map_err(|_| malformed())?;
        let v: usize = b.parse().map_err(|_| malformed())?;
        edges.push((line, u, v));
    }
    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    let n = edges.iter().map(|&(_, u, v)| u.max(v)).max().unwrap() + 1;
    let mut adjacency = vec![Vec::new(); n];
    let mut seen = std::collections::HashSet::new();
    let mut simple = true;
    for &(line, u, v) in &edges {
        if u == v {
            if mode == Ingest::Simple {
                return Err(GraphError::SelfLoop { line, vertex: u });
            }
            simple = false;
        }
        if !seen.insert((u.min(v), u.max(v))) {
            if mode == Ingest::Simple {
                return Err(GraphError::DuplicateEdge { line, u, v });
            }
            simple = false;
        }
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    for nbrs in adjacency.iter_mut() {
        nbrs.sort_unstable();
    }
    RegularGraph::from_adjacency(adjacency, simple)
}

/// Default cap on configuration-model attempts.
pub const DEFAULT_REJECTION_CAP: usize = 200_000;

/// Uniform random simple (d+1)-regular graph on `n` vertices.
pub fn generate_random_regular(n: usize, d: usize, seed: u64) -> Result<RegularGraph, GraphError> {
    generate_random_regular_capped(n, d, seed, DEFAULT_REJECTION_CAP)
}

/// Configuration model with full rejection: stubs are shuffled and paired
/// consecutively, and the whole pairing is discarded on the first loop or
/// repeated edge. Conditioned on acceptance the output is uniform over
/// simple (d+1)-regular graphs.
pub fn generate_random_regular_capped(
    n: usize,
    d: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<RegularGraph, GraphError> {
    if d < 2 {
        return Err(GraphError::UnsupportedDegree(d));
    }
    let degree = d + 1;
    if (degree * n) % 2 == 1 {
        return Err(GraphError::ParityError(degree * n));
    }
    if n < d + 2 {
        return Err(GraphError::TooFewVertices { vertices: n, degree });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::with_capacity(degree); n];
    'attempt: for _ in 0..max_attempts {
        stubs.shuffle(&mut rng);
        adjacency.iter_mut().for_each(Vec::clear);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adjacency[u].contains(&v) {
                continue 'attempt;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in adjacency.iter_mut() {
            nbrs.sort_unstable();
        }
        return RegularGraph::from_adjacency(adjacency, true);
    }
    Err(GraphError::RejectionLimitExceeded(max_attempts))
}

/// Short-cycle statistics of a graph, exact up to the scan limit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GirthReport {
    /// `None` when no cycle of length `<= scan_limit` exists.
    pub girth: Option<usize>,
    /// Largest `n` such that every radius-`n` ball is a tree. When the girth
    /// lies beyond the scan this is a lower bound.
    pub injectivity_radius: usize,
    /// Largest `L` such that no two distinct cycles of length `<= L` share an
    /// edge. Capped at `scan_limit` when no violating pair was found.
    pub max_shared_edge_cycle_bound: usize,
    pub scan_limit: usize,
    /// Set when the girth exceeds `scan_limit` (not fatal).
    pub scan_limit_too_small: bool,
}

/// Exact girth, injectivity radius and the shared-edge cycle bound, scanning
/// cycles of length at most `scan_limit`.
pub fn girth_report(g: &RegularGraph, scan_limit: usize) -> Result<GirthReport, GraphError> {
    g.require_simple()?;
    let girth = girth_up_to(g, scan_limit);
    let injectivity_radius = match girth {
        Some(c) => (c - 1) / 2,
        None => scan_limit / 2,
    };
    let shared = shared_edge_bound(g, scan_limit);
    Ok(GirthReport {
        girth,
        injectivity_radius,
        max_shared_edge_cycle_bound: shared,
        scan_limit,
        scan_limit_too_small: girth.is_none(),
    })
}

/// Shortest cycle length (at most `limit`) via truncated BFS from every
/// vertex. A non-tree edge met at depths `a`, `b` closes a walk of length
/// `a + b + 1`; the minimum over all roots is the girth.
fn girth_up_to(g: &RegularGraph, limit: usize) -> Option<usize> {
    let n = g.vertex_count();
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut touched = Vec::new();
    for root in 0..n {
        for &v in &touched {
            dist[v] = usize::MAX;
            parent[v] = usize::MAX;
        }
        touched.clear();
        dist[root] = 0;
        touched.push(root);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            // anything found from here is at least 2*dist[u]+1 long
            if 2 * dist[u] + 1 >= best.min(limit + 1) {
                break;
            }
            for &w in g.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    touched.push(w);
                    queue.push_back(w);
                } else if parent[u] != w {
                    best = best.min(dist[u] + dist[w] + 1);
                }
            }
        }
    }
    (best <= limit).then_some(best)
}

/// `min_e (second shortest cycle through e) - 1`, capped at `limit`.
///
/// Cycles through `e = (u, v)` are simple `u -> v` paths in `G - e`; distinct
/// paths give distinct cycles. Paths are enumerated by depth-first search
/// pruned with BFS distances to `v` in `G - e`.
fn shared_edge_bound(g: &RegularGraph, limit: usize) -> usize {
    let n = g.vertex_count();
    let mut best = limit;
    let mut dist = vec![usize::MAX; n];
    let mut on_path = vec![false; n];
    for (u, v) in g.edges() {
        // a second path of length p certifies L <= p, so only p < best matters
        let max_path = best - 1;
        if max_path < 2 {
            break;
        }
        bfs_without_edge(g, v, (u, v), max_path, &mut dist);
        if dist[u] == usize::MAX {
            continue;
        }
        let mut lengths = Vec::new();
        on_path[u] = true;
        count_paths(g, u, v, (u, v), 0, max_path, &dist, &mut on_path, &mut lengths);
        on_path[u] = false;
        if lengths.len() >= 2 {
            lengths.sort_unstable();
            // two cycles of length lengths[1] + 1 share e
            best = best.min(lengths[1]);
        }
    }
    best
}

fn bfs_without_edge(
    g: &RegularGraph,
    source: usize,
    skip: (usize, usize),
    radius: usize,
    dist: &mut [usize],
) {
    dist.iter_mut().for_each(|x| *x = usize::MAX);
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(a) = queue.pop_front() {
        if dist[a] >= radius {
            continue;
        }
        for &b in g.neighbors(a) {
            if (a, b) == skip || (b, a) == skip {
                continue;
            }
            if dist[b] == usize::MAX {
                dist[b] = dist[a] + 1;
                queue.push_back(b);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn count_paths(
    g: &RegularGraph,
    at: usize,
    target: usize,
    skip: (usize, usize),
    len: usize,
    max_len: usize,
    dist: &[usize],
    on_path: &mut [bool],
    lengths: &mut Vec<usize>,
) {
    // two short paths are all we need, and they must be the two shortest
    if lengths.len() >= 2 && lengths.iter().all(|&l| l <= len) {
        return;
    }
    if at == target {
        lengths.push(len);
        lengths.sort_unstable();
        lengths.truncate(2);
        return;
    }
    for &w in g.neighbors(at) {
        if (at, w) == skip || (w, at) == skip || on_path[w] {
            continue;
        }
        if dist[w] == usize::MAX || len + 1 + dist[w] > max_len {
            continue;
        }
        on_path[w] = true;
        count_paths(g, w, target, skip, len + 1, max_len, dist, on_path, lengths);
        on_path[w] = false;
    }
}

/// Number of vertices in a radius-`n` ball of the (d+1)-regular tree.
pub fn tree_ball_size(d: usize, n: usize) -> usize {
    1 + (1..=n).map(|m| (d + 1) * d.pow(m as u32 - 1)).sum::<usize>()
}

/// A few small named graphs used in tests and examples.
pub mod fixtures {
    use super::RegularGraph;

    pub fn complete_k4() -> RegularGraph {
        RegularGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    pub fn petersen() -> RegularGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        RegularGraph::from_edges(10, &edges).unwrap()
    }

    pub fn complete_bipartite_k33() -> RegularGraph {
        let mut edges = Vec::new();
        for a in 0..3 {
            for b in 3..6 {
                edges.push((a, b));
            }
        }
        RegularGraph::from_edges(6, &edges).unwrap()
    }

    pub const PETERSEN_EDGE_LIST: &str = "\
# Petersen graph
0 1
1 2
2 3
3 4
4 0
0 5
1 6
2 7
3 8
4 9
5 7
7 9
9 6
6 8
8 5
";
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn petersen_loads_as_cubic() {
        let g = load_graph(PETERSEN_EDGE_LIST).unwrap();
        assert_eq!(g.vertex_count(), 10);
        assert_eq!(g.edge_count(), 15);
        assert_eq!(g.d(), 2);
        for v in 0..10 {
            assert_eq!(g.neighbors(v).len(), 3);
        }
        assert_eq!(g, petersen());
    }

    #[test]
    fn k4_loads() {
        let g = load_graph("0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
        assert_eq!(g.d(), 2);
        assert_eq!(g, complete_k4());
    }

    #[test]
    fn non_regular_rejected() {
        // K4 minus an edge
        let err = load_graph("0 1\n0 2\n0 3\n1 2\n1 3\n").unwrap_err();
        assert!(matches!(err, GraphError::NonRegular { .. }));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            load_graph("0 1\n0 x\n").unwrap_err(),
            GraphError::MalformedLine { line: 2, .. }
        ));
        assert!(matches!(
            load_graph("0 1 2\n").unwrap_err(),
            GraphError::MalformedLine { line: 1, .. }
        ));
        assert_eq!(load_graph("# nothing\n\n").unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn loops_and_duplicates() {
        assert!(matches!(
            load_graph("0 0\n").unwrap_err(),
            GraphError::SelfLoop { vertex: 0, .. }
        ));
        let dup = "0 1\n1 0\n0 2\n0 3\n1 2\n1 3\n2 3\n";
        assert!(matches!(
            load_graph(dup).unwrap_err(),
            GraphError::DuplicateEdge { line: 2, .. }
        ));
    }

    #[test]
    fn permissive_ingest_is_flagged() {
        // two vertices joined by a triple edge: 3-regular multigraph
        let g = load_graph_with("0 1\n0 1\n0 1\n", Ingest::Permissive).unwrap();
        assert!(!g.is_simple());
        assert_eq!(girth_report(&g, 5).unwrap_err(), GraphError::NotSimple);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# K4\n0 1 # first\n\n0 2\n0 3\n1 2\n1 3\n2 3\n";
        assert_eq!(load_graph(text).unwrap(), complete_k4());
    }

    #[test]
    fn writer_round_trips_sorted() {
        let g = petersen();
        let text = g.to_edge_list();
        assert!(text.starts_with("0 1\n0 4\n0 5\n"));
        assert_eq!(load_graph(&text).unwrap(), g);
    }

    #[test]
    fn generator_basics() {
        let g = generate_random_regular(10, 2, 1).unwrap();
        assert_eq!(g.vertex_count(), 10);
        assert!((0..10).all(|v| g.neighbors(v).len() == 3));
        assert_eq!(generate_random_regular(5, 2, 1).unwrap_err(), GraphError::ParityError(15));
        assert_eq!(generate_random_regular(10, 1, 1).unwrap_err(), GraphError::UnsupportedDegree(1));
        assert_eq!(
            generate_random_regular(10, 2, 1).unwrap(),
            generate_random_regular(10, 2, 1).unwrap()
        );
    }

    #[test]
    fn generator_rejection_cap() {
        // 7-regular on 10 vertices essentially never comes out simple in one try
        let err = generate_random_regular_capped(10, 6, 3, 1);
        assert!(matches!(err, Err(GraphError::RejectionLimitExceeded(1))) || err.is_ok());
    }

    #[test]
    fn large_random_graph_has_girth_at_least_three() {
        let g = generate_random_regular(1000, 2, 7).unwrap();
        let rep = girth_report(&g, 12).unwrap();
        assert!(rep.girth.unwrap() >= 3);
        assert!(rep.injectivity_radius >= 1);
    }

    #[test]
    fn girth_of_named_graphs() {
        let rep = girth_report(&petersen(), 10).unwrap();
        assert_eq!((rep.girth, rep.injectivity_radius), (Some(5), 2));
        let rep = girth_report(&complete_k4(), 10).unwrap();
        assert_eq!((rep.girth, rep.injectivity_radius), (Some(3), 1));
        let rep = girth_report(&complete_bipartite_k33(), 10).unwrap();
        assert_eq!((rep.girth, rep.injectivity_radius), (Some(4), 1));
    }

    #[test]
    fn scan_limit_too_small_is_reported() {
        let rep = girth_report(&petersen(), 4).unwrap();
        assert_eq!(rep.girth, None);
        assert!(rep.scan_limit_too_small);
        assert_eq!(rep.injectivity_radius, 2);
    }

    #[test]
    fn shared_edge_bounds() {
        // K4: every edge lies on two triangles
        assert_eq!(girth_report(&complete_k4(), 8).unwrap().max_shared_edge_cycle_bound, 2);
        // K33: every edge lies on four 4-cycles
        assert_eq!(
            girth_report(&complete_bipartite_k33(), 8).unwrap().max_shared_edge_cycle_bound,
            3
        );
        // Petersen: every edge lies on four 5-cycles
        assert_eq!(girth_report(&petersen(), 8).unwrap().max_shared_edge_cycle_bound, 4);
    }

    #[test]
    fn tree_ball_sizes() {
        assert_eq!(tree_ball_size(2, 0), 1);
        assert_eq!(tree_ball_size(2, 1), 4);
        assert_eq!(tree_ball_size(2, 2), 10);
        assert_eq!(tree_ball_size(3, 2), 1 + 4 + 12);
    }

    #[test]
    fn balls_below_injectivity_radius_are_tree_balls() {
        for g in [petersen(), generate_random_regular(200, 2, 3).unwrap()] {
            let rep = girth_report(&g, 12).unwrap();
            for x in 0..g.vertex_count() {
                for r in 0..=rep.injectivity_radius {
                    assert_eq!(g.ball_size(x, r), tree_ball_size(g.d(), r));
                }
            }
        }
    }
}
