//! Simple undirected graphs and the traversal utilities shared by every solver.

use std::collections::VecDeque;

use thiserror::Error;

use crate::bitset::VertexSet;
use crate::error::{content_lines, parse_num, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("duplicate edge {0}-{1}")]
    Duplicate(usize, usize),
    #[error("induced subgraph is disconnected")]
    Disconnected,
}

/// Undirected simple graph on vertices `0..n` with sorted adjacency lists.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
    connected: bool,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n(), self.edges())
    }
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::OutOfRange(u));
            }
            if v >= n {
                return Err(GraphError::OutOfRange(v));
            }
            if u == v {
                return Err(GraphError::Loop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::Duplicate(u.min(w[0]), u.max(w[0])));
            }
        }
        let mut g = Graph {
            adj,
            m: edges.len(),
            connected: false,
        };
        g.connected = n <= 1 || g.reach(0, &VertexSet::new(n)).len() == n;
        Ok(g)
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_edges(n, &[]).unwrap()
    }

    pub fn path(n: usize) -> Graph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3);
        let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        e.push((n - 1, 0));
        Graph::from_edges(n, &e).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Graph::from_edges(n, &e).unwrap()
    }

    /// Star with center 0 and leaves `1..=leaves`.
    pub fn star(leaves: usize) -> Graph {
        let e: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &e).unwrap()
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_tree(&self) -> bool {
        self.connected && self.m + 1 == self.n().max(1)
    }

    /// Subgraph induced by `vertices`; vertex `i` of the result is `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            pos[v] = i;
        }
        let mut e = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.adj[v] {
                if pos[w] != usize::MAX && i < pos[w] {
                    e.push((i, pos[w]));
                }
            }
        }
        Graph::from_edges(vertices.len(), &e).unwrap()
    }

    pub fn complement(&self) -> Graph {
        let n = self.n();
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if !self.has_edge(u, v) {
                    e.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &e).unwrap()
    }

    /// Whether `set` induces a clique.
    pub fn is_clique(&self, set: &VertexSet) -> bool {
        let members = set.to_vec();
        members
            .iter()
            .enumerate()
            .all(|(i, &u)| members[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// Vertices reachable from `start` avoiding `removed`.
    fn reach(&self, start: usize, removed: &VertexSet) -> VertexSet {
        let mut seen = VertexSet::new(self.n());
        seen.insert(start);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &w in &self.adj[u] {
                if !removed.contains(w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Edge-list text: `n m`, then one `u v` line per edge, with an optional
    /// leading comment line.
    pub fn to_text(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&format!("{} {}\n", self.n(), self.m));
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

pub fn parse_graph(text: &str) -> Result<Graph, ParseError> {
    let mut lines = content_lines(text);
    let (l0, head) = lines.next().ok_or_else(|| ParseError::new(1, "missing header"))?;
    if head.len() != 2 {
        return Err(ParseError::new(l0, "header must be `n m`"));
    }
    let n: usize = parse_num(head[0], l0, "vertex count")?;
    let m: usize = parse_num(head[1], l0, "edge count")?;
    let mut edges = Vec::with_capacity(m);
    let mut last = l0;
    for (ln, toks) in lines {
        if toks.len() != 2 {
            return Err(ParseError::new(ln, "edge line must be `u v`"));
        }
        if edges.len() == m {
            return Err(ParseError::new(ln, "more edges than declared"));
        }
        let u: usize = parse_num(toks[0], ln, "vertex")?;
        let v: usize = parse_num(toks[1], ln, "vertex")?;
        if u >= n || v >= n {
            return Err(ParseError::new(ln, format!("vertex index out of range (n = {n})")));
        }
        edges.push((u, v));
        last = ln;
    }
    if edges.len() != m {
        return Err(ParseError::new(last, format!("expected {m} edges, found {}", edges.len())));
    }
    Graph::from_edges(n, &edges).map_err(|e| ParseError::new(last, e.to_string()))
}

/// Connected components of `g - removed`, ordered by minimum vertex.
pub fn components(g: &Graph, removed: &VertexSet) -> Vec<VertexSet> {
    let mut seen = removed.clone();
    let mut out = Vec::new();
    for v in 0..g.n() {
        if !seen.contains(v) {
            let c = g.reach(v, removed);
            seen.union_with(&c);
            out.push(c);
        }
    }
    out
}

/// Breadth-first hop counts from `from`; `None` marks unreachable vertices.
pub fn distances(g: &Graph, from: usize) -> Vec<Option<u32>> {
    distances_from_set(g, &[from], None)
}

/// Multi-source breadth-first distances, optionally restricted to `within`.
pub fn distances_from_set(g: &Graph, from: &[usize], within: Option<&VertexSet>) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.n()];
    let mut queue = VecDeque::new();
    for &s in from {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &w in g.neighbors(u) {
            if dist[w].is_none() && within.is_none_or(|s| s.contains(w)) {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Eccentricity of `v` inside `g[within]` (`v` must belong to `within`).
pub fn eccentricity_within(g: &Graph, v: usize, within: &VertexSet) -> Result<u32, GraphError> {
    let d = distances_from_set(g, &[v], Some(within));
    let mut ecc = 0;
    for u in within.iter() {
        ecc = ecc.max(d[u].ok_or(GraphError::Disconnected)?);
    }
    Ok(ecc)
}

/// Maximum pairwise distance inside `g[within]`.
pub fn diameter(g: &Graph, within: &VertexSet) -> Result<u32, GraphError> {
    let mut best = 0;
    for v in within.iter() {
        best = best.max(eccentricity_within(g, v, within)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let p4 = parse_graph("4 3\n0 1\n1 2\n2 3").unwrap();
        assert_eq!(p4, Graph::path(4));
        let k1 = parse_graph("1 0").unwrap();
        assert_eq!(k1.n(), 1);
        assert_eq!(k1.m(), 0);
        let k3 = parse_graph("3 3\n0 1\n1 2\n0 2").unwrap();
        assert_eq!(k3, Graph::complete(3));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_graph("3 1\n0 0").is_err());
        assert!(parse_graph("3 2\n0 1\n1 0").is_err());
        assert!(parse_graph("3 1\n0 3").is_err());
        assert!(parse_graph("3 1\n0 x").is_err());
        assert!(parse_graph("3 2\n0 1").is_err());
        assert!(parse_graph("").is_err());
    }

    #[test]
    fn parse_skips_comment_and_roundtrips() {
        let g = Graph::cycle(5);
        let text = g.to_text(Some("cycle n=5"));
        assert!(text.starts_with("# cycle"));
        assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn component_examples() {
        let star = Graph::star(5);
        let cs = components(&star, &VertexSet::singleton(6, 0));
        assert_eq!(cs.len(), 5);
        assert!(cs.iter().all(|c| c.len() == 1));

        let p5 = Graph::path(5);
        let cs = components(&p5, &VertexSet::singleton(5, 2));
        assert_eq!(cs.iter().map(|c| c.to_vec()).collect::<Vec<_>>(), vec![vec![0, 1], vec![3, 4]]);

        let cs = components(&p5, &VertexSet::new(5));
        assert_eq!(cs, vec![VertexSet::full(5)]);
    }

    #[test]
    fn distance_examples() {
        let d: Vec<_> = distances(&Graph::path(4), 0).into_iter().map(Option::unwrap).collect();
        assert_eq!(d, vec![0, 1, 2, 3]);
        let d: Vec<_> = distances(&Graph::complete(4), 2).into_iter().map(Option::unwrap).collect();
        assert_eq!(d, vec![1, 1, 0, 1]);
        let two = Graph::empty(2);
        assert_eq!(distances(&two, 0), vec![Some(0), None]);
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&Graph::path(5), &VertexSet::full(5)), Ok(4));
        assert_eq!(diameter(&Graph::complete(4), &VertexSet::full(4)), Ok(1));
        assert_eq!(diameter(&Graph::cycle(6), &VertexSet::full(6)), Ok(3));
        let within = VertexSet::from_slice(5, &[0, 1, 3, 4]);
        assert_eq!(diameter(&Graph::path(5), &within), Err(GraphError::Disconnected));
    }

    #[test]
    fn induced_and_tree() {
        let g = Graph::cycle(5);
        let h = g.induced(&[4, 0, 1]);
        assert_eq!(h, Graph::path(3));
        assert!(h.is_tree());
        assert!(!g.is_tree());
        assert!(g.complement().has_edge(0, 2));
    }
}
