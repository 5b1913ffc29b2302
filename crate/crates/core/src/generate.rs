//! Seeded random instance generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bitset::VertexSet;
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub enum GenKind {
    Tree { n: usize },
    /// Pendant edges and cycles of length 3 to 5 glued at single vertices.
    Cactus { n: usize },
    /// `cliques` disjoint cliques of size `1..=max_clique` plus `k` extra
    /// vertices with random attachments; the extra vertices are planted.
    ClusterPlusModulator { cliques: usize, max_clique: usize, k: usize },
    ConnectedGnp { n: usize, p: f64 },
}

impl GenKind {
    pub fn name(&self) -> &'static str {
        match self {
            GenKind::Tree { .. } => "tree",
            GenKind::Cactus { .. } => "cactus",
            GenKind::ClusterPlusModulator { .. } => "clusterPlusModulator",
            GenKind::ConnectedGnp { .. } => "connectedGnp",
        }
    }

    fn params(&self) -> String {
        match self {
            GenKind::Tree { n } | GenKind::Cactus { n } => format!("n={n}"),
            GenKind::ClusterPlusModulator { cliques, max_clique, k } => {
                format!("cliques={cliques},maxClique={max_clique},k={k}")
            }
            GenKind::ConnectedGnp { n, p } => format!("n={n},p={p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub graph: Graph,
    /// The planted modulator of `clusterPlusModulator`.
    pub planted: Option<VertexSet>,
    /// Header comment `kind params seed`, written after `# `.
    pub comment: String,
}

impl Generated {
    pub fn to_text(&self) -> String {
        self.graph.to_text(Some(&self.comment))
    }
}

pub fn gen_random(kind: &GenKind, seed: u64) -> Result<Generated, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comment = format!("{} {} {}", kind.name(), kind.params(), seed);
    let bad = |m: &str| Err(GenError::Params(m.to_string()));
    let (graph, planted) = match *kind {
        GenKind::Tree { n } => {
            if n == 0 {
                return bad("n must be positive");
            }
            (random_tree(&mut rng, n), None)
        }
        GenKind::Cactus { n } => {
            if n == 0 {
                return bad("n must be positive");
            }
            (random_cactus(&mut rng, n), None)
        }
        GenKind::ClusterPlusModulator { cliques, max_clique, k } => {
            if cliques == 0 || max_clique == 0 || (k == 0 && cliques > 1) {
                return bad("need at least one clique, and a modulator unless there is one clique");
            }
            let (g, x) = cluster_plus_modulator(&mut rng, cliques, max_clique, k);
            (g, Some(x))
        }
        GenKind::ConnectedGnp { n, p } => {
            if n == 0 || !(p > 0.0 && p <= 1.0) || (n > 1 && p < 1e-3) {
                return bad("need n >= 1 and p in (0, 1]");
            }
            (connected_gnp(&mut rng, n, p), None)
        }
    };
    Ok(Generated {
        graph,
        planted,
        comment,
    })
}

pub fn random_tree(rng: &mut impl Rng, n: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    Graph::from_edges(n, &edges).expect("tree edges are valid")
}

pub fn random_cactus(rng: &mut impl Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    let mut size = 1;
    while size < n {
        let at = rng.gen_range(0..size);
        let room = n - size;
        let len = rng.gen_range(2..=5usize);
        if len < 3 || room < 2 {
            edges.push((at, size));
            size += 1;
            continue;
        }
        let extra = (len - 1).min(room);
        let mut prev = at;
        for v in size..size + extra {
            edges.push((prev, v));
            prev = v;
        }
        edges.push((prev, at));
        size += extra;
    }
    Graph::from_edges(n, &edges).expect("cactus edges are valid")
}

pub fn connected_gnp(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).expect("valid edges");
        if g.is_connected() {
            return g;
        }
    }
}

/// Connected cluster graph plus modulator; the modulator occupies the last
/// `k` vertex ids.
pub fn cluster_plus_modulator(rng: &mut impl Rng, cliques: usize, max_clique: usize, k: usize) -> (Graph, VertexSet) {
    let sizes: Vec<usize> = (0..cliques).map(|_| rng.gen_range(1..=max_clique)).collect();
    planted_modulator(rng, &sizes, k)
}

fn planted_modulator(rng: &mut impl Rng, sizes: &[usize], k: usize) -> (Graph, VertexSet) {
    loop {
        let base: usize = sizes.iter().sum();
        let n = base + k;
        let mut edges = Vec::new();
        let mut start = 0;
        for &sz in sizes {
            for u in start..start + sz {
                for v in u + 1..start + sz {
                    edges.push((u, v));
                }
            }
            start += sz;
        }
        for x in base..n {
            for v in 0..x {
                if rng.gen_bool(0.35) {
                    edges.push((v, x));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).expect("valid edges");
        if g.is_connected() {
            return (g, VertexSet::from_slice(n, &(base..n).collect::<Vec<_>>()));
        }
    }
}

/// A clique on `m` vertices plus `k` modulator vertices with random
/// neighbourhoods, with vertex ids shuffled.
pub fn clique_plus_modulator(rng: &mut impl Rng, m: usize, k: usize) -> (Graph, VertexSet) {
    let (g, x) = planted_modulator(rng, &[m], k);
    let n = g.n();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let planted: Vec<usize> = x.iter().map(|v| perm[v]).collect();
    (
        Graph::from_edges(n, &edges).expect("valid edges"),
        VertexSet::from_slice(n, &planted),
    )
}
