//! Canonical forms of small vertex-colored graphs by color refinement and
//! individualization.

use crate::graph::Graph;

/// Canonical code and the vertex order realizing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    /// Colors in canonical order followed by the permuted adjacency rows.
    pub code: Vec<u64>,
    /// `order[i]` is the vertex placed at canonical position `i`.
    pub order: Vec<usize>,
}

/// Two colored graphs are isomorphic (respecting colors) iff their codes are
/// equal. Supports up to 64 vertices.
pub fn canonical_form(g: &Graph, colors: &[u64]) -> CanonicalForm {
    let n = g.n();
    assert!(n <= 64, "canonical_form supports at most 64 vertices");
    assert_eq!(colors.len(), n);
    let rows: Vec<u64> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
        .collect();
    let mut distinct: Vec<u64> = colors.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let cell: Vec<usize> = colors.iter().map(|c| distinct.binary_search(c).unwrap()).collect();
    let cell = refine(&rows, cell);
    let mut best: Option<CanonicalForm> = None;
    search(&rows, colors, cell, &mut best);
    best.unwrap_or(CanonicalForm {
        code: Vec::new(),
        order: Vec::new(),
    })
}

/// Split cells by neighbor counts into every cell until stable. New cell
/// indices depend only on old indices and signatures, so the result is
/// isomorphism-invariant.
fn refine(rows: &[u64], mut cell: Vec<usize>) -> Vec<usize> {
    let n = rows.len();
    loop {
        let cells = cell.iter().max().map_or(0, |&c| c + 1);
        let mut sig: Vec<(usize, Vec<u32>, usize)> = (0..n)
            .map(|v| {
                let mut counts = vec![0u32; cells];
                let mut m = rows[v];
                while m != 0 {
                    counts[cell[m.trailing_zeros() as usize]] += 1;
                    m &= m - 1;
                }
                (cell[v], counts, v)
            })
            .collect();
        sig.sort();
        let mut next = vec![0usize; n];
        let mut idx = 0;
        for i in 0..n {
            if i > 0 && (sig[i].0 != sig[i - 1].0 || sig[i].1 != sig[i - 1].1) {
                idx += 1;
            }
            next[sig[i].2] = idx;
        }
        if idx + 1 == cells {
            return next;
        }
        cell = next;
    }
}

fn search(rows: &[u64], colors: &[u64], cell: Vec<usize>, best: &mut Option<CanonicalForm>) {
    let mut orbits: Vec<usize> = (0..rows.len()).collect();
    descend(rows, colors, cell, best, &mut orbits, true);
}

fn find(orbits: &mut [usize], v: usize) -> usize {
    let mut r = v;
    while orbits[r] != r {
        r = orbits[r];
    }
    orbits[v] = r;
    r
}

fn twins(rows: &[u64], v: usize, w: usize) -> bool {
    let mask = !(1u64 << v | 1u64 << w);
    rows[v] & mask == rows[w] & mask
}

fn descend(
    rows: &[u64],
    colors: &[u64],
    cell: Vec<usize>,
    best: &mut Option<CanonicalForm>,
    orbits: &mut Vec<usize>,
    at_root: bool,
) {
    let n = rows.len();
    let mut size = vec![0usize; n];
    for &c in &cell {
        size[c] += 1;
    }
    let target = (0..n).find(|&c| size[c] > 1);
    let Some(target) = target else {
        let mut order = vec![0usize; n];
        for v in 0..n {
            order[cell[v]] = v;
        }
        let mut code: Vec<u64> = order.iter().map(|&v| colors[v]).collect();
        for &v in &order {
            let mut row = 0u64;
            for (i, &w) in order.iter().enumerate() {
                if rows[v] >> w & 1 == 1 {
                    row |= 1 << i;
                }
            }
            code.push(row);
        }
        match best {
            Some(b) if code == b.code => {
                // Equal leaves differ by an automorphism; merge its orbits.
                for i in 0..n {
                    let (a, c) = (find(orbits, b.order[i]), find(orbits, order[i]));
                    if a != c {
                        orbits[a.max(c)] = a.min(c);
                    }
                }
            }
            Some(b) if code > b.code => {}
            _ => *best = Some(CanonicalForm { code, order }),
        }
        return;
    };
    let members: Vec<usize> = (0..n).filter(|&v| cell[v] == target).collect();
    let mut tried: Vec<usize> = Vec::new();
    for &v in &members {
        // Swapping twins is an automorphism fixing everything individualized
        // so far, and at the root any discovered automorphism may be used.
        if tried.iter().any(|&w| twins(rows, v, w)) {
            continue;
        }
        if at_root && tried.iter().any(|&w| find(orbits, w) == find(orbits, v)) {
            continue;
        }
        tried.push(v);
        // Individualize v: it keeps index `target`, the rest of its cell and
        // every later cell shift up by one.
        let next: Vec<usize> = (0..n)
            .map(|w| {
                if w == v || cell[w] < target {
                    cell[w]
                } else {
                    cell[w] + 1
                }
            })
            .collect();
        descend(rows, colors, refine(rows, next), best, orbits, false);
    }
}

/// Every connected graph on `n` vertices, one per isomorphism class, ordered
/// by canonical code.
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    assert!(n <= 10, "enumeration is meant for tiny n");
    if n == 0 {
        return Vec::new();
    }
    // Grow all graphs (connected or not) one vertex at a time.
    let mut level: Vec<Graph> = vec![Graph::empty(1)];
    for k in 1..n {
        let mut seen = std::collections::BTreeMap::new();
        for g in &level {
            for mask in 0u32..1 << k {
                let mut edges = g.edges();
                edges.extend((0..k).filter(|&u| mask >> u & 1 == 1).map(|u| (u, k)));
                let h = Graph::from_edges(k + 1, &edges).expect("valid edges");
                let form = canonical_form(&h, &vec![0; k + 1]);
                seen.entry(form.code).or_insert_with(|| relabel(&h, &form.order));
            }
        }
        level = seen.into_values().collect();
    }
    level.into_iter().filter(|g| g.is_connected()).collect()
}

/// Renumber so that `order[i]` becomes vertex `i`.
fn relabel(g: &Graph, order: &[usize]) -> Graph {
    let mut pos = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (pos[u], pos[v])).collect();
    Graph::from_edges(g.n(), &edges).expect("relabeling keeps edges valid")
}
