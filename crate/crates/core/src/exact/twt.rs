//! Dynamic programming over a nice tree decomposition deciding whether `t`
//! rounds suffice.
//!
//! A `t`-round protocol is an orientation of some edges together with a
//! coloring `c: V -> [0, t]` such that `c(s) = 0`, every other vertex has
//! exactly one incoming arc, every arc `u -> v` has `c(u) < c(v)`, and the
//! heads of the arcs leaving a vertex have distinct colors. Each edge is
//! decided at the forget node of whichever endpoint leaves the bags first.

use rustc_hash::FxHashMap;

use crate::error::SolveError;
use crate::exact::ExactSolution;
use crate::decomposition::{NiceKind, NiceTreeDecomposition};
use crate::graph::{distances, Graph};
use crate::protocol::BroadcastProtocol;

/// Largest round count the packed signature can represent.
pub const TWT_MAX_ROUNDS: u32 = 57;

const COLOR_MASK: u64 = 0x3f;
const IN_PARENT: u64 = 1 << 6;
const USED_SHIFT: u32 = 6;

/// Decoded state of one bag vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwtSignature {
    pub color: u32,
    pub in_parent: bool,
    pub used: Vec<u32>,
}

impl TwtSignature {
    pub fn decode(packed: u64) -> TwtSignature {
        TwtSignature {
            color: (packed & COLOR_MASK) as u32,
            in_parent: packed & IN_PARENT != 0,
            used: (1..=TWT_MAX_ROUNDS).filter(|&c| packed >> (USED_SHIFT + c) & 1 == 1).collect(),
        }
    }

    pub fn encode(&self) -> u64 {
        let mut p = self.color as u64;
        if self.in_parent {
            p |= IN_PARENT;
        }
        for &c in &self.used {
            p |= 1 << (USED_SHIFT + c);
        }
        p
    }
}

fn color(p: u64) -> u64 {
    p & COLOR_MASK
}

fn used_bit(c: u64) -> u64 {
    1 << (USED_SHIFT as u64 + c)
}

#[derive(Debug, Clone)]
enum Prov {
    Leaf,
    Introduce(Vec<u64>),
    Forget(Vec<u64>, Vec<(usize, usize)>),
    Join(Vec<u64>, Vec<u64>),
}

type Table = FxHashMap<Vec<u64>, Prov>;

/// A protocol with at most `t` rounds if one exists.
pub fn twt_feasible(
    g: &Graph,
    s: usize,
    t: u32,
    ntd: &NiceTreeDecomposition,
) -> Result<Option<BroadcastProtocol>, SolveError> {
    ntd.validate(g)
        .map_err(|e| SolveError::Precondition(format!("invalid decomposition: {e}")))?;
    if t > TWT_MAX_ROUNDS {
        return Err(SolveError::TooLarge(format!("t = {t} exceeds {TWT_MAX_ROUNDS}")));
    }
    let n = g.n();
    let dist = distances(g, s);
    let t64 = t as u64;
    let mut tables: Vec<Table> = Vec::with_capacity(ntd.nodes.len());
    for node in &ntd.nodes {
        let mut table = Table::default();
        match node.kind {
            NiceKind::Leaf => {
                table.insert(Vec::new(), Prov::Leaf);
            }
            NiceKind::Introduce(v) => {
                let pos = node.bag.binary_search(&v).unwrap();
                let colors: Vec<u64> = if v == s {
                    vec![0]
                } else {
                    match dist[v] {
                        Some(d) => (d.max(1) as u64..=t64).collect(),
                        None => Vec::new(),
                    }
                };
                for sig in tables[node.children[0]].keys() {
                    for &c in &colors {
                        let mut next = sig.clone();
                        next.insert(pos, c);
                        table.entry(next).or_insert_with(|| Prov::Introduce(sig.clone()));
                    }
                }
            }
            NiceKind::Forget(v) => {
                let child = &ntd.nodes[node.children[0]];
                let pos = child.bag.binary_search(&v).unwrap();
                let others: Vec<usize> = (0..child.bag.len())
                    .filter(|&i| i != pos && g.has_edge(v, child.bag[i]))
                    .collect();
                for sig in tables[node.children[0]].keys() {
                    let mut arcs = Vec::new();
                    orient(s, &child.bag, pos, &others, 0, sig.clone(), &mut arcs, &mut |done, arcs| {
                        if done[pos] & IN_PARENT == 0 && v != s {
                            return;
                        }
                        let mut next = done.to_vec();
                        next.remove(pos);
                        table.entry(next).or_insert_with(|| Prov::Forget(sig.clone(), arcs.to_vec()));
                    });
                }
            }
            NiceKind::Join => {
                let left = &tables[node.children[0]];
                let right = &tables[node.children[1]];
                let mut by_colors: FxHashMap<Vec<u64>, Vec<&Vec<u64>>> = FxHashMap::default();
                for sig in right.keys() {
                    by_colors.entry(sig.iter().map(|&p| color(p)).collect()).or_default().push(sig);
                }
                for a in left.keys() {
                    let key: Vec<u64> = a.iter().map(|&p| color(p)).collect();
                    let Some(group) = by_colors.get(&key) else { continue };
                    for b in group {
                        let compatible = a.iter().zip(b.iter()).all(|(&x, &y)| (x & y) & !COLOR_MASK == 0);
                        if compatible {
                            let merged: Vec<u64> = a.iter().zip(b.iter()).map(|(&x, &y)| x | y).collect();
                            table
                                .entry(merged)
                                .or_insert_with(|| Prov::Join(a.clone(), (*b).clone()));
                        }
                    }
                }
            }
        }
        tables.push(table);
    }
    let root = ntd.root();
    if tables[root].is_empty() {
        return Ok(None);
    }
    let mut arcs = Vec::new();
    collect(ntd, &tables, root, &Vec::new(), &mut arcs);
    let mut p = BroadcastProtocol::single_source(n, s);
    for (u, v, c) in arcs {
        p.assign(v, u, c);
    }
    Ok(Some(p))
}

/// Enumerates the ways to orient edges between the forgotten vertex at `pos`
/// and the bag vertices listed in `others`, calling `emit` for each valid one.
#[allow(clippy::too_many_arguments)]
fn orient(
    s: usize,
    bag: &[usize],
    pos: usize,
    others: &[usize],
    k: usize,
    sig: Vec<u64>,
    arcs: &mut Vec<(usize, usize)>,
    emit: &mut impl FnMut(&[u64], &[(usize, usize)]),
) {
    if k == others.len() {
        emit(&sig, arcs);
        return;
    }
    let o = others[k];
    orient(s, bag, pos, others, k + 1, sig.clone(), arcs, emit);
    for (from, to) in [(pos, o), (o, pos)] {
        let (pu, pv) = (sig[from], sig[to]);
        let cv = color(pv);
        if bag[to] == s || color(pu) >= cv || pv & IN_PARENT != 0 || pu & used_bit(cv) != 0 {
            continue;
        }
        let mut next = sig.clone();
        next[to] |= IN_PARENT;
        next[from] |= used_bit(cv);
        arcs.push((bag[from], bag[to]));
        orient(s, bag, pos, others, k + 1, next, arcs, emit);
        arcs.pop();
    }
}

fn collect(ntd: &NiceTreeDecomposition, tables: &[Table], x: usize, sig: &Vec<u64>, out: &mut Vec<(usize, usize, u32)>) {
    let node = &ntd.nodes[x];
    match &tables[x][sig] {
        Prov::Leaf => {}
        Prov::Introduce(child) => collect(ntd, tables, node.children[0], child, out),
        Prov::Forget(child, arcs) => {
            let bag = &ntd.nodes[node.children[0]].bag;
            for &(u, v) in arcs {
                let pv = child[bag.binary_search(&v).unwrap()];
                out.push((u, v, color(pv) as u32));
            }
            collect(ntd, tables, node.children[0], child, out);
        }
        Prov::Join(a, b) => {
            collect(ntd, tables, node.children[0], a, out);
            collect(ntd, tables, node.children[1], b, out);
        }
    }
}

/// Smallest feasible `t`, scanning upward from `ceil(log2 n)`.
pub fn twt_opt(g: &Graph, s: usize, ntd: &NiceTreeDecomposition) -> Result<ExactSolution, SolveError> {
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    let n = g.n();
    let mut t = usize::BITS - (n.max(1) - 1).leading_zeros();
    loop {
        if let Some(protocol) = twt_feasible(g, s, t, ntd)? {
            return Ok(ExactSolution { rounds: t, protocol });
        }
        t += 1;
    }
}
