//! Approximations parameterized by clique cover number and by cluster
//! vertex deletion number.

use std::time::Duration;

use num::rational::Ratio;
use num::BigUint;
use thiserror::Error;

use crate::bitset::VertexSet;
use crate::decomposition::CliqueCover;
use crate::error::SolveError;
use crate::exact::solve_exact;
use crate::flow::b_matching;
use crate::graph::{components, Graph};
use crate::protocol::{greedy_complete_with, validate, BroadcastProtocol};
use crate::vi::{vi_solve_with, ViOptions};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error("invalid clique cover: {0}")]
    InvalidCover(String),
    #[error("not a cluster vertex deletion set of G - s: component {0} is not a clique")]
    NotCluster(usize),
    #[error("component {0} has no neighbour in the separator")]
    Unreachable(usize),
    #[error("eps must be positive")]
    Eps,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxReport {
    pub protocol: BroadcastProtocol,
    pub rounds: u32,
    /// Round count the construction provably stays within: the optimum on
    /// the exact path, else the closed-form bound of the main case.
    pub guarantee_bound: Ratio<u64>,
    /// `guarantee_bound` over the lower bound it is measured against; 1 on
    /// the exact path.
    pub ratio_bound: Ratio<u64>,
    pub used_exact_fallback: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxOptions {
    /// Time budget for the exact delegate; on expiry the main case runs.
    pub budget: Option<Duration>,
}

/// Whether `size <= 2^x` for a nonnegative rational `x`, exactly.
pub fn within_power_of_two(size: usize, x: Ratio<u64>) -> bool {
    // size^den <= 2^num
    let lhs = BigUint::from(size).pow(*x.denom() as u32);
    let rhs = BigUint::from(1u32) << *x.numer() as usize;
    lhs <= rhs
}

pub fn ceil_log2(m: usize) -> u32 {
    usize::BITS - m.max(1).saturating_sub(1).leading_zeros()
}

fn exact_report(g: &Graph, s: usize, protocol: BroadcastProtocol, rounds: u32) -> ApproxReport {
    debug_assert_eq!(validate(g, &VertexSet::singleton(g.n(), s), &protocol), Ok(rounds));
    ApproxReport {
        protocol,
        rounds,
        guarantee_bound: Ratio::from_integer(rounds as u64),
        ratio_bound: Ratio::from_integer(1),
        used_exact_fallback: true,
    }
}

fn part_index(n: usize, parts: &[VertexSet]) -> Vec<Option<usize>> {
    let mut of = vec![None; n];
    for (i, p) in parts.iter().enumerate() {
        for v in p.iter() {
            of[v] = Some(i);
        }
    }
    of
}

pub fn clique_cover_approx(g: &Graph, s: usize, cover: &CliqueCover, eps: Ratio<u64>) -> Result<ApproxReport, ApproxError> {
    clique_cover_approx_with(g, s, cover, eps, ApproxOptions::default())
}

pub fn clique_cover_approx_with(
    g: &Graph,
    s: usize,
    cover: &CliqueCover,
    eps: Ratio<u64>,
    opts: ApproxOptions,
) -> Result<ApproxReport, ApproxError> {
    if *eps.numer() == 0 {
        return Err(ApproxError::Eps);
    }
    cover.validate(g).map_err(|e| ApproxError::InvalidCover(e.to_string()))?;
    if !g.is_connected() {
        return Err(SolveError::Disconnected.into());
    }
    let p = cover.parts.len();
    let largest = cover.parts.iter().map(VertexSet::len).max().unwrap_or(1);
    if within_power_of_two(largest, Ratio::from_integer(2 * p as u64) / eps) {
        match solve_exact(g, s, opts.budget) {
            Ok((sol, _)) => return Ok(exact_report(g, s, sol.protocol, sol.rounds)),
            Err(SolveError::Budget | SolveError::TooLarge(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let n = g.n();
    let of = part_index(n, &cover.parts);
    let mut proto = BroadcastProtocol::single_source(n, s);
    let mut touched = vec![false; p];
    touched[of[s].unwrap()] = true;
    let mut informed = vec![s];
    let mut round = 0;
    while touched.iter().any(|&t| !t) {
        round += 1;
        let senders = informed.clone();
        let mut progress = false;
        for u in senders {
            let direct = g
                .neighbors(u)
                .iter()
                .copied()
                .filter(|&w| !touched[of[w].unwrap()])
                .min_by_key(|&w| (of[w], w));
            if let Some(w) = direct {
                touched[of[w].unwrap()] = true;
                proto.assign(w, u, round);
                informed.push(w);
                progress = true;
                continue;
            }
            let step = g.neighbors(u).iter().copied().find(|&x| {
                !proto.is_assigned(x) && g.neighbors(x).iter().any(|&w| !touched[of[w].unwrap()])
            });
            if let Some(x) = step {
                proto.assign(x, u, round);
                informed.push(x);
                progress = true;
            }
        }
        informed.sort_unstable();
        assert!(progress, "a connected graph always has an untouched clique within distance two");
    }
    let phase1 = round;
    assert!(phase1 as usize <= 2 * p, "phase one took {phase1} rounds with {p} cliques");
    let bound = phase1 + ceil_log2(largest);
    let proto = greedy_complete_with(g, &proto, bound, |u, v| of[u] == of[v])
        .expect("in-clique doubling finishes within ceil(log2 |Q|) rounds");
    let rounds = validate(g, &VertexSet::singleton(n, s), &proto).expect("constructed protocol is valid");
    let formula = 2 * p as u64 + ceil_log2(largest) as u64;
    Ok(ApproxReport {
        protocol: proto,
        rounds,
        guarantee_bound: Ratio::from_integer(formula),
        ratio_bound: Ratio::new(formula, ceil_log2(largest).max(1) as u64),
        used_exact_fallback: false,
    })
}

/// Smallest `l` such that every component of `G - S` can be entered from
/// `S` within `l` rounds, each vertex of `S` sending once per round, and for
/// each component (in [`components`] order) its sender in `S`.
pub fn min_arrival_rounds(g: &Graph, sep: &VertexSet) -> Result<(u32, Vec<usize>), ApproxError> {
    let comps = components(g, sep);
    let senders = sep.to_vec();
    let mut edges = Vec::new();
    for (c, comp) in comps.iter().enumerate() {
        let before = edges.len();
        for (l, &u) in senders.iter().enumerate() {
            if g.neighbors(u).iter().any(|&w| comp.contains(w)) {
                edges.push((l, c));
            }
        }
        if edges.len() == before {
            return Err(ApproxError::Unreachable(c));
        }
    }
    if comps.is_empty() {
        return Ok((0, Vec::new()));
    }
    let run = |l: usize| b_matching(&vec![l; senders.len()], comps.len(), &edges);
    let (mut lo, mut hi) = (1, comps.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if run(mid).saturated() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let m = run(lo);
    Ok((lo as u32, m.partner.iter().map(|p| senders[p.unwrap()]).collect()))
}

/// Adds shortest connecting paths through `G - X` until `X` induces a
/// connected graph; returns the enlarged set and the number of vertices added.
fn connect(g: &Graph, s: usize, x: &VertexSet) -> (VertexSet, usize) {
    let mut set = x.clone();
    set.insert(s);
    let mut added = 0;
    loop {
        let reach = crate::graph::distances_from_set(g, &[s], Some(&set));
        if set.iter().all(|v| reach[v].is_some()) {
            return (set, added);
        }
        let start: Vec<usize> = set.iter().filter(|&v| reach[v].is_some()).collect();
        // BFS from the part holding s, through vertices outside the set.
        let n = g.n();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for &v in &start {
            seen[v] = true;
            queue.push_back(v);
        }
        let mut hit = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                prev[w] = u;
                if set.contains(w) {
                    hit = Some(w);
                    break 'bfs;
                }
                queue.push_back(w);
            }
        }
        let mut v = prev[hit.expect("graph is connected")];
        while !set.contains(v) {
            set.insert(v);
            added += 1;
            v = prev[v];
        }
    }
}

pub fn cvd_approx(g: &Graph, s: usize, cvd: &VertexSet, eps: Ratio<u64>) -> Result<ApproxReport, ApproxError> {
    cvd_approx_with(g, s, cvd, eps, ApproxOptions::default())
}

pub fn cvd_approx_with(
    g: &Graph,
    s: usize,
    cvd: &VertexSet,
    eps: Ratio<u64>,
    opts: ApproxOptions,
) -> Result<ApproxReport, ApproxError> {
    if *eps.numer() == 0 {
        return Err(ApproxError::Eps);
    }
    // As in the proof, `cvd` only has to be a deletion set of `G - s`.
    let mut with_s = cvd.clone();
    with_s.insert(s);
    for (i, comp) in components(g, &with_s).iter().enumerate() {
        if !g.is_clique(comp) {
            return Err(ApproxError::NotCluster(i));
        }
    }
    if !g.is_connected() {
        return Err(SolveError::Disconnected.into());
    }
    let n = g.n();
    let (sep, added) = connect(g, s, cvd);
    assert!(added <= 2 * cvd.len(), "connecting the deletion set added {added} vertices");
    let k = sep.len();
    let comps = components(g, &sep);
    let largest = comps.iter().map(VertexSet::len).max().unwrap_or(0);
    if within_power_of_two(largest, Ratio::from_integer(k as u64) / eps) {
        match vi_solve_with(g, s, ViOptions { budget: opts.budget }) {
            Ok(v) => return Ok(exact_report(g, s, v.solution.protocol, v.solution.rounds)),
            Err(SolveError::Budget | SolveError::TooLarge(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let sep_ids = sep.to_vec();
    let local_s = sep_ids.binary_search(&s).unwrap();
    let inner = crate::protocol::greedy_complete(&g.induced(&sep_ids), &BroadcastProtocol::single_source(k, local_s), k as u32)
        .expect("a connected set of k vertices is informed within k rounds");
    let mut proto = inner.relabel(&sep_ids, n);
    let first = sep.iter().filter_map(|v| proto.round(v)).max().unwrap_or(0);
    assert!(first as usize <= k, "the connected set is informed within k rounds");
    let (l, senders) = min_arrival_rounds(g, &sep)?;
    let mut next = vec![first; n];
    for (comp, &u) in comps.iter().zip(&senders) {
        next[u] += 1;
        let w = comp.iter().find(|&w| g.has_edge(u, w)).unwrap();
        proto.assign(w, u, next[u]);
    }
    let of = part_index(n, &comps);
    let bound = first + l + ceil_log2(largest);
    let proto = greedy_complete_with(g, &proto, bound, |u, v| of[u].is_some() && of[u] == of[v])
        .expect("in-component doubling finishes within ceil(log2 |C*|) rounds");
    let rounds = validate(g, &VertexSet::singleton(n, s), &proto).expect("constructed protocol is valid");
    let formula = (k as u64) + l as u64 + ceil_log2(largest) as u64;
    let lower = (l.max(ceil_log2(largest))).max(1) as u64;
    Ok(ApproxReport {
        protocol: proto,
        rounds,
        guarantee_bound: Ratio::from_integer(formula),
        ratio_bound: Ratio::new(formula, lower),
        used_exact_fallback: false,
    })
}

/// Smallest cluster vertex deletion set by brute force over subsets in
/// order of size; intended for graphs of at most 15 vertices.
pub fn min_cvd_bruteforce(g: &Graph) -> VertexSet {
    let n = g.n();
    assert!(n <= 15, "brute-force deletion sets are limited to 15 vertices");
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for m in masks {
        let set = VertexSet::from_slice(n, &(0..n).filter(|&v| m >> v & 1 == 1).collect::<Vec<_>>());
        if components(g, &set).iter().all(|c| g.is_clique(c)) {
            return set;
        }
    }
    unreachable!("the full vertex set is a deletion set")
}
