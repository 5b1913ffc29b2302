//! Breadth-first dynamic programming over informed sets.

use crate::bitset::VertexSet;
use crate::error::SolveError;
use crate::exact::ExactSolution;
use crate::graph::Graph;
use crate::protocol::BroadcastProtocol;

pub const SUBSET_DP_LIMIT: usize = 15;

/// Minimum rounds from `sources`, or [`SolveError::ExceedsCap`] when the
/// optimum is larger than `cap`.
pub fn subset_dp_opt(g: &Graph, sources: &VertexSet, cap: Option<u32>) -> Result<ExactSolution, SolveError> {
    subset_dp_opt_limited(g, sources, cap, SUBSET_DP_LIMIT)
}

pub fn subset_dp_opt_limited(
    g: &Graph,
    sources: &VertexSet,
    cap: Option<u32>,
    limit: usize,
) -> Result<ExactSolution, SolveError> {
    let n = g.n();
    if n > limit || n > 26 {
        return Err(SolveError::TooLarge(format!("subset DP supports n <= {limit}, got {n}")));
    }
    if sources.is_empty() {
        return Err(SolveError::Precondition("no sources".into()));
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let start = sources.iter().fold(0u32, |m, v| m | 1 << v);
    const UNSEEN: u32 = u32::MAX;
    let mut pred = vec![UNSEEN; 1usize << n];
    pred[start as usize] = start;
    let mut frontier = vec![start];
    let mut rounds = 0;
    let mut ok = vec![false; 0];
    let mut hood = vec![0u32; 0];
    while pred[full as usize] == UNSEEN {
        if frontier.is_empty() {
            return Err(SolveError::Disconnected);
        }
        if cap.is_some_and(|c| rounds >= c) {
            return Err(SolveError::ExceedsCap(cap.unwrap()));
        }
        rounds += 1;
        let mut next = Vec::new();
        for &informed in &frontier {
            let mut cand = Vec::new();
            let mut reach = 0u32;
            for v in bits(informed) {
                reach |= nbr[v as usize];
            }
            reach &= !informed;
            for v in bits(reach) {
                cand.push(v);
            }
            let c = cand.len();
            // Hall's condition, built up one candidate at a time.
            ok.clear();
            ok.resize(1 << c, false);
            hood.clear();
            hood.resize(1 << c, 0);
            ok[0] = true;
            for sub in 1usize..1 << c {
                let low = sub.trailing_zeros() as usize;
                let rest = sub & (sub - 1);
                hood[sub] = hood[rest] | (nbr[cand[low] as usize] & informed);
                ok[sub] = hood[sub].count_ones() >= sub.count_ones()
                    && (0..c).all(|b| sub & 1 << b == 0 || ok[sub & !(1 << b)]);
            }
            for sub in 1usize..1 << c {
                if !ok[sub] || (0..c).any(|b| sub & 1 << b == 0 && ok[sub | 1 << b]) {
                    continue;
                }
                let mut j = informed;
                for (b, &v) in cand.iter().enumerate() {
                    if sub & 1 << b != 0 {
                        j |= 1 << v;
                    }
                }
                if pred[j as usize] == UNSEEN {
                    pred[j as usize] = informed;
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    let mut chain = vec![full];
    while *chain.last().unwrap() != start {
        let cur = *chain.last().unwrap();
        chain.push(pred[cur as usize]);
    }
    chain.reverse();
    let mut p = BroadcastProtocol::new(sources);
    for (r, w) in chain.windows(2).enumerate() {
        for (u, v) in match_into(g, w[0], w[1] & !w[0]) {
            p.assign(v, u, r as u32 + 1);
        }
    }
    Ok(ExactSolution { rounds, protocol: p })
}

fn bits(mut m: u32) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros();
            m &= m - 1;
            Some(b)
        }
    })
}

/// A matching saturating `targets` from `informed`, as (sender, receiver).
fn match_into(g: &Graph, informed: u32, targets: u32) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for v in bits(targets) {
        let mut seen = vec![false; n];
        let found = augment(g, informed, v as usize, &mut owner, &mut seen);
        debug_assert!(found);
    }
    let mut out: Vec<(usize, usize)> = (0..n)
        .filter_map(|u| owner[u].map(|v| (u, v)))
        .collect();
    out.sort_by_key(|&(_, v)| v);
    out
}

/// `owner[u]` is the receiver matched to sender `u`.
fn augment(g: &Graph, informed: u32, v: usize, owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &u in g.neighbors(v) {
        if informed & 1 << u == 0 || seen[u] {
            continue;
        }
        seen[u] = true;
        if owner[u].is_none_or(|w| augment(g, informed, w, owner, seen)) {
            owner[u] = Some(v);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::validate;

    fn opt(g: &Graph, s: usize) -> u32 {
        let src = VertexSet::singleton(g.n(), s);
        let sol = subset_dp_opt(g, &src, None).unwrap();
        assert_eq!(validate(g, &src, &sol.protocol), Ok(sol.rounds));
        sol.rounds
    }

    #[test]
    fn examples() {
        assert_eq!(opt(&Graph::path(4), 0), 3);
        assert_eq!(opt(&Graph::complete(4), 0), 2);
        for s in 0..6 {
            assert_eq!(opt(&Graph::cycle(6), s), 3);
        }
        assert_eq!(opt(&Graph::empty(1), 0), 0);
    }

    #[test]
    fn multi_source_and_cap() {
        let g = Graph::path(7);
        let src = VertexSet::from_slice(7, &[0, 6]);
        assert_eq!(subset_dp_opt(&g, &src, None).unwrap().rounds, 3);
        assert_eq!(subset_dp_opt(&g, &src, Some(2)), Err(SolveError::ExceedsCap(2)));
        assert!(subset_dp_opt(&Graph::path(16), &VertexSet::singleton(16, 0), None).is_err());
        assert_eq!(
            subset_dp_opt(&Graph::empty(2), &VertexSet::singleton(2, 0), None),
            Err(SolveError::Disconnected)
        );
    }
}
