//! Exact solver for graphs in which every vertex except the source has
//! degree at most two.
//!
//! `G - s` is then a union of paths attached to `s` by one endpoint
//! (pendants) or by both (loops). Propagation inside a path is forced, so a
//! transmission of `s` in round `h` of a `T`-round protocol is worth
//! `T - h + 1` vertices of the path it enters. A pendant of `L` vertices needs
//! one transmission worth at least `L`; a loop needs one worth `L` or two
//! summing to at least `L`.

use rustc_hash::FxHashSet;

use crate::bitset::VertexSet;
use crate::error::SolveError;
use crate::exact::ExactSolution;
use crate::graph::{components, Graph};
use crate::protocol::BroadcastProtocol;

#[derive(Debug, Clone)]
struct Gadget {
    /// Path vertices; `path[0]` is adjacent to `s`, and so is the last
    /// vertex when `is_loop`.
    path: Vec<usize>,
    is_loop: bool,
}

pub fn degree2_exact(g: &Graph, s: usize) -> Result<ExactSolution, SolveError> {
    let n = g.n();
    if let Some(v) = (0..n).find(|&v| v != s && g.degree(v) > 2) {
        return Err(SolveError::Precondition(format!("vertex {v} has degree {}", g.degree(v))));
    }
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    let gadgets = gadgets(g, s)?;
    let lower = gadgets
        .iter()
        .map(|x| if x.is_loop { 1 } else { x.path.len() as u32 })
        .max()
        .unwrap_or(0)
        .max(gadgets.len() as u32);
    for t in lower..=(n.max(1) as u32 - 1).max(lower) {
        if let Some(values) = feasible(&gadgets, t) {
            return Ok(ExactSolution {
                rounds: t,
                protocol: build(n, s, t, &gadgets, &values),
            });
        }
    }
    unreachable!("a protocol with n - 1 rounds always exists")
}

fn gadgets(g: &Graph, s: usize) -> Result<Vec<Gadget>, SolveError> {
    let mut out = Vec::new();
    for comp in components(g, &VertexSet::singleton(g.n(), s)) {
        let members = comp.to_vec();
        let inner_deg = |v: usize| g.neighbors(v).iter().filter(|&&w| w != s).count();
        let edges: usize = members.iter().map(|&v| inner_deg(v)).sum::<usize>() / 2;
        if edges + 1 != members.len() {
            return Err(SolveError::Precondition("a component of G - s is a cycle".into()));
        }
        let attached: Vec<usize> = members.iter().copied().filter(|&v| g.has_edge(s, v)).collect();
        let start = if members.len() == 1 {
            members[0]
        } else {
            *attached.iter().find(|&&v| inner_deg(v) == 1).expect("attachment at an endpoint")
        };
        let mut path = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while let Some(&w) = g.neighbors(cur).iter().find(|&&w| w != s && w != prev) {
            path.push(w);
            prev = cur;
            cur = w;
        }
        out.push(Gadget {
            is_loop: attached.len() == 2,
            path,
        });
    }
    Ok(out)
}

/// Worth of the transmissions given to each gadget, if `t` rounds suffice.
fn feasible(gadgets: &[Gadget], t: u32) -> Option<Vec<Vec<u32>>> {
    let mut used = VertexSet::new(t as usize + 1);
    let mut values = vec![Vec::new(); gadgets.len()];
    // Pendants first, longest first, each taking the cheapest adequate worth;
    // an exchange argument shows this never hurts the remaining gadgets.
    let mut pendants: Vec<usize> = (0..gadgets.len()).filter(|&i| !gadgets[i].is_loop).collect();
    pendants.sort_by_key(|&i| (std::cmp::Reverse(gadgets[i].path.len()), i));
    for i in pendants {
        let need = gadgets[i].path.len() as u32;
        let v = (need..=t).find(|&v| !used.contains(v as usize))?;
        used.insert(v as usize);
        values[i].push(v);
    }
    let mut loops: Vec<usize> = (0..gadgets.len()).filter(|&i| gadgets[i].is_loop).collect();
    loops.sort_by_key(|&i| (std::cmp::Reverse(gadgets[i].path.len()), i));
    let mut failed = FxHashSet::default();
    if place_loops(gadgets, &loops, 0, t, &mut used, &mut values, &mut failed) {
        Some(values)
    } else {
        None
    }
}

fn place_loops(
    gadgets: &[Gadget],
    loops: &[usize],
    idx: usize,
    t: u32,
    used: &mut VertexSet,
    values: &mut [Vec<u32>],
    failed: &mut FxHashSet<(usize, VertexSet)>,
) -> bool {
    if idx == loops.len() {
        return true;
    }
    if failed.contains(&(idx, used.clone())) {
        return false;
    }
    let gi = loops[idx];
    let need = gadgets[gi].path.len() as u32;
    let free = |used: &VertexSet, lo: u32, skip: u32| (lo.max(1)..=t).find(|&v| v != skip && !used.contains(v as usize));
    let mut options: Vec<Vec<u32>> = Vec::new();
    if let Some(v) = free(used, need, 0) {
        options.push(vec![v]);
    }
    for big in (1..need.min(t + 1)).rev() {
        if used.contains(big as usize) {
            continue;
        }
        if let Some(small) = free(used, need - big, big) {
            if small < need && small <= big {
                options.push(vec![big, small]);
            }
        }
    }
    for opt in options {
        for &v in &opt {
            used.insert(v as usize);
        }
        values[gi] = opt.clone();
        if place_loops(gadgets, loops, idx + 1, t, used, values, failed) {
            return true;
        }
        for &v in &opt {
            used.remove(v as usize);
        }
    }
    values[gi].clear();
    failed.insert((idx, used.clone()));
    false
}

fn build(n: usize, s: usize, t: u32, gadgets: &[Gadget], values: &[Vec<u32>]) -> BroadcastProtocol {
    let mut p = BroadcastProtocol::single_source(n, s);
    for (x, vals) in gadgets.iter().zip(values) {
        let path = &x.path;
        let len = path.len();
        let h0 = t - vals[0] + 1;
        let head = if vals.len() == 1 { len } else { vals[0] as usize };
        p.assign(path[0], s, h0);
        for i in 1..head {
            p.assign(path[i], path[i - 1], h0 + i as u32);
        }
        if vals.len() == 2 {
            let h1 = t - vals[1] + 1;
            p.assign(path[len - 1], s, h1);
            for (step, i) in (head..len - 1).rev().enumerate() {
                p.assign(path[i], path[i + 1], h1 + step as u32 + 1);
            }
        }
    }
    p
}
