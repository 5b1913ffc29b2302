use crate::error::SolveError;
use crate::exact::ExactSolution;
use crate::graph::Graph;
use crate::protocol::BroadcastProtocol;

/// Optimal broadcast on a tree: each vertex informs its children in order
/// of decreasing subtree broadcast time.
pub fn tree_opt(g: &Graph, s: usize) -> Result<ExactSolution, SolveError> {
    if !g.is_tree() {
        return Err(SolveError::Precondition("input is not a tree".into()));
    }
    let n = g.n();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![s];
    parent[s] = s;
    while let Some(u) = stack.pop() {
        order.push(u);
        for &w in g.neighbors(u) {
            if parent[w] == usize::MAX {
                parent[w] = u;
                stack.push(w);
            }
        }
    }
    let mut time = vec![0u32; n];
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &u in order.iter().rev() {
        let mut ch: Vec<usize> = g.neighbors(u).iter().copied().filter(|&w| parent[w] == u && w != s).collect();
        ch.sort_by_key(|&c| (std::cmp::Reverse(time[c]), c));
        time[u] = ch.iter().enumerate().map(|(i, &c)| i as u32 + 1 + time[c]).max().unwrap_or(0);
        kids[u] = ch;
    }
    let mut p = BroadcastProtocol::single_source(n, s);
    for &u in &order {
        let base = p.round(u).unwrap();
        for (i, &c) in kids[u].iter().enumerate() {
            p.assign(c, u, base + i as u32 + 1);
        }
    }
    Ok(ExactSolution {
        rounds: time[s],
        protocol: p,
    })
}
