//! Exact solvers.

pub mod branch_bound;
pub mod degree2;
pub mod search;
pub mod subset_dp;
pub mod tree;
pub mod twt;

use std::time::Duration;

use crate::bitset::VertexSet;
use crate::error::SolveError;
use crate::graph::Graph;
use crate::protocol::BroadcastProtocol;

pub use branch_bound::{branch_bound_opt, BranchBoundResult};
pub use degree2::degree2_exact;
pub use subset_dp::{subset_dp_opt, subset_dp_opt_limited, SUBSET_DP_LIMIT};
pub use tree::tree_opt;
pub use twt::{twt_feasible, twt_opt, TwtSignature};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSolution {
    pub rounds: u32,
    pub protocol: BroadcastProtocol,
}

/// Cheapest applicable exact method: tree rule, degree-2 checker, subset DP,
/// then branch and bound. Returns the solution and the method name.
pub fn solve_exact(g: &Graph, s: usize, budget: Option<Duration>) -> Result<(ExactSolution, &'static str), SolveError> {
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    if g.is_tree() {
        return Ok((tree_opt(g, s)?, "tree"));
    }
    if (0..g.n()).all(|v| v == s || g.degree(v) <= 2) {
        return Ok((degree2_exact(g, s)?, "degree2"));
    }
    if g.n() <= SUBSET_DP_LIMIT {
        return Ok((subset_dp_opt(g, &VertexSet::singleton(g.n(), s), None)?, "subset-dp"));
    }
    let r = branch_bound_opt(g, s, 0, budget)?;
    if !r.optimal {
        return Err(SolveError::Budget);
    }
    Ok((
        ExactSolution {
            rounds: r.rounds,
            protocol: r.protocol,
        },
        "branch-bound",
    ))
}

/// Exact multi-source optimum: subset DP up to its size limit, then the
/// bitmask search scanning `t` upward.
pub fn solve_exact_multi(
    g: &Graph,
    sources: &VertexSet,
    budget: Option<Duration>,
) -> Result<(ExactSolution, &'static str), SolveError> {
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    if sources.is_empty() {
        return Err(SolveError::Precondition("no sources".into()));
    }
    if g.n() <= SUBSET_DP_LIMIT {
        return Ok((subset_dp_opt(g, sources, None)?, "subset-dp"));
    }
    let deadline = budget.map(|b| std::time::Instant::now() + b);
    let symmetry = search::Symmetry::from_components(g, sources, 32);
    let mut s = search::Search::new(g, sources, &search::Goal::broadcast(g.n()), Some(symmetry), deadline)?;
    let mut t = s.root_bound();
    loop {
        if let Some(chain) = s.solve(t)? {
            let protocol = s.chain_protocol(&chain);
            return Ok((ExactSolution { rounds: t, protocol }, "search"));
        }
        t += 1;
    }
}
