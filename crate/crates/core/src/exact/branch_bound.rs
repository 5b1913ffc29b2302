use std::time::{Duration, Instant};

use crate::bitset::VertexSet;
use crate::error::SolveError;
use crate::exact::search::{Goal, Search, Symmetry};
use crate::graph::Graph;
use crate::protocol::{greedy_complete, BroadcastProtocol};

/// Outcome of [`branch_bound_opt`]. When `optimal` is false the time budget
/// ran out and `rounds` is the best protocol found so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchBoundResult {
    pub rounds: u32,
    pub protocol: BroadcastProtocol,
    pub optimal: bool,
    pub lower_bound: u32,
}

/// Iterative deepening from the best lower bound up to a greedy incumbent.
/// `hook` is an externally certified lower bound (0 when none).
pub fn branch_bound_opt(
    g: &Graph,
    s: usize,
    hook: u32,
    budget: Option<Duration>,
) -> Result<BranchBoundResult, SolveError> {
    let n = g.n();
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    let deadline = budget.map(|b| Instant::now() + b);
    let src = VertexSet::singleton(n, s);
    let incumbent = greedy_complete(g, &BroadcastProtocol::new(&src), n as u32)
        .expect("n - 1 greedy rounds inform a connected graph");
    let upper = incumbent.rounds();
    let symmetry = Symmetry::from_components(g, &src, 32);
    let mut search = Search::new(g, &src, &Goal::broadcast(n), Some(symmetry), deadline)?;
    let log = usize::BITS - (n.max(1) - 1).leading_zeros();
    let mut lower = hook.max(search.root_bound()).max(log);
    while lower < upper {
        match search.solve(lower) {
            Ok(Some(chain)) => {
                return Ok(BranchBoundResult {
                    rounds: lower,
                    protocol: search.chain_protocol(&chain),
                    optimal: true,
                    lower_bound: lower,
                })
            }
            Ok(None) => lower += 1,
            Err(SolveError::Budget) => {
                return Ok(BranchBoundResult {
                    rounds: upper,
                    protocol: incumbent,
                    optimal: false,
                    lower_bound: lower,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BranchBoundResult {
        rounds: upper,
        protocol: incumbent,
        optimal: true,
        lower_bound: upper,
    })
}
