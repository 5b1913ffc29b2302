//! Broadcast protocols as parent pointers plus time-stamps.
//!
//! A vertex `v` with `parent(v) = u` and `round(v) = r` is informed by `u`
//! in round `r`. Sources carry round 0 and no parent.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bitset::VertexSet;
use crate::error::{content_lines, parse_num, ParseError};
use crate::graph::{components, Graph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("vertex {0} is never informed")]
    Uninformed(usize),
    #[error("parent {parent} of vertex {v} is not a neighbour")]
    NonEdgeParent { v: usize, parent: usize },
    #[error("vertex {v} sends twice in round {round}")]
    DoubleSend { v: usize, round: u32 },
    #[error("vertex {child} is stamped {child_round}, not after its parent {parent} ({parent_round})")]
    ChildBeforeParent {
        child: usize,
        parent: usize,
        child_round: u32,
        parent_round: u32,
    },
    #[error("parent pointers through vertex {0} form a cycle")]
    Cycle(usize),
    #[error("protocol sources differ from the requested sources")]
    SourceMismatch,
    #[error("source {0} has a parent")]
    SourceHasParent(usize),
    #[error("vertex {0} has round 0 but is not a source")]
    ZeroRound(usize),
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("sender {sender} is not informed before round {round}")]
    SenderUninformed { sender: usize, round: u32 },
    #[error("receiver {receiver} is informed twice (round {round})")]
    ReceiverInformed { receiver: usize, round: u32 },
    #[error("budget of {budget} rounds exhausted with {uninformed} vertices uninformed")]
    BudgetExhausted { budget: u32, uninformed: usize },
}

/// Possibly partial protocol: vertices without a parent that are not
/// sources are still unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BroadcastProtocol {
    sources: VertexSet,
    parent: Vec<Option<usize>>,
    tau: Vec<u32>,
}

/// One transmission `sender -> receiver` in `round`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transmission {
    pub round: u32,
    pub sender: usize,
    pub receiver: usize,
}

pub type RoundSchedule = Vec<Transmission>;

impl BroadcastProtocol {
    pub fn new(sources: &VertexSet) -> Self {
        let n = sources.universe();
        BroadcastProtocol {
            sources: sources.clone(),
            parent: vec![None; n],
            tau: vec![0; n],
        }
    }

    pub fn single_source(n: usize, s: usize) -> Self {
        Self::new(&VertexSet::singleton(n, s))
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn sources(&self) -> &VertexSet {
        &self.sources
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Round in which `v` is informed: 0 for sources, `None` if unassigned.
    pub fn round(&self, v: usize) -> Option<u32> {
        if self.sources.contains(v) {
            Some(0)
        } else {
            self.parent[v].map(|_| self.tau[v])
        }
    }

    pub fn is_assigned(&self, v: usize) -> bool {
        self.sources.contains(v) || self.parent[v].is_some()
    }

    pub fn assign(&mut self, v: usize, parent: usize, round: u32) {
        assert!(!self.sources.contains(v), "cannot assign a parent to source {v}");
        self.parent[v] = Some(parent);
        self.tau[v] = round;
    }

    pub fn unassign(&mut self, v: usize) {
        self.parent[v] = None;
        self.tau[v] = 0;
    }

    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| !self.is_assigned(v)).collect()
    }

    pub fn is_complete(&self) -> bool {
        (0..self.n()).all(|v| self.is_assigned(v))
    }

    /// Largest stamp; 0 when nothing is transmitted.
    pub fn rounds(&self) -> u32 {
        (0..self.n())
            .filter(|&v| self.parent[v].is_some())
            .map(|v| self.tau[v])
            .max()
            .unwrap_or(0)
    }

    /// All transmissions sorted by (round, sender, receiver).
    pub fn schedule(&self) -> RoundSchedule {
        let mut out: Vec<_> = (0..self.n())
            .filter_map(|v| {
                self.parent[v].map(|p| Transmission {
                    round: self.tau[v],
                    sender: p,
                    receiver: v,
                })
            })
            .collect();
        out.sort();
        out
    }

    /// Rounds in which each vertex transmits, ascending.
    pub fn send_rounds(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.n()];
        for v in 0..self.n() {
            if let Some(p) = self.parent[v] {
                out[p].push(self.tau[v]);
            }
        }
        for l in &mut out {
            l.sort_unstable();
        }
        out
    }

    /// Relabels vertices: vertex `v` of `self` becomes `map[v]` in a protocol
    /// over `n` vertices.
    pub fn relabel(&self, map: &[usize], n: usize) -> BroadcastProtocol {
        let sources = VertexSet::from_slice(n, &self.sources.iter().map(|v| map[v]).collect::<Vec<_>>());
        let mut out = BroadcastProtocol::new(&sources);
        for v in 0..self.n() {
            if let Some(p) = self.parent[v] {
                out.assign(map[v], map[p], self.tau[v]);
            }
        }
        out
    }

    /// Text form: `t k`, the sources, then `v parent round` per informed
    /// non-source vertex in increasing order of `v`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rounds(), self.sources.len());
        out.push_str(&self.sources.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        out.push('\n');
        for v in 0..self.n() {
            if let Some(p) = self.parent[v] {
                out.push_str(&format!("{v} {p} {}\n", self.tau[v]));
            }
        }
        out
    }
}

pub fn parse_protocol(text: &str, n: usize) -> Result<BroadcastProtocol, ParseError> {
    let mut lines = content_lines(text);
    let (l0, head) = lines.next().ok_or_else(|| ParseError::new(1, "missing header"))?;
    if head.len() != 2 {
        return Err(ParseError::new(l0, "header must be `t k`"));
    }
    let t: u32 = parse_num(head[0], l0, "round count")?;
    let k: usize = parse_num(head[1], l0, "source count")?;
    let (l1, src) = lines.next().ok_or_else(|| ParseError::new(l0, "missing source line"))?;
    let mut sources = VertexSet::new(n);
    for tok in &src {
        let v: usize = parse_num(tok, l1, "source")?;
        if v >= n {
            return Err(ParseError::new(l1, format!("source {v} out of range")));
        }
        sources.insert(v);
    }
    if sources.len() != k || src.len() != k {
        return Err(ParseError::new(l1, format!("expected {k} distinct sources")));
    }
    let mut p = BroadcastProtocol::new(&sources);
    for (ln, toks) in lines {
        if toks.len() != 3 {
            return Err(ParseError::new(ln, "line must be `v parent round`"));
        }
        let v: usize = parse_num(toks[0], ln, "vertex")?;
        let u: usize = parse_num(toks[1], ln, "parent")?;
        let r: u32 = parse_num(toks[2], ln, "round")?;
        if v >= n || u >= n {
            return Err(ParseError::new(ln, "vertex out of range"));
        }
        if p.is_assigned(v) {
            return Err(ParseError::new(ln, format!("vertex {v} listed twice or is a source")));
        }
        p.assign(v, u, r);
    }
    if p.rounds() != t {
        return Err(ParseError::new(l0, format!("declared {t} rounds, stamps reach {}", p.rounds())));
    }
    Ok(p)
}

/// Checks every protocol invariant and that all vertices are informed;
/// returns the number of rounds used.
pub fn validate(g: &Graph, sources: &VertexSet, p: &BroadcastProtocol) -> Result<u32, ProtocolError> {
    check_structure(g, sources, p)?;
    if let Some(v) = (0..g.n()).find(|&v| !p.is_assigned(v)) {
        return Err(ProtocolError::Uninformed(v));
    }
    Ok(p.rounds())
}

/// The validator without the completeness requirement.
pub fn validate_partial(g: &Graph, sources: &VertexSet, p: &BroadcastProtocol) -> Result<u32, ProtocolError> {
    check_structure(g, sources, p)?;
    Ok(p.rounds())
}

fn check_structure(g: &Graph, sources: &VertexSet, p: &BroadcastProtocol) -> Result<(), ProtocolError> {
    let n = g.n();
    if p.n() != n || sources.universe() != n || &p.sources != sources || sources.is_empty() {
        return Err(ProtocolError::SourceMismatch);
    }
    for v in 0..n {
        let Some(u) = p.parent[v] else { continue };
        if sources.contains(v) {
            return Err(ProtocolError::SourceHasParent(v));
        }
        if u >= n {
            return Err(ProtocolError::OutOfRange(u));
        }
        if !g.has_edge(u, v) {
            return Err(ProtocolError::NonEdgeParent { v, parent: u });
        }
        if p.tau[v] == 0 {
            return Err(ProtocolError::ZeroRound(v));
        }
    }
    // Walk parent chains; a chain longer than n must revisit a vertex.
    for v in 0..n {
        let mut u = v;
        let mut steps = 0;
        while let Some(w) = p.parent[u] {
            steps += 1;
            if steps > n {
                return Err(ProtocolError::Cycle(v));
            }
            u = w;
        }
        if p.parent[v].is_some() && !sources.contains(u) {
            return Err(ProtocolError::Uninformed(u));
        }
    }
    for v in 0..n {
        let Some(u) = p.parent[v] else { continue };
        let pr = p.round(u).unwrap_or(0);
        if p.tau[v] <= pr {
            return Err(ProtocolError::ChildBeforeParent {
                child: v,
                parent: u,
                child_round: p.tau[v],
                parent_round: pr,
            });
        }
    }
    for (u, rounds) in p.send_rounds().iter().enumerate() {
        if let Some(w) = rounds.windows(2).find(|w| w[0] == w[1]) {
            return Err(ProtocolError::DoubleSend { v: u, round: w[0] });
        }
    }
    Ok(())
}

/// Builds a (possibly partial) protocol from a transcript.
pub fn from_schedule(
    g: &Graph,
    sources: &VertexSet,
    sched: &[Transmission],
) -> Result<BroadcastProtocol, ProtocolError> {
    let mut order = sched.to_vec();
    order.sort();
    let mut p = BroadcastProtocol::new(sources);
    for (i, x) in order.iter().enumerate() {
        if x.sender >= g.n() || x.receiver >= g.n() {
            return Err(ProtocolError::OutOfRange(x.sender.max(x.receiver)));
        }
        if x.round == 0 {
            return Err(ProtocolError::ZeroRound(x.receiver));
        }
        match p.round(x.sender) {
            Some(r) if r < x.round => {}
            _ => {
                return Err(ProtocolError::SenderUninformed {
                    sender: x.sender,
                    round: x.round,
                })
            }
        }
        if p.is_assigned(x.receiver) {
            return Err(ProtocolError::ReceiverInformed {
                receiver: x.receiver,
                round: x.round,
            });
        }
        if i > 0 && order[i - 1].round == x.round && order[i - 1].sender == x.sender {
            return Err(ProtocolError::DoubleSend {
                v: x.sender,
                round: x.round,
            });
        }
        if !g.has_edge(x.sender, x.receiver) {
            return Err(ProtocolError::NonEdgeParent {
                v: x.receiver,
                parent: x.sender,
            });
        }
        p.assign(x.receiver, x.sender, x.round);
    }
    Ok(p)
}

/// Extends `partial` round by round: in each round, idle informed vertices
/// are matched to unassigned neighbours by a maximum matching (senders and
/// receivers tried in increasing id order).
pub fn greedy_complete(
    g: &Graph,
    partial: &BroadcastProtocol,
    budget: u32,
) -> Result<BroadcastProtocol, ProtocolError> {
    greedy_complete_with(g, partial, budget, |_, _| true)
}

/// [`greedy_complete`] restricted to transmissions accepted by `allow`.
pub fn greedy_complete_with(
    g: &Graph,
    partial: &BroadcastProtocol,
    budget: u32,
    allow: impl Fn(usize, usize) -> bool,
) -> Result<BroadcastProtocol, ProtocolError> {
    let n = g.n();
    let mut p = partial.clone();
    let mut remaining = p.unassigned().len();
    let mut busy: Vec<Vec<u32>> = p.send_rounds();
    let mut round = 0;
    while remaining > 0 && round < budget {
        round += 1;
        let senders: Vec<usize> = (0..n)
            .filter(|&v| matches!(p.round(v), Some(r) if r < round) && !busy[v].contains(&round))
            .collect();
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for &u in &senders {
            let mut seen = vec![false; n];
            kuhn(g, &p, &allow, u, &mut owner, &mut seen);
        }
        for v in 0..n {
            if let Some(u) = owner[v] {
                p.assign(v, u, round);
                busy[u].push(round);
                remaining -= 1;
            }
        }
    }
    if remaining > 0 {
        return Err(ProtocolError::BudgetExhausted {
            budget,
            uninformed: remaining,
        });
    }
    Ok(p)
}

fn kuhn(
    g: &Graph,
    p: &BroadcastProtocol,
    allow: &impl Fn(usize, usize) -> bool,
    u: usize,
    owner: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &v in g.neighbors(u) {
        if seen[v] || p.is_assigned(v) || !allow(u, v) {
            continue;
        }
        seen[v] = true;
        if owner[v].is_none_or(|w| kuhn(g, p, allow, w, owner, seen)) {
            owner[v] = Some(u);
            return true;
        }
    }
    false
}

/// For each component of `g - s_set` (indexed as in [`components`]), the
/// earliest round in which a vertex of `s_set` informs one of its vertices.
pub fn arrival_times(g: &Graph, s_set: &VertexSet, p: &BroadcastProtocol) -> BTreeMap<usize, u32> {
    let mut out = BTreeMap::new();
    if s_set.is_empty() {
        return out;
    }
    let comps = components(g, s_set);
    let mut comp_of = vec![usize::MAX; g.n()];
    for (i, c) in comps.iter().enumerate() {
        for v in c.iter() {
            comp_of[v] = i;
        }
    }
    for v in 0..g.n() {
        if let Some(u) = p.parent(v) {
            if s_set.contains(u) && comp_of[v] != usize::MAX {
                let r = p.round(v).unwrap();
                let e = out.entry(comp_of[v]).or_insert(r);
                *e = (*e).min(r);
            }
        }
    }
    out
}
