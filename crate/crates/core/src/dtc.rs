//! Exact solver parameterized by distance to clique.
//!
//! A solution is summarized by a [`DtcSignature`] over the modulator `X`:
//! when each vertex of `X` is informed, by what kind of vertex, who informs
//! that informer, and how many transmissions it makes. The solver enumerates
//! signatures for increasing `t` and rebuilds a protocol from each.
//!
//! Informer codes, with `k = |X|` and `X` in increasing id order:
//! `0..2^k` is a fresh clique vertex whose neighbourhood in `X` has that bit
//! pattern, `2^k + j` is the `j`-th vertex of `X`, `2^k + k + j` is the
//! informer of the `j`-th vertex of `X`, and `2^k + 2k` is the source.
//! When `s` lies in `X` its entry has `tau = 0` and the source code.

use std::collections::VecDeque;

use thiserror::Error;

use crate::bitset::VertexSet;
use crate::error::SolveError;
use crate::exact::ExactSolution;
use crate::flow::{max_flow, FlowNetwork};
use crate::graph::{distances, Graph};
use crate::protocol::{validate, BroadcastProtocol};

/// Smallest `X` with `|X| <= k` and `g - X` a clique, by branching on
/// non-adjacent pairs.
pub fn find_clique_modulator(g: &Graph, k: usize) -> Option<VertexSet> {
    fn branch(g: &Graph, removed: &mut Vec<bool>, budget: usize) -> bool {
        let n = g.n();
        let pair = (0..n)
            .filter(|&u| !removed[u])
            .find_map(|u| (u + 1..n).find(|&v| !removed[v] && !g.has_edge(u, v)).map(|v| (u, v)));
        let Some((u, v)) = pair else { return true };
        if budget == 0 {
            return false;
        }
        for w in [u, v] {
            removed[w] = true;
            if branch(g, removed, budget - 1) {
                return true;
            }
            removed[w] = false;
        }
        false
    }
    for budget in 0..=k.min(g.n()) {
        let mut removed = vec![false; g.n()];
        if branch(g, &mut removed, budget) {
            let x: Vec<usize> = (0..g.n()).filter(|&v| removed[v]).collect();
            return Some(VertexSet::from_slice(g.n(), &x));
        }
    }
    None
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n.max(1) - 1).leading_zeros()
}

/// `|X| + ceil(log2 |V \ X|)`.
pub fn dtc_upper_bound(g: &Graph, x: &VertexSet) -> u32 {
    x.len() as u32 + ceil_log2(g.n() - x.len())
}

/// Decoded informer code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Informer {
    /// A fresh clique vertex with this neighbourhood pattern in `X`.
    Class(u32),
    Modulator(usize),
    SameAs(usize),
    Source,
}

impl Informer {
    pub fn decode(code: u32, k: usize) -> Option<Informer> {
        let base = 1u32 << k;
        let k32 = k as u32;
        Some(match code {
            c if c < base => Informer::Class(c),
            c if c < base + k32 => Informer::Modulator((c - base) as usize),
            c if c < base + 2 * k32 => Informer::SameAs((c - base - k32) as usize),
            c if c == base + 2 * k32 => Informer::Source,
            _ => return None,
        })
    }

    pub fn encode(self, k: usize) -> u32 {
        let base = 1u32 << k;
        match self {
            Informer::Class(q) => q,
            Informer::Modulator(j) => base + j as u32,
            Informer::SameAs(j) => base + k as u32 + j as u32,
            Informer::Source => base + 2 * k as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DtcEntry {
    pub vertex: usize,
    pub tau: u32,
    pub code: u32,
    /// Informer of a fresh clique informer, when it lies in `X` (index).
    pub b: Option<usize>,
    /// Number of transmissions made by `vertex`.
    pub sends: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DtcSignature {
    pub t: u32,
    /// One entry per vertex of `X`, in increasing id order.
    pub entries: Vec<DtcEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DtcError {
    #[error("inconsistent signature: {0}")]
    Inconsistent(String),
    #[error("modulator informers cannot be placed: {0}")]
    Informers(String),
    #[error("informers of informers cannot be scheduled: {0}")]
    Connection(String),
    #[error("modulator send counts cannot be met by the flow assignment")]
    Flow,
    #[error("{0} clique vertices remain uninformed after round t")]
    Leftover(usize),
}

struct Setup<'a> {
    g: &'a Graph,
    s: usize,
    x: Vec<usize>,
    /// Index in `x`, for vertices of `X`.
    xi: Vec<Option<usize>>,
    /// Clique vertices other than `s`, grouped by pattern.
    classes: Vec<(u32, Vec<usize>)>,
}

impl<'a> Setup<'a> {
    fn new(g: &'a Graph, s: usize, x: &VertexSet) -> Result<Setup<'a>, SolveError> {
        let n = g.n();
        let xs = x.to_vec();
        if xs.len() > 16 {
            return Err(SolveError::TooLarge(format!("modulator of size {} exceeds 16", xs.len())));
        }
        if !g.is_clique(&x.complement()) {
            return Err(SolveError::Precondition("G - X is not a clique".into()));
        }
        let mut xi = vec![None; n];
        for (i, &v) in xs.iter().enumerate() {
            xi[v] = Some(i);
        }
        let pattern: Vec<u32> = (0..n)
            .map(|v| {
                g.neighbors(v)
                    .iter()
                    .filter_map(|&w| xi[w])
                    .fold(0, |m, i| m | 1 << i)
            })
            .collect();
        let mut classes: Vec<(u32, Vec<usize>)> = Vec::new();
        for v in (0..n).filter(|&v| xi[v].is_none() && v != s) {
            match classes.iter_mut().find(|c| c.0 == pattern[v]) {
                Some(c) => c.1.push(v),
                None => classes.push((pattern[v], vec![v])),
            }
        }
        classes.sort();
        Ok(Setup {
            g,
            s,
            x: xs,
            xi,
            classes,
        })
    }

    fn k(&self) -> usize {
        self.x.len()
    }

    fn class_size(&self, q: u32) -> usize {
        self.classes.iter().find(|c| c.0 == q).map_or(0, |c| c.1.len())
    }
}

/// Clique vertex informing vertices of `X`.
struct Informer1 {
    vertex: usize,
    b: Option<usize>,
    /// Earliest round it must send to `X`.
    deadline: u32,
}

pub fn reconstruct(g: &Graph, s: usize, x: &VertexSet, sig: &DtcSignature) -> Result<BroadcastProtocol, DtcError> {
    let setup = Setup::new(g, s, x).map_err(|e| DtcError::Inconsistent(e.to_string()))?;
    reconstruct_with(&setup, sig)
}

fn reconstruct_with(st: &Setup, sig: &DtcSignature) -> Result<BroadcastProtocol, DtcError> {
    let g = st.g;
    let n = g.n();
    let k = st.k();
    let t = sig.t;
    let bad = |m: String| Err(DtcError::Inconsistent(m));
    if sig.entries.len() != k || sig.entries.iter().zip(&st.x).any(|(e, &v)| e.vertex != v) {
        return bad("entries must list X in increasing order".into());
    }
    let source_code = Informer::Source.encode(k);
    for e in &sig.entries {
        if e.vertex == st.s {
            if e.tau != 0 || e.code != source_code || e.b.is_some() {
                return bad(format!("source entry {} must have tau 0 and the source code", e.vertex));
            }
        } else if e.tau == 0 || e.tau > t {
            return bad(format!("tau of {} outside [1, t]", e.vertex));
        }
        if e.sends > t - e.tau {
            return bad(format!("{} cannot send {} times", e.vertex, e.sends));
        }
        if e.b.is_some_and(|j| j >= k) {
            return bad(format!("b of {} out of range", e.vertex));
        }
    }

    // Stage 1: informers of X and their fixed transmissions.
    let mut inf: Vec<Option<u32>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    inf[st.s] = Some(0);
    let mut busy: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut informers: Vec<Informer1> = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; k];
    let mut used = vec![false; n];
    for (i, e) in sig.entries.iter().enumerate() {
        let v = e.vertex;
        inf[v] = Some(e.tau);
        if v == st.s {
            continue;
        }
        let sender = match Informer::decode(e.code, k) {
            None => return bad(format!("code {} of {v} out of range", e.code)),
            Some(Informer::Source) => {
                if st.xi[st.s].is_some() {
                    return bad("source code used while s lies in X".into());
                }
                st.s
            }
            Some(Informer::Modulator(j)) => {
                if j >= k || j == i {
                    return bad(format!("bad modulator informer for {v}"));
                }
                if sig.entries[j].tau >= e.tau {
                    return Err(DtcError::Informers(format!("{} is informed after {v}", st.x[j])));
                }
                st.x[j]
            }
            Some(Informer::SameAs(j)) => {
                let Some(a) = (j < i).then_some(owner[j]).flatten() else {
                    return bad(format!("{v} shares the informer of a later or non-clique informer"));
                };
                let a_rec = &mut informers[a];
                a_rec.deadline = a_rec.deadline.min(e.tau);
                owner[i] = Some(a);
                a_rec.vertex
            }
            Some(Informer::Class(q)) => {
                if q >> i & 1 == 0 {
                    return Err(DtcError::Informers(format!("class {q:#b} is not adjacent to {v}")));
                }
                let Some(a) = st
                    .classes
                    .iter()
                    .find(|c| c.0 == q)
                    .and_then(|c| c.1.iter().copied().find(|&w| !used[w]))
                else {
                    return Err(DtcError::Informers(format!("no free clique vertex of class {q:#b}")));
                };
                if let Some(j) = e.b {
                    if q >> j & 1 == 0 || j == i {
                        return Err(DtcError::Connection(format!("{} cannot inform class {q:#b}", st.x[j])));
                    }
                }
                used[a] = true;
                owner[i] = Some(informers.len());
                informers.push(Informer1 {
                    vertex: a,
                    b: e.b,
                    deadline: e.tau,
                });
                a
            }
        };
        if !g.has_edge(sender, v) {
            return Err(DtcError::Informers(format!("{sender} is not adjacent to {v}")));
        }
        if busy[sender].contains(&e.tau) {
            return Err(DtcError::Informers(format!("{sender} sends twice in round {}", e.tau)));
        }
        busy[sender].push(e.tau);
        parent[v] = Some(sender);
    }
    if sig.entries.iter().any(|e| e.b.is_some() && !matches!(Informer::decode(e.code, k), Some(Informer::Class(_)))) {
        return bad("b is only meaningful for fresh clique informers".into());
    }

    // Modulator vertices: fixed sends, then informers of informers (latest
    // feasible slot first), then their share of clique vertices.
    let mut quota_slots: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (j, e) in sig.entries.iter().enumerate() {
        let v = e.vertex;
        let mut mine: Vec<usize> = (0..informers.len()).filter(|&a| informers[a].b == Some(j)).collect();
        let fixed = busy[v].len() + mine.len();
        if (e.sends as usize) < fixed {
            return bad(format!("{v} sends fewer times than its fixed transmissions"));
        }
        let free: Vec<u32> = (e.tau + 1..=t)
            .filter(|r| !busy[v].contains(r))
            .take(e.sends as usize - busy[v].len())
            .collect();
        let mut taken = vec![false; free.len()];
        mine.sort_by_key(|&a| std::cmp::Reverse(informers[a].deadline));
        for a in mine {
            let dl = informers[a].deadline;
            let Some(slot) = (0..free.len()).rev().find(|&p| !taken[p] && free[p] < dl) else {
                return Err(DtcError::Connection(format!("{v} has no idle round before {dl}")));
            };
            taken[slot] = true;
            let w = informers[a].vertex;
            inf[w] = Some(free[slot]);
            parent[w] = Some(v);
        }
        quota_slots[j] = (0..free.len()).filter(|&p| !taken[p]).map(|p| free[p]).collect();
    }

    // Flow: which classes each modulator vertex informs.
    let rest: Vec<(u32, Vec<usize>)> = st
        .classes
        .iter()
        .map(|(q, vs)| (*q, vs.iter().copied().filter(|&w| !used[w]).collect::<Vec<_>>()))
        .filter(|c| !c.1.is_empty())
        .collect();
    let m = rest.len();
    let (src, sink) = (0, k + m + 1);
    let mut net = FlowNetwork::new(k + m + 2);
    let mut arcs = Vec::new();
    for j in 0..k {
        net.add_arc(src, 1 + j, quota_slots[j].len() as i64);
        for (c, (q, _)) in rest.iter().enumerate() {
            if q >> j & 1 == 1 {
                arcs.push((j, c, net.add_arc(1 + j, 1 + k + c, i64::MAX / 4)));
            }
        }
    }
    for (c, (_, vs)) in rest.iter().enumerate() {
        net.add_arc(1 + k + c, sink, vs.len() as i64);
    }
    let flow = max_flow(&net, src, sink);
    if flow.value != quota_slots.iter().map(|q| q.len() as i64).sum::<i64>() {
        return Err(DtcError::Flow);
    }
    let mut next_in_class = vec![0usize; m];
    let mut reserved = vec![false; n];
    let mut cursor = vec![0usize; k];
    for &(j, c, arc) in &arcs {
        for _ in 0..flow.flows[arc] {
            let w = rest[c].1[next_in_class[c]];
            next_in_class[c] += 1;
            reserved[w] = true;
            inf[w] = Some(quota_slots[j][cursor[j]]);
            parent[w] = Some(st.x[j]);
            cursor[j] += 1;
        }
    }

    // Clique side, round by round: informers due earliest first, then the
    // unreserved clique vertices.
    let mut pending: Vec<usize> = (0..informers.len()).filter(|&a| informers[a].b.is_none()).collect();
    pending.sort_by_key(|&a| (informers[a].deadline, a));
    let mut generic: Vec<usize> = rest.iter().flat_map(|c| c.1.iter().copied()).filter(|&w| !reserved[w]).collect();
    generic.sort_unstable();
    let mut generic: VecDeque<usize> = generic.into();
    let clique: Vec<usize> = (0..n).filter(|&v| st.xi[v].is_none()).collect();
    let mut pi = 0;
    for r in 1..=t {
        for &u in &clique {
            if !inf[u].is_some_and(|iu| iu < r) || busy[u].contains(&r) {
                continue;
            }
            let w = if pi < pending.len() {
                let a = pending[pi];
                pi += 1;
                informers[a].vertex
            } else if let Some(w) = generic.pop_front() {
                w
            } else {
                break;
            };
            inf[w] = Some(r);
            parent[w] = Some(u);
            busy[u].push(r);
        }
    }
    for &a in &pending {
        let ia = &informers[a];
        if !inf[ia.vertex].is_some_and(|r| r < ia.deadline) {
            return Err(DtcError::Connection(format!("clique informer {} not ready by round {}", ia.vertex, ia.deadline)));
        }
    }
    if !generic.is_empty() {
        return Err(DtcError::Leftover(generic.len()));
    }
    let sources = VertexSet::singleton(n, st.s);
    let mut p = BroadcastProtocol::new(&sources);
    for v in 0..n {
        if let (Some(u), Some(r)) = (parent[v], inf[v]) {
            p.assign(v, u, r);
        }
    }
    match validate(g, &sources, &p) {
        Ok(rounds) if rounds <= t => Ok(p),
        // Informers of X that were themselves informed late.
        Ok(_) | Err(_) => Err(DtcError::Connection("informers are not informed in time".into())),
    }
}

/// The signature of `p` with respect to `X`.
pub fn extract_signature(g: &Graph, s: usize, x: &VertexSet, p: &BroadcastProtocol) -> DtcSignature {
    let xs = x.to_vec();
    let k = xs.len();
    let idx = |v: usize| xs.iter().position(|&w| w == v);
    let sends = p.send_rounds();
    let mut entries: Vec<DtcEntry> = Vec::new();
    for (i, &v) in xs.iter().enumerate() {
        let mut entry = DtcEntry {
            vertex: v,
            tau: p.round(v).unwrap_or(0),
            code: Informer::Source.encode(k),
            b: None,
            sends: sends[v].len() as u32,
        };
        if v != s {
            let a = p.parent(v).expect("complete protocol");
            entry.code = if let Some(j) = idx(a) {
                Informer::Modulator(j).encode(k)
            } else if a == s {
                Informer::Source.encode(k)
            } else if let Some(j) = (0..i).find(|&j| p.parent(xs[j]) == Some(a)) {
                Informer::SameAs(j).encode(k)
            } else {
                entry.b = p.parent(a).and_then(idx);
                let q = g.neighbors(a).iter().filter_map(|&w| idx(w)).fold(0u32, |m, j| m | 1 << j);
                Informer::Class(q).encode(k)
            };
        }
        entries.push(entry);
    }
    DtcSignature { t: p.rounds(), entries }
}

/// Options for one modulator vertex: `(code, b)`.
fn code_options(st: &Setup, i: usize) -> Vec<(u32, Option<usize>)> {
    let k = st.k();
    let v = st.x[i];
    let mut out = Vec::new();
    for (q, _) in &st.classes {
        if q >> i & 1 == 1 {
            out.push((Informer::Class(*q).encode(k), None));
            for j in (0..k).filter(|&j| j != i && q >> j & 1 == 1) {
                out.push((Informer::Class(*q).encode(k), Some(j)));
            }
        }
    }
    for j in (0..k).filter(|&j| j != i && st.g.has_edge(st.x[j], v)) {
        out.push((Informer::Modulator(j).encode(k), None));
    }
    for j in 0..i {
        if st.x[j] != st.s {
            out.push((Informer::SameAs(j).encode(k), None));
        }
    }
    if st.xi[st.s].is_none() && st.g.has_edge(st.s, v) {
        out.push((Informer::Source.encode(k), None));
    }
    out
}

struct Enumerator<'a> {
    st: &'a Setup<'a>,
    t: u32,
    dist: Vec<u32>,
    options: Vec<Vec<(u32, Option<usize>)>>,
    sig: DtcSignature,
    tried: u64,
}

impl Enumerator<'_> {
    fn choose(&mut self, i: usize) -> Option<BroadcastProtocol> {
        let k = self.st.k();
        if i == k {
            return self.counts(0);
        }
        if self.st.x[i] == self.st.s {
            return self.choose(i + 1);
        }
        for tau in self.dist[i].max(1)..=self.t {
            for oi in 0..self.options[i].len() {
                let (code, b) = self.options[i][oi];
                if !self.prefix_ok(i, tau, code) {
                    continue;
                }
                let e = &mut self.sig.entries[i];
                e.tau = tau;
                e.code = code;
                e.b = b;
                if let Some(p) = self.choose(i + 1) {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Checks that only involve entries before `i`.
    fn prefix_ok(&self, i: usize, tau: u32, code: u32) -> bool {
        let k = self.st.k();
        match Informer::decode(code, k) {
            Some(Informer::Modulator(j)) if j < i => self.sig.entries[j].tau < tau,
            Some(Informer::SameAs(j)) => {
                matches!(Informer::decode(self.sig.entries[j].code, k), Some(Informer::Class(_)))
                    && (0..i).all(|h| {
                        self.sig.entries[h].tau != tau
                            || !(h == j || self.sig.entries[h].code == Informer::SameAs(j).encode(k))
                    })
            }
            Some(Informer::Class(q)) => {
                // A fresh informer needs a vertex of its class not yet claimed.
                let claimed = (0..i)
                    .filter(|&h| self.sig.entries[h].code == q && self.st.x[h] != self.st.s)
                    .count();
                claimed < self.st.class_size(q)
            }
            Some(Informer::Source) => (0..i).all(|h| {
                self.sig.entries[h].tau != tau || self.sig.entries[h].code != Informer::Source.encode(k)
            }),
            _ => true,
        }
    }

    fn counts(&mut self, j: usize) -> Option<BroadcastProtocol> {
        let k = self.st.k();
        if j == k {
            self.tried += 1;
            return reconstruct_with(self.st, &self.sig).ok();
        }
        let tau = self.sig.entries[j].tau;
        let fixed = self.fixed_sends(j);
        if fixed > self.t - tau {
            return None;
        }
        for c in fixed..=self.t - tau {
            self.sig.entries[j].sends = c;
            if let Some(p) = self.counts(j + 1) {
                return Some(p);
            }
        }
        None
    }

    fn fixed_sends(&self, j: usize) -> u32 {
        let k = self.st.k();
        let to_x = self
            .sig
            .entries
            .iter()
            .filter(|e| e.vertex != self.st.s && Informer::decode(e.code, k) == Some(Informer::Modulator(j)))
            .count();
        let to_a = self.sig.entries.iter().filter(|e| e.b == Some(j)).count();
        (to_x + to_a) as u32
    }
}

/// Result of [`dtc_solve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtcSolution {
    pub solution: ExactSolution,
    pub signature: DtcSignature,
    /// Signatures passed to reconstruction.
    pub tried: u64,
}

/// Minimum rounds over all signatures, scanning `t` upward from
/// `ceil(log2 n)`; the first success in enumeration order is returned.
pub fn dtc_solve(g: &Graph, s: usize, x: &VertexSet) -> Result<DtcSolution, SolveError> {
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    let st = Setup::new(g, s, x)?;
    let k = st.k();
    let dist: Vec<u32> = {
        let d = distances(g, s);
        st.x.iter().map(|&v| d[v].unwrap()).collect()
    };
    let upper = dtc_upper_bound(g, x);
    let lower = ceil_log2(g.n());
    let mut tried = 0;
    for t in lower..=upper {
        let entries = st
            .x
            .iter()
            .map(|&v| DtcEntry {
                vertex: v,
                tau: 0,
                code: Informer::Source.encode(k),
                b: None,
                sends: 0,
            })
            .collect();
        let mut en = Enumerator {
            st: &st,
            t,
            dist: dist.clone(),
            options: (0..k).map(|i| code_options(&st, i)).collect(),
            sig: DtcSignature { t, entries },
            tried: 0,
        };
        let found = en.choose(0);
        tried += en.tried;
        if let Some(protocol) = found {
            let rounds = protocol.rounds();
            debug_assert!(rounds <= t);
            return Ok(DtcSolution {
                signature: en.sig,
                solution: ExactSolution { rounds, protocol },
                tried,
            });
        }
    }
    Err(SolveError::Precondition(format!(
        "no signature succeeded up to the bound {upper}"
    )))
}
