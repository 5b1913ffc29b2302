//! Depth-first search over informed sets with memoization, admissible
//! pruning and optional symmetry reduction between interchangeable
//! components. Supports up to 128 vertices.

use std::time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::bitset::VertexSet;
use crate::canon::canonical_form;
use crate::error::SolveError;
use crate::graph::{components, Graph};
use crate::protocol::BroadcastProtocol;

pub const SEARCH_LIMIT: usize = 128;

/// Groups of interchangeable components. Each component lists its vertices
/// in canonical position order; mapping position `i` of one component of a
/// class to position `i` of another must be an automorphism of the graph
/// fixing every vertex outside the class.
#[derive(Debug, Clone, Default)]
pub struct Symmetry {
    pub classes: Vec<Vec<Vec<usize>>>,
}

impl Symmetry {
    /// Classes of isomorphic components of `G - rest` with identical
    /// attachments to `rest`. Components larger than `max_size` are left out.
    pub fn from_components(g: &Graph, rest: &VertexSet, max_size: usize) -> Symmetry {
        let rest_ids = rest.to_vec();
        let mut by_code: std::collections::BTreeMap<Vec<u64>, Vec<Vec<usize>>> = Default::default();
        for comp in components(g, rest) {
            if comp.len() > max_size.min(32) {
                continue;
            }
            let verts = comp.to_vec();
            let sub = g.induced(&verts);
            let colors: Vec<u64> = verts
                .iter()
                .map(|&v| {
                    // Attachment encoded as the sorted list of rest neighbors,
                    // hashed into one word; collisions are resolved below.
                    let attach: Vec<usize> = rest_ids.iter().copied().filter(|&r| g.has_edge(v, r)).collect();
                    fx(&attach)
                })
                .collect();
            let form = canonical_form(&sub, &colors);
            let ordered: Vec<usize> = form.order.iter().map(|&i| verts[i]).collect();
            by_code.entry(form.code).or_default().push(ordered);
        }
        let mut classes = Vec::new();
        for (_, comps) in by_code {
            // Split hash-equal classes whose attachments actually differ.
            let mut groups: Vec<Vec<Vec<usize>>> = Vec::new();
            for c in comps {
                let attach = |c: &Vec<usize>| -> Vec<Vec<usize>> {
                    c.iter()
                        .map(|&v| rest_ids.iter().copied().filter(|&r| g.has_edge(v, r)).collect())
                        .collect()
                };
                match groups.iter_mut().find(|grp| attach(&grp[0]) == attach(&c)) {
                    Some(grp) => grp.push(c),
                    None => groups.push(vec![c]),
                }
            }
            classes.extend(groups.into_iter().filter(|grp| grp.len() > 1));
        }
        Symmetry { classes }
    }
}

fn fx(items: &[usize]) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = rustc_hash::FxHasher::default();
    items.hash(&mut h);
    h.finish()
}

/// What the search must achieve: every vertex of `required` informed and at
/// least one vertex of each `touch` group informed.
#[derive(Debug, Clone)]
pub struct Goal {
    pub required: VertexSet,
    pub touch: Vec<VertexSet>,
}

impl Goal {
    pub fn broadcast(n: usize) -> Goal {
        Goal {
            required: VertexSet::full(n),
            touch: Vec::new(),
        }
    }
}

pub struct Search<'a> {
    g: &'a Graph,
    n: usize,
    nbr: Vec<u128>,
    all: u128,
    sources: u128,
    required: u128,
    touch: Vec<u128>,
    full_goal: bool,
    classes: Vec<Vec<Vec<usize>>>,
    sym_mask: u128,
    /// Largest remaining-round budget known to be insufficient.
    failed: FxHashMap<u128, u32>,
    won: FxHashSet<(u128, u32)>,
    deadline: Option<Instant>,
    nodes: u64,
}

const NONE: u8 = u8::MAX;

fn bit(v: usize) -> u128 {
    1u128 << v
}

fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

fn to_mask(s: &VertexSet) -> u128 {
    s.iter().fold(0, |m, v| m | bit(v))
}

impl<'a> Search<'a> {
    pub fn new(
        g: &'a Graph,
        sources: &VertexSet,
        goal: &Goal,
        symmetry: Option<Symmetry>,
        deadline: Option<Instant>,
    ) -> Result<Search<'a>, SolveError> {
        let n = g.n();
        if n > SEARCH_LIMIT {
            return Err(SolveError::TooLarge(format!("search supports n <= {SEARCH_LIMIT}, got {n}")));
        }
        if sources.is_empty() {
            return Err(SolveError::Precondition("no sources".into()));
        }
        let all = if n == 128 { u128::MAX } else { bit(n) - 1 };
        let classes = symmetry.map(|s| s.classes).unwrap_or_default();
        let sym_mask = classes
            .iter()
            .flatten()
            .flatten()
            .fold(0u128, |m, &v| m | bit(v));
        let sources = to_mask(sources);
        let required = to_mask(&goal.required);
        let touch: Vec<u128> = goal.touch.iter().map(to_mask).collect();
        assert!(sources & sym_mask == 0, "sources must lie outside symmetric components");
        Ok(Search {
            g,
            n,
            nbr: (0..n).map(|v| g.neighbors(v).iter().fold(0, |m, &w| m | bit(w))).collect(),
            all,
            sources,
            required,
            full_goal: required == all && touch.is_empty(),
            touch,
            classes,
            sym_mask,
            failed: FxHashMap::default(),
            won: FxHashSet::default(),
            deadline,
            nodes: 0,
        })
    }

    pub fn graph(&self) -> &'a Graph {
        self.g
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    fn done(&self, i: u128) -> bool {
        self.required & !i == 0 && self.touch.iter().all(|&t| t & i != 0)
    }

    fn canon(&self, i: u128) -> u128 {
        if self.sym_mask & i == 0 {
            return i;
        }
        let mut out = i & !self.sym_mask;
        let mut pats: Vec<u32> = Vec::new();
        for class in &self.classes {
            pats.clear();
            for comp in class {
                pats.push(
                    comp.iter()
                        .enumerate()
                        .fold(0u32, |p, (k, &v)| if i & bit(v) != 0 { p | 1 << k } else { p }),
                );
            }
            pats.sort_unstable_by(|a, b| b.cmp(a));
            for (comp, &p) in class.iter().zip(&pats) {
                for (k, &v) in comp.iter().enumerate() {
                    if p >> k & 1 == 1 {
                        out |= bit(v);
                    }
                }
            }
        }
        out
    }

    fn expand(&self, m: u128) -> u128 {
        bits(m).fold(m, |acc, v| acc | self.nbr[v])
    }

    /// Admissible test: false only if the goal is unreachable from `i` in
    /// `r` rounds.
    fn may_finish(&self, i: u128, r: u32) -> bool {
        let informed = i.count_ones() as u64;
        let need = if self.full_goal {
            (self.n as u64) - informed
        } else {
            (self.required & !i).count_ones() as u64 + self.touch.iter().filter(|&&t| t & i == 0).count() as u64
        };
        if r < 64 && need > informed.saturating_mul((1u64 << r) - 1) {
            return false;
        }
        let mut reach = i;
        for _ in 0..r {
            let next = self.expand(reach);
            if next == reach {
                break;
            }
            reach = next;
        }
        if self.required & !reach != 0 || self.touch.iter().any(|&t| t & reach == 0) {
            return false;
        }
        !self.full_goal || self.private_bound(i) <= r
    }

    /// Each component of `G - I` whose only informed neighbor is `u` must be
    /// entered by `u`, in distinct rounds, and then needs time to finish.
    fn private_bound(&self, i: u128) -> u32 {
        let mut rest = self.all & !i;
        let mut per_owner: FxHashMap<usize, Vec<u32>> = FxHashMap::default();
        while rest != 0 {
            let start = rest.trailing_zeros() as usize;
            let mut comp = bit(start);
            loop {
                let next = self.expand(comp) & rest;
                if next == comp {
                    break;
                }
                comp = next;
            }
            rest &= !comp;
            let attach = bits(comp).fold(0u128, |m, v| m | self.nbr[v]) & i;
            if attach.count_ones() != 1 {
                continue;
            }
            let u = attach.trailing_zeros() as usize;
            let size = comp.count_ones();
            let mut ecc = 0;
            let mut seen = bit(u);
            while comp & !seen != 0 {
                seen = self.expand(seen) & (comp | bit(u));
                ecc += 1;
            }
            let log = 32 - size.leading_zeros(); // ceil(log2(size + 1))
            per_owner.entry(u).or_default().push((ecc - 1).max(log - 1));
        }
        let mut bound = 0;
        for hs in per_owner.values_mut() {
            hs.sort_unstable_by(|a, b| b.cmp(a));
            for (k, &h) in hs.iter().enumerate() {
                bound = bound.max(k as u32 + 1 + h);
            }
        }
        bound
    }

    /// Smallest round count the pruning rules cannot rule out.
    pub fn root_bound(&self) -> u32 {
        let start = self.canon(self.sources);
        (0..).find(|&r| self.done(start) || self.may_finish(start, r)).unwrap()
    }

    /// Receiver sets that are maximal among those matchable from `i`.
    fn moves(&self, i: u128) -> Vec<u128> {
        let cand: Vec<usize> = bits(self.expand(i) & !i).collect();
        let mut owner = [NONE; 128];
        let mut rank = 0;
        for &v in &cand {
            let mut seen = 0;
            if self.augment(v, i, &mut owner, &mut seen) {
                rank += 1;
            }
        }
        let mut out = Vec::new();
        let mut seen_keys = FxHashSet::default();
        self.bases(i, &cand, 0, 0, 0, rank, [NONE; 128], &mut out, &mut seen_keys);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn bases(
        &self,
        i: u128,
        cand: &[usize],
        idx: usize,
        chosen: u128,
        size: usize,
        rank: usize,
        owner: [u8; 128],
        out: &mut Vec<u128>,
        keys: &mut FxHashSet<u128>,
    ) {
        if size == rank {
            let next = self.canon(i | chosen);
            if keys.insert(next) {
                out.push(i | chosen);
            }
            return;
        }
        if size + cand.len() - idx < rank {
            return;
        }
        let v = cand[idx];
        let mut with = owner;
        let mut seen = 0;
        if self.augment(v, i, &mut with, &mut seen) {
            self.bases(i, cand, idx + 1, chosen | bit(v), size + 1, rank, with, out, keys);
        }
        self.bases(i, cand, idx + 1, chosen, size, rank, owner, out, keys);
    }

    fn augment(&self, v: usize, i: u128, owner: &mut [u8; 128], seen: &mut u128) -> bool {
        for u in bits(self.nbr[v] & i) {
            if *seen & bit(u) != 0 {
                continue;
            }
            *seen |= bit(u);
            if owner[u] == NONE || self.augment(owner[u] as usize, i, owner, seen) {
                owner[u] = v as u8;
                return true;
            }
        }
        false
    }

    fn ordered_moves(&self, i: u128) -> Vec<u128> {
        let mut moves = self.moves(i);
        let score = |j: u128| (self.expand(j) & !j).count_ones();
        moves.sort_by_key(|&j| (std::cmp::Reverse(score(j)), j));
        moves
    }

    fn tick(&mut self) -> Result<(), SolveError> {
        self.nodes += 1;
        if self.nodes % 256 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SolveError::Budget);
        }
        Ok(())
    }

    /// Whether the goal is reachable from canonical state `i` in `r` rounds.
    fn dfs(&mut self, i: u128, r: u32) -> Result<bool, SolveError> {
        if self.done(i) {
            return Ok(true);
        }
        if r == 0 || self.failed.get(&i).is_some_and(|&f| f >= r) {
            return Ok(false);
        }
        if self.won.contains(&(i, r)) {
            return Ok(true);
        }
        self.tick()?;
        if self.may_finish(i, r) {
            for j in self.ordered_moves(i) {
                let c = self.canon(j);
                if self.dfs(c, r - 1)? {
                    self.won.insert((i, r));
                    return Ok(true);
                }
            }
        }
        let f = self.failed.entry(i).or_insert(0);
        *f = (*f).max(r);
        Ok(false)
    }

    /// Informed sets after each round of a `t`-round solution, if one exists.
    /// Consecutive sets are nested and the first is the source set.
    pub fn solve(&mut self, t: u32) -> Result<Option<Vec<u128>>, SolveError> {
        let start = self.sources;
        if !self.dfs(self.canon(start), t)? {
            return Ok(None);
        }
        // Walk the real (uncanonicalized) states along winning moves.
        let mut chain = vec![start];
        let mut cur = start;
        let mut r = t;
        while !self.done(cur) {
            let mut advanced = false;
            for j in self.ordered_moves(cur) {
                if self.dfs(self.canon(j), r - 1)? {
                    chain.push(j);
                    cur = j;
                    r -= 1;
                    advanced = true;
                    break;
                }
            }
            assert!(advanced, "a winning state has a winning move");
        }
        Ok(Some(chain))
    }

    /// Protocol realizing a chain of informed sets, one round per step.
    pub fn chain_protocol(&self, chain: &[u128]) -> BroadcastProtocol {
        let sources: Vec<usize> = bits(chain[0]).collect();
        let mut p = BroadcastProtocol::new(&VertexSet::from_slice(self.n, &sources));
        for (r, w) in chain.windows(2).enumerate() {
            let mut owner = [NONE; 128];
            for v in bits(w[1] & !w[0]) {
                let mut seen = 0;
                let ok = self.augment(v, w[0], &mut owner, &mut seen);
                debug_assert!(ok);
            }
            for u in 0..self.n {
                if owner[u] != NONE {
                    p.assign(owner[u] as usize, u, r as u32 + 1);
                }
            }
        }
        p
    }
}
