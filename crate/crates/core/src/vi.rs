//! Exact solver parameterized by vertex integrity.
//!
//! With a separator `S` containing `s` and `k = |S| + max |C|` over the
//! components `C` of `G - S`, round counts `t >= 2k^2` are decided by
//! guessing which vertices of `S` are informed early (`S1`) and how many
//! components of each type are first entered in the early window `R1` or
//! the late window `R3`; the middle window is a b-matching. Smaller `t` are
//! decided by the exact search.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::bitset::VertexSet;
use crate::canon::canonical_form;
use crate::error::SolveError;
use crate::exact::search::{Goal, Search, Symmetry, SEARCH_LIMIT};
use crate::exact::ExactSolution;
use crate::flow::b_matching;
use crate::graph::{components, distances, Graph};
use crate::protocol::{greedy_complete_with, validate, BroadcastProtocol};

/// `|S| + ` the largest component of `G - S`.
fn integrity(g: &Graph, sep: &VertexSet) -> usize {
    sep.len() + components(g, sep).iter().map(VertexSet::len).max().unwrap_or(0)
}

/// A separator `S` with `s` in `S` minimizing `|S| + max |C|`, and that
/// minimum. Ties keep the first set found, starting from `{s}`.
pub fn find_vi_separator(g: &Graph, s: usize) -> (VertexSet, usize) {
    separator_search(g, s, None).expect("no deadline")
}

fn separator_search(g: &Graph, s: usize, deadline: Option<Instant>) -> Result<(VertexSet, usize), SolveError> {
    struct St<'a> {
        g: &'a Graph,
        best: (VertexSet, usize),
        seen: FxHashSet<Vec<usize>>,
        deadline: Option<Instant>,
    }
    fn go(st: &mut St, sep: &mut VertexSet) -> Result<(), SolveError> {
        if st.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SolveError::Budget);
        }
        if !st.seen.insert(sep.to_vec()) {
            return Ok(());
        }
        let value = integrity(st.g, sep);
        if value < st.best.1 {
            st.best = (sep.clone(), value);
        }
        // Any better superset leaves components smaller than `need`, so it
        // contains a vertex of every connected `need`-set.
        let need = st.best.1.saturating_sub(sep.len() + 1);
        if need == 0 {
            return Ok(());
        }
        let Some(big) = components(st.g, sep)
            .into_iter()
            .max_by_key(|c| (c.len(), std::cmp::Reverse(VertexSet::min(c))))
        else {
            return Ok(());
        };
        if big.len() < need {
            return Ok(());
        }
        let start = VertexSet::min(&big).unwrap();
        let d = crate::graph::distances_from_set(st.g, &[start], Some(&big));
        let mut order: Vec<usize> = big.iter().collect();
        order.sort_by_key(|&v| (d[v], v));
        for &v in &order[..need] {
            sep.insert(v);
            go(st, sep)?;
            sep.remove(v);
        }
        Ok(())
    }
    let mut sep = VertexSet::singleton(g.n(), s);
    let mut st = St {
        g,
        best: (sep.clone(), integrity(g, &sep)),
        seen: FxHashSet::default(),
        deadline,
    };
    go(&mut st, &mut sep)?;
    Ok(st.best)
}

/// Components of `G - S` grouped into types: two components share a type
/// iff an isomorphism between them preserves every vertex's neighbourhood
/// in `S`. Returns the components and, per type, indices into them.
pub fn component_types(g: &Graph, sep: &VertexSet) -> (Vec<VertexSet>, Vec<Vec<usize>>) {
    let comps = components(g, sep);
    let sep_ids = sep.to_vec();
    assert!(sep_ids.len() <= 64, "separators are limited to 64 vertices");
    let mut by_code: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    let mut first_seen: Vec<Vec<u64>> = Vec::new();
    for (i, comp) in comps.iter().enumerate() {
        let verts = comp.to_vec();
        let colors: Vec<u64> = verts
            .iter()
            .map(|&v| {
                sep_ids
                    .iter()
                    .enumerate()
                    .filter(|&(_, &x)| g.has_edge(v, x))
                    .fold(0u64, |m, (j, _)| m | 1 << j)
            })
            .collect();
        let mut code = canonical_form(&g.induced(&verts), &colors).code;
        code.insert(0, verts.len() as u64);
        if !by_code.contains_key(&code) {
            first_seen.push(code.clone());
        }
        by_code.entry(code).or_default().push(i);
    }
    let types = first_seen.iter().map(|c| by_code[c].clone()).collect();
    (comps, types)
}

/// Middle-window test: can the fully informed `S1` enter every component of
/// `comps` within `r` rounds, one transmission per vertex per round? On
/// success returns, per component, the sender and the round in `1..=r`.
pub fn vi_test2(g: &Graph, s1: &VertexSet, comps: &[VertexSet], r: u32) -> Option<Vec<(usize, u32)>> {
    let senders = s1.to_vec();
    let mut edges = Vec::new();
    for (c, comp) in comps.iter().enumerate() {
        for (l, &u) in senders.iter().enumerate() {
            if g.neighbors(u).iter().any(|&w| comp.contains(w)) {
                edges.push((l, c));
            }
        }
    }
    let m = b_matching(&vec![r as usize; senders.len()], comps.len(), &edges);
    if !m.saturated() {
        return None;
    }
    let mut next = vec![0u32; senders.len()];
    Some(
        m.partner
            .iter()
            .map(|p| {
                let l = p.unwrap();
                next[l] += 1;
                (senders[l], next[l])
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViSolution {
    pub solution: ExactSolution,
    pub separator: VertexSet,
    pub k: usize,
    /// True when the optimum was found by the guessing loop rather than the
    /// exact search for `t < 2k^2`.
    pub guess_loop: bool,
    /// Guesses whose three tests were evaluated.
    pub guesses: u64,
}

/// Which paths [`vi_solve_with`] may take.
#[derive(Debug, Clone, Copy, Default)]
pub struct ViOptions {
    pub budget: Option<Duration>,
}

pub fn vi_solve(g: &Graph, s: usize) -> Result<ViSolution, SolveError> {
    vi_solve_with(g, s, ViOptions::default())
}

pub fn vi_solve_with(g: &Graph, s: usize, opts: ViOptions) -> Result<ViSolution, SolveError> {
    let n = g.n();
    if !g.is_connected() {
        return Err(SolveError::Disconnected);
    }
    if n > SEARCH_LIMIT {
        return Err(SolveError::TooLarge(format!("vertex-integrity solver supports n <= {SEARCH_LIMIT}")));
    }
    let deadline = opts.budget.map(|b| Instant::now() + b);
    let (sep, k) = separator_search(g, s, deadline)?;
    let threshold = (2 * k * k) as u32;
    let src = VertexSet::singleton(n, s);
    let ecc = distances(g, s).into_iter().flatten().max().unwrap_or(0);
    let log = usize::BITS - (n.max(1) - 1).leading_zeros();
    let lower = ecc.max(log);
    if lower < threshold {
        let symmetry = Symmetry::from_components(g, &sep, k);
        let mut search = Search::new(g, &src, &Goal::broadcast(n), Some(symmetry), deadline)?;
        let start = lower.max(search.root_bound());
        for t in start..threshold {
            if let Some(chain) = search.solve(t)? {
                let protocol = search.chain_protocol(&chain);
                return Ok(ViSolution {
                    solution: ExactSolution { rounds: t, protocol },
                    separator: sep,
                    k,
                    guess_loop: false,
                    guesses: 0,
                });
            }
        }
    }
    let mut guess = GuessLoop::new(g, s, &sep, k, deadline);
    for t in lower.max(threshold)..n.max(2) as u32 {
        if let Some(protocol) = guess.feasible(t)? {
            return Ok(ViSolution {
                solution: ExactSolution { rounds: t, protocol },
                separator: sep,
                k,
                guess_loop: true,
                guesses: guess.guesses,
            });
        }
    }
    unreachable!("n - 1 rounds always suffice on a connected graph")
}

struct GuessLoop<'a> {
    g: &'a Graph,
    s: usize,
    sep: Vec<usize>,
    k: usize,
    comps: Vec<VertexSet>,
    types: Vec<Vec<usize>>,
    comp_of: Vec<Option<usize>>,
    deadline: Option<Instant>,
    guesses: u64,
}

/// Multiplicities per type, each at most its availability, total at most
/// `cap`, in lexicographic order.
struct CountVectors<'a> {
    avail: &'a [usize],
    cap: usize,
    next: Option<Vec<usize>>,
}

fn count_vectors(avail: &[usize], cap: usize) -> CountVectors<'_> {
    CountVectors {
        avail,
        cap,
        next: Some(vec![0; avail.len()]),
    }
}

impl Iterator for CountVectors<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let sum: usize = cur.iter().sum();
        let mut succ = cur.clone();
        let mut i = succ.len();
        while i > 0 {
            i -= 1;
            let tail: usize = succ[i + 1..].iter().sum();
            if succ[i] < self.avail[i] && sum - tail < self.cap {
                succ[i] += 1;
                succ[i + 1..].fill(0);
                self.next = Some(succ);
                break;
            }
        }
        Some(cur)
    }
}

impl<'a> GuessLoop<'a> {
    fn new(g: &'a Graph, s: usize, sep: &VertexSet, k: usize, deadline: Option<Instant>) -> GuessLoop<'a> {
        let (comps, types) = component_types(g, sep);
        let mut comp_of = vec![None; g.n()];
        for (i, c) in comps.iter().enumerate() {
            for v in c.iter() {
                comp_of[v] = Some(i);
            }
        }
        GuessLoop {
            g,
            s,
            sep: sep.to_vec(),
            k,
            comps,
            types,
            comp_of,
            deadline,
            guesses: 0,
        }
    }

    /// Components picked by a count vector: the lowest-index unused ones of
    /// each type, skipping the first `skip[type]`.
    fn pick(&self, counts: &[usize], skip: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (ty, &c) in counts.iter().enumerate() {
            out.extend(&self.types[ty][skip[ty]..skip[ty] + c]);
        }
        out.sort_unstable();
        out
    }

    /// Runs the exact search on `G[verts]` and maps the protocol back.
    fn small_search(
        &self,
        verts: &[usize],
        sources: &[usize],
        required: &[usize],
        touch: &[usize],
        rounds: u32,
    ) -> Result<Option<BroadcastProtocol>, SolveError> {
        let h = self.g.induced(verts);
        let m = verts.len();
        let local: FxHashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let map = |vs: &[usize]| VertexSet::from_slice(m, &vs.iter().map(|v| local[v]).collect::<Vec<_>>());
        let src = map(sources);
        let sep_local: Vec<usize> = self.sep.iter().filter_map(|v| local.get(v).copied()).collect();
        let symmetry = Symmetry::from_components(&h, &VertexSet::from_slice(m, &sep_local), self.k);
        let goal = Goal {
            required: map(required),
            touch: touch
                .iter()
                .map(|&c| map(&self.comps[c].to_vec()))
                .collect(),
        };
        let mut search = Search::new(&h, &src, &goal, Some(symmetry), self.deadline)?;
        let Some(chain) = search.solve(rounds)? else { return Ok(None) };
        Ok(Some(search.chain_protocol(&chain).relabel(verts, self.g.n())))
    }

    fn last_window(&self, s1: &[usize], c3: &[usize], r3: u32) -> Result<Option<BroadcastProtocol>, SolveError> {
        let mut verts = self.sep.clone();
        verts.extend(c3.iter().flat_map(|&c| self.comps[c].iter()));
        verts.sort_unstable();
        assert!(verts.len() <= self.k + 2 * self.k.pow(3), "last-window instance exceeds k + 2k^3 vertices");
        self.small_search(&verts, s1, &verts, &[], r3)
    }

    fn feasible(&mut self, t: u32) -> Result<Option<BroadcastProtocol>, SolveError> {
        let k = self.k;
        let r1 = ((2 * k - 3) * k) as u32;
        let r3 = 2 * k as u32;
        let r2 = t - r1 - r3;
        let cap1 = (2 * k - 3) * k * k;
        let cap3 = 2 * k * k;
        let avail: Vec<usize> = self.types.iter().map(Vec::len).collect();
        let others: Vec<usize> = self.sep.iter().copied().filter(|&v| v != self.s).collect();
        let mut test1: FxHashMap<(u64, Vec<usize>), Option<BroadcastProtocol>> = FxHashMap::default();
        // Keyed by counts only, so this stores feasibility; the protocol for
        // the components actually picked is recomputed once on success.
        let mut test3: FxHashMap<(u64, Vec<usize>), bool> = FxHashMap::default();
        for mask in 0u64..1 << others.len() {
            let mut s1: Vec<usize> = vec![self.s];
            s1.extend(others.iter().enumerate().filter(|&(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v));
            s1.sort_unstable();
            let s1_set = VertexSet::from_slice(self.g.n(), &s1);
            for c1 in count_vectors(&avail, cap1) {
                let c1_comps = self.pick(&c1, &vec![0; avail.len()]);
                if !test1.contains_key(&(mask, c1.clone())) {
                    let mut verts = s1.clone();
                    verts.extend(c1_comps.iter().flat_map(|&c| self.comps[c].iter()));
                    verts.sort_unstable();
                    assert!(verts.len() < 2 * k.pow(4), "first-window instance exceeds 2k^4 vertices");
                    let p = self.small_search(&verts, &[self.s], &s1, &c1_comps, r1)?;
                    test1.insert((mask, c1.clone()), p);
                }
                if test1[&(mask, c1.clone())].is_none() {
                    continue;
                }
                let rest: Vec<usize> = avail.iter().zip(&c1).map(|(a, c)| a - c).collect();
                for c3 in count_vectors(&rest, cap3) {
                    if self.deadline.is_some_and(|d| Instant::now() >= d) {
                        return Err(SolveError::Budget);
                    }
                    self.guesses += 1;
                    let c3_comps = self.pick(&c3, &c1);
                    let key = (mask, c3.clone());
                    if !test3.contains_key(&key) {
                        let ok = self.last_window(&s1, &self.pick(&c3, &vec![0; avail.len()]), r3)?.is_some();
                        test3.insert(key.clone(), ok);
                    }
                    if !test3[&key] {
                        continue;
                    }
                    let c2_comps: Vec<usize> = (0..self.comps.len())
                        .filter(|c| c1_comps.binary_search(c).is_err() && c3_comps.binary_search(c).is_err())
                        .collect();
                    let c2_sets: Vec<VertexSet> = c2_comps.iter().map(|&c| self.comps[c].clone()).collect();
                    let Some(assign) = vi_test2(self.g, &s1_set, &c2_sets, r2) else { continue };
                    let p1 = test1[&(mask, c1.clone())].clone().unwrap();
                    let p3 = self.last_window(&s1, &c3_comps, r3)?.expect("isomorphic to a feasible last window");
                    return Ok(Some(self.stitch(t, r1, &p1, &c2_comps, &assign, &p3, r1 + r2)));
                }
            }
        }
        Ok(None)
    }

    /// Concatenates the three windows and completes partly informed
    /// components internally.
    fn stitch(
        &self,
        t: u32,
        r1: u32,
        p1: &BroadcastProtocol,
        c2: &[usize],
        assign: &[(usize, u32)],
        p3: &BroadcastProtocol,
        shift3: u32,
    ) -> BroadcastProtocol {
        let g = self.g;
        let n = g.n();
        let mut p = BroadcastProtocol::single_source(n, self.s);
        for v in 0..n {
            if let (Some(u), Some(r)) = (p1.parent(v), p1.round(v)) {
                p.assign(v, u, r);
            }
        }
        for (&c, &(u, r)) in c2.iter().zip(assign) {
            let w = self.comps[c].iter().find(|&w| g.has_edge(u, w)).unwrap();
            p.assign(w, u, r1 + r);
        }
        let s1 = p3.sources().clone();
        for v in 0..n {
            if s1.contains(v) {
                continue;
            }
            if let (Some(u), Some(r)) = (p3.parent(v), p3.round(v)) {
                p.assign(v, u, shift3 + r);
            }
        }
        let p = self.complete_inside(&p, t);
        let p = s_lazify(g, &VertexSet::from_slice(n, &self.sep), &p, t, self.k);
        debug_assert_eq!(validate(g, &VertexSet::singleton(n, self.s), &p).map(|r| r <= t), Ok(true));
        p
    }

    fn complete_inside(&self, p: &BroadcastProtocol, t: u32) -> BroadcastProtocol {
        let comp_of = &self.comp_of;
        greedy_complete_with(self.g, p, t, |u, v| comp_of[u].is_some() && comp_of[u] == comp_of[v])
            .expect("every partly informed component finishes within k - 1 rounds")
    }
}

/// Rewrites `p` so that every component of `G - S` that never sends back
/// into `S` and is first entered by round `t - k + 1` is entered exactly
/// once, then finished internally.
pub fn s_lazify(g: &Graph, sep: &VertexSet, p: &BroadcastProtocol, t: u32, k: usize) -> BroadcastProtocol {
    let n = g.n();
    let mut out = p.clone();
    for comp in components(g, sep) {
        let sends_back = comp.iter().any(|v| sep.iter().any(|x| p.parent(x) == Some(v)));
        if sends_back {
            continue;
        }
        let mut entries: Vec<(u32, usize)> = comp
            .iter()
            .filter(|&v| p.parent(v).is_some_and(|u| sep.contains(u)))
            .map(|v| (p.round(v).unwrap(), v))
            .collect();
        entries.sort_unstable();
        if entries.len() <= 1 || entries[0].0 + k as u32 > t + 1 {
            continue;
        }
        for v in comp.iter().filter(|&v| v != entries[0].1) {
            out.unassign(v);
        }
    }
    let comp_of: Vec<Option<usize>> = {
        let mut c = vec![None; n];
        for (i, comp) in components(g, sep).iter().enumerate() {
            for v in comp.iter() {
                c[v] = Some(i);
            }
        }
        c
    };
    greedy_complete_with(g, &out, t, |u, v| comp_of[u].is_some() && comp_of[u] == comp_of[v])
        .expect("a component entered by round t - k + 1 finishes in time")
}
