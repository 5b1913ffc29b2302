//! Hard instances built from restricted numerical 3-dimensional matching
//! (RNMTS): a cactus reduction, a multi-source reduction, and the lift of a
//! multi-source instance to a single source.
//!
//! Vertex layouts are fixed so that protocols and files are reproducible.
//! Cactus: `s = 0`, then one path per target `c` in increasing order of `c`
//! (`u` first, `v` last), then the filler paths `Q_h` for increasing `h`
//! (the vertex next to `s` first). Multi-source: `s = 0`, the stars `v_h`
//! (center then leaves), then per target `l_i`, `r_i` and for each `j` the
//! vertices `l_ij`, `s_ij`, `r_ij` followed by the stars `v_ijk`. The lift
//! appends the stars `v_ij`, then `z` and its leaves.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::bitset::VertexSet;
use crate::decomposition::EliminationTree;
use crate::error::{content_lines, parse_num, ParseError};
use crate::graph::Graph;
use crate::protocol::BroadcastProtocol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RnmtsError {
    #[error("A, B and C must have the same positive size")]
    Sizes,
    #[error("values must be positive and distinct across A, B and C")]
    NotDistinct,
    #[error("A must be even and B, C odd")]
    Parity,
    #[error("sum of A and B differs from sum of C")]
    Sum,
    #[error("not a valid partition into triples")]
    BadPartition,
}

/// Sets `A`, `B`, `C`, each stored in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RnmtsInstance {
    a: Vec<u32>,
    b: Vec<u32>,
    c: Vec<u32>,
}

/// One triple `c = a + b` of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triple {
    pub c: u32,
    pub a: u32,
    pub b: u32,
}

fn check_distinct(a: &[u32], b: &[u32], c: &[u32]) -> Result<(), RnmtsError> {
    if a.is_empty() || a.len() != b.len() || a.len() != c.len() {
        return Err(RnmtsError::Sizes);
    }
    let all: BTreeSet<u32> = a.iter().chain(b).chain(c).copied().collect();
    if all.len() != 3 * a.len() || all.contains(&0) {
        return Err(RnmtsError::NotDistinct);
    }
    let sum = |x: &[u32]| x.iter().map(|&v| v as u64).sum::<u64>();
    if sum(a) + sum(b) != sum(c) {
        return Err(RnmtsError::Sum);
    }
    Ok(())
}

fn sorted(x: &[u32]) -> Vec<u32> {
    let mut v = x.to_vec();
    v.sort_unstable();
    v
}

impl RnmtsInstance {
    pub fn new(a: &[u32], b: &[u32], c: &[u32]) -> Result<Self, RnmtsError> {
        check_distinct(a, b, c)?;
        if a.iter().any(|x| x % 2 != 0) || b.iter().chain(c).any(|x| x % 2 != 1) {
            return Err(RnmtsError::Parity);
        }
        Ok(RnmtsInstance {
            a: sorted(a),
            b: sorted(b),
            c: sorted(c),
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[u32] {
        &self.a
    }

    pub fn b(&self) -> &[u32] {
        &self.b
    }

    pub fn c(&self) -> &[u32] {
        &self.c
    }

    /// The target round count `max C`.
    pub fn t(&self) -> u32 {
        *self.c.last().unwrap()
    }

    /// Whether every element of `A` and `B` is below `max C`, which the size
    /// identities of both reductions rely on. Every yes-instance has it.
    pub fn is_regular(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&x| x < self.t())
    }

    /// Rounds `t - x` for `x` in `A ∪ B` that fall in `[1, t]`.
    fn reserved_rounds(&self) -> BTreeSet<u32> {
        let t = self.t();
        self.a.iter().chain(&self.b).filter(|&&x| x < t).map(|&x| t - x).collect()
    }

    fn filler_rounds(&self) -> Vec<u32> {
        let reserved = self.reserved_rounds();
        (1..=self.t()).filter(|h| !reserved.contains(h)).collect()
    }

    pub fn to_text(&self) -> String {
        let line = |x: &[u32]| x.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        format!("{}\n{}\n{}\n{}\n", self.n(), line(&self.a), line(&self.b), line(&self.c))
    }

    /// Checks that `triples` partitions the instance.
    pub fn check_partition(&self, triples: &[Triple]) -> Result<(), RnmtsError> {
        let mut a: Vec<u32> = triples.iter().map(|x| x.a).collect();
        let mut b: Vec<u32> = triples.iter().map(|x| x.b).collect();
        let mut c: Vec<u32> = triples.iter().map(|x| x.c).collect();
        a.sort_unstable();
        b.sort_unstable();
        c.sort_unstable();
        if a != self.a || b != self.b || c != self.c || triples.iter().any(|x| x.a + x.b != x.c) {
            return Err(RnmtsError::BadPartition);
        }
        Ok(())
    }
}

pub fn parse_rnmts(text: &str) -> Result<RnmtsInstance, ParseError> {
    let lines: Vec<(usize, Vec<&str>)> = content_lines(text).collect();
    if lines.len() != 4 || lines[0].1.len() != 1 {
        return Err(ParseError::new(lines.first().map_or(1, |l| l.0), "expected `n` and three value lines"));
    }
    let n: usize = parse_num(lines[0].1[0], lines[0].0, "size")?;
    let mut sets = Vec::new();
    for (line, toks) in &lines[1..] {
        if toks.len() != n {
            return Err(ParseError::new(*line, format!("expected {n} values")));
        }
        sets.push(
            toks.iter()
                .map(|t| parse_num::<u32>(t, *line, "value"))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    RnmtsInstance::new(&sets[0], &sets[1], &sets[2]).map_err(|e| ParseError::new(lines[1].0, e.to_string()))
}

/// A partition into triples `c = a + b`, found by backtracking over the
/// targets in increasing order; `None` if there is none.
pub fn solve_rnmts(inst: &RnmtsInstance) -> Option<Vec<Triple>> {
    fn go(inst: &RnmtsInstance, i: usize, used_a: &mut [bool], used_b: &mut [bool], out: &mut Vec<Triple>) -> bool {
        if i == inst.c.len() {
            return true;
        }
        let c = inst.c[i];
        for (ja, &a) in inst.a.iter().enumerate() {
            if used_a[ja] || a >= c {
                continue;
            }
            if let Ok(jb) = inst.b.binary_search(&(c - a)) {
                if used_b[jb] {
                    continue;
                }
                used_a[ja] = true;
                used_b[jb] = true;
                out.push(Triple { c, a, b: c - a });
                if go(inst, i + 1, used_a, used_b, out) {
                    return true;
                }
                out.pop();
                used_a[ja] = false;
                used_b[jb] = false;
            }
        }
        false
    }
    let n = inst.n();
    let mut out = Vec::new();
    go(inst, 0, &mut vec![false; n], &mut vec![false; n], &mut out).then_some(out)
}

/// Doubles every value and adds one to those of `B` and `C`.
pub fn restrict_nmts(a: &[u32], b: &[u32], c: &[u32]) -> Result<RnmtsInstance, RnmtsError> {
    check_distinct(a, b, c)?;
    let double = |x: &[u32], add: u32| x.iter().map(|v| 2 * v + add).collect::<Vec<_>>();
    RnmtsInstance::new(&double(a, 0), &double(b, 1), &double(c, 1))
}

/// Every instance whose values are all at most `max_value`, in a fixed order.
pub fn rnmts_corpus(max_value: u32) -> Vec<RnmtsInstance> {
    let evens: Vec<u32> = (2..=max_value).step_by(2).collect();
    let odds: Vec<u32> = (1..=max_value).step_by(2).collect();
    let mut out = Vec::new();
    for n in 1..=evens.len().min(odds.len() / 2) {
        for a in subsets(&evens, n) {
            for b in subsets(&odds, n) {
                let rest: Vec<u32> = odds.iter().copied().filter(|x| !b.contains(x)).collect();
                for c in subsets(&rest, n) {
                    if let Ok(inst) = RnmtsInstance::new(&a, &b, &c) {
                        out.push(inst);
                    }
                }
            }
        }
    }
    out
}

fn subsets(items: &[u32], k: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, items[i]);
            out.push(rest);
        }
    }
    out
}

/// A random regular instance with `n` triples and values below roughly
/// `2 * max_value`; about half are perturbed so that they may be
/// no-instances.
pub fn random_rnmts(rng: &mut impl Rng, n: usize, max_value: u32) -> RnmtsInstance {
    assert!(n >= 1 && max_value >= 4 * n as u32 + 4);
    loop {
        let mut evens: Vec<u32> = (1..=max_value / 2).map(|x| 2 * x).collect();
        let mut odds: Vec<u32> = (0..max_value / 2).map(|x| 2 * x + 1).collect();
        evens.shuffle(rng);
        odds.shuffle(rng);
        let a = &evens[..n];
        let b = &odds[..n];
        let mut c: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        if n >= 2 && rng.gen_bool(0.5) {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i != j && c[j] > 2 {
                c[i] += 2;
                c[j] -= 2;
            }
        }
        if let Ok(inst) = RnmtsInstance::new(a, b, &c) {
            if inst.is_regular() {
                return inst;
            }
        }
    }
}

/// Output of [`reduce_cactus`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CactusInstance {
    pub graph: Graph,
    pub s: usize,
    pub t: u32,
    /// `(c, vertices from u to v)` per target.
    pub paths: Vec<(u32, Vec<usize>)>,
    /// `(h, vertices from the neighbor of s to q_h)`.
    pub fillers: Vec<(u32, Vec<usize>)>,
}

pub fn reduce_cactus(inst: &RnmtsInstance) -> CactusInstance {
    let t = inst.t();
    let mut edges = Vec::new();
    let mut next = 1usize;
    let mut take = |len: usize, edges: &mut Vec<(usize, usize)>| {
        let vs: Vec<usize> = (next..next + len).collect();
        next += len;
        edges.extend(vs.windows(2).map(|w| (w[0], w[1])));
        edges.push((0, vs[0]));
        vs
    };
    let mut paths = Vec::new();
    for &c in &inst.c {
        let vs = take(c as usize + 2, &mut edges);
        edges.push((0, *vs.last().unwrap()));
        paths.push((c, vs));
    }
    let mut fillers = Vec::new();
    for h in inst.filler_rounds() {
        fillers.push((h, take((t - h + 1) as usize, &mut edges)));
    }
    let n = 1 + paths.iter().map(|p| p.1.len()).sum::<usize>() + fillers.iter().map(|p| p.1.len()).sum::<usize>();
    let graph = Graph::from_edges(n, &edges).expect("construction yields a simple graph");
    if inst.is_regular() {
        assert_eq!(n as u64, 1 + (t as u64) * (t as u64 + 1) / 2, "cactus size identity");
    }
    assert_eq!(graph.degree(0), 2 * inst.n() + fillers.len());
    CactusInstance {
        graph,
        s: 0,
        t,
        paths,
        fillers,
    }
}

/// The `t`-round protocol induced by a solution: round `t - a` enters the
/// path of `c` at `u`, round `t - b` at `v`, every other round starts the
/// filler path of that round.
pub fn cactus_yes_protocol(inst: &RnmtsInstance, triples: &[Triple]) -> Result<BroadcastProtocol, RnmtsError> {
    inst.check_partition(triples)?;
    let red = reduce_cactus(inst);
    let t = red.t;
    let mut p = BroadcastProtocol::single_source(red.graph.n(), red.s);
    let run = |p: &mut BroadcastProtocol, vs: &[usize], start: u32| {
        p.assign(vs[0], 0, start);
        for k in 1..vs.len() {
            p.assign(vs[k], vs[k - 1], start + k as u32);
        }
    };
    for (c, vs) in &red.paths {
        let x = triples.iter().find(|x| x.c == *c).unwrap();
        let split = x.a as usize + 1;
        run(&mut p, &vs[..split], t - x.a);
        let back: Vec<usize> = vs[split..].iter().rev().copied().collect();
        run(&mut p, &back, t - x.b);
    }
    for (h, vs) in &red.fillers {
        run(&mut p, vs, *h);
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbmsCell {
    pub l: usize,
    pub s: usize,
    pub r: usize,
    /// `stars[k - 1]` is `v_ijk` with `t - k` leaves.
    pub stars: Vec<Star>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbmsGadget {
    pub c: u32,
    pub l: usize,
    pub r: usize,
    pub cells: Vec<TbmsCell>,
}

/// Output of [`reduce_tbms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbmsInstance {
    pub graph: Graph,
    pub sources: VertexSet,
    pub t: u32,
    /// `(h, star v_h)` for the filler rounds.
    pub stars: Vec<(u32, Star)>,
    pub gadgets: Vec<TbmsGadget>,
}

struct Builder {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn vertex(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    fn star(&mut self, attach: usize, leaves: usize) -> Star {
        let center = self.vertex();
        self.edges.push((attach, center));
        let leaves: Vec<usize> = (0..leaves).map(|_| self.vertex()).collect();
        self.edges.extend(leaves.iter().map(|&l| (center, l)));
        Star { center, leaves }
    }
}

pub fn reduce_tbms(inst: &RnmtsInstance) -> TbmsInstance {
    let t = inst.t();
    let mut b = Builder { n: 1, edges: Vec::new() };
    let stars: Vec<(u32, Star)> = inst
        .filler_rounds()
        .into_iter()
        .map(|h| (h, b.star(0, (t - h) as usize)))
        .collect();
    let mut gadgets = Vec::new();
    let mut sources = vec![0];
    for &c in &inst.c {
        let l = b.vertex();
        let r = b.vertex();
        b.edges.push((0, l));
        b.edges.push((0, r));
        let mut cells = Vec::new();
        for _ in 0..c {
            let (lj, sj, rj) = (b.vertex(), b.vertex(), b.vertex());
            b.edges.extend([(l, lj), (lj, sj), (sj, rj), (rj, r)]);
            sources.push(sj);
            let stars = (1..t).map(|k| b.star(sj, (t - k) as usize)).collect();
            cells.push(TbmsCell { l: lj, s: sj, r: rj, stars });
        }
        gadgets.push(TbmsGadget { c, l, r, cells });
    }
    let graph = Graph::from_edges(b.n, &b.edges).expect("construction yields a simple graph");
    let sources = VertexSet::from_slice(b.n, &sources);
    if inst.is_regular() {
        assert_eq!(
            b.n as u64,
            sources.len() as u64 * (1 + (t as u64) * (t as u64 + 1) / 2),
            "multi-source size identity"
        );
    }
    TbmsInstance {
        graph,
        sources,
        t,
        stars,
        gadgets,
    }
}

/// Informs `star` at `round` and its leaves in the following rounds.
fn run_star(p: &mut BroadcastProtocol, from: usize, star: &Star, round: u32) {
    p.assign(star.center, from, round);
    for (i, &leaf) in star.leaves.iter().enumerate() {
        p.assign(leaf, star.center, round + 1 + i as u32);
    }
}

/// The `t`-round multi-source protocol induced by a solution.
pub fn tbms_yes_protocol(inst: &RnmtsInstance, triples: &[Triple]) -> Result<(TbmsInstance, BroadcastProtocol), RnmtsError> {
    inst.check_partition(triples)?;
    let red = reduce_tbms(inst);
    let t = red.t;
    let mut p = BroadcastProtocol::new(&red.sources);
    for (h, star) in &red.stars {
        run_star(&mut p, 0, star, *h);
    }
    for gad in &red.gadgets {
        let x = triples.iter().find(|x| x.c == gad.c).unwrap();
        let a = x.a as usize;
        p.assign(gad.l, 0, t - x.a);
        p.assign(gad.r, 0, t - x.b);
        for (j, cell) in gad.cells.iter().enumerate() {
            if j < a {
                p.assign(cell.l, gad.l, t - x.a + 1 + j as u32);
                p.assign(cell.r, cell.s, t);
            } else {
                p.assign(cell.r, gad.r, t - x.b + 1 + (j - a) as u32);
                p.assign(cell.l, cell.s, t);
            }
            for (k, star) in cell.stars.iter().enumerate() {
                run_star(&mut p, cell.s, star, k as u32 + 1);
            }
        }
    }
    Ok((red, p))
}

/// Output of [`tbms_to_tb`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedInstance {
    pub graph: Graph,
    pub s: usize,
    pub t: u32,
    /// `s_0, s_1, ..., s_k`.
    pub sources: Vec<usize>,
    /// `(i, j, star v_ij)` with `t + k - j + 1` leaves.
    pub stars: Vec<(usize, usize, Star)>,
    pub z: Star,
    pub base_n: usize,
}

/// Single-source instance with `s' = s_0` (the smallest source) and
/// `t' = t + k + 1`.
pub fn tbms_to_tb(g: &Graph, sources: &VertexSet, t: u32) -> LiftedInstance {
    let src = sources.to_vec();
    let k = src.len() - 1;
    let mut b = Builder {
        n: g.n(),
        edges: g.edges(),
    };
    for &si in &src[1..] {
        b.edges.push((src[0], si));
    }
    let mut stars = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k + 1 {
            stars.push((i, j, b.star(src[i], t as usize + k - j + 1)));
        }
    }
    let z = b.star(src[0], t as usize);
    LiftedInstance {
        graph: Graph::from_edges(b.n, &b.edges).expect("construction yields a simple graph"),
        s: src[0],
        t: t + k as u32 + 1,
        sources: src,
        stars,
        z,
        base_n: g.n(),
    }
}

/// Lifts a multi-source protocol on the base graph to the single-source
/// instance: `s_0` informs `s_i` in round `i` and `z` in round `k + 1`, and
/// the base protocol runs shifted by `k + 1` rounds.
pub fn lift_protocol(lifted: &LiftedInstance, base: &BroadcastProtocol) -> BroadcastProtocol {
    let k = lifted.sources.len() - 1;
    let shift = k as u32 + 1;
    let s0 = lifted.s;
    let mut p = BroadcastProtocol::single_source(lifted.graph.n(), s0);
    for (i, &si) in lifted.sources.iter().enumerate().skip(1) {
        p.assign(si, s0, i as u32);
    }
    run_star(&mut p, s0, &lifted.z, shift);
    for (i, j, star) in &lifted.stars {
        run_star(&mut p, lifted.sources[*i], star, *j as u32);
    }
    for v in 0..lifted.base_n {
        if let (Some(u), Some(r)) = (base.parent(v), base.round(v)) {
            p.assign(v, u, r + shift);
        }
    }
    p
}

/// The full pipeline for a yes-instance: multi-source reduction, lift, and
/// the lifted `t'`-round protocol.
pub fn lifted_yes_protocol(
    inst: &RnmtsInstance,
    triples: &[Triple],
) -> Result<(TbmsInstance, LiftedInstance, BroadcastProtocol), RnmtsError> {
    let (red, base) = tbms_yes_protocol(inst, triples)?;
    let lifted = tbms_to_tb(&red.graph, &red.sources, red.t);
    let p = lift_protocol(&lifted, &base);
    Ok((red, lifted, p))
}

/// Elimination tree of height at most 6 for the lifted graph: `s_0`, then
/// `l_i` and `r_i`, then `s_ij`, then star centers, then leaves.
pub fn treedepth_witness(red: &TbmsInstance, lifted: &LiftedInstance) -> EliminationTree {
    let mut parent = vec![None; lifted.graph.n()];
    let s0 = lifted.s;
    let hang = |parent: &mut Vec<Option<usize>>, star: &Star, up: usize| {
        parent[star.center] = Some(up);
        for &l in &star.leaves {
            parent[l] = Some(star.center);
        }
    };
    for (_, star) in &red.stars {
        hang(&mut parent, star, s0);
    }
    hang(&mut parent, &lifted.z, s0);
    for gad in &red.gadgets {
        parent[gad.l] = Some(s0);
        parent[gad.r] = Some(gad.l);
        for cell in &gad.cells {
            parent[cell.s] = Some(gad.r);
            parent[cell.l] = Some(cell.s);
            parent[cell.r] = Some(cell.s);
            for star in &cell.stars {
                hang(&mut parent, star, cell.s);
            }
        }
    }
    for (i, _, star) in &lifted.stars {
        hang(&mut parent, star, lifted.sources[*i]);
    }
    EliminationTree { parent }
}
