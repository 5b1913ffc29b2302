//! Structural witnesses: path, tree and nice tree decompositions, elimination
//! trees and clique covers, with validators, converters and text formats.

use thiserror::Error;

use crate::bitset::VertexSet;
use crate::error::{content_lines, parse_num, ParseError};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("vertex {0} is in no bag")]
    VertexUncovered(usize),
    #[error("edge {0}-{1} is in no bag")]
    EdgeUncovered(usize, usize),
    #[error("bags containing vertex {0} are not connected")]
    NotConnected(usize),
    #[error("bag graph is not a tree")]
    NotATree,
    #[error("path decomposition is not standard")]
    NotStandard,
    #[error("edge {0}-{1} joins vertices that are not ancestor-related")]
    AncestryViolated(usize, usize),
    #[error("parent map is not a rooted tree: {0}")]
    BadParentMap(String),
    #[error("parts do not partition the vertex set")]
    NotPartition,
    #[error("part {0} is not a clique")]
    NotClique(usize),
    #[error("decomposition has no bags")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDecomposition {
    pub bags: Vec<VertexSet>,
}

impl PathDecomposition {
    pub fn new(bags: Vec<VertexSet>) -> Self {
        PathDecomposition { bags }
    }

    /// Consecutive-edge bags `{i-1, i}` of the path `0 - 1 - ... - n-1`.
    pub fn for_path(n: usize) -> Self {
        if n == 1 {
            return PathDecomposition::new(vec![VertexSet::singleton(1, 0)]);
        }
        PathDecomposition::new((1..n).map(|i| VertexSet::from_slice(n, &[i - 1, i])).collect())
    }

    pub fn width(&self) -> usize {
        self.bags.iter().map(VertexSet::len).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn length(&self) -> usize {
        self.bags.len()
    }

    pub fn is_standard(&self) -> bool {
        let b = &self.bags;
        (0..b.len()).all(|i| {
            !(i > 0 && b[i].is_subset(&b[i - 1])) && !(i + 1 < b.len() && b[i].is_subset(&b[i + 1]))
        })
    }

    pub fn validate(&self, g: &Graph) -> Result<(), DecompositionError> {
        if self.bags.is_empty() {
            return Err(DecompositionError::Empty);
        }
        let n = g.n();
        let mut first = vec![usize::MAX; n];
        let mut last = vec![0; n];
        for (i, bag) in self.bags.iter().enumerate() {
            for v in bag.iter() {
                if v >= n {
                    return Err(DecompositionError::OutOfRange(v));
                }
                first[v] = first[v].min(i);
                last[v] = i;
            }
        }
        for v in 0..n {
            if first[v] == usize::MAX {
                return Err(DecompositionError::VertexUncovered(v));
            }
            if (first[v]..=last[v]).any(|i| !self.bags[i].contains(v)) {
                return Err(DecompositionError::NotConnected(v));
            }
        }
        for (u, v) in g.edges() {
            if !self.bags.iter().any(|b| b.contains(u) && b.contains(v)) {
                return Err(DecompositionError::EdgeUncovered(u, v));
            }
        }
        Ok(())
    }

    /// As a tree decomposition whose bag graph is a path.
    pub fn to_tree_decomposition(&self) -> TreeDecomposition {
        TreeDecomposition {
            bags: self.bags.clone(),
            edges: (1..self.bags.len()).map(|i| (i - 1, i)).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.length(), self.width());
        for b in &self.bags {
            out.push_str(&join(b.iter()));
            out.push('\n');
        }
        out
    }
}

/// Repeatedly discards a bag contained in an adjacent bag.
pub fn standardize_path_decomposition(
    g: &Graph,
    pd: &PathDecomposition,
) -> Result<PathDecomposition, DecompositionError> {
    pd.validate(g)?;
    let mut bags = pd.bags.clone();
    let mut i = 0;
    while i < bags.len() && bags.len() > 1 {
        let sub_prev = i > 0 && bags[i].is_subset(&bags[i - 1]);
        let sub_next = i + 1 < bags.len() && bags[i].is_subset(&bags[i + 1]);
        if sub_prev || sub_next {
            bags.remove(i);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    Ok(PathDecomposition { bags })
}

pub fn parse_path_decomposition(text: &str, n: usize) -> Result<PathDecomposition, ParseError> {
    let mut lines = content_lines(text);
    let (l0, head) = lines.next().ok_or_else(|| ParseError::new(1, "missing header"))?;
    if head.len() != 2 {
        return Err(ParseError::new(l0, "header must be `bags width`"));
    }
    let count: usize = parse_num(head[0], l0, "bag count")?;
    let width: usize = parse_num(head[1], l0, "width")?;
    let mut bags = Vec::with_capacity(count);
    for (ln, toks) in lines {
        let mut bag = VertexSet::new(n);
        for t in toks {
            let v: usize = parse_num(t, ln, "vertex")?;
            if v >= n {
                return Err(ParseError::new(ln, format!("vertex {v} out of range")));
            }
            bag.insert(v);
        }
        bags.push(bag);
    }
    if bags.len() != count {
        return Err(ParseError::new(l0, format!("declared {count} bags, found {}", bags.len())));
    }
    let pd = PathDecomposition { bags };
    if pd.width() != width {
        return Err(ParseError::new(l0, format!("declared width {width}, actual {}", pd.width())));
    }
    Ok(pd)
}

/// Tree decomposition with an explicit bag tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<VertexSet>,
    pub edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(VertexSet::len).max().unwrap_or(1).saturating_sub(1)
    }

    fn bag_adjacency(&self) -> Result<Vec<Vec<usize>>, DecompositionError> {
        let k = self.bags.len();
        if k == 0 {
            return Err(DecompositionError::Empty);
        }
        if self.edges.len() + 1 != k {
            return Err(DecompositionError::NotATree);
        }
        let mut adj = vec![Vec::new(); k];
        for &(a, b) in &self.edges {
            if a >= k || b >= k || a == b {
                return Err(DecompositionError::NotATree);
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(DecompositionError::NotATree);
        }
        Ok(adj)
    }

    pub fn validate(&self, g: &Graph) -> Result<(), DecompositionError> {
        let adj = self.bag_adjacency()?;
        let n = g.n();
        for bag in &self.bags {
            if let Some(v) = bag.iter().find(|&v| v >= n) {
                return Err(DecompositionError::OutOfRange(v));
            }
        }
        for v in 0..n {
            let holders: Vec<usize> = (0..self.bags.len()).filter(|&i| self.bags[i].contains(v)).collect();
            if holders.is_empty() {
                return Err(DecompositionError::VertexUncovered(v));
            }
            let mut seen = vec![false; self.bags.len()];
            let mut stack = vec![holders[0]];
            seen[holders[0]] = true;
            let mut count = 1;
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if !seen[y] && self.bags[y].contains(v) {
                        seen[y] = true;
                        count += 1;
                        stack.push(y);
                    }
                }
            }
            if count != holders.len() {
                return Err(DecompositionError::NotConnected(v));
            }
        }
        for (u, v) in g.edges() {
            if !self.bags.iter().any(|b| b.contains(u) && b.contains(v)) {
                return Err(DecompositionError::EdgeUncovered(u, v));
            }
        }
        Ok(())
    }

    /// PACE `.td` text (1-based vertex and bag ids).
    pub fn to_text(&self, n: usize) -> String {
        let mut out = format!("s td {} {} {}\n", self.bags.len(), self.width() + 1, n);
        for (i, b) in self.bags.iter().enumerate() {
            out.push_str(&format!("b {}", i + 1));
            for v in b.iter() {
                out.push_str(&format!(" {}", v + 1));
            }
            out.push('\n');
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("{} {}\n", a + 1, b + 1));
        }
        out
    }
}

/// Parses the PACE `.td` layout; vertex ids in the file are 1-based.
pub fn parse_tree_decomposition(text: &str, n: usize) -> Result<TreeDecomposition, ParseError> {
    let mut bags: Vec<Option<VertexSet>> = Vec::new();
    let mut edges = Vec::new();
    let mut header = None;
    for (ln, toks) in text.lines().enumerate().map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>())) {
        match toks.first() {
            None | Some(&"c") => continue,
            Some(&"s") => {
                if toks.len() != 5 || toks[1] != "td" {
                    return Err(ParseError::new(ln, "solution line must be `s td bags width n`"));
                }
                let count: usize = parse_num(toks[2], ln, "bag count")?;
                let nv: usize = parse_num(toks[4], ln, "vertex count")?;
                if nv != n {
                    return Err(ParseError::new(ln, format!("decomposition is for {nv} vertices, graph has {n}")));
                }
                bags = vec![None; count];
                header = Some(ln);
            }
            Some(&"b") => {
                if header.is_none() {
                    return Err(ParseError::new(ln, "bag before solution line"));
                }
                let id: usize = parse_num(toks.get(1).copied().unwrap_or(""), ln, "bag id")?;
                if id == 0 || id > bags.len() || bags[id - 1].is_some() {
                    return Err(ParseError::new(ln, format!("bad or repeated bag id {id}")));
                }
                let mut bag = VertexSet::new(n);
                for t in &toks[2..] {
                    let v: usize = parse_num(t, ln, "vertex")?;
                    if v == 0 || v > n {
                        return Err(ParseError::new(ln, format!("vertex {v} out of range")));
                    }
                    bag.insert(v - 1);
                }
                bags[id - 1] = Some(bag);
            }
            Some(_) => {
                if toks.len() != 2 || header.is_none() {
                    return Err(ParseError::new(ln, "expected bag edge `i j`"));
                }
                let a: usize = parse_num(toks[0], ln, "bag id")?;
                let b: usize = parse_num(toks[1], ln, "bag id")?;
                if a == 0 || b == 0 || a > bags.len() || b > bags.len() {
                    return Err(ParseError::new(ln, "bag id out of range"));
                }
                edges.push((a - 1, b - 1));
            }
        }
    }
    let ln = header.ok_or_else(|| ParseError::new(1, "missing solution line"))?;
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| ParseError::new(ln, format!("bag {} missing", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TreeDecomposition { bags, edges })
}

/// Greedy min-degree elimination (ties by minimum id). A convenience
/// provider only; widths are not optimal.
pub fn min_degree_decomposition(g: &Graph) -> TreeDecomposition {
    let n = g.n();
    if n == 0 {
        return TreeDecomposition {
            bags: vec![VertexSet::new(0)],
            edges: vec![],
        };
    }
    let mut adj: Vec<VertexSet> = (0..n).map(|v| VertexSet::from_slice(n, g.neighbors(v))).collect();
    let mut alive = VertexSet::full(n);
    let mut order = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n);
    while let Some(v) = alive.iter().min_by_key(|&v| (adj[v].len(), v)) {
        let nb = adj[v].clone();
        for a in nb.iter() {
            for b in nb.iter() {
                if a != b {
                    adj[a].insert(b);
                }
            }
            adj[a].remove(v);
        }
        let mut bag = nb;
        bag.insert(v);
        bags.push(bag);
        order.push(v);
        alive.remove(v);
    }
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        match bags[i].iter().filter(|&u| u != v).map(|u| pos[u]).min() {
            Some(j) => edges.push((i, j)),
            None => roots.push(i),
        }
    }
    for w in roots.windows(2) {
        edges.push((w[0], w[1]));
    }
    TreeDecomposition { bags, edges }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiceKind {
    Leaf,
    Introduce(usize),
    Forget(usize),
    Join,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceNode {
    /// Sorted bag members.
    pub bag: Vec<usize>,
    pub kind: NiceKind,
    pub children: Vec<usize>,
}

/// Nice tree decomposition; nodes are stored children-first and the last
/// node is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceTreeDecomposition {
    pub nodes: Vec<NiceNode>,
}

impl NiceTreeDecomposition {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn width(&self) -> usize {
        self.nodes.iter().map(|x| x.bag.len()).max().unwrap_or(1).saturating_sub(1)
    }

    /// Checks the node rules and, through the underlying tree decomposition,
    /// the decomposition axioms for `g`.
    pub fn validate(&self, g: &Graph) -> Result<(), DecompositionError> {
        if self.nodes.is_empty() {
            return Err(DecompositionError::Empty);
        }
        let bad = |msg: &str| Err(DecompositionError::BadParentMap(msg.to_string()));
        let mut has_parent = vec![false; self.nodes.len()];
        for (i, x) in self.nodes.iter().enumerate() {
            if x.bag.windows(2).any(|w| w[0] >= w[1]) {
                return bad("bag not sorted");
            }
            for &c in &x.children {
                if c >= i || has_parent[c] {
                    return bad("children must precede parents and have one parent");
                }
                has_parent[c] = true;
            }
            let child_bag = |k: usize| &self.nodes[x.children[k]].bag;
            let ok = match x.kind {
                NiceKind::Leaf => x.children.is_empty() && x.bag.is_empty(),
                NiceKind::Introduce(v) => {
                    x.children.len() == 1 && x.bag.contains(&v) && {
                        let mut b = child_bag(0).clone();
                        b.push(v);
                        b.sort_unstable();
                        b == x.bag
                    }
                }
                NiceKind::Forget(v) => {
                    x.children.len() == 1 && !x.bag.contains(&v) && {
                        let mut b = x.bag.clone();
                        b.push(v);
                        b.sort_unstable();
                        &b == child_bag(0)
                    }
                }
                NiceKind::Join => x.children.len() == 2 && child_bag(0) == &x.bag && child_bag(1) == &x.bag,
            };
            if !ok {
                return bad(&format!("node {i} violates its kind"));
            }
        }
        if has_parent.iter().filter(|p| !**p).count() != 1 || has_parent[self.root()] {
            return bad("not a single rooted tree");
        }
        if !self.nodes[self.root()].bag.is_empty() {
            return bad("root bag must be empty");
        }
        self.to_tree_decomposition(g.n()).validate(g)
    }

    pub fn to_tree_decomposition(&self, n: usize) -> TreeDecomposition {
        let bags = self.nodes.iter().map(|x| VertexSet::from_slice(n, &x.bag)).collect();
        let mut edges = Vec::new();
        for (i, x) in self.nodes.iter().enumerate() {
            for &c in &x.children {
                edges.push((c, i));
            }
        }
        TreeDecomposition { bags, edges }
    }
}

/// Converts a valid tree decomposition of `g` into a nice one of equal width.
pub fn to_nice(g: &Graph, td: &TreeDecomposition) -> Result<NiceTreeDecomposition, DecompositionError> {
    td.validate(g)?;
    let adj = td.bag_adjacency()?;
    let mut nodes = Vec::new();
    let top = build_nice(&mut nodes, td, &adj, 0, usize::MAX);
    let mut cur = top;
    let mut bag = nodes[top].bag.clone();
    while let Some(v) = bag.pop() {
        nodes.push(NiceNode {
            bag: bag.clone(),
            kind: NiceKind::Forget(v),
            children: vec![cur],
        });
        cur = nodes.len() - 1;
    }
    Ok(NiceTreeDecomposition { nodes })
}

fn build_nice(nodes: &mut Vec<NiceNode>, td: &TreeDecomposition, adj: &[Vec<usize>], x: usize, parent: usize) -> usize {
    let target = td.bags[x].to_vec();
    let mut branches = Vec::new();
    for &y in &adj[x] {
        if y == parent {
            continue;
        }
        let sub = build_nice(nodes, td, adj, y, x);
        branches.push(morph(nodes, sub, &target));
    }
    if branches.is_empty() {
        nodes.push(NiceNode {
            bag: vec![],
            kind: NiceKind::Leaf,
            children: vec![],
        });
        let leaf = nodes.len() - 1;
        branches.push(morph(nodes, leaf, &target));
    }
    let mut cur = branches[0];
    for &b in &branches[1..] {
        nodes.push(NiceNode {
            bag: target.clone(),
            kind: NiceKind::Join,
            children: vec![cur, b],
        });
        cur = nodes.len() - 1;
    }
    cur
}

/// Forgets then introduces vertices one at a time until the bag equals `target`.
fn morph(nodes: &mut Vec<NiceNode>, from: usize, target: &[usize]) -> usize {
    let mut cur = from;
    let mut bag = nodes[from].bag.clone();
    for v in bag.clone() {
        if !target.contains(&v) {
            bag.retain(|&u| u != v);
            nodes.push(NiceNode {
                bag: bag.clone(),
                kind: NiceKind::Forget(v),
                children: vec![cur],
            });
            cur = nodes.len() - 1;
        }
    }
    for &v in target {
        if !bag.contains(&v) {
            bag.push(v);
            bag.sort_unstable();
            nodes.push(NiceNode {
                bag: bag.clone(),
                kind: NiceKind::Introduce(v),
                children: vec![cur],
            });
            cur = nodes.len() - 1;
        }
    }
    cur
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTree {
    pub parent: Vec<Option<usize>>,
}

impl EliminationTree {
    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(Option::is_none)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, p) in self.parent.iter().enumerate() {
            match p {
                Some(p) => out.push_str(&format!("{v} {p}\n")),
                None => out.push_str(&format!("{v} -1\n")),
            }
        }
        out
    }
}

/// Returns the height (vertices on a longest root-to-leaf path) if every
/// edge of `g` joins an ancestor and a descendant.
pub fn validate_elimination_tree(g: &Graph, et: &EliminationTree) -> Result<usize, DecompositionError> {
    let n = g.n();
    if et.parent.len() != n {
        return Err(DecompositionError::BadParentMap(format!("{} entries for {n} vertices", et.parent.len())));
    }
    if n == 0 {
        return Ok(0);
    }
    if et.parent.iter().filter(|p| p.is_none()).count() != 1 {
        return Err(DecompositionError::BadParentMap("exactly one root required".into()));
    }
    let mut depth = vec![0usize; n];
    for v in 0..n {
        let mut d = 1;
        let mut u = v;
        while let Some(p) = et.parent[u] {
            if p >= n {
                return Err(DecompositionError::OutOfRange(p));
            }
            d += 1;
            if d > n {
                return Err(DecompositionError::BadParentMap("cycle".into()));
            }
            u = p;
        }
        depth[v] = d;
    }
    let is_ancestor = |a: usize, mut b: usize| loop {
        if a == b {
            return true;
        }
        match et.parent[b] {
            Some(p) => b = p,
            None => return false,
        }
    };
    for (u, v) in g.edges() {
        if !is_ancestor(u, v) && !is_ancestor(v, u) {
            return Err(DecompositionError::AncestryViolated(u, v));
        }
    }
    Ok(depth.into_iter().max().unwrap_or(0))
}

pub fn parse_elimination_tree(text: &str, n: usize) -> Result<EliminationTree, ParseError> {
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut count = 0;
    for (ln, toks) in content_lines(text) {
        if toks.len() != 2 {
            return Err(ParseError::new(ln, "line must be `vertex parent`"));
        }
        let v: usize = parse_num(toks[0], ln, "vertex")?;
        let p: i64 = parse_num(toks[1], ln, "parent")?;
        if v >= n || seen[v] {
            return Err(ParseError::new(ln, format!("vertex {v} out of range or repeated")));
        }
        seen[v] = true;
        count += 1;
        parent[v] = match p {
            -1 => None,
            p if p >= 0 && (p as usize) < n => Some(p as usize),
            _ => return Err(ParseError::new(ln, format!("parent {p} out of range"))),
        };
    }
    if count != n {
        return Err(ParseError::new(1, format!("expected {n} lines, found {count}")));
    }
    Ok(EliminationTree { parent })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueCover {
    pub parts: Vec<VertexSet>,
}

impl CliqueCover {
    pub fn validate(&self, g: &Graph) -> Result<(), DecompositionError> {
        let mut seen = VertexSet::new(g.n());
        for (i, p) in self.parts.iter().enumerate() {
            if p.is_empty() || p.universe() != g.n() || !p.is_disjoint(&seen) {
                return Err(DecompositionError::NotPartition);
            }
            seen.union_with(p);
            if !g.is_clique(p) {
                return Err(DecompositionError::NotClique(i));
            }
        }
        if seen.len() != g.n() {
            return Err(DecompositionError::NotPartition);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.parts.iter().map(|p| join(p.iter()) + "\n").collect()
    }
}

/// First-fit clique cover in vertex order.
pub fn greedy_clique_cover(g: &Graph) -> CliqueCover {
    let mut parts: Vec<VertexSet> = Vec::new();
    for v in 0..g.n() {
        match parts.iter_mut().find(|p| p.iter().all(|u| g.has_edge(u, v))) {
            Some(p) => {
                p.insert(v);
            }
            None => parts.push(VertexSet::singleton(g.n(), v)),
        }
    }
    CliqueCover { parts }
}

pub fn parse_clique_cover(text: &str, n: usize) -> Result<CliqueCover, ParseError> {
    let mut parts = Vec::new();
    for (ln, toks) in content_lines(text) {
        parts.push(parse_vertex_list(&toks, n, ln)?);
    }
    Ok(CliqueCover { parts })
}

/// A single line of vertex ids (an empty file gives the empty set).
pub fn parse_vertex_set(text: &str, n: usize) -> Result<VertexSet, ParseError> {
    let mut set = VertexSet::new(n);
    for (ln, toks) in content_lines(text) {
        set.union_with(&parse_vertex_list(&toks, n, ln)?);
    }
    Ok(set)
}

fn parse_vertex_list(toks: &[&str], n: usize, ln: usize) -> Result<VertexSet, ParseError> {
    let mut set = VertexSet::new(n);
    for t in toks {
        let v: usize = parse_num(t, ln, "vertex")?;
        if v >= n {
            return Err(ParseError::new(ln, format!("vertex {v} out of range")));
        }
        set.insert(v);
    }
    Ok(set)
}

fn join(it: impl Iterator<Item = usize>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}
