//! Integral maximum flow (Dinic) and bipartite b-matching.
//!
//! The two are implemented independently so each can check the other.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
}

/// Directed network with integral capacities. Arc `i` is stored at index
/// `2i`, its residual twin at `2i + 1`.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    arcs: Vec<Arc>,
    head: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    pub value: i64,
    /// Flow on each arc in insertion order.
    pub flows: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            n,
            arcs: Vec::new(),
            head: vec![Vec::new(); n],
        }
    }

    /// Adds arc `u -> v` and returns its index.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: i64) -> usize {
        assert!(cap >= 0);
        let id = self.arcs.len() / 2;
        self.head[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap });
        self.head[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap: 0 });
        id
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

pub fn max_flow(net: &FlowNetwork, source: usize, sink: usize) -> FlowResult {
    let original: Vec<i64> = net.arcs.iter().map(|a| a.cap).collect();
    let mut arcs = net.arcs.clone();
    let n = net.n;
    let mut value = 0;
    if source != sink {
        loop {
            let mut level = vec![usize::MAX; n];
            level[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                for &e in &net.head[u] {
                    let a = &arcs[e];
                    if a.cap > 0 && level[a.to] == usize::MAX {
                        level[a.to] = level[u] + 1;
                        queue.push_back(a.to);
                    }
                }
            }
            if level[sink] == usize::MAX {
                break;
            }
            let mut next = vec![0usize; n];
            loop {
                let pushed = augment(net, &mut arcs, &level, &mut next, source, sink, i64::MAX);
                if pushed == 0 {
                    break;
                }
                value += pushed;
            }
        }
    }
    let flows = (0..original.len() / 2)
        .map(|i| original[2 * i] - arcs[2 * i].cap)
        .collect();
    FlowResult { value, flows }
}

fn augment(
    net: &FlowNetwork,
    arcs: &mut [Arc],
    level: &[usize],
    next: &mut [usize],
    u: usize,
    sink: usize,
    limit: i64,
) -> i64 {
    if u == sink {
        return limit;
    }
    while next[u] < net.head[u].len() {
        let e = net.head[u][next[u]];
        let (to, cap) = (arcs[e].to, arcs[e].cap);
        if cap > 0 && level[to] == level[u] + 1 {
            let got = augment(net, arcs, level, next, to, sink, limit.min(cap));
            if got > 0 {
                arcs[e].cap -= got;
                arcs[e ^ 1].cap += got;
                return got;
            }
        }
        next[u] += 1;
    }
    0
}

/// Result of a bipartite b-matching where every right vertex has demand 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMatching {
    /// Left partner of each right vertex.
    pub partner: Vec<Option<usize>>,
    pub size: usize,
}

impl BMatching {
    pub fn saturated(&self) -> bool {
        self.partner.iter().all(Option::is_some)
    }
}

/// Maximum b-matching: left vertex `l` may take up to `caps[l]` right
/// vertices. Right vertices are processed in increasing order and try their
/// left neighbours in increasing order.
pub fn b_matching(caps: &[usize], right: usize, edges: &[(usize, usize)]) -> BMatching {
    let mut radj = vec![Vec::new(); right];
    for &(l, r) in edges {
        assert!(l < caps.len() && r < right, "edge ({l}, {r}) out of range");
        radj[r].push(l);
    }
    for list in &mut radj {
        list.sort_unstable();
        list.dedup();
    }
    let mut load: Vec<Vec<usize>> = vec![Vec::new(); caps.len()];
    let mut partner = vec![None; right];
    let mut size = 0;
    for r in 0..right {
        let mut visited = vec![false; caps.len()];
        if try_assign(r, caps, &radj, &mut load, &mut partner, &mut visited) {
            size += 1;
        }
    }
    BMatching { partner, size }
}

fn try_assign(
    r: usize,
    caps: &[usize],
    radj: &[Vec<usize>],
    load: &mut [Vec<usize>],
    partner: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &l in &radj[r] {
        if visited[l] {
            continue;
        }
        visited[l] = true;
        if load[l].len() < caps[l] {
            load[l].push(r);
            partner[r] = Some(l);
            return true;
        }
        for i in 0..load[l].len() {
            let other = load[l][i];
            if try_assign(other, caps, radj, load, partner, visited) {
                load[l][i] = r;
                partner[r] = Some(l);
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_examples() {
        let mut net = FlowNetwork::new(2);
        net.add_arc(0, 1, 5);
        assert_eq!(max_flow(&net, 0, 1).value, 5);

        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 1, 1);
        net.add_arc(1, 3, 1);
        net.add_arc(0, 2, 1);
        net.add_arc(2, 3, 1);
        let r = max_flow(&net, 0, 3);
        assert_eq!(r.value, 2);
        assert_eq!(r.flows, vec![1, 1, 1, 1]);
    }

    #[test]
    fn flow_needs_residual_arc() {
        // The shortest path 0-1-2-3 blocks both other routes unless flow is pushed back.
        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 1, 1);
        net.add_arc(0, 2, 1);
        net.add_arc(1, 2, 1);
        net.add_arc(1, 3, 1);
        net.add_arc(2, 3, 1);
        assert_eq!(max_flow(&net, 0, 3).value, 2);
    }

    #[test]
    fn four_layer_network_with_three_modulator_vertices() {
        // source, h_1..h_3, r_1..r_3, sink; each h_v reaches one class.
        let mut net = FlowNetwork::new(8);
        for v in 1..=3 {
            net.add_arc(0, v, 1);
            net.add_arc(v, 3 + v, i64::MAX / 4);
            net.add_arc(3 + v, 7, 1);
        }
        assert_eq!(max_flow(&net, 0, 7).value, 3);
    }

    #[test]
    fn b_matching_examples() {
        let full = [(0, 0), (0, 1), (0, 2)];
        let m = b_matching(&[3], 3, &full);
        assert_eq!(m.size, 3);
        assert!(m.saturated());
        let m = b_matching(&[2], 3, &full);
        assert_eq!(m.size, 2);
        assert!(!m.saturated());
        let m = b_matching(&[1, 1], 2, &[(0, 0), (0, 1), (1, 0)]);
        assert!(m.saturated());
        assert_eq!(m.partner, vec![Some(1), Some(0)]);
    }
}
