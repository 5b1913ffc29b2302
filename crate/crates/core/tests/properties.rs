use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tbcast::approx::{clique_cover_approx, cvd_approx, min_arrival_rounds, min_cvd_bruteforce};
use tbcast::bitset::VertexSet;
use tbcast::bounds::{all_bounds, diameter_half_bound, eccentricity_bound, separator_bound, BoundWitnesses, FLOAT_SLACK};
use tbcast::decomposition::{
    greedy_clique_cover, min_degree_decomposition, standardize_path_decomposition, to_nice, PathDecomposition,
};
use tbcast::dtc::{dtc_solve, dtc_upper_bound, extract_signature, find_clique_modulator, reconstruct};
use tbcast::exact::{branch_bound_opt, degree2_exact, subset_dp_opt, tree_opt, twt_feasible};
use tbcast::flow::{b_matching, max_flow, FlowNetwork};
use tbcast::generate::{clique_plus_modulator, connected_gnp, random_cactus, random_tree};
use tbcast::graph::{components, Graph};
use tbcast::protocol::{from_schedule, greedy_complete, validate, BroadcastProtocol, Transmission};
use tbcast::reductions::{random_rnmts, reduce_cactus, reduce_tbms, restrict_nmts, solve_rnmts};
use num::rational::Ratio;
use tbcast::vi::vi_solve;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on `n` vertices: random tree, cactus or G(n, p).
fn graph(seed: u64, n: usize) -> Graph {
    let mut r = rng(seed);
    match seed % 3 {
        0 => random_tree(&mut r, n),
        1 => random_cactus(&mut r, n),
        _ => {
            let p = r.gen_range(0.2..0.7);
            connected_gnp(&mut r, n, p)
        }
    }
}

fn opt(g: &Graph, s: usize) -> u32 {
    subset_dp_opt(g, &VertexSet::singleton(g.n(), s), None).unwrap().rounds
}

fn set_from_mask(n: usize, mask: u32) -> VertexSet {
    VertexSet::from_slice(n, &(0..n).filter(|&v| mask >> v & 1 == 1).collect::<Vec<_>>())
}

/// Vertex-separation path decomposition of a random order.
fn order_pd(g: &Graph, seed: u64) -> PathDecomposition {
    use rand::seq::SliceRandom;
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let last: Vec<usize> = (0..n).map(|v| g.neighbors(v).iter().map(|&w| pos[w]).chain([pos[v]]).max().unwrap()).collect();
    let bags = (0..n)
        .map(|i| VertexSet::from_slice(n, &order[..=i].iter().copied().filter(|&u| last[u] >= i).collect::<Vec<_>>()))
        .collect();
    PathDecomposition::new(bags)
}

/// Maximum b-matching by augmenting paths over capacity copies, independent
/// of the flow code.
fn kuhn_b_matching(caps: &[usize], right: usize, edges: &[(usize, usize)]) -> usize {
    let copies: Vec<(usize, usize)> = caps.iter().enumerate().flat_map(|(l, &c)| (0..c).map(move |i| (l, i))).collect();
    let mut owner: Vec<Option<usize>> = vec![None; right];
    fn aug(c: usize, copies: &[(usize, usize)], edges: &[(usize, usize)], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &(l, r) in edges {
            if l != copies[c].0 || seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r].is_none_or(|o| aug(o, copies, edges, owner, seen)) {
                owner[r] = Some(c);
                return true;
            }
        }
        false
    }
    (0..copies.len())
        .filter(|&c| aug(c, &copies, edges, &mut owner, &mut vec![false; right]))
        .count()
}

/// Numerical matching by brute force over permutations.
fn nmts_brute(a: &[u32], b: &[u32], c: &[u32]) -> bool {
    fn go(i: usize, a: &[u32], b: &[u32], c: &[u32], ub: &mut [bool], uc: &mut [bool]) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if ub[j] {
                continue;
            }
            for k in 0..c.len() {
                if !uc[k] && a[i] + b[j] == c[k] {
                    ub[j] = true;
                    uc[k] = true;
                    if go(i + 1, a, b, c, ub, uc) {
                        return true;
                    }
                    ub[j] = false;
                    uc[k] = false;
                }
            }
        }
        false
    }
    go(0, a, b, c, &mut vec![false; b.len()], &mut vec![false; c.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn components_partition(seed in any::<u64>(), n in 1usize..12, mask in any::<u32>()) {
        let g = graph(seed, n);
        let all = components(&g, &VertexSet::new(n));
        prop_assert_eq!(all.len(), 1);
        prop_assert_eq!(&all[0], &VertexSet::full(n));
        let s = set_from_mask(n, mask);
        let total: usize = components(&g, &s).iter().map(VertexSet::len).sum();
        prop_assert_eq!(total, n - s.len());
    }

    #[test]
    fn standardized_path_decompositions(seed in any::<u64>(), n in 1usize..12) {
        let g = graph(seed, n);
        let pd = standardize_path_decomposition(&g, &order_pd(&g, seed)).unwrap();
        prop_assert!(pd.validate(&g).is_ok());
        prop_assert!(pd.is_standard());
    }

    #[test]
    fn nice_decompositions_keep_width(seed in any::<u64>(), n in 1usize..12) {
        let g = graph(seed, n);
        let td = min_degree_decomposition(&g);
        let nice = to_nice(&g, &td).unwrap();
        prop_assert!(nice.validate(&g).is_ok());
        prop_assert_eq!(nice.width(), td.width());
    }

    #[test]
    fn schedules_round_trip(seed in any::<u64>(), n in 1usize..12) {
        let g = graph(seed, n);
        let p = greedy_complete(&g, &BroadcastProtocol::single_source(n, 0), n as u32).unwrap();
        let sched: Vec<Transmission> = p.schedule();
        let q = from_schedule(&g, p.sources(), &sched).unwrap();
        let max = sched.iter().map(|x| x.round).max().unwrap_or(0);
        prop_assert_eq!(validate(&g, q.sources(), &q), Ok(max));
    }

    #[test]
    fn informed_at_most_doubles(seed in any::<u64>(), n in 1usize..12, budget in 0u32..12) {
        let g = graph(seed, n);
        let sources = VertexSet::singleton(n, (seed as usize) % n);
        match greedy_complete(&g, &BroadcastProtocol::new(&sources), budget) {
            Ok(p) => {
                let rounds = validate(&g, &sources, &p).unwrap();
                prop_assert!(rounds <= budget);
                for r in 0..=rounds {
                    let informed = (0..n).filter(|&v| p.round(v).is_some_and(|x| x <= r)).count();
                    prop_assert!(informed <= sources.len() << r);
                }
            }
            Err(_) => {
                let free = greedy_complete(&g, &BroadcastProtocol::new(&sources), n as u32).unwrap();
                prop_assert!(free.rounds() > budget);
            }
        }
    }

    #[test]
    fn exact_solvers_agree(seed in any::<u64>(), n in 1usize..10) {
        let g = graph(seed, n);
        let s = (seed as usize / 7) % n;
        let dp = subset_dp_opt(&g, &VertexSet::singleton(n, s), None).unwrap();
        prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &dp.protocol), Ok(dp.rounds));
        let bb = branch_bound_opt(&g, s, 0, None).unwrap();
        prop_assert!(bb.optimal);
        prop_assert_eq!(bb.rounds, dp.rounds);
        prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &bb.protocol), Ok(bb.rounds));
        let nice = to_nice(&g, &min_degree_decomposition(&g)).unwrap();
        // The table grows quickly with t, so only the threshold and one step past it.
        let feasible = |t: u32| twt_feasible(&g, s, t, &nice).unwrap();
        if dp.rounds > 0 {
            prop_assert!(feasible(dp.rounds - 1).is_none());
        }
        let p = feasible(dp.rounds).expect("feasible at the optimum");
        prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &p), Ok(dp.rounds));
        prop_assert!(feasible(dp.rounds + 1).is_some());
        if g.is_tree() {
            let t = tree_opt(&g, s).unwrap();
            prop_assert_eq!(t.rounds, dp.rounds);
            prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &t.protocol), Ok(t.rounds));
        }
        if (0..n).all(|v| v == s || g.degree(v) <= 2) {
            let d = degree2_exact(&g, s).unwrap();
            prop_assert_eq!(d.rounds, dp.rounds);
            prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &d.protocol), Ok(d.rounds));
        }
        let v = vi_solve(&g, s).unwrap().solution;
        prop_assert_eq!(v.rounds, dp.rounds);
        prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &v.protocol), Ok(v.rounds));
    }

    #[test]
    fn bounds_are_sound(seed in any::<u64>(), n in 2usize..10) {
        let g = graph(seed, n);
        let s = (seed as usize / 5) % n;
        let o = opt(&g, s);
        let w = BoundWitnesses {
            path_decomposition: Some(standardize_path_decomposition(&g, &order_pd(&g, seed)).unwrap()),
            ..Default::default()
        };
        for c in all_bounds(&g, s, &w, 2).unwrap() {
            prop_assert!(c.value.to_f64() - FLOAT_SLACK <= o as f64, "{:?}", c);
        }
        let ecc = eccentricity_bound(&g, s).unwrap();
        prop_assert!(Ratio::from_integer(ecc as u64) >= diameter_half_bound(&g).unwrap());
        for v in 0..n {
            let single = VertexSet::singleton(n, v);
            let count = components(&g, &single).len() as u64;
            prop_assert_eq!(separator_bound(&g, &single).unwrap(), Ratio::from_integer(count));
        }
    }

    #[test]
    fn approximations_validate(seed in any::<u64>(), n in 1usize..10, e in 0usize..3) {
        let g = graph(seed, n);
        let s = (seed as usize / 3) % n;
        let eps = [Ratio::new(1u64, 2), Ratio::new(1, 1), Ratio::new(2, 1)][e];
        let src = VertexSet::singleton(n, s);
        let o = opt(&g, s);
        let r = clique_cover_approx(&g, s, &greedy_clique_cover(&g), eps).unwrap();
        prop_assert_eq!(validate(&g, &src, &r.protocol), Ok(r.rounds));
        prop_assert!(Ratio::from_integer(r.rounds as u64) <= (eps + 1) * o as u64);
        prop_assert!(Ratio::from_integer(r.rounds as u64) <= r.guarantee_bound);
        let r = cvd_approx(&g, s, &min_cvd_bruteforce(&g), eps).unwrap();
        prop_assert_eq!(validate(&g, &src, &r.protocol), Ok(r.rounds));
        prop_assert!(Ratio::from_integer(r.rounds as u64) <= (eps + 2) * o as u64);
        prop_assert!(Ratio::from_integer(r.rounds as u64) <= r.guarantee_bound);
    }

    #[test]
    fn arrival_is_a_lower_bound(seed in any::<u64>(), n in 2usize..10, mask in 1u32..512) {
        let g = graph(seed, n);
        let sep = set_from_mask(n, mask & ((1 << n) - 1));
        prop_assume!(!sep.is_empty());
        let (l, senders) = min_arrival_rounds(&g, &sep).unwrap();
        prop_assert_eq!(senders.len(), components(&g, &sep).len());
        for s in sep.iter() {
            prop_assert!(l <= opt(&g, s));
        }
    }

    #[test]
    fn dtc_matches_oracle(seed in any::<u64>(), m in 1usize..9, k in 0usize..4) {
        let (g, _) = clique_plus_modulator(&mut rng(seed), m, k);
        let n = g.n();
        prop_assume!(n <= 10);
        let x = find_clique_modulator(&g, k).unwrap();
        let s = (seed as usize) % n;
        let d = dtc_solve(&g, s, &x).unwrap();
        prop_assert_eq!(d.solution.rounds, opt(&g, s));
        prop_assert!(d.solution.rounds <= dtc_upper_bound(&g, &x));
        let back = reconstruct(&g, s, &x, &d.signature).unwrap();
        prop_assert_eq!(validate(&g, &VertexSet::singleton(n, s), &back), Ok(d.signature.t));
        let again = extract_signature(&g, s, &x, &back);
        for (a, b) in again.entries.iter().zip(&d.signature.entries) {
            prop_assert_eq!((a.vertex, a.tau), (b.vertex, b.tau));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn b_matching_matches_flow(seed in any::<u64>(), left in 1usize..9, right in 1usize..9) {
        let mut r = rng(seed);
        let caps: Vec<usize> = (0..left).map(|_| r.gen_range(0..4)).collect();
        let edges: Vec<(usize, usize)> = (0..left)
            .flat_map(|l| (0..right).map(move |x| (l, x)))
            .filter(|_| r.gen_bool(0.4))
            .collect();
        let m = b_matching(&caps, right, &edges);
        let mut net = FlowNetwork::new(left + right + 2);
        let (src, sink) = (left + right, left + right + 1);
        for (l, &c) in caps.iter().enumerate() {
            net.add_arc(src, l, c as i64);
        }
        for x in 0..right {
            net.add_arc(left + x, sink, 1);
        }
        for &(l, x) in &edges {
            net.add_arc(l, left + x, 1);
        }
        prop_assert_eq!(m.size as i64, max_flow(&net, src, sink).value);
        prop_assert_eq!(m.size, kuhn_b_matching(&caps, right, &edges));
        let mut load = vec![0; left];
        for (x, p) in m.partner.iter().enumerate() {
            if let Some(l) = *p {
                prop_assert!(edges.contains(&(l, x)));
                load[l] += 1;
            }
        }
        prop_assert!(load.iter().zip(&caps).all(|(a, c)| a <= c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reduction_sizes(seed in any::<u64>(), n in 1usize..=4) {
        let inst = random_rnmts(&mut rng(seed), n, 20);
        let t = inst.t() as usize;
        let per = 1 + t * (t + 1) / 2;
        prop_assert_eq!(reduce_cactus(&inst).graph.n(), per);
        let red = reduce_tbms(&inst);
        prop_assert_eq!(red.graph.n(), red.sources.len() * per);
    }
}

#[test]
fn restriction_preserves_answers() {
    use rand::seq::SliceRandom;
    let (mut yes, mut no) = (0, 0);
    for seed in 0..3000u64 {
        let mut r = rng(seed);
        let n = 1 + (seed % 3) as usize;
        let mut pool: Vec<u32> = (1..=14).collect();
        pool.shuffle(&mut r);
        let a = pool[..n].to_vec();
        let b = pool[n..2 * n].to_vec();
        let mut c: Vec<u32> = if r.gen_bool(0.5) {
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        } else {
            pool[2 * n..3 * n].to_vec()
        };
        // Fix the last target so the sums agree.
        let total: i64 = a.iter().chain(&b).map(|&x| x as i64).sum::<i64>() - c[..n - 1].iter().map(|&x| x as i64).sum::<i64>();
        if total <= 0 {
            continue;
        }
        c[n - 1] = total as u32;
        let Ok(inst) = restrict_nmts(&a, &b, &c) else { continue };
        let expected = nmts_brute(&a, &b, &c);
        assert_eq!(solve_rnmts(&inst).is_some(), expected, "{a:?} {b:?} {c:?}");
        if expected {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes >= 50 && no >= 50, "yes {yes} no {no}");
}
