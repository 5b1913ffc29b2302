//! Acceptance suite: one PASS/FAIL line per criterion.

use std::cell::LazyCell;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num::rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tbcast::approx::{clique_cover_approx, cvd_approx, min_cvd_bruteforce};
use tbcast::bitset::VertexSet;
use tbcast::bounds::{all_bounds, BoundWitnesses, FLOAT_SLACK, SEPARATOR_CAP};
use tbcast::canon::connected_graphs;
use tbcast::decomposition::{
    greedy_clique_cover, min_degree_decomposition, standardize_path_decomposition, to_nice,
    validate_elimination_tree, EliminationTree, PathDecomposition,
};
use tbcast::dtc::{dtc_solve, extract_signature, find_clique_modulator, reconstruct};
use tbcast::exact::{branch_bound_opt, degree2_exact, subset_dp_opt, tree_opt, twt_opt};
use tbcast::generate::connected_gnp;
use tbcast::graph::Graph;
use tbcast::protocol::{validate, BroadcastProtocol};
use tbcast::reductions::{
    cactus_yes_protocol, lifted_yes_protocol, random_rnmts, reduce_cactus, reduce_tbms, rnmts_corpus, solve_rnmts,
    treedepth_witness, RnmtsInstance,
};
use tbcast::vi::vi_solve;

/// Round counts are compared exactly.
const ROUND_TOLERANCE: u32 = 0;
/// Irrational bounds are rounded up after subtracting this slack.
const BOUND_SLACK: f64 = FLOAT_SLACK;
const RANDOM_GRAPHS: usize = 300;
const CORPUS_SEED: u64 = 2024;

struct Instance {
    graph: usize,
    s: usize,
    opt: u32,
    protocol: BroadcastProtocol,
}

struct Corpus {
    graphs: Vec<Graph>,
    instances: Vec<Instance>,
}

fn build_corpus() -> Corpus {
    let mut graphs: Vec<Graph> = (1..=7).flat_map(connected_graphs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    for _ in 0..RANDOM_GRAPHS {
        let n = rng.gen_range(8..=10);
        let p = rng.gen_range(0.2..0.6);
        graphs.push(connected_gnp(&mut rng, n, p));
    }
    let mut instances = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        for s in 0..g.n() {
            let sol = subset_dp_opt(g, &VertexSet::singleton(g.n(), s), None).expect("subset dp handles n <= 10");
            instances.push(Instance {
                graph: i,
                s,
                opt: sol.rounds,
                protocol: sol.protocol,
            });
        }
    }
    Corpus { graphs, instances }
}

fn criterion(id: u32, name: &str, f: impl FnOnce() -> Result<String, String>) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panic: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{secs:.1}s]"),
        Err(detail) => println!("criterion {id:>2} FAIL  {name}: {detail} [{secs:.1}s]"),
    }
    outcome.is_ok()
}

fn check(violations: &[String], detail: String) -> Result<String, String> {
    if violations.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn same(a: u32, b: u32) -> bool {
    a.abs_diff(b) <= ROUND_TOLERANCE
}

/// Elimination tree from a DFS: every non-tree edge joins an ancestor and a
/// descendant.
fn dfs_elimination_tree(g: &Graph, root: usize) -> EliminationTree {
    let mut parent = vec![None; g.n()];
    let mut seen = vec![false; g.n()];
    fn go(g: &Graph, v: usize, parent: &mut [Option<usize>], seen: &mut [bool]) {
        seen[v] = true;
        for &w in g.neighbors(v) {
            if !seen[w] {
                parent[w] = Some(v);
                go(g, w, parent, seen);
            }
        }
    }
    go(g, root, &mut parent, &mut seen);
    EliminationTree { parent }
}

/// Vertex-separation path decomposition of the identity order.
fn order_path_decomposition(g: &Graph) -> PathDecomposition {
    let n = g.n();
    let last: Vec<usize> = (0..n).map(|v| g.neighbors(v).iter().copied().chain([v]).max().unwrap()).collect();
    let bags = (0..n)
        .map(|i| VertexSet::from_slice(n, &(0..=i).filter(|&u| last[u] >= i).collect::<Vec<_>>()))
        .collect();
    PathDecomposition::new(bags)
}

fn c1(c: &Corpus) -> Result<String, String> {
    let mut bad = Vec::new();
    let (mut trees, mut modulated) = (0, 0);
    let mut nice = Vec::new();
    for g in &c.graphs {
        nice.push(to_nice(g, &min_degree_decomposition(g)).expect("heuristic decomposition is valid"));
    }
    for inst in &c.instances {
        let g = &c.graphs[inst.graph];
        let (s, opt) = (inst.s, inst.opt);
        let tag = |what: &str, got: u32| format!("{what} gave {got}, oracle {opt} on {:?} s={s}", g.edges());
        let bb = branch_bound_opt(g, s, 0, None).unwrap();
        if !bb.optimal || !same(bb.rounds, opt) {
            bad.push(tag("branch_bound_opt", bb.rounds));
        }
        let vi = vi_solve(g, s).unwrap().solution.rounds;
        if !same(vi, opt) {
            bad.push(tag("vi_solve", vi));
        }
        let tw = twt_opt(g, s, &nice[inst.graph]).unwrap().rounds;
        if !same(tw, opt) {
            bad.push(tag("twt", tw));
        }
        if g.is_tree() {
            trees += 1;
            let t = tree_opt(g, s).unwrap().rounds;
            if !same(t, opt) {
                bad.push(tag("tree_opt", t));
            }
        }
        if let Some(x) = find_clique_modulator(g, 2) {
            modulated += 1;
            let d = dtc_solve(g, s, &x).unwrap().solution.rounds;
            if !same(d, opt) {
                bad.push(tag("dtc_solve", d));
            }
        }
    }
    check(
        &bad,
        format!(
            "{} graphs, {} (graph, source) pairs, {trees} on trees, {modulated} with a modulator of size <= 2",
            c.graphs.len(),
            c.instances.len()
        ),
    )
}

fn c2() -> Result<String, String> {
    let mut bad = Vec::new();
    for n in 1..=16usize {
        let path = Graph::path(n);
        let want = n as u32 - 1;
        for (name, got) in [
            ("tree_opt", tree_opt(&path, 0).unwrap().rounds),
            ("degree2_exact", degree2_exact(&path, 0).unwrap().rounds),
            ("branch_bound_opt", branch_bound_opt(&path, 0, 0, None).unwrap().rounds),
        ] {
            if got != want {
                bad.push(format!("P{n} {name} = {got}"));
            }
        }
        let k = Graph::complete(n);
        let want = usize::BITS - (n - 1).leading_zeros();
        let bb = branch_bound_opt(&k, 0, 0, None).unwrap();
        if bb.rounds != want || !bb.optimal {
            bad.push(format!("K{n} branch_bound_opt = {}", bb.rounds));
        }
        if n <= 15 {
            let got = subset_dp_opt(&k, &VertexSet::singleton(n, 0), None).unwrap().rounds;
            if got != want {
                bad.push(format!("K{n} subset_dp_opt = {got}"));
            }
        }
        let got = vi_solve(&k, 0).unwrap().solution.rounds;
        if got != want {
            bad.push(format!("K{n} vi_solve = {got}"));
        }
    }
    check(&bad, "paths and cliques for n = 1..16".into())
}

fn larger_rnmts() -> Vec<RnmtsInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..100)
        .map(|i| {
            let n = 2 + i % 4;
            random_rnmts(&mut rng, n, 4 * n as u32 + 6)
        })
        .collect()
}

fn c3() -> Result<String, String> {
    let mut all = rnmts_corpus(9);
    let exhaustive = all.len();
    all.extend(larger_rnmts());
    let mut bad = Vec::new();
    for inst in &all {
        let t = inst.t() as usize;
        let per = 1 + t * (t + 1) / 2;
        let cactus = reduce_cactus(inst).graph.n();
        if cactus != per {
            bad.push(format!("cactus of {:?} has {cactus} vertices, expected {per}", inst.to_text()));
        }
        let tbms = reduce_tbms(inst);
        if tbms.graph.n() != tbms.sources.len() * per {
            bad.push(format!("tbms of {:?} has {} vertices", inst.to_text(), tbms.graph.n()));
        }
    }
    check(&bad, format!("{exhaustive} exhaustive + 100 random instances"))
}

fn c4() -> Result<String, String> {
    let corpus: Vec<RnmtsInstance> = rnmts_corpus(11).into_iter().filter(|x| x.t() <= 11).collect();
    let mut bad = Vec::new();
    let mut yes = 0;
    for inst in &corpus {
        let answer = solve_rnmts(inst).is_some();
        yes += answer as usize;
        let red = reduce_cactus(inst);
        let opt = degree2_exact(&red.graph, red.s).unwrap().rounds;
        if answer != (opt <= inst.t()) {
            bad.push(format!("{:?}: partition {answer}, optimum {opt}, t {}", inst.to_text(), inst.t()));
        }
    }
    let no = RnmtsInstance::new(&[2, 10], &[1, 3], &[7, 9]).unwrap();
    let red = reduce_cactus(&no);
    let opt = degree2_exact(&red.graph, red.s).unwrap().rounds;
    if solve_rnmts(&no).is_some() || opt <= 9 {
        bad.push(format!("no-instance: optimum {opt}"));
    }
    check(
        &bad,
        format!(
            "{} instances ({yes} yes); no-instance has {} vertices and optimum {opt} > 9",
            corpus.len(),
            red.graph.n()
        ),
    )
}

fn c5() -> Result<String, String> {
    let mut all = rnmts_corpus(11);
    all.extend(larger_rnmts());
    let mut bad = Vec::new();
    let mut yes = 0;
    let mut tallest = 0;
    for inst in &all {
        let Some(triples) = solve_rnmts(inst) else { continue };
        yes += 1;
        let red = reduce_cactus(inst);
        match cactus_yes_protocol(inst, &triples) {
            Ok(p) => {
                let r = validate(&red.graph, &VertexSet::singleton(red.graph.n(), red.s), &p);
                if r != Ok(inst.t()) {
                    bad.push(format!("cactus protocol of {:?}: {r:?}", inst.to_text()));
                }
            }
            Err(e) => bad.push(format!("cactus protocol of {:?}: {e}", inst.to_text())),
        }
        match lifted_yes_protocol(inst, &triples) {
            Ok((tbms, lifted, p)) => {
                let k = tbms.sources.len() as u32 - 1;
                let r = validate(&lifted.graph, &VertexSet::singleton(lifted.graph.n(), lifted.s), &p);
                if lifted.t != inst.t() + k + 1 || r != Ok(lifted.t) {
                    bad.push(format!("lifted protocol of {:?}: {r:?}, t' {}", inst.to_text(), lifted.t));
                }
                match validate_elimination_tree(&lifted.graph, &treedepth_witness(&tbms, &lifted)) {
                    Ok(h) if h <= 6 => tallest = tallest.max(h),
                    other => bad.push(format!("elimination tree of {:?}: {other:?}", inst.to_text())),
                }
            }
            Err(e) => bad.push(format!("lifted protocol of {:?}: {e}", inst.to_text())),
        }
    }
    check(&bad, format!("{yes} yes-instances; elimination trees of height <= {tallest}"))
}

fn c6(c: &Corpus) -> Result<String, String> {
    let eps = [Ratio::new(1u64, 2), Ratio::new(1, 1), Ratio::new(2, 1)];
    let mut bad = Vec::new();
    let (mut runs, mut main_case) = (0, 0);
    let covers: Vec<_> = c.graphs.iter().map(greedy_clique_cover).collect();
    let cvds: Vec<_> = c.graphs.iter().map(min_cvd_bruteforce).collect();
    for inst in &c.instances {
        let g = &c.graphs[inst.graph];
        let opt = Ratio::from_integer(inst.opt as u64);
        for &e in &eps {
            runs += 2;
            let tag = |what: &str| format!("{what} eps={e} on {:?} s={}", g.edges(), inst.s);
            match catch_unwind(|| clique_cover_approx(g, inst.s, &covers[inst.graph], e)) {
                Ok(Ok(r)) => {
                    main_case += !r.used_exact_fallback as usize;
                    let rounds = Ratio::from_integer(r.rounds as u64);
                    if rounds > (Ratio::from_integer(1) + e) * opt || rounds > r.guarantee_bound {
                        bad.push(format!("{}: {} rounds vs optimum {}", tag("clique cover"), r.rounds, inst.opt));
                    }
                }
                other => bad.push(format!("{}: {:?}", tag("clique cover"), other.map(|x| x.map(|r| r.rounds)))),
            }
            match catch_unwind(|| cvd_approx(g, inst.s, &cvds[inst.graph], e)) {
                Ok(Ok(r)) => {
                    main_case += !r.used_exact_fallback as usize;
                    let rounds = Ratio::from_integer(r.rounds as u64);
                    if rounds > (Ratio::from_integer(2) + e) * opt || rounds > r.guarantee_bound {
                        bad.push(format!("{}: {} rounds vs optimum {}", tag("cvd"), r.rounds, inst.opt));
                    }
                }
                other => bad.push(format!("{}: {:?}", tag("cvd"), other.map(|x| x.map(|r| r.rounds)))),
            }
        }
    }
    check(&bad, format!("{runs} runs, {main_case} through the main (non-exact) construction"))
}

fn c7(c: &Corpus) -> Result<String, String> {
    let mut bad = Vec::new();
    let mut certs = 0usize;
    let pds: Vec<_> = c
        .graphs
        .iter()
        .map(|g| standardize_path_decomposition(g, &order_path_decomposition(g)).expect("valid by construction"))
        .collect();
    for inst in &c.instances {
        let g = &c.graphs[inst.graph];
        let n = g.n();
        let w = BoundWitnesses {
            elimination_tree: Some(dfs_elimination_tree(g, inst.s)),
            path_decomposition: Some(pds[inst.graph].clone()),
            separators: Vec::new(),
        };
        for cert in all_bounds(g, inst.s, &w, SEPARATOR_CAP).unwrap() {
            certs += 1;
            if cert.value.to_f64() - BOUND_SLACK > inst.opt as f64 {
                bad.push(format!("{} = {} exceeds optimum {} on {:?}", cert.kind.name(), cert.value, inst.opt, g.edges()));
            }
        }
        let log = usize::BITS - n.saturating_sub(1).leading_zeros();
        if inst.opt < log || inst.opt as usize > n.saturating_sub(1) {
            bad.push(format!("optimum {} outside [{log}, {}]", inst.opt, n - 1));
        }
    }
    check(&bad, format!("{certs} certificates over {} instances", c.instances.len()))
}

fn c8(c: &Corpus) -> Result<String, String> {
    let mut bad = Vec::new();
    let mut checked = 0;
    let mut xs = Vec::new();
    for g in &c.graphs {
        xs.push(find_clique_modulator(g, 2));
    }
    for inst in &c.instances {
        let Some(x) = &xs[inst.graph] else { continue };
        let g = &c.graphs[inst.graph];
        checked += 1;
        let sig = extract_signature(g, inst.s, x, &inst.protocol);
        match reconstruct(g, inst.s, x, &sig) {
            Ok(p) => {
                let r = validate(g, &VertexSet::singleton(g.n(), inst.s), &p);
                if r != Ok(inst.opt) {
                    bad.push(format!("{:?} s={} X={:?}: {r:?} vs {}", g.edges(), inst.s, x.to_vec(), inst.opt));
                }
            }
            Err(e) => bad.push(format!("{:?} s={} X={:?}: {e}", g.edges(), inst.s, x.to_vec())),
        }
    }
    check(&bad, format!("{checked} optimal protocols reconstructed"))
}

fn pendant_pairs(pairs: usize, leaves: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..pairs {
        edges.push((0, 1 + 2 * i));
        edges.push((1 + 2 * i, 2 + 2 * i));
    }
    for j in 0..leaves {
        edges.push((0, 1 + 2 * pairs + j));
    }
    Graph::from_edges(1 + 2 * pairs + leaves, &edges).unwrap()
}

fn c9() -> Result<String, String> {
    let mut bad = Vec::new();
    let mut seen = Vec::new();
    for (pairs, leaves) in [(17, 0), (18, 0), (8, 10)] {
        let g = pendant_pairs(pairs, leaves);
        let v = vi_solve(&g, 0).unwrap();
        let bb = branch_bound_opt(&g, 0, 0, None).unwrap();
        seen.push(v.solution.rounds);
        if v.k != 3 || !v.guess_loop || v.solution.rounds < 18 || !bb.optimal || !same(v.solution.rounds, bb.rounds) {
            bad.push(format!(
                "{pairs} pairs + {leaves} leaves: vi {} (k {}, guess loop {}), branch and bound {} (optimal {})",
                v.solution.rounds, v.k, v.guess_loop, bb.rounds, bb.optimal
            ));
        }
        if validate(&g, &VertexSet::singleton(g.n(), 0), &v.solution.protocol) != Ok(v.solution.rounds) {
            bad.push(format!("{pairs} pairs + {leaves} leaves: protocol does not validate"));
        }
    }
    check(&bad, format!("optima {seen:?} via the guess loop"))
}

fn cli_run(dir: &Path, args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_tbcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (o.status.code(), o.stdout)
}

fn c10() -> Result<String, String> {
    let mut runs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        fs::write(d.join("inst.rnmts"), "3\n2 4 6\n1 3 5\n3 9 7\n").unwrap();
        let steps: Vec<Vec<&str>> = vec![
            vec!["gen", "--kind", "connected-gnp", "--n", "12", "--p", "0.3", "--seed", "5", "--out", "g"],
            vec!["gen", "--kind", "cluster-plus-modulator", "--cliques", "3", "--max-clique", "4", "--k", "2", "--seed", "9", "--out", "m"],
            vec!["gen", "--kind", "rnmts-lift", "--rnmts", "inst.rnmts", "--out", "l"],
            vec!["gen", "--kind", "rnmts-tbms", "--n", "3", "--seed", "4", "--out", "t"],
            vec!["solve", "--graph", "g.graph", "--out", "g.proto"],
            vec!["solve", "--graph", "m.graph", "--algo", "vi", "--out", "m.vi"],
            vec!["solve", "--graph", "g.graph", "--algo", "branch-bound", "--source", "3", "--out", "g3.proto"],
            vec!["approx", "--graph", "m.graph", "--algo", "cvd", "--cvd", "m.cvd", "--eps", "1/2", "--out", "m.cvdp"],
            vec!["bound", "--graph", "g.graph", "--source", "2", "--et", "l.et"],
            vec!["bound", "--graph", "l.graph", "--et", "l.et"],
        ];
        let mut out = Vec::new();
        for step in &steps {
            let (code, stdout) = cli_run(d, step);
            out.push((format!("{step:?} exit {code:?}"), stdout));
        }
        let mut names: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
        runs.push(out);
    }
    if runs[0] == runs[1] {
        Ok(format!("{} outputs and files identical across two runs", runs[0].len()))
    } else {
        let diff = runs[0].iter().zip(&runs[1]).find(|(a, b)| a != b).map(|(a, _)| a.0.clone());
        Err(format!("first difference in {diff:?}"))
    }
}

/// Criteria ids given as arguments restrict the run to those criteria.
fn main() {
    let start = Instant::now();
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let corpus = LazyCell::new(|| {
        let corpus = build_corpus();
        println!(
            "corpus: {} graphs, {} instances, oracle built in {:.1}s",
            corpus.graphs.len(),
            corpus.instances.len(),
            start.elapsed().as_secs_f64()
        );
        corpus
    });
    let criteria: [(u32, &str, &dyn Fn() -> Result<String, String>); 10] = [
        (1, "oracle concordance", &|| c1(&corpus)),
        (2, "baseline exact values", &c2),
        (3, "reduction size identities", &c3),
        (4, "cactus reduction equivalence", &c4),
        (5, "constructive protocols", &c5),
        (6, "approximation guarantees", &|| c6(&corpus)),
        (7, "bound soundness", &|| c7(&corpus)),
        (8, "dtc reconstruction fidelity", &|| c8(&corpus)),
        (9, "vi guess-loop exercise", &c9),
        (10, "determinism", &c10),
    ];
    let results: Vec<bool> = criteria
        .iter()
        .filter(|(id, _, _)| only.is_empty() || only.contains(id))
        .map(|&(id, name, f)| criterion(id, name, f))
        .collect();
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("acceptance: {} passed, {failed} failed [{:.1}s]", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
