use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tbcast::graph::parse_graph;
use tbcast::protocol::{parse_protocol, validate};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tbcast"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn graph_text(n: usize, edges: &[(usize, usize)]) -> String {
    let mut s = format!("{n} {}\n", edges.len());
    for (u, v) in edges {
        s += &format!("{u} {v}\n");
    }
    s
}

fn complete(n: usize) -> String {
    let e: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    graph_text(n, &e)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p4 = write(dir.path(), "p4", "4 3\n0 1\n1 2\n2 3");
    let o = run(&["solve", "--graph", p(&p4)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "optimum\talgorithm\tprotocol\n3\ttree\t-\n");

    let k8 = write(dir.path(), "k8", &complete(8));
    let out = dir.path().join("k8.proto");
    let o = run(&["solve", "--graph", p(&k8), "--out", p(&out)]);
    assert_eq!(stdout(&o), format!("optimum\talgorithm\tprotocol\n3\tsubset-dp\t{}\n", out.display()));
    let g = parse_graph(&fs::read_to_string(&k8).unwrap()).unwrap();
    let proto = parse_protocol(&fs::read_to_string(&out).unwrap(), 8).unwrap();
    assert_eq!(validate(&g, proto.sources(), &proto), Ok(3));

    let c6 = write(dir.path(), "c6", &graph_text(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]));
    let o = run(&["solve", "--graph", p(&c6)]);
    assert_eq!(stdout(&o), "optimum\talgorithm\tprotocol\n3\tdegree2\t-\n");
    for algo in ["subset-dp", "branch-bound", "vi"] {
        let o = run(&["solve", "--graph", p(&c6), "--algo", algo]);
        assert!(stdout(&o).starts_with("optimum\talgorithm\tprotocol\n3\t"), "{algo}");
    }
    let o = run(&["solve", "--graph", p(&c6), "--sources", "0,3"]);
    assert_eq!(stdout(&o), "optimum\talgorithm\tprotocol\n2\tsubset-dp\t-\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad", "3 2\n0 1\n0 1\n");
    assert_eq!(run(&["solve", "--graph", p(&bad)]).status.code(), Some(2));
    let missing = dir.path().join("nope");
    assert_eq!(run(&["solve", "--graph", p(&missing)]).status.code(), Some(2));
    let split = write(dir.path(), "split", "3 1\n0 1\n");
    assert_eq!(run(&["solve", "--graph", p(&split)]).status.code(), Some(3));
    let p4 = write(dir.path(), "p4", "4 3\n0 1\n1 2\n2 3\n");
    assert_eq!(run(&["solve", "--graph", p(&p4), "--source", "9"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--graph", p(&p4), "--algo", "twt"]).status.code(), Some(2));
    // A protocol that uses a non-edge.
    let proto = write(dir.path(), "proto", "2 1\n0\n1 0 1\n3 0 2\n2 1 2\n");
    assert_eq!(run(&["validate", "--graph", p(&p4), "--protocol", p(&proto)]).status.code(), Some(3));
    let ok = write(dir.path(), "ok", "3 1\n0\n1 0 1\n2 1 2\n3 2 3\n");
    let o = run(&["validate", "--graph", p(&p4), "--protocol", p(&ok)]);
    assert_eq!(stdout(&o), "valid\trounds\ntrue\t3\n");
    assert_eq!(run(&["validate", "--graph", p(&p4), "--protocol", p(&ok), "--t", "2"]).status.code(), Some(3));
    // Budget: a dense-ish random graph and a 1 ms limit.
    let g = dir.path().join("g");
    run(&["gen", "--kind", "connected-gnp", "--n", "70", "--p", "0.08", "--seed", "3", "--out", p(&g)]);
    let graph = dir.path().join("g.graph");
    assert_eq!(run(&["solve", "--graph", p(&graph), "--algo", "vi", "--budget-ms", "1"]).status.code(), Some(4));
}

#[test]
fn bound_reports() {
    let dir = tempfile::tempdir().unwrap();
    let star = write(dir.path(), "star", &graph_text(9, &(1..9).map(|v| (0, v)).collect::<Vec<_>>()));
    let o = stdout(&run(&["bound", "--graph", p(&star)]));
    assert!(o.starts_with("kind\tvalue\trounds\twitness\n"));
    assert!(o.ends_with("best\tseparatorCount\t8\t8\tset=0\n"), "{o}");
    assert_eq!(o.lines().count(), 1 + 8 + 1);
    let k8 = write(dir.path(), "k8", &complete(8));
    let o = stdout(&run(&["bound", "--graph", p(&k8)]));
    assert!(o.ends_with("best\ttrivialLog\t3\t3\t-\n"), "{o}");
    let p17 = write(dir.path(), "p17", &graph_text(17, &(0..16).map(|v| (v, v + 1)).collect::<Vec<_>>()));
    let mut pd = String::from("16 1\n");
    for v in 0..16 {
        pd += &format!("{v} {}\n", v + 1);
    }
    let pd = write(dir.path(), "pd", &pd);
    let o = stdout(&run(&["bound", "--graph", p(&p17), "--pd", p(&pd)]));
    assert!(o.contains("pathwidthLength\t1.414214\t2\twidth=1,length=16\n"), "{o}");
}

#[test]
fn gen_reductions() {
    let dir = tempfile::tempdir().unwrap();
    let yes = write(dir.path(), "yes.rnmts", "1\n2\n1\n3\n");
    let out = dir.path().join("c");
    let o = run(&["gen", "--kind", "rnmts-cactus", "--rnmts", p(&yes), "--out", p(&out)]);
    assert!(stdout(&o).starts_with("kind\tvertices\tedges\tstatus\nrnmts-cactus\t7\t7\tyes\n"));
    let cert = fs::read_to_string(dir.path().join("c.cert")).unwrap();
    assert_eq!(cert, "status yes\nt 3\nsources 0\ntriple 2 1 3\n");
    let o = run(&[
        "validate",
        "--graph",
        p(&dir.path().join("c.graph")),
        "--protocol",
        p(&dir.path().join("c.proto")),
        "--t",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));

    let no = write(dir.path(), "no.rnmts", "2\n2 10\n1 3\n7 9\n");
    let out = dir.path().join("n");
    let o = run(&["gen", "--kind", "rnmts-cactus", "--rnmts", p(&no), "--out", p(&out)]);
    assert!(stdout(&o).contains("rnmts-cactus\t57\t58\tno\n"));
    assert!(!dir.path().join("n.proto").exists());

    let out = dir.path().join("l");
    let o = run(&["gen", "--kind", "rnmts-lift", "--rnmts", p(&yes), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[
        "validate",
        "--graph",
        p(&dir.path().join("l.graph")),
        "--protocol",
        p(&dir.path().join("l.proto")),
        "--t",
        "7",
    ]);
    assert_eq!(stdout(&o), "valid\trounds\ntrue\t7\n");
    let bad = write(dir.path(), "bad.rnmts", "1\n3\n1\n4\n");
    assert_eq!(run(&["gen", "--kind", "rnmts-cactus", "--rnmts", p(&bad), "--out", p(&out)]).status.code(), Some(2));
}

#[test]
fn approx_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = Vec::new();
    for base in [0, 4] {
        for u in base..base + 4 {
            for v in u + 1..base + 4 {
                e.push((u, v));
            }
        }
    }
    e.push((3, 4));
    let g = write(dir.path(), "g", &graph_text(8, &e));
    let cover = write(dir.path(), "cover", "0 1 2 3\n4 5 6 7\n");
    let o = run(&["approx", "--graph", p(&g), "--algo", "clique-cover", "--cover", p(&cover), "--eps", "1/2"]);
    assert_eq!(stdout(&o), "rounds\talgorithm\tguarantee\tratio\texact\tprotocol\n4\tclique-cover\t4\t1\ttrue\t-\n");
    let cvd = write(dir.path(), "cvd", "3\n");
    let o = run(&["approx", "--graph", p(&g), "--algo", "cvd", "--cvd", p(&cvd), "--eps", "1/8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\tcvd\t"));
    let o = run(&["approx", "--graph", p(&g), "--algo", "cvd", "--cvd", p(&cvd), "--eps", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let wrong = write(dir.path(), "wrong", "0 1 2 3 4\n5 6 7\n");
    let o = run(&["approx", "--graph", p(&g), "--algo", "clique-cover", "--cover", p(&wrong), "--eps", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn seeds_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run_id in 0..2 {
        let out = dir.path().join(format!("r{run_id}"));
        let o = run(&["gen", "--kind", "cactus", "--n", "25", "--seed", "11", "--out", p(&out)]);
        let graph = dir.path().join(format!("r{run_id}.graph"));
        let proto = dir.path().join(format!("r{run_id}.proto"));
        let s = run(&["solve", "--graph", p(&graph), "--out", p(&proto)]);
        let b = run(&["bound", "--graph", p(&graph)]);
        outputs.push((
            fs::read(&graph).unwrap(),
            fs::read(&proto).unwrap(),
            stdout(&o).replace(&format!("r{run_id}"), "r"),
            stdout(&s).replace(&format!("r{run_id}"), "r"),
            stdout(&b),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

/// Generated instances re-parse, and solved protocols re-validate.
#[test]
fn round_trip_many() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100u64 {
        let out = dir.path().join(format!("i{seed}"));
        let n = (5 + seed % 9).to_string();
        let seed_s = seed.to_string();
        let args: Vec<&str> = match seed % 4 {
            0 => vec!["--kind", "tree", "--n", &n],
            1 => vec!["--kind", "cactus", "--n", &n],
            2 => vec!["--kind", "connected-gnp", "--n", &n, "--p", "0.4"],
            _ => vec!["--kind", "cluster-plus-modulator", "--cliques", "3", "--max-clique", "3", "--k", "2"],
        };
        let mut full = vec!["gen", "--seed", &seed_s, "--out", p(&out)];
        full.extend(args);
        assert_eq!(run(&full).status.code(), Some(0), "{full:?}");
        let graph = dir.path().join(format!("i{seed}.graph"));
        let text = fs::read_to_string(&graph).unwrap();
        let g = parse_graph(&text).unwrap();
        assert_eq!(g.to_text(text.lines().next().and_then(|l| l.strip_prefix("# "))), text);
        let proto = dir.path().join(format!("i{seed}.proto"));
        let o = run(&["solve", "--graph", p(&graph), "--out", p(&proto)]);
        assert_eq!(o.status.code(), Some(0));
        let ptext = fs::read_to_string(&proto).unwrap();
        let pr = parse_protocol(&ptext, g.n()).unwrap();
        assert_eq!(pr.to_text(), ptext);
        let reported: u32 = stdout(&o).lines().nth(1).unwrap().split('\t').next().unwrap().parse().unwrap();
        assert_eq!(validate(&g, pr.sources(), &pr), Ok(reported));
    }
}
