use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tbcast::approx::{clique_cover_approx_with, cvd_approx_with, ApproxError, ApproxOptions, ApproxReport};
use tbcast::bitset::VertexSet;
use tbcast::bounds::{all_bounds, BoundKind, BoundWitnesses, LowerBoundCertificate, Witness, SEPARATOR_CAP};
use tbcast::decomposition::{
    parse_clique_cover, parse_elimination_tree, parse_path_decomposition, parse_tree_decomposition,
    parse_vertex_set, to_nice,
};
use tbcast::dtc::dtc_solve;
use tbcast::error::SolveError;
use tbcast::exact::{
    branch_bound_opt, degree2_exact, solve_exact_multi, subset_dp_opt, tree_opt, twt_opt, ExactSolution,
    SUBSET_DP_LIMIT,
};
use tbcast::generate::{gen_random, GenKind};
use tbcast::graph::{parse_graph, Graph};
use tbcast::protocol::{parse_protocol, validate, BroadcastProtocol};
use tbcast::reductions::{
    cactus_yes_protocol, lifted_yes_protocol, parse_rnmts, random_rnmts, reduce_cactus, reduce_tbms, solve_rnmts,
    tbms_to_tb, tbms_yes_protocol, treedepth_witness, RnmtsInstance, Triple,
};
use tbcast::vi::{vi_solve_with, ViOptions};

#[derive(Parser)]
#[command(name = "tbcast", version, about = "Telephone broadcast solver toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute an optimal broadcast protocol.
    Solve(SolveArgs),
    /// Run an approximation algorithm.
    Approx(ApproxArgs),
    /// Report lower bounds.
    Bound(BoundArgs),
    /// Generate instances.
    Gen(GenArgs),
    /// Check a protocol file.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    graph: PathBuf,
    /// Source vertex.
    #[arg(long, default_value_t = 0)]
    source: usize,
    #[arg(long = "budget-ms")]
    budget_ms: Option<u64>,
    /// Where to write the protocol.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveAlgo {
    Auto,
    Tree,
    Degree2,
    SubsetDp,
    Twt,
    Dtc,
    Vi,
    BranchBound,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Several sources, comma separated; replaces --source.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = SolveAlgo::Auto)]
    algo: SolveAlgo,
    /// Tree decomposition (PACE .td) for the twt solver.
    #[arg(long)]
    td: Option<PathBuf>,
    /// Clique modulator for the dtc solver.
    #[arg(long)]
    modulator: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ApproxAlgo {
    CliqueCover,
    Cvd,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    algo: ApproxAlgo,
    /// Accuracy as N/D or N.
    #[arg(long, value_parser = parse_eps)]
    eps: Ratio<u64>,
    #[arg(long)]
    cover: Option<PathBuf>,
    #[arg(long)]
    cvd: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    source: usize,
    #[arg(long)]
    pd: Option<PathBuf>,
    #[arg(long)]
    et: Option<PathBuf>,
    /// Extra separator, one vertex list per file.
    #[arg(long)]
    separator: Vec<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenWhat {
    Tree,
    Cactus,
    ClusterPlusModulator,
    ConnectedGnp,
    /// Cactus reduction of a restricted numerical matching instance.
    RnmtsCactus,
    /// Multi-source reduction.
    RnmtsTbms,
    /// Multi-source reduction lifted to a single source.
    RnmtsLift,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenWhat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    cliques: Option<usize>,
    #[arg(long = "max-clique")]
    max_clique: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Numerical matching instance; drawn at random from --n, --max-value
    /// and --seed when absent.
    #[arg(long)]
    rnmts: Option<PathBuf>,
    #[arg(long = "max-value", default_value_t = 12)]
    max_value: u32,
    /// Output prefix; files get extensions appended.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    protocol: PathBuf,
    /// Expected sources, comma separated; defaults to those in the file.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<usize>>,
    /// Round limit.
    #[arg(long)]
    t: Option<u32>,
}

enum Failure {
    Parse(String),
    Infeasible(String),
    Budget,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Budget => 4,
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Budget => Failure::Budget,
            e => Failure::Infeasible(e.to_string()),
        }
    }
}

impl From<ApproxError> for Failure {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Solve(e) => e.into(),
            e => Failure::Infeasible(e.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

fn parse_eps(s: &str) -> Result<Ratio<u64>, String> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: u64 = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let d: u64 = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if n == 0 || d == 0 {
        return Err("eps must be a positive rational".into());
    }
    Ok(Ratio::new(n, d))
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn parsed<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Res<T> {
    r.map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Res<Graph> {
    let text = read(path)?;
    parsed(path, parse_graph(&text))
}

fn load_set(path: &Path, n: usize) -> Res<VertexSet> {
    let text = read(path)?;
    parsed(path, parse_vertex_set(&text, n))
}

fn check_vertex(g: &Graph, v: usize) -> Res<()> {
    if v >= g.n() {
        return Err(Failure::Parse(format!("vertex {v} out of range for n = {}", g.n())));
    }
    Ok(())
}

/// Writes through a temporary file in the target directory and renames it.
fn write_atomic(path: &Path, contents: &str) -> Res<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| Failure::Infeasible(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit_protocol(out: &Option<PathBuf>, p: &BroadcastProtocol) -> Res<String> {
    match out {
        Some(path) => {
            write_atomic(path, &p.to_text())?;
            Ok(path.display().to_string())
        }
        None => Ok("-".into()),
    }
}

fn budget(ms: Option<u64>) -> Option<Duration> {
    ms.map(Duration::from_millis)
}

fn solve_single(args: &SolveArgs, g: &Graph) -> Res<(ExactSolution, &'static str)> {
    let s = args.common.source;
    let budget = budget(args.common.budget_ms);
    let load_td = |path: &PathBuf| -> Res<_> {
        let text = read(path)?;
        let td = parsed(path, parse_tree_decomposition(&text, g.n()))?;
        parsed(path, to_nice(g, &td))
    };
    let bb = || -> Res<(ExactSolution, &'static str)> {
        let r = branch_bound_opt(g, s, 0, budget)?;
        if !r.optimal {
            return Err(Failure::Budget);
        }
        Ok((ExactSolution { rounds: r.rounds, protocol: r.protocol }, "branch-bound"))
    };
    let dtc = |path: &PathBuf| -> Res<(ExactSolution, &'static str)> {
        let x = load_set(path, g.n())?;
        Ok((dtc_solve(g, s, &x)?.solution, "dtc"))
    };
    let vi = || -> Res<(ExactSolution, &'static str)> { Ok((vi_solve_with(g, s, ViOptions { budget })?.solution, "vi")) };
    match args.algo {
        SolveAlgo::Tree => Ok((tree_opt(g, s)?, "tree")),
        SolveAlgo::Degree2 => Ok((degree2_exact(g, s)?, "degree2")),
        SolveAlgo::SubsetDp => Ok((subset_dp_opt(g, &VertexSet::singleton(g.n(), s), None)?, "subset-dp")),
        SolveAlgo::Twt => {
            let path = args.td.as_ref().ok_or(Failure::Parse("--algo twt needs --td".into()))?;
            Ok((twt_opt(g, s, &load_td(path)?)?, "twt"))
        }
        SolveAlgo::Dtc => dtc(args.modulator.as_ref().ok_or(Failure::Parse("--algo dtc needs --modulator".into()))?),
        SolveAlgo::Vi => vi(),
        SolveAlgo::BranchBound => bb(),
        SolveAlgo::Auto => {
            if !g.is_connected() {
                return Err(SolveError::Disconnected.into());
            }
            if g.is_tree() {
                return Ok((tree_opt(g, s)?, "tree"));
            }
            if (0..g.n()).all(|v| v == s || g.degree(v) <= 2) {
                return Ok((degree2_exact(g, s)?, "degree2"));
            }
            if g.n() <= SUBSET_DP_LIMIT {
                return Ok((subset_dp_opt(g, &VertexSet::singleton(g.n(), s), None)?, "subset-dp"));
            }
            if let Some(path) = &args.td {
                let ntd = load_td(path)?;
                if ntd.width() <= 3 {
                    match twt_opt(g, s, &ntd) {
                        Ok(sol) => return Ok((sol, "twt")),
                        Err(SolveError::ExceedsCap(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            if let Some(path) = &args.modulator {
                return dtc(path);
            }
            bb()
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Res<String> {
    let g = load_graph(&args.common.graph)?;
    let (sol, algo) = match &args.sources {
        Some(list) => {
            for &v in list {
                check_vertex(&g, v)?;
            }
            if args.algo != SolveAlgo::Auto {
                return Err(Failure::Parse("several sources only support --algo auto".into()));
            }
            solve_exact_multi(&g, &VertexSet::from_slice(g.n(), list), budget(args.common.budget_ms))?
        }
        None => {
            check_vertex(&g, args.common.source)?;
            solve_single(&args, &g)?
        }
    };
    debug_assert_eq!(validate(&g, sol.protocol.sources(), &sol.protocol), Ok(sol.rounds));
    let path = emit_protocol(&args.common.out, &sol.protocol)?;
    Ok(format!("optimum\talgorithm\tprotocol\n{}\t{}\t{}\n", sol.rounds, algo, path))
}

fn ratio(r: Ratio<u64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn cmd_approx(args: ApproxArgs) -> Res<String> {
    let g = load_graph(&args.common.graph)?;
    let s = args.common.source;
    check_vertex(&g, s)?;
    let opts = ApproxOptions {
        budget: budget(args.common.budget_ms),
    };
    let (report, name): (ApproxReport, &str) = match args.algo {
        ApproxAlgo::CliqueCover => {
            let path = args.cover.as_ref().ok_or(Failure::Parse("--algo clique-cover needs --cover".into()))?;
            let text = read(path)?;
            let cover = parsed(path, parse_clique_cover(&text, g.n()))?;
            (clique_cover_approx_with(&g, s, &cover, args.eps, opts)?, "clique-cover")
        }
        ApproxAlgo::Cvd => {
            let path = args.cvd.as_ref().ok_or(Failure::Parse("--algo cvd needs --cvd".into()))?;
            let x = load_set(path, g.n())?;
            (cvd_approx_with(&g, s, &x, args.eps, opts)?, "cvd")
        }
    };
    let path = emit_protocol(&args.common.out, &report.protocol)?;
    Ok(format!(
        "rounds\talgorithm\tguarantee\tratio\texact\tprotocol\n{}\t{}\t{}\t{}\t{}\t{}\n",
        report.rounds,
        name,
        ratio(report.guarantee_bound),
        ratio(report.ratio_bound),
        report.used_exact_fallback,
        path
    ))
}

fn witness_text(w: &Witness) -> String {
    match w {
        Witness::None => "-".into(),
        Witness::Set(s) => format!("set={}", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
        Witness::EliminationTree { height } => format!("height={height}"),
        Witness::PathDecomposition { width, length } => format!("width={width},length={length}"),
        Witness::Width(w) => format!("width={w}"),
    }
}

fn cert_line(c: &LowerBoundCertificate) -> String {
    format!("{}\t{}\t{}\t{}\n", c.kind.name(), c.value, c.rounds(), witness_text(&c.witness))
}

fn cmd_bound(args: BoundArgs) -> Res<String> {
    let g = load_graph(&args.graph)?;
    check_vertex(&g, args.source)?;
    let mut w = BoundWitnesses::default();
    if let Some(path) = &args.pd {
        let text = read(path)?;
        w.path_decomposition = Some(parsed(path, parse_path_decomposition(&text, g.n()))?);
    }
    if let Some(path) = &args.et {
        let text = read(path)?;
        w.elimination_tree = Some(parsed(path, parse_elimination_tree(&text, g.n()))?);
    }
    for path in &args.separator {
        w.separators.push(load_set(path, g.n())?);
    }
    let all = all_bounds(&g, args.source, &w, SEPARATOR_CAP)?;
    let mut out = String::from("kind\tvalue\trounds\twitness\n");
    let mut best: Option<&LowerBoundCertificate> = None;
    for kind in BoundKind::ALL {
        // First certificate with the largest value of this kind.
        let top = all
            .iter()
            .filter(|c| c.kind == kind)
            .fold(None, |acc: Option<&LowerBoundCertificate>, c| match acc {
                Some(a) if a.value.to_f64() >= c.value.to_f64() => Some(a),
                _ => Some(c),
            });
        match top {
            Some(c) => {
                out += &cert_line(c);
                if best.is_none_or(|b| c.value.to_f64() > b.value.to_f64()) {
                    best = Some(c);
                }
            }
            None => {
                let _ = writeln!(out, "{}\t-\t-\t-", kind.name());
            }
        }
    }
    out += "best\t";
    out += &cert_line(best.expect("the trivial bound is always present"));
    Ok(out)
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Res<T> {
    v.ok_or(Failure::Parse(format!("this kind needs --{flag}")))
}

fn certificate(status: Option<&[Triple]>, t: u32, sources: &[usize]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status {}", if status.is_some() { "yes" } else { "no" });
    let _ = writeln!(s, "t {t}");
    let _ = writeln!(s, "sources {}", sources.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
    for x in status.unwrap_or(&[]) {
        let _ = writeln!(s, "triple {} {} {}", x.a, x.b, x.c);
    }
    s
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_gen(args: GenArgs) -> Res<String> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let graph_path = with_ext(&args.out, "graph");
    let (vertices, edges, status);
    let random = |kind: GenKind| -> Res<_> { gen_random(&kind, args.seed).map_err(|e| Failure::Parse(e.to_string())) };
    match args.kind {
        GenWhat::Tree | GenWhat::Cactus | GenWhat::ClusterPlusModulator | GenWhat::ConnectedGnp => {
            let kind = match args.kind {
                GenWhat::Tree => GenKind::Tree { n: need(args.n, "n")? },
                GenWhat::Cactus => GenKind::Cactus { n: need(args.n, "n")? },
                GenWhat::ClusterPlusModulator => GenKind::ClusterPlusModulator {
                    cliques: need(args.cliques, "cliques")?,
                    max_clique: need(args.max_clique, "max-clique")?,
                    k: need(args.k, "k")?,
                },
                _ => GenKind::ConnectedGnp {
                    n: need(args.n, "n")?,
                    p: need(args.p, "p")?,
                },
            };
            let gen = random(kind)?;
            vertices = gen.graph.n();
            edges = gen.graph.m();
            status = "-".to_string();
            files.push((graph_path, gen.to_text()));
            if let Some(x) = &gen.planted {
                files.push((with_ext(&args.out, "cvd"), set_text(x)));
            }
        }
        GenWhat::RnmtsCactus | GenWhat::RnmtsTbms | GenWhat::RnmtsLift => {
            let inst: RnmtsInstance = match &args.rnmts {
                Some(path) => {
                    let text = read(path)?;
                    parsed(path, parse_rnmts(&text))?
                }
                None => {
                    let n = need(args.n, "n")?;
                    if n == 0 {
                        return Err(Failure::Parse("--n must be positive".into()));
                    }
                    random_rnmts(&mut ChaCha8Rng::seed_from_u64(args.seed), n, args.max_value)
                }
            };
            let triples = solve_rnmts(&inst);
            status = if triples.is_some() { "yes" } else { "no" }.to_string();
            files.push((with_ext(&args.out, "rnmts"), inst.to_text()));
            let header = format!("{} rnmts-seed={}", kind_name(args.kind), args.seed);
            match args.kind {
                GenWhat::RnmtsCactus => {
                    let red = reduce_cactus(&inst);
                    vertices = red.graph.n();
                    edges = red.graph.m();
                    files.push((graph_path, red.graph.to_text(Some(&header))));
                    files.push((with_ext(&args.out, "cert"), certificate(triples.as_deref(), red.t, &[red.s])));
                    if let Some(tr) = &triples {
                        let p = cactus_yes_protocol(&inst, tr).map_err(|e| Failure::Infeasible(e.to_string()))?;
                        files.push((with_ext(&args.out, "proto"), p.to_text()));
                    }
                }
                GenWhat::RnmtsTbms => {
                    let red = reduce_tbms(&inst);
                    vertices = red.graph.n();
                    edges = red.graph.m();
                    files.push((graph_path, red.graph.to_text(Some(&header))));
                    files.push((with_ext(&args.out, "cert"), certificate(triples.as_deref(), red.t, &red.sources.to_vec())));
                    if let Some(tr) = &triples {
                        let (_, p) = tbms_yes_protocol(&inst, tr).map_err(|e| Failure::Infeasible(e.to_string()))?;
                        files.push((with_ext(&args.out, "proto"), p.to_text()));
                    }
                }
                _ => {
                    let red = reduce_tbms(&inst);
                    let lifted = tbms_to_tb(&red.graph, &red.sources, red.t);
                    vertices = lifted.graph.n();
                    edges = lifted.graph.m();
                    files.push((graph_path, lifted.graph.to_text(Some(&header))));
                    files.push((with_ext(&args.out, "cert"), certificate(triples.as_deref(), lifted.t, &[lifted.s])));
                    files.push((with_ext(&args.out, "et"), treedepth_witness(&red, &lifted).to_text()));
                    if let Some(tr) = &triples {
                        let (_, _, p) = lifted_yes_protocol(&inst, tr).map_err(|e| Failure::Infeasible(e.to_string()))?;
                        files.push((with_ext(&args.out, "proto"), p.to_text()));
                    }
                }
            }
        }
    }
    let mut out = format!("kind\tvertices\tedges\tstatus\n{}\t{vertices}\t{edges}\t{status}\n", kind_name(args.kind));
    for (path, text) in &files {
        write_atomic(path, text)?;
        let _ = writeln!(out, "file\t{}", path.display());
    }
    Ok(out)
}

fn kind_name(k: GenWhat) -> &'static str {
    match k {
        GenWhat::Tree => "tree",
        GenWhat::Cactus => "cactus",
        GenWhat::ClusterPlusModulator => "clusterPlusModulator",
        GenWhat::ConnectedGnp => "connectedGnp",
        GenWhat::RnmtsCactus => "rnmts-cactus",
        GenWhat::RnmtsTbms => "rnmts-tbms",
        GenWhat::RnmtsLift => "rnmts-lift",
    }
}

fn set_text(x: &VertexSet) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ") + "\n"
}

fn cmd_validate(args: ValidateArgs) -> Res<String> {
    let g = load_graph(&args.graph)?;
    let text = read(&args.protocol)?;
    let p = parsed(&args.protocol, parse_protocol(&text, g.n()))?;
    if let Some(list) = &args.sources {
        for &v in list {
            check_vertex(&g, v)?;
        }
        if *p.sources() != VertexSet::from_slice(g.n(), list) {
            return Err(Failure::Infeasible("protocol sources differ from --sources".into()));
        }
    }
    let rounds = validate(&g, p.sources(), &p).map_err(|e| Failure::Infeasible(e.to_string()))?;
    if let Some(t) = args.t {
        if rounds > t {
            return Err(Failure::Infeasible(format!("protocol takes {rounds} rounds, more than {t}")));
        }
    }
    Ok(format!("valid\trounds\ntrue\t{rounds}\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Approx(a) => cmd_approx(a),
        Cmd::Bound(a) => cmd_bound(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Validate(a) => cmd_validate(a),
    };
    eprintln!("millis\t{}", start.elapsed().as_millis());
    match result {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Parse(m) => eprintln!("error: {m}"),
                Failure::Infeasible(m) => eprintln!("error: {m}"),
                Failure::Budget => eprintln!("error: time budget exhausted"),
            }
            ExitCode::from(f.code())
        }
    }
}
