//! `sse-cut`: JSON-in, JSON-out driver for the embedding, rounding, flow and
//! oracle pipelines.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use ssecut::cut_improve::{flow_round, FlowRoundOptions, RoundMode, DEFAULT_NET_RESOLUTION};
use ssecut::decomp::{genus_round, GenusOptions};
use ssecut::embed::{
    solve_base_embedding, solve_embedding_sweep, BaseEmbedding, SolverOptions, VectorSolution,
};
use ssecut::generators::{barbell, complete, cycle, grid};
use ssecut::graph::GraphJson;
use ssecut::gs_round::gs_round;
use ssecut::oracle::{brute_balanced, brute_small_set, brute_sparsest, MAX_N};
use ssecut::orth_sep::{round_or_small_set_with, RoundOutcome};
use ssecut::planted::{check_hypothesis, generate};
use ssecut::sse_flow::{
    construct_spectral_flow, verify_capacity, verify_spectral, verify_sse, verify_weak_sse,
    ConstructOptions, FlowJson, MultiFlow, SpectralCertificate,
};
use ssecut::{rng, Error, Graph};

#[derive(Parser)]
#[command(
    name = "sse-cut",
    version,
    about = "Sparsest cut under local expansion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every random choice; reports embed it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver feasibility tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Clone)]
struct GraphArg {
    /// Graph JSON: {"n": int, "edges": [[u, v, w], ...]}.
    #[arg(long)]
    graph: PathBuf,
    /// Use the weights as given instead of rescaling to unit degree.
    #[arg(long)]
    raw: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the base vector relaxation.
    Embed {
        #[command(flatten)]
        g: GraphArg,
        /// Fixed balance μ; the default sweeps every μ = k/n.
        #[arg(long)]
        mu: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Column selection plus threshold rounding.
    GsRound {
        #[command(flatten)]
        g: GraphArg,
        #[command(flatten)]
        round: RoundArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Column rounding, then separator anchors, else a small set.
    OrthRound {
        #[command(flatten)]
        g: GraphArg,
        #[command(flatten)]
        round: RoundArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Column rounding, else padded-decomposition small sets.
    GenusRound {
        #[command(flatten)]
        g: GraphArg,
        #[command(flatten)]
        round: RoundArgs,
        #[arg(long, default_value_t = 3.0)]
        beta_pad: f64,
        #[arg(long, default_value_t = 200)]
        draws: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Frank–Wolfe construction of a spectral SSE flow.
    FlowBuild {
        #[command(flatten)]
        g: GraphArg,
        #[command(flatten)]
        build: BuildArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Check a flow against capacities and the requested claims.
    FlowVerify {
        #[command(flatten)]
        g: GraphArg,
        /// Flow JSON, or a flow-build report.
        #[arg(long)]
        flow: PathBuf,
        /// (r, d, λ) spectral claim.
        #[arg(long, num_args = 3, value_names = ["R", "D", "LAMBDA"])]
        spectral: Option<Vec<f64>>,
        /// (r, d, β) SSE claim.
        #[arg(long, num_args = 3, value_names = ["R", "D", "BETA"])]
        sse: Option<Vec<f64>>,
        /// (r, d, β) weak SSE claim.
        #[arg(long, num_args = 3, value_names = ["R", "D", "BETA"])]
        weak_sse: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Eigenspace enumeration and max-flow improvement from a certificate.
    FlowRound {
        #[command(flatten)]
        g: GraphArg,
        /// flow-build report or certificate JSON with its flow; built on the
        /// spot when absent.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Mode::Sparsest)]
        mode: Mode,
        /// Balance c for --mode balanced.
        #[arg(long, default_value_t = 0.5)]
        balance: f64,
        #[arg(long, default_value_t = DEFAULT_NET_RESOLUTION)]
        net_resolution: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive oracle (n ≤ 24).
    Brute {
        #[command(flatten)]
        g: GraphArg,
        /// Minimum over sets of size at most n/r.
        #[arg(long)]
        small: Option<f64>,
        /// Minimum expansion with both sides at least c·n/2.
        #[arg(long)]
        balanced: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Planted expander instance.
    GenPlanted {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        inner_degree: usize,
        #[arg(long, default_value_t = 0)]
        cross_edges: usize,
        /// Run the small-set expansion check at this ε (n ≤ 24).
        #[arg(long)]
        check: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        constant: f64,
        /// Write the graph alone, ready for --graph.
        #[arg(long)]
        graph_out: Option<PathBuf>,
        /// Write {"planted": [...], "rho": x}.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every rounding path and the oracle; CSV out.
    Bench {
        /// Graph files; a built-in suite when none are given.
        #[arg(long = "graph")]
        graphs: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct RoundArgs {
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Reuse an embed report instead of solving again.
    #[arg(long)]
    embedding: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BuildArgs {
    /// The certificate covers 2r eigenvalues.
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long, default_value_t = 300)]
    iterations: usize,
    #[arg(long, default_value_t = 4)]
    paths: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sparsest,
    Expansion,
    Balanced,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Inconclusive(_)) {
            2
        } else {
            1
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn fail(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Report<'a, T> {
    command: &'a str,
    seed: u64,
    tol: f64,
    result: T,
}

fn emit<T: Serialize>(command: &str, common: &Common, result: T) -> Res<()> {
    let report = Report {
        command,
        seed: common.seed,
        tol: common.tol,
        result,
    };
    write_out(common, &pretty(&report)?)
}

fn write_out(common: &Common, text: &str) -> Res<()> {
    print!("{text}");
    if let Some(path) = &common.out {
        fs::write(path, text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| fail(e.to_string()))
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(path: &Path, v: Value) -> Res<T> {
    serde_json::from_value(v).map_err(|e| fail(format!("{}: malformed input: {e}", path.display())))
}

fn read_json(path: &Path) -> Res<Value> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| fail(format!("{}: malformed input: {e}", path.display())))
}

/// Descends through a report wrapper to the first object holding `field`.
fn find_with(v: Value, field: &str, wrappers: &[&str]) -> Value {
    let mut v = v;
    loop {
        if v.get(field).is_some() {
            return v;
        }
        match wrappers.iter().find_map(|w| v.get(*w).cloned()) {
            Some(inner) => v = inner,
            None => return v,
        }
    }
}

fn load_graph(arg: &GraphArg) -> Res<Graph> {
    let text = read(&arg.graph)?;
    let json: GraphJson = serde_json::from_str(&text)
        .map_err(|e| fail(format!("{}: malformed input: {e}", arg.graph.display())))?;
    let g = Graph::from_json(&json).map_err(|e| fail(format!("{}: {e}", arg.graph.display())))?;
    if arg.raw {
        Ok(g)
    } else {
        Ok(g.normalize_regular()?.graph)
    }
}

fn solver(common: &Common) -> SolverOptions {
    SolverOptions {
        tol: common.tol,
        ..Default::default()
    }
}

fn embedding(g: &Graph, round: &RoundArgs, common: &Common) -> Res<VectorSolution> {
    match &round.embedding {
        Some(path) => {
            let v = find_with(
                read_json(path)?,
                "vectors",
                &["result", "embedding", "solution"],
            );
            let sol: VectorSolution = parse(path, v)?;
            if sol.n() != g.n() {
                return Err(fail(format!(
                    "{}: {} vectors for {} vertices",
                    path.display(),
                    sol.n(),
                    g.n()
                )));
            }
            let feas = sol.feasibility(g);
            if !feas.holds(1e-6) {
                return Err(fail(format!(
                    "{}: embedding is not feasible on this graph: {feas:?}",
                    path.display()
                )));
            }
            Ok(sol)
        }
        None => Ok(solve_embedding_sweep(g, &solver(common))?.solution),
    }
}

fn load_flow(path: &Path, n: usize) -> Res<MultiFlow> {
    let v = find_with(
        read_json(path)?,
        "paths",
        &["result", "certificate", "flow"],
    );
    let json: FlowJson = parse(path, v)?;
    Ok(MultiFlow::from_json(n, &json)?)
}

fn triple(v: &[f64], what: &str) -> Res<(usize, f64, f64)> {
    let r = v[0];
    if r < 1.0 || r.fract() != 0.0 {
        return Err(fail(format!("{what}: r = {r} must be a positive integer")));
    }
    Ok((r as usize, v[1], v[2]))
}

fn construct(g: &Graph, b: &BuildArgs) -> Res<ssecut::sse_flow::SpectralConstruction> {
    let opts = ConstructOptions {
        iterations: b.iterations,
        paths_per_pair: b.paths,
    };
    Ok(construct_spectral_flow(g, b.r, b.d, &opts)?)
}

#[derive(Serialize)]
struct EmbedResult {
    n: usize,
    phi_sdp: f64,
    feasibility: ssecut::embed::Feasibility,
    embedding: BaseEmbedding,
}

#[derive(Serialize)]
struct FlowBuildResult {
    objective: f64,
    history: Vec<f64>,
    capacity: ssecut::sse_flow::CapacityReport,
    certificate: SpectralCertificate,
}

#[derive(Serialize)]
struct FlowVerifyResult {
    capacity: ssecut::sse_flow::CapacityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral: Option<SpectralCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sse: Option<ssecut::sse_flow::SseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weak_sse: Option<ssecut::sse_flow::SseReport>,
}

#[derive(Serialize)]
struct FlowRoundResult {
    certificate: SpectralCertificate,
    cut: ssecut::CutResult,
}

#[derive(Serialize)]
struct PlantedResult {
    graph: GraphJson,
    planted: Vec<usize>,
    rho: f64,
    degree: usize,
    inner_degree: usize,
    cross_edges: usize,
    measured: ssecut::planted::Measured,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypothesis: Option<ssecut::planted::HypothesisReport>,
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Embed { g, mu, common } => {
            let graph = load_graph(&g)?;
            let emb = match mu {
                Some(mu) => solve_base_embedding(&graph, mu, &solver(&common))?,
                None => solve_embedding_sweep(&graph, &solver(&common))?,
            };
            let result = EmbedResult {
                n: graph.n(),
                phi_sdp: emb.solution.objective,
                feasibility: emb.solution.feasibility(&graph),
                embedding: emb,
            };
            emit("embed", &common, result)
        }
        Command::GsRound { g, round, common } => {
            let graph = load_graph(&g)?;
            let sol = embedding(&graph, &round, &common)?;
            emit(
                "gs-round",
                &common,
                gs_round(&graph, &sol, round.r, round.eps, common.seed)?,
            )
        }
        Command::OrthRound { g, round, common } => {
            let graph = load_graph(&g)?;
            let sol = embedding(&graph, &round, &common)?;
            let out = round_or_small_set_with(&graph, &sol, round.r, round.eps, common.seed)?;
            emit("orth-round", &common, out)
        }
        Command::GenusRound {
            g,
            round,
            beta_pad,
            draws,
            scale,
            common,
        } => {
            let graph = load_graph(&g)?;
            let sol = embedding(&graph, &round, &common)?;
            let opts = GenusOptions {
                scale_factor: scale,
                draws,
            };
            let out = genus_round(
                &graph,
                &sol,
                round.r,
                round.eps,
                beta_pad,
                common.seed,
                &opts,
            )?;
            emit("genus-round", &common, out)
        }
        Command::FlowBuild { g, build, common } => {
            let graph = load_graph(&g)?;
            let c = construct(&graph, &build)?;
            let result = FlowBuildResult {
                objective: c.objective,
                history: c.history,
                capacity: verify_capacity(&c.flow, &graph)?,
                certificate: c.certificate,
            };
            emit("flow-build", &common, result)
        }
        Command::FlowVerify {
            g,
            flow,
            spectral,
            sse,
            weak_sse,
            common,
        } => {
            let graph = load_graph(&g)?;
            let f = load_flow(&flow, graph.n())?;
            let mut result = FlowVerifyResult {
                capacity: verify_capacity(&f, &graph)?,
                spectral: None,
                sse: None,
                weak_sse: None,
            };
            if let Some(v) = spectral {
                let (r, d, lambda) = triple(&v, "--spectral")?;
                let mut cert = verify_spectral(&f, r, d, lambda)?;
                cert.flow = None;
                result.spectral = Some(cert);
            }
            if let Some(v) = sse {
                let (r, d, beta) = triple(&v, "--sse")?;
                result.sse = Some(verify_sse(&f, r, d, beta)?);
            }
            if let Some(v) = weak_sse {
                let (r, d, beta) = triple(&v, "--weak-sse")?;
                result.weak_sse = Some(verify_weak_sse(&f, r, d, beta)?);
            }
            emit("flow-verify", &common, result)
        }
        Command::FlowRound {
            g,
            certificate,
            build,
            eps,
            mode,
            balance,
            net_resolution,
            common,
        } => {
            let graph = load_graph(&g)?;
            let cert = match certificate {
                Some(path) => {
                    let v = find_with(
                        read_json(&path)?,
                        "lambda_measured",
                        &["result", "certificate"],
                    );
                    parse::<SpectralCertificate>(&path, v)?
                }
                None => construct(&graph, &build)?.certificate,
            };
            let mode = match mode {
                Mode::Sparsest => RoundMode::Sparsest,
                Mode::Expansion => RoundMode::Expansion,
                Mode::Balanced => RoundMode::Balanced(balance),
            };
            let opts = FlowRoundOptions {
                net_resolution,
                ..Default::default()
            };
            let cut = flow_round(&graph, &cert, eps, mode, &opts)?;
            let mut certificate = cert;
            certificate.flow = None;
            emit("flow-round", &common, FlowRoundResult { certificate, cut })
        }
        Command::Brute {
            g,
            small,
            balanced,
            common,
        } => {
            let graph = load_graph(&g)?;
            match (small, balanced) {
                (Some(_), Some(_)) => Err(fail("--small and --balanced are exclusive")),
                (Some(r), None) => emit("brute", &common, brute_small_set(&graph, r)?),
                (None, Some(c)) => emit("brute", &common, brute_balanced(&graph, c)?),
                (None, None) => emit("brute", &common, brute_sparsest(&graph)?),
            }
        }
        Command::GenPlanted {
            n,
            rho,
            inner_degree,
            cross_edges,
            check,
            constant,
            graph_out,
            sidecar,
            common,
        } => {
            let inst = generate(n, rho, inner_degree, cross_edges, common.seed)?;
            let hypothesis = match check {
                Some(eps) => Some(check_hypothesis(&inst, eps, constant)?),
                None => None,
            };
            if let Some(path) = graph_out {
                fs::write(&path, pretty(&inst.graph.to_json())?)
                    .map_err(|e| fail(format!("{}: {e}", path.display())))?;
            }
            if let Some(path) = sidecar {
                fs::write(&path, pretty(&inst.sidecar())?)
                    .map_err(|e| fail(format!("{}: {e}", path.display())))?;
            }
            let result = PlantedResult {
                graph: inst.graph.to_json(),
                planted: inst.planted,
                rho: inst.rho,
                degree: inst.degree,
                inner_degree: inst.inner_degree,
                cross_edges: inst.cross_edges,
                measured: inst.measured,
                hypothesis,
            };
            emit("gen-planted", &common, result)
        }
        Command::Bench {
            graphs,
            r,
            eps,
            common,
        } => bench(&graphs, r, eps, &common),
    }
}

fn builtin_suite(seed: u64) -> Res<Vec<(String, Graph)>> {
    let norm = |g: Graph| -> Res<Graph> { Ok(g.normalize_regular()?.graph) };
    let mut out = vec![
        ("K6".to_string(), norm(complete(6))?),
        ("C8".to_string(), norm(cycle(8))?),
        ("C12".to_string(), norm(cycle(12))?),
        ("grid3x4".to_string(), norm(grid(3, 4))?),
        ("barbell5".to_string(), norm(barbell(5))?),
    ];
    let p = generate(12, 0.5, 5, 2, rng::split(seed, 1))?;
    out.push(("planted12".to_string(), p.graph));
    Ok(out)
}

fn bench(files: &[PathBuf], r: usize, eps: f64, common: &Common) -> Res<()> {
    let instances = if files.is_empty() {
        builtin_suite(common.seed)?
    } else {
        files
            .iter()
            .map(|p| {
                let g = load_graph(&GraphArg {
                    graph: p.clone(),
                    raw: false,
                })?;
                Ok((p.display().to_string(), g))
            })
            .collect::<Res<Vec<_>>>()?
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "instance",
        "algorithm",
        "sparsity",
        "oracle",
        "ratio",
        "seconds",
    ])
    .map_err(|e| fail(e.to_string()))?;
    for (i, (name, g)) in instances.iter().enumerate() {
        let seed = rng::split(common.seed, i as u64);
        let oracle = if g.n() <= MAX_N {
            Some(brute_sparsest(g)?.sparsity)
        } else {
            None
        };
        let t = Instant::now();
        let sol = solve_embedding_sweep(g, &solver(common))?.solution;
        let embed_time = t.elapsed().as_secs_f64();
        let rr = r.min(g.n());
        let runs: Vec<(&str, Box<dyn Fn() -> ssecut::Result<f64>>)> = vec![
            (
                "gs-round",
                Box::new(|| Ok(gs_round(g, &sol, rr, eps, seed)?.sparsity)),
            ),
            (
                "orth-round",
                Box::new(|| {
                    Ok(
                        match round_or_small_set_with(g, &sol, rr, eps, seed)?.outcome {
                            RoundOutcome::Cut { cut, .. } => cut.sparsity,
                            RoundOutcome::SmallSet { set, .. } => set.sparsity,
                        },
                    )
                }),
            ),
            (
                "genus-round",
                Box::new(|| {
                    Ok(
                        match genus_round(g, &sol, rr, eps, 3.0, seed, &GenusOptions::default())?
                            .outcome
                        {
                            RoundOutcome::Cut { cut, .. } => cut.sparsity,
                            RoundOutcome::SmallSet { set, .. } => set.sparsity,
                        },
                    )
                }),
            ),
            (
                "flow-round",
                Box::new(|| {
                    let c = construct_spectral_flow(g, 1, 1.0, &ConstructOptions::default())?;
                    Ok(flow_round(
                        g,
                        &c.certificate,
                        eps,
                        RoundMode::Sparsest,
                        &FlowRoundOptions::default(),
                    )?
                    .sparsity)
                }),
            ),
        ];
        for (alg, f) in runs {
            let t = Instant::now();
            let value = f();
            let mut secs = t.elapsed().as_secs_f64();
            if alg != "flow-round" {
                secs += embed_time;
            }
            let (sp, ratio) = match (&value, oracle) {
                (Ok(s), Some(o)) if o > 0.0 => (format!("{s}"), format!("{}", s / o)),
                (Ok(s), Some(_)) if *s == 0.0 => (format!("{s}"), "1".to_string()),
                (Ok(s), _) => (format!("{s}"), String::new()),
                (Err(_), _) => (String::new(), String::new()),
            };
            let o = oracle.map(|o| format!("{o}")).unwrap_or_default();
            w.write_record([name.as_str(), alg, &sp, &o, &ratio, &format!("{secs:.6}")])
                .map_err(|e| fail(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| fail(e.to_string()))?;
    write_out(common, &String::from_utf8_lossy(&bytes))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
