//! `liftsub`: sample lifts, build and verify clique subdivisions, audit
//! pseudorandom properties, run exact oracles and sweeps.
//!
//! Exit status: 0 on success or pass, 1 when a check fails or a build finds
//! no certificate, 2 on usage, parse or I/O errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use liftsub::connector::check_extendable;
use liftsub::oracle::{
    check_property_p, exact_avoidance_probability, exact_hajos_number, max_edges_on_b_subset,
    search_property_p_violator, subdivision_nonexistence_by_counting, CountingVerdict, OracleBudget, SimpleGraph,
};
use liftsub::par;
use liftsub::props::{
    avoidance_bound, check_expansion_into, check_joined, estimate_avoidance_probability, find_cross_matching,
    random_pair_set, JoinMode, JoinedOptions,
};
use liftsub::rng::substream;
use liftsub::{
    build, complete_base, run_sweep, verify_certificate, BaseGraph, BuildConfig, BuilderChoice, EllSpec,
    EmbeddingState, Execution, ExtendabilityParams, LiftGraph, SubdivisionCertificate, SweepConfig, VertexId,
};

#[derive(Parser)]
#[command(name = "liftsub", version, about = "Clique subdivisions in random graph lifts")]
struct Cli {
    /// Worker threads for data-parallel work (0 = all cores).
    #[arg(long, global = true, env = "LIFTSUB_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Run every data-parallel loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a uniform random lift and write it as JSON.
    Sample {
        /// Lift of K_n.
        #[arg(long)]
        n: Option<usize>,
        /// Base graph as an edge list ("u v" per line) instead of K_n.
        #[arg(long, conflicts_with = "n")]
        base: Option<PathBuf>,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Build a clique subdivision and write the outcome.
    Build {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BuilderArg::Auto)]
        builder: BuilderArg,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Use the constants of the original argument instead of the practical defaults.
        #[arg(long)]
        paper_constants: bool,
        /// Seeded random branch choice.
        #[arg(long)]
        random_branches: bool,
        /// Also write the bare certificate here.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Verify a certificate against a lift.
    Verify {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        certificate: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pseudorandomness checks.
    Props {
        #[command(subcommand)]
        check: PropsCommand,
    },
    /// Exact brute-force oracles for tiny graphs.
    Oracle {
        #[command(subcommand)]
        query: OracleCommand,
    },
    /// Run a grid of builds and stream CSV rows.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BuilderArg {
    Large,
    Small,
    Auto,
}

impl From<BuilderArg> for BuilderChoice {
    fn from(b: BuilderArg) -> Self {
        match b {
            BuilderArg::Large => BuilderChoice::Large,
            BuilderArg::Small => BuilderChoice::Small,
            BuilderArg::Auto => BuilderChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Subcommand)]
enum PropsCommand {
    /// Every two disjoint m-sets have an edge between them.
    Joined {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
        mode: ModeArg,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Cap on enumerated (A, B) pairs in exhaustive mode.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u128,
        #[command(flatten)]
        common: Common,
    },
    /// Expansion of random sets into V(G).
    Expansion {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,8")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-matching between the neighbourhoods of `count` vertices of fiber 0.
    CrossMatching {
        #[arg(long, short)]
        input: PathBuf,
        /// Defaults to n.
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo avoidance probability of a forbidden pair set.
    Avoidance {
        #[arg(long)]
        ell: usize,
        /// Pairs "a-b" separated by commas.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        /// Draw this many random pairs instead.
        #[arg(long, conflicts_with = "pairs")]
        random: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Extendability audit of an embedding state.
    Extendable {
        #[arg(long, short)]
        input: PathBuf,
        /// State file; an empty state when omitted.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact Hajós number.
    Hajos {
        #[command(flatten)]
        graph: GraphInput,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Maximum number of edges spanned by a b-set.
    MaxEdges {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        b: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Edge-count criterion for the absence of a K_b subdivision.
    Counting {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        b: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Property (P) for one set X, or a search for a set without it.
    PropertyP {
        #[arg(long, short)]
        input: PathBuf,
        /// Vertices "fiber:layer" separated by commas; searches when omitted.
        #[arg(long, value_delimiter = ',')]
        x: Vec<String>,
        /// Size of searched sets; defaults to n.
        #[arg(long)]
        size: Option<usize>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Exact avoidance probability via the permanent.
    Avoidance {
        #[arg(long)]
        ell: usize,
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct GraphInput {
    /// Lift file (JSON) or edge list ("u v" per line).
    #[arg(long, short)]
    input: PathBuf,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 24)]
    max_nodes: usize,
    #[arg(long, default_value_t = 100_000_000)]
    max_states: u64,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
}

impl BudgetArgs {
    fn budget(&self) -> Result<OracleBudget> {
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            bail!("--time-limit must be positive");
        }
        Ok(OracleBudget {
            max_nodes: self.max_nodes,
            max_states: self.max_states,
            time_limit: Duration::from_secs_f64(self.time_limit),
        })
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// Absolute ℓ values.
    #[arg(long, value_delimiter = ',', conflicts_with = "ratio_list", required_unless_present = "ratio_list")]
    ell_list: Vec<usize>,
    /// ℓ/n ratios.
    #[arg(long, value_delimiter = ',')]
    ratio_list: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = BuilderArg::Auto)]
    builder: BuilderArg,
    #[arg(long)]
    paper_constants: bool,
    /// Seconds; jobs starting later are skipped.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Summary JSON path; stderr when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Directory for lift and certificate files of successful runs.
    #[arg(long)]
    certificates: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Error that maps to exit status 2.
fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("{msg}")
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Writes `value` as JSON or `text` in text mode.
fn report(common: &Common, value: &Value, text: impl FnOnce() -> String) -> Result<()> {
    let body = match common.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(value)?),
        Format::Text => text(),
    };
    emit(common.output.as_deref(), &body)
}

fn read_lift(path: &Path) -> Result<LiftGraph> {
    LiftGraph::read_file(path).map_err(usage)
}

fn read_graph(path: &Path) -> Result<SimpleGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let g = LiftGraph::from_json(&text).map_err(usage)?;
        SimpleGraph::from_lift(&g).map_err(usage)
    } else {
        SimpleGraph::parse_edge_list(&text, None).map_err(usage)
    }
}

fn parse_pairs(items: &[String]) -> Result<Vec<(usize, usize)>> {
    items
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s.split_once('-').ok_or_else(|| usage(format!("--pairs: expected a-b, got {s}")))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

fn parse_vertices(items: &[String]) -> Result<Vec<VertexId>> {
    items
        .iter()
        .map(|s| {
            let (f, l) = s.split_once(':').ok_or_else(|| usage(format!("--x: expected fiber:layer, got {s}")))?;
            Ok(VertexId::new(f.trim().parse()?, l.trim().parse()?))
        })
        .collect()
}

fn cmd_sample(n: Option<usize>, base: Option<PathBuf>, ell: usize, seed: u64, output: Option<PathBuf>) -> Result<bool> {
    let base = match (n, base) {
        (Some(n), None) => complete_base(n).map_err(usage)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let h = SimpleGraph::parse_edge_list(&text, None).map_err(usage)?;
            BaseGraph::new(h.num_vertices(), h.edges().collect::<Vec<_>>()).map_err(usage)?
        }
        _ => bail!("give exactly one of --n or --base"),
    };
    log::info!("sampling a {ell}-lift of a {}-vertex base with seed {seed}", base.num_vertices());
    let g = LiftGraph::sample_uniform(&base, ell, seed).map_err(usage)?;
    emit(output.as_deref(), &g.to_json())?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    input: &Path,
    builder: BuilderArg,
    epsilon: f64,
    paper: bool,
    random_branches: bool,
    certificate: Option<PathBuf>,
    common: &Common,
) -> Result<bool> {
    let g = read_lift(input)?;
    let mut cfg = if paper { BuildConfig::paper(epsilon) } else { BuildConfig::with_epsilon(epsilon) };
    cfg.seed = common.seed;
    cfg.random_branches = random_branches;
    let out = build(&g, &cfg, builder.into());
    if let (Some(path), Some(cert)) = (&certificate, &out.certificate) {
        cert.write_file(path).map_err(usage)?;
    }
    let value: Value = serde_json::from_str(&out.to_json())?;
    report(common, &value, || match &out.failure {
        None => format!(
            "{} builder: K_{} subdivision, {} vertices, target order {:.2}\n",
            out.builder,
            out.achieved_order(),
            out.stats.total_vertices,
            out.target_order
        ),
        Some(f) => format!("{} builder failed at {}: {}\n", out.builder, f.stage, f.reason),
    })?;
    Ok(out.is_success())
}

fn cmd_verify(input: &Path, certificate: &Path, common: &Common) -> Result<bool> {
    let g = read_lift(input)?;
    let cert = SubdivisionCertificate::read_file(certificate).map_err(usage)?;
    let verdict = verify_certificate(&g, &cert);
    report(common, &serde_json::to_value(&verdict)?, || {
        let mut s = if verdict.pass {
            format!("pass: K_{} subdivision, {} vertices\n", verdict.order, cert.vertex_count())
        } else {
            format!("fail: {} violations\n", verdict.violations.len())
        };
        for v in &verdict.violations {
            s.push_str(&format!("  {v}\n"));
        }
        s
    })?;
    Ok(verdict.pass)
}

fn cmd_props(check: PropsCommand, exec: Execution) -> Result<bool> {
    match check {
        PropsCommand::Joined { input, m, mode, trials, budget, common } => {
            let g = read_lift(&input)?;
            let mode = match mode {
                ModeArg::Exhaustive => JoinMode::Exhaustive,
                ModeArg::Sampled => JoinMode::Sampled,
            };
            let opts = JoinedOptions { mode, trials, seed: common.seed, budget, exec };
            let v = check_joined(&g, m, &opts).map_err(usage)?;
            report(&common, &serde_json::to_value(&v)?, || match &v.witness {
                None => format!("{}-joined: no witness found ({:?})\n", v.m, v.mode),
                Some((a, b)) => format!("not {}-joined: A = {a:?}, B = {b:?}\n", v.m),
            })?;
            Ok(v.holds)
        }
        PropsCommand::Expansion { input, epsilon, sizes, trials, common } => {
            let g = read_lift(&input)?;
            let all: Vec<VertexId> = g.vertices().collect();
            let r = check_expansion_into(&g, &all, epsilon, &sizes, trials, common.seed).map_err(usage)?;
            report(&common, &serde_json::to_value(&r)?, || {
                format!(
                    "tested {} sets, worst ratio {:.4}, violator: {:?}\n",
                    r.tested_sets, r.worst_ratio, r.violating_set
                )
            })?;
            Ok(r.violating_set.is_none())
        }
        PropsCommand::CrossMatching { input, count, common } => {
            let g = read_lift(&input)?;
            let count = count.unwrap_or(g.n());
            if count > g.ell() || g.n() < 2 {
                bail!("--count {count} needs ell >= count and n >= 2");
            }
            let t: Vec<Vec<VertexId>> = (0..count).map(|l| g.neighbors_iter(VertexId::new(0, l)).collect()).collect();
            let m = find_cross_matching(&g, &t).map_err(usage)?;
            let uncovered = m.uncovered_pairs(count);
            let value = json!({ "matching": m, "uncovered_pairs": uncovered, "pairs": count * (count - 1) / 2 });
            report(&common, &value, || format!("{} edges, {uncovered} pairs uncovered\n", m.edges.len()))?;
            Ok(true)
        }
        PropsCommand::Avoidance { ell, pairs, random, trials, common } => {
            let f = match random {
                Some(k) => random_pair_set(ell, k, &mut substream(common.seed, &[u64::MAX])),
                None => parse_pairs(&pairs)?,
            };
            let e = estimate_avoidance_probability(&f, ell, trials, common.seed).map_err(usage)?;
            let bound = avoidance_bound(f.len(), ell);
            let value = json!({ "estimate": e, "bound": bound, "pairs": f });
            report(&common, &value, || {
                format!("{:.5} in [{:.5}, {:.5}] (99%), bound {:.5}\n", e.estimate, e.lower, e.upper, bound)
            })?;
            Ok(true)
        }
        PropsCommand::Extendable { input, state, d, m, sizes, trials, common } => {
            let g = read_lift(&input)?;
            let s = match state {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    EmbeddingState::from_json(&g, &text).map_err(usage)?
                }
                None => {
                    let auto = ExtendabilityParams::asymptotic(g.n(), g.ell());
                    let params = ExtendabilityParams::new(d.unwrap_or(auto.d), m.unwrap_or(auto.m)).map_err(usage)?;
                    EmbeddingState::new(&g, params)
                }
            };
            let r = check_extendable(&g, &s, &sizes, trials, common.seed).map_err(usage)?;
            report(&common, &serde_json::to_value(&r)?, || {
                format!(
                    "tested {} sets, worst margin {}, violations {}\n",
                    r.tested_sets,
                    r.worst_margin,
                    r.violations()
                )
            })?;
            Ok(r.violations() == 0)
        }
    }
}

fn cmd_oracle(query: OracleCommand) -> Result<bool> {
    match query {
        OracleCommand::Hajos { graph, budget, common } => {
            let h = read_graph(&graph.input)?;
            let a = exact_hajos_number(&h, &budget.budget()?).map_err(usage)?;
            report(&common, &serde_json::to_value(&a)?, || format!("hajos number: {a}\n"))?;
            Ok(true)
        }
        OracleCommand::MaxEdges { graph, b, budget, common } => {
            let h = read_graph(&graph.input)?;
            let e = max_edges_on_b_subset(&h, b, &budget.budget()?).map_err(usage)?;
            report(&common, &serde_json::to_value(e)?, || {
                format!("max edges on a {b}-set: {}{}\n", e.value, if e.exact { "" } else { " (lower bound)" })
            })?;
            Ok(true)
        }
        OracleCommand::Counting { graph, b, budget, common } => {
            let h = read_graph(&graph.input)?;
            let r = subdivision_nonexistence_by_counting(&h, b, &budget.budget()?).map_err(usage)?;
            report(&common, &serde_json::to_value(&r)?, || {
                let verdict = match r.verdict {
                    CountingVerdict::NoSubdivision => "no subdivision",
                    CountingVerdict::Inconclusive => "inconclusive",
                };
                format!("K_{b}: {verdict} (threshold {})\n", r.threshold)
            })?;
            Ok(true)
        }
        OracleCommand::PropertyP { input, x, size, budget, common } => {
            let g = read_lift(&input)?;
            if x.is_empty() {
                let size = size.unwrap_or(g.n());
                let s = search_property_p_violator(&g, size, &budget.budget()?, common.seed).map_err(usage)?;
                report(&common, &serde_json::to_value(&s)?, || match &s.violator {
                    Some(v) => format!("violator after {} sets: {v:?}\n", s.examined),
                    None => format!("no violator in {} sets (exhaustive: {})\n", s.examined, s.exhaustive),
                })?;
                Ok(s.violator.is_none())
            } else {
                let set = parse_vertices(&x)?;
                let holds = check_property_p(&g, &set).map_err(usage)?;
                report(&common, &json!({ "holds": holds }), || format!("property (P): {holds}\n"))?;
                Ok(holds)
            }
        }
        OracleCommand::Avoidance { ell, pairs, common } => {
            let f = parse_pairs(&pairs)?;
            let p = exact_avoidance_probability(&f, ell).map_err(usage)?;
            let value = json!({
                "numerator": p.numer(),
                "denominator": p.denom(),
                "value": *p.numer() as f64 / *p.denom() as f64,
                "bound": avoidance_bound(f.len(), ell),
            });
            report(&common, &value, || format!("{p}\n"))?;
            Ok(true)
        }
    }
}

fn cmd_sweep(a: SweepArgs, workers: usize, exec: Execution) -> Result<bool> {
    let ell = if a.ratio_list.is_empty() { EllSpec::Absolute(a.ell_list) } else { EllSpec::Ratios(a.ratio_list) };
    let mut cfg = SweepConfig::new(a.n_list, ell, a.trials);
    cfg.epsilon = a.epsilon;
    cfg.seed = a.seed;
    cfg.builder = a.builder.into();
    cfg.paper_constants = a.paper_constants;
    cfg.workers = workers;
    cfg.exec = exec;
    cfg.certificate_dir = a.certificates;
    cfg.time_budget = a
        .time_budget
        .map(|s| {
            if s >= 0.0 && s.is_finite() {
                Ok(Duration::from_secs_f64(s))
            } else {
                Err(usage("--time-budget must be non-negative"))
            }
        })
        .transpose()?;
    cfg.validate().map_err(usage)?;
    let summary = match &a.output {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            run_sweep(&cfg, std::io::BufWriter::new(file))?
        }
        None => run_sweep(&cfg, std::io::stdout())?,
    };
    match &a.summary {
        Some(path) => fs::write(path, summary.to_json()).with_context(|| format!("writing {}", path.display()))?,
        None => eprint!("{}", summary.to_json()),
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let workers = cli.workers;
    match cli.command {
        Command::Sample { n, base, ell, seed, output } => cmd_sample(n, base, ell, seed, output),
        Command::Build { input, builder, epsilon, paper_constants, random_branches, certificate, common } => {
            par::with_workers(workers, || {
                cmd_build(&input, builder, epsilon, paper_constants, random_branches, certificate, &common)
            })
        }
        Command::Verify { input, certificate, common } => cmd_verify(&input, &certificate, &common),
        Command::Props { check } => par::with_workers(workers, || cmd_props(check, exec)),
        Command::Oracle { query } => cmd_oracle(query),
        Command::Sweep(a) => cmd_sweep(a, workers, exec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
