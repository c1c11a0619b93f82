mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pfci::fci::{fci_full, oracle_pag, pfci_with_rule, LambdaRule, RuleSet};
use pfci::graph::GraphJson;
use pfci::harness::{run_benchmark, score, write_aggregate_csv, write_rows_csv, BenchConfig, Method, ShdRef, Study};
use pfci::metrics::{f1, mcc, ConfusionCounts};
use pfci::neighborhood::SymmetryRule;
use pfci::sim::{generate_grouped_dag, generate_sparse_dag, sample_sem, Noise, Sim1Config, Sim2Config};
use pfci::{markov_blanket_layers, Dataset, Execution, FciConfig, NodeSet};

use manifest::RunManifest;

/// Largest Possible-D-SEP subset tried by `benchmark --full` unless overridden.
const FULL_PROFILE_PDS_CAP: usize = 3;

#[derive(Parser)]
#[command(name = "pfci", version, about = "Penalized FCI causal discovery")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "PFCI_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a PAG from a CSV data file.
    Discover(DiscoverArgs),
    /// Draw a ground-truth DAG and data from one of the simulation studies.
    Simulate(SimulateArgs),
    /// Run a replicated benchmark and write per-replicate and aggregate CSVs.
    Benchmark(BenchmarkArgs),
    /// Two-layer Markov blanket of a node in a graph file.
    Blanket(BlanketArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pfci,
    Fci,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymArg {
    And,
    Or,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleSetArg {
    Core,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShdRefArg {
    Pag,
    DagSkeleton,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Sim1,
    Sim2,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Gaussian,
    T4,
}

impl From<SymArg> for SymmetryRule {
    fn from(a: SymArg) -> Self {
        match a {
            SymArg::And => SymmetryRule::And,
            SymArg::Or => SymmetryRule::Or,
        }
    }
}

impl From<RuleSetArg> for RuleSet {
    fn from(a: RuleSetArg) -> Self {
        match a {
            RuleSetArg::Core => RuleSet::Core,
            RuleSetArg::Full => RuleSet::Full,
        }
    }
}

impl From<ShdRefArg> for ShdRef {
    fn from(a: ShdRefArg) -> Self {
        match a {
            ShdRefArg::Pag => ShdRef::Pag,
            ShdRefArg::DagSkeleton => ShdRef::DagSkeleton,
        }
    }
}

impl From<StudyArg> for Study {
    fn from(a: StudyArg) -> Self {
        match a {
            StudyArg::Sim1 => Study::Sim1,
            StudyArg::Sim2 => Study::Sim2,
        }
    }
}

impl From<NoiseArg> for Noise {
    fn from(a: NoiseArg) -> Self {
        match a {
            NoiseArg::Gaussian => Noise::Gaussian,
            NoiseArg::T4 => Noise::StudentT4,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum LambdaArg {
    Auto,
    Cv,
    Fixed(f64),
}

fn parse_lambda(s: &str) -> Result<LambdaArg, String> {
    match s {
        "auto" => Ok(LambdaArg::Auto),
        "cv" => Ok(LambdaArg::Cv),
        _ => match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(LambdaArg::Fixed(v)),
            _ => Err(format!("expected auto, cv or a non-negative number, got '{s}'")),
        },
    }
}

#[derive(Args)]
struct FciArgs {
    /// CI test significance level.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = RuleSetArg::Core)]
    rule_set: RuleSetArg,
    /// Largest conditioning set during skeleton refinement.
    #[arg(long)]
    max_cond_size: Option<usize>,
    /// Largest Possible-D-SEP subset tested.
    #[arg(long)]
    max_pds_size: Option<usize>,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Numeric CSV with a header row of node names. Categorical variables
    /// must be encoded numerically by the caller; the Fisher z test treats
    /// every column as Gaussian, so such a column is only an approximation.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Pfci)]
    method: MethodArg,
    /// Lasso penalty: auto, cv, or a number.
    #[arg(long, default_value = "auto", value_parser = parse_lambda)]
    lambda: LambdaArg,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, default_value_t = 20)]
    cv_grid: usize,
    #[arg(long, value_enum, default_value_t = SymArg::Or)]
    sym_rule: SymArg,
    #[command(flatten)]
    fci: FciArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth DAG JSON; when given, metrics.json is written.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ShdRefArg::Pag)]
    shd_ref: ShdRefArg,
    /// Also write graph.dot.
    #[arg(long)]
    dot: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    study: StudyArg,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Edge probability (sparse study).
    #[arg(long, default_value_t = 0.015)]
    pi: f64,
    /// Group size (grouped study).
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Number of groups influenced by Y (grouped study).
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Benchmark description JSON.
    #[arg(long, conflicts_with = "full", required_unless_present = "full")]
    config: Option<PathBuf>,
    /// Run the large grid p = 100..1000 with 20 replicates.
    #[arg(long)]
    full: bool,
    #[arg(long, value_enum, default_value_t = StudyArg::Sim1)]
    study: StudyArg,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config value.
    #[arg(long)]
    max_pds_size: Option<usize>,
    /// Overrides the config value.
    #[arg(long)]
    max_cond_size: Option<usize>,
    #[arg(long, value_enum)]
    shd_ref: Option<ShdRefArg>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BlanketArgs {
    /// Graph JSON.
    #[arg(long)]
    graph: PathBuf,
    /// Node name.
    #[arg(long)]
    target: String,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

#[derive(Serialize)]
struct DiscoverMetrics {
    shd: usize,
    shd_ref: ShdRef,
    f1: f64,
    mcc: f64,
    f1_degenerate: bool,
    mcc_degenerate: bool,
    #[serde(flatten)]
    counts: ConfusionCounts,
}

fn discover(a: DiscoverArgs) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let data = Dataset::read_csv_path(&a.input).with_context(|| format!("cannot load {}", a.input.display()))?;
    let cfg = FciConfig {
        alpha: a.fci.alpha,
        max_cond_size: a.fci.max_cond_size,
        max_pds_size: a.fci.max_pds_size,
        rule_set: a.fci.rule_set.into(),
        exec: Execution::Parallel,
    };
    let lambda = match a.lambda {
        LambdaArg::Auto => LambdaRule::Auto,
        LambdaArg::Fixed(value) => LambdaRule::Fixed { value },
        LambdaArg::Cv => LambdaRule::Cv { folds: a.cv_folds, grid_size: a.cv_grid, seed: a.seed },
    };
    let sym: SymmetryRule = a.sym_rule.into();
    let method = match a.method {
        MethodArg::Pfci => Method::Pfci,
        MethodArg::Fci => Method::Fci,
    };
    let out = match method {
        Method::Pfci => pfci_with_rule(&data, lambda, sym, &cfg)?,
        Method::Fci => fci_full(&data, &cfg)?,
    };

    let config = serde_json::json!({
        "method": method,
        "lambda": lambda,
        "sym_rule": sym,
        "fci": cfg,
        "seed": a.seed,
        "shd_ref": ShdRef::from(a.shd_ref),
    });
    let mut m = RunManifest::new("discover", config);
    m.input(&a.input)?;

    let graph_path = a.out_dir.join("graph.json");
    write_text(&graph_path, &(GraphJson::from(&out.pag).to_string_pretty() + "\n"))?;
    m.output(&graph_path)?;
    let stage_path = a.out_dir.join("stage.json");
    write_json(&stage_path, &out.meta)?;
    m.output(&stage_path)?;
    if a.dot {
        let dot_path = a.out_dir.join("graph.dot");
        write_text(&dot_path, &out.pag.to_dot())?;
        m.output(&dot_path)?;
    }
    if let Some(truth_path) = &a.truth {
        let truth = GraphJson::parse(&read_text(truth_path)?)
            .and_then(|g| g.to_dag())
            .with_context(|| format!("invalid DAG in {}", truth_path.display()))?;
        m.input(truth_path)?;
        let shd_ref: ShdRef = a.shd_ref.into();
        let reference = match shd_ref {
            ShdRef::Pag => Some(oracle_pag(&truth, &NodeSet::new(), &NodeSet::new(), &cfg)?),
            ShdRef::DagSkeleton => None,
        };
        let (shd, counts) = score(&out.pag, &truth, reference.as_ref()).context("truth and estimate have different nodes")?;
        let (f, c) = (f1(&counts), mcc(&counts));
        let metrics = DiscoverMetrics {
            shd,
            shd_ref,
            f1: f.value,
            mcc: c.value,
            f1_degenerate: f.degenerate,
            mcc_degenerate: c.degenerate,
            counts,
        };
        let metrics_path = a.out_dir.join("metrics.json");
        write_json(&metrics_path, &metrics)?;
        m.output(&metrics_path)?;
    }
    m.timings_ms.insert("stage1".into(), out.meta.ms_stage1);
    m.timings_ms.insert("stage2".into(), out.meta.ms_stage2);
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&a.out_dir)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let noise: Noise = a.noise.into();
    let (dag, config) = match a.study {
        StudyArg::Sim1 => {
            let cfg = Sim1Config { noise, ..Sim1Config::new(a.p, a.n, a.pi, a.seed) };
            cfg.validate()?;
            (generate_sparse_dag(&cfg)?, serde_json::json!({ "study": Study::Sim1, "config": cfg }))
        }
        StudyArg::Sim2 => {
            let cfg = Sim2Config { noise, ..Sim2Config::new(a.p, a.n, a.k, a.s, a.seed) };
            cfg.validate()?;
            (generate_grouped_dag(&cfg)?, serde_json::json!({ "study": Study::Sim2, "config": cfg }))
        }
    };
    let data = sample_sem(&dag, a.n, noise, pfci::sim::derive_seed(a.seed, 1))?;
    let mut m = RunManifest::new("simulate", config.clone());

    let data_path = a.out_dir.join("data.csv");
    let file = fs::File::create(&data_path).with_context(|| format!("cannot write {}", data_path.display()))?;
    data.write_csv(std::io::BufWriter::new(file))?;
    m.output(&data_path)?;
    let dag_path = a.out_dir.join("dag.json");
    write_text(&dag_path, &(GraphJson::from(&dag).to_string_pretty() + "\n"))?;
    m.output(&dag_path)?;
    let config_path = a.out_dir.join("config.json");
    write_json(&config_path, &config)?;
    m.output(&config_path)?;
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&a.out_dir)?;
    Ok(())
}

fn run_one_benchmark(cfg: &BenchConfig, dir: &Path, input: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let result = run_benchmark(cfg, Execution::Parallel)?;
    let mut m = RunManifest::new("benchmark", serde_json::to_value(cfg)?);
    if let Some(path) = input {
        m.input(path)?;
    }
    let rows_path = dir.join("replicates.csv");
    let f = fs::File::create(&rows_path).with_context(|| format!("cannot write {}", rows_path.display()))?;
    write_rows_csv(&result.rows, f)?;
    m.output(&rows_path)?;
    let agg_path = dir.join("aggregate.csv");
    let f = fs::File::create(&agg_path).with_context(|| format!("cannot write {}", agg_path.display()))?;
    write_aggregate_csv(&result.aggregate, f)?;
    m.output(&agg_path)?;
    m.timings_ms.insert("total".into(), ms(start));
    m.write(dir)?;
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let configs: Vec<BenchConfig> = if a.full {
        BenchConfig::full_profile(a.study.into(), a.seed.unwrap_or(0))
            .into_iter()
            .map(|c| BenchConfig { max_pds_size: Some(a.max_pds_size.unwrap_or(FULL_PROFILE_PDS_CAP)), ..c })
            .collect()
    } else {
        let path = a.config.as_ref().expect("clap requires --config without --full");
        let text = read_text(path)?;
        let cfg: BenchConfig = serde_json::from_str(&text).with_context(|| format!("invalid benchmark config {}", path.display()))?;
        vec![cfg]
    };
    let configs: Vec<BenchConfig> = configs
        .into_iter()
        .map(|mut c| {
            if let Some(seed) = a.seed {
                c.seed = seed;
            }
            if !a.full && a.max_pds_size.is_some() {
                c.max_pds_size = a.max_pds_size;
            }
            if a.max_cond_size.is_some() {
                c.max_cond_size = a.max_cond_size;
            }
            if let Some(r) = a.shd_ref {
                c.shd_ref = r.into();
            }
            c
        })
        .collect();
    if configs.len() == 1 {
        return run_one_benchmark(&configs[0], &a.out_dir, a.config.as_deref());
    }
    for c in &configs {
        let dir = a.out_dir.join(format!("k{}_s{}", c.k.unwrap_or(0), c.s.unwrap_or(0)));
        run_one_benchmark(c, &dir, None)?;
    }
    Ok(())
}

fn blanket(a: BlanketArgs) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let g = GraphJson::parse(&read_text(&a.graph)?)
        .and_then(|g| g.to_mixed())
        .with_context(|| format!("invalid graph in {}", a.graph.display()))?;
    let Some(target) = g.index_of(&a.target) else {
        bail!("node '{}' not found in {}", a.target, a.graph.display());
    };
    let report = markov_blanket_layers(&g, target)?;
    let mut m = RunManifest::new("blanket", serde_json::json!({ "target": a.target }));
    m.input(&a.graph)?;
    let path = a.out_dir.join("blanket.json");
    write_json(&path, &report)?;
    m.output(&path)?;
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&a.out_dir)?;
    Ok(())
}

/// Error chain joined by ": ", skipping causes already quoted by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !prev.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
        prev = text;
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(t);
    }
    if let Err(e) = pool.build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::FAILURE;
    }
    let result = match cli.command {
        Command::Discover(a) => discover(a),
        Command::Simulate(a) => simulate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Blanket(a) => blanket(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::FAILURE
        }
    }
}
