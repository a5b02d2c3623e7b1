//! `gigcover`: instance generation, LP benchmarks, online simulation and the constants report.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage or invalid parameters, 3 LP too large,
//! 4 clairvoyant oracle infeasible, 5 a checked bound was violated.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gigcover::algorithms::AlgError;
use gigcover::analysis::{analysis_report, AnalysisOptions};
use gigcover::benchmarks::{
    build_config_lp, build_offline_lp, build_online_coverage_lp, solve_optimal, BenchmarkError, Model, DEFAULT_MAX_VARS,
};
use gigcover::instance::{
    gen_random, gen_star_example, load_json, split_high_rate_types, GenParams, Instance, InstanceError, UtilityChoice,
};
use gigcover::lpsolver::LinearProgram;
use gigcover::simulator::{competitive_ratio_report, OptMode, PolicyKind, RatioReport, SimError};

#[derive(Parser)]
#[command(name = "gigcover", version, about = "Capacitated coverage assignment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file
    Gen(GenArgs),
    /// Solve a benchmark LP
    Solve(SolveArgs),
    /// Simulate online policies and report competitive ratios
    Simulate(SimulateArgs),
    /// Evaluate the analysis constants and cross-checks
    Analysis(AnalysisArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityArg {
    Coverage,
    Sqrt,
    Explicit,
}

#[derive(Args)]
struct GenArgs {
    /// The star instance separating greedy from the LP-guided policy
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    star: bool,
    #[arg(long)]
    random: bool,
    /// Star size
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Star leaf weight
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    tasks: usize,
    #[arg(long, default_value_t = 5)]
    workers: usize,
    #[arg(long, default_value_t = 4)]
    features: usize,
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    feature_prob: f64,
    /// Task capacity range, `lo..hi` inclusive
    #[arg(long, default_value = "1..2", value_parser = parse_range)]
    task_cap: (u32, u32),
    #[arg(long, default_value = "1..2", value_parser = parse_range)]
    worker_cap: (u32, u32),
    #[arg(long, value_enum, default_value_t = UtilityArg::Coverage)]
    utility: UtilityArg,
    /// Horizon `T`; omit for an offline instance
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    model: Model,
    instance: PathBuf,
    /// Solution JSON path (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the LP in the text dump format
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Variable limit for the configuration LP
    #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
    max_vars: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptArg {
    Exact,
    Mc,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Model,
    instance: PathBuf,
    /// Comma-separated: alg2, alg3, greedy
    #[arg(long, value_delimiter = ',', default_value = "alg2,greedy")]
    policies: Vec<PolicyKind>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Include the clairvoyant optimum
    #[arg(long, value_enum)]
    opt: Option<OptArg>,
    /// Arrival sequences for `--opt mc`
    #[arg(long, default_value_t = 1000)]
    opt_trials: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Worker types with a larger rate are split before an on-csm run
    #[arg(long, default_value_t = 0.1)]
    rate_cap: f64,
    #[arg(long)]
    no_split: bool,
    /// Identifier written in every report row (default: file stem)
    #[arg(long)]
    id: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct AnalysisArgs {
    /// Monte Carlo trials per balls-and-bins check
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let lo: u32 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: u32 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

enum Failure {
    Usage(String),
    LpSize(String),
    OracleInfeasible(String),
    BoundViolation(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::LpSize(_) => 3,
            Failure::OracleInfeasible(_) => 4,
            Failure::BoundViolation(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::LpSize(m) | Failure::OracleInfeasible(m) | Failure::BoundViolation(m) => {
                m.clone()
            }
            Failure::Other(e) => format!("{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::InvalidParams(_) | InstanceError::OracleTooLarge(_) | InstanceError::NotOnline => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Other(other.into()),
        }
    }
}

impl From<BenchmarkError> for Failure {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::TooManyVariables { .. } | BenchmarkError::CapacityTooLarge { .. } => {
                Failure::LpSize(e.to_string())
            }
            BenchmarkError::NotCoverage { .. } => Failure::Usage(e.to_string()),
            BenchmarkError::Instance(inner) => inner.into(),
            other => Failure::Other(other.into()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::SearchTooLarge { .. } | SimError::ExactTooLarge { .. } => {
                Failure::OracleInfeasible(e.to_string())
            }
            SimError::Benchmark(b) | SimError::Alg(AlgError::Benchmark(b)) => b.into(),
            SimError::Instance(i) | SimError::Alg(AlgError::Instance(i)) => i.into(),
            other => Failure::Other(other.into()),
        }
    }
}

fn write_output(path: Option<&Path>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(body.as_bytes()).context("writing stdout")?,
    }
    Ok(())
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let inst = load_json(path).with_context(|| format!("reading {}", path.display()))?;
    let violations = inst.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::Usage(format!(
            "invalid instance {}: {}",
            path.display(),
            list.join("; ")
        )));
    }
    Ok(inst)
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let inst = if args.star {
        if args.n == 0 {
            return Err(Failure::Usage("--n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&args.eps) {
            return Err(Failure::Usage("--eps must lie in [0, 1]".into()));
        }
        gen_star_example(args.n, args.eps)
    } else {
        let seed = args
            .seed
            .ok_or_else(|| Failure::Usage("--random requires --seed".into()))?;
        gen_random(&GenParams {
            tasks: args.tasks,
            workers: args.workers,
            features: args.features,
            edge_prob: args.edge_prob,
            feature_prob: args.feature_prob,
            task_capacity: args.task_cap,
            worker_capacity: args.worker_cap,
            utility: match args.utility {
                UtilityArg::Coverage => UtilityChoice::Coverage,
                UtilityArg::Sqrt => UtilityChoice::SqrtDiversity,
                UtilityArg::Explicit => UtilityChoice::Explicit,
            },
            horizon: args.horizon,
            seed,
        })?
    };
    let violations = inst.validate();
    eprintln!(
        "{} tasks, {} workers, {} edges, {} features, horizon {}: {}",
        inst.num_tasks(),
        inst.num_workers(),
        inst.num_edges(),
        inst.num_features(),
        inst.horizon().map_or_else(|| "none".to_string(), |t| t.to_string()),
        if violations.is_empty() {
            "valid".to_string()
        } else {
            format!("{} violations", violations.len())
        }
    );
    if !violations.is_empty() {
        return Err(anyhow!("generated instance failed validation").into());
    }
    let mut body = inst.to_json_string();
    body.push('\n');
    write_output(args.output.as_deref(), &body)
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    model: Model,
    status: String,
    objective: f64,
    iterations: usize,
    num_vars: usize,
    num_rows: usize,
    /// Nonzero variables only.
    values: Vec<NamedValue<'a>>,
}

#[derive(Serialize)]
struct NamedValue<'a> {
    name: &'a str,
    value: f64,
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = load_instance(&args.instance)?;
    let lp: LinearProgram = match args.model {
        Model::OffCcm => build_offline_lp(&inst)?.lp,
        Model::OnCcm => build_online_coverage_lp(&inst)?.lp,
        Model::OnCsm => build_config_lp(&inst, args.max_vars)?.lp,
    };
    if let Some(path) = &args.dump {
        fs::write(path, lp.dump()).with_context(|| format!("writing {}", path.display()))?;
    }
    let sol = solve_optimal(&lp)?;
    println!("optimum {:.10}", sol.objective);
    let file = SolutionFile {
        model: args.model,
        status: format!("{:?}", sol.status),
        objective: sol.objective,
        iterations: sol.iterations,
        num_vars: lp.num_vars(),
        num_rows: lp.num_rows(),
        values: lp
            .names()
            .iter()
            .zip(&sol.values)
            .filter(|(_, &v)| v != 0.0)
            .map(|(name, &value)| NamedValue { name, value })
            .collect(),
    };
    let mut body = serde_json::to_string_pretty(&file).context("serializing the solution")?;
    body.push('\n');
    match &args.output {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{body}"),
    }
    Ok(())
}

fn report_csv(report: &RatioReport) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row).context("writing CSV")?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("flushing CSV: {e}"))?;
    Ok(String::from_utf8(bytes).context("CSV is not UTF-8")?)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    if args.policies.is_empty() {
        return Err(Failure::Usage("--policies is empty".into()));
    }
    let mut inst = load_instance(&args.instance)?;
    if inst.horizon().is_none() {
        return Err(Failure::Usage(
            "simulation needs an online instance (with a horizon)".into(),
        ));
    }
    if args.model == Model::OnCsm && !args.no_split {
        let split = split_high_rate_types(&inst, args.rate_cap)?;
        if split.num_workers() != inst.num_workers() {
            eprintln!(
                "split worker types above rate {}: {} -> {} types",
                args.rate_cap,
                inst.num_workers(),
                split.num_workers()
            );
        }
        inst = split;
    }
    let id = args.id.clone().unwrap_or_else(|| {
        args.instance
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "instance".into())
    });
    let opt = args.opt.map(|o| match o {
        OptArg::Exact => OptMode::Exact,
        OptArg::Mc => OptMode::MonteCarlo {
            trials: args.opt_trials,
            seed: args.seed,
        },
    });
    let report = competitive_ratio_report(&inst, &id, args.model, &args.policies, args.trials, args.seed, opt)?;
    let csv_body = report_csv(&report)?;
    let mut json_body = serde_json::to_string_pretty(&report).context("serializing the report")?;
    json_body.push('\n');
    if let Some(p) = &args.csv {
        write_output(Some(p), &csv_body)?;
    }
    if let Some(p) = &args.json {
        write_output(Some(p), &json_body)?;
    }
    if args.csv.is_none() && args.json.is_none() {
        write_output(None, &csv_body)?;
    }
    Ok(())
}

fn cmd_analysis(args: AnalysisArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    if args.trials < 2 {
        return Err(Failure::Usage("--trials must be at least 2".into()));
    }
    let report = analysis_report(&AnalysisOptions {
        trials: args.trials,
        seed: args.seed,
    })
    .map_err(|e| Failure::Other(e.into()))?;
    let mut body = serde_json::to_string_pretty(&report).context("serializing the report")?;
    body.push('\n');
    write_output(args.output.as_deref(), &body)?;
    let failed: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
    if !failed.is_empty() {
        return Err(Failure::BoundViolation(format!("violated: {}", failed.join(", "))));
    }
    eprintln!("{} checks passed", report.checks.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analysis(a) => cmd_analysis(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
