//! Command-line front end: solve a case, sweep budgets, compare fixed
//! prices, compare algorithms and generate synthetic inputs.

mod bundle;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ddu_vpp::ccg::{self, Algorithm, CcgConfig, CcgError, RunStatus};
use ddu_vpp::experiments;
use ddu_vpp::model::{BackendChoice, ModelError, QuadraticMode, SolverOptions};
use ddu_vpp::network::{ieee33, NetworkCase, NetworkError};
use ddu_vpp::oracle::instances;
use ddu_vpp::parallel::{with_jobs, Parallelism};
use ddu_vpp::uncertainty::{
    synthetic_table, BudgetParams, ElasticityTable, SensitivityClass, SyntheticOptions, UncertaintyError,
};

const EXIT_ITERATION_LIMIT: u8 = 2;
const EXIT_INFEASIBLE_INPUT: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "ddu-vpp", version, about = "Robust VPP pricing and dispatch under decision-dependent elasticity uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and write a result bundle.
    Solve(RunArgs),
    /// One run per budget pair.
    SweepBudgets {
        #[command(flatten)]
        run: RunArgs,
        /// Budget pairs `GT,GS` separated by `;`.
        #[arg(long, default_value = "")]
        pairs: String,
    },
    /// Optimized prices against prices fixed at multiples of the reference.
    FixedTou {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
        multipliers: Vec<f64>,
    },
    /// Improved and traditional iterations on the same instance.
    Compare(RunArgs),
    /// Write a synthetic elasticity table and a case file.
    GenData(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AlgorithmArg {
    Improved,
    Traditional,
}

#[derive(Args, Clone, Debug, Serialize)]
struct RunArgs {
    /// Case JSON, or `builtin:micro1`, `builtin:micro2`, `builtin:ieee33`.
    #[arg(long)]
    case: String,
    /// Node elasticity CSV, or the class table when `--class-map` is given.
    /// Without it a synthetic table is drawn from `--seed`.
    #[arg(long)]
    elasticity: Option<PathBuf>,
    #[arg(long)]
    class_map: Option<PathBuf>,
    /// `GT,GS`; default makes both budgets slack.
    #[arg(long)]
    budgets: Option<String>,
    #[arg(long, default_value_t = 16)]
    polygon_sides: usize,
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Improved)]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for independent solves; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `native` or `pwl:K`.
    #[arg(long, default_value = "native")]
    quadratic: String,
}

#[derive(Args, Clone, Debug, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `ieee33`, `micro1` or `micro2`.
    #[arg(long, default_value = "ieee33")]
    case: String,
    #[arg(long, default_value_t = 24)]
    periods: usize,
    #[arg(long, default_value_t = 5)]
    intervals: usize,
    /// Class shares, e.g. `high=1,mid=1,low=1`.
    #[arg(long, default_value = "high=1,mid=1,low=1")]
    classes: String,
    #[arg(long, default_value_t = 0.25)]
    decay: f64,
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write the instance's own table (micro cases) instead of a synthetic one.
    #[arg(long)]
    builtin_table: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn classify(error: anyhow::Error) -> Failure {
    let code = if let Some(e) = error.downcast_ref::<CcgError>() {
        match e {
            CcgError::Model(m) => model_code(m),
            CcgError::Solver(_) => EXIT_SOLVER,
            CcgError::Config(_) => EXIT_USAGE,
            _ => EXIT_INFEASIBLE_INPUT,
        }
    } else if let Some(m) = error.downcast_ref::<ModelError>() {
        model_code(m)
    } else if error.downcast_ref::<NetworkError>().is_some() || error.downcast_ref::<UncertaintyError>().is_some() {
        EXIT_INFEASIBLE_INPUT
    } else if error.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_INFEASIBLE_INPUT
    };
    Failure { code, error }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::InvalidOptions(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let f = classify(e);
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Solve(run) => with_jobs(run.jobs, || cmd_solve(&run)),
        Command::SweepBudgets { run, pairs } => with_jobs(run.jobs, || cmd_sweep(&run, &pairs)),
        Command::FixedTou { run, multipliers } => with_jobs(run.jobs, || cmd_fixed_tou(&run, &multipliers)),
        Command::Compare(run) => with_jobs(run.jobs, || cmd_compare(&run)),
        Command::GenData(args) => cmd_gen_data(&args),
    }
}

fn builtin(name: &str, periods: usize) -> Option<(NetworkCase, Option<ElasticityTable>)> {
    match name {
        "micro1" => Some(instances::micro1()).map(|(c, t)| (c, Some(t))),
        "micro2" => Some(instances::micro2()).map(|(c, t)| (c, Some(t))),
        "ieee33" => Some((ieee33(periods), None)),
        _ => None,
    }
}

struct Inputs {
    case: NetworkCase,
    table: ElasticityTable,
}

fn load_inputs(run: &RunArgs) -> Result<Inputs> {
    let (case, bundled) = match run.case.strip_prefix("builtin:") {
        Some(name) => builtin(name, 24).ok_or_else(|| usage(format!("unknown builtin case `{name}`")))?,
        None => (NetworkCase::load(Path::new(&run.case))?, None),
    };
    let table = match (&run.elasticity, &run.class_map) {
        (Some(p), Some(map)) => ElasticityTable::load_class_csv(p, map)?,
        (Some(p), None) => ElasticityTable::load_csv(p)?,
        (None, Some(_)) => return Err(usage("--class-map needs --elasticity")),
        (None, None) => match bundled {
            Some(t) => t,
            None => {
                synthetic_table(&SyntheticOptions {
                    seed: run.seed,
                    nodes: case.num_nodes(),
                    periods: case.periods,
                    ..Default::default()
                })?
                .0
            }
        },
    };
    table.check_case(&case)?;
    Ok(Inputs { case, table })
}

fn parse_budget(s: &str) -> Result<BudgetParams> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(usage(format!("budget `{s}` is not of the form GT,GS")));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|_| usage(format!("budget `{s}`: `{p}` is not a number")));
    Ok(BudgetParams {
        gamma_t: num(parts[0])?,
        gamma_s: num(parts[1])?,
    })
}

fn parse_quadratic(s: &str) -> Result<QuadraticMode> {
    if s == "native" {
        return Ok(QuadraticMode::NativeConvexQc);
    }
    if let Some(k) = s.strip_prefix("pwl:") {
        let breakpoints = k.parse().map_err(|_| usage(format!("--quadratic `{s}`: bad breakpoint count")))?;
        return Ok(QuadraticMode::Piecewise { breakpoints });
    }
    Err(usage(format!("--quadratic must be `native` or `pwl:K`, got `{s}`")))
}

fn config(run: &RunArgs) -> Result<CcgConfig> {
    if run.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let solver = SolverOptions {
        quadratic_mode: parse_quadratic(&run.quadratic)?,
        backend: BackendChoice::from_env(),
        ..SolverOptions::default()
    };
    Ok(CcgConfig {
        tol: run.tol,
        max_iters: run.max_iters,
        algorithm: match run.algorithm {
            AlgorithmArg::Improved => Algorithm::Improved,
            AlgorithmArg::Traditional => Algorithm::Traditional,
        },
        budgets: run.budgets.as_deref().map(parse_budget).transpose()?,
        solver,
        polygon_sides: run.polygon_sides,
        parallelism: if run.jobs > 1 { Parallelism::Parallel } else { Parallelism::Sequential },
        ..CcgConfig::default()
    })
}

fn status_code(s: RunStatus) -> u8 {
    match s {
        RunStatus::Converged => 0,
        RunStatus::IterationLimit | RunStatus::Stalled => EXIT_ITERATION_LIMIT,
    }
}

fn cmd_solve(run: &RunArgs) -> Result<u8> {
    let inputs = load_inputs(run)?;
    let cfg = config(run)?;
    let report = ccg::run(&cfg, &inputs.case, &inputs.table)?;
    bundle::write_run(&run.out, &inputs.case, &report)?;
    bundle::write_manifest(&run.out, "solve", run)?;
    println!(
        "{:?}: objective {} (lower bound {}) after {} iterations",
        report.status, report.upper_bound, report.lower_bound, report.iterations
    );
    Ok(status_code(report.status))
}

fn cmd_sweep(run: &RunArgs, pairs: &str) -> Result<u8> {
    let inputs = load_inputs(run)?;
    let cfg = config(run)?;
    let budgets: Vec<BudgetParams> = if pairs.trim().is_empty() {
        let nodes = inputs.case.nodes.iter().filter(|n| n.load.iter().any(|&l| l != 0.0)).count();
        let t = inputs.case.periods;
        let full = BudgetParams::slack(nodes, t);
        vec![
            full,
            BudgetParams {
                gamma_t: (full.gamma_t / 2.0).floor(),
                gamma_s: (full.gamma_s / 2.0).floor(),
            },
            BudgetParams {
                gamma_t: 0.0,
                gamma_s: 0.0,
            },
        ]
    } else {
        pairs.split(';').map(parse_budget).collect::<Result<_>>()?
    };
    let rows = experiments::sweep_budgets(&cfg, &inputs.case, &inputs.table, &budgets, cfg.parallelism)?;
    bundle::write_sweep(&run.out, &rows)?;
    bundle::write_manifest(&run.out, "sweep-budgets", run)?;
    for r in &rows {
        println!("({}, {}): {} in {} iterations [{:?}]", r.gamma_t, r.gamma_s, r.objective, r.iterations, r.status);
    }
    Ok(rows.iter().map(|r| status_code(r.status)).max().unwrap_or(0))
}

fn cmd_fixed_tou(run: &RunArgs, multipliers: &[f64]) -> Result<u8> {
    let inputs = load_inputs(run)?;
    let cfg = config(run)?;
    let rows = experiments::fixed_tou(&cfg, &inputs.case, &inputs.table, multipliers, cfg.parallelism)?;
    bundle::write_fixed_tou(&run.out, &rows)?;
    bundle::write_manifest(&run.out, "fixed-tou", run)?;
    for r in &rows {
        match r.objective {
            Some(o) => println!("{}: {o} [{:?}]", r.label(), r.status),
            None => println!("{}: - [{:?}]", r.label(), r.status),
        }
    }
    if rows[0].objective.is_none() {
        bail!("optimized run produced no objective");
    }
    Ok(0)
}

fn cmd_compare(run: &RunArgs) -> Result<u8> {
    let inputs = load_inputs(run)?;
    let cfg = config(run)?;
    let c = experiments::compare_algorithms(&cfg, &inputs.case, &inputs.table)?;
    bundle::write_run(&run.out.join("improved"), &inputs.case, &c.improved)?;
    bundle::write_run(&run.out.join("traditional"), &inputs.case, &c.traditional)?;
    bundle::write_json(&run.out.join("verdict.json"), &c.verdict)?;
    bundle::write_manifest(&run.out, "compare-algorithms", run)?;
    println!("{}", serde_json::to_string_pretty(&c.verdict)?);
    Ok(0)
}

fn parse_classes(s: &str) -> Result<Vec<(SensitivityClass, f64)>> {
    s.split(',')
        .map(|part| {
            let (name, share) = part.split_once('=').unwrap_or((part, "1"));
            let class = SensitivityClass::parse(name.trim()).ok_or_else(|| usage(format!("unknown class `{name}`")))?;
            let share: f64 = share.trim().parse().map_err(|_| usage(format!("bad share in `{part}`")))?;
            Ok((class, share))
        })
        .collect()
}

fn cmd_gen_data(args: &GenArgs) -> Result<u8> {
    if args.case == "ieee33" && !(1..=24).contains(&args.periods) {
        return Err(usage("--periods must be in 1..=24 for ieee33"));
    }
    let (case, own) = builtin(&args.case, args.periods).ok_or_else(|| usage(format!("unknown case `{}`", args.case)))?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let stem = &case.name;
    std::fs::write(args.out.join(format!("{stem}.json")), case.to_json())?;
    if args.builtin_table {
        let table = own.ok_or_else(|| usage(format!("case `{}` has no table of its own", args.case)))?;
        std::fs::write(args.out.join(format!("{stem}_elasticity.csv")), table.to_csv())?;
        println!("wrote {stem}.json and {stem}_elasticity.csv to {}", args.out.display());
        return Ok(0);
    }
    let (table, classes) = synthetic_table(&SyntheticOptions {
        seed: args.seed,
        nodes: case.num_nodes(),
        periods: case.periods,
        intervals: args.intervals,
        class_shares: parse_classes(&args.classes)?,
        decay: args.decay,
        jitter: args.jitter,
    })?;
    std::fs::write(args.out.join(format!("{stem}_elasticity.csv")), table.to_csv())?;
    let mut w = csv::Writer::from_path(args.out.join(format!("{stem}_classes.csv")))?;
    w.write_record(["node", "class"])?;
    for (i, c) in classes.iter().enumerate() {
        w.write_record([i.to_string(), c.name().to_string()])?;
    }
    w.flush()?;
    println!("wrote {stem}.json, {stem}_elasticity.csv and {stem}_classes.csv to {}", args.out.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_parse() {
        let b = parse_budget(" 3, 2.5").unwrap();
        assert_eq!((b.gamma_t, b.gamma_s), (3.0, 2.5));
        assert!(parse_budget("3").is_err());
        assert!(parse_budget("a,1").unwrap_err().downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn quadratic_modes_parse() {
        assert_eq!(parse_quadratic("native").unwrap(), QuadraticMode::NativeConvexQc);
        assert_eq!(parse_quadratic("pwl:8").unwrap(), QuadraticMode::Piecewise { breakpoints: 8 });
        assert!(parse_quadratic("pwl:x").is_err());
        assert!(parse_quadratic("cubic").is_err());
    }

    #[test]
    fn class_shares_default_to_one() {
        let c = parse_classes("high=2,low").unwrap();
        assert_eq!(c, vec![(SensitivityClass::High, 2.0), (SensitivityClass::Low, 1.0)]);
        assert!(parse_classes("extreme=1").is_err());
    }
}
