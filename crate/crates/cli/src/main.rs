//! Batch front door for the varbounds library: summary statistics,
//! variance bounds with slacks, feasibility audits of reported numbers,
//! and shard-merge simulations.
//!
//! Exit codes are part of the contract: 0 on success (and on feasible
//! verdicts), 1 on an infeasible verdict, 2 on any input or usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, ensure, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use varbounds::bounds::{check_samuelson, nagy_bound, refined_range_bound, samuelson_interval};
use varbounds::shard::{run_plan, run_trials};
use varbounds::{
    audit_member, audit_order_statistic, audit_subset, audit_summary, AuditOptions, DataSummary,
    DispersionKind, MergePlan, MomentAccumulator, ReportedSummary, SubsetSummary, Topology,
    Verdict, DEFAULT_REL_TOL,
};

mod input;

#[derive(Parser, Debug)]
#[command(
    name = "varbounds",
    version,
    about = "Streaming statistics, variance bounds, and feasibility audits of reported summaries"
)]
struct Cli {
    /// Emit machine-readable JSON instead of tables
    #[arg(long, global = true)]
    json: bool,
    /// Relative tolerance for satisfied/feasible decisions (default 1e-9)
    #[arg(long, global = true, value_name = "REL")]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Summary statistics of a numeric dataset
    Stats(DataArgs),
    /// Every variance bound the data supports, with its slack
    Bounds(DataArgs),
    /// Audit a reported summary for mathematical feasibility
    Check(CheckArgs),
    /// Audit the claim that a value was one of the observations
    Member(MemberArgs),
    /// Audit a claimed subset mean or subset variance
    Subset(SubsetArgs),
    /// Audit a claimed k-th smallest value
    Order(OrderArgs),
    /// Shard the data, merge in a seeded order, and report drift
    ShardSim(ShardSimArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Input file of numbers; '-' or absent reads standard input
    file: Option<PathBuf>,
    /// Parse the input as CSV with a header row
    #[arg(long, requires = "column")]
    csv: bool,
    /// CSV column to pull values from
    #[arg(long, value_name = "NAME", requires = "csv")]
    column: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Population,
    Sample,
}

#[derive(Args, Debug)]
struct SummaryArgs {
    /// Reported number of observations
    #[arg(long)]
    n: u64,
    /// Reported mean
    #[arg(long, allow_negative_numbers = true)]
    mean: f64,
    /// Reported standard deviation (defaults to --kind sample)
    #[arg(long, group = "dispersion", allow_negative_numbers = true)]
    sd: Option<f64>,
    /// Reported variance (defaults to --kind population)
    #[arg(long, group = "dispersion", allow_negative_numbers = true)]
    var: Option<f64>,
    /// Convention the dispersion figure uses
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Reported minimum
    #[arg(long, allow_negative_numbers = true)]
    min: Option<f64>,
    /// Reported maximum
    #[arg(long, allow_negative_numbers = true)]
    max: Option<f64>,
    /// Decimal places the report is rounded to
    #[arg(long)]
    decimals: Option<u32>,
}

impl SummaryArgs {
    fn to_report(&self) -> Result<ReportedSummary> {
        let (dispersion, kind) = match (self.sd, self.var) {
            (Some(sd), None) => (
                sd,
                if self.kind == Some(KindArg::Population) {
                    DispersionKind::PopulationSd
                } else {
                    DispersionKind::SampleSd
                },
            ),
            (None, Some(var)) => (
                var,
                if self.kind == Some(KindArg::Sample) {
                    DispersionKind::SampleVariance
                } else {
                    DispersionKind::PopulationVariance
                },
            ),
            _ => bail!("exactly one of --sd and --var is required"),
        };
        let mut report = ReportedSummary::new(self.n, self.mean, dispersion, kind);
        if let Some(min) = self.min {
            report = report.with_min(min);
        }
        if let Some(max) = self.max {
            report = report.with_max(max);
        }
        if let Some(decimals) = self.decimals {
            report = report.with_decimals(decimals);
        }
        Ok(report)
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    summary: SummaryArgs,
    /// Treat min/max as outer limits, not attained values: skips the
    /// checks that require the extremes to be actual observations
    #[arg(long)]
    range_not_attained: bool,
}

#[derive(Args, Debug)]
struct MemberArgs {
    #[command(flatten)]
    summary: SummaryArgs,
    /// The claimed observation
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
}

#[derive(Args, Debug)]
struct SubsetArgs {
    #[command(flatten)]
    summary: SummaryArgs,
    /// Size of the subset whose mean is claimed
    #[arg(long, group = "subset_claim", requires = "gamma")]
    r: Option<u64>,
    /// Claimed subset mean (with --r)
    #[arg(long, allow_negative_numbers = true, requires = "r")]
    gamma: Option<f64>,
    /// Size of the subset whose variance is claimed
    #[arg(long, group = "subset_claim", requires = "subvar")]
    m: Option<u64>,
    /// Claimed subset population variance (with --m)
    #[arg(long, allow_negative_numbers = true, requires = "m")]
    subvar: Option<f64>,
}

#[derive(Args, Debug)]
struct OrderArgs {
    #[command(flatten)]
    summary: SummaryArgs,
    /// Rank of the claimed order statistic (1 = smallest)
    #[arg(long)]
    k: u64,
    /// The claimed value at that rank
    #[arg(long, allow_negative_numbers = true)]
    value: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum TopologyArg {
    LeftFold,
    BalancedTree,
    RandomTree,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::LeftFold => Topology::LeftFold,
            TopologyArg::BalancedTree => Topology::BalancedTree,
            TopologyArg::RandomTree => Topology::RandomTree,
        }
    }
}

#[derive(Args, Debug)]
struct ShardSimArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of shards to scatter the data over
    #[arg(long, default_value_t = 8)]
    shards: usize,
    /// Independent trials, seeded seed, seed+1, …
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Seed determining both the partition and the merge order
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shape of the merge tree
    #[arg(long, value_enum, default_value_t = TopologyArg::BalancedTree)]
    topology: TopologyArg,
}

/// Restores default SIGPIPE handling so `varbounds ... | head` dies
/// quietly like any other filter instead of panicking mid-write.
fn reset_sigpipe() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Ok(true) exits 0, Ok(false) exits 1 (infeasible), Err exits 2.
fn run(cli: &Cli) -> Result<bool> {
    if let Some(tol) = cli.tolerance {
        ensure!(
            tol.is_finite() && tol >= 0.0,
            "--tolerance must be a finite nonnegative number, got {tol}"
        );
    }
    match &cli.command {
        Command::Stats(args) => cmd_stats(cli, args),
        Command::Bounds(args) => cmd_bounds(cli, args),
        Command::Check(args) => cmd_check(cli, args),
        Command::Member(args) => cmd_member(cli, args),
        Command::Subset(args) => cmd_subset(cli, args),
        Command::Order(args) => cmd_order(cli, args),
        Command::ShardSim(args) => cmd_shard_sim(cli, args),
    }
}

fn rel_tolerance(cli: &Cli) -> f64 {
    cli.tolerance.unwrap_or(DEFAULT_REL_TOL)
}

fn audit_options(cli: &Cli, range_attained: bool) -> AuditOptions {
    AuditOptions {
        rel_tolerance: rel_tolerance(cli),
        range_attained,
    }
}

/// Roughly six significant digits, trailing zeros trimmed.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cmd_stats(cli: &Cli, args: &DataArgs) -> Result<bool> {
    let values = input::read_values(args)?;
    ensure!(!values.is_empty(), "no input values");
    let acc = MomentAccumulator::from_values(&values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if cli.json {
        let sample_variance = match acc.sample_variance() {
            Ok(v) => json!(v),
            Err(_) => serde_json::Value::Null,
        };
        let out = json!({
            "count": acc.count(),
            "mean": acc.mean()?,
            "m2": acc.m2(),
            "population_variance": acc.population_variance()?,
            "sample_variance": sample_variance,
            "min": min,
            "max": max,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("count                {}", acc.count());
        println!("mean                 {}", sig6(acc.mean()?));
        println!(
            "population variance  {}",
            sig6(acc.population_variance()?)
        );
        match acc.sample_variance() {
            Ok(v) => println!("sample variance      {}", sig6(v)),
            Err(_) => println!("sample variance      n/a (needs n >= 2)"),
        }
        println!("min                  {}", sig6(min));
        println!("max                  {}", sig6(max));
    }
    Ok(true)
}

#[derive(Serialize)]
struct CheckRow {
    name: &'static str,
    bound: f64,
    observed: f64,
    slack: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct RankRow {
    k: u64,
    lo: f64,
    hi: f64,
    value: f64,
    satisfied: bool,
}

fn cmd_bounds(cli: &Cli, args: &DataArgs) -> Result<bool> {
    let values = input::read_values(args)?;
    ensure!(
        values.len() >= 2,
        "need at least two values, got {}",
        values.len()
    );
    let tol = rel_tolerance(cli);
    let s = DataSummary::from_values(&values)?;
    let (sam_lo, sam_hi) = samuelson_interval(&s)?;

    let mut rows = Vec::new();
    let worst_member = check_samuelson(&values)?
        .into_iter()
        .min_by(|a, b| a.slack.total_cmp(&b.slack))
        .expect("n >= 2 gives at least two results");
    rows.push(CheckRow {
        name: "samuelson_worst_member",
        bound: worst_member.bound,
        observed: worst_member.observed,
        slack: worst_member.slack,
        satisfied: worst_member.satisfied_with(tol),
    });
    let nagy = nagy_bound(&s)?;
    rows.push(CheckRow {
        name: "nagy",
        bound: nagy.bound,
        observed: nagy.observed,
        slack: nagy.slack,
        satisfied: nagy.satisfied_with(tol),
    });
    let refined = if s.n >= 3 {
        let r = refined_range_bound(&s)?;
        rows.push(CheckRow {
            name: "refined_range",
            bound: r.bound,
            observed: r.observed,
            slack: r.slack,
            satisfied: r.satisfied_with(tol),
        });
        true
    } else {
        false
    };

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ranks = Vec::with_capacity(sorted.len());
    for (i, &value) in sorted.iter().enumerate() {
        let k = (i + 1) as u64;
        let (lo, hi) = varbounds::bounds::boyd_hawkins_interval(&s, k)?;
        let scale = 1.0_f64.max(lo.abs()).max(hi.abs()).max(value.abs());
        ranks.push(RankRow {
            k,
            lo,
            hi,
            value,
            satisfied: value - lo >= -tol * scale && hi - value >= -tol * scale,
        });
    }

    if cli.json {
        let out = json!({
            "n": s.n,
            "mean": s.mean,
            "population_variance": s.variance,
            "min": s.min,
            "max": s.max,
            "samuelson": {"lo": sam_lo, "hi": sam_hi},
            "checks": rows,
            "order_statistics": ranks,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("n                    {}", s.n);
        println!("mean                 {}", sig6(s.mean));
        println!("population variance  {}", sig6(s.variance));
        println!(
            "samuelson interval   [{}, {}]",
            sig6(sam_lo),
            sig6(sam_hi)
        );
        println!();
        println!(
            "{:<24} {:>14} {:>14} {:>14}  ok",
            "check", "bound", "observed", "slack"
        );
        for row in &rows {
            println!(
                "{:<24} {:>14} {:>14} {:>14}  {}",
                row.name,
                sig6(row.bound),
                sig6(row.observed),
                sig6(row.slack),
                if row.satisfied { "yes" } else { "NO" }
            );
        }
        if !refined {
            println!(
                "{:<24} {:>14} {:>14} {:>14}  n/a (needs n >= 3)",
                "refined_range", "n/a", "n/a", "n/a"
            );
        }
        println!();
        println!("{:<6} {:<34} {:>14}  ok", "rank", "admissible interval", "value");
        for row in &ranks {
            println!(
                "{:<6} {:<34} {:>14}  {}",
                row.k,
                format!("[{}, {}]", sig6(row.lo), sig6(row.hi)),
                sig6(row.value),
                if row.satisfied { "yes" } else { "NO" }
            );
        }
    }
    Ok(true)
}

fn emit_verdict(cli: &Cli, verdict: &Verdict) -> Result<()> {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(verdict)?);
    } else if verdict.feasible {
        println!("feasible: consistent with every checked constraint");
        println!("(a feasible report is not thereby verified; the checks are necessary, not sufficient)");
    } else {
        println!("infeasible: no dataset can produce this report");
        for v in &verdict.violations {
            println!(
                "  {}: bound {}, observed {}, slack {}",
                v.constraint,
                sig6(v.bound),
                sig6(v.observed),
                sig6(v.slack)
            );
        }
    }
    Ok(())
}

fn cmd_check(cli: &Cli, args: &CheckArgs) -> Result<bool> {
    let report = args.summary.to_report()?;
    let verdict = audit_summary(&report, &audit_options(cli, !args.range_not_attained))?;
    emit_verdict(cli, &verdict)?;
    Ok(verdict.feasible)
}

fn cmd_member(cli: &Cli, args: &MemberArgs) -> Result<bool> {
    let report = args.summary.to_report()?;
    let verdict = audit_member(args.x, &report, &audit_options(cli, true))?;
    emit_verdict(cli, &verdict)?;
    Ok(verdict.feasible)
}

fn cmd_subset(cli: &Cli, args: &SubsetArgs) -> Result<bool> {
    let report = args.summary.to_report()?;
    let sub = match (args.r, args.gamma, args.m, args.subvar) {
        (Some(r), Some(gamma), None, None) => SubsetSummary::with_mean(r, gamma),
        (None, None, Some(m), Some(subvar)) => SubsetSummary::with_variance(m, subvar),
        _ => bail!("provide either --r with --gamma or --m with --subvar"),
    };
    let verdict = audit_subset(&sub, &report, &audit_options(cli, true))?;
    emit_verdict(cli, &verdict)?;
    Ok(verdict.feasible)
}

fn cmd_order(cli: &Cli, args: &OrderArgs) -> Result<bool> {
    let report = args.summary.to_report()?;
    let verdict = audit_order_statistic(args.k, args.value, &report, &audit_options(cli, true))?;
    emit_verdict(cli, &verdict)?;
    Ok(verdict.feasible)
}

fn topology_name(t: Topology) -> &'static str {
    match t {
        Topology::LeftFold => "left_fold",
        Topology::BalancedTree => "balanced_tree",
        Topology::RandomTree => "random_tree",
    }
}

fn cmd_shard_sim(cli: &Cli, args: &ShardSimArgs) -> Result<bool> {
    let values = input::read_values(&args.data)?;
    ensure!(!values.is_empty(), "no input values");
    ensure!(args.shards >= 1, "--shards must be at least 1");
    ensure!(args.trials >= 1, "--trials must be at least 1");
    let plan = MergePlan {
        shard_count: args.shards,
        seed: args.seed,
        topology: args.topology.into(),
    };
    let (merged, report) = if args.trials == 1 {
        let (merged, report) = run_plan(&values, &plan)?;
        (Some(merged), report)
    } else {
        (None, run_trials(&values, &plan, args.trials)?)
    };

    if cli.json {
        let merged_json = match &merged {
            Some(acc) => json!({
                "count": acc.count(),
                "mean": acc.mean()?,
                "m2": acc.m2(),
                "population_variance": acc.population_variance()?,
            }),
            None => serde_json::Value::Null,
        };
        let out = json!({
            "plan": plan,
            "trials": args.trials,
            "merged": merged_json,
            "report": report,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!(
            "plan: {} shard(s), {} merge, seed {}, {} trial(s)",
            plan.shard_count,
            topology_name(plan.topology),
            plan.seed,
            args.trials
        );
        if let Some(acc) = &merged {
            println!(
                "merged: count {}, mean {}, population variance {}",
                acc.count(),
                sig6(acc.mean()?),
                sig6(acc.population_variance()?)
            );
        }
        println!("mean rel error       {}", sig6(report.mean_rel_error));
        println!("m2 rel error         {}", sig6(report.m2_rel_error));
        println!(
            "worst over trials    {}",
            sig6(report.worst_case_over_trials)
        );
    }
    Ok(true)
}
