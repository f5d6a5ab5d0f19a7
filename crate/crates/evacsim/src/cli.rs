//! Command-line interface. Exit codes: 0 success, 2 config error, 3 trial
//! failure.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evacsim_core::building::{self, BuildingGraph};
use evacsim_core::sim::run_trial_with_rnn_dump;

use crate::config::{parse_scenario, parse_seed_list, Scenario};
use crate::sweep::{run_sweep, write_outputs, Sweep};
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "evacsim", about = "Building-evacuation simulator with a cognitive packet network routing core")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the base scenario over its seeds (one cell).
    Run(RunArgs),
    /// Run the full (policy x count x depth x goal) sweep from the scenario.
    Sweep(RunArgs),
    /// Load and validate a building file.
    Validate {
        #[arg(long)]
        building: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Seeds, `a..b` (inclusive) or a comma list; overrides the scenario.
    #[arg(long)]
    seeds: Option<String>,
    /// Parallel trial workers.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for CSVs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Probability a smart packet follows its RNN before the alarm.
    #[arg(long)]
    drift_prefire: Option<f64>,
    /// Probability a smart packet follows its RNN after the alarm.
    #[arg(long)]
    drift_fire: Option<f64>,
    /// Warm-up smart packets per node.
    #[arg(long)]
    sp_warmup: Option<u32>,
    /// Emission period per node during evacuation, seconds.
    #[arg(long)]
    sp_period_s: Option<f64>,
    /// Routes kept per node.
    #[arg(long)]
    table_size: Option<usize>,
    /// Routing-table entry timeout, seconds.
    #[arg(long)]
    route_timeout_s: Option<f64>,
    /// Write the final RNN weights/excitations of the first trial as CSV.
    #[arg(long)]
    dump_rnn: Option<PathBuf>,
}

pub fn main_with(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // keep clap's own help/version exit behavior
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("evacsim: {e}");
            e.exit_code()
        }
    }
}

fn load_building(path: &PathBuf) -> Result<BuildingGraph, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    building::parse(&text).map_err(|e| HarnessError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Validate { building } => {
            let graph = load_building(&building)?;
            println!(
                "{}: {} nodes, {} edges, {} exits, valid",
                graph.name(),
                graph.node_count(),
                graph.edges().len(),
                graph.exits().len()
            );
            Ok(())
        }
        Command::Run(args) => run_or_sweep(args, false),
        Command::Sweep(args) => run_or_sweep(args, true),
    }
}

fn apply_overrides(sc: &mut Scenario, args: &RunArgs) -> Result<(), HarnessError> {
    if let Some(raw) = &args.seeds {
        sc.seeds = Some(parse_seed_list(raw, 0)?);
    }
    let mut set = |key: &str, v: Option<String>| {
        if let Some(v) = v {
            sc_insert(sc, key, v);
        }
    };
    set("drift_prefire", args.drift_prefire.map(|v| v.to_string()));
    set("drift_fire", args.drift_fire.map(|v| v.to_string()));
    set("sp_warmup", args.sp_warmup.map(|v| v.to_string()));
    set("sp_period_s", args.sp_period_s.map(|v| v.to_string()));
    set("table_size", args.table_size.map(|v| v.to_string()));
    set(
        "route_timeout_s",
        args.route_timeout_s.map(|v| v.to_string()),
    );
    Ok(())
}

// Scenario stores raw strings; overrides reuse the same machinery.
fn sc_insert(sc: &mut Scenario, key: &str, value: String) {
    let text = format!("{key} = {value}\n");
    let patch = parse_scenario(&text).expect("override keys are valid");
    sc.merge(patch);
}

fn run_or_sweep(args: RunArgs, full_sweep: bool) -> Result<(), HarnessError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        HarnessError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut sc = parse_scenario(&text)?;
    apply_overrides(&mut sc, &args)?;
    let building_path = sc
        .building
        .clone()
        .ok_or_else(|| HarnessError::Config("scenario is missing `building`".into()))?;
    // relative building paths resolve against the config file's directory
    let building_path = if building_path.is_relative() {
        args.config
            .parent()
            .map(|d| d.join(&building_path))
            .unwrap_or(building_path)
    } else {
        building_path
    };
    let graph = load_building(&building_path)?;
    let base = sc.build_trial_config(&graph)?;
    let seeds = sc.seeds.clone().unwrap_or_else(|| vec![1]);

    let sweep = if full_sweep {
        Sweep {
            policies: sc.policies.clone().unwrap_or_else(|| vec![base.policy]),
            counts: sc
                .evacuee_counts
                .clone()
                .unwrap_or_else(|| vec![base.evacuee_count]),
            depths: sc
                .movement_depths
                .clone()
                .unwrap_or_else(|| vec![base.movement_depth]),
            goals: sc.goals.clone().unwrap_or_else(|| vec![base.goal_override]),
            base,
            seeds,
        }
    } else {
        Sweep::single(base, seeds)
    };

    let out = run_sweep(&graph, &sweep, args.workers);
    write_outputs(&args.out, &out)?;
    println!(
        "{} trial rows, {} aggregate rows -> {}",
        out.rows.len(),
        out.aggregates.len(),
        args.out.display()
    );
    for agg in &out.aggregates {
        if agg.metric == "survivor_fraction" {
            println!(
                "  {} @ {:>4}: survivors {:.3} [{:.3}, {:.3}] over {} seeds",
                agg.series, agg.count, agg.mean, agg.min, agg.max, agg.n
            );
        }
    }

    if let Some(dump_path) = &args.dump_rnn {
        let cfg = sweep.config_for(&sweep.cells()[0]);
        let seed = sweep.seeds.first().copied().unwrap_or(1);
        let (_, dump) = run_trial_with_rnn_dump(&graph, &cfg, seed)
            .map_err(|e| HarnessError::Trial(e.to_string()))?;
        fs::write(dump_path, dump)?;
        println!("rnn state -> {}", dump_path.display());
    }

    if !out.failures.is_empty() {
        return Err(HarnessError::Trial(format!(
            "{} trial(s) failed; see errors.csv",
            out.failures.len()
        )));
    }
    Ok(())
}
