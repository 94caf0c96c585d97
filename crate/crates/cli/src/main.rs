//! Planner CLI: plan single instances, validate plans, run experiment
//! sweeps, and dump link budgets or route sets for debugging.
//!
//! Exit codes: 0 success, 1 infeasible plan / failed validation,
//! 2 invalid input.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{InstanceConfig, read_json};
use rabsplan_core::harness::{self, ExperimentSpec, rows_to_csv};
use rabsplan_core::oracle::{OracleLimits, exact_solve_report};
use rabsplan_core::planner::{
    Plan, RbPools, SolveOptions, greedy_deploy, greedy_solve_opts, solve_with_deployment_opts,
    validate_plan,
};
use rabsplan_core::propagation::{LinkBudget, los_probability};
use rabsplan_core::scenario::{RadioParams, Scenario};
use rabsplan_core::topology::{build_topology, enumerate_routes};

#[derive(Parser)]
#[command(name = "rabsplan", version, about = "mmWave IAB network planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanMethod {
    Greedy,
    Exact,
    Random,
    Prealloc,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the plan as JSON.
    Plan {
        #[arg(value_enum)]
        method: PlanMethod,
        /// Instance config file (scenario + traffic + budgets).
        #[arg(long)]
        config: PathBuf,
        /// Override the traffic seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Placement seed for the random baseline (defaults to the traffic seed).
        #[arg(long)]
        placement_seed: Option<u64>,
        /// Hand leftover RBs back out after rounding (greedy and prealloc).
        #[arg(long)]
        redistribute_slack: bool,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep and write one CSV row per cell.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the output path in the spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a plan against every constraint of an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Print the exact small-instance optimum and the enumeration count.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Print the link budget at a distance as JSON.
    Linkbudget {
        #[arg(long)]
        distance: f64,
        /// Take radio parameters from this scenario file instead of defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump every hop-bounded route of a scenario, one per line.
    Routes {
        /// Scenario config file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        max_hops: usize,
    },
}

fn emit_plan(plan: &Plan, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(plan)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Ok(true) = success, Ok(false) = ran fine but the check failed (exit 1).
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Plan { method, config, seed, placement_seed, redistribute_slack, out } => {
            let cfg: InstanceConfig = read_json(&config)?;
            let inst = cfg.build(seed)?;
            let options = SolveOptions {
                redistribute_rounding_slack: redistribute_slack,
                ..SolveOptions::default()
            };
            let plan = match method {
                PlanMethod::Greedy => greedy_solve_opts(&inst, &options)?.plan,
                PlanMethod::Prealloc => {
                    let k = inst.rb_budget;
                    let pools = RbPools { access: k / 2, backhaul: k - k / 2 };
                    let options = SolveOptions { pools: Some(pools), ..options };
                    let (deployment, active) = greedy_deploy(&inst);
                    solve_with_deployment_opts(&inst, &deployment, &active, &options)?.plan
                }
                PlanMethod::Random => {
                    let pseed = placement_seed.or(seed).unwrap_or(cfg.traffic.seed);
                    harness::baseline_random_fixed(&inst, pseed)?
                }
                PlanMethod::Exact => exact_solve_report(&inst, &OracleLimits::default())?.plan,
            };
            let violations = validate_plan(&inst, &plan)?;
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                return Ok(false);
            }
            emit_plan(&plan, out.as_ref())?;
            Ok(true)
        }
        Command::Experiment { spec, out } => {
            let mut spec: ExperimentSpec = read_json(&spec)?;
            if let Some(path) = out {
                spec.output = Some(path);
            }
            let result = harness::run_experiment(&spec)?;
            for skip in &result.skipped {
                eprintln!(
                    "skipped {} K={} N={} H={} sigma={} seed={}: {}",
                    skip.method, skip.k, skip.n, skip.h, skip.sigma, skip.seed, skip.reason
                );
            }
            match &spec.output {
                Some(path) => eprintln!(
                    "wrote {} rows ({} skipped) to {}",
                    result.rows.len(),
                    result.skipped.len(),
                    path.display()
                ),
                None => print!("{}", rows_to_csv(&result.rows)),
            }
            Ok(true)
        }
        Command::Validate { instance, plan } => {
            let cfg: InstanceConfig = read_json(&instance)?;
            let inst = cfg.build(None)?;
            let plan: Plan = read_json(&plan)?;
            let violations = validate_plan(&inst, &plan)?;
            if violations.is_empty() {
                println!("plan is feasible (0 violations)");
                Ok(true)
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                Ok(false)
            }
        }
        Command::Oracle { instance } => {
            let cfg: InstanceConfig = read_json(&instance)?;
            let inst = cfg.build(None)?;
            let report = exact_solve_report(&inst, &OracleLimits::default())?;
            let out = json!({
                "plan": report.plan,
                "enumerations": report.enumerations,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Linkbudget { distance, config } => {
            let radio = match config {
                Some(path) => read_json::<Scenario>(&path)?.radio,
                None => RadioParams::default(),
            };
            let backhaul = LinkBudget::backhaul(distance, &radio)?;
            let access = LinkBudget::access(distance, &radio)?;
            let out = json!({
                "distance_m": distance,
                "los_probability": los_probability(distance)?,
                "pathloss_linear": backhaul.pathloss_linear,
                "pathloss_db": backhaul.pathloss_db,
                "backhaul": { "snr_linear": backhaul.snr_linear, "unit_rate_bps": backhaul.unit_rate_bps },
                "access": { "snr_linear": access.snr_linear, "unit_rate_bps": access.unit_rate_bps },
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Routes { config, max_hops } => {
            let scenario: Scenario = read_json(&config)?;
            scenario.validate()?;
            let topology = build_topology(&scenario)?;
            let routes = enumerate_routes(&topology, max_hops)?;
            print!("{}", routes.dump(topology.mbs_id()));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
