//! Network-planning toolkit for aerial small cells that anchor to street
//! furniture and share one mmWave resource-block pool between access and
//! multi-hop wireless backhaul.
//!
//! The pipeline: build a [`scenario::Scenario`], derive the pruned backhaul
//! graph and hop-bounded routes ([`topology`]), sample per-site demands
//! ([`traffic`]), then plan deployments, resource blocks and route flows
//! ([`planner`]) with a greedy heuristic, two baselines and an exhaustive
//! small-instance oracle ([`oracle`]), all backed by a deterministic simplex
//! kernel ([`lp`]). [`harness`] runs Monte Carlo sweeps and writes CSV.

pub mod harness;
pub mod lp;
pub mod oracle;
pub mod planner;
pub mod propagation;
pub mod scenario;
pub mod topology;
pub mod traffic;

pub use harness::{ExperimentSpec, Method, ResultRow, run_experiment};
pub use lp::{LpProblem, LpSolution, LpStatus, solve_lp};
pub use oracle::{OracleLimits, exact_solve};
pub use planner::{Plan, ProblemInstance, greedy_deploy, greedy_solve, validate_plan};
pub use propagation::LinkBudget;
pub use scenario::{RadioParams, Scenario, build_manhattan_grid};
pub use topology::{NetworkTopology, RouteSet, build_topology, enumerate_routes, filter_routes};
pub use traffic::{DemandVector, TrafficModel, sample_demands};
