//! Baselines and Monte Carlo experiment sweeps: run a grid of
//! (method, K, N, H, sigma, seed) cells, validate every plan produced, and
//! emit deterministic CSV.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{OracleError, OracleLimits, exact_solve};
use crate::planner::{
    Plan, PlanError, ProblemInstance, RbPools, greedy_deploy, greedy_solve,
    solve_with_deployment, solve_with_deployment_pools, validate_plan,
};
use crate::scenario::{GridLayout, RadioParams, Scenario, ScenarioError, build_manhattan_grid_layout};
use crate::topology::{RouteSet, TopologyError, build_topology, enumerate_routes, filter_routes};
use crate::traffic::{TrafficModel, mix_seed};

pub const CSV_HEADER: &str = "method,K,N,H,sigma,seed,served_mbps,wallclock_ms,sum_y,sum_z,deployment";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment spec invalid: {0}")]
    InvalidSpec(String),
    #[error("{method} produced an infeasible plan at K={k} N={n} H={h} sigma={sigma} seed={seed}: {detail}")]
    InfeasiblePlan { method: Method, k: u32, n: usize, h: usize, sigma: f64, seed: u64, detail: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Planning method run per experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Greedy,
    Exact,
    RandomFixed,
    Preallocated,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
            Method::RandomFixed => "random_fixed",
            Method::Preallocated => "preallocated",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the scenario comes from: generated lamppost grid or inline object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioSource {
    Grid {
        side_m: f64,
        spacing_m: f64,
        access_cell_radius_m: f64,
        #[serde(default)]
        layout: Option<GridLayout>,
        #[serde(default)]
        radio: Option<RadioParams>,
    },
    Inline { scenario: Scenario },
}

impl ScenarioSource {
    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        match self {
            ScenarioSource::Grid { side_m, spacing_m, access_cell_radius_m, layout, radio } => {
                build_manhattan_grid_layout(
                    *side_m,
                    *spacing_m,
                    layout.unwrap_or(GridLayout::CellCenter),
                    radio.clone().unwrap_or_default(),
                    *access_cell_radius_m,
                )
            }
            ScenarioSource::Inline { scenario } => {
                scenario.validate()?;
                Ok(scenario.clone())
            }
        }
    }
}

fn default_replicates() -> u32 {
    1
}

/// Full sweep description: scenario, traffic model axes and budget axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSource,
    pub mu_bps: f64,
    pub sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub ks: Vec<u32>,
    pub ns: Vec<usize>,
    pub hs: Vec<usize>,
    pub methods: Vec<Method>,
    /// Placement draws per traffic seed for the random-fixed baseline.
    #[serde(default = "default_replicates")]
    pub random_replicates: u32,
    /// CSV destination; none = rows returned only.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        for (name, empty) in [
            ("sigmas", self.sigmas.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("ks", self.ks.is_empty()),
            ("ns", self.ns.is_empty()),
            ("hs", self.hs.is_empty()),
            ("methods", self.methods.is_empty()),
        ] {
            if empty {
                return Err(HarnessError::InvalidSpec(format!("{name} must not be empty")));
            }
        }
        if self.random_replicates < 1 {
            return Err(HarnessError::InvalidSpec("random_replicates must be at least 1".into()));
        }
        if !self.mu_bps.is_finite() || self.mu_bps <= 0.0 {
            return Err(HarnessError::InvalidSpec("mu_bps must be positive".into()));
        }
        Ok(())
    }
}

/// One completed experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub k: u32,
    pub n: usize,
    pub h: usize,
    pub sigma: f64,
    pub seed: u64,
    pub served_mbps: f64,
    pub wallclock_ms: u64,
    pub sum_y: u64,
    pub sum_z: u64,
    pub deployment: Vec<u32>,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let deployment =
            self.deployment.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.k,
            self.n,
            self.h,
            self.sigma,
            self.seed,
            self.served_mbps,
            self.wallclock_ms,
            self.sum_y,
            self.sum_z,
            deployment
        )
    }
}

/// A cell that could not run (oracle refused), with the reason.
#[derive(Debug, Clone)]
pub struct SkippedCell {
    pub method: Method,
    pub k: u32,
    pub n: usize,
    pub h: usize,
    pub sigma: f64,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<SkippedCell>,
}

fn next_below(rng: &mut impl Rng, bound: u64) -> u64 {
    // rejection sampling keeps the draw unbiased
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Deploy N cells drawn uniformly without replacement from the candidate
/// sites, then optimize RBs and flows exactly as the greedy pipeline does.
pub fn baseline_random_fixed(
    inst: &ProblemInstance,
    placement_seed: u64,
) -> Result<Plan, PlanError> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&placement_seed.to_le_bytes());
    key[8..16].copy_from_slice(&mix_seed(placement_seed, 0x51).to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);

    let mut ids: Vec<u32> = (0..inst.site_count() as u32).collect();
    let take = inst.rabs_budget.min(ids.len());
    for i in 0..take {
        let j = i + next_below(&mut rng, (ids.len() - i) as u64) as usize;
        ids.swap(i, j);
    }
    let deployment: BTreeSet<u32> = ids[..take].iter().copied().collect();
    let active = filter_routes(&inst.routes, &deployment);
    solve_with_deployment(inst, &deployment, &active).map(|r| r.plan)
}

/// Greedy placement, but the RB pool is split up front: half the budget to
/// access, the rest to backhaul.
pub fn baseline_preallocated(inst: &ProblemInstance) -> Result<Plan, PlanError> {
    let (deployment, active) = greedy_deploy(inst);
    let pools = RbPools { access: inst.rb_budget / 2, backhaul: inst.rb_budget - inst.rb_budget / 2 };
    solve_with_deployment_pools(inst, &deployment, &active, Some(pools)).map(|r| r.plan)
}

fn run_cell(
    inst: &ProblemInstance,
    method: Method,
    traffic_seed: u64,
    replicate: u32,
) -> Result<Result<Plan, String>, PlanError> {
    match method {
        Method::Greedy => greedy_solve(inst).map(Ok),
        Method::Preallocated => baseline_preallocated(inst).map(Ok),
        Method::RandomFixed => {
            baseline_random_fixed(inst, mix_seed(traffic_seed, u64::from(replicate))).map(Ok)
        }
        Method::Exact => match exact_solve(inst, &OracleLimits::default()) {
            Ok(plan) => Ok(Ok(plan)),
            Err(OracleError::Refused(reason)) => Ok(Err(reason)),
            Err(OracleError::EnumerationBudget { count, limit }) => {
                Ok(Err(format!("enumeration budget exhausted ({count} > {limit})")))
            }
            Err(OracleError::Plan(e)) => Err(e),
        },
    }
}

/// Run every cell of the sweep. Each produced plan is re-validated; a
/// violation aborts the experiment. Rows come back sorted by
/// (method, K, N, H, sigma, seed) and are written as CSV when the spec
/// names an output file.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, HarnessError> {
    spec.validate()?;
    let scenario = spec.scenario.build()?;
    let topology = Arc::new(build_topology(&scenario)?);

    let mut hs: Vec<usize> = spec.hs.clone();
    hs.sort_unstable();
    hs.dedup();
    let mut routes_by_h: Vec<(usize, Arc<RouteSet>)> = Vec::new();
    for &h in &hs {
        routes_by_h.push((h, Arc::new(enumerate_routes(&topology, h)?)));
    }
    let routes_for = |h: usize| routes_by_h.iter().find(|(hh, _)| *hh == h).unwrap().1.clone();

    let mut out = ExperimentOutput::default();
    for &h in &spec.hs {
        let routes = routes_for(h);
        for &sigma in &spec.sigmas {
            for &seed in &spec.seeds {
                let model = TrafficModel { mu_bps: spec.mu_bps, sigma, seed };
                for &k in &spec.ks {
                    for &n in &spec.ns {
                        let inst = ProblemInstance::with_shared(
                            &scenario,
                            topology.clone(),
                            routes.clone(),
                            &model,
                            n,
                            k,
                            h,
                        );
                        for &method in &spec.methods {
                            let replicates =
                                if method == Method::RandomFixed { spec.random_replicates } else { 1 };
                            for replicate in 0..replicates {
                                let start = Instant::now();
                                let outcome = run_cell(&inst, method, seed, replicate)?;
                                let wallclock_ms = start.elapsed().as_millis() as u64;
                                let plan = match outcome {
                                    Ok(plan) => plan,
                                    Err(reason) => {
                                        out.skipped.push(SkippedCell {
                                            method, k, n, h, sigma, seed, reason,
                                        });
                                        continue;
                                    }
                                };
                                let violations = validate_plan(&inst, &plan)?;
                                if let Some(first) = violations.first() {
                                    return Err(HarnessError::InfeasiblePlan {
                                        method,
                                        k,
                                        n,
                                        h,
                                        sigma,
                                        seed,
                                        detail: first.to_string(),
                                    });
                                }
                                out.rows.push(ResultRow {
                                    method,
                                    k,
                                    n,
                                    h,
                                    sigma,
                                    seed,
                                    served_mbps: plan.served_bps / 1e6,
                                    wallclock_ms,
                                    sum_y: plan.total_backhaul_rbs(),
                                    sum_z: plan.total_access_rbs(),
                                    deployment: plan.deployment.iter().copied().collect(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    out.rows.sort_by(|a, b| {
        (a.method, a.k, a.n, a.h)
            .cmp(&(b.method, b.k, b.n, b.h))
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.seed.cmp(&b.seed))
    });

    if let Some(path) = &spec.output {
        let mut file = std::fs::File::create(path)?;
        file.write_all(rows_to_csv(&out.rows).as_bytes())?;
    }
    Ok(out)
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::build_manhattan_grid;

    fn grid_source(side: f64) -> ScenarioSource {
        ScenarioSource::Grid {
            side_m: side,
            spacing_m: 50.0,
            access_cell_radius_m: 25.0,
            layout: None,
            radio: None,
        }
    }

    fn basic_spec() -> ExperimentSpec {
        ExperimentSpec {
            scenario: grid_source(150.0),
            mu_bps: 1.5e8,
            sigmas: vec![1.0],
            seeds: vec![7],
            ks: vec![40],
            ns: vec![3],
            hs: vec![2],
            methods: vec![Method::Greedy],
            random_replicates: 1,
            output: None,
        }
    }

    #[test]
    fn single_cell_matches_direct_greedy_call() {
        let spec = basic_spec();
        let out = run_experiment(&spec).unwrap();
        assert_eq!(out.rows.len(), 1);

        let scenario = build_manhattan_grid(150.0, 50.0, RadioParams::default(), 25.0).unwrap();
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 7 };
        let inst = ProblemInstance::from_scenario(&scenario, &model, 3, 40, 2).unwrap();
        let plan = greedy_solve(&inst).unwrap();
        assert!((out.rows[0].served_mbps - plan.served_bps / 1e6).abs() < 1e-9);
        assert_eq!(out.rows[0].deployment, plan.deployment.iter().copied().collect::<Vec<_>>());
    }

    #[test]
    fn csv_is_deterministic_modulo_wallclock() {
        let mut spec = basic_spec();
        spec.methods = vec![Method::Greedy, Method::RandomFixed, Method::Preallocated];
        spec.seeds = vec![1, 2];
        spec.random_replicates = 2;
        let a = rows_to_csv(&run_experiment(&spec).unwrap().rows);
        let b = rows_to_csv(&run_experiment(&spec).unwrap().rows);
        let strip = |csv: &str| {
            csv.lines()
                .map(|line| {
                    let mut cols: Vec<&str> = line.split(',').collect();
                    if cols.len() > 7 {
                        cols[7] = "-";
                    }
                    cols.join(",")
                })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn preallocated_never_beats_greedy_per_row() {
        let mut spec = basic_spec();
        spec.methods = vec![Method::Greedy, Method::Preallocated];
        spec.seeds = vec![0, 1, 2, 3];
        spec.ks = vec![20, 40];
        let out = run_experiment(&spec).unwrap();
        for seed in [0u64, 1, 2, 3] {
            for k in [20u32, 40] {
                let served = |m: Method| {
                    out.rows
                        .iter()
                        .find(|r| r.method == m && r.seed == seed && r.k == k)
                        .unwrap()
                        .served_mbps
                };
                assert!(
                    served(Method::Preallocated) <= served(Method::Greedy) + 1e-6,
                    "seed {seed} K {k}"
                );
            }
        }
    }

    #[test]
    fn full_deployment_makes_random_placement_equal_greedy() {
        // With N = |V| placement freedom vanishes: deployments coincide and
        // the LP optima match. Served values can still differ by up to one
        // RB quantum because the two pipelines round down at different
        // optimal vertices (greedy accumulates its route set in deployment
        // order, the baseline filters the full set).
        let scenario = build_manhattan_grid(100.0, 50.0, RadioParams::default(), 25.0).unwrap();
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 3 };
        let inst = ProblemInstance::from_scenario(&scenario, &model, 4, 30, 2).unwrap();
        let greedy = crate::planner::greedy_solve_report(&inst).unwrap();
        let random = baseline_random_fixed(&inst, 123).unwrap();
        assert_eq!(random.deployment, greedy.plan.deployment);

        let deployment = random.deployment.clone();
        let active = filter_routes(&inst.routes, &deployment);
        let full = solve_with_deployment(&inst, &deployment, &active).unwrap();
        assert!(
            (full.lp_objective_bps - greedy.lp_objective_bps).abs()
                <= 1e-6 * greedy.lp_objective_bps.max(1.0)
        );
        let max_rate_bps = 35.01e6;
        assert!(
            (random.served_bps - greedy.plan.served_bps).abs() <= max_rate_bps,
            "random {} vs greedy {}",
            random.served_bps,
            greedy.plan.served_bps
        );
    }

    #[test]
    fn random_baseline_is_reproducible() {
        let scenario = build_manhattan_grid(150.0, 50.0, RadioParams::default(), 25.0).unwrap();
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 11 };
        let inst = ProblemInstance::from_scenario(&scenario, &model, 3, 30, 2).unwrap();
        let a = baseline_random_fixed(&inst, 5).unwrap();
        let b = baseline_random_fixed(&inst, 5).unwrap();
        assert_eq!(a, b);
        let c = baseline_random_fixed(&inst, 6).unwrap();
        assert!(a.deployment != c.deployment || a.served_bps == c.served_bps);
    }

    #[test]
    fn oracle_refusal_turns_into_skipped_cell() {
        let mut spec = basic_spec();
        spec.methods = vec![Method::Exact];
        spec.ks = vec![40]; // beyond the oracle RB limit
        let out = run_experiment(&spec).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].method, Method::Exact);
    }

    #[test]
    fn empty_axes_are_rejected() {
        let mut spec = basic_spec();
        spec.ks.clear();
        assert!(matches!(run_experiment(&spec), Err(HarnessError::InvalidSpec(_))));
    }


    #[test]
    fn csv_file_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let mut spec = basic_spec();
        spec.output = Some(path.clone());
        run_experiment(&spec).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 2);
    }
}
