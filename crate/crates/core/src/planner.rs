//! Deployment planning: assemble optimization instances, run the greedy
//! placement heuristic, solve the deployment-fixed relaxed LP, round, and
//! validate plans against every constraint of the joint problem.
//!
//! The joint problem maximizes served traffic over binary deployments x,
//! integer RB allocations y (per backhaul edge) and z (per cell), and
//! continuous route flows f, subject to edge/access capacities, per-site
//! demand caps, a deployment budget N and an RB budget K. With deployment
//! fixed, the integer relaxation becomes a plain LP over (y, z, f); the
//! product terms x*y and x*z reduce to dropping variables that touch
//! undeployed sites.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpError, LpProblem, LpStatus, solve_lp};
use crate::propagation::{self, PropagationError};
use crate::scenario::{Scenario, ScenarioError};
use crate::topology::{NetworkTopology, RouteSet, TopologyError, enumerate_routes};
use crate::traffic::{DemandVector, TrafficModel, sample_demands};

/// LP values closer than this to an integer count as integral.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;
/// Relative tolerance on flow sums when validating plans.
pub const VALIDATION_REL_TOLERANCE: f64 = 1e-6;

/// Flows below this many bps are treated as zero.
const FLOW_EPS_BPS: f64 = 1e-3;
/// LP coefficients are expressed in Mbps to keep the tableau well scaled.
const MBPS: f64 = 1e6;
/// Tiny objective penalty on RB variables. Flow-optimal LPs are massively
/// degenerate (uniform unit rates); the penalty steers the solver to the
/// minimum-resource optimal vertex, which keeps the down-rounding step
/// stable across budgets. Worth at most `K * RB_USE_PENALTY` Mbps of
/// objective, far below every validation tolerance.
pub(crate) const RB_USE_PENALTY: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("edge ({0}, {1}) does not exist in the topology")]
    UnknownEdge(u32, u32),
    #[error("site {0} does not exist")]
    UnknownSite(u32),
    #[error("route index {0} out of range")]
    UnknownRouteIndex(usize),
    #[error("route {0:?} is not part of the instance route set")]
    UnknownRoute(Vec<u32>),
    #[error("internal solver failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Error)]
pub enum InstanceBuildError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Everything a planning method needs: graph, routes, demands, access rates
/// and the three budgets.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub topology: Arc<NetworkTopology>,
    pub routes: Arc<RouteSet>,
    pub demands: DemandVector,
    pub access_rates_bps: BTreeMap<u32, f64>,
    /// Deployment budget N.
    pub rabs_budget: usize,
    /// Resource-block budget K shared by access and backhaul.
    pub rb_budget: u32,
    /// Hop bound H used when the routes were enumerated.
    pub max_hops: usize,
}

impl ProblemInstance {
    pub fn new(
        topology: Arc<NetworkTopology>,
        routes: Arc<RouteSet>,
        demands: DemandVector,
        access_rates_bps: BTreeMap<u32, f64>,
        rabs_budget: usize,
        rb_budget: u32,
        max_hops: usize,
    ) -> Self {
        ProblemInstance { topology, routes, demands, access_rates_bps, rabs_budget, rb_budget, max_hops }
    }

    /// Build topology, routes, demands and access rates from a scenario.
    pub fn from_scenario(
        scenario: &Scenario,
        model: &TrafficModel,
        rabs_budget: usize,
        rb_budget: u32,
        max_hops: usize,
    ) -> Result<Self, InstanceBuildError> {
        scenario.validate()?;
        let topology = Arc::new(crate::topology::build_topology(scenario)?);
        let routes = Arc::new(enumerate_routes(&topology, max_hops)?);
        Ok(Self::with_shared(scenario, topology, routes, model, rabs_budget, rb_budget, max_hops))
    }

    /// Reuse an already-built topology and route set (sweeps re-solve the
    /// same geometry under many demand draws).
    pub fn with_shared(
        scenario: &Scenario,
        topology: Arc<NetworkTopology>,
        routes: Arc<RouteSet>,
        model: &TrafficModel,
        rabs_budget: usize,
        rb_budget: u32,
        max_hops: usize,
    ) -> Self {
        let demands = sample_demands(model, scenario);
        let rate = propagation::access_unit_rate(scenario.access_cell_radius_m, &scenario.radio)
            .expect("validated scenario has a positive cell radius");
        let access_rates_bps =
            scenario.sites.iter().map(|s| (s.id, rate)).collect::<BTreeMap<_, _>>();
        ProblemInstance::new(topology, routes, demands, access_rates_bps, rabs_budget, rb_budget, max_hops)
    }

    pub fn site_count(&self) -> usize {
        self.topology.site_count
    }

    pub fn access_rate_bps(&self, site: u32) -> f64 {
        self.access_rates_bps.get(&site).copied().unwrap_or(0.0)
    }
}

/// A complete planning decision: deployment, RB allocation and route flows.
///
/// Maps only hold nonzero entries; `served_bps` is always the sum of the
/// stored flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlanRepr", from = "PlanRepr")]
pub struct Plan {
    pub deployment: BTreeSet<u32>,
    pub backhaul_rbs: BTreeMap<(u32, u32), u32>,
    pub access_rbs: BTreeMap<u32, u32>,
    pub flows_bps: BTreeMap<usize, f64>,
    pub served_bps: f64,
}

impl Plan {
    pub fn zero() -> Self {
        Plan {
            deployment: BTreeSet::new(),
            backhaul_rbs: BTreeMap::new(),
            access_rbs: BTreeMap::new(),
            flows_bps: BTreeMap::new(),
            served_bps: 0.0,
        }
    }

    fn zero_with_deployment(deployment: BTreeSet<u32>) -> Self {
        Plan { deployment, ..Plan::zero() }
    }

    pub fn total_backhaul_rbs(&self) -> u64 {
        self.backhaul_rbs.values().map(|&v| u64::from(v)).sum()
    }

    pub fn total_access_rbs(&self) -> u64 {
        self.access_rbs.values().map(|&v| u64::from(v)).sum()
    }
}

#[derive(Serialize, Deserialize, Clone)]
struct EdgeRbRepr {
    i: u32,
    j: u32,
    rbs: u32,
}

#[derive(Serialize, Deserialize, Clone)]
struct SiteRbRepr {
    i: u32,
    rbs: u32,
}

#[derive(Serialize, Deserialize, Clone)]
struct FlowRepr {
    route_index: usize,
    bps: f64,
}

/// Wire format: `{deployment, backhaul_rbs[{i,j,rbs}], access_rbs[{i,rbs}],
/// flows[{route_index,bps}], served_bps}`.
#[derive(Serialize, Deserialize, Clone)]
struct PlanRepr {
    deployment: Vec<u32>,
    backhaul_rbs: Vec<EdgeRbRepr>,
    access_rbs: Vec<SiteRbRepr>,
    flows: Vec<FlowRepr>,
    served_bps: f64,
}

impl From<Plan> for PlanRepr {
    fn from(p: Plan) -> Self {
        PlanRepr {
            deployment: p.deployment.into_iter().collect(),
            backhaul_rbs: p
                .backhaul_rbs
                .into_iter()
                .map(|((i, j), rbs)| EdgeRbRepr { i, j, rbs })
                .collect(),
            access_rbs: p.access_rbs.into_iter().map(|(i, rbs)| SiteRbRepr { i, rbs }).collect(),
            flows: p
                .flows_bps
                .into_iter()
                .map(|(route_index, bps)| FlowRepr { route_index, bps })
                .collect(),
            served_bps: p.served_bps,
        }
    }
}

impl From<PlanRepr> for Plan {
    fn from(r: PlanRepr) -> Self {
        Plan {
            deployment: r.deployment.into_iter().collect(),
            backhaul_rbs: r
                .backhaul_rbs
                .into_iter()
                .map(|e| (NetworkTopology::canonical_pair(e.i, e.j), e.rbs))
                .collect(),
            access_rbs: r.access_rbs.into_iter().map(|s| (s.i, s.rbs)).collect(),
            flows_bps: r.flows.into_iter().map(|f| (f.route_index, f.bps)).collect(),
            served_bps: r.served_bps,
        }
    }
}

/// One failed constraint check.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EdgeCapacityExceeded { edge: (u32, u32), flow_bps: f64, capacity_bps: f64 },
    EdgeEndpointNotDeployed { edge: (u32, u32), flow_bps: f64 },
    AccessCapacityExceeded { site: u32, flow_bps: f64, capacity_bps: f64 },
    AccessSourceNotDeployed { site: u32, flow_bps: f64 },
    DemandExceeded { site: u32, allocated_bps: f64, demand_bps: f64 },
    RabsBudgetExceeded { deployed: usize, budget: usize },
    RbBudgetExceeded { allocated: u64, budget: u32 },
    NegativeFlow { route_index: usize, flow_bps: f64 },
    RelayNotDeployed { route_index: usize, relay: u32 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EdgeCapacityExceeded { edge, flow_bps, capacity_bps } => write!(
                f,
                "edge ({}, {}): flow {flow_bps:.3} bps exceeds capacity {capacity_bps:.3} bps",
                edge.0, edge.1
            ),
            Violation::EdgeEndpointNotDeployed { edge, flow_bps } => write!(
                f,
                "edge ({}, {}): carries {flow_bps:.3} bps but an endpoint is not deployed",
                edge.0, edge.1
            ),
            Violation::AccessCapacityExceeded { site, flow_bps, capacity_bps } => write!(
                f,
                "site {site}: sourced flow {flow_bps:.3} bps exceeds access capacity {capacity_bps:.3} bps"
            ),
            Violation::AccessSourceNotDeployed { site, flow_bps } => {
                write!(f, "site {site}: sources {flow_bps:.3} bps but is not deployed")
            }
            Violation::DemandExceeded { site, allocated_bps, demand_bps } => write!(
                f,
                "site {site}: access allocation {allocated_bps:.3} bps exceeds demand {demand_bps:.3} bps"
            ),
            Violation::RabsBudgetExceeded { deployed, budget } => {
                write!(f, "{deployed} cells deployed, budget is {budget}")
            }
            Violation::RbBudgetExceeded { allocated, budget } => {
                write!(f, "{allocated} RBs allocated, budget is {budget}")
            }
            Violation::NegativeFlow { route_index, flow_bps } => {
                write!(f, "route {route_index}: negative flow {flow_bps:.3} bps")
            }
            Violation::RelayNotDeployed { route_index, relay } => {
                write!(f, "route {route_index}: relay {relay} is not deployed")
            }
        }
    }
}

fn within(flow: f64, cap: f64) -> bool {
    flow <= cap + VALIDATION_REL_TOLERANCE * flow.abs().max(cap.abs()).max(1.0)
}

/// Check a plan against every constraint. Empty result means feasible.
pub fn validate_plan(inst: &ProblemInstance, plan: &Plan) -> Result<Vec<Violation>, PlanError> {
    let site_count = inst.site_count() as u32;
    let mbs = inst.topology.mbs_id();

    for &site in plan.deployment.iter().chain(plan.access_rbs.keys()) {
        if site >= site_count {
            return Err(PlanError::UnknownSite(site));
        }
    }
    for &(i, j) in plan.backhaul_rbs.keys() {
        if inst.topology.edge_between(i, j).is_none() {
            return Err(PlanError::UnknownEdge(i, j));
        }
    }
    for &idx in plan.flows_bps.keys() {
        if idx >= inst.routes.len() {
            return Err(PlanError::UnknownRouteIndex(idx));
        }
    }

    let mut violations = Vec::new();
    let deployed = |node: u32| node == mbs || plan.deployment.contains(&node);

    // per-route checks and flow aggregation
    let mut edge_flow: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut site_flow: BTreeMap<u32, f64> = BTreeMap::new();
    for (&idx, &flow) in &plan.flows_bps {
        if flow < -FLOW_EPS_BPS {
            violations.push(Violation::NegativeFlow { route_index: idx, flow_bps: flow });
            continue;
        }
        let route = &inst.routes.routes[idx];
        if flow > FLOW_EPS_BPS {
            for &relay in RouteSet::relays(route) {
                if !deployed(relay) {
                    violations.push(Violation::RelayNotDeployed { route_index: idx, relay });
                }
            }
        }
        *site_flow.entry(route[0]).or_default() += flow;
        for pair in route.windows(2) {
            *edge_flow.entry(NetworkTopology::canonical_pair(pair[0], pair[1])).or_default() +=
                flow;
        }
    }

    // edge capacity and endpoint deployment
    let edges: BTreeSet<(u32, u32)> =
        edge_flow.keys().chain(plan.backhaul_rbs.keys()).copied().collect();
    for pair in edges {
        let flow = edge_flow.get(&pair).copied().unwrap_or(0.0);
        let rbs = plan.backhaul_rbs.get(&pair).copied().unwrap_or(0);
        let rate = inst
            .topology
            .edge_between(pair.0, pair.1)
            .map(|e| e.unit_backhaul_rate_bps)
            .ok_or(PlanError::UnknownEdge(pair.0, pair.1))?;
        let capacity = f64::from(rbs) * rate;
        if !within(flow, capacity) {
            violations.push(Violation::EdgeCapacityExceeded {
                edge: pair,
                flow_bps: flow,
                capacity_bps: capacity,
            });
        }
        if flow > FLOW_EPS_BPS && !(deployed(pair.0) && deployed(pair.1)) {
            violations.push(Violation::EdgeEndpointNotDeployed { edge: pair, flow_bps: flow });
        }
    }

    // access capacity and source deployment
    let sites: BTreeSet<u32> = site_flow.keys().chain(plan.access_rbs.keys()).copied().collect();
    for site in sites {
        let flow = site_flow.get(&site).copied().unwrap_or(0.0);
        let rbs = plan.access_rbs.get(&site).copied().unwrap_or(0);
        let capacity = f64::from(rbs) * inst.access_rate_bps(site);
        if !within(flow, capacity) {
            violations.push(Violation::AccessCapacityExceeded {
                site,
                flow_bps: flow,
                capacity_bps: capacity,
            });
        }
        if flow > FLOW_EPS_BPS && !plan.deployment.contains(&site) {
            violations.push(Violation::AccessSourceNotDeployed { site, flow_bps: flow });
        }
    }

    // demand caps on the access allocation
    for (&site, &rbs) in &plan.access_rbs {
        let allocated = f64::from(rbs) * inst.access_rate_bps(site);
        let demand = inst.demands.get(site);
        if !within(allocated, demand) {
            violations.push(Violation::DemandExceeded {
                site,
                allocated_bps: allocated,
                demand_bps: demand,
            });
        }
    }

    if plan.deployment.len() > inst.rabs_budget {
        violations.push(Violation::RabsBudgetExceeded {
            deployed: plan.deployment.len(),
            budget: inst.rabs_budget,
        });
    }
    let allocated = plan.total_backhaul_rbs() + plan.total_access_rbs();
    if allocated > u64::from(inst.rb_budget) {
        violations.push(Violation::RbBudgetExceeded { allocated, budget: inst.rb_budget });
    }
    Ok(violations)
}

/// Greedy placement: repeatedly deploy the highest-demand site reachable
/// over already-deployed relays, accumulating the routes that made it
/// reachable. Ties break to the lowest site id.
pub fn greedy_deploy(inst: &ProblemInstance) -> (BTreeSet<u32>, RouteSet) {
    let mut deployed: BTreeSet<u32> = BTreeSet::new();
    let mut accumulated: Vec<Vec<u32>> = Vec::new();

    for _ in 0..inst.rabs_budget {
        let reachable = |route: &[u32]| {
            RouteSet::relays(route).iter().all(|relay| deployed.contains(relay))
        };
        // candidate sources: undeployed sites with at least one usable route
        let mut best: Option<(u32, f64)> = None;
        for (&source, bucket) in &inst.routes.by_source {
            if deployed.contains(&source) {
                continue;
            }
            if bucket.iter().any(|&ri| reachable(&inst.routes.routes[ri])) {
                let demand = inst.demands.get(source);
                // iteration is id-ascending, so strict > keeps the lowest id
                if best.is_none_or(|(_, d)| demand > d) {
                    best = Some((source, demand));
                }
            }
        }
        let Some((chosen, _)) = best else { break };
        for &ri in &inst.routes.by_source[&chosen] {
            let route = &inst.routes.routes[ri];
            if reachable(route) {
                accumulated.push(route.clone());
            }
        }
        deployed.insert(chosen);
    }
    (deployed, RouteSet::from_routes(accumulated))
}

/// Pool caps for the pre-allocated baseline: separate budgets for the two
/// RB uses instead of one shared pool.
#[derive(Debug, Clone, Copy)]
pub struct RbPools {
    pub backhaul: u32,
    pub access: u32,
}

/// The deployment-fixed LP plus the meaning of its variable columns:
/// `[y per edge | z per site | f per route]`.
#[derive(Debug, Clone)]
pub struct RelaxedLp {
    pub problem: LpProblem,
    /// Canonical edge pairs backing the first block of variables.
    pub edges: Vec<(u32, u32)>,
    /// Site ids backing the second block.
    pub sites: Vec<u32>,
    /// Indices into the instance route set backing the flow block.
    pub route_indices: Vec<usize>,
}

/// Deployment-fixed structure: the routes usable under a deployment and the
/// edges/sites they touch, with rates in Mbps.
pub(crate) struct ActiveStructure {
    pub route_indices: Vec<usize>,
    pub edges: Vec<(u32, u32)>,
    pub edge_rate_mbps: Vec<f64>,
    pub sites: Vec<u32>,
    pub site_rate_mbps: Vec<f64>,
    pub site_demand_mbps: Vec<f64>,
    /// Local edge ids traversed by each route.
    pub edges_of_route: Vec<Vec<usize>>,
    /// Local site id sourcing each route.
    pub source_of_route: Vec<usize>,
}

impl ActiveStructure {
    /// Restrict `active` to routes sourced at deployed sites (flows from
    /// undeployed sources are fixed to zero by the linearization) and index
    /// the edges and sites they use.
    pub fn build(
        inst: &ProblemInstance,
        deployment: &BTreeSet<u32>,
        active: &RouteSet,
    ) -> Result<Self, PlanError> {
        let mut route_indices = Vec::new();
        let mut route_nodes = Vec::new();
        for route in &active.routes {
            if !deployment.contains(&route[0]) {
                continue;
            }
            let idx = inst
                .routes
                .find_route_index(route)
                .ok_or_else(|| PlanError::UnknownRoute(route.clone()))?;
            route_indices.push(idx);
            route_nodes.push(route.clone());
        }

        let mut edge_ids: BTreeSet<(u32, u32)> = BTreeSet::new();
        let mut site_ids: BTreeSet<u32> = BTreeSet::new();
        for route in &route_nodes {
            for pair in route.windows(2) {
                edge_ids.insert(NetworkTopology::canonical_pair(pair[0], pair[1]));
            }
            site_ids.insert(route[0]);
        }
        // key order fixes the variable layout deterministically
        let edges: Vec<(u32, u32)> = edge_ids.into_iter().collect();
        let sites: Vec<u32> = site_ids.into_iter().collect();
        let edge_pos: BTreeMap<(u32, u32), usize> =
            edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let site_pos: BTreeMap<u32, usize> =
            sites.iter().enumerate().map(|(k, &s)| (s, k)).collect();

        let mut edge_rate_mbps = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            let edge = inst.topology.edge_between(i, j).ok_or(PlanError::UnknownEdge(i, j))?;
            edge_rate_mbps.push(edge.unit_backhaul_rate_bps / MBPS);
        }
        let site_rate_mbps: Vec<f64> =
            sites.iter().map(|&s| inst.access_rate_bps(s) / MBPS).collect();
        let site_demand_mbps: Vec<f64> = sites.iter().map(|&s| inst.demands.get(s) / MBPS).collect();

        let edges_of_route: Vec<Vec<usize>> = route_nodes
            .iter()
            .map(|route| {
                route
                    .windows(2)
                    .map(|pair| edge_pos[&NetworkTopology::canonical_pair(pair[0], pair[1])])
                    .collect()
            })
            .collect();
        let source_of_route: Vec<usize> =
            route_nodes.iter().map(|route| site_pos[&route[0]]).collect();

        Ok(ActiveStructure {
            route_indices,
            edges,
            edge_rate_mbps,
            sites,
            site_rate_mbps,
            site_demand_mbps,
            edges_of_route,
            source_of_route,
        })
    }

    fn var_count(&self) -> usize {
        self.edges.len() + self.sites.len() + self.route_indices.len()
    }

    fn flow_var(&self, route: usize) -> usize {
        self.edges.len() + self.sites.len() + route
    }

    /// The relaxed LP: maximize total flow subject to edge/access capacity
    /// coupling, demand caps, the shared RB budget and per-variable budget
    /// caps (the remnant of the deployment linearization).
    pub fn relaxed_lp(&self, rb_budget: u32, pools: Option<RbPools>) -> LpProblem {
        let ne = self.edges.len();
        let ns = self.sites.len();
        let nr = self.route_indices.len();
        let k = f64::from(rb_budget);

        let mut objective = vec![-RB_USE_PENALTY; ne + ns];
        objective.extend(std::iter::repeat_n(1.0, nr));
        let mut problem = LpProblem::new(objective);

        // edge capacity: sum of flows through e <= rate_e * y_e
        let mut edge_rows = vec![vec![0.0; self.var_count()]; ne];
        let mut site_rows = vec![vec![0.0; self.var_count()]; ns];
        for r in 0..nr {
            for &e in &self.edges_of_route[r] {
                edge_rows[e][self.flow_var(r)] = 1.0;
            }
            site_rows[self.source_of_route[r]][self.flow_var(r)] = 1.0;
        }
        for (e, mut row) in edge_rows.into_iter().enumerate() {
            row[e] = -self.edge_rate_mbps[e];
            problem.add_constraint(row, 0.0);
        }
        // access capacity: sum of flows sourced at s <= rate_s * z_s
        for (s, mut row) in site_rows.into_iter().enumerate() {
            row[ne + s] = -self.site_rate_mbps[s];
            problem.add_constraint(row, 0.0);
        }
        // demand cap: rate_s * z_s <= D_s
        for s in 0..ns {
            let mut row = vec![0.0; self.var_count()];
            row[ne + s] = self.site_rate_mbps[s];
            problem.add_constraint(row, self.site_demand_mbps[s]);
        }
        // shared RB budget
        let mut budget = vec![0.0; self.var_count()];
        for v in budget.iter_mut().take(ne + ns) {
            *v = 1.0;
        }
        problem.add_constraint(budget, k);
        // per-variable budget caps; all materialized variables touch only
        // deployed endpoints, so the deployment indicators are 1 here
        for e in 0..ne {
            let mut row = vec![0.0; self.var_count()];
            row[e] = 1.0;
            problem.add_constraint(row, k);
        }
        for s in 0..ns {
            let mut row = vec![0.0; self.var_count()];
            row[ne + s] = 1.0;
            problem.add_constraint(row, k);
        }
        if let Some(pools) = pools {
            let mut bh = vec![0.0; self.var_count()];
            for v in bh.iter_mut().take(ne) {
                *v = 1.0;
            }
            problem.add_constraint(bh, f64::from(pools.backhaul));
            let mut ac = vec![0.0; self.var_count()];
            for v in ac.iter_mut().take(ne + ns).skip(ne) {
                *v = 1.0;
            }
            problem.add_constraint(ac, f64::from(pools.access));
        }
        problem
    }

    /// Flow-only LP under fixed integer allocations.
    pub fn flow_lp(&self, y: &[u32], z: &[u32]) -> LpProblem {
        let nr = self.route_indices.len();
        let mut problem = LpProblem::new(vec![1.0; nr]);
        for (e, &rbs) in y.iter().enumerate() {
            let mut row = vec![0.0; nr];
            for (v, edges) in row.iter_mut().zip(&self.edges_of_route) {
                if edges.contains(&e) {
                    *v = 1.0;
                }
            }
            problem.add_constraint(row, f64::from(rbs) * self.edge_rate_mbps[e]);
        }
        for (s, &rbs) in z.iter().enumerate() {
            let mut row = vec![0.0; nr];
            for (v, &source) in row.iter_mut().zip(&self.source_of_route) {
                if source == s {
                    *v = 1.0;
                }
            }
            problem.add_constraint(row, f64::from(rbs) * self.site_rate_mbps[s]);
        }
        problem
    }

    /// Assemble a plan from integer allocations and per-route flows in Mbps.
    pub fn plan_from(
        &self,
        deployment: &BTreeSet<u32>,
        y: &[u32],
        z: &[u32],
        flows_mbps: &[f64],
    ) -> Plan {
        let mut plan = Plan::zero_with_deployment(deployment.clone());
        for (e, &rbs) in y.iter().enumerate() {
            if rbs > 0 {
                plan.backhaul_rbs.insert(self.edges[e], rbs);
            }
        }
        for (s, &rbs) in z.iter().enumerate() {
            if rbs > 0 {
                plan.access_rbs.insert(self.sites[s], rbs);
            }
        }
        let mut served = 0.0;
        for (r, &f) in flows_mbps.iter().enumerate() {
            let bps = f * MBPS;
            if bps > FLOW_EPS_BPS {
                plan.flows_bps.insert(self.route_indices[r], bps);
                served += bps;
            }
        }
        plan.served_bps = served;
        plan
    }
}

/// Build the deployment-fixed relaxed LP for inspection or external solving.
pub fn build_relaxed_lp(
    inst: &ProblemInstance,
    deployment: &BTreeSet<u32>,
    active: &RouteSet,
) -> Result<RelaxedLp, PlanError> {
    let s = ActiveStructure::build(inst, deployment, active)?;
    let problem = s.relaxed_lp(inst.rb_budget, None);
    Ok(RelaxedLp { problem, edges: s.edges, sites: s.sites, route_indices: s.route_indices })
}

/// Outcome of the LP + rounding pipeline, with the pre-rounding LP value for
/// gap diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub plan: Plan,
    /// Optimal value of the relaxed LP, in bps.
    pub lp_objective_bps: f64,
    /// Whether rounding and a flow re-solve were needed.
    pub rounded: bool,
}

fn floor_with_guard(v: f64) -> u32 {
    (v + 1e-9).floor().max(0.0) as u32
}

/// Solve the relaxed LP for a fixed deployment, round down if fractional,
/// and re-optimize flows under the rounded allocation.
pub fn solve_with_deployment(
    inst: &ProblemInstance,
    deployment: &BTreeSet<u32>,
    active: &RouteSet,
) -> Result<SolveReport, PlanError> {
    solve_with_deployment_pools(inst, deployment, active, None)
}

pub fn solve_with_deployment_pools(
    inst: &ProblemInstance,
    deployment: &BTreeSet<u32>,
    active: &RouteSet,
    pools: Option<RbPools>,
) -> Result<SolveReport, PlanError> {
    let options = SolveOptions { pools, ..SolveOptions::default() };
    solve_with_deployment_opts(inst, deployment, active, &options)
}

/// Knobs for the LP + rounding pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Split the RB budget into fixed backhaul/access pools.
    pub pools: Option<RbPools>,
    /// After rounding down, hand the leftover budget back out one RB at a
    /// time to the capacity whose shadow price promises the largest gain.
    /// Off by default: plain down-rounding is the reference behavior.
    pub redistribute_rounding_slack: bool,
}

pub fn solve_with_deployment_opts(
    inst: &ProblemInstance,
    deployment: &BTreeSet<u32>,
    active: &RouteSet,
    options: &SolveOptions,
) -> Result<SolveReport, PlanError> {
    let structure = ActiveStructure::build(inst, deployment, active)?;
    if structure.route_indices.is_empty() {
        return Ok(SolveReport {
            plan: Plan::zero_with_deployment(deployment.clone()),
            lp_objective_bps: 0.0,
            rounded: false,
        });
    }

    let problem = structure.relaxed_lp(inst.rb_budget, options.pools);
    let sol = solve_lp(&problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(PlanError::Internal(format!(
            "relaxed LP reported {:?}, but the zero plan is always feasible",
            sol.status
        )));
    }

    let ne = structure.edges.len();
    let ns = structure.sites.len();
    let y_hat = &sol.values[..ne];
    let z_hat = &sol.values[ne..ne + ns];
    let flows_hat = &sol.values[ne + ns..];

    let integral = y_hat
        .iter()
        .chain(z_hat)
        .all(|&v| (v - v.round()).abs() <= INTEGRALITY_TOLERANCE);
    // total flow, excluding the tie-breaking penalty term
    let lp_objective_bps = flows_hat.iter().sum::<f64>() * MBPS;

    let report = if integral {
        let y: Vec<u32> = y_hat.iter().map(|&v| v.round().max(0.0) as u32).collect();
        let z: Vec<u32> = z_hat.iter().map(|&v| v.round().max(0.0) as u32).collect();
        SolveReport {
            plan: structure.plan_from(deployment, &y, &z, flows_hat),
            lp_objective_bps,
            rounded: false,
        }
    } else {
        let mut y: Vec<u32> = y_hat.iter().map(|&v| floor_with_guard(v)).collect();
        let mut z: Vec<u32> = z_hat.iter().map(|&v| floor_with_guard(v)).collect();
        if options.redistribute_rounding_slack {
            redistribute_slack(inst, &structure, options.pools, &mut y, &mut z)?;
        }
        let flow_problem = structure.flow_lp(&y, &z);
        let flow_sol = solve_lp(&flow_problem)?;
        if flow_sol.status != LpStatus::Optimal {
            return Err(PlanError::Internal(format!(
                "flow re-solve reported {:?} under fixed capacities",
                flow_sol.status
            )));
        }
        SolveReport {
            plan: structure.plan_from(deployment, &y, &z, &flow_sol.values),
            lp_objective_bps,
            rounded: true,
        }
    };
    debug_assert!(
        validate_plan(inst, &report.plan).map(|v| v.is_empty()).unwrap_or(false),
        "solver emitted an infeasible plan"
    );
    Ok(report)
}

/// Grant leftover RBs one at a time to the capacity with the largest shadow
/// improvement, re-solving flows after each grant. Demand caps and pool
/// budgets stay respected; stops when no grant improves the flow.
fn redistribute_slack(
    inst: &ProblemInstance,
    structure: &ActiveStructure,
    pools: Option<RbPools>,
    y: &mut [u32],
    z: &mut [u32],
) -> Result<(), PlanError> {
    let used = |y: &[u32], z: &[u32]| -> u64 {
        y.iter().chain(z.iter()).map(|&v| u64::from(v)).sum()
    };
    let mut leftover = u64::from(inst.rb_budget).saturating_sub(used(y, z));
    while leftover > 0 {
        let flow = solve_lp(&structure.flow_lp(y, z))?;
        if flow.status != LpStatus::Optimal {
            return Err(PlanError::Internal("flow LP failed during redistribution".into()));
        }
        // rows: one per edge, then one per site
        let ne = structure.edges.len();
        let backhaul_used: u64 = y.iter().map(|&v| u64::from(v)).sum();
        let access_used: u64 = z.iter().map(|&v| u64::from(v)).sum();
        let backhaul_open =
            pools.is_none_or(|p| backhaul_used < u64::from(p.backhaul));
        let access_open = pools.is_none_or(|p| access_used < u64::from(p.access));

        let mut best: Option<(usize, f64)> = None;
        for (e, &rate) in structure.edge_rate_mbps.iter().enumerate() {
            if backhaul_open {
                let gain = flow.duals[e] * rate;
                if gain > 1e-9 && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((e, gain));
                }
            }
        }
        for (s, &rate) in structure.site_rate_mbps.iter().enumerate() {
            if access_open {
                let within_demand =
                    f64::from(z[s] + 1) * rate <= structure.site_demand_mbps[s] * (1.0 + 1e-9);
                let gain = flow.duals[ne + s] * rate;
                if within_demand && gain > 1e-9 && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((ne + s, gain));
                }
            }
        }
        let Some((slot, _)) = best else { break };
        if slot < ne {
            y[slot] += 1;
        } else {
            z[slot - ne] += 1;
        }
        leftover -= 1;
    }
    Ok(())
}

/// Greedy placement followed by the LP + rounding pipeline.
pub fn greedy_solve(inst: &ProblemInstance) -> Result<Plan, PlanError> {
    greedy_solve_report(inst).map(|r| r.plan)
}

pub fn greedy_solve_report(inst: &ProblemInstance) -> Result<SolveReport, PlanError> {
    greedy_solve_opts(inst, &SolveOptions::default())
}

pub fn greedy_solve_opts(
    inst: &ProblemInstance,
    options: &SolveOptions,
) -> Result<SolveReport, PlanError> {
    let (deployment, active) = greedy_deploy(inst);
    solve_with_deployment_opts(inst, &deployment, &active, options)
}
