//! Exhaustive exact solver for tiny instances: every deployment subset,
//! every integer RB split over the edges and cells it activates, and a flow
//! LP per split. Ground truth for heuristic-gap measurements, in place of a
//! general branch-and-bound whose own correctness would be harder to trust.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::lp::{LpStatus, solve_lp};
use crate::planner::{ActiveStructure, Plan, PlanError, ProblemInstance};
use crate::topology::filter_routes;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance refused: {0}")]
    Refused(String),
    #[error("enumeration budget exhausted after {count} allocation evaluations (limit {limit})")]
    EnumerationBudget { count: u64, limit: u64 },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Guard rails keeping the exhaustive search tractable.
#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_sites: usize,
    pub max_rb_budget: u32,
    pub max_routes: usize,
    pub max_enumerations: u64,
    /// Skip deployments whose LP relaxation cannot beat the incumbent. The
    /// prune is exact but off by default to keep the trusted surface as
    /// small as possible.
    pub lp_bound_prune: bool,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_sites: 9,
            max_rb_budget: 8,
            max_routes: 200,
            max_enumerations: 10_000_000,
            lp_bound_prune: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub plan: Plan,
    /// Number of (deployment, allocation) cells whose flow LP was solved.
    pub enumerations: u64,
}

/// Globally optimal plan by structured enumeration. Ties between
/// deployments break to the lexicographically smallest one.
pub fn exact_solve(inst: &ProblemInstance, limits: &OracleLimits) -> Result<Plan, OracleError> {
    exact_solve_report(inst, limits).map(|r| r.plan)
}

pub fn exact_solve_report(
    inst: &ProblemInstance,
    limits: &OracleLimits,
) -> Result<OracleReport, OracleError> {
    if inst.site_count() > limits.max_sites {
        return Err(OracleError::Refused(format!(
            "{} sites exceed the oracle limit of {}",
            inst.site_count(),
            limits.max_sites
        )));
    }
    if inst.rb_budget > limits.max_rb_budget {
        return Err(OracleError::Refused(format!(
            "RB budget {} exceeds the oracle limit of {}",
            inst.rb_budget, limits.max_rb_budget
        )));
    }
    if inst.routes.len() > limits.max_routes {
        return Err(OracleError::Refused(format!(
            "{} routes exceed the oracle limit of {}",
            inst.routes.len(),
            limits.max_routes
        )));
    }

    let mut search = Search {
        inst,
        limits,
        enumerations: 0,
        best_value_mbps: 0.0,
        best_plan: Plan::zero(),
    };
    // Deployments in lexicographic order of their sorted id vectors, the
    // empty set (= the zero plan incumbent) first.
    let mut current = Vec::new();
    search.deployments(0, inst.rabs_budget.min(inst.site_count()), &mut current)?;
    Ok(OracleReport { plan: search.best_plan, enumerations: search.enumerations })
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    limits: &'a OracleLimits,
    enumerations: u64,
    best_value_mbps: f64,
    best_plan: Plan,
}

impl Search<'_> {
    fn deployments(
        &mut self,
        start: usize,
        remaining: usize,
        current: &mut Vec<u32>,
    ) -> Result<(), OracleError> {
        if !current.is_empty() {
            self.evaluate_deployment(current)?;
        }
        if remaining == 0 {
            return Ok(());
        }
        for id in start..self.inst.site_count() {
            current.push(id as u32);
            self.deployments(id + 1, remaining - 1, current)?;
            current.pop();
        }
        Ok(())
    }

    fn evaluate_deployment(&mut self, ids: &[u32]) -> Result<(), OracleError> {
        let deployment: BTreeSet<u32> = ids.iter().copied().collect();
        let active = filter_routes(&self.inst.routes, &deployment);
        let structure = ActiveStructure::build(self.inst, &deployment, &active)?;
        if structure.route_indices.is_empty() {
            return Ok(()); // nothing can flow; the incumbent is at least 0
        }

        if self.limits.lp_bound_prune {
            // The relaxation's objective carries the tie-breaking RB penalty,
            // so pad the bound by its worst case to keep the prune exact.
            let margin = crate::planner::RB_USE_PENALTY * f64::from(self.inst.rb_budget);
            let relaxed = solve_lp(&structure.relaxed_lp(self.inst.rb_budget, None))
                .map_err(PlanError::from)?;
            if relaxed.status == LpStatus::Optimal
                && relaxed.objective_value + margin <= self.best_value_mbps + 1e-9
            {
                return Ok(());
            }
        }

        // Slot caps: access allocations are cut at the demand ceiling
        // (anything above violates the demand constraint outright), edges
        // only at the budget. Sites go first so the final slot can always
        // absorb leftover budget.
        let k = self.inst.rb_budget;
        let mut caps: Vec<u32> = structure
            .site_rate_mbps
            .iter()
            .zip(&structure.site_demand_mbps)
            .map(|(&rate, &demand)| {
                if rate <= 0.0 { 0 } else { ((demand / rate + 1e-9).floor() as u64).min(u64::from(k)) as u32 }
            })
            .collect();
        caps.extend(std::iter::repeat_n(k, structure.edges.len()));

        // Refuse before solving anything if this deployment alone would
        // blow the enumeration budget; the count is exact.
        let projected = self.enumerations.saturating_add(count_allocations(&caps, k));
        if projected > self.limits.max_enumerations {
            return Err(OracleError::EnumerationBudget {
                count: projected,
                limit: self.limits.max_enumerations,
            });
        }

        let cell = DeploymentCell { structure: &structure, deployment: &deployment, caps: &caps };
        let mut alloc = vec![0u32; caps.len()];
        self.allocations(&cell, 0, k, &mut alloc)
    }

    fn allocations(
        &mut self,
        cell: &DeploymentCell<'_>,
        slot: usize,
        remaining: u32,
        alloc: &mut Vec<u32>,
    ) -> Result<(), OracleError> {
        if slot + 1 == cell.caps.len() {
            if remaining > cell.caps[slot] {
                return Ok(());
            }
            alloc[slot] = remaining;
            return self.evaluate_allocation(cell, alloc);
        }
        for v in 0..=cell.caps[slot].min(remaining) {
            alloc[slot] = v;
            self.allocations(cell, slot + 1, remaining - v, alloc)?;
        }
        Ok(())
    }

    fn evaluate_allocation(
        &mut self,
        cell: &DeploymentCell<'_>,
        alloc: &[u32],
    ) -> Result<(), OracleError> {
        self.enumerations += 1;
        if self.enumerations > self.limits.max_enumerations {
            return Err(OracleError::EnumerationBudget {
                count: self.enumerations,
                limit: self.limits.max_enumerations,
            });
        }
        let ns = cell.structure.sites.len();
        let (z, y) = alloc.split_at(ns);
        let flow = solve_lp(&cell.structure.flow_lp(y, z)).map_err(PlanError::from)?;
        if flow.status != LpStatus::Optimal {
            return Err(OracleError::Plan(PlanError::Internal(format!(
                "flow LP reported {:?} under fixed capacities",
                flow.status
            ))));
        }
        if flow.objective_value > self.best_value_mbps + 1e-9 {
            self.best_value_mbps = flow.objective_value;
            self.best_plan = cell.structure.plan_from(cell.deployment, y, z, &flow.values);
        }
        Ok(())
    }
}

/// One deployment's enumeration context: its usable structure and the
/// per-slot allocation caps (sites first, then edges).
struct DeploymentCell<'a> {
    structure: &'a ActiveStructure,
    deployment: &'a BTreeSet<u32>,
    caps: &'a [u32],
}

/// Number of cap-bounded compositions of `k` over the slots.
fn count_allocations(caps: &[u32], k: u32) -> u64 {
    let k = k as usize;
    let mut ways = vec![0u64; k + 1];
    ways[0] = 1;
    for &cap in caps {
        let mut next = vec![0u64; k + 1];
        for (total, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for v in 0..=(cap as usize).min(k - total) {
                next[total + v] = next[total + v].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use crate::planner::{greedy_solve, validate_plan};
    use crate::scenario::{Point, RadioParams, Scenario, Site};
    use crate::topology::{Edge, NetworkTopology, build_topology, enumerate_routes};
    use crate::traffic::DemandVector;

    /// Hand-built single site with one edge to the MBS, equal unit rates.
    fn symmetric_instance(rate: f64, demands: Vec<f64>, edges: Vec<Edge>, n: usize, k: u32) -> ProblemInstance {
        let sites = demands.len();
        let topology = Arc::new(NetworkTopology::from_edges(sites, edges));
        let routes = Arc::new(enumerate_routes(&topology, 2).unwrap());
        let demand_map: BTreeMap<u32, f64> =
            demands.iter().enumerate().map(|(i, &d)| (i as u32, d)).collect();
        let rates: BTreeMap<u32, f64> = (0..sites as u32).map(|i| (i, rate)).collect();
        ProblemInstance::new(
            topology,
            routes,
            DemandVector { demands_bps: demand_map },
            rates,
            n,
            k,
            2,
        )
    }

    #[test]
    fn n_zero_gives_zero_plan() {
        let edges = vec![Edge { a: 0, b: 1, distance_m: 50.0, unit_backhaul_rate_bps: 1e7 }];
        let inst = symmetric_instance(1e7, vec![1e9], edges, 0, 4);
        let plan = exact_solve(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(plan, Plan::zero());
    }

    #[test]
    fn equal_rates_force_even_split() {
        // one site, one edge, K = 2, huge demand, equal unit rates: the
        // optimum is one RB each way, serving exactly one unit rate.
        let rate = 1e7;
        let edges = vec![Edge { a: 0, b: 1, distance_m: 50.0, unit_backhaul_rate_bps: rate }];
        let inst = symmetric_instance(rate, vec![1e12], edges, 1, 2);
        let report = exact_solve_report(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(report.plan.deployment, BTreeSet::from([0]));
        assert_eq!(report.plan.backhaul_rbs.get(&(0, 1)), Some(&1));
        assert_eq!(report.plan.access_rbs.get(&0), Some(&1));
        assert!((report.plan.served_bps - rate).abs() < 1.0);
    }

    #[test]
    fn saturation_with_full_deployment() {
        // two sites, equal rates, demand 1.5 rate each: the integer access
        // allocation can serve exactly floor(D / rate) * rate per site.
        let rate = 1e7;
        let edges = vec![
            Edge { a: 0, b: 2, distance_m: 50.0, unit_backhaul_rate_bps: rate },
            Edge { a: 1, b: 2, distance_m: 50.0, unit_backhaul_rate_bps: rate },
        ];
        let inst = symmetric_instance(rate, vec![1.5 * rate, 1.5 * rate], edges, 2, 6);
        let plan = exact_solve(&inst, &OracleLimits::default()).unwrap();
        assert!((plan.served_bps - 2.0 * rate).abs() < 1.0);
        assert!(validate_plan(&inst, &plan).unwrap().is_empty());
    }

    fn line_instance(n: usize, k: u32, h: usize) -> ProblemInstance {
        let scenario = Scenario {
            sites: vec![
                Site { id: 0, x_m: 50.0, y_m: 0.0 },
                Site { id: 1, x_m: 100.0, y_m: 0.0 },
            ],
            macro_bs: Point::new(0.0, 0.0),
            access_cell_radius_m: 25.0,
            radio: RadioParams::default(),
        };
        let topology = Arc::new(build_topology(&scenario).unwrap());
        let routes = Arc::new(enumerate_routes(&topology, h).unwrap());
        let rate = crate::propagation::access_unit_rate(25.0, &scenario.radio).unwrap();
        ProblemInstance::new(
            topology,
            routes,
            DemandVector { demands_bps: BTreeMap::from([(0, 10e6), (1, 20e6)]) },
            BTreeMap::from([(0, rate), (1, rate)]),
            n,
            k,
            h,
        )
    }

    #[test]
    fn exact_dominates_greedy_on_the_line() {
        let inst = line_instance(1, 4, 2);
        let greedy = greedy_solve(&inst).unwrap();
        let exact = exact_solve(&inst, &OracleLimits::default()).unwrap();
        assert!(exact.served_bps >= greedy.served_bps * (1.0 - 1e-6));
        assert!(validate_plan(&inst, &exact).unwrap().is_empty());
    }

    #[test]
    fn relabeling_preserves_the_optimum() {
        let base = line_instance(1, 4, 2);
        let swapped = {
            let scenario = Scenario {
                sites: vec![
                    Site { id: 1, x_m: 50.0, y_m: 0.0 },
                    Site { id: 0, x_m: 100.0, y_m: 0.0 },
                ],
                macro_bs: Point::new(0.0, 0.0),
                access_cell_radius_m: 25.0,
                radio: RadioParams::default(),
            };
            let topology = Arc::new(build_topology(&scenario).unwrap());
            let routes = Arc::new(enumerate_routes(&topology, 2).unwrap());
            let rate = crate::propagation::access_unit_rate(25.0, &scenario.radio).unwrap();
            ProblemInstance::new(
                topology,
                routes,
                DemandVector { demands_bps: BTreeMap::from([(1, 10e6), (0, 20e6)]) },
                BTreeMap::from([(0, rate), (1, rate)]),
                1,
                4,
                2,
            )
        };
        let a = exact_solve(&base, &OracleLimits::default()).unwrap();
        let b = exact_solve(&swapped, &OracleLimits::default()).unwrap();
        assert!((a.served_bps - b.served_bps).abs() <= 1e-6 * a.served_bps.max(1.0));
    }

    #[test]
    fn lp_bound_prune_changes_nothing() {
        let inst = line_instance(2, 5, 2);
        let plain = exact_solve(&inst, &OracleLimits::default()).unwrap();
        let pruned = exact_solve(
            &inst,
            &OracleLimits { lp_bound_prune: true, ..OracleLimits::default() },
        )
        .unwrap();
        assert!((plain.served_bps - pruned.served_bps).abs() <= 1e-6 * plain.served_bps.max(1.0));
    }

    #[test]
    fn limits_are_enforced() {
        let inst = line_instance(1, 4, 2);
        let e = exact_solve(&inst, &OracleLimits { max_sites: 1, ..OracleLimits::default() });
        assert!(matches!(e, Err(OracleError::Refused(_))));
        let e = exact_solve(&inst, &OracleLimits { max_rb_budget: 2, ..OracleLimits::default() });
        assert!(matches!(e, Err(OracleError::Refused(_))));
        let e = exact_solve(&inst, &OracleLimits { max_routes: 1, ..OracleLimits::default() });
        assert!(matches!(e, Err(OracleError::Refused(_))));
        let e = exact_solve(&inst, &OracleLimits { max_enumerations: 1, ..OracleLimits::default() });
        assert!(matches!(e, Err(OracleError::EnumerationBudget { .. })));
    }
}
