//! Backhaul graph construction and hop-bounded route enumeration.
//!
//! Nodes are the candidate sites (ids `0..site_count`) plus the macro BS,
//! which always carries the sentinel id `site_count`. Edges are undirected,
//! kept only where the mean mixture path loss stays under the configured
//! threshold, and carry the precomputed per-RB backhaul rate.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::propagation::{self, PropagationError};
use crate::scenario::{Scenario, euclidean_distance};

/// Hard ceiling on enumerated routes; the count grows as O(V^H).
pub const DEFAULT_ROUTE_CEILING: usize = 2_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("hop bound must be at least 1, got {0}")]
    InvalidHopBound(usize),
    #[error("route enumeration exceeded the ceiling of {limit} routes; lower the hop bound or raise the ceiling")]
    RouteCeilingExceeded { limit: usize },
    #[error("nodes {0} and {1} occupy the same position")]
    CoincidentNodes(u32, u32),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// An undirected backhaul edge with its link budget. `a < b` canonically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub distance_m: f64,
    pub unit_backhaul_rate_bps: f64,
}

/// Pruned backhaul graph over candidate sites and the macro BS.
#[derive(Debug, Clone)]
pub struct NetworkTopology {
    pub site_count: usize,
    pub edges: Vec<Edge>,
    /// Sorted neighbor lists, indexed by node id (macro BS last).
    pub adjacency: Vec<Vec<u32>>,
    edge_index: HashMap<(u32, u32), usize>,
}

impl NetworkTopology {
    /// Node id of the macro BS.
    pub fn mbs_id(&self) -> u32 {
        self.site_count as u32
    }

    pub fn node_count(&self) -> usize {
        self.site_count + 1
    }

    /// Canonical (a < b) form of an unordered node pair.
    pub fn canonical_pair(i: u32, j: u32) -> (u32, u32) {
        if i < j { (i, j) } else { (j, i) }
    }

    pub fn edge_between(&self, i: u32, j: u32) -> Option<&Edge> {
        self.edge_index.get(&Self::canonical_pair(i, j)).map(|&k| &self.edges[k])
    }

    pub(crate) fn from_edges(site_count: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); site_count + 1];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.a as usize].push(e.b);
            adjacency[e.b as usize].push(e.a);
            edge_index.insert((e.a, e.b), k);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        NetworkTopology { site_count, edges, adjacency, edge_index }
    }
}

/// Build the pruned backhaul graph for a scenario.
pub fn build_topology(scenario: &Scenario) -> Result<NetworkTopology, TopologyError> {
    let n = scenario.site_count();
    let mut positions = scenario.positions_by_id();
    positions.push(scenario.macro_bs); // macro BS is node n

    let mut edges = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = euclidean_distance(positions[i], positions[j]);
            if d == 0.0 {
                return Err(TopologyError::CoincidentNodes(i as u32, j as u32));
            }
            let gain = propagation::pathloss(d, &scenario.radio)?;
            if propagation::linear_to_db_loss(gain) <= scenario.radio.pathloss_threshold_db {
                edges.push(Edge {
                    a: i as u32,
                    b: j as u32,
                    distance_m: d,
                    unit_backhaul_rate_bps: propagation::backhaul_unit_rate(d, &scenario.radio)?,
                });
            }
        }
    }
    Ok(NetworkTopology::from_edges(n, edges))
}

/// Hop-bounded simple routes from candidate sites to the macro BS, plus the
/// inverted indices used by the flow formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSet {
    /// Node sequences `[source, relays.., mbs]`, grouped by source and in
    /// lexicographic order within each source.
    pub routes: Vec<Vec<u32>>,
    /// Route indices traversing each canonical edge.
    pub by_edge: BTreeMap<(u32, u32), Vec<usize>>,
    /// Route indices sourced at each site.
    pub by_source: BTreeMap<u32, Vec<usize>>,
}

impl RouteSet {
    pub fn from_routes(routes: Vec<Vec<u32>>) -> Self {
        let mut by_edge: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
        let mut by_source: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (idx, route) in routes.iter().enumerate() {
            by_source.entry(route[0]).or_default().push(idx);
            for pair in route.windows(2) {
                by_edge
                    .entry(NetworkTopology::canonical_pair(pair[0], pair[1]))
                    .or_default()
                    .push(idx);
            }
        }
        RouteSet { routes, by_edge, by_source }
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Relay nodes of a route: everything strictly between source and MBS.
    pub fn relays(route: &[u32]) -> &[u32] {
        &route[1..route.len() - 1]
    }

    /// Locate a route by content. Relies on per-source buckets being
    /// lexicographically ordered, which enumeration guarantees.
    pub fn find_route_index(&self, nodes: &[u32]) -> Option<usize> {
        let bucket = self.by_source.get(nodes.first()?)?;
        bucket
            .binary_search_by(|&idx| self.routes[idx].as_slice().cmp(nodes))
            .ok()
            .map(|pos| bucket[pos])
    }

    /// One `source: n0>n1>...>MBS` line per route.
    pub fn dump(&self, mbs_id: u32) -> String {
        let mut out = String::new();
        for route in &self.routes {
            let parts: Vec<String> = route
                .iter()
                .map(|&n| if n == mbs_id { "MBS".to_string() } else { n.to_string() })
                .collect();
            out.push_str(&format!("{}: {}\n", route[0], parts.join(">")));
        }
        out
    }
}

/// Enumerate every simple route of at most `max_hops` edges from each
/// candidate site to the macro BS, with the default route ceiling.
pub fn enumerate_routes(
    topology: &NetworkTopology,
    max_hops: usize,
) -> Result<RouteSet, TopologyError> {
    enumerate_routes_bounded(topology, max_hops, DEFAULT_ROUTE_CEILING)
}

pub fn enumerate_routes_bounded(
    topology: &NetworkTopology,
    max_hops: usize,
    route_ceiling: usize,
) -> Result<RouteSet, TopologyError> {
    if max_hops < 1 {
        return Err(TopologyError::InvalidHopBound(max_hops));
    }
    let mut walker = RouteDfs {
        topology,
        mbs: topology.mbs_id(),
        route_ceiling,
        path: Vec::with_capacity(max_hops + 1),
        visited: vec![false; topology.node_count()],
        routes: Vec::new(),
    };
    for source in 0..topology.site_count as u32 {
        walker.visited[source as usize] = true;
        walker.path.push(source);
        let r = walker.explore(source, max_hops);
        walker.path.pop();
        walker.visited[source as usize] = false;
        r?;
    }
    Ok(RouteSet::from_routes(walker.routes))
}

/// Depth-first walk emitting simple routes. Neighbor lists are sorted, so
/// emission order is the lexicographic order of node sequences within each
/// source.
struct RouteDfs<'a> {
    topology: &'a NetworkTopology,
    mbs: u32,
    route_ceiling: usize,
    path: Vec<u32>,
    visited: Vec<bool>,
    routes: Vec<Vec<u32>>,
}

impl RouteDfs<'_> {
    fn explore(&mut self, node: u32, hops_left: usize) -> Result<(), TopologyError> {
        for i in 0..self.topology.adjacency[node as usize].len() {
            let next = self.topology.adjacency[node as usize][i];
            if next == self.mbs {
                if self.routes.len() == self.route_ceiling {
                    return Err(TopologyError::RouteCeilingExceeded { limit: self.route_ceiling });
                }
                let mut route = self.path.clone();
                route.push(self.mbs);
                self.routes.push(route);
            } else if hops_left > 1 && !self.visited[next as usize] {
                self.visited[next as usize] = true;
                self.path.push(next);
                let r = self.explore(next, hops_left - 1);
                self.path.pop();
                self.visited[next as usize] = false;
                r?;
            }
        }
        Ok(())
    }
}

/// Keep the routes whose relay nodes are all deployed. The source itself is
/// exempt (it is the node under consideration), and the macro BS never needs
/// deployment.
pub fn filter_routes(routes: &RouteSet, deployed: &BTreeSet<u32>) -> RouteSet {
    let kept: Vec<Vec<u32>> = routes
        .routes
        .iter()
        .filter(|route| RouteSet::relays(route).iter().all(|relay| deployed.contains(relay)))
        .cloned()
        .collect();
    RouteSet::from_routes(kept)
}
