//! JSON file formats accepted by the CLI.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rabsplan_core::harness::ScenarioSource;
use rabsplan_core::planner::ProblemInstance;
use rabsplan_core::traffic::TrafficModel;

/// A single planning instance: scenario, one traffic draw and the budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub scenario: ScenarioSource,
    pub traffic: TrafficModel,
    pub rabs_budget: usize,
    pub rb_budget: u32,
    pub max_hops: usize,
}

impl InstanceConfig {
    pub fn build(&self, seed_override: Option<u64>) -> Result<ProblemInstance> {
        let scenario = self.scenario.build().context("scenario invalid")?;
        let mut traffic = self.traffic;
        if let Some(seed) = seed_override {
            traffic.seed = seed;
        }
        ProblemInstance::from_scenario(
            &scenario,
            &traffic,
            self.rabs_budget,
            self.rb_budget,
            self.max_hops,
        )
        .context("failed to build the problem instance")
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}
