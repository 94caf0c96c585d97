//! Spatial traffic demands: independent lognormal draws per candidate site,
//! parameterized so the linear-scale mean equals `mu_bps` regardless of the
//! spread.
//!
//! Sampling is keyed by (seed, site id), so a site's demand does not depend
//! on enumeration order and scenarios can grow without reshuffling existing
//! draws.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;

/// Lognormal demand model: `D = exp(N(ln mu - sigma^2 / 2, sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    pub mu_bps: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for TrafficModel {
    fn default() -> Self {
        // 150 Mbps mean puts typical instances near the demand/capacity
        // crossover where placement decisions matter.
        TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 0 }
    }
}

/// Per-site offered traffic in bps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector {
    pub demands_bps: BTreeMap<u32, f64>,
}

impl DemandVector {
    pub fn get(&self, site: u32) -> f64 {
        self.demands_bps.get(&site).copied().unwrap_or(0.0)
    }

    pub fn total_bps(&self) -> f64 {
        self.demands_bps.values().sum()
    }

    /// Two-column CSV, demands in Mbps.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("site_id,demand_mbps\n");
        for (id, bps) in &self.demands_bps {
            let _ = writeln!(out, "{},{}", id, bps / 1e6);
        }
        out
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and a stream index.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut state = seed ^ stream.wrapping_add(1).wrapping_mul(0xD1B54A32D192ED03);
    splitmix64(&mut state)
}

fn site_rng(seed: u64, site: u32) -> ChaCha12Rng {
    let mut state = seed ^ (u64::from(site).wrapping_add(1)).wrapping_mul(0x9E3779B97F4A7C15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

fn uniform_open_closed(rng: &mut impl Rng) -> f64 {
    // 53-bit mantissa draw mapped to (0, 1]
    ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64
}

/// One standard normal draw via Box-Muller.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1 = uniform_open_closed(rng);
    let u2 = ((rng.next_u64() >> 11) as f64) / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Draw one demand per candidate site. Deterministic in (model.seed, site id).
pub fn sample_demands(model: &TrafficModel, scenario: &Scenario) -> DemandVector {
    let mut demands_bps = BTreeMap::new();
    let location = model.mu_bps.ln() - 0.5 * model.sigma * model.sigma;
    for site in &scenario.sites {
        let d = if model.sigma == 0.0 {
            model.mu_bps
        } else {
            let z = standard_normal(&mut site_rng(model.seed, site.id));
            (location + model.sigma * z).exp()
        };
        demands_bps.insert(site.id, d);
    }
    DemandVector { demands_bps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RadioParams, build_manhattan_grid};

    fn grid(side: f64) -> Scenario {
        build_manhattan_grid(side, 50.0, RadioParams::default(), 25.0).unwrap()
    }

    /// Raw per-site draws, bypassing scenario construction, for large-sample
    /// statistics.
    fn draws(model: &TrafficModel, n: u32) -> Vec<f64> {
        let location = model.mu_bps.ln() - 0.5 * model.sigma * model.sigma;
        (0..n)
            .map(|i| (location + model.sigma * standard_normal(&mut site_rng(model.seed, i))).exp())
            .collect()
    }

    #[test]
    fn zero_sigma_returns_mu_exactly() {
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 0.0, seed: 7 };
        let d = sample_demands(&model, &grid(250.0));
        assert_eq!(d.demands_bps.len(), 25);
        assert!(d.demands_bps.values().all(|&v| v == 1.5e8));
    }

    #[test]
    fn sample_mean_matches_mu() {
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 42 };
        let xs = draws(&model, 100_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - model.mu_bps).abs() < 0.02 * model.mu_bps, "mean {mean:.3e}");
    }

    #[test]
    fn sample_median_matches_lognormal_median() {
        // closed form: exp(location) = mu * exp(-sigma^2 / 2)
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 42 };
        let mut xs = draws(&model, 100_001);
        xs.sort_by(f64::total_cmp);
        let median = xs[xs.len() / 2];
        let expected = model.mu_bps * (-0.5f64).exp();
        assert!((median - expected).abs() < 0.02 * expected, "median {median:.3e}");
    }

    #[test]
    fn determinism_bit_identical() {
        let model = TrafficModel { mu_bps: 1.5e8, sigma: 1.0, seed: 9 };
        let s = grid(250.0);
        assert_eq!(sample_demands(&model, &s), sample_demands(&model, &s));
    }

    #[test]
    fn site_order_does_not_change_draws() {
        let model = TrafficModel::default();
        let s = grid(150.0);
        let mut shuffled = s.clone();
        shuffled.sites.reverse();
        let a = sample_demands(&model, &s);
        let b = sample_demands(&model, &shuffled);
        assert_eq!(a, b);
    }

    #[test]
    fn spread_increases_with_sigma() {
        let mut prev_var = -1.0;
        for sigma in [0.5, 1.0, 1.5] {
            let model = TrafficModel { mu_bps: 1.5e8, sigma, seed: 3 };
            let xs = draws(&model, 10_000);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            assert!(var > prev_var, "variance not increasing at sigma {sigma}");
            prev_var = var;
        }
    }

    #[test]
    fn csv_shape() {
        let model = TrafficModel { mu_bps: 2e8, sigma: 0.0, seed: 0 };
        let d = sample_demands(&model, &grid(100.0));
        let csv = d.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("site_id,demand_mbps"));
        assert_eq!(lines.next(), Some("0,200"));
    }
}
