//! mmWave channel model: LoS probability, LoS/NLoS mixture path loss and the
//! per-resource-block rates it implies for backhaul and access links.
//!
//! Path loss is kept as a linear gain factor in (0, 1]; decibel views are
//! derived. All functions are pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::RadioParams;

#[derive(Debug, Error, PartialEq)]
pub enum PropagationError {
    #[error("distance must be strictly positive, got {0} m")]
    NonPositiveDistance(f64),
}

/// Convert a linear gain factor to a (positive) loss in dB.
pub fn linear_to_db_loss(gain: f64) -> f64 {
    -10.0 * gain.log10()
}

/// Convert a loss in dB back to a linear gain factor.
pub fn db_loss_to_linear(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Probability that a link of length `d` meters is line-of-sight.
///
/// `min(18/d, 1) (1 - exp(-d/36)) + exp(-d/36)`; identically 1 for d <= 18.
pub fn los_probability(d: f64) -> Result<f64, PropagationError> {
    if !d.is_finite() || d <= 0.0 {
        return Err(PropagationError::NonPositiveDistance(d));
    }
    let decay = (-d / 36.0).exp();
    Ok((18.0 / d).min(1.0) * (1.0 - decay) + decay)
}

/// Mean mixture path loss at distance `d`, as a linear gain factor.
///
/// LoS and NLoS power laws share the free-space reference gain at 1 m and
/// are mixed by the LoS probability.
pub fn pathloss(d: f64, radio: &RadioParams) -> Result<f64, PropagationError> {
    let p_los = los_probability(d)?;
    let beta = radio.beta();
    Ok(p_los * beta * d.powf(-radio.los_exponent)
        + (1.0 - p_los) * beta * d.powf(-radio.nlos_exponent))
}

fn snr(gain: f64, antenna_gain: f64, radio: &RadioParams) -> f64 {
    let noise_w = radio.rb_bandwidth_hz * radio.noise_psd_w_per_hz();
    radio.per_rb_tx_power_w * gain * antenna_gain / noise_w
}

/// Achievable rate of one backhaul RB over a hop of `d` meters.
///
/// Beam-aligned directional antennas at both ends contribute the squared
/// main-lobe gain; the spectral efficiency is capped.
pub fn backhaul_unit_rate(d: f64, radio: &RadioParams) -> Result<f64, PropagationError> {
    let g = radio.main_lobe_gain_linear();
    let snr = snr(pathloss(d, radio)?, g * g, radio);
    Ok(radio.rb_bandwidth_hz * radio.se_max_bps_per_hz.min((1.0 + snr).log2()))
}

/// Achievable rate of one access RB for a cell of radius `cell_radius_m`,
/// evaluated at the cell edge (worst-case user position).
///
/// Only the base-station side is beamformed, so a single main-lobe gain
/// applies, and no spectral-efficiency cap unless `cap_access_se` is set.
pub fn access_unit_rate(cell_radius_m: f64, radio: &RadioParams) -> Result<f64, PropagationError> {
    let g = radio.main_lobe_gain_linear();
    let snr = snr(pathloss(cell_radius_m, radio)?, g, radio);
    let se = (1.0 + snr).log2();
    let se = if radio.cap_access_se { se.min(radio.se_max_bps_per_hz) } else { se };
    Ok(radio.rb_bandwidth_hz * se)
}

/// Everything the link model says about one distance, for debugging and
/// cross-checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub pathloss_linear: f64,
    pub pathloss_db: f64,
    pub snr_linear: f64,
    pub unit_rate_bps: f64,
}

impl LinkBudget {
    /// Budget of a backhaul hop of length `d`.
    pub fn backhaul(d: f64, radio: &RadioParams) -> Result<Self, PropagationError> {
        let gain = pathloss(d, radio)?;
        let g = radio.main_lobe_gain_linear();
        Ok(LinkBudget {
            distance_m: d,
            pathloss_linear: gain,
            pathloss_db: linear_to_db_loss(gain),
            snr_linear: snr(gain, g * g, radio),
            unit_rate_bps: backhaul_unit_rate(d, radio)?,
        })
    }

    /// Budget of an access link at the cell edge.
    pub fn access(cell_radius_m: f64, radio: &RadioParams) -> Result<Self, PropagationError> {
        let gain = pathloss(cell_radius_m, radio)?;
        let g = radio.main_lobe_gain_linear();
        Ok(LinkBudget {
            distance_m: cell_radius_m,
            pathloss_linear: gain,
            pathloss_db: linear_to_db_loss(gain),
            snr_linear: snr(gain, g, radio),
            unit_rate_bps: access_unit_rate(cell_radius_m, radio)?,
        })
    }
}
