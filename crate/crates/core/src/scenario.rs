//! Urban deployment scenario: candidate small-cell sites on a lamppost grid
//! plus a fixed macro base station, and the radio constants shared by every
//! link-budget computation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("grid dimensions must be positive (side {side_m} m, spacing {spacing_m} m)")]
    NonPositiveDimension { side_m: f64, spacing_m: f64 },
    #[error("spacing {spacing_m} m does not divide side {side_m} m into an integer lattice")]
    NonIntegerLattice { side_m: f64, spacing_m: f64 },
    #[error("site ids must be unique and dense in 0..{expected}")]
    BadSiteIds { expected: usize },
    #[error("candidate site {id} coincides with the macro BS position")]
    SiteAtMacroBs { id: u32 },
    #[error("access cell radius must be positive, got {0}")]
    NonPositiveCellRadius(f64),
    #[error("radio parameters invalid: {0}")]
    BadRadio(String),
}

/// A planar position, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_m: f64,
    pub y_m: f64,
}

impl Point {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Point { x_m, y_m }
    }
}

/// 2-D Euclidean distance in meters.
pub fn euclidean_distance(a: Point, b: Point) -> f64 {
    ((a.x_m - b.x_m).powi(2) + (a.y_m - b.y_m).powi(2)).sqrt()
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Radio constants for the mmWave link model.
///
/// Defaults target a dense-urban 73 GHz deployment with 2 MHz resource
/// blocks and 0.1 W transmit power per block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub carrier_frequency_hz: f64,
    pub rb_bandwidth_hz: f64,
    pub per_rb_tx_power_w: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub se_max_bps_per_hz: f64,
    pub main_lobe_gain_db: f64,
    pub los_exponent: f64,
    pub nlos_exponent: f64,
    /// Node pairs whose mean path loss exceeds this are not usable as
    /// backhaul edges.
    pub pathloss_threshold_db: f64,
    /// Apply the spectral-efficiency ceiling to access links as well as
    /// backhaul links. Off by default: user terminals are not assumed to
    /// share the relay modem's cap.
    #[serde(default)]
    pub cap_access_se: bool,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            carrier_frequency_hz: 73e9,
            rb_bandwidth_hz: 2e6,
            per_rb_tx_power_w: 0.1,
            noise_psd_dbm_per_hz: -174.0,
            se_max_bps_per_hz: 4.8,
            main_lobe_gain_db: 20.0,
            los_exponent: 2.0,
            nlos_exponent: 3.0,
            pathloss_threshold_db: 150.0,
            cap_access_se: false,
        }
    }
}

impl RadioParams {
    /// Free-space reference gain at 1 m, `(c / 4 pi f_c)^2`.
    pub fn beta(&self) -> f64 {
        const SPEED_OF_LIGHT: f64 = 299_792_458.0;
        (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * self.carrier_frequency_hz)).powi(2)
    }

    /// Noise power spectral density in linear W/Hz.
    pub fn noise_psd_w_per_hz(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_per_hz - 30.0) / 10.0)
    }

    /// Main lobe gain as a linear factor.
    pub fn main_lobe_gain_linear(&self) -> f64 {
        10f64.powf(self.main_lobe_gain_db / 10.0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if ![
            self.carrier_frequency_hz,
            self.rb_bandwidth_hz,
            self.per_rb_tx_power_w,
            self.se_max_bps_per_hz,
            self.los_exponent,
            self.pathloss_threshold_db,
        ]
        .into_iter()
        .all(positive)
        {
            return Err(ScenarioError::BadRadio(
                "powers, bandwidths and exponents must be strictly positive".into(),
            ));
        }
        if self.nlos_exponent < self.los_exponent {
            return Err(ScenarioError::BadRadio(format!(
                "NLoS exponent {} below LoS exponent {}",
                self.nlos_exponent, self.los_exponent
            )));
        }
        Ok(())
    }
}

/// A candidate small-cell location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
}

impl Site {
    pub fn position(&self) -> Point {
        Point::new(self.x_m, self.y_m)
    }
}

/// How lattice points are placed inside the square map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLayout {
    /// Sites at cell centers: offsets spacing/2, 3*spacing/2, ... A side of
    /// 250 m at 50 m spacing gives 25 sites, none at the origin.
    CellCenter,
    /// Sites at lattice corners 0, spacing, 2*spacing, ..., side; the corner
    /// coinciding with the macro BS is dropped.
    CornerAnchored,
}

/// Candidate sites, the macro BS and the radio constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sites: Vec<Site>,
    pub macro_bs: Point,
    pub access_cell_radius_m: f64,
    pub radio: RadioParams,
}

impl Scenario {
    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    /// Site positions indexed by id. Only valid on a validated scenario.
    pub fn positions_by_id(&self) -> Vec<Point> {
        let mut out = vec![Point::new(0.0, 0.0); self.sites.len()];
        for s in &self.sites {
            out[s.id as usize] = s.position();
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.sites.len();
        let mut seen = vec![false; n];
        for s in &self.sites {
            let idx = s.id as usize;
            if idx >= n || seen[idx] {
                return Err(ScenarioError::BadSiteIds { expected: n });
            }
            seen[idx] = true;
            if s.x_m == self.macro_bs.x_m && s.y_m == self.macro_bs.y_m {
                return Err(ScenarioError::SiteAtMacroBs { id: s.id });
            }
        }
        if !positive(self.access_cell_radius_m) {
            return Err(ScenarioError::NonPositiveCellRadius(self.access_cell_radius_m));
        }
        self.radio.validate()
    }
}

/// Build a square lamppost grid with the macro BS at the origin, sites in
/// row-major order by (y, then x).
pub fn build_manhattan_grid(
    side_m: f64,
    spacing_m: f64,
    radio: RadioParams,
    access_cell_radius_m: f64,
) -> Result<Scenario, ScenarioError> {
    build_manhattan_grid_layout(side_m, spacing_m, GridLayout::CellCenter, radio, access_cell_radius_m)
}

pub fn build_manhattan_grid_layout(
    side_m: f64,
    spacing_m: f64,
    layout: GridLayout,
    radio: RadioParams,
    access_cell_radius_m: f64,
) -> Result<Scenario, ScenarioError> {
    if !positive(side_m) || !positive(spacing_m) {
        return Err(ScenarioError::NonPositiveDimension { side_m, spacing_m });
    }
    let cells = side_m / spacing_m;
    if (cells - cells.round()).abs() > 1e-9 || cells.round() < 1.0 {
        return Err(ScenarioError::NonIntegerLattice { side_m, spacing_m });
    }
    let cells = cells.round() as usize;

    let macro_bs = Point::new(0.0, 0.0);
    let mut sites = Vec::new();
    let mut push = |x: f64, y: f64| {
        if x == macro_bs.x_m && y == macro_bs.y_m {
            return; // the origin hosts the macro BS
        }
        let id = sites.len() as u32;
        sites.push(Site { id, x_m: x, y_m: y });
    };
    match layout {
        GridLayout::CellCenter => {
            for iy in 0..cells {
                for ix in 0..cells {
                    push(spacing_m * (ix as f64 + 0.5), spacing_m * (iy as f64 + 0.5));
                }
            }
        }
        GridLayout::CornerAnchored => {
            for iy in 0..=cells {
                for ix in 0..=cells {
                    push(spacing_m * ix as f64, spacing_m * iy as f64);
                }
            }
        }
    }

    let scenario = Scenario { sites, macro_bs, access_cell_radius_m, radio };
    scenario.validate()?;
    Ok(scenario)
}
