//! Run configuration read from a TOML file.
//!
//! ```toml
//! [model]
//! N = 40
//! J = 1.0
//! D = 4.1
//! E0 = 1000.0
//! V0 = 4.0
//!
//! [phase_diagram]
//! D_min = 2.1
//! D_max = 6.0
//! D_steps = 20
//! V0_min = -5.0
//! V0_max = 5.0
//! V0_steps = 20
//! ```

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::WavepacketConfig;
use crate::error::{Error, Result};
use crate::lattice::{Method, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub method: Method,
    /// Write a gnuplot script next to each table.
    #[serde(default)]
    pub plots: bool,
    #[serde(default)]
    pub exciton: ExcitonRun,
    #[serde(default)]
    pub biexciton_spectrum: SpectrumRun,
    #[serde(default)]
    pub phase_diagram: Option<PhaseDiagramRun>,
    #[serde(default)]
    pub poles: PolesRun,
    #[serde(default)]
    pub bic: BicRun,
    #[serde(default)]
    pub wavepacket: Option<WavepacketRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitonRun {
    /// Also run (±J, ±V0) with the magnitudes of `model`.
    #[serde(default)]
    pub sign_cases: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRun {
    /// Run both sgn(D) = sgn(V0) and the opposite sign of V0.
    #[serde(default)]
    pub sign_cases: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramRun {
    #[serde(rename = "D_min")]
    pub d_min: f64,
    #[serde(rename = "D_max")]
    pub d_max: f64,
    #[serde(rename = "D_steps")]
    pub d_steps: usize,
    #[serde(rename = "V0_min")]
    pub v0_min: f64,
    #[serde(rename = "V0_max")]
    pub v0_max: f64,
    #[serde(rename = "V0_steps")]
    pub v0_steps: usize,
}

impl PhaseDiagramRun {
    pub fn d_grid(&self) -> Vec<f64> {
        linspace(self.d_min, self.d_max, self.d_steps)
    }

    pub fn v0_grid(&self) -> Vec<f64> {
        linspace(self.v0_min, self.v0_max, self.v0_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolesRun {
    /// Largest K″ of the |R_b| scan.
    #[serde(rename = "K_doubleprime_max", default = "default_kpp_max")]
    pub kpp_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_kpp_max() -> f64 {
    2.0
}
fn default_points() -> usize {
    400
}

impl Default for PolesRun {
    fn default() -> Self {
        PolesRun {
            kpp_max: default_kpp_max(),
            points: default_points(),
        }
    }
}

impl PolesRun {
    /// K″ grid, excluding 0.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.points).map(|i| self.kpp_max * i as f64 / self.points as f64).collect()
    }

    pub fn k_primes() -> [f64; 2] {
        [0.0, FRAC_PI_2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BicRun {
    /// Dump |Ψ(r, s)| grids of the selected state.
    #[serde(default = "yes")]
    pub dump_amplitudes: bool,
    /// |E − E_b1| above this (in units of |J|) flags the summary row.
    #[serde(default = "default_bic_tol")]
    pub tolerance: f64,
}

fn yes() -> bool {
    true
}
fn default_bic_tol() -> f64 {
    1e-2
}

impl Default for BicRun {
    fn default() -> Self {
        BicRun {
            dump_amplitudes: true,
            tolerance: default_bic_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketRun {
    #[serde(flatten)]
    pub packet: WavepacketConfig,
    /// Replace `model.V0` with the calibrated value.
    #[serde(default)]
    pub calibrate: Option<CalibrationRun>,
    /// Times at which dense grids are written.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Also run the single-exciton packet on a 2N ring.
    #[serde(default)]
    pub exciton_comparator: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRun {
    #[serde(default = "half")]
    pub target: f64,
    #[serde(default = "default_t_measure")]
    pub t_measure: f64,
}

fn half() -> f64 {
    0.5
}
fn default_t_measure() -> f64 {
    25.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parameter(e.to_string()))?;
        cfg.model.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> std::io::Result<String> {
        std::fs::read_to_string(path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }
}

/// `steps` evenly spaced points from `a` to `b`; one step gives `a`.
pub fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect(),
    }
}
