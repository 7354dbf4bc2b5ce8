//! Run configuration, read from TOML. Every key is optional; missing keys
//! take the defaults below.
//!
//! ```toml
//! seed = 0
//!
//! [grid]
//! n = [1024]          # points per axis, powers of two
//! period = [24.0]     # period per axis
//!
//! [frame]
//! kind = "meyer"      # or "curvelet"
//! levels = 4          # J for Meyer, jmax for curvelets
//! alpha = 0.1875      # Meyer oversampling parameter
//! tight_tol = 1e-8    # allowed |A - 1|, |B - 1| in frame-check
//!
//! [signal]
//! radius_fraction = 0.95   # band limit as a fraction of the working radius
//! envelope = 0.125         # Gaussian envelope width relative to the period
//!
//! [recovery]          # per-band solver, see RecoveryConfig
//! [stitch]            # sign matching, see StitchConfig
//!
//! [verify]
//! enabled = true
//! tolerance = 1e-5
//!
//! [probe]
//! deltas = [0.0, 1e-4, 1e-3, 1e-2]
//! trials = 5
//!
//! [counterexample]
//! s = 0.5
//! samples = 16        # lattice points per period, a multiple of 4
//! refine = 4          # grid points per lattice spacing
//!
//! [redundancy]
//! alpha1 = 0.09375
//! alpha2 = 0.1432394487827058
//! ```

use std::f64::consts::PI;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use sign_retrieval::recovery::RecoveryConfig;
use sign_retrieval::stitching::{PipelineConfig, StitchConfig};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub grid: GridConfig,
    pub frame: FrameConfig,
    pub signal: SignalConfig,
    pub recovery: RecoveryConfig,
    pub stitch: StitchConfig,
    pub verify: VerifyConfig,
    pub probe: ProbeConfig,
    pub counterexample: CounterexampleConfig,
    pub redundancy: RedundancyConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: Vec<usize>,
    pub period: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: vec![1024], period: vec![24.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Meyer,
    Curvelet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub kind: FrameKind,
    pub levels: usize,
    pub alpha: f64,
    pub tight_tol: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig { kind: FrameKind::Meyer, levels: 4, alpha: 3.0 / 16.0, tight_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub radius_fraction: f64,
    pub envelope: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig { radius_fraction: 0.95, envelope: 0.125 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub enabled: bool,
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { enabled: true, tolerance: 1e-5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub deltas: Vec<f64>,
    pub trials: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { deltas: vec![0.0, 1e-4, 1e-3, 1e-2], trials: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub s: f64,
    pub samples: usize,
    pub refine: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig { s: 0.5, samples: 16, refine: 4 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedundancyConfig {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for RedundancyConfig {
    fn default() -> Self {
        RedundancyConfig { alpha1: 3.0 / 32.0, alpha2: 9.0 / (20.0 * PI) }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }

    /// Pipeline settings with the run seed threaded into the solver.
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            recovery: RecoveryConfig { seed: self.seed, ..self.recovery.clone() },
            stitch: self.stitch.clone(),
            verify_tolerance: self.verify.enabled.then_some(self.verify.tolerance),
        }
    }
}
