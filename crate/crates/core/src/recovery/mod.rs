//! Per-band sign retrieval: recover a real band-limited `g` up to a global
//! sign from `|g|` on a sign-blind lattice.
//!
//! [`recover_band_oracle`] enumerates every sign pattern and is the ground
//! truth for small instances. [`recover_band`] is the scalable solver:
//!
//! 1. `g^2` is band-limited to `F + F`, which the lattice resolves, so the
//!    squared magnitudes determine `g^2` on the whole grid exactly.
//! 2. Along every grid line `g^2` is evaluated on a finer grid. Each local
//!    minimum is fitted by a parabola; a vertex at (numerically) zero height
//!    is a sign change of `g`, a clearly positive vertex is a touch point.
//! 3. Sign changes are attached to grid edges and propagated over a maximum
//!    spanning tree weighted by `min |g|` of the edge endpoints, so unreliable
//!    edges near small values are avoided when the graph has cycles.
//! 4. Alternating projections polish the resulting sample signs. If the
//!    residual stays above tolerance, flips of the least certain tree edges
//!    are enumerated, then randomized restarts are tried.

mod ap;
mod oracle;
mod tracking;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blcore::{
    canonical_sign, interpolate_from_lattice, l2, sample_on_lattice, BandLimitedSignal, FrequencySupport, Grid,
    SamplingLattice,
};
use crate::error::{Error, Result};
use crate::frames::SemiDiscreteFrame;
use crate::sampling::sumset_mask;

pub(crate) use ap::Projector;
pub use oracle::{recover_band_oracle, OracleOutcome, ORACLE_MAX_SAMPLES, ORACLE_TOL};

/// Samples below this fraction of the largest magnitude count as zero.
pub const ZERO_THRESHOLD: f64 = 1e-9;

/// Passes of single-edge flips tried on noisy data.
const GREEDY_SWEEPS: usize = 4;

/// Unsigned samples of one band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandMeasurement {
    pub label: String,
    /// Lattice generator, row-major.
    pub generator: Vec<f64>,
    pub shift: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// `|F_lambda|^{-1/2}`.
    pub normalization: f64,
}

/// Unsigned frame samples: the input of the inverse problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub grid: Grid,
    pub bands: Vec<BandMeasurement>,
}

impl BandMeasurement {
    pub fn lattice(&self, grid: &Grid) -> Result<SamplingLattice> {
        let d = grid.dim();
        if self.generator.len() != d * d {
            return Err(Error::ShapeMismatch { expected: d * d, got: self.generator.len() });
        }
        let g = DMatrix::from_row_slice(d, d, &self.generator);
        let lat = SamplingLattice::new(grid, g, Some(self.shift.clone()))?;
        if lat.len() != self.magnitudes.len() {
            return Err(Error::ShapeMismatch { expected: lat.len(), got: self.magnitudes.len() });
        }
        Ok(lat)
    }
}

impl MeasurementSet {
    /// `|f * psi_lambda|` on each band's lattice.
    pub fn measure(f: &BandLimitedSignal, frame: &SemiDiscreteFrame, lattices: &[SamplingLattice]) -> Result<Self> {
        if lattices.len() != frame.len() {
            return Err(Error::ShapeMismatch { expected: frame.len(), got: lattices.len() });
        }
        let parts = crate::frames::analyze(f, frame)?;
        let grid = frame.grid();
        let bands = frame
            .bands()
            .iter()
            .zip(parts)
            .zip(lattices)
            .map(|((b, part), lat)| {
                let samples = sample_on_lattice(&part, lat)?;
                Ok(BandMeasurement {
                    label: b.label.clone(),
                    generator: lat.generator().transpose().as_slice().to_vec(),
                    shift: lat.shift().to_vec(),
                    magnitudes: samples.iter().map(|v| v.abs()).collect(),
                    normalization: b.support.measure(grid).powf(-0.5),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasurementSet { grid: grid.clone(), bands })
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bands {
            if let Some(i) = b.magnitudes.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Precondition(format!("band {}: magnitude {i} is negative or non-finite", b.label)));
            }
        }
        Ok(())
    }

    pub fn lattices(&self) -> Result<Vec<SamplingLattice>> {
        self.bands.iter().map(|b| b.lattice(&self.grid)).collect()
    }
}

/// Per-sample signs in `{-1, 0, +1}`, zero exactly where the magnitude is
/// below the zero threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignPattern {
    pub signs: Vec<i8>,
}

impl SignPattern {
    pub fn from_samples(values: &[f64], magnitudes: &[f64]) -> SignPattern {
        let max = magnitudes.iter().cloned().fold(0.0, f64::max);
        let signs = values
            .iter()
            .zip(magnitudes)
            .map(|(v, m)| {
                if *m < ZERO_THRESHOLD * max || max == 0.0 {
                    0
                } else if *v < 0.0 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        SignPattern { signs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub seed: u64,
    /// Random sign initializations tried after the deterministic stages.
    pub restarts: usize,
    /// Acceptance bound on the sample-space projection residual.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Most uncertain tree edges whose flips are enumerated.
    pub gray_limit: usize,
    /// Fine-grid factor along lines; chosen from the band's extent if unset.
    pub upsample: Option<usize>,
    /// Return the best candidate instead of failing when nothing meets
    /// `residual_tol` (for noisy data).
    pub accept_best: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            seed: 0,
            restarts: 32,
            residual_tol: 1e-8,
            max_iterations: 500,
            gray_limit: 10,
            upsample: None,
            accept_best: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandDiagnostics {
    pub label: String,
    /// Which stage produced the answer: "zero", "tracking", "gray",
    /// "tracking@<threshold>" or "restart".
    pub stage: String,
    /// `|y - P y| / |b|` for the signed samples `y`.
    pub residual: f64,
    /// `| |g(X)| - b | / |b|` for the returned signal.
    pub magnitude_residual: f64,
    /// Spectral energy of the output outside `F`, relative.
    pub out_of_band: f64,
    pub restarts: usize,
    pub gray_edges: usize,
    pub ambiguous: bool,
}

/// Recovers the canonical representative of `{g, -g}` from `|g|` on `lat`.
pub fn recover_band(
    mags: &[f64],
    lat: &SamplingLattice,
    support: &FrequencySupport,
    config: &RecoveryConfig,
) -> Result<(BandLimitedSignal, BandDiagnostics)> {
    let grid = lat.grid();
    if mags.len() != lat.len() {
        return Err(Error::ShapeMismatch { expected: lat.len(), got: mags.len() });
    }
    if let Some(i) = mags.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Precondition(format!("magnitude {i} is negative or non-finite")));
    }
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let b: Vec<f64> = mags.iter().map(|&m| if m < ZERO_THRESHOLD * max { 0.0 } else { m }).collect();
    let mut diag = BandDiagnostics {
        label: String::new(),
        stage: "zero".into(),
        residual: 0.0,
        magnitude_residual: 0.0,
        out_of_band: 0.0,
        restarts: 0,
        gray_edges: 0,
        ambiguous: false,
    };
    if max == 0.0 {
        return Ok((BandLimitedSignal::zeros(grid.clone(), support.clone()), diag));
    }
    let proj = Projector::new(grid, lat, support.mask())?;
    let bnorm = l2(&b);
    let tol = config.residual_tol;

    let mut best: Option<(f64, Vec<f64>)> = None;

    let sum = sumset_mask(grid, support.mask());
    let scanned = match lat.layout() {
        Some(layout) => tracking::scan(grid, layout, support.mask(), &sum, &b, config.upsample).ok(),
        None => None,
    };
    if let Some(sc) = &scanned {
        let tr = sc.signs(lat, &b, tracking::CROSSING, false);
        let (res, y) = ap::polish(&b, tr.site_signs.clone(), &proj, config.max_iterations, bnorm);
        diag.stage = "tracking".into();
        diag.gray_edges = tr.gray.len();
        consider(res, y, &mut best);
        if best.as_ref().unwrap().0 > tol && !tr.gray.is_empty() {
            let limit = tr.gray.len().min(config.gray_limit);
            if let Some((res, y, ambiguous)) =
                ap::enumerate_flips(&b, &tr, limit, &proj, config.max_iterations, bnorm, tol)
            {
                diag.stage = "gray".into();
                diag.ambiguous = ambiguous;
                consider(res, y, &mut best);
            }
        }
        // Noise lifts the minima of g^2 at true crossings; retry with
        // coarser crossing thresholds.
        let mut crossing = tracking::CROSSING * 4.0;
        let top = sc.max_ratio();
        let mut winner = None;
        while best.as_ref().unwrap().0 > tol && crossing <= top {
            let tr = sc.signs(lat, &b, crossing, false);
            let (res, y) = ap::polish(&b, tr.site_signs.clone(), &proj, config.max_iterations, bnorm);
            if res < best.as_ref().unwrap().0 {
                diag.stage = format!("tracking@{crossing}");
                diag.gray_edges = tr.gray.len();
                consider(res, y, &mut best);
                winner = Some(crossing);
            }
            crossing *= 4.0;
        }
        if let Some(crossing) = winner.filter(|_| best.as_ref().unwrap().0 > tol) {
            let tr = sc.signs(lat, &b, crossing, true);
            if !tr.gray.is_empty() {
                let limit = tr.gray.len().min(config.gray_limit);
                if let Some((res, y, ambiguous)) =
                    ap::enumerate_flips(&b, &tr, limit, &proj, config.max_iterations, bnorm, tol)
                {
                    if res < best.as_ref().unwrap().0 {
                        diag.stage = format!("{}+gray", diag.stage);
                        diag.ambiguous = ambiguous;
                        consider(res, y, &mut best);
                    }
                }
            }
            if best.as_ref().unwrap().0 > tol {
                let start: Vec<f64> =
                    best.as_ref().unwrap().1.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
                let (res, y) =
                    ap::greedy_flips(&b, start, &tr.candidates, &proj, config.max_iterations, bnorm, GREEDY_SWEEPS);
                if res < best.as_ref().unwrap().0 {
                    diag.stage = format!("{}+greedy", diag.stage);
                    consider(res, y, &mut best);
                }
            }
        }
    }
    if best.as_ref().is_none_or(|(r, _)| *r > tol) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (res, y, used) = ap::restarts(&b, &proj, config.restarts, config.max_iterations, bnorm, tol, &mut rng);
        diag.restarts = used;
        if best.as_ref().is_none_or(|(r, _)| res < *r) {
            diag.stage = "restart".into();
            consider(res, y, &mut best);
        }
    }
    let (res, mut y) = best.expect("at least one stage ran");
    diag.residual = res;
    if res > tol && !config.accept_best {
        return Err(Error::RecoveryFailed { label: String::new(), best: res });
    }
    let s = canonical_sign(&y);
    y.iter_mut().for_each(|v| *v *= s);
    let g = interpolate_from_lattice(&y, lat, support, grid)?;
    let back = sample_on_lattice(&g, lat)?;
    let diff: f64 = back.iter().zip(&b).map(|(v, m)| (v.abs() - m).powi(2)).sum::<f64>().sqrt();
    diag.magnitude_residual = diff / bnorm;
    diag.out_of_band = out_of_band(&g, support)?;
    Ok((g, diag))
}

fn consider(res: f64, y: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>) {
    if best.as_ref().is_none_or(|(r, _)| res < *r) {
        *best = Some((res, y));
    }
}

fn out_of_band(g: &BandLimitedSignal, support: &FrequencySupport) -> Result<f64> {
    let spec = crate::blcore::forward_spectrum(g)?;
    let (mut tot, mut out) = (0.0, 0.0);
    for (c, &m) in spec.iter().zip(support.mask()) {
        tot += c.norm_sqr();
        if !m {
            out += c.norm_sqr();
        }
    }
    Ok(if tot > 0.0 { out / tot } else { 0.0 })
}
