//! Exhaustive search over sign patterns.

use nalgebra::{DMatrix, DVector};

use super::ap::orthonormal_sample_basis;
use super::ZERO_THRESHOLD;
use crate::blcore::{interpolate_from_lattice, BandLimitedSignal, FrequencySupport, SamplingLattice};
use crate::error::{Error, Result};

/// Largest number of nonzero samples the oracle will enumerate.
pub const ORACLE_MAX_SAMPLES: usize = 22;
/// Relative projection residual below which a sign pattern is consistent.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct OracleOutcome {
    /// Consistent signals, each with its first significant sample positive.
    pub candidates: Vec<BandLimitedSignal>,
    /// Residual of each candidate's sign pattern.
    pub residuals: Vec<f64>,
    /// Signed samples of each candidate.
    pub samples: Vec<Vec<f64>>,
    /// Smallest residual over all patterns.
    pub best_residual: f64,
}

/// Every signal band-limited to `support` whose samples on `lat` have the
/// given magnitudes, one representative per global sign.
///
/// Patterns are scored by `|y - Q Q^T y| / |y|` with `Q` an orthonormal
/// basis of sampled band-limited signals; consecutive patterns differ in a
/// single sign (Gray code), so `Q^T y` is updated in `O(rank)`.
pub fn recover_band_oracle(mags: &[f64], lat: &SamplingLattice, support: &FrequencySupport) -> Result<OracleOutcome> {
    let grid = lat.grid();
    if mags.len() != lat.len() {
        return Err(Error::ShapeMismatch { expected: lat.len(), got: mags.len() });
    }
    if let Some(i) = mags.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Precondition(format!("magnitude {i} is negative or non-finite")));
    }
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let nz: Vec<usize> = (0..mags.len()).filter(|&i| mags[i] >= ZERO_THRESHOLD * max && max > 0.0).collect();
    if nz.len() > ORACLE_MAX_SAMPLES {
        return Err(Error::OracleInfeasible(nz.len()));
    }
    if nz.is_empty() {
        let zero = BandLimitedSignal::zeros(grid.clone(), support.clone());
        return Ok(OracleOutcome {
            candidates: vec![zero],
            residuals: vec![0.0],
            samples: vec![vec![0.0; mags.len()]],
            best_residual: 0.0,
        });
    }
    let q = orthonormal_sample_basis(grid, lat, support.mask())?;
    let rows: DMatrix<f64> = q.select_rows(&nz);
    // The first significant sample is pinned positive.
    let pinned = nz.iter().position(|&i| mags[i] >= 1e-3 * max).expect("max sample is significant");
    let free: Vec<usize> = (0..nz.len()).filter(|&k| k != pinned).collect();
    let mut y: Vec<f64> = nz.iter().map(|&i| mags[i]).collect();
    let y2: f64 = y.iter().map(|v| v * v).sum();
    let mut c: DVector<f64> = rows.transpose() * DVector::from_column_slice(&y);

    let score = |c: &DVector<f64>| ((1.0 - c.norm_squared() / y2).max(0.0)).sqrt();
    let mut hits: Vec<Vec<f64>> = Vec::new();
    let mut best = score(&c);
    if best <= 100.0 * ORACLE_TOL {
        hits.push(y.clone());
    }
    let total: u64 = 1u64 << free.len();
    for step in 1..total {
        let k = free[step.trailing_zeros() as usize];
        let old = y[k];
        y[k] = -old;
        c.axpy(-2.0 * old, &rows.row(k).transpose(), 1.0);
        let r = score(&c);
        best = best.min(r);
        if r <= 100.0 * ORACLE_TOL {
            hits.push(y.clone());
        }
    }

    let mut out = OracleOutcome { candidates: vec![], residuals: vec![], samples: vec![], best_residual: best };
    for h in hits {
        // Recompute exactly to shed accumulated update error.
        let mut full = vec![0.0; mags.len()];
        for (k, &i) in nz.iter().enumerate() {
            full[i] = h[k];
        }
        let fv = DVector::from_column_slice(&full);
        let proj = &q * (q.transpose() * &fv);
        let r = (&fv - proj).norm() / fv.norm();
        if r <= ORACLE_TOL {
            out.candidates.push(interpolate_from_lattice(&full, lat, support, grid)?);
            out.residuals.push(r);
            out.samples.push(full);
        }
    }
    if out.candidates.is_empty() {
        return Err(Error::InconsistentMagnitudes(best));
    }
    Ok(out)
}
