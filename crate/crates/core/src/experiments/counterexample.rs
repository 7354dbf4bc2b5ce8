//! Pairs of band-limited signals with equal magnitudes on a sub-critical
//! lattice that are not equal up to sign.

use std::f64::consts::PI;

use serde::Serialize;

use crate::blcore::{l2, sample_on_lattice, BandLimitedSignal, FrequencySupport, Grid, SamplingLattice};
use crate::error::{Error, Result};

/// A counterexample together with its checks.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub h1: BandLimitedSignal,
    pub h2: BandLimitedSignal,
    pub lattice: SamplingLattice,
    pub checks: CounterexampleChecks,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleChecks {
    /// `max | |h1(X)| - |h2(X)| |`.
    pub magnitude_gap: f64,
    /// `min(|h1 - h2|, |h1 + h2|) / |h1|`.
    pub separation: f64,
    /// `max | h1^2 - h2^2 - u v |` over the grid.
    pub identity_error: f64,
}

impl CounterexampleChecks {
    pub fn passed(&self) -> bool {
        self.magnitude_gap <= 1e-10 && self.separation >= 0.5 && self.identity_error <= 1e-10
    }
}

/// Bins with `|xi_i| < 1/2` on every axis.
pub fn open_unit_band(grid: &Grid) -> Result<FrequencySupport> {
    let d = grid.dim();
    let mask = (0..grid.len()).map(|i| (0..d).all(|a| grid.freq(i)[a].abs() < 0.5)).collect();
    FrequencySupport::from_mask(grid, mask)
}

fn integral(x: f64) -> Option<usize> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0) && r >= 1.0).then_some(r as usize)
}

/// Checks that a tone at `s/2` lives on the grid along `axis` and that
/// `(2s)^{-1} Z` divides the period.
fn check_axis(grid: &Grid, axis: usize, s: f64) -> Result<()> {
    let l = grid.period()[axis];
    if integral(s * l / 2.0).is_none() {
        return Err(Error::OffGrid(format!(
            "tone s/2 = {} is not a multiple of 1/L = {} on axis {axis}",
            s / 2.0,
            1.0 / l
        )));
    }
    if integral(2.0 * s * l).is_none() {
        return Err(Error::OffGrid(format!(
            "spacing 1/(2s) = {} does not divide the period {l} on axis {axis}",
            0.5 / s
        )));
    }
    Ok(())
}

/// `(u, v) = (sin(pi s x), cos(pi s x))` along `axis`: `u v = sin(2 pi s x)/2`
/// vanishes on `(2s)^{-1} Z`.
fn quadrature(grid: &Grid, axis: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    (0..grid.len())
        .map(|i| {
            let x = grid.position(i)[axis];
            ((PI * s * x).sin(), (PI * s * x).cos())
        })
        .unzip()
}

fn finish(grid: &Grid, u: Vec<f64>, v: Vec<f64>, weight: &[f64], lattice: SamplingLattice) -> Result<Counterexample> {
    let support = open_unit_band(grid)?;
    let h1v: Vec<f64> = (0..grid.len()).map(|i| weight[i] * (u[i] + v[i]) / 2.0).collect();
    let h2v: Vec<f64> = (0..grid.len()).map(|i| weight[i] * (v[i] - u[i]) / 2.0).collect();
    let h1 = BandLimitedSignal::new(grid.clone(), h1v, support.clone())?;
    let h2 = BandLimitedSignal::new(grid.clone(), h2v, support)?;
    let a = sample_on_lattice(&h1, &lattice)?;
    let b = sample_on_lattice(&h2, &lattice)?;
    let magnitude_gap = a.iter().zip(&b).map(|(x, y)| (x.abs() - y.abs()).abs()).fold(0.0, f64::max);
    let diff: Vec<f64> = h1.values().iter().zip(h2.values()).map(|(x, y)| x - y).collect();
    let sum: Vec<f64> = h1.values().iter().zip(h2.values()).map(|(x, y)| x + y).collect();
    let separation = l2(&diff).min(l2(&sum)) / h1.norm();
    let identity_error = (0..grid.len())
        .map(|i| {
            let w2 = weight[i] * weight[i];
            (h1.values()[i].powi(2) - h2.values()[i].powi(2) - w2 * u[i] * v[i]).abs()
        })
        .fold(0.0, f64::max);
    let checks = CounterexampleChecks { magnitude_gap, separation, identity_error };
    Ok(Counterexample { h1, h2, lattice, checks })
}

/// `h1 = (u + v)/2`, `h2 = (v - u)/2` on a 1D grid, band-limited to the open
/// band `(-1/2, 1/2)`, with `|h1| = |h2|` on `X = (2s)^{-1} Z`.
pub fn counterexample_pair(s: f64, grid: &Grid) -> Result<Counterexample> {
    if grid.dim() != 1 {
        return Err(Error::Precondition("counterexample_pair needs a 1D grid".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Precondition(format!("s = {s} is not in (0, 1)")));
    }
    check_axis(grid, 0, s)?;
    let lattice = SamplingLattice::rectangular(grid, &[0.5 / s])?;
    let (u, v) = quadrature(grid, 0, s);
    finish(grid, u, v, &vec![1.0; grid.len()], lattice)
}

/// Smallest 1D grid for [`counterexample_pair`] with `samples` lattice
/// points (a multiple of 4) and `refine` grid points per lattice spacing.
pub fn counterexample_grid(s: f64, samples: usize, refine: usize) -> Result<Grid> {
    Grid::line(samples * refine, samples as f64 / (2.0 * s))
}

/// `g_j(x) = f(x_other) h_j(x_axis)` with `h_j` the 1D pair on the first
/// sub-critical axis and `f(y) = 1 + cos(2 pi y / L)/2`; equal magnitudes on
/// `D[2s]^{-1} Z^2`.
pub fn tensor_counterexample(s: [f64; 2], grid: &Grid) -> Result<Counterexample> {
    if grid.dim() != 2 {
        return Err(Error::Precondition("tensor_counterexample needs a 2D grid".into()));
    }
    let axis = (0..2)
        .find(|&a| s[a] < 1.0)
        .ok_or_else(|| Error::Precondition(format!("no sub-critical axis in s = {s:?}")))?;
    if !(s[axis] > 0.0) || s[1 - axis] <= 0.0 {
        return Err(Error::Precondition(format!("dilations must be positive, got {s:?}")));
    }
    check_axis(grid, axis, s[axis])?;
    let other = 1 - axis;
    let lo = grid.period()[other];
    if lo < 2.0 + 1e-12 {
        return Err(Error::Resolution(format!("period {lo} too short for a band-limited factor on axis {other}")));
    }
    let lattice = SamplingLattice::rectangular(grid, &[0.5 / s[0], 0.5 / s[1]])?;
    let (u, v) = quadrature(grid, axis, s[axis]);
    let weight: Vec<f64> =
        (0..grid.len()).map(|i| 1.0 + 0.5 * (2.0 * PI * grid.position(i)[other] / lo).cos()).collect();
    finish(grid, u, v, &weight, lattice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::recover_band_oracle;

    #[test]
    fn half_rate_pair() {
        let g = counterexample_grid(0.5, 16, 4).unwrap();
        let c = counterexample_pair(0.5, &g).unwrap();
        assert!(c.checks.passed(), "{:?}", c.checks);
        assert_eq!(c.lattice.len(), 16);
        let mags: Vec<f64> = sample_on_lattice(&c.h1, &c.lattice).unwrap().iter().map(|v| v.abs()).collect();
        let o = recover_band_oracle(&mags, &c.lattice, c.h1.support()).unwrap();
        assert!(o.candidates.len() >= 2);
    }

    #[test]
    fn near_critical_pair() {
        let g = counterexample_grid(15.0 / 16.0, 16, 8).unwrap();
        let c = counterexample_pair(15.0 / 16.0, &g).unwrap();
        assert!(c.checks.passed(), "{:?}", c.checks);
    }

    #[test]
    fn critical_lattice_brackets() {
        let g = counterexample_grid(0.5, 8, 4).unwrap();
        let c = counterexample_pair(0.5, &g).unwrap();
        let count = |lat: &SamplingLattice| {
            let mags: Vec<f64> = sample_on_lattice(&c.h1, lat).unwrap().iter().map(|v| v.abs()).collect();
            recover_band_oracle(&mags, lat, c.h1.support()).unwrap().candidates.len()
        };
        assert!(count(&c.lattice) >= 2);
        let critical = SamplingLattice::rectangular(&g, &[0.5]).unwrap();
        assert_eq!(count(&critical), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = counterexample_grid(0.5, 16, 4).unwrap();
        assert!(matches!(counterexample_pair(1.0, &g), Err(Error::Precondition(_))));
        assert!(matches!(counterexample_pair(0.3, &g), Err(Error::OffGrid(_))));
        let g2 = Grid::square(32, 8.0).unwrap();
        assert!(matches!(tensor_counterexample([1.0, 1.0], &g2), Err(Error::Precondition(_))));
    }

    #[test]
    fn tensor_pair_and_symmetry() {
        let g = Grid::square(32, 8.0).unwrap();
        let a = tensor_counterexample([1.0, 0.5], &g).unwrap();
        let b = tensor_counterexample([0.5, 1.0], &g).unwrap();
        assert!(a.checks.passed(), "{:?}", a.checks);
        assert!(b.checks.passed(), "{:?}", b.checks);
        for i in 0..32 {
            for j in 0..32 {
                let x = g.ravel([i, j]);
                let y = g.ravel([j, i]);
                assert!((a.h1.values()[x] - b.h1.values()[y]).abs() < 1e-12);
            }
        }
    }
}
