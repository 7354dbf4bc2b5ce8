use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::fft::{fft_real, ifft_to_real};
use super::grid::Grid;
use super::lattice::{DiagonalLayout, SamplingLattice};
use super::signal::{BandLimitedSignal, FrequencySupport};
use crate::error::{Error, Result};

/// Relative ridge added to the normal equations of the dense path.
pub const RIDGE: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

/// Values of `sig` at the lattice sites, in lattice order.
pub fn sample_on_lattice(sig: &BandLimitedSignal, lat: &SamplingLattice) -> Result<Vec<f64>> {
    if sig.grid() != lat.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(lat.sites().iter().map(|&s| sig.values()[s]).collect())
}

/// The signal band-limited to `support` that best fits `samples` in the
/// least-squares sense; exact when the samples come from such a signal.
///
/// Rectangular lattices use an aliasing FFT; other lattices solve a ridge
/// regularized real least-squares system.
pub fn interpolate_from_lattice(
    samples: &[f64],
    lat: &SamplingLattice,
    support: &FrequencySupport,
    grid: &Grid,
) -> Result<BandLimitedSignal> {
    if lat.grid() != grid || support.mask().len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    if samples.len() != lat.len() {
        return Err(Error::ShapeMismatch { expected: lat.len(), got: samples.len() });
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let spec = match lat.layout() {
        Some(layout) => {
            let map = AliasMap::new(grid, layout, support.mask())?;
            map.spectrum_from_samples(grid, samples)
        }
        None => interpolate_dense(samples, lat, support, grid)?,
    };
    BandLimitedSignal::from_spectrum(grid.clone(), spec, support.clone())
}

/// Dense least-squares path, usable on any lattice. Exposed so the two
/// paths can be checked against each other.
pub fn interpolate_dense(
    samples: &[f64],
    lat: &SamplingLattice,
    support: &FrequencySupport,
    grid: &Grid,
) -> Result<Vec<Complex64>> {
    let basis = RealBasis::new(grid, support.mask());
    let a = basis.sampling_matrix(grid, lat);
    let p = a.ncols();
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    if p == 0 {
        return Ok(spec);
    }
    if a.nrows() < p {
        return Err(Error::NotStableSampling(format!("{} samples for {p} degrees of freedom", a.nrows())));
    }
    let mut ata = a.transpose() * &a;
    let eig = ata.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= RANK_TOL * max {
        return Err(Error::NotStableSampling(format!(
            "sampling system is rank deficient (eigenvalue ratio {:.2e})",
            min / max
        )));
    }
    let lambda = RIDGE * ata.trace() / p as f64;
    for i in 0..p {
        ata[(i, i)] += lambda;
    }
    let rhs = a.transpose() * DVector::from_column_slice(samples);
    let coef = ata
        .cholesky()
        .ok_or_else(|| Error::NotStableSampling("normal equations not positive definite".into()))?
        .solve(&rhs);
    basis.fill_spectrum(grid, coef.as_slice(), &mut spec);
    Ok(spec)
}

/// Real cosine/sine basis for the Hermitian-paired bins of a mask.
pub(crate) struct RealBasis {
    /// (bin, mirror bin, column has a sine partner).
    pairs: Vec<(usize, usize, bool)>,
}

impl RealBasis {
    pub(crate) fn new(grid: &Grid, mask: &[bool]) -> Self {
        let mut pairs = Vec::new();
        for flat in 0..grid.len() {
            if !mask[flat] {
                continue;
            }
            let k = grid.bins(flat);
            let mirror = grid.bin_index([-k[0], -k[1]]);
            if !mask[mirror] || mirror < flat {
                continue;
            }
            pairs.push((flat, mirror, mirror != flat));
        }
        RealBasis { pairs }
    }

    pub(crate) fn dof(&self) -> usize {
        self.pairs.iter().map(|p| if p.2 { 2 } else { 1 }).sum()
    }

    pub(crate) fn sampling_matrix(&self, grid: &Grid, lat: &SamplingLattice) -> DMatrix<f64> {
        let p = self.dof();
        let d = grid.dim();
        let mut a = DMatrix::zeros(lat.len(), p);
        for (r, &site) in lat.sites().iter().enumerate() {
            let x = grid.unravel(site);
            let mut c = 0;
            for &(flat, _, paired) in &self.pairs {
                let k = grid.bins(flat);
                let th: f64 = (0..d).map(|i| 2.0 * PI * (k[i] * x[i] as i64) as f64 / grid.shape()[i] as f64).sum();
                a[(r, c)] = th.cos();
                c += 1;
                if paired {
                    a[(r, c)] = th.sin();
                    c += 1;
                }
            }
        }
        a
    }

    fn fill_spectrum(&self, grid: &Grid, coef: &[f64], spec: &mut [Complex64]) {
        let n = grid.len() as f64;
        let mut c = 0;
        for &(flat, mirror, paired) in &self.pairs {
            if paired {
                let (a, b) = (coef[c], coef[c + 1]);
                spec[flat] = Complex64::new(a, -b) * (n / 2.0);
                spec[mirror] = Complex64::new(a, b) * (n / 2.0);
                c += 2;
            } else {
                spec[flat] = Complex64::new(coef[c] * n, 0.0);
                c += 1;
            }
        }
    }
}

/// How the bins of a mask alias onto the DFT of a rectangular lattice.
pub(crate) struct AliasMap {
    pub(crate) lattice_shape: Vec<usize>,
    /// Grid spectral index of each mask bin.
    pub(crate) bins: Vec<usize>,
    /// Lattice spectral index each bin aliases to.
    pub(crate) classes: Vec<usize>,
    phase: Vec<Complex64>,
    scale: f64,
}

impl AliasMap {
    /// Fails with `NotStableSampling` when two mask bins alias together.
    pub(crate) fn new(grid: &Grid, layout: &DiagonalLayout, mask: &[bool]) -> Result<Self> {
        let d = grid.dim();
        let m = &layout.counts;
        let mtot: usize = m.iter().product();
        let mut seen = vec![usize::MAX; mtot];
        let (mut bins, mut classes, mut phase) = (Vec::new(), Vec::new(), Vec::new());
        for flat in (0..grid.len()).filter(|&f| mask[f]) {
            let k = grid.bins(flat);
            let mut class = 0usize;
            let mut ph = 0.0;
            for i in 0..d {
                class = class * m[i] + k[i].rem_euclid(m[i] as i64) as usize;
                ph -= 2.0 * PI * (k[i] * layout.offsets[i] as i64) as f64 / grid.shape()[i] as f64;
            }
            if seen[class] != usize::MAX {
                let other = grid.bins(seen[class]);
                return Err(Error::NotStableSampling(format!(
                    "bins {:?} and {:?} alias on a {:?} lattice",
                    &other[..d],
                    &k[..d],
                    m
                )));
            }
            seen[class] = flat;
            bins.push(flat);
            classes.push(class);
            phase.push(Complex64::from_polar(1.0, ph));
        }
        Ok(AliasMap { lattice_shape: m.clone(), bins, classes, phase, scale: grid.len() as f64 / mtot as f64 })
    }

    pub(crate) fn spectrum_from_samples(&self, grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
        let y = fft_real(samples, &self.lattice_shape);
        let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
        for ((&b, &c), &p) in self.bins.iter().zip(&self.classes).zip(&self.phase) {
            spec[b] = y[c] * p * self.scale;
        }
        spec
    }
}

/// Orthogonal projection, in sample space, onto samples of signals
/// band-limited to a mask. Requires a rectangular lattice.
pub(crate) struct LatticeProjector {
    shape: Vec<usize>,
    keep: Vec<bool>,
}

impl LatticeProjector {
    pub(crate) fn new(grid: &Grid, lat: &SamplingLattice, mask: &[bool]) -> Result<Self> {
        let layout =
            lat.layout().ok_or_else(|| Error::Precondition("lattice projector needs a rectangular lattice".into()))?;
        let map = AliasMap::new(grid, layout, mask)?;
        let mut keep = vec![false; lat.len()];
        for &c in &map.classes {
            keep[c] = true;
        }
        Ok(LatticeProjector { shape: map.lattice_shape, keep })
    }

    pub(crate) fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut s = fft_real(y, &self.shape);
        for (c, &k) in s.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        ifft_to_real(&s, &self.shape).0
    }
}
