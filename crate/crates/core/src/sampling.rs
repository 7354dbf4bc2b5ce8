//! Sign-blind sampling lattices `(M^T)^{-1} D[2s]^{-1} Z^d` for compact
//! spectral supports, densities, box fitting, and the per-band lattices used
//! with Meyer and curvelet frames.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::blcore::fft::{fft_real, ifft_to_real};
use crate::blcore::{containment_violation, fit_box, AliasMap, FrequencySupport, Grid, SamplingLattice};
use crate::error::{Error, Result};
use crate::frames::SemiDiscreteFrame;

/// Largest Meyer oversampling parameter for which the lattices are sign-blind.
pub const MEYER_ALPHA_MAX: f64 = 3.0 / 16.0;

/// A support together with a containing box `M[-1/2,1/2]^d` and dilations.
#[derive(Clone, Debug)]
pub struct SignBlindSpec {
    support: FrequencySupport,
    m: DMatrix<f64>,
    s: Vec<f64>,
}

impl SignBlindSpec {
    pub fn new(grid: &Grid, support: FrequencySupport, m: DMatrix<f64>, s: Vec<f64>) -> Result<Self> {
        let d = grid.dim();
        if m.nrows() != d || m.ncols() != d || s.len() != d {
            return Err(Error::ShapeMismatch { expected: d, got: s.len() });
        }
        for (axis, &si) in s.iter().enumerate() {
            if !(si >= 1.0) {
                return Err(Error::SubCritical { axis, s: si });
            }
        }
        if let Some((bin, value)) = containment_violation(grid, support.mask(), &m)? {
            return Err(Error::NotContained { bin, value });
        }
        Ok(SignBlindSpec { support, m, s })
    }

    pub fn support(&self) -> &FrequencySupport {
        &self.support
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// `(M^T)^{-1} D[2s]^{-1}`.
    pub fn generator(&self) -> Result<DMatrix<f64>> {
        let mt_inv = self.m.transpose().try_inverse().ok_or(Error::Singular(self.m.determinant()))?;
        let d2s = DMatrix::from_diagonal(&DVector::from_iterator(self.s.len(), self.s.iter().map(|s| 0.5 / s)));
        Ok(mt_inv * d2s)
    }
}

/// Builds `X = (M^T)^{-1} D[2s]^{-1} Z^d` on the grid.
///
/// Besides commensurability, the lattice must separate the bins of `F` and
/// of `F + F` modulo its dual lattice. In the continuum this follows from
/// `s_i >= 1`; on the grid a support touching the box boundary can violate
/// it, which is reported as `NotSignBlind`.
pub fn make_sign_blind_lattice(spec: &SignBlindSpec, grid: &Grid) -> Result<SamplingLattice> {
    let lat = SamplingLattice::new(grid, spec.generator()?, None)?;
    let mask = spec.support.mask();
    let sum = sumset_mask(grid, mask);
    for (name, m) in [("F", mask), ("F+F", &sum[..])] {
        if let Some(msg) = alias_collision(grid, &lat, m) {
            return Err(Error::NotSignBlind(format!("{name}: {msg}")));
        }
    }
    Ok(lat)
}

/// Describes the first pair of mask bins that differ by a dual-lattice vector.
fn alias_collision(grid: &Grid, lat: &SamplingLattice, mask: &[bool]) -> Option<String> {
    if let Some(layout) = lat.layout() {
        return AliasMap::new(grid, layout, mask).err().map(|e| e.to_string());
    }
    let d = grid.dim();
    let gt = lat.generator().transpose();
    let mut seen = HashSet::new();
    for flat in (0..grid.len()).filter(|&f| mask[f]) {
        let xi = grid.freq(flat);
        let c = &gt * DVector::from_column_slice(&xi[..d]);
        let key: Vec<i64> =
            c.iter().map(|v| ((v.rem_euclid(1.0) * 1e6).round() as i64).rem_euclid(1_000_000)).collect();
        if !seen.insert(key) {
            return Some(format!("bin {:?} aliases with another", &grid.bins(flat)[..d]));
        }
    }
    None
}

/// Mask of `F + F` (modulo the grid period), via an FFT autocorrelation.
pub fn sumset_mask(grid: &Grid, mask: &[bool]) -> Vec<bool> {
    let ind: Vec<f64> = mask.iter().map(|&b| b as u8 as f64).collect();
    // Spectral bins are indexed like grid points; the DFT of the indicator
    // squared gives its circular self-convolution.
    let mut s = fft_real(&ind, grid.shape());
    for c in s.iter_mut() {
        *c = *c * *c;
    }
    let (conv, _) = ifft_to_real(&s, grid.shape());
    conv.iter().map(|&v| v > 0.5).collect()
}

/// Points per unit volume of the lattice, `1/|det G| = 2^d |det M| prod s_j`.
pub fn lattice_density(lat: &SamplingLattice) -> f64 {
    lat.density()
}

/// `2^d |det M| prod s_j`.
pub fn critical_density(m: &DMatrix<f64>, s: &[f64]) -> f64 {
    2f64.powi(m.nrows() as i32) * m.determinant().abs() * s.iter().product::<f64>()
}

/// Smallest `orientation * diag(c)` containing `F`, up to one bin of slack
/// per axis.
pub fn fit_bounding_box(grid: &Grid, support: &FrequencySupport, orientation: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    fit_box(grid, support.mask(), orientation)
}

pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Smallest `c' >= c` whose lattice spacing `1/(2c')` is a power-of-two
/// number of grid steps on `axis`; returns `(c', steps)`.
pub fn commensurate_constant(c: f64, grid: &Grid, axis: usize) -> Result<(f64, usize)> {
    let h = grid.spacing(axis);
    let limit = 1.0 / (2.0 * c);
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!("grid step {h} exceeds lattice spacing {limit} on axis {axis}")));
    }
    let mut q = 1usize;
    while grid.shape()[axis].is_multiple_of(2 * q) && (2 * q) as f64 * h <= limit * (1.0 + 1e-12) {
        q *= 2;
    }
    Ok((1.0 / (2.0 * q as f64 * h), q))
}

/// True iff `alpha <= 3/16`.
pub fn meyer_alpha_check(alpha: f64) -> bool {
    alpha > 0.0 && alpha <= MEYER_ALPHA_MAX
}

/// Box constant `c_j = 2^{j-1} / alpha` of the lattice at level `j`.
pub fn meyer_lattice_constant(alpha: f64, j: i32) -> f64 {
    2f64.powi(j - 1) / alpha
}

/// Inverse of [`meyer_lattice_constant`].
pub fn meyer_alpha_from_constant(c: f64, j: i32) -> f64 {
    2f64.powi(j - 1) / c
}

/// Lattices with spacing `2^{-j} alpha` for `psi_j` and `alpha` for `phi`.
///
/// All boxes are checked for containment before any lattice is built, so an
/// oversized `alpha` is reported as `NotContained`.
pub fn meyer_lattices(frame: &SemiDiscreteFrame, alpha: f64) -> Result<Vec<SamplingLattice>> {
    let grid = frame.grid();
    let specs = frame
        .bands()
        .iter()
        .map(|b| {
            let j = b.label.strip_prefix("psi").and_then(|s| s.parse::<i32>().ok()).unwrap_or(0);
            let c = meyer_lattice_constant(alpha, j);
            SignBlindSpec::new(grid, b.support.clone(), DMatrix::from_element(1, 1, c), vec![1.0])
        })
        .collect::<Result<Vec<_>>>()?;
    specs.iter().map(|s| make_sign_blind_lattice(s, grid)).collect()
}

/// Axis-aligned sign-blind lattice for every band, widened to the nearest
/// commensurate box.
pub fn rectangular_lattices(frame: &SemiDiscreteFrame) -> Result<Vec<SamplingLattice>> {
    let grid = frame.grid();
    let d = grid.dim();
    frame
        .bands()
        .iter()
        .map(|b| {
            let m = fit_bounding_box(grid, &b.support, &DMatrix::identity(d, d))?;
            let c =
                (0..d).map(|i| commensurate_constant(m[(i, i)], grid, i).map(|r| r.0)).collect::<Result<Vec<_>>>()?;
            let spec = SignBlindSpec::new(
                grid,
                b.support.clone(),
                DMatrix::from_diagonal(&DVector::from_vec(c)),
                vec![1.0; d],
            )?;
            make_sign_blind_lattice(&spec, grid)
        })
        .collect()
}
