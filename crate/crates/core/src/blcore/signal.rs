use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::fft::{fft_real, ifft_to_real};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Bins with filter magnitude above this count as support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

const CONTAINMENT_TOL: f64 = 1e-12;

/// Compact spectral set: a bin mask plus a parallelepiped `M[-1/2,1/2]^d`
/// containing it and per-axis oversampling factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySupport {
    mask: Vec<bool>,
    bounding: DMatrix<f64>,
    dilation: Vec<f64>,
}

impl FrequencySupport {
    pub fn new(grid: &Grid, mask: Vec<bool>, bounding: DMatrix<f64>, dilation: Vec<f64>) -> Result<Self> {
        let d = grid.dim();
        if mask.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: mask.len() });
        }
        if bounding.nrows() != d || bounding.ncols() != d || dilation.len() != d {
            return Err(Error::ShapeMismatch { expected: d, got: bounding.nrows() });
        }
        let det = bounding.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::Singular(det));
        }
        for (axis, &s) in dilation.iter().enumerate() {
            if !(s >= 1.0) {
                return Err(Error::SubCritical { axis, s });
            }
        }
        if let Some((bin, value)) = containment_violation(grid, &mask, &bounding)? {
            return Err(Error::NotContained { bin, value });
        }
        Ok(FrequencySupport { mask, bounding, dilation })
    }

    /// Support from a mask, boxed by the tightest axis-aligned rectangle plus
    /// one bin of slack per axis.
    pub fn from_mask(grid: &Grid, mask: Vec<bool>) -> Result<Self> {
        let m = fit_box(grid, &mask, &DMatrix::identity(grid.dim(), grid.dim()))?;
        FrequencySupport::new(grid, mask, m, vec![1.0; grid.dim()])
    }

    /// Every bin of the grid.
    pub fn full(grid: &Grid) -> Self {
        let d = grid.dim();
        let m = DMatrix::from_fn(d, d, |i, j| if i == j { grid.shape()[i] as f64 / grid.period()[i] } else { 0.0 });
        FrequencySupport { mask: vec![true; grid.len()], bounding: m, dilation: vec![1.0; d] }
    }

    /// Bins with `|xi| <= radius` (Euclidean, physical units).
    pub fn ball(grid: &Grid, radius: f64) -> Result<Self> {
        let mask = (0..grid.len()).map(|i| grid.freq_norm(i) <= radius).collect();
        FrequencySupport::from_mask(grid, mask)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn bounding(&self) -> &DMatrix<f64> {
        &self.bounding
    }

    pub fn dilation(&self) -> &[f64] {
        &self.dilation
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Lebesgue measure of the support as a union of bin cells.
    pub fn measure(&self, grid: &Grid) -> f64 {
        let cell: f64 = (0..grid.dim()).map(|a| grid.bin_width(a)).product();
        self.count() as f64 * cell
    }

    /// Same box and dilation, mask restricted to `other`.
    pub fn intersect(&self, other: &[bool]) -> FrequencySupport {
        let mask = self.mask.iter().zip(other).map(|(&a, &b)| a && b).collect();
        FrequencySupport { mask, bounding: self.bounding.clone(), dilation: self.dilation.clone() }
    }

    pub fn with_dilation(&self, dilation: Vec<f64>) -> Result<FrequencySupport> {
        for (axis, &s) in dilation.iter().enumerate() {
            if !(s >= 1.0) {
                return Err(Error::SubCritical { axis, s });
            }
        }
        Ok(FrequencySupport { dilation, ..self.clone() })
    }
}

/// Worst bin of `mask` with `|M^{-1} xi|_inf > 1/2`, if any.
pub(crate) fn containment_violation(grid: &Grid, mask: &[bool], m: &DMatrix<f64>) -> Result<Option<(Vec<i64>, f64)>> {
    let d = grid.dim();
    let inv = m.clone().try_inverse().ok_or(Error::Singular(m.determinant()))?;
    let mut worst: Option<(Vec<i64>, f64)> = None;
    for (flat, _) in mask.iter().enumerate().filter(|(_, &b)| b) {
        let xi = grid.freq(flat);
        let v = &inv * DVector::from_column_slice(&xi[..d]);
        let c = v.amax();
        if c > 0.5 + CONTAINMENT_TOL && worst.as_ref().is_none_or(|w| c > w.1) {
            worst = Some((grid.bins(flat)[..d].to_vec(), c));
        }
    }
    Ok(worst)
}

/// Minimal `O diag(c)` containing the mask, with `c_i = 2 max|eta_i| + w_i`
/// where `eta = O^T xi` and `w_i` is the bin width projected on column `i`.
pub(crate) fn fit_box(grid: &Grid, mask: &[bool], orientation: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = grid.dim();
    if orientation.nrows() != d || orientation.ncols() != d {
        return Err(Error::ShapeMismatch { expected: d, got: orientation.nrows() });
    }
    let ot = orientation.transpose();
    let mut ext = vec![0.0f64; d];
    for (flat, _) in mask.iter().enumerate().filter(|(_, &b)| b) {
        let xi = grid.freq(flat);
        let eta = &ot * DVector::from_column_slice(&xi[..d]);
        for i in 0..d {
            ext[i] = ext[i].max(eta[i].abs());
        }
    }
    let c: Vec<f64> = (0..d)
        .map(|i| {
            let w: f64 = (0..d).map(|j| orientation[(j, i)].abs() * grid.bin_width(j)).sum();
            2.0 * ext[i] + w
        })
        .collect();
    Ok(orientation * DMatrix::from_diagonal(&DVector::from_vec(c)))
}

/// Real signal on a periodic grid with a declared spectral support.
#[derive(Clone, Debug)]
pub struct BandLimitedSignal {
    grid: Grid,
    values: Vec<f64>,
    support: FrequencySupport,
}

/// Out-of-support energy tolerated by [`BandLimitedSignal::new`].
pub const OUT_OF_BAND_TOL: f64 = 1e-10;

impl BandLimitedSignal {
    pub fn new(grid: Grid, values: Vec<f64>, support: FrequencySupport) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if support.mask.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: support.mask.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let spec = fft_real(&values, grid.shape());
        let (mut inside, mut outside) = (0.0, 0.0);
        for (c, &m) in spec.iter().zip(&support.mask) {
            if m {
                inside += c.norm_sqr();
            } else {
                outside += c.norm_sqr();
            }
        }
        if outside > OUT_OF_BAND_TOL * (inside + outside) {
            return Err(Error::InvalidSignal(format!(
                "spectral energy outside support is {:.3e} of total",
                outside / (inside + outside)
            )));
        }
        Ok(BandLimitedSignal { grid, values, support })
    }

    /// Signal whose spectrum is `spec` restricted to the support mask.
    pub fn from_spectrum(grid: Grid, mut spec: Vec<Complex64>, support: FrequencySupport) -> Result<Self> {
        if spec.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: spec.len() });
        }
        if let Some(i) = spec.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        for (c, &m) in spec.iter_mut().zip(&support.mask) {
            if !m {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        let (values, imag) = ifft_to_real(&spec, grid.shape());
        if imag > 1e-10 {
            return Err(Error::InvalidSignal(format!("imaginary residue {imag:.3e} (spectrum not Hermitian)")));
        }
        Ok(BandLimitedSignal { grid, values, support })
    }

    /// Band-limits arbitrary grid values to `support`.
    pub fn project(grid: Grid, values: &[f64], support: FrequencySupport) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        let mut spec = fft_real(values, grid.shape());
        // An unpaired bin (e.g. Nyquist without its mirror) would leave an
        // imaginary residue, so symmetrize the mask first.
        for (flat, c) in spec.iter_mut().enumerate() {
            let k = grid.bins(flat);
            let mirror = grid.bin_index([-k[0], -k[1]]);
            if !(support.mask[flat] && support.mask[mirror]) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        BandLimitedSignal::from_spectrum(grid, spec, support)
    }

    pub fn zeros(grid: Grid, support: FrequencySupport) -> Self {
        let values = vec![0.0; grid.len()];
        BandLimitedSignal { grid, values, support }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &FrequencySupport {
        &self.support
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        l2(&self.values)
    }

    pub fn scaled(&self, c: f64) -> BandLimitedSignal {
        BandLimitedSignal { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Representative of `{self, -self}` whose first significant grid value
    /// is positive.
    pub fn canonical(&self) -> BandLimitedSignal {
        self.scaled(canonical_sign(&self.values))
    }
}

/// Sign making the first entry with `|v| >= 1e-3 max|v|` positive; `1` for
/// an all-zero slice.
///
/// A relative cutoff instead of "first nonzero" keeps the choice stable
/// under rounding noise in near-zero entries.
pub fn canonical_sign(values: &[f64]) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 1.0;
    }
    values.iter().find(|v| v.abs() >= 1e-3 * max).map_or(1.0, |v| v.signum())
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `min(|a - b|, |a + b|) / |b|`.
pub fn sign_invariant_error(a: &[f64], b: &[f64]) -> f64 {
    let (mut dm, mut dp, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dm += (x - y) * (x - y);
        dp += (x + y) * (x + y);
        nb += y * y;
    }
    if nb == 0.0 {
        return dm.min(dp).sqrt();
    }
    (dm.min(dp) / nb).sqrt()
}

/// Unnormalized DFT of a signal's values.
pub fn forward_spectrum(sig: &BandLimitedSignal) -> Result<Vec<Complex64>> {
    if let Some(i) = sig.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(fft_real(&sig.values, sig.grid.shape()))
}

/// Circular convolution with a filter given by its spectrum.
///
/// The output support is the signal mask intersected with the filter's
/// support (`|filter| > 1e-12`).
pub fn convolve(f: &BandLimitedSignal, filter: &[Complex64]) -> Result<BandLimitedSignal> {
    if filter.len() != f.grid.len() {
        return Err(Error::GridMismatch);
    }
    let mut spec = forward_spectrum(f)?;
    for (s, h) in spec.iter_mut().zip(filter) {
        *s *= h;
    }
    let fmask: Vec<bool> = filter.iter().map(|h| h.norm() > SUPPORT_THRESHOLD).collect();
    let support = f.support.intersect(&fmask);
    BandLimitedSignal::from_spectrum(f.grid.clone(), spec, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid16() -> Grid {
        Grid::line(16, 1.0).unwrap()
    }

    #[test]
    fn constant_has_dc_only() {
        let g = Grid::line(8, 1.0).unwrap();
        let s = BandLimitedSignal::new(g.clone(), vec![1.0; 8], FrequencySupport::full(&g)).unwrap();
        let spec = forward_spectrum(&s).unwrap();
        assert!((spec[0].re - 8.0).abs() < 1e-12);
        assert!(spec[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn cosine_has_two_bins() {
        let g = grid16();
        let v: Vec<f64> = (0..16).map(|i| (2.0 * PI * i as f64 / 16.0).cos()).collect();
        let s = BandLimitedSignal::new(g.clone(), v, FrequencySupport::full(&g)).unwrap();
        let spec = forward_spectrum(&s).unwrap();
        assert!((spec[1].re - 8.0).abs() < 1e-12 && (spec[15].re - 8.0).abs() < 1e-12);
        for (i, c) in spec.iter().enumerate() {
            if i != 1 && i != 15 {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_out_of_band_and_nonfinite() {
        let g = grid16();
        let sup = FrequencySupport::ball(&g, 2.0).unwrap();
        let v: Vec<f64> = (0..16).map(|i| (2.0 * PI * 5.0 * i as f64 / 16.0).cos()).collect();
        assert!(matches!(BandLimitedSignal::new(g.clone(), v, sup.clone()), Err(Error::InvalidSignal(_))));
        let mut z = vec![0.0; 16];
        z[3] = f64::NAN;
        assert!(matches!(BandLimitedSignal::new(g, z, sup), Err(Error::NonFinite(3))));
    }

    #[test]
    fn support_validation() {
        let g = grid16();
        let mask: Vec<bool> = (0..16).map(|i| g.freq_norm(i) <= 3.0).collect();
        let tight = DMatrix::from_element(1, 1, 6.0);
        assert!(FrequencySupport::new(&g, mask.clone(), tight, vec![1.0]).is_ok());
        let small = DMatrix::from_element(1, 1, 5.0);
        match FrequencySupport::new(&g, mask.clone(), small, vec![1.0]) {
            Err(Error::NotContained { bin, value }) => {
                assert_eq!(bin[0].abs(), 3);
                assert!((value - 0.6).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let sing = DMatrix::from_element(1, 1, 0.0);
        assert!(matches!(FrequencySupport::new(&g, mask.clone(), sing, vec![1.0]), Err(Error::Singular(_))));
        let m = DMatrix::from_element(1, 1, 8.0);
        assert!(matches!(FrequencySupport::new(&g, mask, m, vec![0.9]), Err(Error::SubCritical { .. })));
    }

    #[test]
    fn disjoint_convolution_is_zero() {
        let g = grid16();
        let v: Vec<f64> = (0..16).map(|i| (2.0 * PI * i as f64 / 16.0).sin()).collect();
        let f = BandLimitedSignal::new(g.clone(), v, FrequencySupport::ball(&g, 1.0).unwrap()).unwrap();
        let filt: Vec<Complex64> =
            (0..16).map(|i| Complex64::new(if g.freq_norm(i) > 3.0 { 1.0 } else { 0.0 }, 0.0)).collect();
        let out = convolve(&f, &filt).unwrap();
        assert!(out.norm() < 1e-14);
        assert_eq!(out.support().count(), 0);
    }

    #[test]
    fn canonical_sign_skips_noise() {
        assert_eq!(canonical_sign(&[1e-9, -2.0, 1.0]), -1.0);
        assert_eq!(canonical_sign(&[0.0, 0.0]), 1.0);
        assert_eq!(canonical_sign(&[0.5, -2.0]), 1.0);
    }
}
