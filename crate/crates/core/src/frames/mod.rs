//! Semi-discrete frames: filter banks given by their spectra on a grid,
//! frame bounds, canonical duals, analysis and synthesis.

mod curvelet;
mod meyer;
mod overlap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blcore::{convolve, forward_spectrum, BandLimitedSignal, FrequencySupport, Grid, SUPPORT_THRESHOLD};
use crate::error::{Error, Result};

pub use curvelet::{
    curvelet_angular, curvelet_lowpass_profile, curvelet_radial, curvelet_rotation, curvelet_scale, curvelet_window,
    curvelet_windows, curvelet_working_radius, smooth_step,
};
pub use meyer::{meyer_beta, meyer_frame, meyer_phi_hat, meyer_psi_hat, meyer_working_radius};
pub use overlap::{overlap_graph, OverlapEdge, OverlapGraph, COVER_THRESHOLD, OVERLAP_LEVEL};

/// One filter of a frame.
#[derive(Clone, Debug)]
pub struct Band {
    pub label: String,
    pub spectrum: Vec<Complex64>,
    /// Bins where `|spectrum| > 1e-12`.
    pub support: FrequencySupport,
}

/// Which construction produced a frame; written out as the frame descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub kind: String,
    pub levels: usize,
    pub grid: Grid,
    pub beta: String,
    pub support_threshold: f64,
    pub cover_threshold: f64,
    pub working_radius: Option<f64>,
}

/// Family of real filters with frame bounds over a working band.
#[derive(Clone, Debug)]
pub struct SemiDiscreteFrame {
    grid: Grid,
    bands: Vec<Band>,
    working: Vec<bool>,
    bounds: (f64, f64),
    descriptor: FrameDescriptor,
    warnings: Vec<String>,
}

impl SemiDiscreteFrame {
    /// Builds a frame from labelled spectra. Bounds are evaluated over the
    /// `working` bins; a non-positive lower bound is allowed here and only
    /// rejected by [`frame_bounds`].
    pub fn new(grid: &Grid, bands: Vec<(String, Vec<Complex64>)>, working: Vec<bool>) -> Result<Self> {
        let descriptor = FrameDescriptor {
            kind: "custom".into(),
            levels: bands.len(),
            grid: grid.clone(),
            beta: "none".into(),
            support_threshold: SUPPORT_THRESHOLD,
            cover_threshold: COVER_THRESHOLD,
            working_radius: None,
        };
        SemiDiscreteFrame::with_descriptor(grid, bands, working, descriptor)
    }

    pub(crate) fn with_descriptor(
        grid: &Grid,
        bands: Vec<(String, Vec<Complex64>)>,
        working: Vec<bool>,
        descriptor: FrameDescriptor,
    ) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Precondition("frame has no bands".into()));
        }
        if working.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: working.len() });
        }
        let mut out = Vec::with_capacity(bands.len());
        for (label, spectrum) in bands {
            if spectrum.len() != grid.len() {
                return Err(Error::ShapeMismatch { expected: grid.len(), got: spectrum.len() });
            }
            check_hermitian(grid, &label, &spectrum)?;
            let mask = spectrum.iter().map(|c| c.norm() > SUPPORT_THRESHOLD).collect();
            let support = FrequencySupport::from_mask(grid, mask)?;
            out.push(Band { label, spectrum, support });
        }
        let mut frame = SemiDiscreteFrame {
            grid: grid.clone(),
            bands: out,
            working,
            bounds: (0.0, 0.0),
            descriptor,
            warnings: Vec::new(),
        };
        frame.bounds = frame.compute_bounds();
        Ok(frame)
    }

    fn compute_bounds(&self) -> (f64, f64) {
        let s = self.power_sum();
        let mut a = f64::INFINITY;
        let mut b = 0.0f64;
        for (v, &w) in s.iter().zip(&self.working) {
            if w {
                a = a.min(*v);
                b = b.max(*v);
            }
        }
        if a.is_infinite() {
            a = 0.0;
        }
        (a, b)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn band_index(&self, label: &str) -> Option<usize> {
        self.bands.iter().position(|b| b.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.bands.iter().map(|b| b.label.clone()).collect()
    }

    /// Bins on which the frame inequality is asserted.
    pub fn working(&self) -> &[bool] {
        &self.working
    }

    pub fn descriptor(&self) -> &FrameDescriptor {
        &self.descriptor
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `sum_lambda |psi_lambda(xi)|^2` per bin.
    pub fn power_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.grid.len()];
        for b in &self.bands {
            for (acc, c) in s.iter_mut().zip(&b.spectrum) {
                *acc += c.norm_sqr();
            }
        }
        s
    }

    /// Copy with every filter multiplied by `c`.
    pub fn scaled(&self, c: f64) -> SemiDiscreteFrame {
        let bands = self
            .bands
            .iter()
            .map(|b| Band { spectrum: b.spectrum.iter().map(|v| v * c).collect(), ..b.clone() })
            .collect();
        let mut f = SemiDiscreteFrame { bands, ..self.clone() };
        f.bounds = f.compute_bounds();
        f
    }
}

fn check_hermitian(grid: &Grid, label: &str, spectrum: &[Complex64]) -> Result<()> {
    let max = spectrum.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    for flat in 0..grid.len() {
        let k = grid.bins(flat);
        let mirror = grid.bin_index([-k[0], -k[1]]);
        if (spectrum[mirror] - spectrum[flat].conj()).norm() > 1e-10 * max.max(1e-300) {
            return Err(Error::InvalidSignal(format!("filter {label} is not real in space (bin {:?})", k)));
        }
    }
    Ok(())
}

/// `(A, B)`: extreme values of `sum |psi_lambda|^2` over the working band.
pub fn frame_bounds(frame: &SemiDiscreteFrame) -> Result<(f64, f64)> {
    let (a, b) = frame.bounds;
    if !(a > 0.0) {
        return Err(Error::NotAFrame(a));
    }
    Ok((a, b))
}

/// Canonical dual `psi_lambda / sum |psi_mu|^2`.
///
/// Outside the working band the division is kept where the power sum is at
/// least `A/2`; elsewhere the bins are zeroed and a warning is recorded.
pub fn dual_frame(frame: &SemiDiscreteFrame) -> Result<SemiDiscreteFrame> {
    let (a, _) = frame_bounds(frame)?;
    let s = frame.power_sum();
    let mut zeroed = 0usize;
    let mut bands = Vec::with_capacity(frame.len());
    for b in &frame.bands {
        let spec: Vec<Complex64> = b
            .spectrum
            .iter()
            .zip(&s)
            .zip(&frame.working)
            .map(|((c, &p), &w)| {
                if w || p >= a / 2.0 {
                    c / p
                } else {
                    if c.norm() > SUPPORT_THRESHOLD {
                        zeroed += 1;
                    }
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        bands.push((b.label.clone(), spec));
    }
    let mut dual = SemiDiscreteFrame::with_descriptor(
        &frame.grid,
        bands,
        frame.working.clone(),
        FrameDescriptor { kind: format!("dual of {}", frame.descriptor.kind), ..frame.descriptor.clone() },
    )?;
    if zeroed > 0 {
        dual.warnings.push(format!("{zeroed} filter bins outside the working band zeroed (power sum below A/2)"));
    }
    Ok(dual)
}

/// `f * psi_lambda` for every band.
pub fn analyze(f: &BandLimitedSignal, frame: &SemiDiscreteFrame) -> Result<Vec<BandLimitedSignal>> {
    if f.grid() != &frame.grid {
        return Err(Error::GridMismatch);
    }
    frame.bands.iter().map(|b| convolve(f, &b.spectrum)).collect()
}

/// `sum_lambda parts_lambda * conj(dual_lambda)`, i.e. spectra multiplied by
/// the conjugated dual filters.
pub fn synthesize(parts: &[BandLimitedSignal], frame: &SemiDiscreteFrame) -> Result<BandLimitedSignal> {
    if parts.len() != frame.len() {
        return Err(Error::Precondition(format!("{} parts for {} bands", parts.len(), frame.len())));
    }
    let dual = dual_frame(frame)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); frame.grid.len()];
    let mut mask = vec![false; frame.grid.len()];
    for (p, b) in parts.iter().zip(&dual.bands) {
        if p.grid() != &frame.grid {
            return Err(Error::GridMismatch);
        }
        let spec = forward_spectrum(p)?;
        for i in 0..acc.len() {
            acc[i] += spec[i] * b.spectrum[i].conj();
            mask[i] |= b.support.mask()[i];
        }
    }
    let support = FrequencySupport::from_mask(&frame.grid, mask)?;
    BandLimitedSignal::from_spectrum(frame.grid.clone(), acc, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blcore::fft::ifft_to_real;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(grid: &Grid, radius: f64, seed: u64) -> BandLimitedSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        BandLimitedSignal::project(grid.clone(), &v, FrequencySupport::ball(grid, radius).unwrap()).unwrap()
    }

    fn two_band(grid: &Grid, seed: u64) -> SemiDiscreteFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lo = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut hi = lo.clone();
        for flat in 0..grid.len() {
            let k = grid.bins(flat);
            let mirror = grid.bin_index([-k[0], -k[1]]);
            if mirror < flat {
                continue;
            }
            let r = grid.freq_norm(flat);
            let (a, b) = (rng.random_range(0.2..1.0) * (-r).exp(), rng.random_range(0.2..1.0) * (1.0 - (-r).exp()));
            let ph = if mirror == flat { 0.0 } else { rng.random_range(0.0..std::f64::consts::TAU) };
            lo[flat] = Complex64::from_polar(a, ph);
            lo[mirror] = lo[flat].conj();
            hi[flat] = Complex64::from_polar(b + 0.05, -ph);
            hi[mirror] = hi[flat].conj();
        }
        SemiDiscreteFrame::new(grid, vec![("lo".into(), lo), ("hi".into(), hi)], vec![true; grid.len()]).unwrap()
    }

    #[test]
    fn single_all_pass_band() {
        let g = Grid::line(16, 1.0).unwrap();
        let f = SemiDiscreteFrame::new(&g, vec![("id".into(), vec![Complex64::new(1.0, 0.0); 16])], vec![true; 16])
            .unwrap();
        assert_eq!(frame_bounds(&f).unwrap(), (1.0, 1.0));
        let d = dual_frame(&f).unwrap();
        assert_eq!(d.bands()[0].spectrum, f.bands()[0].spectrum);
    }

    #[test]
    fn duplicated_band_doubles_bounds() {
        let g = Grid::line(16, 1.0).unwrap();
        let spec: Vec<Complex64> = (0..16).map(|i| Complex64::new(0.5 + 0.4 * (g.freq_norm(i) / 8.0), 0.0)).collect();
        let one = SemiDiscreteFrame::new(&g, vec![("a".into(), spec.clone())], vec![true; 16]).unwrap();
        let two =
            SemiDiscreteFrame::new(&g, vec![("a".into(), spec.clone()), ("b".into(), spec)], vec![true; 16]).unwrap();
        let (a1, b1) = frame_bounds(&one).unwrap();
        let (a2, b2) = frame_bounds(&two).unwrap();
        assert!((a2 - 2.0 * a1).abs() < 1e-15 && (b2 - 2.0 * b1).abs() < 1e-15);
    }

    #[test]
    fn not_a_frame() {
        let g = Grid::line(16, 1.0).unwrap();
        let spec: Vec<Complex64> = (0..16).map(|i| Complex64::new(if i == 0 { 0.0 } else { 1.0 }, 0.0)).collect();
        let f = SemiDiscreteFrame::new(&g, vec![("a".into(), spec)], vec![true; 16]).unwrap();
        assert!(matches!(frame_bounds(&f), Err(Error::NotAFrame(_))));
    }

    #[test]
    fn non_real_filter_rejected() {
        let g = Grid::line(8, 1.0).unwrap();
        let mut spec = vec![Complex64::new(0.0, 0.0); 8];
        spec[1] = Complex64::new(1.0, 0.0);
        assert!(SemiDiscreteFrame::new(&g, vec![("a".into(), spec)], vec![true; 8]).is_err());
    }

    #[test]
    fn scaled_frame_has_half_dual() {
        let g = Grid::line(32, 4.0).unwrap();
        let f = two_band(&g, 1);
        let d1 = dual_frame(&f).unwrap();
        let d2 = dual_frame(&f.scaled(2.0)).unwrap();
        for (b1, b2) in d1.bands().iter().zip(d2.bands()) {
            for (x, y) in b1.spectrum.iter().zip(&b2.spectrum) {
                assert!((x * 0.5 - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn two_band_round_trip() {
        let g = Grid::line(64, 8.0).unwrap();
        for seed in 0..20 {
            let frame = two_band(&g, seed);
            let f = random_signal(&g, 3.0, 100 + seed);
            let parts = analyze(&f, &frame).unwrap();
            let back = synthesize(&parts, &frame).unwrap();
            let err = crate::blcore::sign_invariant_error(back.values(), f.values());
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn flipped_band_breaks_synthesis() {
        let g = Grid::line(64, 8.0).unwrap();
        let frame = two_band(&g, 3);
        let f = random_signal(&g, 3.0, 4);
        let mut parts = analyze(&f, &frame).unwrap();
        parts[1] = parts[1].scaled(-1.0);
        let back = synthesize(&parts, &frame).unwrap();
        assert!(crate::blcore::sign_invariant_error(back.values(), f.values()) > 0.1);
        assert!(synthesize(&parts[..1], &frame).is_err());
    }

    #[test]
    fn zero_parts_synthesize_to_zero() {
        let g = Grid::line(32, 4.0).unwrap();
        let frame = two_band(&g, 5);
        let parts = vec![BandLimitedSignal::zeros(g.clone(), FrequencySupport::full(&g)); 2];
        assert_eq!(synthesize(&parts, &frame).unwrap().norm(), 0.0);
    }

    #[test]
    fn filters_are_real_in_space() {
        let g = Grid::square(16, 2.0).unwrap();
        let f = two_band(&g, 9);
        for b in f.bands() {
            let (_, imag) = ifft_to_real(&b.spectrum, g.shape());
            assert!(imag < 1e-10);
        }
    }
}
