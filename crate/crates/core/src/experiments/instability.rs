//! Why a single band does not suffice: perturbations that one filter barely
//! sees.

use num_complex::Complex64;
use serde::Serialize;

use crate::blcore::{convolve, BandLimitedSignal, FrequencySupport};
use crate::error::{Error, Result};
use crate::frames::SemiDiscreteFrame;

#[derive(Clone, Debug)]
pub struct Instability {
    /// `f + p`.
    pub perturbed: BandLimitedSignal,
    /// Signed bin carrying `p`.
    pub bin: Vec<i64>,
    /// `|f - f~|`.
    pub difference: f64,
    /// `|(f - f~) * psi_lambda|`.
    pub band_difference: f64,
    /// `difference / band_difference`; infinite when the band misses `p` entirely.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstabilitySummary {
    pub bin: Vec<i64>,
    pub difference: f64,
    pub band_difference: f64,
    pub ratio: f64,
}

impl Instability {
    pub fn summary(&self) -> InstabilitySummary {
        InstabilitySummary {
            bin: self.bin.clone(),
            difference: self.difference,
            band_difference: self.band_difference,
            ratio: self.ratio,
        }
    }
}

/// `f~ = f + p` with `|p| = 1` a real tone on the working-band bin where
/// `|psi_lambda^|` is largest subject to `|psi_lambda^| <= eps`, so that
/// `|(f - f~) * psi_lambda| <= eps` while `|f - f~| = 1`.
pub fn single_band_instability(
    f: &BandLimitedSignal,
    frame: &SemiDiscreteFrame,
    label: &str,
    eps: f64,
) -> Result<Instability> {
    let grid = frame.grid();
    if f.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps = {eps} must be positive")));
    }
    let band = frame
        .bands()
        .iter()
        .find(|b| b.label == label)
        .ok_or_else(|| Error::Precondition(format!("no band {label}")))?;
    let k = (0..grid.len())
        .filter(|&i| frame.working()[i] && band.spectrum[i].norm() <= eps)
        .max_by(|&a, &b| band.spectrum[a].norm().total_cmp(&band.spectrum[b].norm()).then(b.cmp(&a)))
        .ok_or_else(|| Error::Precondition(format!("every working-band bin has |psi_{label}| > {eps:e}")))?;
    let bins = grid.bins(k);
    let partner = grid.bin_index([-bins[0], -bins[1]]);

    let n = grid.len() as f64;
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    spec[k] += Complex64::new(n / 2.0, 0.0);
    spec[partner] += Complex64::new(n / 2.0, 0.0);
    let mut mask = vec![false; grid.len()];
    mask[k] = true;
    mask[partner] = true;
    let p = BandLimitedSignal::from_spectrum(grid.clone(), spec, FrequencySupport::from_mask(grid, mask.clone())?)?;
    let p = p.scaled(1.0 / p.norm());

    let joint: Vec<bool> = f.support().mask().iter().zip(&mask).map(|(a, b)| *a || *b).collect();
    let values: Vec<f64> = f.values().iter().zip(p.values()).map(|(a, b)| a + b).collect();
    let perturbed = BandLimitedSignal::new(grid.clone(), values, FrequencySupport::from_mask(grid, joint)?)?;
    let response = convolve(&p, &band.spectrum)?;
    let difference = p.norm();
    let band_difference = response.norm();
    Ok(Instability {
        perturbed,
        bin: bins[..grid.dim()].to_vec(),
        difference,
        band_difference,
        ratio: if band_difference > 0.0 { difference / band_difference } else { f64::INFINITY },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blcore::Grid;
    use crate::experiments::random_signal;
    use crate::frames::meyer_frame;

    /// Bins `1/128` apart resolve the quartic onset of the windows, so some
    /// bins carry `0 < |psi^| <= 1e-6`.
    fn fine() -> Grid {
        Grid::line(4096, 128.0).unwrap()
    }

    #[test]
    fn meyer_psi1_is_blind_off_band() {
        let g = fine();
        let frame = meyer_frame(4, &g).unwrap();
        let f = random_signal(&g, 5.0, 0.125, 0).unwrap();
        let a = single_band_instability(&f, &frame, "psi1", 1e-6).unwrap();
        assert!(a.band_difference > 0.0 && a.band_difference <= 1e-6);
        assert!((a.difference - 1.0).abs() < 1e-12);
        assert!(a.ratio >= 1e5);
        let diff: Vec<f64> = a.perturbed.values().iter().zip(f.values()).map(|(x, y)| x - y).collect();
        assert!((crate::blcore::l2(&diff) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_grows_as_eps_shrinks() {
        let g = fine();
        let frame = meyer_frame(4, &g).unwrap();
        let f = random_signal(&g, 5.0, 0.125, 0).unwrap();
        let r: Vec<f64> =
            [1e-2, 1e-4, 1e-6].iter().map(|&e| single_band_instability(&f, &frame, "psi1", e).unwrap().ratio).collect();
        assert!(r[0] < r[1] && r[1] < r[2] && r[2].is_finite(), "{r:?}");
    }

    #[test]
    fn all_pass_filter_has_no_room() {
        let g = Grid::line(64, 64.0).unwrap();
        let frame =
            SemiDiscreteFrame::new(&g, vec![("all".into(), vec![Complex64::new(1.0, 0.0); 64])], vec![true; 64])
                .unwrap();
        let f = random_signal(&g, 0.1, 1.0, 0).unwrap();
        assert!(matches!(single_band_instability(&f, &frame, "all", 1e-6), Err(Error::Precondition(_))));
    }
}
