//! Meyer wavelet filters `psi_j(x) = 2^j psi(2^j x)` plus the scaling filter.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FrameDescriptor, SemiDiscreteFrame, COVER_THRESHOLD};
use crate::blcore::{Grid, SUPPORT_THRESHOLD};
use crate::error::{Error, Result};

/// Quartic transition profile `x^4 (35 - 84x + 70x^2 - 20x^3)`, clamped to [0, 1].
pub fn meyer_beta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

/// Mother wavelet spectrum, supported on `1/3 <= |xi| <= 4/3`.
pub fn meyer_psi_hat(xi: f64) -> Complex64 {
    let a = xi.abs();
    let m = if (1.0 / 3.0..=2.0 / 3.0).contains(&a) {
        (PI / 2.0 * meyer_beta(3.0 * a - 1.0)).sin()
    } else if (2.0 / 3.0..=4.0 / 3.0).contains(&a) {
        (PI / 2.0 * meyer_beta(1.5 * a - 1.0)).cos()
    } else {
        0.0
    };
    Complex64::from_polar(m, PI * xi)
}

/// Scaling function spectrum, supported on `|xi| <= 2/3`.
pub fn meyer_phi_hat(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 / 3.0 {
        1.0
    } else if a <= 2.0 / 3.0 {
        (PI / 2.0 * meyer_beta(3.0 * a - 1.0)).cos()
    } else {
        0.0
    }
}

/// Radius `2^J / 3` up to which the first `J` wavelets and the scaling
/// filter sum to one in power.
pub fn meyer_working_radius(levels: usize) -> f64 {
    2f64.powi(levels as i32) / 3.0
}

/// Bands `phi, psi0, ..., psi{J-1}` on a 1D grid.
pub fn meyer_frame(levels: usize, grid: &Grid) -> Result<SemiDiscreteFrame> {
    if grid.dim() != 1 {
        return Err(Error::Precondition("Meyer frame needs a 1D grid".into()));
    }
    if levels == 0 {
        return Err(Error::Precondition("need at least one wavelet level".into()));
    }
    let top = 2f64.powi(levels as i32 + 1) / 3.0;
    let nyq = grid.shape()[0] as f64 / (2.0 * grid.period()[0]);
    if nyq < top {
        return Err(Error::Resolution(format!("psi{} reaches {top:.4} but Nyquist is {nyq:.4}", levels - 1)));
    }
    let xi: Vec<f64> = (0..grid.len()).map(|i| grid.freq(i)[0]).collect();
    let mut bands = vec![("phi".to_string(), xi.iter().map(|&x| Complex64::new(meyer_phi_hat(x), 0.0)).collect())];
    for j in 0..levels {
        let s = 2f64.powi(-(j as i32));
        bands.push((format!("psi{j}"), xi.iter().map(|&x| meyer_psi_hat(s * x)).collect()));
    }
    let radius = meyer_working_radius(levels);
    let working = xi.iter().map(|x| x.abs() <= radius).collect();
    let descriptor = FrameDescriptor {
        kind: "meyer".into(),
        levels,
        grid: grid.clone(),
        beta: "quartic".into(),
        support_threshold: SUPPORT_THRESHOLD,
        cover_threshold: COVER_THRESHOLD,
        working_radius: Some(radius),
    };
    SemiDiscreteFrame::with_descriptor(grid, bands, working, descriptor)
}
