//! Second-generation curvelet windows `chi_{j,l}(xi) = w(4^{-j}|xi|)
//! (nu_{j,l}(theta) + nu_{j,l}(theta + 1/2))`, with `theta` in turns.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FrameDescriptor, SemiDiscreteFrame, COVER_THRESHOLD};
use crate::blcore::{Grid, SUPPORT_THRESHOLD};
use crate::error::{Error, Result};

/// `C^inf` step from 0 at `x <= 0` to 1 at `x >= 1`, built from `exp(-1/t)`,
/// with `s(x) + s(1 - x) = 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// Radial low-pass profile: 1 below 1/3, 0 above 2/3.
pub fn curvelet_lowpass_profile(r: f64) -> f64 {
    cos_ramp(smooth_step(3.0 * r - 1.0))
}

/// `cos(pi/2 x)` with an exact zero at `x = 1`.
fn cos_ramp(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        (PI / 2.0 * x).cos()
    }
}

/// Radial window `w(r) = sqrt(phi(r/4)^2 - phi(r)^2)`, supported on [1/3, 8/3].
pub fn curvelet_radial(r: f64) -> f64 {
    let d = curvelet_lowpass_profile(r / 4.0).powi(2) - curvelet_lowpass_profile(r).powi(2);
    d.max(0.0).sqrt()
}

/// Even angular window on [-1/2, 1/2] with `nu(t)^2 + nu(t - 1/2)^2 = 1` on [0, 1/2].
pub fn curvelet_angular(t: f64) -> f64 {
    let a = t.abs();
    if a > 0.5 {
        0.0
    } else {
        cos_ramp(smooth_step(2.0 * a))
    }
}

fn nu_jl(j: usize, l: usize, theta: f64) -> f64 {
    let p = 2f64.powi(j as i32);
    let t = (p * theta - l as f64 / 2.0 + p / 2.0).rem_euclid(p) - p / 2.0;
    curvelet_angular(t)
}

/// Window `chi_{j,l}` at frequency `xi`; `j = 0` is the low-pass `phi(|xi|/4)`.
pub fn curvelet_window(j: usize, l: usize, xi: [f64; 2]) -> f64 {
    let r = xi[0].hypot(xi[1]);
    if j == 0 {
        return curvelet_lowpass_profile(r / 4.0);
    }
    let w = curvelet_radial(r / 4f64.powi(j as i32));
    if w == 0.0 {
        return 0.0;
    }
    let theta = (xi[1].atan2(xi[0]) / (2.0 * PI)).rem_euclid(1.0);
    w * (nu_jl(j, l, theta) + nu_jl(j, l, (theta + 0.5).rem_euclid(1.0)))
}

/// Normalization `2^{-3j/2 - 5/2}` turning the unit window into the
/// discrete curvelet's spectrum.
pub fn curvelet_scale(j: usize) -> f64 {
    2f64.powf(-1.5 * j as f64 - 2.5)
}

/// Rotation angle `2^{-j} pi l` in radians.
pub fn curvelet_rotation(j: usize, l: usize) -> f64 {
    PI * l as f64 / 2f64.powi(j as i32)
}

/// Radius `4^{jmax+1}/3` inside which the windows sum to one in power.
pub fn curvelet_working_radius(jmax: usize) -> f64 {
    4f64.powi(jmax as i32 + 1) / 3.0
}

/// Low-pass `chi0` plus `chi{j},{l}` for `1 <= j <= jmax`, `0 <= l < 2^j`,
/// as unit-height windows.
pub fn curvelet_windows(jmax: usize, grid: &Grid) -> Result<SemiDiscreteFrame> {
    if grid.dim() != 2 {
        return Err(Error::Precondition("curvelet windows need a 2D grid".into()));
    }
    if jmax == 0 {
        return Err(Error::Precondition("jmax must be at least 1".into()));
    }
    let outer = 4f64.powi(jmax as i32) * 8.0 / 3.0;
    let nyq = (0..2).map(|a| grid.shape()[a] as f64 / (2.0 * grid.period()[a])).fold(f64::INFINITY, f64::min);
    if nyq < outer {
        return Err(Error::Resolution(format!("scale {jmax} reaches {outer:.3} but Nyquist is {nyq:.3}")));
    }
    let freqs: Vec<[f64; 2]> = (0..grid.len()).map(|i| grid.freq(i)).collect();
    let build = |j: usize, l: usize| -> Vec<Complex64> {
        freqs.iter().map(|&x| Complex64::new(curvelet_window(j, l, x), 0.0)).collect()
    };
    let mut bands = vec![("chi0".to_string(), build(0, 0))];
    for j in 1..=jmax {
        for l in 0..(1usize << j) {
            bands.push((format!("chi{j},{l}"), build(j, l)));
        }
    }
    let radius = curvelet_working_radius(jmax);
    let working = freqs.iter().map(|x| x[0].hypot(x[1]) <= radius).collect();
    let descriptor = FrameDescriptor {
        kind: "curvelet".into(),
        levels: jmax,
        grid: grid.clone(),
        beta: "exp-smooth".into(),
        support_threshold: SUPPORT_THRESHOLD,
        cover_threshold: COVER_THRESHOLD,
        working_radius: Some(radius),
    };
    SemiDiscreteFrame::with_descriptor(grid, bands, working, descriptor)
}
