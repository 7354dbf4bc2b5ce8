use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::blcore::{BandLimitedSignal, FrequencySupport, Grid};
use crate::error::Result;

/// Random real signal band-limited to `|xi| <= radius`, concentrated near
/// the middle of the period by a Gaussian envelope of width
/// `envelope * L_i`, normalized to unit L2 norm.
///
/// The envelope keeps the signal small near the period boundary, the
/// periodic stand-in for decay at infinity.
pub fn random_signal(grid: &Grid, radius: f64, envelope: f64, seed: u64) -> Result<BandLimitedSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = FrequencySupport::ball(grid, radius)?;
    let noise: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let white = BandLimitedSignal::project(grid.clone(), &noise, support.clone())?;
    let d = grid.dim();
    let shaped: Vec<f64> = white
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = grid.position(i);
            let e: f64 = (0..d)
                .map(|a| {
                    let l = grid.period()[a];
                    let z = (x[a] - l / 2.0) / (envelope * l);
                    -0.5 * z * z
                })
                .sum();
            v * e.exp()
        })
        .collect();
    let sig = BandLimitedSignal::project(grid.clone(), &shaped, support)?;
    let n = sig.norm();
    Ok(if n > 0.0 { sig.scaled(1.0 / n) } else { sig })
}
