//! Alternating projections between "samples with the given magnitudes" and
//! "samples of a signal band-limited to F".

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tracking::{GrayEdge, Tracked};
use crate::blcore::{l2, Grid, LatticeProjector, RealBasis, SamplingLattice};
use crate::error::{Error, Result};

pub(crate) enum Projector {
    Fft(LatticeProjector),
    /// Orthonormal basis of the sampled band-limited subspace.
    Dense(DMatrix<f64>),
}

impl Projector {
    pub(crate) fn new(grid: &Grid, lat: &SamplingLattice, mask: &[bool]) -> Result<Self> {
        if lat.layout().is_some() {
            return Ok(Projector::Fft(LatticeProjector::new(grid, lat, mask)?));
        }
        Ok(Projector::Dense(orthonormal_sample_basis(grid, lat, mask)?))
    }

    pub(crate) fn apply(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Projector::Fft(p) => p.apply(y),
            Projector::Dense(q) => {
                let v = nalgebra::DVector::from_column_slice(y);
                (q * (q.transpose() * v)).as_slice().to_vec()
            }
        }
    }
}

/// Left singular vectors spanning the samples of signals band-limited to
/// `mask`; fails if the sampling map is not injective.
pub(crate) fn orthonormal_sample_basis(grid: &Grid, lat: &SamplingLattice, mask: &[bool]) -> Result<DMatrix<f64>> {
    let basis = RealBasis::new(grid, mask);
    let a = basis.sampling_matrix(grid, lat);
    let p = a.ncols();
    if p == 0 {
        return Ok(DMatrix::zeros(lat.len(), 0));
    }
    if a.nrows() < p {
        return Err(Error::NotStableSampling(format!("{} samples for {p} degrees of freedom", a.nrows())));
    }
    let svd = a.svd(true, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rank < p {
        return Err(Error::NotStableSampling(format!("sampling map has rank {rank} < {p}")));
    }
    let u = svd.u.expect("requested U");
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-10 * smax).collect();
    Ok(u.select_columns(&cols))
}

fn residual(y: &[f64], proj: &Projector, bnorm: f64) -> f64 {
    let z = proj.apply(y);
    let d: f64 = y.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum();
    d.sqrt() / bnorm
}

/// Iterates `signs <- sign(P(b * signs))` to a fixed point. Returns the
/// residual and the signed samples.
pub(crate) fn polish(b: &[f64], mut signs: Vec<f64>, proj: &Projector, iters: usize, bnorm: f64) -> (f64, Vec<f64>) {
    let mut y: Vec<f64> = b.iter().zip(&signs).map(|(m, s)| m * s).collect();
    for _ in 0..iters {
        let z = proj.apply(&y);
        let mut changed = false;
        for i in 0..b.len() {
            let s = if b[i] == 0.0 {
                0.0
            } else if z[i] < 0.0 {
                -1.0
            } else {
                1.0
            };
            if s != signs[i] {
                signs[i] = s;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        y = b.iter().zip(&signs).map(|(m, s)| m * s).collect();
    }
    (residual(&y, proj, bnorm), y)
}

/// Tries flipping subsets of the `limit` least certain tree edges, smallest
/// subsets first. Stops after the first subset size that yields a solution
/// within `tol`; reports ambiguity if that size yields two different ones.
pub(crate) fn enumerate_flips(
    b: &[f64],
    tr: &Tracked,
    limit: usize,
    proj: &Projector,
    iters: usize,
    bnorm: f64,
    tol: f64,
) -> Option<(f64, Vec<f64>, bool)> {
    let gray = &tr.gray[..limit];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut found: Vec<Vec<f64>> = Vec::new();
    for size in 1..=limit {
        for combo in (1u32..(1u32 << limit)).filter(|c| c.count_ones() as usize == size) {
            let mut signs = tr.site_signs.clone();
            for (k, edge) in gray.iter().enumerate() {
                if combo >> k & 1 == 1 {
                    for &s in &edge.sites {
                        signs[s] = -signs[s];
                    }
                }
            }
            let (res, y) = polish(b, signs, proj, iters, bnorm);
            if res <= tol {
                let c = crate::blcore::canonical_sign(&y);
                let canon: Vec<f64> = y.iter().map(|v| v * c).collect();
                if !found
                    .iter()
                    .any(|f| l2(&f.iter().zip(&canon).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-6 * bnorm)
                {
                    found.push(canon);
                }
            }
            if best.as_ref().is_none_or(|(r, _)| res < *r) {
                best = Some((res, y));
            }
        }
        if !found.is_empty() {
            break;
        }
    }
    best.map(|(r, y)| (r, y, found.len() > 1))
}

/// Flips candidate site sets one at a time while the residual drops, for at
/// most `sweeps` passes, then polishes.
pub(crate) fn greedy_flips(
    b: &[f64],
    mut signs: Vec<f64>,
    candidates: &[GrayEdge],
    proj: &Projector,
    iters: usize,
    bnorm: f64,
    sweeps: usize,
) -> (f64, Vec<f64>) {
    let eval = |s: &[f64]| {
        let y: Vec<f64> = b.iter().zip(s).map(|(m, s)| m * s).collect();
        residual(&y, proj, bnorm)
    };
    let mut cur = eval(&signs);
    for _ in 0..sweeps {
        let mut improved = false;
        for c in candidates {
            c.sites.iter().for_each(|&i| signs[i] = -signs[i]);
            let r = eval(&signs);
            if r < cur {
                cur = r;
                improved = true;
            } else {
                c.sites.iter().for_each(|&i| signs[i] = -signs[i]);
            }
        }
        if !improved {
            break;
        }
    }
    polish(b, signs, proj, iters, bnorm)
}

/// Random sign initializations, each polished; the best by residual wins,
/// ties broken by the lexicographically smallest sign pattern. Returns the
/// number of restarts evaluated.
pub(crate) fn restarts(
    b: &[f64],
    proj: &Projector,
    count: usize,
    iters: usize,
    bnorm: f64,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>, usize) {
    let inits: Vec<Vec<f64>> = (0..count.max(1))
        .map(|_| {
            b.iter()
                .map(|&m| {
                    if m == 0.0 {
                        0.0
                    } else if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect()
        })
        .collect();
    let results: Vec<(f64, Vec<f64>)> = inits.into_par_iter().map(|s| polish(b, s, proj, iters, bnorm)).collect();
    let used = results.iter().position(|(r, _)| *r <= tol).map_or(results.len(), |i| i + 1);
    let (r, y) = results
        .into_iter()
        .map(|(r, y)| {
            let c = crate::blcore::canonical_sign(&y);
            (r, y.into_iter().map(|v| v * c).collect::<Vec<f64>>())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex(&a.1, &b.1)))
        .expect("non-empty");
    (r, y, used)
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = (x.signum() as i8).cmp(&(y.signum() as i8));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}
