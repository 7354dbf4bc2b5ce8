//! Empirical behaviour of the pipeline under noisy magnitudes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blcore::{sign_invariant_error, BandLimitedSignal, SamplingLattice};
use crate::error::{Error, Result};
use crate::frames::SemiDiscreteFrame;
use crate::recovery::MeasurementSet;
use crate::stitching::{full_pipeline, PipelineConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeTrial {
    pub delta: f64,
    pub trial: usize,
    pub error: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub delta: f64,
    pub trials: usize,
    pub failures: usize,
    /// Over successful trials; `None` if all failed.
    pub median_error: Option<f64>,
    pub max_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub baseline_error: f64,
    pub levels: Vec<ProbeLevel>,
    pub trials: Vec<ProbeTrial>,
    /// Median errors are non-decreasing in `delta`.
    pub monotone: bool,
}

impl ProbeReport {
    /// One row per trial.
    pub fn trials_csv(&self) -> String {
        let mut s = String::from("delta,trial,error,failure\n");
        for t in &self.trials {
            let e = t.error.map_or(String::new(), |e| format!("{e:e}"));
            let f = t.failure.as_deref().unwrap_or("").replace(',', ";");
            s.push_str(&format!("{:e},{},{e},{f}\n", t.delta, t.trial));
        }
        s
    }

    /// Two columns `delta median_error` for plotting.
    pub fn plot_data(&self) -> String {
        let mut s = String::new();
        for l in &self.levels {
            s.push_str(&format!("{:e} {}\n", l.delta, l.median_error.map_or("nan".into(), |e| format!("{e:e}"))));
        }
        s
    }
}

/// Runs the pipeline on magnitudes perturbed by `U[-delta, delta] * max b`,
/// clipped at zero. The pipeline runs with `accept_best` and without the
/// magnitude check, so noisy trials still return an estimate.
pub fn stability_probe(
    f: &BandLimitedSignal,
    frame: &SemiDiscreteFrame,
    lattices: &[SamplingLattice],
    deltas: &[f64],
    trials: usize,
    seed: u64,
    config: &PipelineConfig,
) -> Result<ProbeReport> {
    if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::Precondition(format!("noise level {d} must be finite and non-negative")));
    }
    let clean = MeasurementSet::measure(f, frame, lattices)?;
    let (out, _) = full_pipeline(&clean, frame, config).map_err(|e| e.at("baseline"))?;
    let baseline_error = sign_invariant_error(out.values(), f.values());

    let mut noisy_cfg = config.clone();
    noisy_cfg.recovery.accept_best = true;
    noisy_cfg.verify_tolerance = None;
    let scale = clean.bands.iter().flat_map(|b| &b.magnitudes).cloned().fold(0.0, f64::max);

    let jobs: Vec<(usize, usize)> = (0..deltas.len()).flat_map(|d| (0..trials).map(move |t| (d, t))).collect();
    let results: Vec<ProbeTrial> = jobs
        .par_iter()
        .map(|&(di, t)| {
            let delta = deltas[di];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((di * trials + t) as u64);
            let mut ms = clean.clone();
            for b in &mut ms.bands {
                for m in &mut b.magnitudes {
                    *m = (*m + delta * scale * rng.random_range(-1.0..=1.0)).max(0.0);
                }
            }
            match full_pipeline(&ms, frame, &noisy_cfg) {
                Ok((g, _)) => ProbeTrial {
                    delta,
                    trial: t,
                    error: Some(sign_invariant_error(g.values(), f.values())),
                    failure: None,
                },
                Err(e) => ProbeTrial { delta, trial: t, error: None, failure: Some(e.to_string()) },
            }
        })
        .collect();

    let levels: Vec<ProbeLevel> = deltas
        .iter()
        .enumerate()
        .map(|(di, &delta)| {
            let rows = &results[di * trials..(di + 1) * trials];
            let mut errs: Vec<f64> = rows.iter().filter_map(|r| r.error).collect();
            errs.sort_by(f64::total_cmp);
            ProbeLevel {
                delta,
                trials,
                failures: rows.len() - errs.len(),
                median_error: median(&errs),
                max_error: errs.last().copied(),
            }
        })
        .collect();
    let mut order: Vec<&ProbeLevel> = levels.iter().collect();
    order.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let meds: Vec<f64> = order.iter().filter_map(|l| l.median_error).collect();
    let monotone = meds.windows(2).all(|w| w[0] <= w[1]);
    Ok(ProbeReport { baseline_error, levels, trials: results, monotone })
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blcore::Grid;
    use crate::experiments::random_signal;
    use crate::frames::meyer_frame;
    use crate::sampling::meyer_lattices;

    #[test]
    fn probe_levels() {
        let g = Grid::line(1024, 24.0).unwrap();
        let frame = meyer_frame(4, &g).unwrap();
        let lats = meyer_lattices(&frame, 3.0 / 16.0).unwrap();
        let f = random_signal(&g, 5.0, 0.125, 0).unwrap();
        let cfg = PipelineConfig {
            recovery: crate::recovery::RecoveryConfig { restarts: 4, ..Default::default() },
            ..Default::default()
        };
        let r = stability_probe(&f, &frame, &lats, &[0.0, 1e-3], 3, 7, &cfg).unwrap();
        assert!(r.baseline_error <= 1e-4);
        assert_eq!(r.trials.len(), 6);
        assert!(r.levels[0].max_error.unwrap() <= 1e-4);
        assert!(r.levels[1].median_error.unwrap().is_finite());
        assert_eq!(r.trials_csv().lines().count(), 7);
        let again = stability_probe(&f, &frame, &lats, &[0.0, 1e-3], 3, 7, &cfg).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn heavy_noise_is_flagged() {
        let g = Grid::line(1024, 24.0).unwrap();
        let frame = meyer_frame(4, &g).unwrap();
        let lats = meyer_lattices(&frame, 3.0 / 16.0).unwrap();
        let f = random_signal(&g, 5.0, 0.125, 1).unwrap();
        let cfg = PipelineConfig {
            recovery: crate::recovery::RecoveryConfig { restarts: 2, ..Default::default() },
            ..Default::default()
        };
        let r = stability_probe(&f, &frame, &lats, &[1.0], 2, 0, &cfg).unwrap();
        let l = &r.levels[0];
        assert!(l.failures > 0 || l.median_error.unwrap() > 0.1, "{l:?}");
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[1.0, 2.0, 4.0]), Some(2.0));
        assert_eq!(median(&[1.0, 2.0, 4.0, 8.0]), Some(3.0));
    }
}
