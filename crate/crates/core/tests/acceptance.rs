//! Acceptance checks. Runs without the test harness and prints one
//! `PASS`/`FAIL` line per criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use sign_retrieval::blcore::{l2, sample_on_lattice, sign_invariant_error, BandLimitedSignal, Grid, SamplingLattice};
use sign_retrieval::experiments::{
    counterexample_grid, counterexample_pair, random_signal, redundancy_report, single_band_instability,
    tensor_counterexample, RedundancyInput,
};
use sign_retrieval::frames::{curvelet_windows, curvelet_working_radius, frame_bounds, meyer_frame, SemiDiscreteFrame};
use sign_retrieval::recovery::{recover_band, recover_band_oracle, MeasurementSet, RecoveryConfig};
use sign_retrieval::sampling::{
    make_sign_blind_lattice, meyer_alpha_check, meyer_lattices, rectangular_lattices, SignBlindSpec,
};
use sign_retrieval::stitching::{full_pipeline, PipelineConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mags(g: &BandLimitedSignal, lat: &SamplingLattice) -> Vec<f64> {
    sample_on_lattice(g, lat).unwrap().iter().map(|v| v.abs()).collect()
}

fn rel_diff(a: &BandLimitedSignal, b: &BandLimitedSignal) -> f64 {
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    l2(&d) / b.norm()
}

fn meyer_setup(alpha: f64) -> (Grid, SemiDiscreteFrame, Vec<SamplingLattice>) {
    let g = Grid::line(1024, 24.0).unwrap();
    let frame = meyer_frame(4, &g).unwrap();
    let lats = meyer_lattices(&frame, alpha).unwrap();
    (g, frame, lats)
}

fn meyer_signal(g: &Grid, seed: u64) -> BandLimitedSignal {
    random_signal(g, 0.95 * 16.0 / 3.0, 0.125, seed).unwrap()
}

fn frame_validity() -> Outcome {
    let t = Instant::now();
    let g = Grid::line(1024, 24.0).unwrap();
    let frame = meyer_frame(4, &g).unwrap();
    let (a, b) = frame_bounds(&frame).unwrap();
    let dt = t.elapsed();
    let dev = (a - 1.0).abs().max((b - 1.0).abs());
    check(dev <= 1e-8 && dt < Duration::from_secs(5), format!("A = {a:.12}, B = {b:.12}, {dt:.2?}"))
}

/// 64-point grid, `|k| <= 3`; the box `M = 1/8` with `s = 1` gives 16 samples.
fn oracle_instance(seed: u64) -> (BandLimitedSignal, SamplingLattice) {
    let g = Grid::line(64, 64.0).unwrap();
    let f = random_signal(&g, 3.0 / 64.0, 10.0, seed).unwrap();
    let spec = SignBlindSpec::new(&g, f.support().clone(), DMatrix::from_element(1, 1, 0.125), vec![1.0]).unwrap();
    let lat = make_sign_blind_lattice(&spec, &g).unwrap();
    (f, lat)
}

const ORACLE_TRIALS: u64 = 200;

fn oracle_uniqueness() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..ORACLE_TRIALS {
        let (f, lat) = oracle_instance(seed);
        if lat.len() > 16 {
            return Err(format!("lattice has {} samples", lat.len()));
        }
        let o = recover_band_oracle(&mags(&f, &lat), &lat, f.support()).unwrap();
        if o.candidates.len() != 1 {
            return Err(format!("seed {seed}: {} candidates", o.candidates.len()));
        }
        worst = worst.max(sign_invariant_error(o.candidates[0].values(), f.values()));
    }
    let dt = t.elapsed();
    check(
        worst <= 1e-6 && dt < Duration::from_secs(120),
        format!("{ORACLE_TRIALS} unique, max error {worst:.2e}, {dt:.2?}"),
    )
}

fn sharpness() -> Outcome {
    let g = counterexample_grid(0.5, 16, 4).unwrap();
    let c = counterexample_pair(0.5, &g).unwrap();
    let o = recover_band_oracle(&mags(&c.h1, &c.lattice), &c.lattice, c.h1.support()).unwrap();
    let g2 = Grid::square(32, 8.0).unwrap();
    let t = tensor_counterexample([1.0, 0.5], &g2).unwrap();
    let ok = c.checks.magnitude_gap <= 1e-10
        && c.checks.separation >= 0.5
        && o.candidates.len() >= 2
        && t.checks.magnitude_gap <= 1e-10
        && t.checks.separation >= 0.5;
    check(
        ok,
        format!(
            "1D gap {:.1e} separation {:.3} candidates {}; 2D gap {:.1e} separation {:.3}",
            c.checks.magnitude_gap,
            c.checks.separation,
            o.candidates.len(),
            t.checks.magnitude_gap,
            t.checks.separation
        ),
    )
}

fn solver_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..ORACLE_TRIALS {
        let (f, lat) = oracle_instance(seed);
        let m = mags(&f, &lat);
        let o = recover_band_oracle(&m, &lat, f.support()).unwrap();
        let (g, _) =
            recover_band(&m, &lat, f.support(), &RecoveryConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        worst = worst.max(sign_invariant_error(g.values(), o.candidates[0].values()));
    }
    check(worst <= 1e-6, format!("max solver-oracle difference {worst:.2e}"))
}

fn meyer_end_to_end() -> Outcome {
    let (g, frame, lats) = meyer_setup(3.0 / 16.0);
    let cfg = PipelineConfig::verified();
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let f = meyer_signal(&g, seed);
        let ms = MeasurementSet::measure(&f, &frame, &lats).unwrap();
        let (out, _) = full_pipeline(&ms, &frame, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        worst = worst.max(sign_invariant_error(out.values(), f.values()));
    }
    let gate = !meyer_alpha_check(0.25) && meyer_lattices(&frame, 0.25).is_err();
    check(worst <= 1e-4 && gate, format!("50 trials, max error {worst:.2e}; alpha = 0.25 rejected: {gate}"))
}

fn curvelet_end_to_end() -> Outcome {
    let t = Instant::now();
    let g = Grid::square(256, 1.5).unwrap();
    let frame = curvelet_windows(2, &g).unwrap();
    let (a, b) = frame_bounds(&frame).unwrap();
    let tight = (a - 1.0).abs().max((b - 1.0).abs());
    let lats = rectangular_lattices(&frame).unwrap();
    let cfg = PipelineConfig::verified();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let f = random_signal(&g, 0.95 * curvelet_working_radius(2), 0.125, seed).unwrap();
        let ms = MeasurementSet::measure(&f, &frame, &lats).unwrap();
        let (out, _) = full_pipeline(&ms, &frame, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        worst = worst.max(sign_invariant_error(out.values(), f.values()));
    }
    let dt = t.elapsed();
    check(
        worst <= 1e-3 && tight <= 1e-3 && dt < Duration::from_secs(600),
        format!("{} bands, tightness {tight:.1e}, max error {worst:.2e}, {dt:.2?}", frame.len()),
    )
}

fn redundancy() -> Outcome {
    let r = redundancy_report(RedundancyInput::Curvelet { alpha1: 3.0 / 32.0, alpha2: 9.0 / (20.0 * PI) }).unwrap();
    let near = |x: f64, y: f64| (x - y).abs() <= 0.01 * y;
    let ok = near(r.factors[0], 2.29) && near(r.factors[1], 2.0) && r.total <= 4.58 * 1.01 && near(r.total, 4.58);
    check(ok, format!("factors {:.4} {:.4}, total {:.4}", r.factors[0], r.factors[1], r.total))
}

/// On the 24-unit grid every bin with `|psi^| <= 1e-6` is an exact zero; the
/// finer grid has bins on the window's onset, so the ratio is finite.
fn instability() -> Outcome {
    let g = Grid::line(4096, 128.0).unwrap();
    let frame = meyer_frame(4, &g).unwrap();
    let f = meyer_signal(&g, 0);
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for label in frame.labels() {
        let inst = single_band_instability(&f, &frame, &label, 1e-6).unwrap();
        if !inst.ratio.is_finite() {
            return Err(format!("band {label}: perturbation is invisible to the band"));
        }
        worst = worst.min(inst.ratio);
        detail.push(format!("{label} {:.2e}", inst.ratio));
    }
    check(worst >= 1e5, format!("ratios {}", detail.join(", ")))
}

fn reinjection() -> Outcome {
    let (g, frame, lats) = meyer_setup(3.0 / 16.0);
    let cfg = PipelineConfig::verified();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let f = meyer_signal(&g, 100 + seed);
        let (out, _) = full_pipeline(&MeasurementSet::measure(&f, &frame, &lats).unwrap(), &frame, &cfg)
            .map_err(|e| e.to_string())?;
        let (again, _) = full_pipeline(&MeasurementSet::measure(&out, &frame, &lats).unwrap(), &frame, &cfg)
            .map_err(|e| e.to_string())?;
        worst = worst.max(rel_diff(&again, &out));
    }
    check(worst <= 1e-8, format!("max relative change {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("meyer frame validity", frame_validity),
        ("oracle uniqueness", oracle_uniqueness),
        ("sub-critical counterexamples", sharpness),
        ("solver agrees with oracle", solver_oracle),
        ("meyer end to end", meyer_end_to_end),
        ("curvelet end to end", curvelet_end_to_end),
        ("redundancy", redundancy),
        ("single band instability", instability),
        ("reinjection", reinjection),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
