use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::json;

use sign_retrieval::blcore::fft::ifft_to_real;
use sign_retrieval::blcore::io::{read_sgnb, write_csv, write_sgnb};
use sign_retrieval::blcore::{sample_on_lattice, sign_invariant_error, BandLimitedSignal, Grid, SamplingLattice};
use sign_retrieval::experiments::{
    counterexample_grid, counterexample_pair, random_signal, redundancy_report, stability_probe, tensor_counterexample,
    Counterexample, RedundancyInput,
};
use sign_retrieval::frames::{
    curvelet_windows, curvelet_working_radius, frame_bounds, meyer_frame, meyer_working_radius, overlap_graph,
    OverlapGraph, SemiDiscreteFrame,
};
use sign_retrieval::recovery::{recover_band_oracle, MeasurementSet};
use sign_retrieval::sampling::{meyer_alpha_check, meyer_lattices, rectangular_lattices};
use sign_retrieval::stitching::full_pipeline;

use crate::config::{Config, FrameKind};
use crate::{Command, ValidationFailed};

pub fn run(command: &Command, cfg: &Config, out: &Path) -> anyhow::Result<()> {
    match command {
        Command::FrameCheck => frame_check(cfg, out),
        Command::Sample => sample(cfg, out),
        Command::Recover { input, reference } => recover(cfg, out, input, reference.as_deref()),
        Command::Counterexample => counterexample(cfg, out),
        Command::StabilityProbe => probe(cfg, out),
        Command::Redundancy => redundancy(cfg, out),
    }
}

/// Writes `<out>/<name>.json` and echoes it on stdout.
fn summary<T: Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(out.join(format!("{name}.json")), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_signal(out: &Path, stem: &str, grid: &Grid, values: &[f64]) -> anyhow::Result<()> {
    let mut w = create(&out.join(format!("{stem}.sgnb")))?;
    write_sgnb(&mut w, grid, values)?;
    w.flush()?;
    let mut w = create(&out.join(format!("{stem}.csv")))?;
    write_csv(&mut w, grid, values)?;
    w.flush()?;
    Ok(())
}

fn grid(cfg: &Config) -> anyhow::Result<Grid> {
    Ok(Grid::new(&cfg.grid.n, &cfg.grid.period)?)
}

fn frame(cfg: &Config, grid: &Grid) -> anyhow::Result<SemiDiscreteFrame> {
    Ok(match cfg.frame.kind {
        FrameKind::Meyer => meyer_frame(cfg.frame.levels, grid)?,
        FrameKind::Curvelet => curvelet_windows(cfg.frame.levels, grid)?,
    })
}

fn lattices(cfg: &Config, frame: &SemiDiscreteFrame) -> anyhow::Result<Vec<SamplingLattice>> {
    Ok(match cfg.frame.kind {
        FrameKind::Meyer => {
            if !meyer_alpha_check(cfg.frame.alpha) {
                return Err(ValidationFailed(format!("alpha = {} is outside (0, 3/16]", cfg.frame.alpha)).into());
            }
            meyer_lattices(frame, cfg.frame.alpha)?
        }
        FrameKind::Curvelet => rectangular_lattices(frame)?,
    })
}

fn test_signal(cfg: &Config, grid: &Grid) -> anyhow::Result<BandLimitedSignal> {
    let radius = match cfg.frame.kind {
        FrameKind::Meyer => meyer_working_radius(cfg.frame.levels),
        FrameKind::Curvelet => curvelet_working_radius(cfg.frame.levels),
    };
    Ok(random_signal(grid, cfg.signal.radius_fraction * radius, cfg.signal.envelope, cfg.seed)?)
}

#[derive(Serialize)]
struct EdgeSummary {
    a: String,
    b: String,
    shared: usize,
    strong: usize,
    c_a: f64,
    c_b: f64,
}

fn edge_summaries(g: &OverlapGraph) -> Vec<EdgeSummary> {
    g.edges
        .iter()
        .map(|e| EdgeSummary {
            a: g.labels[e.a].clone(),
            b: g.labels[e.b].clone(),
            shared: e.shared.len(),
            strong: e.strong.len(),
            c_a: e.c_a,
            c_b: e.c_b,
        })
        .collect()
}

fn frame_check(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let grid = grid(cfg)?;
    let frame = frame(cfg, &grid)?;
    std::fs::write(out.join("frame.toml"), toml::to_string(frame.descriptor())?)?;
    let filters = out.join("filters");
    std::fs::create_dir_all(&filters)?;
    for band in frame.bands() {
        let (values, _) = ifft_to_real(&band.spectrum, grid.shape());
        let mut w = create(&filters.join(format!("{}.sgnb", band.label)))?;
        write_sgnb(&mut w, &grid, &values)?;
        w.flush()?;
    }
    let (a, b) = frame_bounds(&frame)?;
    let graph = OverlapGraph::build(&frame);
    let covered = overlap_graph(&frame).is_ok();
    let connected = graph.is_connected();
    let deviation = (a - 1.0).abs().max((b - 1.0).abs());
    let edges = edge_summaries(&graph);
    std::fs::write(out.join("overlap.json"), serde_json::to_string_pretty(&edges)? + "\n")?;
    let pass = deviation <= cfg.frame.tight_tol && covered && connected;
    summary(
        out,
        "frame-check",
        &json!({
            "command": "frame-check",
            "frame": frame.descriptor(),
            "bands": frame.labels(),
            "a": a,
            "b": b,
            "deviation": deviation,
            "tight_tol": cfg.frame.tight_tol,
            "covered": covered,
            "connected": connected,
            "edges": edges.len(),
            "warnings": frame.warnings(),
            "pass": pass,
        }),
    )?;
    if !pass {
        return Err(ValidationFailed(format!(
            "frame check: deviation {deviation:e}, covered {covered}, connected {connected}"
        ))
        .into());
    }
    Ok(())
}

fn sample(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let grid = grid(cfg)?;
    let frame = frame(cfg, &grid)?;
    let lats = lattices(cfg, &frame)?;
    let f = test_signal(cfg, &grid)?;
    let ms = MeasurementSet::measure(&f, &frame, &lats)?;
    write_signal(out, "signal", &grid, f.values())?;
    std::fs::write(out.join("measurements.json"), serde_json::to_string(&ms)? + "\n")?;
    let bands: Vec<_> = ms.bands.iter().map(|b| json!({ "label": b.label, "samples": b.magnitudes.len() })).collect();
    summary(
        out,
        "sample",
        &json!({
            "command": "sample",
            "seed": cfg.seed,
            "grid": grid,
            "frame": frame.descriptor().kind,
            "alpha": cfg.frame.alpha,
            "bands": bands,
            "samples": ms.bands.iter().map(|b| b.magnitudes.len()).sum::<usize>(),
            "norm": f.norm(),
        }),
    )
}

fn recover(cfg: &Config, out: &Path, input: &Path, reference: Option<&Path>) -> anyhow::Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let ms: MeasurementSet = serde_json::from_reader(BufReader::new(file))?;
    let frame = frame(cfg, &ms.grid)?;
    let reference = match reference {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let (g, values) = read_sgnb(BufReader::new(file))?;
            if g != ms.grid {
                return Err(sign_retrieval::Error::GridMismatch.into());
            }
            Some(values)
        }
        None => None,
    };
    let (signal, report) = match full_pipeline(&ms, &frame, &cfg.pipeline()) {
        Ok(r) => r,
        Err(e) => {
            let stage = match &e {
                sign_retrieval::Error::Stage { stage, .. } => Some(*stage),
                _ => None,
            };
            summary(
                out,
                "recover",
                &json!({ "command": "recover", "status": "failed", "stage": stage, "error": e.to_string() }),
            )?;
            return Err(e.into());
        }
    };
    write_signal(out, "recovered", &ms.grid, signal.values())?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let error = reference.as_ref().map(|r| sign_invariant_error(signal.values(), r));
    let stages: Vec<_> =
        report.bands.iter().map(|b| json!({ "label": b.label, "stage": b.stage, "residual": b.residual })).collect();
    summary(
        out,
        "recover",
        &json!({
            "command": "recover",
            "status": "ok",
            "bands": stages,
            "signs": report.signs,
            "verify_residual": report.verify_residual,
            "reference_error": error,
            "norm": signal.norm(),
        }),
    )
}

fn samples_table(c: &Counterexample) -> anyhow::Result<String> {
    let a = sample_on_lattice(&c.h1, &c.lattice)?;
    let b = sample_on_lattice(&c.h2, &c.lattice)?;
    let grid = c.h1.grid();
    let d = grid.dim();
    let mut s = String::new();
    s += &(0..d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    s += ",h1,h2,abs_h1,abs_h2\n";
    for ((&site, x), y) in c.lattice.sites().iter().zip(&a).zip(&b) {
        let p = grid.position(site);
        for v in &p[..d] {
            s += &format!("{v:e},");
        }
        s += &format!("{x:e},{y:e},{:e},{:e}\n", x.abs(), y.abs());
    }
    Ok(s)
}

fn counterexample(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let cc = &cfg.counterexample;
    let s = cc.s;
    if !cc.samples.is_multiple_of(4) || cc.samples == 0 || cc.refine == 0 {
        return Err(ValidationFailed(format!(
            "samples = {} must be a positive multiple of 4, refine = {} positive",
            cc.samples, cc.refine
        ))
        .into());
    }
    let g = counterexample_grid(s, cc.samples, cc.refine)?;
    let c = counterexample_pair(s, &g)?;
    write_signal(out, "h1", &g, c.h1.values())?;
    write_signal(out, "h2", &g, c.h2.values())?;
    std::fs::write(out.join("samples.csv"), samples_table(&c)?)?;
    let mags: Vec<f64> = sample_on_lattice(&c.h1, &c.lattice)?.iter().map(|v| v.abs()).collect();
    let oracle = recover_band_oracle(&mags, &c.lattice, c.h1.support())?;

    // Second axis is critical: 32 points over a period of 8, lattice spacing 1/2.
    let period = g.period()[0];
    let g2 = Grid::new(&[32, g.shape()[0]], &[8.0, period])?;
    let t = tensor_counterexample([1.0, s], &g2)?;
    write_signal(out, "tensor_h1", &g2, t.h1.values())?;
    write_signal(out, "tensor_h2", &g2, t.h2.values())?;

    let pass = c.checks.passed() && t.checks.passed() && oracle.candidates.len() >= 2;
    summary(
        out,
        "counterexample",
        &json!({
            "command": "counterexample",
            "s": s,
            "grid": g,
            "lattice_points": c.lattice.len(),
            "checks": c.checks,
            "oracle_candidates": oracle.candidates.len(),
            "tensor_grid": g2,
            "tensor_checks": t.checks,
            "verification": if pass { "PASS" } else { "FAIL" },
        }),
    )?;
    if !pass {
        return Err(ValidationFailed("counterexample checks failed".into()).into());
    }
    Ok(())
}

fn probe(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let grid = grid(cfg)?;
    let frame = frame(cfg, &grid)?;
    let lats = lattices(cfg, &frame)?;
    let f = test_signal(cfg, &grid)?;
    let report = stability_probe(&f, &frame, &lats, &cfg.probe.deltas, cfg.probe.trials, cfg.seed, &cfg.pipeline())?;
    std::fs::write(out.join("trials.csv"), report.trials_csv())?;
    std::fs::write(out.join("plot.dat"), report.plot_data())?;
    summary(
        out,
        "stability-probe",
        &json!({
            "command": "stability-probe",
            "seed": cfg.seed,
            "baseline_error": report.baseline_error,
            "levels": report.levels,
            "monotone": report.monotone,
        }),
    )
}

fn redundancy(cfg: &Config, out: &Path) -> anyhow::Result<()> {
    let meyer = redundancy_report(RedundancyInput::Meyer { alpha: cfg.frame.alpha })?;
    let curvelet =
        redundancy_report(RedundancyInput::Curvelet { alpha1: cfg.redundancy.alpha1, alpha2: cfg.redundancy.alpha2 })?;
    let mut csv = String::from("kind,factor0,factor1,total\n");
    for r in [&meyer, &curvelet] {
        let kind = match r.input {
            RedundancyInput::Meyer { .. } => "meyer",
            RedundancyInput::Curvelet { .. } => "curvelet",
        };
        let f1 = r.factors.get(1).map(|v| format!("{v:e}")).unwrap_or_default();
        csv += &format!("{kind},{:e},{f1},{:e}\n", r.factors[0], r.total);
    }
    std::fs::write(out.join("redundancy.csv"), csv)?;
    summary(out, "redundancy", &json!({ "command": "redundancy", "meyer": meyer, "curvelet": curvelet }))
}
