//! Combining per-band reconstructions `±(f * psi_lambda)` into one signal.
//!
//! Two bands that overlap in frequency see the same `f^` there, so the
//! deconvolved spectra `g^_lambda / psi^_lambda` agree on the overlap up to
//! the unknown signs. Matching them edge by edge and propagating over the
//! overlap graph leaves a single global sign.

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blcore::{canonical_sign, forward_spectrum, l2, sample_on_lattice, sign_invariant_error, BandLimitedSignal};
use crate::error::{Error, Result};
use crate::frames::{analyze, synthesize, OverlapEdge, OverlapGraph, SemiDiscreteFrame};
use crate::recovery::{recover_band, BandDiagnostics, MeasurementSet, RecoveryConfig};

/// Deconvolved values below this fraction of the larger band spectrum are
/// treated as zero.
const ROUNDING_FLOOR: f64 = 1e-10;

/// Thresholds for sign matching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StitchConfig {
    /// Spectral threshold relative to the largest deconvolved value on the overlap.
    pub tau: f64,
    /// Minimum confidence for an edge to be used.
    pub acceptance: f64,
    /// Bands whose norm is below this fraction of the largest band norm
    /// need not be reached by propagation.
    pub negligible: f64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig { tau: 1e-4, acceptance: 0.9, negligible: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignMatchEdge {
    pub a: String,
    pub b: String,
    /// Flat grid indices of the bins compared.
    pub region: Vec<usize>,
    pub relative_sign: i8,
    pub confidence: f64,
    pub accepted: bool,
}

/// Compares `g_a^ / psi_a^` with `g_b^ / psi_b^` on the well-conditioned
/// part of the overlap of `edge` (both filters at least `OVERLAP_LEVEL` of
/// their peak), where dividing by the filters amplifies errors by at most
/// `1 / OVERLAP_LEVEL`.
///
/// `tau` is relative to the largest deconvolved magnitude there.
pub fn match_pair(
    ga: &BandLimitedSignal,
    gb: &BandLimitedSignal,
    frame: &SemiDiscreteFrame,
    edge: &OverlapEdge,
    tau: f64,
) -> Result<SignMatchEdge> {
    let bands = frame.bands();
    let (pa, pb) = (&bands[edge.a], &bands[edge.b]);
    let sa = forward_spectrum(ga)?;
    let sb = forward_spectrum(gb)?;
    let ea: Vec<Complex64> = edge.strong.iter().map(|&i| sa[i] / pa.spectrum[i]).collect();
    let eb: Vec<Complex64> = edge.strong.iter().map(|&i| sb[i] / pb.spectrum[i]).collect();
    let peak = ea.iter().chain(&eb).map(|c| c.norm()).fold(0.0, f64::max);
    // Rounding noise in an empty overlap must not count as signal.
    let scale = sa.iter().chain(&sb).map(|c| c.norm()).fold(0.0, f64::max);
    let cut = (tau * peak).max(ROUNDING_FLOOR * scale);
    let keep: Vec<usize> =
        (0..edge.strong.len()).filter(|&k| peak > 0.0 && ea[k].norm() > cut && eb[k].norm() > cut).collect();
    if keep.is_empty() {
        return Err(Error::NoInformativeOverlap(pa.label.clone(), pb.label.clone()));
    }
    let (mut dot, mut na, mut nb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for &k in &keep {
        dot += ea[k] * eb[k].conj();
        na += ea[k].norm_sqr();
        nb += eb[k].norm_sqr();
    }
    Ok(SignMatchEdge {
        a: pa.label.clone(),
        b: pb.label.clone(),
        region: keep.iter().map(|&k| edge.strong[k]).collect(),
        relative_sign: if dot.re < 0.0 { -1 } else { 1 },
        confidence: (dot.norm() / (na * nb).sqrt()).min(1.0),
        accepted: false,
    })
}

/// Result of sign propagation.
#[derive(Clone, Debug)]
pub struct Propagation {
    /// Parts with consistent signs, canonicalized so the synthesized signal
    /// has a positive first significant value.
    pub parts: Vec<BandLimitedSignal>,
    /// Sign applied to each input part.
    pub signs: Vec<i8>,
    pub edges: Vec<SignMatchEdge>,
}

/// Makes the signs of `parts` mutually consistent by breadth-first
/// propagation from the most energetic band over accepted edges.
pub fn propagate_signs(
    parts: &[BandLimitedSignal],
    frame: &SemiDiscreteFrame,
    graph: &OverlapGraph,
    config: &StitchConfig,
) -> Result<Propagation> {
    let n = frame.len();
    if parts.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: parts.len() });
    }
    let norms: Vec<f64> = parts.iter().map(|p| p.norm()).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let negligible: Vec<bool> = norms.iter().map(|&v| v <= config.negligible * top).collect();

    let mut edges: Vec<SignMatchEdge> = graph
        .edges
        .par_iter()
        .map(|e| {
            if negligible[e.a] || negligible[e.b] {
                return None;
            }
            match_pair(&parts[e.a], &parts[e.b], frame, e, config.tau).ok()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    for e in &mut edges {
        e.accepted = e.confidence >= config.acceptance;
    }
    let index = |label: &str| frame.band_index(label).expect("edge labels come from the frame");
    let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for e in edges.iter().filter(|e| e.accepted) {
        let (a, b) = (index(&e.a), index(&e.b));
        adj[a].push((b, e.relative_sign));
        adj[b].push((a, e.relative_sign));
    }

    let mut signs = vec![0i8; n];
    if top > 0.0 {
        let start = (0..n).max_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(b.cmp(&a))).unwrap_or(0);
        signs[start] = 1;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            for &(v, s) in &adj[u] {
                if signs[v] == 0 {
                    signs[v] = signs[u] * s;
                    q.push_back(v);
                }
            }
        }
    }
    if (0..n).any(|i| signs[i] == 0 && !negligible[i]) {
        let comps =
            graph.components_with(|e| edges.iter().any(|m| m.accepted && index(&m.a) == e.a && index(&m.b) == e.b));
        let labels = comps
            .into_iter()
            .filter(|c| c.iter().any(|&i| !negligible[i]))
            .map(|c| c.into_iter().map(|i| frame.bands()[i].label.clone()).collect())
            .collect();
        return Err(Error::PropagationIncomplete(labels));
    }
    for e in edges.iter().filter(|e| e.accepted) {
        if signs[index(&e.a)] * signs[index(&e.b)] != e.relative_sign {
            return Err(Error::SignConflict(e.a.clone(), e.b.clone()));
        }
    }
    for s in signs.iter_mut().filter(|s| **s == 0) {
        *s = 1;
    }
    let mut out: Vec<BandLimitedSignal> = parts.iter().zip(&signs).map(|(p, &s)| p.scaled(s as f64)).collect();
    let synth = synthesize(&out, frame)?;
    if canonical_sign(synth.values()) < 0.0 {
        out = out.iter().map(|p| p.scaled(-1.0)).collect();
        signs.iter_mut().for_each(|s| *s = -*s);
    }
    Ok(Propagation { parts: out, signs, edges })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub recovery: RecoveryConfig,
    pub stitch: StitchConfig,
    /// Maximum relative discrepancy between the input magnitudes and those
    /// of the output; `None` skips the check.
    pub verify_tolerance: Option<f64>,
}

impl PipelineConfig {
    pub fn verified() -> Self {
        PipelineConfig { verify_tolerance: Some(1e-5), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub bands: Vec<BandDiagnostics>,
    pub edges: Vec<SignMatchEdge>,
    pub signs: Vec<i8>,
    /// `| |out * psi_lambda|(X_lambda) - b | / |b|` over all bands.
    pub verify_residual: f64,
    /// Sign-invariant relative error against a known signal, when given.
    pub reference_error: Option<f64>,
}

impl PipelineReport {
    pub fn with_reference(mut self, out: &BandLimitedSignal, reference: &BandLimitedSignal) -> Self {
        self.reference_error = Some(sign_invariant_error(out.values(), reference.values()));
        self
    }
}

/// Recovers `f` up to a global sign from unsigned frame samples.
pub fn full_pipeline(
    measurements: &MeasurementSet,
    frame: &SemiDiscreteFrame,
    config: &PipelineConfig,
) -> Result<(BandLimitedSignal, PipelineReport)> {
    if &measurements.grid != frame.grid() {
        return Err(Error::GridMismatch.at("validate"));
    }
    measurements.validate().map_err(|e| e.at("validate"))?;
    if measurements.bands.len() != frame.len() {
        return Err(Error::ShapeMismatch { expected: frame.len(), got: measurements.bands.len() }.at("validate"));
    }
    for (m, b) in measurements.bands.iter().zip(frame.bands()) {
        if m.label != b.label {
            return Err(
                Error::Precondition(format!("measurement band {} where {} expected", m.label, b.label)).at("validate")
            );
        }
    }
    let lattices = measurements.lattices().map_err(|e| e.at("validate"))?;
    let graph = OverlapGraph::build(frame);

    let recovered: Vec<(BandLimitedSignal, BandDiagnostics)> = measurements
        .bands
        .par_iter()
        .zip(&lattices)
        .zip(frame.bands())
        .map(|((m, lat), band)| {
            let (g, mut d) =
                recover_band(&m.magnitudes, lat, &band.support, &config.recovery).map_err(|e| match e {
                    Error::RecoveryFailed { best, .. } => Error::RecoveryFailed { label: band.label.clone(), best },
                    e => e,
                })?;
            d.label = band.label.clone();
            Ok((g, d))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at("recover"))?;
    let (parts, diags): (Vec<_>, Vec<_>) = recovered.into_iter().unzip();

    let prop = propagate_signs(&parts, frame, &graph, &config.stitch).map_err(|e| e.at("stitch"))?;
    let out = synthesize(&prop.parts, frame).map_err(|e| e.at("synthesize"))?;

    let verify_residual = remeasure_residual(&out, frame, &lattices, measurements).map_err(|e| e.at("verify"))?;
    if let Some(tol) = config.verify_tolerance {
        if !(verify_residual <= tol) {
            return Err(Error::Verification(verify_residual).at("verify"));
        }
    }
    let report =
        PipelineReport { bands: diags, edges: prop.edges, signs: prop.signs, verify_residual, reference_error: None };
    Ok((out, report))
}

fn remeasure_residual(
    out: &BandLimitedSignal,
    frame: &SemiDiscreteFrame,
    lattices: &[crate::blcore::SamplingLattice],
    measurements: &MeasurementSet,
) -> Result<f64> {
    let parts = analyze(out, frame)?;
    let (mut diff, mut tot) = (0.0, 0.0);
    for ((p, lat), m) in parts.iter().zip(lattices).zip(&measurements.bands) {
        let s = sample_on_lattice(p, lat)?;
        for (v, b) in s.iter().zip(&m.magnitudes) {
            diff += (v.abs() - b).powi(2);
            tot += b * b;
        }
    }
    Ok(if tot > 0.0 { diff.sqrt() / tot.sqrt() } else { l2(out.values()) })
}
