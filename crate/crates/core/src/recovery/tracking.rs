//! Sign changes of `g` from the zeros of `g^2` along grid lines.

use num_complex::Complex64;

use crate::blcore::fft::{fft_axis, ifft_to_real};
use crate::blcore::{AliasMap, DiagonalLayout, Grid, SamplingLattice};
use crate::error::Result;

/// Below this `vertex / curvature` ratio (fine-grid units squared) a
/// minimum of `g^2` is a sign change.
pub(crate) const CROSSING: f64 = 1.0;
/// Ratios in this range, relative to the crossing threshold, are
/// classified but flagged as uncertain.
const GRAY: (f64, f64) = (0.2, 5.0);
/// Down-weighting of uncertain edges in the spanning tree.
const GRAY_WEIGHT: f64 = 1e-3;

/// A tree edge whose parity is uncertain, with the lattice sites below it.
pub(crate) struct GrayEdge {
    pub(crate) sites: Vec<usize>,
}

pub(crate) struct Tracked {
    /// Sign per lattice sample (0 where the magnitude is zero).
    pub(crate) site_signs: Vec<f64>,
    /// Uncertain tree edges, most uncertain first.
    pub(crate) gray: Vec<GrayEdge>,
    /// Every tree edge carrying a minimum of `g^2`, most uncertain first;
    /// filled only on request.
    pub(crate) candidates: Vec<GrayEdge>,
}

/// Fine-grid factor giving roughly 512 points per shortest period of `g`
/// along `axis`, as a power of two in [8, 128].
fn default_upsample(grid: &Grid, mask: &[bool], axis: usize) -> usize {
    let fmax = (0..grid.len()).filter(|&i| mask[i]).map(|i| grid.freq(i)[axis].abs()).fold(0.0, f64::max);
    let want = (512.0 * fmax * grid.spacing(axis)).ceil().max(1.0) as usize;
    want.next_power_of_two().clamp(8, 128)
}

/// Minima of `g^2` found on one grid edge, as `vertex / curvature` ratios.
#[derive(Clone, Default)]
struct EdgeInfo {
    ratios: Vec<f64>,
}

impl EdgeInfo {
    fn parity(&self, crossing: f64) -> bool {
        self.ratios.iter().filter(|&&r| r < crossing).count() % 2 == 1
    }

    /// `|ln(r / crossing)|` of the least certain minimum in the gray range.
    fn gray_score(&self, crossing: f64) -> Option<f64> {
        self.ratios
            .iter()
            .filter(|&&r| (GRAY.0 * crossing..=GRAY.1 * crossing).contains(&r))
            .map(|&r| (r / crossing).ln().abs())
            .min_by(f64::total_cmp)
    }
}

/// Result of scanning `g^2`, from which sign patterns can be derived for
/// any crossing threshold.
pub(crate) struct Scan {
    edges: Vec<EdgeInfo>,
    gabs: Vec<f64>,
    neighbors: Vec<usize>,
}

pub(crate) fn scan(
    grid: &Grid,
    layout: &DiagonalLayout,
    mask: &[bool],
    sum_mask: &[bool],
    b: &[f64],
    upsample: Option<usize>,
) -> Result<Scan> {
    let d = grid.dim();
    let n = grid.len();
    let b2: Vec<f64> = b.iter().map(|v| v * v).collect();
    let map = AliasMap::new(grid, layout, sum_mask)?;
    let q_spec = map.spectrum_from_samples(grid, &b2);
    let (q, _) = ifft_to_real(&q_spec, grid.shape());
    let gabs: Vec<f64> = q.iter().map(|v| v.max(0.0).sqrt()).collect();

    let mut edges = vec![EdgeInfo::default(); d * n];
    for axis in 0..d {
        let u = upsample.unwrap_or_else(|| default_upsample(grid, mask, axis));
        scan_axis(grid, &q_spec, axis, u, &mut edges[axis * n..(axis + 1) * n]);
    }
    let neighbors = (0..d * n)
        .map(|e| {
            let (axis, p) = (e / n, e % n);
            let mut idx = grid.unravel(p);
            idx[axis] = (idx[axis] + 1) % grid.shape()[axis];
            grid.ravel(idx)
        })
        .collect();
    Ok(Scan { edges, gabs, neighbors })
}

impl Scan {
    /// Largest `vertex / curvature` ratio seen, bounding the useful thresholds.
    pub(crate) fn max_ratio(&self) -> f64 {
        self.edges.iter().flat_map(|e| &e.ratios).cloned().filter(|r| r.is_finite()).fold(0.0, f64::max)
    }

    /// Signs from a maximum spanning tree over grid edges, with minima below
    /// `crossing` counted as sign changes.
    pub(crate) fn signs(&self, lat: &SamplingLattice, b: &[f64], crossing: f64, all: bool) -> Tracked {
        let n = self.gabs.len();
        let gabs = &self.gabs;
        let gray_score: Vec<Option<f64>> = self.edges.iter().map(|e| e.gray_score(crossing)).collect();
        let weight: Vec<f64> = (0..self.edges.len())
            .map(|e| {
                let w = gabs[e % n].min(gabs[self.neighbors[e]]);
                if gray_score[e].is_some() {
                    w * GRAY_WEIGHT
                } else {
                    w
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_unstable_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
        let mut uf = UnionFind::new(n);
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for &e in &order {
            let (p, v) = (e % n, self.neighbors[e]);
            if uf.union(p, v) {
                adj[p].push((v, e));
                adj[v].push((p, e));
            }
        }

        // Propagate from the largest |g| with an iterative DFS, recording
        // entry/exit times so subtrees can be recovered.
        let start = (0..n).max_by(|&a, &b| gabs[a].total_cmp(&gabs[b]).then(b.cmp(&a))).unwrap_or(0);
        let mut sign = vec![0i8; n];
        let mut tin = vec![0usize; n];
        let mut tout = vec![0usize; n];
        let mut parent_edge = vec![usize::MAX; n];
        let mut clock = 0usize;
        sign[start] = 1;
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        tin[start] = clock;
        clock += 1;
        while let Some(top) = stack.last_mut() {
            let u = top.0;
            if top.1 < adj[u].len() {
                let (v, e) = adj[u][top.1];
                top.1 += 1;
                if sign[v] == 0 {
                    sign[v] = if self.edges[e].parity(crossing) { -sign[u] } else { sign[u] };
                    parent_edge[v] = e;
                    tin[v] = clock;
                    clock += 1;
                    stack.push((v, 0));
                }
            } else {
                tout[u] = clock;
                stack.pop();
            }
        }

        let site_signs: Vec<f64> =
            lat.sites().iter().zip(b).map(|(&s, &m)| if m == 0.0 { 0.0 } else { sign[s] as f64 }).collect();

        let subtree = |v: usize| GrayEdge {
            sites: lat
                .sites()
                .iter()
                .enumerate()
                .filter(|(_, &s)| tin[s] >= tin[v] && tin[s] < tout[v])
                .map(|(i, _)| i)
                .collect(),
        };
        let ranked = |score: &dyn Fn(usize) -> Option<f64>| -> Vec<GrayEdge> {
            let mut list: Vec<(f64, usize)> = (0..n)
                .filter(|&v| parent_edge[v] != usize::MAX)
                .filter_map(|v| score(parent_edge[v]).map(|s| (s, v)))
                .collect();
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            list.into_iter().map(|(_, v)| subtree(v)).collect()
        };
        let gray = ranked(&|e| gray_score[e]);
        let candidates = if all {
            ranked(&|e| {
                self.edges[e]
                    .ratios
                    .iter()
                    .map(|&r| (r.max(f64::MIN_POSITIVE) / crossing).ln().abs())
                    .min_by(f64::total_cmp)
            })
        } else {
            Vec::new()
        };
        Tracked { site_signs, gray, candidates }
    }
}

/// Evaluates `g^2` on every line along `axis` at `u` times the grid
/// resolution and records sign changes per grid edge.
fn scan_axis(grid: &Grid, q_spec: &[Complex64], axis: usize, u: usize, edges: &mut [EdgeInfo]) {
    let shape = grid.shape();
    let na = shape[axis];
    // Transform back along the other axis so each line holds a 1D spectrum.
    let mut partial = q_spec.to_vec();
    if grid.dim() == 2 {
        let other = 1 - axis;
        fft_axis(&mut partial, shape, other, true);
        let s = 1.0 / shape[other] as f64;
        partial.iter_mut().for_each(|c| *c *= s);
    }
    let lines = grid.len() / na;
    let m = na * u;
    let mut fine = vec![Complex64::new(0.0, 0.0); m];
    for line in 0..lines {
        let at = |i: usize| -> usize {
            if grid.dim() == 1 {
                i
            } else if axis == 0 {
                i * shape[1] + line
            } else {
                line * shape[1] + i
            }
        };
        fine.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let scale = u as f64 / m as f64;
        for i in 0..na {
            let k = grid.signed_bin(axis, i);
            let v = partial[at(i)] * scale;
            if k == -(na as i64) / 2 {
                fine[m - na / 2] += v * 0.5;
                fine[na / 2] += v * 0.5;
            } else {
                fine[k.rem_euclid(m as i64) as usize] += v;
            }
        }
        fft_axis(&mut fine, &[m], 0, true);
        let qf: Vec<f64> = fine.iter().map(|c| c.re).collect();
        for t in 0..m {
            let prev = qf[(t + m - 1) % m];
            let next = qf[(t + 1) % m];
            let cur = qf[t];
            if !(cur <= prev && cur < next) {
                continue;
            }
            let a = (prev + next - 2.0 * cur) / 2.0;
            if a <= 0.0 {
                continue;
            }
            let bb = (next - prev) / 2.0;
            let vertex = cur - bb * bb / (4.0 * a);
            let r = vertex / a;
            let off = -bb / (2.0 * a);
            let tt = if off < 0.0 { t } else { (t + 1) % m };
            let p = ((tt + m - 1) % m) / u;
            edges[at(p)].ratios.push(r);
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
