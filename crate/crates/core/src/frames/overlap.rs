use std::collections::VecDeque;

use serde::Serialize;

use super::SemiDiscreteFrame;
use crate::error::{Error, Result};

/// A bin belongs to the open cover set `U_lambda` when `|psi_lambda|` exceeds this.
pub const COVER_THRESHOLD: f64 = 1e-6;

/// Fraction of a filter's peak magnitude defining the well-conditioned
/// sub-region of an overlap.
pub const OVERLAP_LEVEL: f64 = 1e-2;

#[derive(Clone, Debug, Serialize)]
pub struct OverlapEdge {
    pub a: usize,
    pub b: usize,
    /// Working-band bins in `U_a` and `U_b`.
    pub shared: Vec<usize>,
    /// Sub-region where both filters reach `OVERLAP_LEVEL` of their peak
    /// (falls back to `shared` when that is empty).
    pub strong: Vec<usize>,
    /// `min |psi_a|` over `strong`.
    pub c_a: f64,
    /// `min |psi_b|` over `strong`.
    pub c_b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapGraph {
    pub labels: Vec<String>,
    pub edges: Vec<OverlapEdge>,
    /// Working-band bins outside every `U_lambda`.
    pub uncovered: Vec<usize>,
}

impl OverlapGraph {
    /// Graph of pairwise overlaps restricted to the working band, without
    /// checking the cover.
    pub fn build(frame: &SemiDiscreteFrame) -> OverlapGraph {
        let n = frame.grid().len();
        let working = frame.working();
        let mag: Vec<Vec<f64>> = frame.bands().iter().map(|b| b.spectrum.iter().map(|c| c.norm()).collect()).collect();
        let peak: Vec<f64> = mag.iter().map(|m| m.iter().cloned().fold(0.0, f64::max)).collect();
        let open: Vec<Vec<bool>> = mag.iter().map(|m| m.iter().map(|&v| v > COVER_THRESHOLD).collect()).collect();
        let uncovered = (0..n).filter(|&i| working[i] && !open.iter().any(|u| u[i])).collect();
        let mut edges = Vec::new();
        for a in 0..mag.len() {
            for b in a + 1..mag.len() {
                let shared: Vec<usize> = (0..n).filter(|&i| working[i] && open[a][i] && open[b][i]).collect();
                if shared.is_empty() {
                    continue;
                }
                let mut strong: Vec<usize> = shared
                    .iter()
                    .copied()
                    .filter(|&i| mag[a][i] >= OVERLAP_LEVEL * peak[a] && mag[b][i] >= OVERLAP_LEVEL * peak[b])
                    .collect();
                if strong.is_empty() {
                    strong = shared.clone();
                }
                let c_a = strong.iter().map(|&i| mag[a][i]).fold(f64::INFINITY, f64::min);
                let c_b = strong.iter().map(|&i| mag[b][i]).fold(f64::INFINITY, f64::min);
                edges.push(OverlapEdge { a, b, shared, strong, c_a, c_b });
            }
        }
        OverlapGraph { labels: frame.labels(), edges, uncovered }
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, &OverlapEdge)> {
        self.edges.iter().filter_map(move |e| {
            if e.a == node {
                Some((e.b, e))
            } else if e.b == node {
                Some((e.a, e))
            } else {
                None
            }
        })
    }

    /// Connected components over the given edges, as sorted node lists.
    pub fn components_with(&self, keep: impl Fn(&OverlapEdge) -> bool) -> Vec<Vec<usize>> {
        let n = self.labels.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for (v, e) in self.neighbors(u) {
                    if comp[v] == usize::MAX && keep(e) {
                        comp[v] = id;
                        members.push(v);
                        q.push_back(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components_with(|_| true).len() == 1
    }
}

/// Overlap graph on the frame's working band; fails if the open supports
/// leave part of the working band uncovered.
pub fn overlap_graph(frame: &SemiDiscreteFrame) -> Result<OverlapGraph> {
    let g = OverlapGraph::build(frame);
    if !g.uncovered.is_empty() {
        let grid = frame.grid();
        let bins = g.uncovered.iter().map(|&i| grid.bins(i)[..grid.dim()].to_vec()).collect();
        return Err(Error::CoverGap(bins));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blcore::Grid;
    use crate::frames::{curvelet_windows, meyer_frame};
    use num_complex::Complex64;

    #[test]
    fn meyer_chain() {
        let g = Grid::line(1024, 24.0).unwrap();
        let f = meyer_frame(4, &g).unwrap();
        let graph = overlap_graph(&f).unwrap();
        let mut pairs: Vec<(usize, usize)> = graph.edges.iter().map(|e| (e.a, e.b)).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(graph.is_connected());
        for e in &graph.edges {
            assert!(e.c_a > 0.0 && e.c_b > 0.0);
        }
    }

    #[test]
    fn meyer_connected_for_all_levels() {
        for levels in 1..=6 {
            let g = Grid::line(2048, 12.0).unwrap();
            let f = meyer_frame(levels, &g).unwrap();
            assert!(overlap_graph(&f).unwrap().is_connected(), "J = {levels}");
        }
    }

    #[test]
    fn disjoint_bands() {
        let g = Grid::line(32, 4.0).unwrap();
        let lo: Vec<Complex64> = (0..32).map(|i| Complex64::new((g.freq_norm(i) < 1.0) as u8 as f64, 0.0)).collect();
        let hi: Vec<Complex64> = (0..32).map(|i| Complex64::new((g.freq_norm(i) > 2.0) as u8 as f64, 0.0)).collect();
        let f = SemiDiscreteFrame::new(&g, vec![("lo".into(), lo), ("hi".into(), hi)], vec![true; 32]).unwrap();
        let graph = OverlapGraph::build(&f);
        assert!(!graph.is_connected());
        assert!(matches!(overlap_graph(&f), Err(Error::CoverGap(_))));
    }

    #[test]
    fn single_band_covers() {
        let g = Grid::line(16, 1.0).unwrap();
        let f = SemiDiscreteFrame::new(&g, vec![("id".into(), vec![Complex64::new(1.0, 0.0); 16])], vec![true; 16])
            .unwrap();
        let graph = overlap_graph(&f).unwrap();
        assert!(graph.edges.is_empty() && graph.is_connected());
    }

    #[test]
    fn curvelet_graph_connected() {
        let g = Grid::square(128, 1.5).unwrap();
        let f = curvelet_windows(2, &g).unwrap();
        assert!(overlap_graph(&f).unwrap().is_connected());
    }
}
