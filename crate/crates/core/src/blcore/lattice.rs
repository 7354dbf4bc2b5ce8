use nalgebra::{DMatrix, DVector};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Per-axis layout of a lattice `diag(q_i h_i) Z^d + o h` on the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalLayout {
    /// Grid points between neighbouring sites.
    pub steps: Vec<usize>,
    /// Grid index of the first site, in `0..steps[i]`.
    pub offsets: Vec<usize>,
    /// Sites per axis within one period.
    pub counts: Vec<usize>,
}

/// Lattice `G Z^d + v` restricted to one period of a grid.
#[derive(Clone, Debug)]
pub struct SamplingLattice {
    grid: Grid,
    generator: DMatrix<f64>,
    shift: Vec<f64>,
    sites: Vec<usize>,
    indices: Vec<[i64; 2]>,
    layout: Option<DiagonalLayout>,
}

fn near_int(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0)).then_some(r as i64)
}

impl SamplingLattice {
    /// Builds the lattice, failing unless every generator column, the shift
    /// and every period vector are commensurate with the grid.
    pub fn new(grid: &Grid, generator: DMatrix<f64>, shift: Option<Vec<f64>>) -> Result<Self> {
        let d = grid.dim();
        if generator.nrows() != d || generator.ncols() != d {
            return Err(Error::ShapeMismatch { expected: d, got: generator.nrows() });
        }
        let shift = shift.unwrap_or_else(|| vec![0.0; d]);
        if shift.len() != d {
            return Err(Error::ShapeMismatch { expected: d, got: shift.len() });
        }
        let det = generator.determinant();
        let scale: f64 = generator.column_iter().map(|c| c.norm()).product();
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::Singular(det));
        }
        // Generator in grid units.
        let gg = DMatrix::from_fn(d, d, |i, j| generator[(i, j)] / grid.spacing(i));
        let mut gi = vec![[0i64; 2]; d];
        for j in 0..d {
            for i in 0..d {
                gi[j][i] = near_int(gg[(i, j)]).ok_or_else(|| {
                    Error::OffGrid(format!("generator column {j} axis {i} is {} grid steps", gg[(i, j)]))
                })?;
            }
        }
        let mut v = [0i64; 2];
        for i in 0..d {
            v[i] = near_int(shift[i] / grid.spacing(i))
                .ok_or_else(|| Error::OffGrid(format!("shift on axis {i} is off-grid")))?;
        }
        let ginv = gg.clone().try_inverse().ok_or(Error::Singular(det))?;
        for axis in 0..d {
            let p = ginv.column(axis) * grid.shape()[axis] as f64;
            if p.iter().any(|&x| near_int(x).is_none()) {
                return Err(Error::OffGrid(format!("period on axis {axis} is not a lattice vector")));
            }
        }

        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || gi[j][i] == 0)) && (0..d).all(|i| gi[i][i] > 0);
        let (sites, indices, layout) = if diagonal {
            let steps: Vec<usize> = (0..d).map(|i| gi[i][i] as usize).collect();
            let offsets: Vec<usize> = (0..d).map(|i| v[i].rem_euclid(steps[i] as i64) as usize).collect();
            let counts: Vec<usize> = (0..d).map(|i| grid.shape()[i] / steps[i]).collect();
            let total: usize = counts.iter().product();
            let mut sites = Vec::with_capacity(total);
            let mut indices = Vec::with_capacity(total);
            for t in 0..total {
                let j = if d == 1 { [t, 0] } else { [t / counts[1], t % counts[1]] };
                let mut pos = [0usize; 2];
                let mut n = [0i64; 2];
                for i in 0..d {
                    pos[i] = offsets[i] + j[i] * steps[i];
                    n[i] = (pos[i] as i64 - v[i]) / steps[i] as i64;
                }
                sites.push(grid.ravel(pos));
                indices.push(n);
            }
            (sites, indices, Some(DiagonalLayout { steps, offsets, counts }))
        } else {
            let mut found: Vec<([i64; 2], usize)> = Vec::new();
            for flat in 0..grid.len() {
                let x = grid.unravel(flat);
                let rel = DVector::from_fn(d, |i, _| (x[i] as i64 - v[i]) as f64);
                let n = &ginv * rel;
                let mut idx = [0i64; 2];
                if (0..d).all(|i| near_int(n[i]).map(|k| idx[i] = k).is_some()) {
                    found.push((idx, flat));
                }
            }
            found.sort();
            let expected = grid.len() as f64 / gg.determinant().abs();
            if (found.len() as f64 - expected).abs() > 0.5 {
                return Err(Error::OffGrid(format!("found {} sites, expected {expected}", found.len())));
            }
            let (indices, sites) = found.into_iter().unzip();
            (sites, indices, None)
        };
        Ok(SamplingLattice { grid: grid.clone(), generator, shift, sites, indices, layout })
    }

    /// `diag(spacing) Z^d`.
    pub fn rectangular(grid: &Grid, spacing: &[f64]) -> Result<Self> {
        let g = DMatrix::from_diagonal(&DVector::from_column_slice(spacing));
        SamplingLattice::new(grid, g, None)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Flat grid indices of the sites, in lexicographic lattice-index order.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Lattice coordinates `n` with site `= G n + v`, aligned with [`Self::sites`].
    pub fn indices(&self) -> &[[i64; 2]] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn layout(&self) -> Option<&DiagonalLayout> {
        self.layout.as_ref()
    }

    /// Points per unit volume, `1 / |det G|`.
    pub fn density(&self) -> f64 {
        1.0 / self.generator.determinant().abs()
    }
}
