use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic sampling grid in one or two dimensions.
///
/// Axis `i` has `n[i]` points spaced `period[i] / n[i]` apart. Arrays over the
/// grid are stored row-major (last axis fastest); spectra use FFT ordering, so
/// storage index `i` holds bin `i` for `i < n/2` and `i - n` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    n: Vec<usize>,
    period: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    n: Vec<usize>,
    period: Vec<f64>,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Grid> {
        Grid::new(&r.n, &r.period)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> GridRepr {
        GridRepr { n: g.n, period: g.period }
    }
}

impl Grid {
    pub fn new(n: &[usize], period: &[f64]) -> Result<Grid> {
        if n.is_empty() || n.len() > 2 {
            return Err(Error::InvalidGrid(format!("dimension {} not in {{1,2}}", n.len())));
        }
        if n.len() != period.len() {
            return Err(Error::InvalidGrid("extent and period lengths differ".into()));
        }
        for (&ni, &li) in n.iter().zip(period) {
            if ni < 4 || !ni.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("extent {ni} is not a power of two >= 4")));
            }
            if !(li.is_finite() && li > 0.0) {
                return Err(Error::InvalidGrid(format!("period {li} must be positive")));
            }
        }
        Ok(Grid { n: n.to_vec(), period: period.to_vec() })
    }

    pub fn line(n: usize, period: f64) -> Result<Grid> {
        Grid::new(&[n], &[period])
    }

    pub fn square(n: usize, period: f64) -> Result<Grid> {
        Grid::new(&[n, n], &[period, period])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn period(&self) -> &[f64] {
        &self.period
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.n[axis] as f64
    }

    /// Area (or length) of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Frequency spacing `1 / L_i` on axis `i`.
    pub fn bin_width(&self, axis: usize) -> f64 {
        1.0 / self.period[axis]
    }

    /// Per-axis coordinates of a flat index. Unused axes are 0.
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        if self.n.len() == 1 {
            [flat, 0]
        } else {
            [flat / self.n[1], flat % self.n[1]]
        }
    }

    #[inline]
    pub fn ravel(&self, idx: [usize; 2]) -> usize {
        if self.n.len() == 1 {
            idx[0]
        } else {
            idx[0] * self.n[1] + idx[1]
        }
    }

    /// Signed bin number for a storage position along one axis.
    #[inline]
    pub fn signed_bin(&self, axis: usize, i: usize) -> i64 {
        let n = self.n[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Signed bins of a flat spectral index. Unused axes are 0.
    #[inline]
    pub fn bins(&self, flat: usize) -> [i64; 2] {
        let [a, b] = self.unravel(flat);
        if self.n.len() == 1 {
            [self.signed_bin(0, a), 0]
        } else {
            [self.signed_bin(0, a), self.signed_bin(1, b)]
        }
    }

    /// Flat spectral index of a signed bin vector, wrapping modulo the extent.
    #[inline]
    pub fn bin_index(&self, k: [i64; 2]) -> usize {
        let w = |axis: usize, k: i64| k.rem_euclid(self.n[axis] as i64) as usize;
        if self.n.len() == 1 {
            w(0, k[0])
        } else {
            w(0, k[0]) * self.n[1] + w(1, k[1])
        }
    }

    /// Physical frequency of a flat spectral index.
    #[inline]
    pub fn freq(&self, flat: usize) -> [f64; 2] {
        let k = self.bins(flat);
        if self.n.len() == 1 {
            [k[0] as f64 / self.period[0], 0.0]
        } else {
            [k[0] as f64 / self.period[0], k[1] as f64 / self.period[1]]
        }
    }

    #[inline]
    pub fn freq_norm(&self, flat: usize) -> f64 {
        let [a, b] = self.freq(flat);
        a.hypot(b)
    }

    /// Physical position of a flat grid index.
    #[inline]
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unravel(flat);
        if self.n.len() == 1 {
            [a as f64 * self.spacing(0), 0.0]
        } else {
            [a as f64 * self.spacing(0), b as f64 * self.spacing(1)]
        }
    }

    /// Largest frequency magnitude representable without touching the
    /// Nyquist bin on any axis.
    pub fn nyquist(&self) -> f64 {
        (0..self.dim()).map(|a| (self.n[a] / 2 - 1) as f64 / self.period[a]).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_extents() {
        assert!(Grid::line(6, 1.0).is_err());
        assert!(Grid::line(2, 1.0).is_err());
        assert!(Grid::line(8, 0.0).is_err());
        assert!(Grid::new(&[8, 8, 8], &[1.0; 3]).is_err());
        assert!(Grid::line(8, 1.0).is_ok());
    }

    #[test]
    fn bins_wrap() {
        let g = Grid::square(8, 2.0).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.bin_index(g.bins(flat)), flat);
        }
        assert_eq!(g.signed_bin(0, 4), -4);
        assert_eq!(g.freq(g.bin_index([-1, 3])), [-0.5, 1.5]);
    }
}
