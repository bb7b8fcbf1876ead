use crate::error::{Error, Result};

/// Uniform Cartesian grid on the cube `[-L, L]^3`.
///
/// Nodes sit at `x_i = -L + i h` with `h = 2L / (n - 1)`, so both faces of the
/// box are grid nodes. Flat indices run x-fastest: `i + n (j + n k)`.
///
/// Spectral operators treat the grid as one period of length `P = n h` (one
/// spacing longer than the box), which keeps the two faces distinct lattice
/// points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

pub const MIN_NODES_PER_AXIS: usize = 16;

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < MIN_NODES_PER_AXIS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES_PER_AXIS} nodes per axis, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { n, half_width })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Length of one spectral period along each axis.
    #[inline]
    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one grid cell, `h^3`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.ijk(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// True when the node lies on one of the six faces of the box.
    #[inline]
    pub fn on_box_face(&self, idx: usize) -> bool {
        let last = self.n - 1;
        self.ijk(idx).iter().any(|&c| c == 0 || c == last)
    }

    /// Signed integer frequency index for FFT bin `m` (in `[-n/2, n/2)`).
    #[inline]
    pub fn centered(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < (n + 1) / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular frequency of FFT bin `m` along one axis.
    #[inline]
    pub fn frequency(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.centered(m) as f64 / self.period()
    }

    /// Spacing of the frequency lattice, `2 pi / P`.
    #[inline]
    pub fn frequency_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period()
    }

    pub fn positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |idx| self.position(idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_coarse_grids() {
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(32, 0.0).is_err());
        assert!(Grid::new(32, -1.0).is_err());
    }

    #[test]
    fn faces_are_nodes() {
        let g = Grid::new(32, 1.0).unwrap();
        assert_relative_eq!(g.coord(0), -1.0);
        assert_relative_eq!(g.coord(31), 1.0, epsilon = 1e-14);
        assert_relative_eq!(g.period(), 32.0 * 2.0 / 31.0, epsilon = 1e-14);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(17, 2.0).unwrap();
        for idx in [0, 1, 17, 17 * 17 + 3, g.len() - 1] {
            let [i, j, k] = g.ijk(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
    }

    #[test]
    fn centered_bins() {
        let g = Grid::new(16, 1.0).unwrap();
        assert_eq!(g.centered(0), 0);
        assert_eq!(g.centered(7), 7);
        assert_eq!(g.centered(8), -8);
        assert_eq!(g.centered(15), -1);
    }
}
