use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Complex nodal values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &ScalarField,
        mut f: impl FnMut(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Discrete `L^2` norm over the whole box, `(sum |v|^2 h^3)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Discrete `L^2` norm restricted to nodes where `mask` is true.
    pub fn l2_norm_on(&self, mask: &[bool]) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.norm_sqr())
            .sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_on(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn real_part(&self) -> Self {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Maximum modulus on the nodes within `fraction` of the box width from a face.
    pub fn max_abs_on_outer_shell(&self, fraction: f64) -> f64 {
        let g = self.grid;
        let n = g.n();
        let width = ((fraction * n as f64).ceil() as usize).max(1);
        let mut m: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let [i, j, k] = g.ijk(idx);
            let near = [i, j, k].iter().any(|&c| c < width || c + width >= n);
            if near {
                m = m.max(v.norm());
            }
        }
        m
    }
}
