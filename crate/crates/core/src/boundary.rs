use num_complex::Complex64;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Values at the boundary nodes of a [`Domain`], in its node order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    domain_hash: String,
    values: Vec<Complex64>,
}

impl BoundaryFunction {
    pub fn new(domain: &Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != domain.n_boundary() {
            return Err(Error::InvalidParameter(format!(
                "{} boundary values for {} boundary nodes",
                values.len(),
                domain.n_boundary()
            )));
        }
        Ok(Self {
            domain_hash: domain.hash().to_owned(),
            values,
        })
    }

    pub fn from_fn(domain: &Domain, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let values = (0..domain.n_boundary()).map(|b| f(domain.boundary_position(b))).collect();
        Self {
            domain_hash: domain.hash().to_owned(),
            values,
        }
    }

    /// Restriction of a grid field to the boundary nodes.
    pub fn trace(domain: &Domain, field: &ScalarField) -> Result<Self> {
        if field.grid() != domain.grid() {
            return Err(Error::DomainMismatch);
        }
        let values = domain.boundary_nodes().iter().map(|&idx| field.get(idx)).collect();
        Ok(Self {
            domain_hash: domain.hash().to_owned(),
            values,
        })
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn domain_hash(&self) -> &str {
        &self.domain_hash
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        if self.domain_hash == domain.hash() {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Weighted `L^2` norm on the boundary.
    pub fn l2_norm(&self, domain: &Domain) -> f64 {
        self.values
            .iter()
            .zip(domain.boundary_weights())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// Bilinear boundary pairing `sum_b f(x_b) g(x_b) w_b` (no conjugation).
pub fn boundary_pairing(domain: &Domain, f: &BoundaryFunction, g: &BoundaryFunction) -> Result<Complex64> {
    f.check_domain(domain)?;
    g.check_domain(domain)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(domain.boundary_weights())
        .map(|((a, b), w)| a * b * *w)
        .sum())
}
