use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;

use crate::boundary::{boundary_pairing, BoundaryFunction};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Discrete Dirichlet-to-Neumann map.
///
/// `matrix` maps boundary values to normal derivatives at the boundary nodes.
/// It is self-adjoint for the weighted pairing `<f, g> = sum f g w`, i.e.
/// `W * matrix` is symmetric. Coefficients are real, so the map is stored as a
/// real matrix and applied to real and imaginary parts separately.
#[derive(Debug, Clone)]
pub struct DtnMap {
    domain: Arc<Domain>,
    matrix: Mat<f64>,
    label: String,
    asymmetry: f64,
}

fn frobenius(m: &Mat<f64>) -> f64 {
    m.norm_l2()
}

impl DtnMap {
    /// Builds the map from the symmetric energy matrix `S = W * Lambda`.
    /// The asymmetry of `S` is recorded, then `S` is symmetrised.
    pub fn from_energy_matrix(domain: Arc<Domain>, s: Mat<f64>, label: String) -> Result<Self> {
        let nb = domain.n_boundary();
        if s.nrows() != nb || s.ncols() != nb {
            return Err(Error::DomainMismatch);
        }
        let st = s.transpose().to_owned();
        let diff = &s - &st;
        let asymmetry = frobenius(&diff) / frobenius(&s).max(f64::MIN_POSITIVE);
        let sym = (&s + &st) * faer::Scale(0.5);
        let w = domain.boundary_weights();
        let matrix = Mat::from_fn(nb, nb, |i, j| sym[(i, j)] / w[i]);
        Ok(Self { domain, matrix, label, asymmetry })
    }

    /// Wraps a nodal matrix, e.g. one read back from disk or perturbed.
    pub fn from_matrix(domain: Arc<Domain>, matrix: Mat<f64>, label: String) -> Result<Self> {
        let nb = domain.n_boundary();
        if matrix.nrows() != nb || matrix.ncols() != nb {
            return Err(Error::DomainMismatch);
        }
        if matrix.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter("map contains non-finite entries".into()));
        }
        let w = domain.boundary_weights();
        let s = Mat::from_fn(nb, nb, |i, j| w[i] * matrix[(i, j)]);
        let st = s.transpose().to_owned();
        let asymmetry = frobenius(&(&s - &st)) / frobenius(&s).max(f64::MIN_POSITIVE);
        Ok(Self { domain, matrix, label, asymmetry })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Relative asymmetry of `W * Lambda` before symmetrisation.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// `W * Lambda`.
    pub fn energy_matrix(&self) -> Mat<f64> {
        let w = self.domain.boundary_weights();
        let nb = w.len();
        Mat::from_fn(nb, nb, |i, j| w[i] * self.matrix[(i, j)])
    }

    pub fn check_compatible(&self, other: &DtnMap) -> Result<()> {
        self.domain.same_as(&other.domain)
    }

    pub fn apply(&self, f: &BoundaryFunction) -> Result<BoundaryFunction> {
        f.check_domain(&self.domain)?;
        let nb = f.len();
        let x = Mat::<f64>::from_fn(nb, 2, |i, c| if c == 0 { f.values()[i].re } else { f.values()[i].im });
        let y = &self.matrix * &x;
        BoundaryFunction::new(
            &self.domain,
            (0..nb).map(|i| Complex64::new(y[(i, 0)], y[(i, 1)])).collect(),
        )
    }

    /// `<Lambda f, g>` in the weighted boundary pairing.
    pub fn pairing(&self, f: &BoundaryFunction, g: &BoundaryFunction) -> Result<Complex64> {
        boundary_pairing(&self.domain, &self.apply(f)?, g)
    }

    /// `self - other` as a map on the same domain.
    pub fn difference(&self, other: &DtnMap) -> Result<Mat<f64>> {
        self.check_compatible(other)?;
        Ok(&self.matrix - &other.matrix)
    }
}

/// Both sides of the integral identity
/// `<(Lambda_1 - Lambda_2) u_1, u_2> = sum_Omega (q_1 - q_2) u_1 u_2 h^3`
/// for solutions `u_j` of `(-Delta + q_j) u_j = 0`.
pub fn alessandrini_pairing(
    l1: &DtnMap,
    l2: &DtnMap,
    q1: &ScalarField,
    q2: &ScalarField,
    u1: &ScalarField,
    u2: &ScalarField,
) -> Result<(Complex64, Complex64)> {
    l1.check_compatible(l2)?;
    let d = l1.domain();
    for f in [q1, q2, u1, u2] {
        if f.grid() != d.grid() {
            return Err(Error::DomainMismatch);
        }
    }
    let t1 = BoundaryFunction::trace(d, u1)?;
    let t2 = BoundaryFunction::trace(d, u2)?;
    let diff = l1.apply(&t1)?;
    let diff2 = l2.apply(&t1)?;
    let delta = BoundaryFunction::new(
        d,
        diff.values().iter().zip(diff2.values()).map(|(a, b)| a - b).collect(),
    )?;
    let boundary = boundary_pairing(d, &delta, &t2)?;
    let h3 = d.grid().cell_volume();
    let volume: Complex64 = d
        .inside_mask()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(idx, _)| (q1.get(idx) - q2.get(idx)) * u1.get(idx) * u2.get(idx) * h3)
        .sum();
    Ok((boundary, volume))
}
