use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::{Mat, Side};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::forward::DtnMap;

/// Surrogate for the `H^{1/2} -> H^{-1/2}` operator norm on the discrete boundary.
///
/// The boundary Laplacian is the heat-kernel graph Laplacian
/// `(L u)_i = (4 pi t^2)^{-1} sum_j exp(-|x_i - x_j|^2 / 4t) (u_i - u_j) w_j`
/// with `t = h^2`, which approximates `-Delta` on a surface sampled with
/// quadrature weights `w`. Sobolev weights are its spectral powers
/// `(1 + L)^{+-1/4}`.
#[derive(Debug)]
pub struct BoundarySobolev {
    domain_hash: String,
    sqrt_w: Vec<f64>,
    /// `V (1 + lambda)^{-1/4} V^T` in the symmetrised frame.
    smoothing: Mat<f64>,
    /// `V (1 + lambda)^{1/4} V^T`, the inverse of `smoothing`.
    roughening: Mat<f64>,
    eigenvalues: Vec<f64>,
}

impl BoundarySobolev {
    pub fn new(domain: &Domain) -> Result<Self> {
        let nb = domain.n_boundary();
        let h = domain.grid().spacing();
        let t = h * h;
        let cutoff2 = 36.0 * t;
        let norm = 1.0 / (4.0 * std::f64::consts::PI * t * t);
        let w = domain.boundary_weights();
        let pos: Vec<[f64; 3]> = (0..nb).map(|b| domain.boundary_position(b)).collect();
        let mut m = Mat::<f64>::zeros(nb, nb);
        for i in 0..nb {
            for j in (i + 1)..nb {
                let d2: f64 = (0..3).map(|a| (pos[i][a] - pos[j][a]).powi(2)).sum();
                if d2 > cutoff2 {
                    continue;
                }
                let k = norm * (-d2 / (4.0 * t)).exp();
                m[(i, i)] += k * w[j];
                m[(j, j)] += k * w[i];
                let off = -k * (w[i] * w[j]).sqrt();
                m[(i, j)] = off;
                m[(j, i)] = off;
            }
        }
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let v = evd.U();
        let s = evd.S();
        let eigenvalues: Vec<f64> = (0..nb).map(|i| s[i].max(0.0)).collect();
        let scaled = Mat::<f64>::from_fn(nb, nb, |i, j| v[(i, j)] * (1.0 + eigenvalues[j]).powf(-0.25));
        let smoothing = &scaled * v.transpose();
        let scaled = Mat::<f64>::from_fn(nb, nb, |i, j| v[(i, j)] * (1.0 + eigenvalues[j]).powf(0.25));
        let roughening = &scaled * v.transpose();
        Ok(Self {
            domain_hash: domain.hash().to_owned(),
            sqrt_w: w.iter().map(|x| x.sqrt()).collect(),
            smoothing,
            roughening,
            eigenvalues,
        })
    }

    /// Shared instance per domain.
    pub fn for_domain(domain: &Domain) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<String, Arc<BoundarySobolev>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(s) = cache.lock().expect("cache poisoned").get(domain.hash()) {
            return Ok(s.clone());
        }
        let s = Arc::new(Self::new(domain)?);
        cache
            .lock()
            .expect("cache poisoned")
            .insert(domain.hash().to_owned(), s.clone());
        Ok(s)
    }

    /// Eigenvalues of the boundary Laplacian, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Operator norm of a nodal boundary operator `a` from `H^{1/2}` to `H^{-1/2}`.
    pub fn operator_norm(&self, a: &Mat<f64>) -> Result<f64> {
        let nb = self.sqrt_w.len();
        if a.nrows() != nb || a.ncols() != nb {
            return Err(Error::DomainMismatch);
        }
        let sw = &self.sqrt_w;
        let sym = Mat::<f64>::from_fn(nb, nb, |i, j| sw[i] * a[(i, j)] / sw[j]);
        let d = &self.smoothing * &sym * &self.smoothing;
        let sv = d.singular_values().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        Ok(sv.first().copied().unwrap_or(0.0))
    }

    /// Nodal operator whose image in the frame of [`Self::operator_norm`] is
    /// `d`: `a = W^{-1/2} S^{-1} d S^{-1} W^{1/2}`. A symmetric `d` gives a map
    /// with symmetric energy form.
    pub fn from_frame(&self, d: &Mat<f64>) -> Result<Mat<f64>> {
        let nb = self.sqrt_w.len();
        if d.nrows() != nb || d.ncols() != nb {
            return Err(Error::DomainMismatch);
        }
        let sym = &self.roughening * d * &self.roughening;
        let sw = &self.sqrt_w;
        Ok(Mat::<f64>::from_fn(nb, nb, |i, j| sym[(i, j)] * sw[j] / sw[i]))
    }

    pub fn distance(&self, l1: &DtnMap, l2: &DtnMap) -> Result<f64> {
        l1.check_compatible(l2)?;
        if l1.domain().hash() != self.domain_hash {
            return Err(Error::DomainMismatch);
        }
        self.operator_norm(&l1.difference(l2)?)
    }
}

/// `||Lambda_1 - Lambda_2||` in the `H^{1/2} -> H^{-1/2}` surrogate norm.
pub fn dtn_distance(l1: &DtnMap, l2: &DtnMap) -> Result<f64> {
    l1.check_compatible(l2)?;
    BoundarySobolev::for_domain(l1.domain())?.distance(l1, l2)
}

/// `||Lambda||` in the same norm.
pub fn dtn_norm(l: &DtnMap) -> Result<f64> {
    BoundarySobolev::for_domain(l.domain())?.operator_norm(l.matrix())
}
