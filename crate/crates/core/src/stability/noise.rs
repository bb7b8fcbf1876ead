use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sobolev::{dtn_norm, BoundarySobolev};
use crate::error::{Error, Result};
use crate::forward::DtnMap;

/// Seeded symmetric Gaussian matrix drawn in the frame where the surrogate
/// norm is the spectral norm, mapped back to a nodal map whose energy form is
/// symmetric. Its surrogate norm is exactly `target` up to rounding.
pub fn noise_matrix(map: &DtnMap, target: f64, seed: u64) -> Result<Mat<f64>> {
    let domain = map.domain();
    let nb = domain.n_boundary();
    let sobolev = BoundarySobolev::for_domain(domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Mat::<f64>::zeros(nb, nb);
    for j in 0..nb {
        for i in 0..=j {
            let v: f64 = StandardNormal.sample(&mut rng);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let e = sobolev.from_frame(&g)?;
    let norm = sobolev.operator_norm(&e)?;
    if !(norm > 0.0) {
        return Err(Error::LinearAlgebra("noise draw has zero norm".into()));
    }
    Ok(e * faer::Scale(target / norm))
}

/// `Lambda + E` with `||E|| = eps * scale` in the surrogate norm.
pub fn perturb_dtn_scaled(map: &DtnMap, eps: f64, scale: f64, seed: u64) -> Result<DtnMap> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("noise level {eps} must lie in (0, 1)")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise scale {scale} must be positive")));
    }
    let e = noise_matrix(map, eps * scale, seed)?;
    let label = format!("{}+noise(eps={eps:e},seed={seed})", map.label());
    DtnMap::from_matrix(map.domain().clone(), map.matrix() + &e, label)
}

/// Adds seeded measurement noise of relative size `eps`, measured against the
/// norm of `map` itself.
pub fn perturb_dtn(map: &DtnMap, eps: f64, seed: u64) -> Result<DtnMap> {
    let scale = dtn_norm(map)?;
    perturb_dtn_scaled(map, eps, scale, seed)
}
