use num_complex::Complex64;

use crate::domain::norm3;
use crate::error::{Error, Result};
use crate::frequency::{adapt_pair, dot_r, ComplexFrequency, LatticeFrequency};

/// Relative margin in the reality constraint `k^2 >= |xi|^2 / 2`.
pub const REALITY_MARGIN: f64 = 1e-6;

/// Two frequencies on the characteristic variety with `zeta1 + zeta2 = -i xi`
/// and `|zeta1| = |zeta2| = k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaPair {
    pub xi: [f64; 3],
    pub k: f64,
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub zeta1: ComplexFrequency,
    pub zeta2: ComplexFrequency,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    a.map(|v| v / n)
}

/// Deterministic orthonormal frame `(alpha, beta)` orthogonal to `xi`:
/// `alpha = xi x e / |xi x e|` for the first basis vector `e` not parallel to
/// `xi`, and `beta = (xi / |xi|) x alpha`.
pub fn frame_for(xi: [f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let n = norm3(xi);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroXi);
    }
    let u = xi.map(|v| v / n);
    for axis in 0..3 {
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let c = cross(u, e);
        if norm3(c) > 1e-8 {
            let alpha = normalize(c);
            let beta = cross(u, alpha);
            return Ok((alpha, beta));
        }
    }
    unreachable!("a unit vector is parallel to at most one basis vector")
}

/// Builds the pair with the default frame from [`frame_for`].
pub fn make_zeta_pair(xi: [f64; 3], k: f64) -> Result<ZetaPair> {
    let (alpha, beta) = frame_for(xi)?;
    make_zeta_pair_with(xi, k, alpha, beta)
}

/// `zeta1 = (k / sqrt 2) alpha + i(-xi / 2 + sqrt(k^2 / 2 - |xi|^2 / 4) beta)`,
/// `zeta2 = -(k / sqrt 2) alpha + i(-xi / 2 - sqrt(k^2 / 2 - |xi|^2 / 4) beta)`.
pub fn make_zeta_pair_with(xi: [f64; 3], k: f64, alpha: [f64; 3], beta: [f64; 3]) -> Result<ZetaPair> {
    let xn = norm3(xi);
    if xn == 0.0 || !xn.is_finite() {
        return Err(Error::ZeroXi);
    }
    let k_min = xn / std::f64::consts::SQRT_2 * (1.0 + REALITY_MARGIN).sqrt();
    if !(k >= k_min) {
        return Err(Error::KTooSmall { k, xi_norm: xn, k_min });
    }
    let u = xi.map(|v| v / xn);
    let checks = [
        (dot_r(alpha, alpha) - 1.0).abs(),
        (dot_r(beta, beta) - 1.0).abs(),
        dot_r(alpha, beta).abs(),
        dot_r(alpha, u).abs(),
        dot_r(beta, u).abs(),
    ];
    if checks.iter().any(|&c| c > 1e-12) {
        return Err(Error::InvalidParameter("{xi/|xi|, alpha, beta} must be orthonormal".into()));
    }
    let a = k / std::f64::consts::SQRT_2;
    let b = (k * k / 2.0 - xn * xn / 4.0).sqrt();
    let z1 = [0, 1, 2].map(|j| Complex64::new(a * alpha[j], -xi[j] / 2.0 + b * beta[j]));
    let z2 = [0, 1, 2].map(|j| Complex64::new(-a * alpha[j], -xi[j] / 2.0 - b * beta[j]));
    Ok(ZetaPair {
        xi,
        k,
        alpha,
        beta,
        zeta1: ComplexFrequency::new(z1)?,
        zeta2: ComplexFrequency::new(z2)?,
    })
}

impl ZetaPair {
    /// Both frequencies moved onto the lattice variety for spacing `h`,
    /// keeping their sum equal to `-i xi`.
    pub fn on_lattice(&self, h: f64) -> Result<(LatticeFrequency, LatticeFrequency)> {
        adapt_pair(&self.zeta1, &self.zeta2, h)
    }
}
