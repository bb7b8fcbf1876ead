use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest admissible `k L`; beyond this `e^{x.zeta}` overflows the useful
/// double-precision range on the grid.
pub const OVERFLOW_GUARD: f64 = 40.0;

#[inline]
pub(crate) fn dot_c(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn dot_r(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `zeta` in `C^3` on the characteristic variety `zeta.zeta = 0`.
///
/// `k = sqrt(2) |Re zeta| = |zeta| / 1`; since `|Re zeta| = |Im zeta|` on the
/// variety, `|zeta| = k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency {
    zeta: [Complex64; 3],
}

impl ComplexFrequency {
    pub fn new(zeta: [Complex64; 3]) -> Result<Self> {
        let re = zeta.map(|z| z.re);
        let k = std::f64::consts::SQRT_2 * dot_r(re, re).sqrt();
        if !(k >= 1.0) {
            return Err(Error::InvalidParameter(format!("|zeta| = {k} must be at least 1")));
        }
        let q = dot_c(&zeta, &zeta).norm();
        if q > 1e-12 * k * k {
            return Err(Error::InvalidParameter(format!(
                "zeta.zeta = {q:.3e} is not zero relative to k^2 = {:.3e}",
                k * k
            )));
        }
        Ok(Self { zeta })
    }

    /// `zeta = (k / sqrt 2) (alpha + i beta)` for orthonormal `alpha`, `beta`.
    pub fn from_directions(alpha: [f64; 3], beta: [f64; 3], k: f64) -> Result<Self> {
        let s = k / std::f64::consts::SQRT_2;
        Self::new([0, 1, 2].map(|j| Complex64::new(s * alpha[j], s * beta[j])))
    }

    #[inline]
    pub fn zeta(&self) -> &[Complex64; 3] {
        &self.zeta
    }

    #[inline]
    pub fn k(&self) -> f64 {
        let re = self.zeta.map(|z| z.re);
        std::f64::consts::SQRT_2 * dot_r(re, re).sqrt()
    }

    pub fn re(&self) -> [f64; 3] {
        self.zeta.map(|z| z.re)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.zeta.map(|z| z * factor))
    }

    /// Refuse frequencies whose exponentials would overflow on a box of half-width `l`.
    pub fn check_overflow(&self, l: f64) -> Result<()> {
        let kl = self.k() * l;
        if kl > OVERFLOW_GUARD * (1.0 + 1e-12) {
            Err(Error::Overflow { kl, limit: OVERFLOW_GUARD })
        } else {
            Ok(())
        }
    }

    /// Nearest point of the lattice variety for grid spacing `h`.
    pub fn on_lattice(&self, h: f64) -> Result<LatticeFrequency> {
        let mut z = self.zeta;
        for _ in 0..60 {
            let f = lattice_defect(&z, h);
            if f.norm() <= LATTICE_TOL * lattice_scale(&z, h) {
                return Ok(LatticeFrequency { zeta: z, spacing: h });
            }
            let g = z.map(|zj| h * (zj * h).sinh());
            let gg: f64 = g.iter().map(|v| v.norm_sqr()).sum();
            if gg == 0.0 {
                break;
            }
            for j in 0..3 {
                z[j] -= g[j].conj() * f / gg;
            }
        }
        Err(Error::LatticeAdaptation { residual: lattice_defect(&z, h).norm() })
    }
}

const LATTICE_TOL: f64 = 1e-14;

fn lattice_defect(z: &[Complex64; 3], h: f64) -> Complex64 {
    z.iter().map(|zj| (zj * h).cosh()).sum::<Complex64>() - 3.0
}

fn lattice_scale(z: &[Complex64; 3], h: f64) -> f64 {
    z.iter().map(|zj| (zj * h).cosh().norm()).sum::<f64>()
}

/// `zeta` with `sum_j cosh(zeta_j h) = 3`, so that `e^{x.zeta}` is exactly
/// harmonic for the seven-point Laplacian with spacing `h`. It differs from
/// the continuum frequency it was derived from by `O(k^3 h^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeFrequency {
    zeta: [Complex64; 3],
    spacing: f64,
}

impl LatticeFrequency {
    #[inline]
    pub fn zeta(&self) -> &[Complex64; 3] {
        &self.zeta
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn re(&self) -> [f64; 3] {
        self.zeta.map(|z| z.re)
    }

    /// Relative defect of the lattice relation; zero up to rounding.
    pub fn defect(&self) -> f64 {
        lattice_defect(&self.zeta, self.spacing).norm() / lattice_scale(&self.zeta, self.spacing)
    }

    /// `k` measured as `|zeta|`, comparable with the continuum `k`.
    pub fn k(&self) -> f64 {
        self.zeta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `e^{x.zeta}`.
    #[inline]
    pub fn exp_at(&self, x: [f64; 3]) -> Complex64 {
        (self.zeta[0] * x[0] + self.zeta[1] * x[1] + self.zeta[2] * x[2]).exp()
    }
}

/// Moves both members of a pair onto the lattice variety by opposite
/// corrections, so their sum is unchanged.
pub fn adapt_pair(
    z1: &ComplexFrequency,
    z2: &ComplexFrequency,
    h: f64,
) -> Result<(LatticeFrequency, LatticeFrequency)> {
    let a = *z1.zeta();
    let b = *z2.zeta();
    let mut d = [Complex64::default(); 3];
    for _ in 0..60 {
        let za = [0, 1, 2].map(|j| a[j] + d[j]);
        let zb = [0, 1, 2].map(|j| b[j] - d[j]);
        let f = [lattice_defect(&za, h), lattice_defect(&zb, h)];
        if f[0].norm() <= LATTICE_TOL * lattice_scale(&za, h)
            && f[1].norm() <= LATTICE_TOL * lattice_scale(&zb, h)
        {
            return Ok((
                LatticeFrequency { zeta: za, spacing: h },
                LatticeFrequency { zeta: zb, spacing: h },
            ));
        }
        let r1 = za.map(|z| h * (z * h).sinh());
        let r2 = zb.map(|z| -h * (z * h).sinh());
        // Minimum-norm Gauss-Newton step: d -= J^H (J J^H)^{-1} F.
        let g11: Complex64 = r1.iter().map(|v| v * v.conj()).sum();
        let g22: Complex64 = r2.iter().map(|v| v * v.conj()).sum();
        let g12: Complex64 = (0..3).map(|j| r1[j] * r2[j].conj()).sum();
        let g21 = g12.conj();
        let det = g11 * g22 - g12 * g21;
        if det.norm() == 0.0 {
            break;
        }
        let y1 = (g22 * f[0] - g12 * f[1]) / det;
        let y2 = (-g21 * f[0] + g11 * f[1]) / det;
        for j in 0..3 {
            d[j] -= r1[j].conj() * y1 + r2[j].conj() * y2;
        }
    }
    let za = [0, 1, 2].map(|j| a[j] + d[j]);
    Err(Error::LatticeAdaptation { residual: lattice_defect(&za, h).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta_k(k: f64) -> ComplexFrequency {
        ComplexFrequency::from_directions([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], k).unwrap()
    }

    #[test]
    fn rejects_off_variety() {
        let z = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::default()];
        assert!(ComplexFrequency::new(z).is_err());
        assert!(ComplexFrequency::from_directions([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn modulus_is_k() {
        let z = zeta_k(8.0);
        assert!((z.k() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_adaptation_is_small_and_exact() {
        let h = 2.0 / 31.0;
        for k in [4.0, 8.0, 16.0, 32.0] {
            let z = zeta_k(k);
            let lz = z.on_lattice(h).unwrap();
            assert!(lz.defect() < 1e-13);
            let shift: f64 = (0..3).map(|j| (lz.zeta()[j] - z.zeta()[j]).norm_sqr()).sum::<f64>().sqrt();
            assert!(shift < 0.1 * k, "k {k} shift {shift}");
        }
    }

    #[test]
    fn overflow_guard() {
        assert!(zeta_k(32.0).check_overflow(1.0).is_ok());
        assert!(zeta_k(41.0).check_overflow(1.0).is_err());
    }
}
