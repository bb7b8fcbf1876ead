//! Smooth test conductivities, all equal to one near the boundary of the
//! default ball.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::norm3;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 3],
    pub width: f64,
    pub amplitude: f64,
}

/// Families of conductivities `gamma = (1 + a * phi)^2`, where `phi` is a
/// profile multiplied by the radial cut-off [`Taper`].
#[derive(Debug, Clone, PartialEq)]
pub enum Phantom {
    /// Sum of Gaussian bumps `a * exp(-|x - c|^2 / w^2)`.
    Gaussian { bumps: Vec<Bump> },
    /// `a * max(0, 1 - |x - c| / w)^1.6`: bounded but with a sharp tip and rim.
    Cusp { bump: Bump },
}

/// Compactly supported radial factor `max(0, 1 - (r / radius)^2)^4`.
///
/// It is three times continuously differentiable, so seven-point Laplacians of
/// tapered profiles still converge at second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taper {
    pub radius: f64,
}

impl Taper {
    /// Cut-off matching the default ball (`R = 0.7 L`, collar `0.2 L`).
    pub fn for_half_width(l: f64) -> Self {
        Self { radius: 0.5 * l }
    }

    pub fn value(&self, r: f64) -> f64 {
        let u = 1.0 - (r / self.radius).powi(2);
        if u <= 0.0 {
            0.0
        } else {
            u.powi(4)
        }
    }
}

impl Phantom {
    /// Single centred bump `sqrt(gamma) = 1 + 0.3 exp(-|x|^2 / (0.25 L)^2)`
    /// (times the cut-off).
    pub fn standard_bump(l: f64) -> Self {
        Phantom::Gaussian {
            bumps: vec![Bump { center: [0.0; 3], width: 0.25 * l, amplitude: 0.3 }],
        }
    }

    pub fn two_bump(l: f64) -> Self {
        Phantom::Gaussian {
            bumps: vec![
                Bump { center: [-0.18 * l, 0.0, 0.0], width: 0.14 * l, amplitude: 0.3 },
                Bump { center: [0.18 * l, 0.0, 0.0], width: 0.14 * l, amplitude: -0.2 },
            ],
        }
    }

    pub fn cusp(l: f64) -> Self {
        Phantom::Cusp {
            bump: Bump { center: [0.0; 3], width: 0.35 * l, amplitude: 0.3 },
        }
    }

    /// Two or three Gaussian bumps with random centres, widths and signs.
    pub fn random(l: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(2..=3);
        let bumps = (0..count)
            .map(|_| {
                let c = [0, 1, 2].map(|_| rng.random_range(-0.15..0.15) * l);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Bump {
                    center: c,
                    width: rng.random_range(0.15..0.25) * l,
                    amplitude: sign * rng.random_range(0.08..0.18),
                }
            })
            .collect();
        Phantom::Gaussian { bumps }
    }

    fn profile(&self, x: [f64; 3]) -> f64 {
        match self {
            Phantom::Gaussian { bumps } => bumps
                .iter()
                .map(|b| {
                    let d = [x[0] - b.center[0], x[1] - b.center[1], x[2] - b.center[2]];
                    let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    b.amplitude * (-r2 / (b.width * b.width)).exp()
                })
                .sum(),
            Phantom::Cusp { bump } => {
                let d = [x[0] - bump.center[0], x[1] - bump.center[1], x[2] - bump.center[2]];
                let t = (1.0 - norm3(d) / bump.width).max(0.0);
                bump.amplitude * t.powf(1.6)
            }
        }
    }

    /// `sqrt(gamma)` sampled on the grid.
    pub fn sqrt_gamma(&self, grid: Grid) -> ScalarField {
        let taper = Taper::for_half_width(grid.half_width());
        ScalarField::from_real_fn(grid, |x| 1.0 + self.profile(x) * taper.value(norm3(x)))
    }

    pub fn gamma(&self, grid: Grid) -> ScalarField {
        self.sqrt_gamma(grid).map(|s| s * s)
    }
}

/// Checks `c <= gamma <= 1/c` and that `gamma` is real and positive.
pub fn check_ellipticity(gamma: &ScalarField, c: f64) -> Result<()> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in gamma.values() {
        if v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
            return Err(Error::InvalidParameter("conductivity must be real".into()));
        }
        min = min.min(v.re);
        max = max.max(v.re);
    }
    if min < c || max > 1.0 / c {
        return Err(Error::EllipticityViolation { min, max, bound: c });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;

    #[test]
    fn phantoms_respect_collar() {
        let g = Grid::new(24, 1.0).unwrap();
        let d = Domain::default_ball(g).unwrap();
        for p in [Phantom::standard_bump(1.0), Phantom::two_bump(1.0), Phantom::cusp(1.0), Phantom::random(1.0, 7)] {
            let gamma = p.gamma(g);
            d.check_collar(&gamma, 1.0, 0.0).unwrap();
            check_ellipticity(&gamma, 0.1).unwrap();
        }
    }

    #[test]
    fn random_is_seeded() {
        assert_eq!(Phantom::random(1.0, 3), Phantom::random(1.0, 3));
        assert_ne!(Phantom::random(1.0, 3), Phantom::random(1.0, 4));
    }

    #[test]
    fn taper_is_monotone() {
        let t = Taper::for_half_width(1.0);
        assert_eq!(t.value(0.0), 1.0);
        let mut last = 1.0;
        for i in 0..100 {
            let v = t.value(i as f64 * 0.01);
            assert!(v <= last + 1e-15);
            last = v;
        }
        assert_eq!(t.value(0.5), 0.0);
    }
}
