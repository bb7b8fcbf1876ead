use std::sync::Arc;

use num_complex::Complex64;

use super::scatter::{direct_transform, dual_lattice, dual_spacing, lattice_xi, ScatteringSamples};
use crate::boundary::BoundaryFunction;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forward::solve_schrodinger_dirichlet;
use crate::grid::Grid;

/// Low-pass reconstruction of the potential.
#[derive(Debug, Clone)]
pub struct LowpassField {
    /// Real part of the inverse transform.
    pub q: ScalarField,
    /// `max |Im| / max |Re|` of the inverse transform before the real part was taken.
    pub imag_residue: f64,
}

/// Fourier series `L^{-3} sum_xi s(xi) e^{i x.xi}` over the given lattice
/// modes, evaluated on every grid node.
fn synthesize(grid: Grid, entries: &[([i64; 3], Complex64)]) -> LowpassField {
    let d = dual_spacing(&grid);
    let norm = (d / (2.0 * std::f64::consts::PI)).powi(3);
    let n = grid.n();
    // Separable phases e^{i x_j xi_j}, one table per axis.
    let axis_phase = |m: i64| -> Vec<Complex64> {
        (0..n).map(|i| Complex64::from_polar(1.0, grid.coord(i) * m as f64 * d)).collect()
    };
    let mut values = vec![Complex64::default(); grid.len()];
    for (m, s) in entries {
        if s.norm() == 0.0 {
            continue;
        }
        let (px, py, pz) = (axis_phase(m[0]), axis_phase(m[1]), axis_phase(m[2]));
        for (idx, v) in values.iter_mut().enumerate() {
            let [i, j, k] = grid.ijk(idx);
            *v += s * px[i] * py[j] * pz[k];
        }
    }
    let mut re_max: f64 = 0.0;
    let mut im_max: f64 = 0.0;
    for v in &mut values {
        *v *= norm;
        re_max = re_max.max(v.re.abs());
        im_max = im_max.max(v.im.abs());
    }
    let imag_residue = if re_max > 0.0 { im_max / re_max } else { im_max };
    let q = ScalarField::from_values(grid, values.iter().map(|v| Complex64::new(v.re, 0.0)).collect())
        .expect("finite synthesis");
    LowpassField { q, imag_residue }
}

/// Inverse transform of the sampled ball; every mode outside it is zero.
pub fn lowpass_invert(samples: &ScatteringSamples) -> LowpassField {
    synthesize(samples.grid, &samples.entries())
}

/// Ideal low-pass of `q`: its exact transform on the same lattice ball,
/// including the exact value at `xi = 0`.
pub fn ideal_lowpass(q: &ScalarField, rho: f64) -> Result<ScalarField> {
    let grid = *q.grid();
    let entries: Vec<([i64; 3], Complex64)> = dual_lattice(&grid, rho)?
        .into_iter()
        .map(|m| (m, direct_transform(q, lattice_xi(&grid, m))))
        .collect();
    Ok(synthesize(grid, &entries).q)
}

/// Exact transform of `q` at every lattice point of the ball, with the same
/// shell fill at the origin that the pipeline uses.
pub fn exact_samples(q: &ScalarField, rho: f64) -> Result<ScatteringSamples> {
    let grid = *q.grid();
    let values = dual_lattice(&grid, rho)?
        .into_iter()
        .map(|m| (m, direct_transform(q, lattice_xi(&grid, m))))
        .collect();
    Ok(ScatteringSamples::from_values(grid, rho, values))
}

/// Conductivity recovered from a potential.
#[derive(Debug, Clone)]
pub struct GammaRecovery {
    /// `u^2` on `Omega`, one elsewhere, clamped to `[c, 1/c]`.
    pub gamma: ScalarField,
    /// Number of nodes where the clamp was active.
    pub clamped: usize,
}

/// `gamma = u^2` where `(-Delta + q) u = 0` in `Omega`, `u = 1` on the boundary.
pub fn recover_gamma(domain: &Arc<Domain>, q: &ScalarField, c: f64) -> Result<GammaRecovery> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("ellipticity bound {c} must lie in (0, 1]")));
    }
    let one = BoundaryFunction::from_fn(domain, |_| Complex64::new(1.0, 0.0));
    let sol = solve_schrodinger_dirichlet(domain, q, &one, None)?;
    let mask = domain.inside_mask();
    let mut clamped = 0;
    let values = sol
        .u
        .values()
        .iter()
        .zip(mask)
        .map(|(u, &inside)| {
            if !inside {
                return Complex64::new(1.0, 0.0);
            }
            let g = u.re * u.re;
            let g_c = g.clamp(c, 1.0 / c);
            if g_c != g {
                clamped += 1;
            }
            Complex64::new(g_c, 0.0)
        })
        .collect();
    Ok(GammaRecovery { gamma: ScalarField::from_values(*domain.grid(), values)?, clamped })
}
