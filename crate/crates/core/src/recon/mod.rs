//! Reconstruction from boundary data: frequency pairs, the boundary integral
//! equation, the scattering transform, low-pass inversion and recovery of the
//! conductivity.

mod bie;
mod invert;
mod pair;
mod scatter;

use std::sync::Arc;

pub use bie::{
    bie_solve, bie_solve_lattice, perturbation_operator, perturbation_singular_values, BieSolution, BIE_TOLERANCE,
    CONDITION_LIMIT,
};
pub use invert::{exact_samples, ideal_lowpass, lowpass_invert, recover_gamma, GammaRecovery, LowpassField};
pub use pair::{frame_for, make_zeta_pair, make_zeta_pair_with, ZetaPair, REALITY_MARGIN};
pub use scatter::{
    direct_transform, dual_lattice, dual_spacing, lattice_xi, sample_at, scattering_grid, scattering_sample, KSchedule,
    SampleFailure, ScatteringSample, ScatteringSamples,
};

use crate::error::Result;
use crate::field::ScalarField;
use crate::forward::{DtnMap, DEFAULT_ELLIPTICITY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconOptions {
    /// Frequency cutoff; `None` means `4 pi / L`.
    pub rho: Option<f64>,
    pub schedule: KSchedule,
    /// Ellipticity bound used when clamping the recovered conductivity.
    pub ellipticity: f64,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self { rho: None, schedule: KSchedule::default(), ellipticity: DEFAULT_ELLIPTICITY }
    }
}

impl ReconOptions {
    pub fn rho_for(&self, half_width: f64) -> f64 {
        self.rho.unwrap_or(4.0 * std::f64::consts::PI / half_width)
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub samples: ScatteringSamples,
    pub q: LowpassField,
    pub gamma: GammaRecovery,
}

/// Full pipeline from a measured map and the reference map `Lambda_0`.
pub fn reconstruct(data: &DtnMap, l0: &DtnMap, opts: ReconOptions) -> Result<Reconstruction> {
    let domain: &Arc<_> = data.domain();
    let rho = opts.rho_for(domain.grid().half_width());
    let samples = scattering_grid(data, l0, rho, opts.schedule)?;
    let q = lowpass_invert(&samples);
    let gamma = recover_gamma(domain, &q.q, opts.ellipticity)?;
    Ok(Reconstruction { samples, q, gamma })
}

/// Relative `L^2(Omega)` distance `||a - b|| / ||b||`.
pub fn relative_error_on(mask: &[bool], a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let d = a.sub(b)?;
    let nb = b.l2_norm_on(mask);
    Ok(if nb > 0.0 { d.l2_norm_on(mask) / nb } else { d.l2_norm_on(mask) })
}
