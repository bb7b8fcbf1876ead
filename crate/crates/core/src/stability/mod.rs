//! Noise model, boundary Sobolev norms and the stability sweep.

mod noise;
mod sobolev;
mod sweep;

pub use noise::{noise_matrix, perturb_dtn, perturb_dtn_scaled};
pub use sobolev::{dtn_distance, dtn_norm, BoundarySobolev};
pub use sweep::{
    default_noise_levels, fit_line, hm1_norm, sample_hm1_distance, stability_sweep, stability_sweep_with, LevelFailure,
    LineFit, StabilityCurve, StabilityFit, StabilityPoint, SweepData, SweepOptions, CALIBRATION_EPS,
};

#[cfg(test)]
mod tests;
