use std::sync::Arc;

use super::noise::perturb_dtn_scaled;
use super::sobolev::{dtn_distance, dtn_norm};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::ScalarField;
use crate::forward::{assemble_dtn, Coefficient, DtnMap, DEFAULT_ELLIPTICITY};
use crate::grid::Grid;
use crate::recon::{dual_spacing, lattice_xi, lowpass_invert, recover_gamma, scattering_grid, KSchedule, ScatteringSamples};

/// Noise level at which `rho(eps)` equals the default cutoff `4 pi / L`.
pub const CALIBRATION_EPS: f64 = 1e-3;

/// Eight levels log-spaced in `[1e-6, 1e-1]`.
pub fn default_noise_levels() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(-6.0 + 5.0 * i as f64 / 7.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Smoothness index `s` of the potential class; `rho` grows like
    /// `|log eps|^{4 (1 - 2s) / 3}`.
    pub smoothness: f64,
    /// Cutoff at [`CALIBRATION_EPS`]; `None` means `4 pi / L`.
    pub rho_calibration: Option<f64>,
    /// Frequency schedule for every level. The noise enters the samples with
    /// a factor growing like `e^{2 k R}`, so the smallest admissible `k` is used.
    pub schedule: KSchedule,
    pub ellipticity: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            smoothness: 0.25,
            rho_calibration: None,
            schedule: KSchedule { k_min: 4.0, slope: 0.75, scale: 1.0 },
            ellipticity: DEFAULT_ELLIPTICITY,
        }
    }
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.smoothness) {
            return Err(Error::InvalidParameter(format!("smoothness {} must lie in [0, 1/2)", self.smoothness)));
        }
        if let Some(r) = self.rho_calibration {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("cutoff {r} must be positive")));
            }
        }
        Ok(())
    }

    /// Exponent `4 (1 - 2s) / 3` of the cutoff rule.
    pub fn rho_exponent(&self) -> f64 {
        4.0 * (1.0 - 2.0 * self.smoothness) / 3.0
    }

    /// `rho(eps) = (|log eps| / T)^p` with `T` fixed by `rho(1e-3) = rho_cal`,
    /// never below the first dual-lattice shell.
    pub fn rho_for(&self, eps: f64, grid: &Grid) -> f64 {
        let cal = self.rho_calibration.unwrap_or(4.0 * std::f64::consts::PI / grid.half_width());
        let t = CALIBRATION_EPS.ln().abs() / cal.powf(1.0 / self.rho_exponent());
        let rho = (eps.ln().abs() / t).powf(self.rho_exponent());
        rho.max(dual_spacing(grid))
    }
}

/// Result of one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPoint {
    pub eps: f64,
    /// Surrogate distance between the perturbed and the clean map.
    pub dist: f64,
    pub rho: f64,
    pub n_samples: usize,
    /// Number of lattice points whose sample failed; nonzero marks the level partial.
    pub n_failed: usize,
    /// `H^{-1}` surrogate of `q_rec(eps) - q_rec(0)`.
    pub err_q_hm1: f64,
    /// Relative `L^2(Omega)` distance of `gamma_rec(eps)` to `gamma_rec(0)`.
    pub err_gamma_l2: f64,
    /// `max_Omega |gamma_rec(eps) - gamma_rec(0)|`.
    pub err_gamma_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelFailure {
    pub eps: f64,
    pub error: Error,
}

/// Least-squares line `y = intercept + slope x` and its RMS residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub rms_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Some(LineFit { intercept, slope, rms_residual: (ss / n as f64).sqrt() })
}

/// Comparison of `log err = a - sigma log|log eps|` with `log err = a + b log eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityFit {
    pub sigma: f64,
    pub log_model: LineFit,
    pub power_model: LineFit,
}

impl StabilityFit {
    pub fn from_points(eps: &[f64], err: &[f64]) -> Option<Self> {
        let (mut lx, mut px, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (&e, &r) in eps.iter().zip(err) {
            if r > 0.0 && r.is_finite() {
                lx.push(e.ln().abs().ln());
                px.push(e.ln());
                y.push(r.ln());
            }
        }
        let log_model = fit_line(&lx, &y)?;
        let power_model = fit_line(&px, &y)?;
        Some(Self { sigma: -log_model.slope, log_model, power_model })
    }

    pub fn log_type_preferred(&self) -> bool {
        self.log_model.rms_residual < self.power_model.rms_residual
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCurve {
    pub seed: u64,
    pub options: SweepOptions,
    /// `||Lambda_0||`; every perturbation has norm `eps` times this.
    pub noise_scale: f64,
    /// `||Lambda_gamma - Lambda_0||`.
    pub data_norm: f64,
    /// Cutoff of the noiseless reference reconstruction.
    pub reference_rho: f64,
    /// Successful levels with strictly increasing `eps`.
    pub points: Vec<StabilityPoint>,
    pub failures: Vec<LevelFailure>,
    /// Fit of the `H^{-1}` errors; `None` with fewer than three usable levels.
    pub fit: Option<StabilityFit>,
}

impl StabilityCurve {
    pub fn noise_levels(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eps).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.err_q_hm1).collect()
    }

    /// True when a level failed or lost samples.
    pub fn partial(&self) -> bool {
        !self.failures.is_empty() || self.points.iter().any(|p| p.n_failed > 0)
    }

    /// Number of adjacent pairs where the `H^{-1}` error decreases as `eps` grows.
    pub fn inversions(&self) -> usize {
        self.errors().windows(2).filter(|w| w[1] < w[0]).count()
    }

    pub fn fitted_sigma(&self) -> Option<f64> {
        self.fit.map(|f| f.sigma)
    }
}

/// `H^{-1}` surrogate of the difference of two sample sets:
/// `(L^{-3} sum (1 + |xi|^2)^{-1} |a(xi) - b(xi)|^2)^{1/2}` over the union of
/// their lattice points, a missing point counting as zero.
pub fn sample_hm1_distance(a: &ScatteringSamples, b: &ScatteringSamples) -> f64 {
    let grid = a.grid;
    let mut points: Vec<[i64; 3]> = a.entries().into_iter().chain(b.entries()).map(|(m, _)| m).collect();
    points.sort();
    points.dedup();
    let mut sum = 0.0;
    for m in points {
        let xi = lattice_xi(&grid, m);
        let w = 1.0 + xi.iter().map(|v| v * v).sum::<f64>();
        let d = a.value_at(m).unwrap_or_default() - b.value_at(m).unwrap_or_default();
        sum += d.norm_sqr() / w;
    }
    (sum / grid.half_width().powi(3)).sqrt()
}

/// Discrete `H^{-1}` norm of a grid function through its periodic transform.
pub fn hm1_norm(f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let n = grid.n();
    let mut data = f.values().to_vec();
    Fft3::for_size(n).forward(&mut data);
    let mut sum = 0.0;
    for (idx, v) in data.iter().enumerate() {
        let [i, j, k] = grid.ijk(idx);
        let k2: f64 = [i, j, k].iter().map(|&m| grid.frequency(m).powi(2)).sum();
        sum += v.norm_sqr() / (1.0 + k2);
    }
    (sum * grid.cell_volume() / grid.len() as f64).sqrt()
}

struct LevelResult {
    samples: ScatteringSamples,
    gamma: ScalarField,
}

fn run_level(data: &DtnMap, l0: &DtnMap, rho: f64, opts: &SweepOptions) -> Result<LevelResult> {
    let samples = scattering_grid(data, l0, rho, opts.schedule)?;
    let q = lowpass_invert(&samples);
    let gamma = recover_gamma(data.domain(), &q.q, opts.ellipticity)?.gamma;
    Ok(LevelResult { samples, gamma })
}

/// Clean and reference maps for a sweep.
pub struct SweepData {
    pub lgamma: DtnMap,
    pub l0: DtnMap,
}

impl SweepData {
    pub fn new(domain: &Arc<Domain>, gamma_truth: &ScalarField) -> Result<Self> {
        let grid = *domain.grid();
        let lgamma = assemble_dtn(domain, Coefficient::conductivity(gamma_truth), "gamma")?;
        let l0 = assemble_dtn(domain, Coefficient::potential(&ScalarField::zeros(grid)), "reference")?;
        Ok(Self { lgamma, l0 })
    }
}

/// Perturbs `Lambda_gamma` at every level, reconstructs with the cutoff
/// `rho(eps)` and compares with the noiseless reconstruction at the largest
/// cutoff of the sweep.
pub fn stability_sweep(
    domain: &Arc<Domain>,
    gamma_truth: &ScalarField,
    eps_list: &[f64],
    seed: u64,
    opts: SweepOptions,
) -> Result<StabilityCurve> {
    let data = SweepData::new(domain, gamma_truth)?;
    stability_sweep_with(&data, eps_list, seed, opts)
}

pub fn stability_sweep_with(data: &SweepData, eps_list: &[f64], seed: u64, opts: SweepOptions) -> Result<StabilityCurve> {
    opts.validate()?;
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("no noise levels".into()));
    }
    if eps_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("noise levels must be strictly increasing".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::InvalidParameter(format!("noise level {e} must lie in (0, 1)")));
    }
    let domain = data.lgamma.domain();
    let grid = *domain.grid();
    let mask = domain.inside_mask();
    let noise_scale = dtn_norm(&data.l0)?;
    let data_norm = dtn_distance(&data.lgamma, &data.l0)?;
    let reference_rho = opts.rho_for(eps_list[0], &grid);
    let reference = run_level(&data.lgamma, &data.l0, reference_rho, &opts)?;
    let ref_gamma_norm = reference.gamma.l2_norm_on(mask);

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &eps in eps_list {
        let outcome = perturb_dtn_scaled(&data.lgamma, eps, noise_scale, seed).and_then(|noisy| {
            let dist = dtn_distance(&noisy, &data.lgamma)?;
            let rho = opts.rho_for(eps, &grid);
            let level = run_level(&noisy, &data.l0, rho, &opts)?;
            let diff = level.gamma.sub(&reference.gamma)?;
            Ok(StabilityPoint {
                eps,
                dist,
                rho,
                n_samples: level.samples.samples.len(),
                n_failed: level.samples.failures.len(),
                err_q_hm1: sample_hm1_distance(&level.samples, &reference.samples),
                err_gamma_l2: diff.l2_norm_on(mask) / ref_gamma_norm,
                err_gamma_sup: diff.max_abs_on(mask),
            })
        });
        match outcome {
            Ok(p) => points.push(p),
            Err(error) => failures.push(LevelFailure { eps, error }),
        }
    }
    let eps: Vec<f64> = points.iter().map(|p| p.eps).collect();
    let err: Vec<f64> = points.iter().map(|p| p.err_q_hm1).collect();
    let fit = StabilityFit::from_points(&eps, &err);
    Ok(StabilityCurve { seed, options: opts, noise_scale, data_norm, reference_rho, points, failures, fit })
}
