use std::sync::Arc;

use calderon_core::domain::Domain;
use calderon_core::forward::{assemble_dtn, conductivity_to_potential, Coefficient, DtnMap};
use calderon_core::recon::{exact_samples, ideal_lowpass, reconstruct, relative_error_on, scattering_grid, ScatteringSamples};
use calderon_core::stability::{dtn_distance, dtn_norm, stability_sweep, StabilityCurve};
use calderon_core::{Complex64, ScalarField};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{LabError, LabResult, StageExt};
use crate::io::{read_dtn, read_json, write_csv, write_dtn, write_field, write_json, write_samples};
use crate::manifest::{manifest_path, Manifest, RunRecorder};

/// Largest accepted asymmetry of an assembled map before symmetrisation.
pub const ASYMMETRY_LIMIT: f64 = 1e-8;

/// Largest accepted `||Lambda_gamma - Lambda_q|| / ||Lambda_0||`.
pub const REDUCTION_LIMIT: f64 = 1e-4;

/// Truth and maps shared by the downstream commands.
#[derive(Debug, Clone)]
pub struct ForwardData {
    pub domain: Arc<Domain>,
    pub gamma: ScalarField,
    pub q: ScalarField,
    pub lgamma: DtnMap,
    pub l0: DtnMap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardReport {
    pub n_boundary: usize,
    pub domain_hash: String,
    pub reference_norm: f64,
    /// `||Lambda_gamma - Lambda_0||`.
    pub data_distance: f64,
    /// `||Lambda_gamma - Lambda_q||`.
    pub reduction_distance: f64,
    pub reduction_relative: f64,
    pub asymmetry_gamma: f64,
    pub asymmetry_reference: f64,
    pub asymmetry_potential: f64,
}

fn truth(config: &RunConfig) -> LabResult<(Arc<Domain>, ScalarField, ScalarField)> {
    let domain = config.domain_on(config.grid)?;
    let gamma = config.gamma_on(&domain)?;
    let q = conductivity_to_potential(&domain, &gamma).stage("forward")?;
    Ok((domain, gamma, q))
}

/// Assembles `Lambda_gamma`, `Lambda_0` and `Lambda_q`; writes the two maps
/// used downstream and the truth fields.
pub fn cmd_forward(config: &RunConfig) -> LabResult<(ForwardData, ForwardReport, Manifest)> {
    let mut run = RunRecorder::new(config, "forward")?;
    let (domain, gamma, q) = run.time("truth", || truth(config))?;
    let grid = *domain.grid();
    let (lgamma, l0, lq) = run.time("assemble", || -> LabResult<_> {
        let lgamma = assemble_dtn(&domain, Coefficient::conductivity(&gamma), "gamma").stage("forward")?;
        let l0 = assemble_dtn(&domain, Coefficient::potential(&ScalarField::zeros(grid)), "reference").stage("forward")?;
        let lq = assemble_dtn(&domain, Coefficient::potential(&q), "potential").stage("forward")?;
        Ok((lgamma, l0, lq))
    })?;
    let report = run.time("norms", || -> LabResult<_> {
        let reference_norm = dtn_norm(&l0).stage("forward")?;
        let reduction_distance = dtn_distance(&lgamma, &lq).stage("forward")?;
        Ok(ForwardReport {
            n_boundary: domain.n_boundary(),
            domain_hash: domain.hash().to_owned(),
            reference_norm,
            data_distance: dtn_distance(&lgamma, &l0).stage("forward")?,
            reduction_distance,
            reduction_relative: reduction_distance / reference_norm,
            asymmetry_gamma: lgamma.asymmetry(),
            asymmetry_reference: l0.asymmetry(),
            asymmetry_potential: lq.asymmetry(),
        })
    })?;
    run.outputs(write_dtn(&run.path("dtn_gamma"), &lgamma)?);
    run.outputs(write_dtn(&run.path("dtn_reference"), &l0)?);
    run.outputs(write_field(&run.path("gamma"), &gamma, "gamma")?);
    run.outputs(write_field(&run.path("q"), &q, "q")?);
    let report_path = run.path("forward_report.json");
    write_json(&report_path, &report)?;
    run.output(report_path);
    let worst = report.asymmetry_gamma.max(report.asymmetry_reference).max(report.asymmetry_potential);
    if worst > ASYMMETRY_LIMIT {
        run.fail("forward", format!("map asymmetry {worst:e} exceeds {ASYMMETRY_LIMIT:e}"));
    }
    if report.reduction_relative > REDUCTION_LIMIT {
        run.fail(
            "forward",
            format!("reduction mismatch {:e} exceeds {REDUCTION_LIMIT:e}", report.reduction_relative),
        );
    }
    let manifest = run.finish(config)?;
    check_manifest(&manifest, "forward")?;
    Ok((ForwardData { domain, gamma, q, lgamma, l0 }, report, manifest))
}

fn check_manifest(m: &Manifest, stage: &'static str) -> LabResult<()> {
    if m.failures.is_empty() {
        Ok(())
    } else {
        let detail = m.failures.iter().map(|f| f.message.as_str()).collect::<Vec<_>>().join("; ");
        Err(LabError::Check { stage, detail })
    }
}

/// Reuses the maps of an earlier `forward` run with the same physical
/// configuration, or runs `forward` now.
pub fn load_or_forward(config: &RunConfig) -> LabResult<ForwardData> {
    let manifest_file = manifest_path(&config.output, "forward");
    if let Ok(m) = read_json::<Manifest>(&manifest_file) {
        if m.forward_hash == config.forward_hash() && m.status == "ok" {
            let (domain, gamma, q) = truth(config)?;
            let lgamma = read_dtn(&config.output.join("dtn_gamma"), &domain);
            let l0 = read_dtn(&config.output.join("dtn_reference"), &domain);
            if let (Ok(lgamma), Ok(l0)) = (lgamma, l0) {
                return Ok(ForwardData { domain, gamma, q, lgamma, l0 });
            }
        }
    }
    cmd_forward(config).map(|(data, _, _)| data)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedSample {
    pub xi: [f64; 3],
    pub k: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterReport {
    pub rho: f64,
    pub n_samples: usize,
    pub max_residual: f64,
    pub max_condition: f64,
    pub zero_value: [f64; 2],
    /// Relative l2 distance of the samples to the transform of the true potential.
    pub sample_error: f64,
    pub failures: Vec<FailedSample>,
}

fn scatter_report(samples: &ScatteringSamples, q: &ScalarField) -> LabResult<ScatterReport> {
    let exact = exact_samples(q, samples.rho).stage("scatter")?;
    let (mut e, mut n) = (0.0, 0.0);
    for s in &samples.samples {
        let v = exact.value_at(s.m).unwrap_or_default();
        e += (s.value - v).norm_sqr();
        n += v.norm_sqr();
    }
    Ok(ScatterReport {
        rho: samples.rho,
        n_samples: samples.samples.len(),
        max_residual: samples.samples.iter().map(|s| s.bie_residual).fold(0.0, f64::max),
        max_condition: samples.samples.iter().map(|s| s.condition).fold(0.0, f64::max),
        zero_value: [samples.zero_value.re, samples.zero_value.im],
        sample_error: if n > 0.0 { (e / n).sqrt() } else { e.sqrt() },
        failures: samples
            .failures
            .iter()
            .map(|f| FailedSample { xi: f.xi, k: f.k, error: f.error.to_string() })
            .collect(),
    })
}

fn record_sample_failures(run: &mut RunRecorder, report: &ScatterReport) {
    for f in &report.failures {
        run.fail("scatter", format!("xi = {:?}, k = {}: {}", f.xi, f.k, f.error));
    }
}

/// Scattering transform on the lattice ball of radius `rho`.
pub fn cmd_scatter(config: &RunConfig) -> LabResult<(ScatteringSamples, ScatterReport, Manifest)> {
    let data = load_or_forward(config)?;
    let mut run = RunRecorder::new(config, "scatter")?;
    let grid = *data.domain.grid();
    let rho = config.rho_value(&grid);
    let samples =
        run.time("scatter", || scattering_grid(&data.lgamma, &data.l0, rho, config.schedule())).stage("scatter")?;
    let report = scatter_report(&samples, &data.q)?;
    let path = run.path("samples.jsonl");
    write_samples(&path, &samples)?;
    run.output(path);
    let path = run.path("scatter_report.json");
    write_json(&path, &report)?;
    run.output(path);
    record_sample_failures(&mut run, &report);
    let manifest = run.finish(config)?;
    check_manifest(&manifest, "scatter")?;
    Ok((samples, report, manifest))
}

/// Errors of a reconstruction against the truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructReport {
    pub rho: f64,
    pub scatter: ScatterReport,
    /// Relative `L^2(Omega)` error of `gamma_rec`.
    pub gamma_error: f64,
    /// `||q_rec - q_lowpass||_{L^2(Omega)} / ||q_lowpass||_{L^2(Omega)}`.
    pub q_error: f64,
    /// The same difference relative to `||q||_{L^2(Omega)}`.
    pub q_error_vs_q_norm: f64,
    /// Relative `L^2` distance of `gamma_rec` to one on the collar.
    pub collar_error: f64,
    pub collar_max_deviation: f64,
    pub clamped_nodes: usize,
    pub imag_residue: f64,
}

pub fn cmd_reconstruct(config: &RunConfig) -> LabResult<(ReconstructReport, Manifest)> {
    let data = load_or_forward(config)?;
    let mut run = RunRecorder::new(config, "reconstruct")?;
    let grid = *data.domain.grid();
    let opts = config.recon_options();
    let rho = config.rho_value(&grid);
    let opts = calderon_core::recon::ReconOptions { rho: Some(rho), ..opts };
    let rec = run.time("reconstruct", || reconstruct(&data.lgamma, &data.l0, opts)).stage("reconstruct")?;
    let report = run.time("report", || -> LabResult<_> {
        let mask = data.domain.inside_mask();
        let lowpass = ideal_lowpass(&data.q, rho).stage("reconstruct")?;
        let diff = rec.q.q.sub(&lowpass).stage("reconstruct")?;
        let collar = data.domain.collar_mask();
        let one = ScalarField::constant(grid, Complex64::new(1.0, 0.0));
        Ok(ReconstructReport {
            rho,
            scatter: scatter_report(&rec.samples, &data.q)?,
            gamma_error: relative_error_on(mask, &rec.gamma.gamma, &data.gamma).stage("reconstruct")?,
            q_error: diff.l2_norm_on(mask) / lowpass.l2_norm_on(mask),
            q_error_vs_q_norm: diff.l2_norm_on(mask) / data.q.l2_norm_on(mask),
            collar_error: relative_error_on(&collar, &rec.gamma.gamma, &one).stage("reconstruct")?,
            collar_max_deviation: data.domain.collar_deviation(&rec.gamma.gamma, 1.0),
            clamped_nodes: rec.gamma.clamped,
            imag_residue: rec.q.imag_residue,
        })
    })?;
    let path = run.path("samples.jsonl");
    write_samples(&path, &rec.samples)?;
    run.output(path);
    run.outputs(write_field(&run.path("q_rec"), &rec.q.q, "q_rec")?);
    run.outputs(write_field(&run.path("gamma_rec"), &rec.gamma.gamma, "gamma_rec")?);
    let path = run.path("reconstruct_report.json");
    write_json(&path, &report)?;
    run.output(path);
    record_sample_failures(&mut run, &report.scatter);
    let manifest = run.finish(config)?;
    check_manifest(&manifest, "reconstruct")?;
    Ok((report, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub eps: f64,
    pub rho: f64,
    pub n_samples: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub grid: usize,
    pub seed: u64,
    pub smoothness: f64,
    pub noise_scale: f64,
    pub data_norm: f64,
    pub reference_rho: f64,
    pub fitted_sigma: Option<f64>,
    pub log_model_residual: Option<f64>,
    pub power_model_residual: Option<f64>,
    pub power_model_slope: Option<f64>,
    pub log_type_preferred: Option<bool>,
    pub inversions: usize,
    pub partial: bool,
    pub levels: Vec<LevelReport>,
    pub failed_levels: Vec<FailureLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureLevel {
    pub eps: f64,
    pub error: String,
}

pub fn fit_report(curve: &StabilityCurve, grid: usize) -> FitReport {
    FitReport {
        grid,
        seed: curve.seed,
        smoothness: curve.options.smoothness,
        noise_scale: curve.noise_scale,
        data_norm: curve.data_norm,
        reference_rho: curve.reference_rho,
        fitted_sigma: curve.fitted_sigma(),
        log_model_residual: curve.fit.map(|f| f.log_model.rms_residual),
        power_model_residual: curve.fit.map(|f| f.power_model.rms_residual),
        power_model_slope: curve.fit.map(|f| f.power_model.slope),
        log_type_preferred: curve.fit.map(|f| f.log_type_preferred()),
        inversions: curve.inversions(),
        partial: curve.partial(),
        levels: curve
            .points
            .iter()
            .map(|p| LevelReport { eps: p.eps, rho: p.rho, n_samples: p.n_samples, n_failed: p.n_failed })
            .collect(),
        failed_levels: curve
            .failures
            .iter()
            .map(|f| FailureLevel { eps: f.eps, error: f.error.to_string() })
            .collect(),
    }
}

/// Noise sweep; writes `stability.csv` and `stability_fit.json`.
pub fn cmd_stability(config: &RunConfig) -> LabResult<(StabilityCurve, FitReport, Manifest)> {
    let mut run = RunRecorder::new(config, "stability")?;
    let n = config.stability.grid.unwrap_or(config.grid);
    let domain = config.domain_on(n)?;
    let gamma = config.gamma_on(&domain)?;
    let curve = run
        .time("sweep", || {
            stability_sweep(&domain, &gamma, &config.stability.noise_levels, config.seed, config.sweep_options())
        })
        .stage("stability")?;
    let rows: Vec<Vec<f64>> = curve
        .points
        .iter()
        .map(|p| vec![p.eps, p.dist, p.err_q_hm1, p.err_gamma_l2, p.err_gamma_sup])
        .collect();
    let path = run.path("stability.csv");
    write_csv(&path, &["eps", "dist", "err_q_Hm1", "err_gamma_L2", "err_gamma_sup"], &rows)?;
    run.output(path);
    let report = fit_report(&curve, n);
    let path = run.path("stability_fit.json");
    write_json(&path, &report)?;
    run.output(path);
    for f in &report.failed_levels {
        run.fail("stability", format!("eps = {:e}: {}", f.eps, f.error));
    }
    for p in curve.points.iter().filter(|p| p.n_failed > 0) {
        run.fail("stability", format!("eps = {:e}: {} samples failed", p.eps, p.n_failed));
    }
    let manifest = run.finish(config)?;
    check_manifest(&manifest, "stability")?;
    Ok((curve, report, manifest))
}
