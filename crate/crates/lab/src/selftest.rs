//! Quick invariant suites run by `calderon selftest`.

use std::time::Instant;

use calderon_core::calculus::conjugated_laplacian;
use calderon_core::cgo::{cgo_trace, solve_cgo};
use calderon_core::faddeev::{gzeta_apply, weighted_norm, FaddeevGreen, WeightSign};
use calderon_core::forward::{assemble_dtn, Coefficient};
use calderon_core::recon::{bie_solve, recover_gamma, relative_error_on, scattering_sample};
use calderon_core::stability::{dtn_distance, dtn_norm, perturb_dtn};
use calderon_core::{ComplexFrequency, Grid, ScalarField};
use serde::Serialize;

use crate::commands::{load_or_forward, ForwardData, REDUCTION_LIMIT};
use crate::config::RunConfig;
use crate::error::{LabError, LabResult};
use crate::io::write_json;
use crate::manifest::{Manifest, RunRecorder};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    /// Excluded from the report file so that it stays deterministic.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub grid: usize,
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

type Check = calderon_core::Result<(f64, String)>;

fn zeta(k: f64) -> ComplexFrequency {
    ComplexFrequency::from_directions([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], k).expect("orthonormal directions")
}

fn gaussian(g: Grid, width: f64) -> ScalarField {
    ScalarField::from_real_fn(g, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        if r2.sqrt() > 0.6 * g.half_width() {
            0.0
        } else {
            (-r2 / (width * width)).exp()
        }
    })
}

fn interior_of_box(g: &Grid) -> Vec<bool> {
    let n = g.n();
    (0..g.len()).map(|i| g.ijk(i).iter().all(|&c| c >= 1 && c + 1 < n)).collect()
}

fn reduction(d: &ForwardData) -> Check {
    let lq = assemble_dtn(&d.domain, Coefficient::potential(&d.q), "potential")?;
    let rel = dtn_distance(&d.lgamma, &lq)? / dtn_norm(&d.l0)?;
    Ok((rel, "||L_gamma - L_q|| / ||L_0||".into()))
}

fn symmetry(d: &ForwardData) -> Check {
    Ok((d.lgamma.asymmetry().max(d.l0.asymmetry()), "asymmetry of the energy forms".into()))
}

fn background(d: &ForwardData) -> Check {
    let g = *d.domain.grid();
    let one = ScalarField::constant(g, calderon_core::Complex64::new(1.0, 0.0));
    let l1 = assemble_dtn(&d.domain, Coefficient::conductivity(&one), "one")?;
    Ok((dtn_distance(&l1, &d.l0)?, "||L_1 - L_0||".into()))
}

fn right_inverse(d: &ForwardData) -> Check {
    let g = *d.domain.grid();
    let f = gaussian(g, 0.15 * g.half_width());
    let mut worst: f64 = 0.0;
    for k in [4.0, 8.0, 16.0] {
        let lz = zeta(k).on_lattice(g.spacing())?;
        let u = FaddeevGreen::new(g, &lz)?.apply(&f)?;
        let back = conjugated_laplacian(&u, lz.zeta());
        worst = worst.max(back.sub(&f)?.l2_norm_on(&interior_of_box(&g)) / f.l2_norm());
    }
    Ok((worst, "max over k in {4, 8, 16} of ||D_zeta G f - f|| / ||f||".into()))
}

fn scaling_band(d: &ForwardData, delta: f64) -> Check {
    let g = *d.domain.grid();
    let f = gaussian(g, 0.15 * g.half_width());
    let fnorm = weighted_norm(&f, delta, WeightSign::Positive, 1.0, 0)?.l2_delta;
    let mut ratios = Vec::new();
    for k in [4.0, 8.0, 16.0] {
        let u = gzeta_apply(&f, &zeta(k))?;
        ratios.push(k * weighted_norm(&u, delta, WeightSign::Negative, k, 0)?.l2_delta / fnorm);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max / min, format!("spread of k ||G f||_(-delta) / ||f||_delta: {ratios:?}")))
}

fn cgo(d: &ForwardData, config: &RunConfig) -> Check {
    let sol = solve_cgo(&d.q, &zeta(8.0), config.cgo_options())?;
    Ok((sol.residual, format!("{} iterations, contraction {:.3}", sol.iterations, sol.contraction_estimate)))
}

fn bie_equivalence(d: &ForwardData, config: &RunConfig) -> Check {
    let z = zeta(8.0);
    let bie = bie_solve(&d.lgamma, &d.l0, &z)?;
    let trace = cgo_trace(&solve_cgo(&d.q, &z, config.cgo_options())?, &d.domain)?;
    let num: f64 = bie.f.values().iter().zip(trace.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = trace.values().iter().map(|b| b.norm_sqr()).sum();
    Ok(((num / den).sqrt(), format!("condition {:.3e}", bie.condition)))
}

fn closure(d: &ForwardData, config: &RunConfig) -> Check {
    let back = recover_gamma(&d.domain, &d.q, config.tolerances.ellipticity)?;
    Ok((relative_error_on(d.domain.inside_mask(), &back.gamma, &d.gamma)?, "recover_gamma(q(gamma)) vs gamma".into()))
}

fn zero_scattering(d: &ForwardData) -> Check {
    let z = zeta(8.0).on_lattice(d.domain.grid().spacing())?;
    let f = calderon_core::BoundaryFunction::from_fn(&d.domain, |x| z.exp_at(x));
    Ok((scattering_sample(&d.l0, &d.l0, &z, &f)?.norm(), "sample of L_0 against itself".into()))
}

fn noise(d: &ForwardData, config: &RunConfig) -> Check {
    let a = perturb_dtn(&d.lgamma, 1e-3, config.seed)?;
    let b = perturb_dtn(&d.lgamma, 1e-3, config.seed)?;
    if a.matrix() != b.matrix() {
        return Ok((f64::INFINITY, "seeded noise is not reproducible".into()));
    }
    let target = 1e-3 * dtn_norm(&d.lgamma)?;
    Ok(((dtn_distance(&a, &d.lgamma)? - target).abs() / target, "relative error of the noise norm".into()))
}

/// Runs every suite on the configured grid; a suite that errors counts as failed.
pub fn run_suites(config: &RunConfig, data: &ForwardData) -> SelftestReport {
    let delta = config.delta;
    let suites: Vec<(&str, f64, Box<dyn Fn() -> Check + '_>)> = vec![
        ("dtn-symmetry", 1e-8, Box::new(|| symmetry(data))),
        ("reduction-identity", REDUCTION_LIMIT, Box::new(|| reduction(data))),
        ("background-map", 1e-8, Box::new(|| background(data))),
        ("faddeev-right-inverse", 1e-3, Box::new(|| right_inverse(data))),
        ("faddeev-scaling", 4.0, Box::new(move || scaling_band(data, delta))),
        ("cgo-convergence", 1e-6, Box::new(|| cgo(data, config))),
        ("bie-equivalence", 0.02, Box::new(|| bie_equivalence(data, config))),
        ("oracle-closure", 0.01, Box::new(|| closure(data, config))),
        ("zero-scattering", 1e-9, Box::new(|| zero_scattering(data))),
        ("noise-model", 1e-8, Box::new(|| noise(data, config))),
    ];
    let suites = suites
        .into_iter()
        .map(|(name, threshold, f)| {
            let start = Instant::now();
            let (value, detail, passed) = match f() {
                Ok((v, d)) => (v, d, v <= threshold),
                Err(e) => (f64::NAN, e.to_string(), false),
            };
            SuiteResult { name: name.into(), passed, value, threshold, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect();
    SelftestReport { grid: config.grid, suites }
}

pub fn cmd_selftest(config: &RunConfig) -> LabResult<(SelftestReport, Manifest)> {
    let data = load_or_forward(config)?;
    let mut run = RunRecorder::new(config, "selftest")?;
    let report = run_suites(config, &data);
    for s in &report.suites {
        run.record_time(&s.name, s.seconds);
    }
    let path = run.path("selftest.json");
    write_json(&path, &report)?;
    run.output(path);
    for s in report.suites.iter().filter(|s| !s.passed) {
        run.fail(&s.name, format!("value {} exceeds {}: {}", s.value, s.threshold, s.detail));
    }
    let manifest = run.finish(config)?;
    if !manifest.failures.is_empty() {
        let names: Vec<&str> = manifest.failures.iter().map(|f| f.stage.as_str()).collect();
        return Err(LabError::Check { stage: "selftest", detail: format!("failed suites: {}", names.join(", ")) });
    }
    Ok((report, manifest))
}
