//! Acceptance suite: one line per criterion, nonzero exit status if any fails.
//!
//! Run with `cargo test -p calderon-lab --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use calderon_core::calculus::conjugated_laplacian;
use calderon_core::cgo::{cgo_field, cgo_trace, solve_cgo, solve_cgo_with, CgoOptions};
use calderon_core::faddeev::{gzeta_apply, weighted_norm, FaddeevGreen, WeightSign};
use calderon_core::forward::{alessandrini_pairing, assemble_dtn, conductivity_to_potential, Coefficient, DtnMap};
use calderon_core::phantom::Phantom;
use calderon_core::recon::{
    bie_solve, direct_transform, ideal_lowpass, lowpass_invert, make_zeta_pair, perturbation_singular_values,
    recover_gamma, relative_error_on, sample_at, scattering_grid,
};
use calderon_core::stability::{dtn_distance, dtn_norm, perturb_dtn};
use calderon_core::{ComplexFrequency, Domain, Grid, ScalarField};
use calderon_lab::{cmd_reconstruct, cmd_stability, RunConfig};
use tempfile::TempDir;

type Outcome = Result<String, String>;

struct Problem {
    domain: Arc<Domain>,
    q: ScalarField,
    lq: DtnMap,
    l0: DtnMap,
}

fn problem(n: usize, phantom: &Phantom) -> Problem {
    let grid = Grid::new(n, 1.0).unwrap();
    let domain = Arc::new(Domain::default_ball(grid).unwrap());
    let gamma = phantom.gamma(grid);
    let q = conductivity_to_potential(&domain, &gamma).unwrap();
    let lq = assemble_dtn(&domain, Coefficient::conductivity(&gamma), "gamma").unwrap();
    let l0 = assemble_dtn(&domain, Coefficient::potential(&ScalarField::zeros(grid)), "reference").unwrap();
    Problem { domain, q, lq, l0 }
}

fn zeta(k: f64) -> ComplexFrequency {
    ComplexFrequency::from_directions([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], k).unwrap()
}

fn rel_diff(a: &[calderon_core::Complex64], b: &[calderon_core::Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reduction_identity() -> Outcome {
    let bump = Phantom::standard_bump(1.0);
    let rel = |n: usize| {
        let p = problem(n, &bump);
        let lpot = assemble_dtn(&p.domain, Coefficient::potential(&p.q), "q").unwrap();
        dtn_distance(&p.lq, &lpot).unwrap() / dtn_norm(&p.l0).unwrap()
    };
    let (r32, r48) = (rel(32), rel(48));
    let improvement = r32 / r48;
    verdict(
        r32 <= 1e-4 && improvement >= 3.0,
        format!("relative mismatch {r32:.3e} at 32^3 (limit 1e-4), {r48:.3e} at 48^3, improvement {improvement:.2}x (need 3x)"),
    )
}

fn integral_identity() -> Outcome {
    let grid = Grid::new(32, 1.0).unwrap();
    let domain = Arc::new(Domain::default_ball(grid).unwrap());
    let zero = ScalarField::zeros(grid);
    let l0 = assemble_dtn(&domain, Coefficient::potential(&zero), "reference").unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let q = conductivity_to_potential(&domain, &Phantom::random(1.0, seed).gamma(grid)).unwrap();
        let lq = assemble_dtn(&domain, Coefficient::potential(&q), "q").unwrap();
        let pair = make_zeta_pair([2.0 * std::f64::consts::PI, 0.0, 0.0], 8.0).unwrap();
        let (z1, z2) = pair.on_lattice(grid.spacing()).unwrap();
        let green = FaddeevGreen::new(grid, &z1).unwrap();
        let u1 = cgo_field(&solve_cgo_with(&q, &pair.zeta1, &green, CgoOptions::default()).unwrap());
        let mut u2 = zero.clone();
        for (idx, v) in u2.values_mut().iter_mut().enumerate() {
            *v = z2.exp_at(grid.position(idx));
        }
        let (boundary, volume) = alessandrini_pairing(&lq, &l0, &q, &zero, &u1, &u2).unwrap();
        worst = worst.max((boundary - volume).norm() / volume.norm());
    }
    verdict(worst <= 0.01, format!("max relative mismatch {worst:.3e} over 5 random potentials (limit 1e-2)"))
}

fn gaussian(g: Grid) -> ScalarField {
    let w = 0.15 * g.half_width();
    ScalarField::from_real_fn(g, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        if r2.sqrt() > 0.6 * g.half_width() {
            0.0
        } else {
            (-r2 / (w * w)).exp()
        }
    })
}

fn faddeev_inverse() -> Outcome {
    let g = Grid::new(32, 1.0).unwrap();
    let f = gaussian(g);
    let n = g.n();
    let interior: Vec<bool> = (0..g.len()).map(|i| g.ijk(i).iter().all(|&c| c >= 1 && c + 1 < n)).collect();
    let delta = 0.25;
    let fnorm = weighted_norm(&f, delta, WeightSign::Positive, 1.0, 0).unwrap().l2_delta;
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for k in [4.0, 8.0, 16.0] {
        let lz = zeta(k).on_lattice(g.spacing()).unwrap();
        let u = FaddeevGreen::new(g, &lz).unwrap().apply(&f).unwrap();
        let back = conjugated_laplacian(&u, lz.zeta());
        worst = worst.max(back.sub(&f).unwrap().l2_norm_on(&interior) / f.l2_norm());
        let v = gzeta_apply(&f, &zeta(k)).unwrap();
        ratios.push(k * weighted_norm(&v, delta, WeightSign::Negative, k, 0).unwrap().l2_delta / fnorm);
    }
    let band = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        worst <= 1e-3 && band <= 4.0,
        format!("right-inverse error {worst:.3e} (limit 1e-3), scaling ratios {ratios:.3?} within a {band:.2}x band (limit 4)"),
    )
}

fn cgo_decay() -> Outcome {
    let p = problem(32, &Phantom::standard_bump(1.0));
    let mut norms = Vec::new();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [8.0, 16.0, 32.0] {
        let sol = solve_cgo(&p.q, &zeta(k), CgoOptions::default()).unwrap();
        ok &= sol.residual <= 1e-6 && sol.contraction_estimate < 1.0;
        norms.push(sol.r.l2_norm_on(p.domain.inside_mask()));
        detail.push(format!("k={k}: residual {:.1e}, contraction {:.3}", sol.residual, sol.contraction_estimate));
    }
    ok &= norms[0] > norms[1] && norms[1] > norms[2];
    verdict(ok, format!("{}; ||r|| = {}", detail.join(", "), list(&norms)))
}

fn bie_equivalence() -> Outcome {
    let opts = CgoOptions::default();
    let trace_error = |p: &Problem, k: f64| {
        let z = zeta(k);
        let bie = bie_solve(&p.lq, &p.l0, &z).unwrap();
        let cgo = cgo_trace(&solve_cgo(&p.q, &z, opts).unwrap(), &p.domain).unwrap();
        rel_diff(bie.f.values(), cgo.values())
    };
    let bump = trace_error(&problem(32, &Phantom::standard_bump(1.0)), 8.0);
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let p = problem(32, &Phantom::random(1.0, seed));
        for k in [8.0, 16.0] {
            worst = worst.max(trace_error(&p, k));
        }
    }
    verdict(
        bump <= 0.02 && worst <= 0.05,
        format!("bump at k=8: {bump:.3e} (limit 0.02); random potentials: max {worst:.3e} (limit 0.05)"),
    )
}

fn scattering_convergence() -> Outcome {
    let p = problem(32, &Phantom::standard_bump(1.0));
    let s = 2.0 * std::f64::consts::PI;
    // Every point must admit k = 8, i.e. |xi| <= 8 sqrt(2).
    let points = [[s, 0.0, 0.0], [0.0, s, s], [s, s, s], [0.0, 0.0, -s], [-s, s, 0.0]];
    let mut ok = true;
    let mut detail = Vec::new();
    for xi in points {
        let exact = direct_transform(&p.q, xi);
        let errs: Vec<f64> =
            [8.0, 16.0, 32.0].iter().map(|&k| (sample_at(&p.lq, &p.l0, xi, k).unwrap().0 - exact).norm() / exact.norm()).collect();
        ok &= errs[0] > errs[1] && errs[1] > errs[2] && errs[2] <= 0.1;
        detail.push(list(&errs));
    }
    verdict(ok, format!("errors over k = 8, 16, 32: {}", detail.join(" ")))
}

fn reconstruction() -> Outcome {
    let dir = TempDir::new().unwrap();
    let config = RunConfig { output: dir.path().to_path_buf(), ..RunConfig::default() };
    let (report, _) = cmd_reconstruct(&config).map_err(|e| e.to_string())?;

    // Diagnostic only: the same samples with the exact mean in place of the fill.
    let p = problem(32, &Phantom::standard_bump(1.0));
    let rho = report.rho;
    let mut samples = scattering_grid(&p.lq, &p.l0, rho, config.schedule()).unwrap();
    samples.zero_value = direct_transform(&p.q, [0.0; 3]);
    let lowpass = ideal_lowpass(&p.q, rho).unwrap();
    let mask = p.domain.inside_mask();
    let exact_mean = lowpass_invert(&samples).q.sub(&lowpass).unwrap().l2_norm_on(mask) / lowpass.l2_norm_on(mask);

    verdict(
        report.gamma_error <= 0.2 && report.q_error <= 0.15 && report.collar_error <= 0.02,
        format!(
            "gamma {:.4} (limit 0.2), q vs low-pass {:.4} (limit 0.15; {:.4} relative to ||q||, {exact_mean:.4} with the exact mean), collar {:.4} rel. L2 (limit 0.02, max deviation {:.4})",
            report.gamma_error, report.q_error, report.q_error_vs_q_norm, report.collar_error, report.collar_max_deviation
        ),
    )
}

fn oracle_closure() -> Outcome {
    let grid = Grid::new(48, 1.0).unwrap();
    let domain = Arc::new(Domain::default_ball(grid).unwrap());
    let gamma = Phantom::standard_bump(1.0).gamma(grid);
    let q = conductivity_to_potential(&domain, &gamma).unwrap();
    let back = recover_gamma(&domain, &q, 0.1).unwrap();
    let err = relative_error_on(domain.inside_mask(), &back.gamma, &gamma).unwrap();
    verdict(err <= 0.01, format!("relative L2 error {err:.3e} at 48^3 (limit 1e-2)"))
}

fn stability_shape() -> Outcome {
    let dir = TempDir::new().unwrap();
    let config = RunConfig { output: dir.path().to_path_buf(), ..RunConfig::default() };
    let (curve, report, _) = cmd_stability(&config).map_err(|e| e.to_string())?;
    let errors = curve.errors();
    let Some(fit) = curve.fit.as_ref() else {
        return Err(format!("no fit; errors {}", list(&errors)));
    };
    verdict(
        curve.points.len() == 8 && report.inversions <= 1 && fit.sigma > 0.0 && fit.log_type_preferred(),
        format!(
            "{} levels, {} inversions (limit 1), sigma {:.3}, log-model residual {:.4} vs power-law {:.4}; errors {}",
            curve.points.len(),
            report.inversions,
            fit.sigma,
            fit.log_model.rms_residual,
            fit.power_model.rms_residual,
            list(&errors)
        ),
    )
}

fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_string_lossy().starts_with("manifest_"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism_and_compactness() -> Outcome {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        let mut config = RunConfig { grid: 20, output: dir.path().to_path_buf(), ..RunConfig::default() };
        config.seed = 7;
        config.stability.grid = Some(16);
        config.stability.noise_levels = vec![1e-5, 1e-3, 1e-1];
        cmd_reconstruct(&config).map_err(|e| e.to_string())?;
        cmd_stability(&config).map_err(|e| e.to_string())?;
        runs.push(outputs(dir.path()));
    }
    let identical = runs[0] == runs[1] && runs[0].contains_key("stability.csv");

    let p = problem(32, &Phantom::standard_bump(1.0));
    let a = perturb_dtn(&p.lq, 1e-3, 3).unwrap();
    let b = perturb_dtn(&p.lq, 1e-3, 3).unwrap();
    let noise_identical = a.matrix() == b.matrix();

    let sv = perturbation_singular_values(&p.lq, &p.l0, &zeta(8.0)).unwrap();
    let quarter = sv.len() / 4;
    let decay = sv[0] / sv[quarter];
    verdict(
        identical && noise_identical && decay >= 1e3,
        format!(
            "{} output files bit-identical: {identical}; seeded noise identical: {noise_identical}; singular value decay {decay:.3e} over {quarter} of {} (limit 1e3)",
            runs[0].len(),
            sv.len()
        ),
    )
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("reduction-identity", reduction_identity),
        ("integral-identity", integral_identity),
        ("faddeev-right-inverse", faddeev_inverse),
        ("cgo-existence-decay", cgo_decay),
        ("bie-equivalence", bie_equivalence),
        ("scattering-convergence", scattering_convergence),
        ("end-to-end-reconstruction", reconstruction),
        ("oracle-closure", oracle_closure),
        ("stability-shape", stability_shape),
        ("determinism-compactness", determinism_and_compactness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("C{:<2} {name:<26} PASS  ({secs:.0} s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("C{:<2} {name:<26} FAIL  ({secs:.0} s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
