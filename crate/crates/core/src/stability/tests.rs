use std::sync::Arc;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::domain::Domain;
use crate::field::ScalarField;
use crate::forward::{assemble_dtn, conductivity_to_potential, Coefficient, DtnMap};
use crate::grid::Grid;
use crate::phantom::Phantom;
use crate::recon::exact_samples;

fn ball(n: usize) -> Arc<Domain> {
    Arc::new(Domain::default_ball(Grid::new(n, 1.0).unwrap()).unwrap())
}

fn maps(domain: &Arc<Domain>, phantom: &Phantom) -> (DtnMap, DtnMap) {
    let g = *domain.grid();
    let lg = assemble_dtn(domain, Coefficient::conductivity(&phantom.gamma(g)), "gamma").unwrap();
    let l0 = assemble_dtn(domain, Coefficient::potential(&ScalarField::zeros(g)), "reference").unwrap();
    (lg, l0)
}

#[test]
fn distance_to_itself_is_zero() {
    let d = ball(16);
    let (lg, _) = maps(&d, &Phantom::standard_bump(1.0));
    assert_eq!(dtn_distance(&lg, &lg).unwrap(), 0.0);
}

#[test]
fn distance_of_the_standard_bump_is_reproducible() {
    let d = ball(32);
    let (lg, l0) = maps(&d, &Phantom::standard_bump(1.0));
    let a = dtn_distance(&lg, &l0).unwrap();
    let (lg2, l02) = maps(&d, &Phantom::standard_bump(1.0));
    let b = BoundarySobolev::new(&d).unwrap().distance(&lg2, &l02).unwrap();
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
}

#[test]
fn distance_rejects_other_domains() {
    let (a, _) = maps(&ball(16), &Phantom::standard_bump(1.0));
    let (b, _) = maps(&ball(18), &Phantom::standard_bump(1.0));
    assert!(dtn_distance(&a, &b).is_err());
}

#[test]
fn perturbation_has_the_requested_norm() {
    let d = ball(20);
    let (lg, l0) = maps(&d, &Phantom::standard_bump(1.0));
    let scale = dtn_norm(&l0).unwrap();
    for eps in [1e-6, 1e-3, 0.3] {
        let p = perturb_dtn_scaled(&lg, eps, scale, 5).unwrap();
        let dist = dtn_distance(&p, &lg).unwrap();
        assert_relative_eq!(dist, eps * scale, max_relative = 1e-8);
        assert!(p.asymmetry() <= 1e-12, "{}", p.asymmetry());
    }
    let own = perturb_dtn(&lg, 0.01, 5).unwrap();
    assert_relative_eq!(dtn_distance(&own, &lg).unwrap(), 0.01 * dtn_norm(&lg).unwrap(), max_relative = 1e-8);
}

#[test]
fn seeds_change_the_noise_but_not_its_norm() {
    let d = ball(16);
    let (lg, _) = maps(&d, &Phantom::standard_bump(1.0));
    let a = perturb_dtn(&lg, 0.01, 1).unwrap();
    let b = perturb_dtn(&lg, 0.01, 2).unwrap();
    let a2 = perturb_dtn(&lg, 0.01, 1).unwrap();
    assert_eq!(a.matrix(), a2.matrix());
    assert!(dtn_distance(&a, &b).unwrap() > 1e-3 * dtn_distance(&a, &lg).unwrap());
    assert_relative_eq!(dtn_distance(&a, &lg).unwrap(), dtn_distance(&b, &lg).unwrap(), max_relative = 1e-10);
}

#[test]
fn vanishing_noise_returns_the_input() {
    let d = ball(16);
    let (lg, _) = maps(&d, &Phantom::standard_bump(1.0));
    let p = perturb_dtn(&lg, 1e-15, 3).unwrap();
    let diff = p.difference(&lg).unwrap();
    let rel = diff.norm_l2() / lg.matrix().norm_l2();
    assert!(rel <= 1e-13, "{rel:e}");
    assert!(perturb_dtn(&lg, 0.0, 3).is_err());
    assert!(perturb_dtn(&lg, 1.0, 3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn distance_is_a_metric(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000, e in 0.001f64..0.5) {
        let d = ball(16);
        let (lg, _) = maps(&d, &Phantom::standard_bump(1.0));
        let a = perturb_dtn(&lg, e, s1).unwrap();
        let b = perturb_dtn(&lg, e, s2.wrapping_add(1000)).unwrap();
        let c = perturb_dtn(&lg, e * 0.5, s3.wrapping_add(2000)).unwrap();
        let ab = dtn_distance(&a, &b).unwrap();
        let ba = dtn_distance(&b, &a).unwrap();
        let bc = dtn_distance(&b, &c).unwrap();
        let ac = dtn_distance(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab);
        prop_assert!(ac <= ab + bc + 1e-12 * (ab + bc));
        prop_assert_eq!(dtn_distance(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn cutoff_rule_is_calibrated_and_monotone() {
    let g = Grid::new(24, 1.0).unwrap();
    let opts = SweepOptions::default();
    assert_relative_eq!(opts.rho_for(CALIBRATION_EPS, &g), 4.0 * std::f64::consts::PI, max_relative = 1e-12);
    let levels = default_noise_levels();
    assert_eq!(levels.len(), 8);
    assert_relative_eq!(levels[0], 1e-6, max_relative = 1e-12);
    assert_relative_eq!(levels[7], 1e-1, max_relative = 1e-12);
    let rho: Vec<f64> = levels.iter().map(|&e| opts.rho_for(e, &g)).collect();
    assert!(rho.windows(2).all(|w| w[1] <= w[0]));
    assert!(rho.iter().all(|&r| r >= crate::recon::dual_spacing(&g)));
    assert!(SweepOptions { smoothness: 0.5, ..opts }.validate().is_err());
}

#[test]
fn fits_recover_their_own_models() {
    let eps = default_noise_levels();
    let log_type: Vec<f64> = eps.iter().map(|e| 2.0 * e.ln().abs().powf(-1.5)).collect();
    let f = StabilityFit::from_points(&eps, &log_type).unwrap();
    assert_relative_eq!(f.sigma, 1.5, max_relative = 1e-10);
    assert!(f.log_model.rms_residual <= 1e-12);
    assert!(f.log_type_preferred());
    let power: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(0.4)).collect();
    let f = StabilityFit::from_points(&eps, &power).unwrap();
    assert!(!f.log_type_preferred());
    assert_relative_eq!(f.power_model.slope, 0.4, max_relative = 1e-10);
    assert!(StabilityFit::from_points(&eps[..2], &power[..2]).is_none());
}

#[test]
fn sample_distance_and_grid_norm() {
    let d = ball(20);
    let q = conductivity_to_potential(&d, &Phantom::standard_bump(1.0).gamma(*d.grid())).unwrap();
    let rho = 4.0 * std::f64::consts::PI;
    let a = exact_samples(&q, rho).unwrap();
    assert_eq!(sample_hm1_distance(&a, &a), 0.0);
    let zero = exact_samples(&ScalarField::zeros(*d.grid()), rho).unwrap();
    let dist = sample_hm1_distance(&a, &zero);
    assert!(dist > 0.0 && dist <= q.l2_norm());
    // A single Fourier mode has H^{-1} norm ||f|| / sqrt(1 + |k|^2).
    let g = *d.grid();
    let kx = g.frequency(2);
    let wave = ScalarField::from_fn(g, |x| Complex64::from_polar(1.0, kx * x[0]));
    assert_relative_eq!(hm1_norm(&wave), wave.l2_norm() / (1.0 + kx * kx).sqrt(), max_relative = 1e-10);
}

#[test]
fn sweep_errors_grow_with_the_noise() {
    let d = ball(20);
    let gamma = Phantom::standard_bump(1.0).gamma(*d.grid());
    let eps = [1e-6, 1e-4, 1e-2];
    let opts = SweepOptions::default();
    let curve = stability_sweep(&d, &gamma, &eps, 4, opts).unwrap();
    assert_eq!(curve.noise_levels(), eps.to_vec());
    for p in &curve.points {
        assert_relative_eq!(p.dist, p.eps * curve.noise_scale, max_relative = 1e-8);
        assert!(p.err_q_hm1 >= 0.0 && p.err_gamma_l2 >= 0.0 && p.err_gamma_sup >= 0.0);
    }
    assert_eq!(curve.inversions(), 0, "{:?}", curve.errors());
    assert!(curve.fitted_sigma().unwrap() > 0.0);
    let again = stability_sweep(&d, &gamma, &eps, 4, opts).unwrap();
    assert_eq!(again, curve);
}

#[test]
fn sweep_rejects_bad_levels() {
    let d = ball(16);
    let gamma = Phantom::standard_bump(1.0).gamma(*d.grid());
    let opts = SweepOptions::default();
    for bad in [vec![], vec![1e-3, 1e-4], vec![0.0, 1e-3], vec![1e-3, 1.0]] {
        assert!(stability_sweep(&d, &gamma, &bad, 1, opts).is_err(), "{bad:?}");
    }
}
