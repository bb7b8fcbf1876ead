use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::boundary::boundary_pairing;
use crate::domain::Domain;
use crate::grid::Grid;
use crate::phantom::Phantom;

fn ball(n: usize) -> Arc<Domain> {
    Arc::new(Domain::default_ball(Grid::new(n, 1.0).unwrap()).unwrap())
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[test]
fn reference_map_kills_constants_and_gives_normals_for_linears() {
    let d = ball(20);
    let q0 = ScalarField::zeros(*d.grid());
    let l0 = assemble_dtn(&d, Coefficient::potential(&q0), "reference").unwrap();
    assert!(l0.asymmetry() <= 1e-8, "asymmetry {}", l0.asymmetry());
    let one = BoundaryFunction::from_fn(&d, |_| c(1.0));
    assert!(l0.apply(&one).unwrap().max_abs() < 1e-9);
    for axis in 0..3 {
        let lin = BoundaryFunction::from_fn(&d, |x| c(x[axis]));
        let out = l0.apply(&lin).unwrap();
        for (b, v) in out.values().iter().enumerate() {
            let nu = d.boundary_normals()[b][axis];
            assert!((v.re - nu).abs() < 1e-8, "axis {axis} node {b}: {} vs {nu}", v.re);
        }
    }
}

#[test]
fn unit_conductivity_matches_zero_potential() {
    let d = ball(18);
    let g = *d.grid();
    let one = ScalarField::constant(g, c(1.0));
    let zero = ScalarField::zeros(g);
    let a = assemble_dtn(&d, Coefficient::conductivity(&one), "gamma").unwrap();
    let b = assemble_dtn(&d, Coefficient::potential(&zero), "q").unwrap();
    let diff = a.difference(&b).unwrap();
    assert!(diff.norm_l2() <= 1e-10 * b.matrix().norm_l2());
}

#[test]
fn quadratic_harmonic_is_reproduced() {
    let d = ball(20);
    let g = *d.grid();
    let gamma = ScalarField::constant(g, c(1.0));
    let f = BoundaryFunction::from_fn(&d, |x| c(x[0] * x[0] - x[1] * x[1] + 0.5 * x[2]));
    let sol = solve_conductivity_dirichlet(&d, &gamma, &f).unwrap();
    assert!(sol.residual < 1e-10);
    for &idx in d.interior_nodes() {
        let x = g.position(idx);
        let exact = x[0] * x[0] - x[1] * x[1] + 0.5 * x[2];
        assert!((sol.u.get(idx).re - exact).abs() < 1e-10);
    }
}

#[test]
fn neumann_data_agrees_with_map() {
    let d = ball(18);
    let gamma = Phantom::standard_bump(1.0).gamma(*d.grid());
    let op = DirichletOperator::new(d.clone(), Coefficient::conductivity(&gamma)).unwrap();
    let map = op.dtn("gamma").unwrap();
    let f = BoundaryFunction::from_fn(&d, |x| Complex64::new(x[0] * x[1], x[2]));
    let sol = op.solve(&f, None).unwrap();
    let via_map = map.apply(&f).unwrap();
    let err: f64 = sol
        .neumann
        .values()
        .iter()
        .zip(via_map.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-8 * via_map.max_abs(), "err {err:e}");
}

#[test]
fn potential_oracle_for_the_bump() {
    // Radial profile phi = g * c, g Gaussian, c = (1 - r^2 / rc^2)_+^4.
    let (a, w, rc) = (0.3, 0.25, 0.5);
    let oracle = |r: f64| -> f64 {
        let g = (-r * r / (w * w)).exp();
        let g1 = -2.0 * r / (w * w) * g;
        let g2 = (4.0 * r * r / w.powi(4) - 2.0 / (w * w)) * g;
        let u = 1.0 - r * r / (rc * rc);
        let (chi, chi1, chi2) = if u <= 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let du = -2.0 * r / (rc * rc);
            (u.powi(4), 4.0 * u.powi(3) * du, 12.0 * u * u * du * du - 8.0 * u.powi(3) / (rc * rc))
        };
        let phi = g * chi;
        let phi1 = g1 * chi + g * chi1;
        let phi2 = g2 * chi + 2.0 * g1 * chi1 + g * chi2;
        let lap = if r > 1e-12 { phi2 + 2.0 * phi1 / r } else { 3.0 * phi2 };
        a * lap / (1.0 + a * phi)
    };
    let grid = Grid::new(96, 1.0).unwrap();
    let d = Domain::default_ball(grid).unwrap();
    let gamma = Phantom::standard_bump(1.0).gamma(grid);
    let q = conductivity_to_potential(&d, &gamma).unwrap();
    let exact = ScalarField::from_real_fn(grid, |x| oracle(crate::domain::norm3(x)));
    let mask = d.inside_mask();
    let err = q.sub(&exact).unwrap().l2_norm_on(mask) / exact.l2_norm_on(mask);
    assert!(err <= 0.01, "relative error {err}");
}

#[test]
fn potential_vanishes_on_collar() {
    let d = ball(24);
    let gamma = Phantom::two_bump(1.0).gamma(*d.grid());
    let q = conductivity_to_potential(&d, &gamma).unwrap();
    // The stencil spreads the support of q by one node.
    let h = d.grid().spacing();
    for (idx, x) in d.grid().positions().enumerate() {
        if d.shape().depth(x) < d.collar_width() - 1.01 * h {
            assert_eq!(q.get(idx), Complex64::new(0.0, 0.0));
        }
    }
}

#[test]
fn reduction_to_schrodinger_is_exact_with_geometric_faces() {
    let d = ball(20);
    let g = *d.grid();
    let gamma = Phantom::standard_bump(1.0).gamma(g);
    let s = gamma.map(|v| c(v.re.sqrt()));
    let q = conductivity_to_potential(&d, &gamma).unwrap();
    let f = BoundaryFunction::from_fn(&d, |x| c(x[0] + x[1] * x[2]));
    let u = solve_conductivity_dirichlet(&d, &gamma, &f).unwrap();
    let w = solve_schrodinger_dirichlet(&d, &q, &f, None).unwrap();
    let su = s.mul(&u.u).unwrap();
    let err = su.sub(&w.u).unwrap().l2_norm_on(d.inside_mask()) / w.u.l2_norm_on(d.inside_mask());
    assert!(err < 1e-10, "{err:e}");
}

#[test]
fn conductivity_rejects_bad_input() {
    let d = ball(16);
    let g = *d.grid();
    let neg = ScalarField::constant(g, c(-1.0));
    let f = BoundaryFunction::from_fn(&d, |_| c(1.0));
    assert!(matches!(
        solve_conductivity_dirichlet(&d, &neg, &f),
        Err(Error::EllipticityViolation { .. })
    ));
    let other = Arc::new(Domain::default_ball(Grid::new(17, 1.0).unwrap()).unwrap());
    let f_other = BoundaryFunction::from_fn(&other, |_| c(1.0));
    let one = ScalarField::constant(g, c(1.0));
    assert_eq!(
        solve_conductivity_dirichlet(&d, &one, &f_other).unwrap_err(),
        Error::DomainMismatch
    );
}

#[test]
fn resonant_potential_is_reported() {
    let d = ball(16);
    let g = *d.grid();
    let zero = ScalarField::zeros(g);
    let op = DirichletOperator::new(d.clone(), Coefficient::potential(&zero)).unwrap();
    let lambda1 = op.sigma_min() / g.spacing().powi(2);
    let q = ScalarField::constant(g, c(-lambda1));
    let f = BoundaryFunction::from_fn(&d, |_| c(1.0));
    let err = solve_schrodinger_dirichlet(&d, &q, &f, None).unwrap_err();
    assert!(matches!(err, Error::NearSingular { .. }), "{err:?}");
}

#[test]
fn source_term_is_honoured() {
    // u = |x|^2 solves -Delta u = -6 exactly on the lattice.
    let d = ball(18);
    let g = *d.grid();
    let zero = ScalarField::zeros(g);
    let rhs = ScalarField::constant(g, c(-6.0));
    let f = BoundaryFunction::from_fn(&d, |x| c(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    let sol = solve_schrodinger_dirichlet(&d, &zero, &f, Some(&rhs)).unwrap();
    for &idx in d.interior_nodes() {
        let x = g.position(idx);
        assert!((sol.u.get(idx).re - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn maps_are_symmetric_and_nonnegative(seed in 0u64..1000, fx in -1.0f64..1.0, fy in -1.0f64..1.0) {
        let d = ball(16);
        let gamma = Phantom::random(1.0, seed).gamma(*d.grid());
        let map = assemble_dtn(&d, Coefficient::conductivity(&gamma), "gamma").unwrap();
        prop_assert!(map.asymmetry() <= 1e-8);
        let f = BoundaryFunction::from_fn(&d, |x| c(fx * x[0] + fy * x[1] * x[1] + x[2].sin()));
        let h = BoundaryFunction::from_fn(&d, |x| c((x[0] * 3.0).cos() + fy * x[2]));
        let energy = map.pairing(&f, &f).unwrap().re;
        prop_assert!(energy >= -1e-12);
        let a = map.pairing(&f, &h).unwrap();
        let b = map.pairing(&h, &f).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * (a.norm() + 1e-12));
        let one = BoundaryFunction::from_fn(&d, |_| c(1.0));
        prop_assert!(boundary_pairing(&d, &map.apply(&one).unwrap(), &one).unwrap().norm() < 1e-9);
    }
}
