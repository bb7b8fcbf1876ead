use std::sync::Arc;

use calderon_core::cgo::{cgo_field, solve_cgo_with, CgoOptions};
use calderon_core::faddeev::FaddeevGreen;
use calderon_core::forward::{alessandrini_pairing, assemble_dtn, conductivity_to_potential, Coefficient};
use calderon_core::phantom::Phantom;
use calderon_core::recon::make_zeta_pair;
use calderon_core::{Domain, Grid, ScalarField};

/// Boundary and volume sides of the identity for the pair
/// `u1 = e^{x.zeta1}(1 + r)` (potential `q`) and `u2 = e^{x.zeta2}` (zero potential).
fn both_sides(n: usize, seed: u64, xi: [f64; 3], k: f64) -> (f64, f64) {
    let grid = Grid::new(n, 1.0).unwrap();
    let domain = Arc::new(Domain::default_ball(grid).unwrap());
    let gamma = Phantom::random(1.0, seed).gamma(grid);
    let q = conductivity_to_potential(&domain, &gamma).unwrap();
    let zero = ScalarField::zeros(grid);
    let lq = assemble_dtn(&domain, Coefficient::potential(&q), "q").unwrap();
    let l0 = assemble_dtn(&domain, Coefficient::potential(&zero), "reference").unwrap();

    let pair = make_zeta_pair(xi, k).unwrap();
    let (z1, z2) = pair.on_lattice(grid.spacing()).unwrap();
    let green = FaddeevGreen::new(grid, &z1).unwrap();
    let sol = solve_cgo_with(&q, &pair.zeta1, &green, CgoOptions::default()).unwrap();
    let u1 = cgo_field(&sol);
    let mut u2 = zero.clone();
    for (idx, v) in u2.values_mut().iter_mut().enumerate() {
        *v = z2.exp_at(grid.position(idx));
    }
    let (boundary, volume) = alessandrini_pairing(&lq, &l0, &q, &zero, &u1, &u2).unwrap();
    ((boundary - volume).norm() / volume.norm(), volume.norm())
}

#[test]
fn boundary_and_volume_sides_agree_for_random_potentials() {
    for seed in 0..5 {
        let (rel, volume) = both_sides(24, seed, [2.0 * std::f64::consts::PI, 0.0, 0.0], 8.0);
        assert!(volume > 0.0);
        assert!(rel <= 0.01, "seed {seed}: relative mismatch {rel:e}");
    }
}
