//! A single constant calibrated on one pair of conductivities must bound the
//! H^-1 distance of the potentials of other pairs by the logarithmic modulus
//! `C |ln ||L_1 - L_2|||^(-sigma)`, with `sigma = 4 (1 - s)(1 - 2 s) / 3`.

use std::sync::Arc;

use calderon_core::forward::{assemble_dtn, conductivity_to_potential, Coefficient};
use calderon_core::phantom::Phantom;
use calderon_core::stability::{dtn_distance, hm1_norm};
use calderon_core::{Domain, Grid, ScalarField};

const SMOOTHNESS: f64 = 0.25;

/// All phantoms in the check satisfy `|sqrt(gamma) - 1| <= M`.
const A_PRIORI_BOUND: f64 = 0.3;

struct Sample {
    q: ScalarField,
    map: calderon_core::forward::DtnMap,
}

fn sample(domain: &Arc<Domain>, phantom: &Phantom) -> Sample {
    let grid = *domain.grid();
    let s = phantom.sqrt_gamma(grid);
    let sup = s.values().iter().map(|v| (v.re - 1.0).abs()).fold(0.0, f64::max);
    assert!(sup <= A_PRIORI_BOUND + 1e-12, "phantom exceeds the a-priori bound: {sup}");
    let gamma = phantom.gamma(grid);
    let q = conductivity_to_potential(domain, &gamma).unwrap();
    let map = assemble_dtn(domain, Coefficient::conductivity(&gamma), "gamma").unwrap();
    Sample { q, map }
}

fn modulus(dist: f64) -> f64 {
    let sigma = 4.0 * (1.0 - SMOOTHNESS) * (1.0 - 2.0 * SMOOTHNESS) / 3.0;
    dist.ln().abs().powf(-sigma)
}

fn pair_ratio(a: &Sample, b: &Sample) -> (f64, f64, f64) {
    let lhs = hm1_norm(&a.q.sub(&b.q).unwrap());
    let dist = dtn_distance(&a.map, &b.map).unwrap();
    assert!(dist > 0.0 && dist < 1.0, "distance {dist} outside the logarithmic regime");
    (lhs, dist, lhs / modulus(dist))
}

#[test]
fn calibrated_constant_bounds_other_pairs() {
    let grid = Grid::new(24, 1.0).unwrap();
    let domain = Arc::new(Domain::default_ball(grid).unwrap());
    let background = sample(&domain, &Phantom::Gaussian { bumps: Vec::new() });
    let bump = sample(&domain, &Phantom::standard_bump(1.0));
    let (_, _, c) = pair_ratio(&bump, &background);

    let others: Vec<Sample> = (0..6).map(|seed| sample(&domain, &Phantom::random(1.0, 100 + seed))).collect();
    for i in 0..5 {
        let (lhs, dist, ratio) = pair_ratio(&others[i], &others[i + 1]);
        println!("pair {i}: H^-1 {lhs:.4e}, dist {dist:.4e}, ratio {:.3}", ratio / c);
        assert!(ratio <= c, "pair {i}: {lhs:e} exceeds the calibrated bound {:e}", c * modulus(dist));
    }
}
