use num_complex::Complex64;

use crate::boundary::BoundaryFunction;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// `int_{[-1/2, 1/2]^3} |x|^{-1} dx`.
const CUBE_SELF: f64 = 2.380_077_2;
/// `int_{[-1/2, 1/2]^2} |x|^{-1} dx = 4 ln(1 + sqrt 2)`.
const SQUARE_SELF: f64 = 3.525_494_348_078_172;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Newtonian potential `K_0 f(x) = -sum_y f(y) h^3 / (4 pi |x - y|)`, the
/// free-space inverse of the Laplacian (`Delta K_0 f = f`), by direct
/// summation. The coincident node uses the exact integral of the kernel over
/// its cell.
pub fn k0_apply(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let h = grid.spacing();
    let h3 = grid.cell_volume();
    let sources: Vec<([f64; 3], Complex64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(idx, &v)| (grid.position(idx), v * h3))
        .collect();
    let self_term = -h * h * CUBE_SELF / FOUR_PI;
    ScalarField::from_values(
        grid,
        (0..grid.len())
            .map(|idx| {
                let x = grid.position(idx);
                let mut acc = f.get(idx) * self_term;
                for (y, m) in &sources {
                    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                    if d2 > 0.0 {
                        acc -= m / (FOUR_PI * d2.sqrt());
                    }
                }
                acc
            })
            .collect(),
    )
    .expect("same grid")
}

/// Free-space single layer `S_0 phi(x) = -sum_b phi_b w_b / (4 pi |x - x_b|)`.
///
/// At a boundary node the singular term is replaced by the mean of the kernel
/// over a flat square patch of area `w_b`.
pub fn single_layer_newtonian(domain: &Domain, phi: &BoundaryFunction) -> Result<ScalarField> {
    phi.check_domain(domain)?;
    let grid = *domain.grid();
    let w = domain.boundary_weights();
    let sources: Vec<(usize, [f64; 3], Complex64)> = (0..domain.n_boundary())
        .map(|b| (domain.boundary_nodes()[b], domain.boundary_position(b), phi.values()[b] * w[b]))
        .collect();
    let mut out = vec![Complex64::default(); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let x = grid.position(idx);
        let mut acc = Complex64::default();
        for (b, (node, y, m)) in sources.iter().enumerate() {
            if *node == idx {
                acc -= phi.values()[b] * SQUARE_SELF * w[b].sqrt() / FOUR_PI;
            } else {
                let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                acc -= m / (FOUR_PI * d2.sqrt());
            }
        }
        *o = acc;
    }
    ScalarField::from_values(grid, out).map_err(|_| Error::DomainMismatch)
}
