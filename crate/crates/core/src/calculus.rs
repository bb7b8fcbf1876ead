//! Finite-difference operators on the full grid box.

use num_complex::Complex64;

use crate::field::ScalarField;
use crate::grid::Grid;

#[inline]
fn stride(grid: &Grid, axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => grid.n(),
        _ => grid.n() * grid.n(),
    }
}

/// Partial derivative along `axis`: centred differences inside the box,
/// second-order one-sided differences on the faces.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let s = stride(&grid, axis);
    let v = f.values();
    let mut out = vec![Complex64::default(); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let c = grid.ijk(idx)[axis];
        *o = if c == 0 {
            (-3.0 * v[idx] + 4.0 * v[idx + s] - v[idx + 2 * s]) / (2.0 * h)
        } else if c == n - 1 {
            (3.0 * v[idx] - 4.0 * v[idx - s] + v[idx - 2 * s]) / (2.0 * h)
        } else {
            (v[idx + s] - v[idx - s]) / (2.0 * h)
        };
    }
    ScalarField::from_values(grid, out).expect("same grid")
}

pub fn gradient(f: &ScalarField) -> [ScalarField; 3] {
    [partial(f, 0), partial(f, 1), partial(f, 2)]
}

/// Seven-point Laplacian; faces use one-sided second differences.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let n = grid.n();
    let h2 = grid.spacing().powi(2);
    let v = f.values();
    let mut out = vec![Complex64::default(); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let ijk = grid.ijk(idx);
        let mut acc = Complex64::default();
        for axis in 0..3 {
            let s = stride(&grid, axis);
            let c = ijk[axis];
            acc += if c == 0 {
                2.0 * v[idx] - 5.0 * v[idx + s] + 4.0 * v[idx + 2 * s] - v[idx + 3 * s]
            } else if c == n - 1 {
                2.0 * v[idx] - 5.0 * v[idx - s] + 4.0 * v[idx - 2 * s] - v[idx - 3 * s]
            } else {
                v[idx + s] - 2.0 * v[idx] + v[idx - s]
            };
        }
        *o = acc / h2;
    }
    ScalarField::from_values(grid, out).expect("same grid")
}

/// `e^{-x.zeta} Delta_h (e^{x.zeta} v)` for the seven-point Laplacian `Delta_h`.
///
/// Expanding the exponentials gives `Delta_h + 2 zeta.grad_h` plus terms of
/// order `h^2`; using the exact conjugate keeps the identity
/// `Delta_zeta(e^{-x.zeta} phi) = e^{-x.zeta} Delta_h phi` exact on the grid,
/// which the Faddeev inverse and the CGO solver depend on. Values on the box
/// faces are set to zero.
pub fn conjugated_laplacian(v: &ScalarField, zeta: &[Complex64; 3]) -> ScalarField {
    let grid = *v.grid();
    let n = grid.n();
    let h = grid.spacing();
    let h2 = h * h;
    let up: Vec<Complex64> = zeta.iter().map(|z| (z * h).exp()).collect();
    let down: Vec<Complex64> = zeta.iter().map(|z| (-z * h).exp()).collect();
    let x = v.values();
    let mut out = vec![Complex64::default(); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let ijk = grid.ijk(idx);
        if ijk.iter().any(|&c| c == 0 || c == n - 1) {
            continue;
        }
        let mut acc = Complex64::default();
        for axis in 0..3 {
            let s = stride(&grid, axis);
            acc += up[axis] * x[idx + s] + down[axis] * x[idx - s] - 2.0 * x[idx];
        }
        *o = acc / h2;
    }
    ScalarField::from_values(grid, out).expect("same grid")
}
