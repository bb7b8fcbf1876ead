use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;

use crate::boundary::BoundaryFunction;
use crate::error::{Error, Result};
use crate::faddeev::FaddeevGreen;
use crate::forward::DtnMap;
use crate::frequency::{ComplexFrequency, LatticeFrequency};

/// Largest accepted 1-norm condition number of the boundary system.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Largest accepted relative residual of the boundary solve.
pub const BIE_TOLERANCE: f64 = 1e-9;

/// Solution of the boundary integral equation for one frequency.
#[derive(Debug, Clone)]
pub struct BieSolution {
    /// Boundary trace of the CGO solution.
    pub f: BoundaryFunction,
    /// Grid-harmonic frequency the equation was posed with.
    pub lattice: LatticeFrequency,
    /// Relative residual of the scaled system.
    pub residual: f64,
    /// 1-norm condition number of the scaled system.
    pub condition: f64,
}

/// Matrix of `T = S_zeta (Lambda_q - Lambda_0)` on the boundary nodes.
///
/// `S_zeta` places mass `phi_c w_c` at boundary node `c` and evaluates the
/// lattice kernel `e^{(x_b - x_c).zeta} g(b - c)` of [`FaddeevGreen`], which
/// satisfies `Delta_h K = delta / h^3`.
pub fn perturbation_operator(lq: &DtnMap, l0: &DtnMap, green: &FaddeevGreen) -> Result<Mat<Complex64>> {
    lq.check_compatible(l0)?;
    let domain = lq.domain();
    let grid = *domain.grid();
    if green.grid() != &grid {
        return Err(Error::DomainMismatch);
    }
    let nb = domain.n_boundary();
    let h3 = grid.cell_volume();
    let table = green.kernel_table();
    let zeta = green.zeta();
    let nodes = domain.boundary_nodes();
    let ijk: Vec<[i64; 3]> = nodes.iter().map(|&i| grid.ijk(i).map(|c| c as i64)).collect();
    let pos: Vec<[f64; 3]> = nodes.iter().map(|&i| grid.position(i)).collect();
    let weights = domain.boundary_weights();
    let kernel = Mat::<Complex64>::from_fn(nb, nb, |b, c| {
        let d = [0, 1, 2].map(|j| ijk[b][j] - ijk[c][j]);
        let dx = [0, 1, 2].map(|j| pos[b][j] - pos[c][j]);
        zeta.exp_at(dx) * table.at(d) * (weights[c] / h3)
    });
    let diff = lq.difference(l0)?;
    let re = Mat::<f64>::from_fn(nb, nb, |i, j| kernel[(i, j)].re);
    let im = Mat::<f64>::from_fn(nb, nb, |i, j| kernel[(i, j)].im);
    let tr = &re * &diff;
    let ti = &im * &diff;
    Ok(Mat::from_fn(nb, nb, |i, j| Complex64::new(tr[(i, j)], ti[(i, j)])))
}

fn one_norm(m: &Mat<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `(I - S_zeta (Lambda_q - Lambda_0)) f = e^{x.zeta}` on the boundary,
/// with `zeta` moved onto the lattice variety.
///
/// With the kernel normalised by `Delta K = delta`, the trace of the CGO
/// solution satisfies this equation exactly on the grid.
pub fn bie_solve(lq: &DtnMap, l0: &DtnMap, zeta: &ComplexFrequency) -> Result<BieSolution> {
    let grid = *lq.domain().grid();
    zeta.check_overflow(grid.half_width())?;
    let lattice = zeta.on_lattice(grid.spacing())?;
    bie_solve_lattice(lq, l0, &lattice)
}

/// [`bie_solve`] for a frequency already on the lattice variety.
///
/// The system is solved in the diagonally scaled form
/// `(I - D^{-1} T D) g = D^{-1} e^{x.zeta}`, `f = D g`, with
/// `D = diag(e^{x_b . Re zeta})`, which removes the exponential growth of the
/// unknown; the reported condition number is that of the scaled matrix.
pub fn bie_solve_lattice(lq: &DtnMap, l0: &DtnMap, zeta: &LatticeFrequency) -> Result<BieSolution> {
    let domain = lq.domain();
    let grid = *domain.grid();
    let green = FaddeevGreen::new(grid, zeta)?;
    let t = perturbation_operator(lq, l0, &green)?;
    let nb = t.nrows();
    let re = zeta.re();
    let scale: Vec<f64> = (0..nb)
        .map(|b| {
            let x = domain.boundary_position(b);
            (x[0] * re[0] + x[1] * re[1] + x[2] * re[2]).exp()
        })
        .collect();
    let a = Mat::<Complex64>::from_fn(nb, nb, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - t[(i, j)] * (scale[j] / scale[i])
    });
    let rhs = Mat::<Complex64>::from_fn(nb, 1, |b, _| zeta.exp_at(domain.boundary_position(b)) / scale[b]);
    let lu = a.partial_piv_lu();
    let mut x = lu.solve(&rhs);
    let rhs_norm = rhs.norm_l2();
    let mut residual = f64::INFINITY;
    for _ in 0..3 {
        let r = &rhs - &a * &x;
        residual = r.norm_l2() / rhs_norm;
        if residual <= BIE_TOLERANCE * 1e-3 {
            break;
        }
        x += lu.solve(&r);
    }
    if !x.col(0).iter().all(|v| v.is_finite()) {
        return Err(Error::IllConditioned { cond: f64::INFINITY, limit: CONDITION_LIMIT });
    }
    let condition = one_norm(&a) * one_norm(&lu.inverse());
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned { cond: condition, limit: CONDITION_LIMIT });
    }
    if residual > BIE_TOLERANCE {
        return Err(Error::SolverResidual { residual, tolerance: BIE_TOLERANCE });
    }
    let f = BoundaryFunction::new(domain, (0..nb).map(|b| x[(b, 0)] * scale[b]).collect())?;
    Ok(BieSolution { f, lattice: *zeta, residual, condition })
}

/// Singular values of `T`, largest first.
pub fn perturbation_singular_values(lq: &DtnMap, l0: &DtnMap, zeta: &ComplexFrequency) -> Result<Vec<f64>> {
    let grid = *lq.domain().grid();
    zeta.check_overflow(grid.half_width())?;
    let lattice = zeta.on_lattice(grid.spacing())?;
    let green = FaddeevGreen::new(grid, &lattice)?;
    let t = perturbation_operator(lq, l0, &green)?;
    let mut s = t.singular_values().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}
