//! Complex geometrical optics solutions `u = e^{x.zeta} (1 + r)` of
//! `(-Delta + q) u = 0`, built by the Neumann series for `s = -Delta_zeta r`.

use num_complex::Complex64;

use crate::boundary::BoundaryFunction;
use crate::calculus::conjugated_laplacian;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::faddeev::FaddeevGreen;
use crate::field::ScalarField;
use crate::frequency::{ComplexFrequency, LatticeFrequency, OVERFLOW_GUARD};

/// Consecutive non-contracting iterations tolerated before giving up.
pub const STALL_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgoOptions {
    /// Stop once `||s_{j+1} - s_j|| <= tol ||q||`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgoOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

/// Converged CGO remainder.
///
/// `lattice` is the grid-harmonic frequency actually used; `e^{x.lattice}` is
/// exactly harmonic for the seven-point Laplacian, and traces use it.
#[derive(Debug, Clone)]
pub struct CgoSolution {
    pub zeta: ComplexFrequency,
    pub lattice: LatticeFrequency,
    pub r: ScalarField,
    pub iterations: usize,
    /// Ratio of the last two update norms.
    pub contraction_estimate: f64,
    /// All measured update ratios, one per iteration after the first.
    pub ratios: Vec<f64>,
    /// `||(-Delta_zeta + q) r + q|| / ||q||` away from the box faces.
    pub residual: f64,
}

impl CgoSolution {
    pub fn k(&self) -> f64 {
        self.zeta.k()
    }
}

fn interior_mask(f: &ScalarField) -> Vec<bool> {
    let g = *f.grid();
    let n = g.n();
    (0..g.len())
        .map(|idx| g.ijk(idx).iter().all(|&c| c > 0 && c + 1 < n))
        .collect()
}

/// `||(-Delta_zeta + q) r + q|| / ||q||`, evaluated with the finite-difference
/// operator rather than the spectral inverse.
pub fn cgo_residual(q: &ScalarField, r: &ScalarField, zeta: &LatticeFrequency) -> Result<f64> {
    let lr = conjugated_laplacian(r, zeta.zeta());
    let res = q.zip_map(r, |qv, rv| qv * rv + qv)?.sub(&lr)?;
    let mask = interior_mask(q);
    let qn = q.l2_norm_on(&mask);
    if qn == 0.0 {
        return Ok(res.l2_norm_on(&mask));
    }
    Ok(res.l2_norm_on(&mask) / qn)
}

/// Solves `(-Delta_zeta + q) r = -q` by iterating `s <- q + q G_zeta s` from
/// `s = q`, then `r = G_zeta s`.
pub fn solve_cgo(q: &ScalarField, zeta: &ComplexFrequency, opts: CgoOptions) -> Result<CgoSolution> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("tolerance and iteration limit must be positive".into()));
    }
    let grid = *q.grid();
    zeta.check_overflow(grid.half_width())?;
    let lattice = zeta.on_lattice(grid.spacing())?;
    let green = FaddeevGreen::new(grid, &lattice)?;
    solve_cgo_with(q, zeta, &green, opts)
}

/// [`solve_cgo`] with a prepared Green operator.
pub fn solve_cgo_with(
    q: &ScalarField,
    zeta: &ComplexFrequency,
    green: &FaddeevGreen,
    opts: CgoOptions,
) -> Result<CgoSolution> {
    let lattice = *green.zeta();
    let qn = q.l2_norm();
    if qn == 0.0 {
        return Ok(CgoSolution {
            zeta: *zeta,
            lattice,
            r: ScalarField::zeros(*q.grid()),
            iterations: 1,
            contraction_estimate: 0.0,
            ratios: Vec::new(),
            residual: 0.0,
        });
    }
    let mut s = q.clone();
    let mut gs = green.apply(&s)?;
    let mut last_update: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut stalled = 0;
    for it in 1..=opts.max_iter {
        let next = q.zip_map(&gs, |qv, g| qv + qv * g)?;
        let update = next.sub(&s)?.l2_norm();
        s = next;
        gs = green.apply(&s)?;
        if let Some(prev) = last_update {
            let ratio = if prev > 0.0 { update / prev } else { 0.0 };
            ratios.push(ratio);
            if ratio >= 1.0 {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    return Err(Error::NoContraction { k: zeta.k(), ratio });
                }
            } else {
                stalled = 0;
            }
        }
        last_update = Some(update);
        if update <= opts.tol * qn {
            let residual = cgo_residual(q, &gs, &lattice)?;
            if residual > opts.tol {
                return Err(Error::SolverResidual { residual, tolerance: opts.tol });
            }
            return Ok(CgoSolution {
                zeta: *zeta,
                lattice,
                r: gs,
                iterations: it,
                contraction_estimate: ratios.last().copied().unwrap_or(0.0),
                ratios,
                residual,
            });
        }
    }
    Err(Error::MaxIterExceeded {
        max_iter: opts.max_iter,
        tolerance: opts.tol,
        last: last_update.unwrap_or(f64::NAN) / qn,
    })
}

/// [`solve_cgo`], doubling `k` after each `NoContraction` while `k L` stays
/// within the overflow guard.
pub fn solve_cgo_with_retry(q: &ScalarField, zeta: &ComplexFrequency, opts: CgoOptions) -> Result<CgoSolution> {
    let l = q.grid().half_width();
    let mut z = *zeta;
    loop {
        match solve_cgo(q, &z, opts) {
            Err(Error::NoContraction { k, ratio }) => {
                if 2.0 * k * l > OVERFLOW_GUARD {
                    return Err(Error::NoContraction { k, ratio });
                }
                z = z.scaled(2.0)?;
            }
            other => return other,
        }
    }
}

/// Partial sum `sum_{j < terms} (q G)^j q` of the Neumann series.
pub fn neumann_series(q: &ScalarField, green: &FaddeevGreen, terms: usize) -> Result<ScalarField> {
    let mut term = q.clone();
    let mut sum = ScalarField::zeros(*q.grid());
    for j in 0..terms {
        sum = sum.add(&term)?;
        if j + 1 < terms {
            term = q.zip_map(&green.apply(&term)?, |qv, g| qv * g)?;
        }
    }
    Ok(sum)
}

/// `e^{x.zeta} (1 + r)` on the full grid.
pub fn cgo_field(sol: &CgoSolution) -> ScalarField {
    let grid = *sol.r.grid();
    let mut out = sol.r.clone();
    for (idx, v) in out.values_mut().iter_mut().enumerate() {
        *v = sol.lattice.exp_at(grid.position(idx)) * (Complex64::new(1.0, 0.0) + *v);
    }
    out
}

/// Boundary trace of `e^{x.zeta} (1 + r)`.
pub fn cgo_trace(sol: &CgoSolution, domain: &Domain) -> Result<BoundaryFunction> {
    if sol.r.grid() != domain.grid() {
        return Err(Error::DomainMismatch);
    }
    let grid = *domain.grid();
    let values = domain
        .boundary_nodes()
        .iter()
        .map(|&idx| sol.lattice.exp_at(grid.position(idx)) * (1.0 + sol.r.get(idx)))
        .collect();
    BoundaryFunction::new(domain, values)
}
