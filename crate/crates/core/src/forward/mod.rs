//! Dirichlet problems on the discrete domain and their Dirichlet-to-Neumann maps.
//!
//! Both equations are discretised through the energy form
//!
//! `a(u, v) = h * sum_edges c_e (u_i - u_j)(v_i - v_j) + h^3 * sum_nodes q_i u_i v_i`
//!
//! over the lattice edges of `Omega`. Interior rows of the form are the usual
//! seven-point flux stencil; boundary rows, divided by the boundary weight,
//! give the normal derivative. The Dirichlet-to-Neumann map is the Schur
//! complement of the form onto the boundary nodes.

mod dtn;

use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

pub use dtn::{alessandrini_pairing, DtnMap};

use crate::boundary::BoundaryFunction;
use crate::calculus::laplacian;
use crate::domain::{Domain, NodeRole};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::phantom::check_ellipticity;

/// How the conductivity on a lattice edge is formed from its two end values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceAverage {
    /// `sqrt(gamma_i gamma_j)`. With this choice the substitution
    /// `u = w / sqrt(gamma)` maps discrete conductivity solutions exactly onto
    /// discrete Schrodinger solutions with `q = Delta_h sqrt(gamma) / sqrt(gamma)`.
    #[default]
    Geometric,
    /// `(gamma_i + gamma_j) / 2`.
    Arithmetic,
}

/// Coefficient of the elliptic operator.
#[derive(Debug, Clone, Copy)]
pub enum Coefficient<'a> {
    /// `-div(gamma grad u) = 0`.
    Conductivity { gamma: &'a ScalarField, average: FaceAverage },
    /// `(-Delta + q) u = rhs`.
    Potential { q: &'a ScalarField },
}

impl<'a> Coefficient<'a> {
    pub fn conductivity(gamma: &'a ScalarField) -> Self {
        Coefficient::Conductivity { gamma, average: FaceAverage::default() }
    }

    pub fn potential(q: &'a ScalarField) -> Self {
        Coefficient::Potential { q }
    }

    fn field(&self) -> &'a ScalarField {
        match self {
            Coefficient::Conductivity { gamma, .. } => gamma,
            Coefficient::Potential { q } => q,
        }
    }
}

/// Lower bound `c` in `c <= gamma <= 1/c` enforced by the conductivity solver.
pub const DEFAULT_ELLIPTICITY: f64 = 0.1;

/// Relative residual accepted from the sparse solves.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Threshold on `sigma_min / ||A||` below which the interior block counts as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

/// Result of one Dirichlet solve.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    /// Solution on `Omega`, zero elsewhere.
    pub u: ScalarField,
    /// Normal derivative at the boundary nodes, from the same stencil the
    /// Dirichlet-to-Neumann map uses.
    pub neumann: BoundaryFunction,
    /// Relative residual of the interior equations.
    pub residual: f64,
}

/// Assembled and factorised operator on one domain.
pub struct DirichletOperator {
    domain: Arc<Domain>,
    diag: Vec<f64>,
    edges: [Vec<f64>; 3],
    lu: Lu<usize, f64>,
    sigma_min: f64,
    norm_estimate: f64,
}

impl std::fmt::Debug for DirichletOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletOperator")
            .field("domain", &self.domain.hash())
            .field("sigma_min", &self.sigma_min)
            .finish()
    }
}

fn real_values(field: &ScalarField, what: &str) -> Result<Vec<f64>> {
    let scale = field.max_abs().max(1.0);
    if field.max_imag() > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!("{what} must be real-valued")));
    }
    Ok(field.values().iter().map(|v| v.re).collect())
}

impl DirichletOperator {
    pub fn new(domain: Arc<Domain>, coefficient: Coefficient<'_>) -> Result<Self> {
        let grid = *domain.grid();
        if coefficient.field().grid() != &grid {
            return Err(Error::DomainMismatch);
        }
        let n = grid.n();
        let h = grid.spacing();
        let strides = [1, n, n * n];
        let mut diag = vec![0.0; grid.len()];
        let mut edges = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
        let inside = domain.inside_mask();

        let edge_value: Box<dyn Fn(usize, usize) -> f64> = match coefficient {
            Coefficient::Conductivity { gamma, average } => {
                check_ellipticity(gamma, DEFAULT_ELLIPTICITY)?;
                let g = real_values(gamma, "conductivity")?;
                match average {
                    FaceAverage::Geometric => Box::new(move |a, b| (g[a] * g[b]).sqrt()),
                    FaceAverage::Arithmetic => Box::new(move |a, b| 0.5 * (g[a] + g[b])),
                }
            }
            Coefficient::Potential { q } => {
                let qv = real_values(q, "potential")?;
                for (idx, &ins) in inside.iter().enumerate() {
                    if ins {
                        diag[idx] += qv[idx] * h * h;
                    }
                }
                Box::new(|_, _| 1.0)
            }
        };
        for idx in 0..grid.len() {
            if !inside[idx] {
                continue;
            }
            for (axis, &s) in strides.iter().enumerate() {
                let nb = idx + s;
                if nb < grid.len() && inside[nb] && grid.ijk(idx)[axis] + 1 < n {
                    let c = edge_value(idx, nb);
                    edges[axis][idx] = c;
                    diag[idx] += c;
                    diag[nb] += c;
                }
            }
        }

        let n_int = domain.n_interior();
        let mut triplets = Vec::with_capacity(7 * n_int);
        let mut norm_estimate: f64 = 0.0;
        for (row, &idx) in domain.interior_nodes().iter().enumerate() {
            triplets.push(Triplet::new(row, row, diag[idx]));
            let mut row_sum = diag[idx].abs();
            for (axis, &s) in strides.iter().enumerate() {
                for (nb, c) in [(idx + s, edges[axis][idx]), (idx - s, edges[axis][idx - s])] {
                    row_sum += c.abs();
                    if let NodeRole::Interior(col) = domain.role(nb) {
                        triplets.push(Triplet::new(row, col, -c));
                    }
                }
            }
            norm_estimate = norm_estimate.max(row_sum);
        }
        let a_ii = SparseColMat::<usize, f64>::try_new_from_triplets(n_int, n_int, &triplets)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let lu = a_ii.sp_lu().map_err(|_| Error::NearSingular {
            sigma_min: 0.0,
            threshold: SINGULAR_THRESHOLD * norm_estimate,
        })?;

        let mut op = Self { domain, diag, edges, lu, sigma_min: 0.0, norm_estimate };
        op.sigma_min = op.estimate_sigma_min();
        let threshold = SINGULAR_THRESHOLD * op.norm_estimate;
        if !(op.sigma_min > threshold) {
            return Err(Error::NearSingular { sigma_min: op.sigma_min, threshold });
        }
        Ok(op)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// Estimated smallest singular value of the interior block.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Inverse power iteration; the interior block is symmetric, so the
    /// dominant eigenvalue of its inverse gives `1 / sigma_min`.
    fn estimate_sigma_min(&self) -> f64 {
        let m = self.domain.n_interior();
        let mut v = Mat::<f64>::from_fn(m, 1, |i, _| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
        let mut lambda = 0.0;
        for _ in 0..200 {
            let norm = v.norm_l2();
            v = v * faer::Scale(1.0 / norm);
            let w = self.lu.solve(&v);
            let next = w.norm_l2();
            let converged = (next - lambda).abs() <= 1e-13 * next;
            lambda = next;
            v = w;
            if !next.is_finite() {
                return 0.0;
            }
            if converged {
                break;
            }
        }
        if lambda > 0.0 {
            1.0 / lambda
        } else {
            0.0
        }
    }

    /// `(A u)` at the `Omega` nodes for a grid-indexed vector `u` (zero outside).
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let grid = self.domain.grid();
        let n = grid.n();
        let strides = [1, n, n * n];
        let inside = self.domain.inside_mask();
        for idx in 0..grid.len() {
            if !inside[idx] {
                out[idx] = 0.0;
                continue;
            }
            let mut acc = self.diag[idx] * u[idx];
            for (axis, &s) in strides.iter().enumerate() {
                acc -= self.edges[axis][idx] * u[idx + s];
                acc -= self.edges[axis][idx - s] * u[idx - s];
            }
            out[idx] = acc;
        }
    }

    /// Solves one real problem with boundary data `f` and interior source `rhs`
    /// (already multiplied by `h^2`). Returns the grid vector and the relative residual.
    fn solve_real(&self, f: &[f64], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let grid = self.domain.grid();
        let mut u = vec![0.0; grid.len()];
        for (&idx, &v) in self.domain.boundary_nodes().iter().zip(f) {
            u[idx] = v;
        }
        let mut au = vec![0.0; grid.len()];
        self.apply(&u, &mut au);
        let interior = self.domain.interior_nodes();
        let b = Mat::<f64>::from_fn(interior.len(), 1, |r, _| rhs[interior[r]] - au[interior[r]]);
        let mut x = self.lu.solve(&b);
        let mut residual = f64::INFINITY;
        for _ in 0..3 {
            for (r, &idx) in interior.iter().enumerate() {
                u[idx] = x[(r, 0)];
            }
            self.apply(&u, &mut au);
            let mut res = Mat::<f64>::zeros(interior.len(), 1);
            let mut num = 0.0;
            let mut den = 0.0;
            for (r, &idx) in interior.iter().enumerate() {
                res[(r, 0)] = rhs[idx] - au[idx];
                num += res[(r, 0)] * res[(r, 0)];
                den += (self.diag[idx] * u[idx]).powi(2) + rhs[idx] * rhs[idx];
            }
            residual = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
            if residual <= SOLVE_TOLERANCE * 1e-3 {
                break;
            }
            let dx = self.lu.solve(&res);
            x += &dx;
        }
        if residual > SOLVE_TOLERANCE {
            return Err(Error::SolverResidual { residual, tolerance: SOLVE_TOLERANCE });
        }
        Ok((u, residual))
    }

    /// Solves with Dirichlet data `f` and optional interior source (Schrodinger only).
    pub fn solve(&self, f: &BoundaryFunction, rhs: Option<&ScalarField>) -> Result<DirichletSolution> {
        f.check_domain(&self.domain)?;
        let grid = *self.domain.grid();
        let h = grid.spacing();
        let zero = vec![0.0; grid.len()];
        let (src_re, src_im) = match rhs {
            Some(r) => {
                if r.grid() != &grid {
                    return Err(Error::DomainMismatch);
                }
                (
                    r.values().iter().map(|v| v.re * h * h).collect(),
                    r.values().iter().map(|v| v.im * h * h).collect(),
                )
            }
            None => (zero.clone(), zero.clone()),
        };
        let fre: Vec<f64> = f.values().iter().map(|v| v.re).collect();
        let fim: Vec<f64> = f.values().iter().map(|v| v.im).collect();
        let (ure, rre) = self.solve_real(&fre, &src_re)?;
        let (uim, rim) = if fim.iter().any(|&v| v != 0.0) || src_im.iter().any(|&v| v != 0.0) {
            self.solve_real(&fim, &src_im)?
        } else {
            (zero.clone(), 0.0)
        };

        let mut a_re = vec![0.0; grid.len()];
        let mut a_im = vec![0.0; grid.len()];
        self.apply(&ure, &mut a_re);
        self.apply(&uim, &mut a_im);
        let weights = self.domain.boundary_weights();
        let neumann: Vec<Complex64> = self
            .domain
            .boundary_nodes()
            .iter()
            .zip(weights)
            .map(|(&idx, &w)| {
                Complex64::new(a_re[idx] - src_re[idx], a_im[idx] - src_im[idx]) * (h / w)
            })
            .collect();
        let u = ScalarField::from_values(
            grid,
            ure.iter().zip(&uim).map(|(&a, &b)| Complex64::new(a, b)).collect(),
        )?;
        Ok(DirichletSolution {
            u,
            neumann: BoundaryFunction::new(&self.domain, neumann)?,
            residual: rre.max(rim),
        })
    }

    /// Dirichlet-to-Neumann map of this operator.
    pub fn dtn(&self, label: impl Into<String>) -> Result<DtnMap> {
        let d = &self.domain;
        let grid = d.grid();
        let h = grid.spacing();
        let n = grid.n();
        let strides = [1, n, n * n];
        let nb = d.n_boundary();
        let interior = d.interior_nodes();
        let mut s = Mat::<f64>::zeros(nb, nb);

        // Couplings between each boundary node and its lattice neighbours.
        let neighbours = |idx: usize| {
            let mut out = Vec::with_capacity(6);
            for (axis, &st) in strides.iter().enumerate() {
                out.push((idx + st, self.edges[axis][idx]));
                out.push((idx - st, self.edges[axis][idx - st]));
            }
            out
        };

        for (b, &idx) in d.boundary_nodes().iter().enumerate() {
            s[(b, b)] += self.diag[idx];
            for (nbr, c) in neighbours(idx) {
                if let NodeRole::Boundary(b2) = d.role(nbr) {
                    s[(b2, b)] -= c;
                }
            }
        }

        const CHUNK: usize = 256;
        let mut start = 0;
        while start < nb {
            let end = (start + CHUNK).min(nb);
            let mut rhs = Mat::<f64>::zeros(interior.len(), end - start);
            for b in start..end {
                let idx = d.boundary_nodes()[b];
                for (nbr, c) in neighbours(idx) {
                    if let NodeRole::Interior(r) = d.role(nbr) {
                        rhs[(r, b - start)] += c;
                    }
                }
            }
            let mut x = self.lu.solve(&rhs);
            // One refinement sweep and a residual check.
            let res = self.interior_residual(&x, &rhs);
            let dx = self.lu.solve(&res);
            x += &dx;
            let res = self.interior_residual(&x, &rhs);
            let residual = res.norm_l2() / rhs.norm_l2().max(f64::MIN_POSITIVE);
            if residual > SOLVE_TOLERANCE {
                return Err(Error::SolverResidual { residual, tolerance: SOLVE_TOLERANCE });
            }
            for (b2, &idx) in d.boundary_nodes().iter().enumerate() {
                for (nbr, c) in neighbours(idx) {
                    if let NodeRole::Interior(r) = d.role(nbr) {
                        for col in 0..end - start {
                            s[(b2, start + col)] -= c * x[(r, col)];
                        }
                    }
                }
            }
            start = end;
        }
        s *= faer::Scale(h);
        DtnMap::from_energy_matrix(self.domain.clone(), s, label.into())
    }

    /// `rhs - A_II x` for a block of interior vectors.
    fn interior_residual(&self, x: &Mat<f64>, rhs: &Mat<f64>) -> Mat<f64> {
        let d = &self.domain;
        let n = d.grid().n();
        let strides = [1, n, n * n];
        let interior = d.interior_nodes();
        let mut res = rhs.clone();
        for (r, &idx) in interior.iter().enumerate() {
            let mut nbrs = [(usize::MAX, 0.0); 6];
            for (axis, &st) in strides.iter().enumerate() {
                for (t, (nbr, c)) in [(idx + st, self.edges[axis][idx]), (idx - st, self.edges[axis][idx - st])]
                    .into_iter()
                    .enumerate()
                {
                    if let NodeRole::Interior(col) = d.role(nbr) {
                        nbrs[2 * axis + t] = (col, c);
                    }
                }
            }
            for col in 0..x.ncols() {
                let mut acc = self.diag[idx] * x[(r, col)];
                for &(c_idx, c) in &nbrs {
                    if c_idx != usize::MAX {
                        acc -= c * x[(c_idx, col)];
                    }
                }
                res[(r, col)] -= acc;
            }
        }
        res
    }
}

/// `-div(gamma grad u) = 0` in `Omega`, `u = f` on the boundary.
pub fn solve_conductivity_dirichlet(
    domain: &Arc<Domain>,
    gamma: &ScalarField,
    f: &BoundaryFunction,
) -> Result<DirichletSolution> {
    DirichletOperator::new(domain.clone(), Coefficient::conductivity(gamma))?.solve(f, None)
}

/// `(-Delta + q) u = rhs` in `Omega`, `u = f` on the boundary.
pub fn solve_schrodinger_dirichlet(
    domain: &Arc<Domain>,
    q: &ScalarField,
    f: &BoundaryFunction,
    rhs: Option<&ScalarField>,
) -> Result<DirichletSolution> {
    DirichletOperator::new(domain.clone(), Coefficient::potential(q))?.solve(f, rhs)
}

/// Dirichlet-to-Neumann map for a conductivity or a potential.
pub fn assemble_dtn(domain: &Arc<Domain>, coefficient: Coefficient<'_>, label: impl Into<String>) -> Result<DtnMap> {
    DirichletOperator::new(domain.clone(), coefficient)?.dtn(label)
}

/// `q = Delta_h sqrt(gamma) / sqrt(gamma)`, which vanishes wherever `gamma`
/// is locally constant.
pub fn conductivity_to_potential(domain: &Domain, gamma: &ScalarField) -> Result<ScalarField> {
    if gamma.grid() != domain.grid() {
        return Err(Error::DomainMismatch);
    }
    check_ellipticity(gamma, DEFAULT_ELLIPTICITY)?;
    domain.check_collar(gamma, 1.0, 1e-12)?;
    let s = gamma.map(|g| Complex64::new(g.re.sqrt(), 0.0));
    let lap = laplacian(&s);
    lap.zip_map(&s, |l, s| l / s)
}

#[cfg(test)]
mod tests;
