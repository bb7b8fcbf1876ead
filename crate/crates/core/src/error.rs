use thiserror::Error;

/// Everything that can go wrong inside the numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields or maps live on different grids or domains")]
    DomainMismatch,

    #[error("conductivity violates ellipticity: min {min:.3e} < c = {bound:.3e} or max {max:.3e} > 1/c")]
    EllipticityViolation { min: f64, max: f64, bound: f64 },

    #[error("coefficient is not identically background on the boundary collar (max deviation {deviation:.3e})")]
    CollarViolation { deviation: f64 },

    #[error("input is not supported away from the box faces (max |f| on the outer shell {shell_max:.3e})")]
    SupportViolation { shell_max: f64 },

    #[error("interior operator is numerically singular (smallest singular value estimate {sigma_min:.3e}, threshold {threshold:.3e})")]
    NearSingular { sigma_min: f64, threshold: f64 },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SolverResidual { residual: f64, tolerance: f64 },

    #[error("|Re zeta| * L = {kl:.2} exceeds the overflow guard {limit:.1}")]
    Overflow { kl: f64, limit: f64 },

    #[error("Neumann iteration does not contract at k = {k:.3} (update ratio {ratio:.3})")]
    NoContraction { k: f64, ratio: f64 },

    #[error("iteration did not reach tolerance {tolerance:.1e} within {max_iter} steps (last update {last:.3e})")]
    MaxIterExceeded { max_iter: usize, tolerance: f64, last: f64 },

    #[error("k = {k:.3} too small for |xi| = {xi_norm:.3}: need k >= |xi|/sqrt(2) and k >= {k_min:.3}")]
    KTooSmall { k: f64, xi_norm: f64, k_min: f64 },

    #[error("xi = 0 has no frequency pair; it is filled from neighbouring samples")]
    ZeroXi,

    #[error("could not place zeta on the lattice characteristic variety (residual {residual:.3e})")]
    LatticeAdaptation { residual: f64 },

    #[error("boundary integral system is ill-conditioned (condition estimate {cond:.3e} > {limit:.1e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
