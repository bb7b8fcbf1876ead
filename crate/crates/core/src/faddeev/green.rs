use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::ScalarField;
use crate::frequency::LatticeFrequency;
use crate::grid::Grid;

/// Fraction of the box width that must be free of sources for spectral solves.
pub const SHELL_FRACTION: f64 = 0.1;

/// Relative size of the symbol floor: `|sigma| >= SYMBOL_FLOOR * k^2`.
pub const SYMBOL_FLOOR: f64 = 1e-6;

/// Inverse of the conjugated seven-point Laplacian
/// `Delta_zeta = e^{-x.zeta} Delta_h e^{x.zeta}` on the grid.
///
/// The operator is diagonalised on the half-shifted frequency lattice
/// `xi_m + theta`, `theta = (pi / P)(1, 1, 1)`, i.e. with anti-periodic
/// boundary conditions over one period `P`. Its symbol is
/// `sigma(xi) = sum_j (2 cosh((zeta_j + i xi_j) h) - 2) / h^2`, which is
/// `2 pi / h`-periodic, so no Nyquist bookkeeping is needed. The shift keeps
/// the lattice off the origin, where `sigma` vanishes for a lattice-harmonic
/// `zeta`. Symbol values smaller than `SYMBOL_FLOOR * k^2` are replaced by that
/// modulus with their phase kept; `floored_modes` counts them.
#[derive(Debug, Clone)]
pub struct FaddeevGreen {
    grid: Grid,
    zeta: LatticeFrequency,
    inv_symbol: Vec<Complex64>,
    twist: Vec<Complex64>,
    floored: usize,
    plan: Arc<Fft3>,
}

impl FaddeevGreen {
    pub fn new(grid: Grid, zeta: &LatticeFrequency) -> Result<Self> {
        let h = grid.spacing();
        if (zeta.spacing() - h).abs() > 1e-12 * h {
            return Err(Error::InvalidParameter(
                "lattice frequency was adapted for a different spacing".into(),
            ));
        }
        let n = grid.n();
        let theta = std::f64::consts::PI / grid.period();
        let k = zeta.k().max(1.0);
        let floor = SYMBOL_FLOOR * k * k;
        let z = zeta.zeta();
        // Per-axis factors e^{(zeta_j + i xi_j) h}; cosh splits into a sum of them.
        let axis_terms: Vec<[Complex64; 3]> = (0..n)
            .map(|m| {
                let xi = grid.frequency(m) + theta;
                [0, 1, 2].map(|j| {
                    let a = (z[j] + Complex64::new(0.0, xi)) * h;
                    2.0 * a.cosh() - 2.0
                })
            })
            .collect();
        let mut floored = 0;
        let mut inv_symbol = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let [a, b, c] = grid.ijk(idx);
            let mut s = (axis_terms[a][0] + axis_terms[b][1] + axis_terms[c][2]) / (h * h);
            let mag = s.norm();
            if mag < floor {
                floored += 1;
                s = if mag > 0.0 { s * (floor / mag) } else { Complex64::new(floor, 0.0) };
            }
            inv_symbol.push(1.0 / s);
        }
        let twist = grid
            .positions()
            .map(|x| Complex64::from_polar(1.0, theta * (x[0] + x[1] + x[2])))
            .collect();
        Ok(Self {
            grid,
            zeta: *zeta,
            inv_symbol,
            twist,
            floored,
            plan: Fft3::for_size(n),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn zeta(&self) -> &LatticeFrequency {
        &self.zeta
    }

    /// Number of symbol values that were floored.
    pub fn floored_modes(&self) -> usize {
        self.floored
    }

    /// `G_zeta f`, refusing sources that reach the outer shell of the box.
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        check_support(f)?;
        self.apply_unchecked(f)
    }

    /// `G_zeta f` without the support check.
    pub fn apply_unchecked(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.grid() != &self.grid {
            return Err(Error::DomainMismatch);
        }
        let mut data: Vec<Complex64> = f
            .values()
            .iter()
            .zip(&self.twist)
            .map(|(v, t)| v * t.conj())
            .collect();
        self.plan.forward(&mut data);
        for (d, s) in data.iter_mut().zip(&self.inv_symbol) {
            *d *= s;
        }
        self.plan.inverse_normalized(&mut data);
        for (d, t) in data.iter_mut().zip(&self.twist) {
            *d *= t;
        }
        ScalarField::from_values(self.grid, data)
    }

    /// Convolution table `c(d)`, `d` in `[0, n)^3`: `(G v)_i = sum_j g(i - j) v_j`
    /// with `g(d) = e^{i theta . d h} c(d mod n)`.
    pub fn kernel_table(&self) -> KernelTable {
        let mut data = self.inv_symbol.clone();
        self.plan.inverse_normalized(&mut data);
        KernelTable {
            n: self.grid.n(),
            theta_h: std::f64::consts::PI / self.grid.n() as f64,
            table: data,
        }
    }
}

/// Translation-invariant kernel of a [`FaddeevGreen`] operator.
#[derive(Debug, Clone)]
pub struct KernelTable {
    n: usize,
    theta_h: f64,
    table: Vec<Complex64>,
}

impl KernelTable {
    /// `g(d)` for an index offset `d` in `(-n, n)^3`.
    #[inline]
    pub fn at(&self, d: [i64; 3]) -> Complex64 {
        let n = self.n as i64;
        let w = |v: i64| v.rem_euclid(n) as usize;
        let c = self.table[w(d[0]) + self.n * (w(d[1]) + self.n * w(d[2]))];
        c * Complex64::from_polar(1.0, self.theta_h * (d[0] + d[1] + d[2]) as f64)
    }
}

pub(crate) fn check_support(f: &ScalarField) -> Result<()> {
    let shell_max = f.max_abs_on_outer_shell(SHELL_FRACTION);
    if shell_max > 1e-10 * f.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::SupportViolation { shell_max });
    }
    Ok(())
}
