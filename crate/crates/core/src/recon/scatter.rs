use num_complex::Complex64;

use super::bie::{bie_solve_lattice, BieSolution};
use super::pair::make_zeta_pair;
use crate::boundary::{boundary_pairing, BoundaryFunction};
use crate::domain::norm3;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forward::DtnMap;
use crate::frequency::{LatticeFrequency, OVERFLOW_GUARD};
use crate::grid::Grid;
use crate::parallel::parallel_map;

/// `k(|xi|) = scale * max(k_min, slope |xi|)`, capped by the overflow guard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSchedule {
    pub k_min: f64,
    pub slope: f64,
    pub scale: f64,
}

impl Default for KSchedule {
    fn default() -> Self {
        Self { k_min: 4.0, slope: 2.0, scale: 1.0 }
    }
}

impl KSchedule {
    pub fn k_for(&self, xi_norm: f64, half_width: f64) -> f64 {
        (self.scale * self.k_min.max(self.slope * xi_norm)).min(OVERFLOW_GUARD / half_width)
    }

    /// The same schedule with every `k` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { scale: self.scale * factor, ..*self }
    }
}

/// Spacing `2 pi / L` of the frequency lattice. Potentials are supported in
/// the ball of radius `L / 2`, so Fourier series of period `L` represent them
/// without overlap.
pub fn dual_spacing(grid: &Grid) -> f64 {
    2.0 * std::f64::consts::PI / grid.half_width()
}

/// Lattice points `m` with `|m| dual_spacing <= rho`, the origin first, then
/// by radius and lexicographically.
pub fn dual_lattice(grid: &Grid, rho: f64) -> Result<Vec<[i64; 3]>> {
    let d = dual_spacing(grid);
    if !(rho >= d * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "cutoff {rho} is below the first dual-lattice shell {d}"
        )));
    }
    let m = (rho / d + 1e-9).floor() as i64;
    let r2 = (rho / d) * (rho / d) * (1.0 + 1e-9);
    let mut pts = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                if ((a * a + b * b + c * c) as f64) <= r2 {
                    pts.push([a, b, c]);
                }
            }
        }
    }
    pts.sort_by_key(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2], *p));
    Ok(pts)
}

pub fn lattice_xi(grid: &Grid, m: [i64; 3]) -> [f64; 3] {
    let d = dual_spacing(grid);
    m.map(|v| v as f64 * d)
}

/// `sum_x q(x) e^{-i x.xi} h^3`.
pub fn direct_transform(q: &ScalarField, xi: [f64; 3]) -> Complex64 {
    let g = q.grid();
    let h3 = g.cell_volume();
    q.values()
        .iter()
        .zip(g.positions())
        .filter(|(v, _)| v.norm() != 0.0)
        .map(|(v, x)| v * Complex64::from_polar(1.0, -(x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2])))
        .sum::<Complex64>()
        * h3
}

/// `<(Lambda_q - Lambda_0) f1, e^{x.zeta2}>` in the weighted boundary pairing.
pub fn scattering_sample(lq: &DtnMap, l0: &DtnMap, zeta2: &LatticeFrequency, f1: &BoundaryFunction) -> Result<Complex64> {
    lq.check_compatible(l0)?;
    let domain = lq.domain();
    let a = lq.apply(f1)?;
    let b = l0.apply(f1)?;
    let diff = BoundaryFunction::new(domain, a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect())?;
    let e2 = BoundaryFunction::from_fn(domain, |x| zeta2.exp_at(x));
    boundary_pairing(domain, &diff, &e2)
}

/// One sample at `xi` with frequency scale `k`: builds the pair, solves the
/// boundary equation for `zeta1` and pairs with `e^{x.zeta2}`.
pub fn sample_at(lq: &DtnMap, l0: &DtnMap, xi: [f64; 3], k: f64) -> Result<(Complex64, BieSolution)> {
    let grid = *lq.domain().grid();
    let pair = make_zeta_pair(xi, k)?;
    pair.zeta1.check_overflow(grid.half_width())?;
    let (z1, z2) = pair.on_lattice(grid.spacing())?;
    let bie = bie_solve_lattice(lq, l0, &z1)?;
    let value = scattering_sample(lq, l0, &z2, &bie.f)?;
    Ok((value, bie))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSample {
    pub m: [i64; 3],
    pub xi: [f64; 3],
    pub k: f64,
    pub value: Complex64,
    pub bie_residual: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFailure {
    pub m: [i64; 3],
    pub xi: [f64; 3],
    pub k: f64,
    pub error: Error,
}

/// Scattering transform on the dual lattice inside `|xi| <= rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSamples {
    pub grid: Grid,
    pub rho: f64,
    /// Successful samples at nonzero `xi`, in lattice order.
    pub samples: Vec<ScatteringSample>,
    /// Value used at `xi = 0`: the mean over the innermost sampled shell.
    pub zero_value: Complex64,
    pub failures: Vec<SampleFailure>,
}

impl ScatteringSamples {
    pub fn value_at(&self, m: [i64; 3]) -> Option<Complex64> {
        if m == [0, 0, 0] {
            return Some(self.zero_value);
        }
        self.samples.iter().find(|s| s.m == m).map(|s| s.value)
    }

    /// All `(m, value)` pairs including the filled origin.
    pub fn entries(&self) -> Vec<([i64; 3], Complex64)> {
        let mut out = vec![([0, 0, 0], self.zero_value)];
        out.extend(self.samples.iter().map(|s| (s.m, s.value)));
        out
    }

    /// Builds samples from given values (e.g. an exact transform), with the
    /// origin filled by the same shell rule as the pipeline.
    pub fn from_values(grid: Grid, rho: f64, values: Vec<([i64; 3], Complex64)>) -> Self {
        let samples: Vec<ScatteringSample> = values
            .into_iter()
            .filter(|(m, _)| *m != [0, 0, 0])
            .map(|(m, value)| ScatteringSample {
                m,
                xi: lattice_xi(&grid, m),
                k: f64::NAN,
                value,
                bie_residual: 0.0,
                condition: 1.0,
            })
            .collect();
        let zero_value = shell_average(&samples);
        Self { grid, rho, samples, zero_value, failures: Vec::new() }
    }
}

fn shell_average(samples: &[ScatteringSample]) -> Complex64 {
    let r2 = |m: [i64; 3]| m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
    let Some(inner) = samples.iter().map(|s| r2(s.m)).min() else {
        return Complex64::default();
    };
    let shell: Vec<Complex64> = samples.iter().filter(|s| r2(s.m) == inner).map(|s| s.value).collect();
    shell.iter().sum::<Complex64>() / shell.len() as f64
}

/// Runs [`sample_at`] for every nonzero lattice point with `|xi| <= rho`.
/// Failures are collected per point instead of aborting the sweep.
pub fn scattering_grid(lq: &DtnMap, l0: &DtnMap, rho: f64, schedule: KSchedule) -> Result<ScatteringSamples> {
    lq.check_compatible(l0)?;
    let grid = *lq.domain().grid();
    let points: Vec<[i64; 3]> = dual_lattice(&grid, rho)?.into_iter().filter(|m| *m != [0, 0, 0]).collect();
    let results = parallel_map(&points, |&m| {
        let xi = lattice_xi(&grid, m);
        let k = schedule.k_for(norm3(xi), grid.half_width());
        (m, xi, k, sample_at(lq, l0, xi, k))
    });
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (m, xi, k, r) in results {
        match r {
            Ok((value, bie)) => samples.push(ScatteringSample {
                m,
                xi,
                k,
                value,
                bie_residual: bie.residual,
                condition: bie.condition,
            }),
            Err(error) => failures.push(SampleFailure { m, xi, k, error }),
        }
    }
    let zero_value = shell_average(&samples);
    Ok(ScatteringSamples { grid, rho, samples, zero_value, failures })
}
