use super::green::{check_support, FaddeevGreen};
use super::newton::{k0_apply, single_layer_newtonian};
use crate::boundary::BoundaryFunction;
use crate::domain::Domain;
use crate::error::Result;
use crate::field::ScalarField;
use crate::frequency::{ComplexFrequency, LatticeFrequency};

fn exp_field(zeta: &LatticeFrequency, like: &ScalarField, sign: f64) -> ScalarField {
    let z = zeta.zeta();
    ScalarField::from_fn(*like.grid(), |x| (sign * (z[0] * x[0] + z[1] * x[1] + z[2] * x[2])).exp())
}

/// `K_zeta f = e^{x.zeta} G_zeta (e^{-x.zeta} f)`, evaluated with the lattice
/// version of `zeta`.
pub fn kzeta_apply(f: &ScalarField, zeta: &ComplexFrequency) -> Result<ScalarField> {
    let grid = *f.grid();
    zeta.check_overflow(grid.half_width())?;
    let lz = zeta.on_lattice(grid.spacing())?;
    let green = FaddeevGreen::new(grid, &lz)?;
    kzeta_apply_with(&green, f)
}

pub fn kzeta_apply_with(green: &FaddeevGreen, f: &ScalarField) -> Result<ScalarField> {
    check_support(f)?;
    let z = green.zeta();
    let inner = f.zip_map(&exp_field(z, f, -1.0), |a, b| a * b)?;
    let g = green.apply_unchecked(&inner)?;
    g.zip_map(&exp_field(z, f, 1.0), |a, b| a * b)
}

/// `R_zeta f = K_zeta f - K_0 f`, harmonic inside the support's complement and
/// smooth across it.
pub fn rzeta_apply(f: &ScalarField, zeta: &ComplexFrequency) -> Result<ScalarField> {
    kzeta_apply(f, zeta)?.sub(&k0_apply(f))
}

/// Kernel used by [`szeta_apply`].
#[derive(Debug, Clone, Copy)]
pub enum SingleLayerKernel<'a> {
    /// Free-space Newtonian kernel, summed directly.
    Newtonian,
    /// Faddeev kernel of a prepared lattice Green operator.
    Faddeev(&'a FaddeevGreen),
}

/// Single-layer potential of a boundary density on the whole grid.
///
/// The Faddeev layer is `K_zeta(gamma* phi)`, where `gamma* phi` places mass
/// `phi_b w_b` at boundary node `b`; the lattice kernel is finite at
/// coincident nodes, so no singular correction is involved.
pub fn szeta_apply(domain: &Domain, phi: &BoundaryFunction, kernel: SingleLayerKernel<'_>) -> Result<ScalarField> {
    match kernel {
        SingleLayerKernel::Newtonian => single_layer_newtonian(domain, phi),
        SingleLayerKernel::Faddeev(green) => {
            phi.check_domain(domain)?;
            let grid = *domain.grid();
            let h3 = grid.cell_volume();
            let mut src = ScalarField::zeros(grid);
            for (b, &idx) in domain.boundary_nodes().iter().enumerate() {
                src.values_mut()[idx] = phi.values()[b] * domain.boundary_weights()[b] / h3;
            }
            kzeta_apply_with(green, &src)
        }
    }
}
