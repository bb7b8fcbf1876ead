//! Faddeev Green's operator, Newtonian potentials, single layers and weighted norms.

mod green;
mod layer;
mod newton;
mod norms;

pub use green::{FaddeevGreen, KernelTable, SHELL_FRACTION, SYMBOL_FLOOR};
pub use layer::{kzeta_apply, kzeta_apply_with, rzeta_apply, szeta_apply, SingleLayerKernel};
pub use newton::{k0_apply, single_layer_newtonian};
pub use norms::{weighted_norm, WeightSign, WeightedNormReport};

use crate::error::Result;
use crate::field::ScalarField;
use crate::frequency::ComplexFrequency;

/// `G_zeta f` for a continuum frequency, adapted to the grid's lattice.
pub fn gzeta_apply(f: &ScalarField, zeta: &ComplexFrequency) -> Result<ScalarField> {
    let grid = *f.grid();
    zeta.check_overflow(grid.half_width())?;
    let lz = zeta.on_lattice(grid.spacing())?;
    FaddeevGreen::new(grid, &lz)?.apply(f)
}
