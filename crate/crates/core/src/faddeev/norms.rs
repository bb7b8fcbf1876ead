use crate::calculus::partial;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Sign of the exponent in the weight `(1 + |x|^2)^{+-delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormReport {
    pub delta: f64,
    pub sign: WeightSign,
    pub k: f64,
    pub l2_delta: f64,
    /// `sum_{|alpha| <= 1} ||d^alpha u||`, present for order >= 1.
    pub h1_delta: Option<f64>,
    /// `k ||u|| + sum_j ||d_j u||`, present for order >= 1.
    pub h1k_delta: Option<f64>,
    /// `sum_{|alpha| <= 2} ||d^alpha u||`, present for order 2.
    pub h2_delta: Option<f64>,
}

/// Weighted Sobolev norms with weight `(1 + |x|^2)^{+-delta}` over the box.
pub fn weighted_norm(u: &ScalarField, delta: f64, sign: WeightSign, k: f64, order: u8) -> Result<WeightedNormReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1/2)")));
    }
    if order > 2 {
        return Err(Error::InvalidParameter("order must be 0, 1 or 2".into()));
    }
    let grid = *u.grid();
    let s = match sign {
        WeightSign::Positive => delta,
        WeightSign::Negative => -delta,
    };
    let weight: Vec<f64> = grid
        .positions()
        .map(|x| (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(s))
        .collect();
    let h3 = grid.cell_volume();
    let norm = |f: &ScalarField| -> f64 {
        (f.values().iter().zip(&weight).map(|(v, w)| v.norm_sqr() * w).sum::<f64>() * h3).sqrt()
    };
    let l2 = norm(u);
    let mut report = WeightedNormReport {
        delta,
        sign,
        k,
        l2_delta: l2,
        h1_delta: None,
        h1k_delta: None,
        h2_delta: None,
    };
    if order >= 1 {
        let d1: Vec<ScalarField> = (0..3).map(|a| partial(u, a)).collect();
        let g: f64 = d1.iter().map(&norm).sum();
        report.h1_delta = Some(l2 + g);
        report.h1k_delta = Some(k * l2 + g);
        if order == 2 {
            let mut second = 0.0;
            for a in 0..3 {
                for b in a..3 {
                    second += norm(&partial(&d1[a], b));
                }
            }
            report.h2_delta = Some(l2 + g + second);
        }
    }
    Ok(report)
}
