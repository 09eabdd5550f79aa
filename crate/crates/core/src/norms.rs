//! Every norm the estimates use: spectral Sobolev scales, Lebesgue
//! quasi-norms down to p < 1, and the nonlinear phase-space gauge
//! ||u||_D^2 = ||u||_{H^2}^2 + ||f(u)||_{L^2}^2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::nonlin::{f_l2_sq, NonlinearSpec};
use crate::quad::integrate;

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    /// Present when a nonlinearity was supplied.
    pub d_norm: Option<f64>,
}

impl SpectralField {
    /// Spectral H^s norm: (sum lambda_m^s |c_m|^2)^(1/2). hs(0) = l2 exactly;
    /// hs(1) = ||grad u||_{L^2}, hs(2) = ||Lap u||_{L^2}.
    pub fn hs(&self, s: f64) -> f64 {
        let nd = self.grid.modes();
        let mut acc = 0.0;
        if s == 0.0 {
            return self.norm_l2();
        }
        for comp in 0..self.grid.k {
            for m in 0..nd {
                let c = self.coeffs[comp * nd + m];
                acc += self.grid.eigenvalue(m).powf(s) * c * c;
            }
        }
        acc.sqrt()
    }

    /// Collocation quadrature value of (int |u|^p)^(1/p), valid for every
    /// p > 0 including p < 1 (where the expression is a quasi-norm, not a
    /// norm). Pointwise |u| is the Euclidean norm over components.
    pub fn lp(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Argument(format!("Lebesgue exponent must be positive, got {p}")));
        }
        let phys = self.to_physical();
        let int = integrate(&phys, |u| {
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            norm.powf(p)
        });
        Ok(int.powf(1.0 / p))
    }
}

/// Full norm report; d_norm is computed iff a nonlinearity is supplied.
pub fn norms(field: &SpectralField, f_spec: Option<&NonlinearSpec>) -> Result<NormReport> {
    let l2 = field.norm_l2();
    let h1 = field.hs(1.0);
    let h2 = field.hs(2.0);
    let d_norm = match f_spec {
        None => None,
        Some(spec) => Some((h2 * h2 + f_l2_sq(spec, field)?).sqrt()),
    };
    Ok(NormReport { l2, h1, h2, d_norm })
}
