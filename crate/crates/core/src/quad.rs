//! Quadrature over physical grids.
//!
//! Interior grids use the collocation (midpoint-type) rule with uniform
//! weight h^d; for integrands that vanish on the boundary this coincides
//! with the trapezoid rule and is spectrally accurate for band-limited
//! products. Closed grids carry genuine trapezoid weights and are used for
//! gradient-type integrands that do not vanish on the boundary.

use crate::field::PhysicalField;

/// Integrate a pointwise function of the k component values.
/// The callback receives the component values at one point.
pub fn integrate(phys: &PhysicalField, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let npts = phys.points_total();
    let k = phys.grid.k;
    let h = phys.h();
    let hd = h.powi(phys.grid.d as i32);
    let mut u = vec![0.0; k];
    let mut acc = 0.0;
    if !phys.closed {
        for p in 0..npts {
            for (c, uc) in u.iter_mut().enumerate() {
                *uc = phys.values[c * npts + p];
            }
            acc += f(&u);
        }
        return acc * hd;
    }
    let pts = phys.pts;
    let d = phys.grid.d;
    for p in 0..npts {
        let mut w = 1.0;
        let mut rem = p;
        for _ in 0..d {
            let idx = rem % pts;
            rem /= pts;
            if idx == 0 || idx == pts - 1 {
                w *= 0.5;
            }
        }
        for (c, uc) in u.iter_mut().enumerate() {
            *uc = phys.values[c * npts + p];
        }
        acc += w * f(&u);
    }
    acc * hd
}

/// Integrate a function of the values of several same-shape physical fields.
/// The callback receives one slice per field, each of length k.
pub fn integrate_multi(fields: &[&PhysicalField], mut f: impl FnMut(&[&[f64]]) -> f64) -> f64 {
    let first = fields[0];
    let npts = first.points_total();
    let k = first.grid.k;
    debug_assert!(fields.iter().all(|p| p.pts == first.pts && p.closed == first.closed));
    let h = first.h();
    let hd = h.powi(first.grid.d as i32);
    let mut bufs: Vec<Vec<f64>> = fields.iter().map(|_| vec![0.0; k]).collect();
    let mut acc = 0.0;
    let pts = first.pts;
    let d = first.grid.d;
    for p in 0..npts {
        let mut w = 1.0;
        if first.closed {
            let mut rem = p;
            for _ in 0..d {
                let idx = rem % pts;
                rem /= pts;
                if idx == 0 || idx == pts - 1 {
                    w *= 0.5;
                }
            }
        }
        for (fi, field) in fields.iter().enumerate() {
            for c in 0..k {
                bufs[fi][c] = field.values[c * npts + p];
            }
        }
        let views: Vec<&[f64]> = bufs.iter().map(|b| b.as_slice()).collect();
        acc += w * f(&views);
    }
    acc * hd
}
