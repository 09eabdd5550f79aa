//! Nonlinearities applied to spectral fields: dealiased pointwise
//! evaluation, quadratic forms, and the integration-by-parts pair.

use super::NonlinearSpec;
use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField, DEALIAS_FACTOR};
use crate::quad::{integrate, integrate_multi};

/// Apply the nonlinearity pointwise to physical values (any grid flavor).
pub fn apply_pointwise(spec: &NonlinearSpec, phys: &PhysicalField) -> PhysicalField {
    let k = spec.k;
    let npts = phys.points_total();
    let mut out = phys.clone();
    let mut u = vec![0.0; k];
    let mut f = vec![0.0; k];
    for p in 0..npts {
        for c in 0..k {
            u[c] = phys.values[c * npts + p];
        }
        spec.eval(&u, &mut f);
        for c in 0..k {
            out.values[c * npts + p] = f[c];
        }
    }
    out
}

/// Dealiased modal projection of f(u): evaluate pointwise on the fine grid,
/// transform back, truncate.
pub fn eval_on_field(spec: &NonlinearSpec, u: &SpectralField) -> Result<SpectralField> {
    eval_on_field_with_factor(spec, u, DEALIAS_FACTOR)
}

/// Same with an explicit refinement factor (oracle use).
pub fn eval_on_field_with_factor(
    spec: &NonlinearSpec,
    u: &SpectralField,
    factor: usize,
) -> Result<SpectralField> {
    if spec.k != u.grid.k {
        return Err(Error::Dimension(format!(
            "nonlinearity has {} components, field has {}",
            spec.k, u.grid.k
        )));
    }
    let phys = u.to_physical_fine(factor);
    let fvals = apply_pointwise(spec, &phys);
    SpectralField::from_physical_fine(u.grid, &fvals)
}

/// Quadratic form (f'(u) v, v) by dealiased quadrature. The integrand
/// vanishes on the boundary (v does), so the interior rule is exact for
/// band-limited data.
pub fn jac_quadratic_form(spec: &NonlinearSpec, u: &SpectralField, v: &SpectralField) -> Result<f64> {
    if !u.grid.same_layout(&v.grid) {
        return Err(Error::Dimension("fields live on different grids".into()));
    }
    if spec.k != u.grid.k {
        return Err(Error::Dimension("component count mismatch".into()));
    }
    let k = spec.k;
    let up = u.to_physical_fine(DEALIAS_FACTOR);
    let vp = v.to_physical_fine(DEALIAS_FACTOR);
    let mut jac = vec![0.0; k * k];
    Ok(integrate_multi(&[&up, &vp], |vals| {
        let (uu, vv) = (vals[0], vals[1]);
        spec.jacobian(uu, &mut jac);
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..k {
                acc += jac[i * k + j] * vv[j] * vv[i];
            }
        }
        acc
    }))
}

/// (f'(u) grad u, grad u), signed and absolute, on the closed fine grid.
/// The gradient does not vanish on the boundary, so trapezoid weights with
/// genuine boundary values are required.
pub fn grad_quadratic_form(spec: &NonlinearSpec, u: &SpectralField) -> Result<(f64, f64)> {
    if spec.k != u.grid.k {
        return Err(Error::Dimension("component count mismatch".into()));
    }
    let k = spec.k;
    let d = u.grid.d;
    let uvals = u.values_closed(DEALIAS_FACTOR);
    let grads: Vec<PhysicalField> = (0..d).map(|axis| u.gradient_axis_closed(axis, DEALIAS_FACTOR)).collect();
    let mut fields: Vec<&PhysicalField> = vec![&uvals];
    fields.extend(grads.iter());
    let mut jac = vec![0.0; k * k];
    let mut point_form = |vals: &[&[f64]], absolute: bool| {
        spec.jacobian(vals[0], &mut jac);
        let mut acc = 0.0;
        for g in &vals[1..] {
            let mut q = 0.0;
            for i in 0..k {
                for j in 0..k {
                    q += jac[i * k + j] * g[j] * g[i];
                }
            }
            acc += if absolute { q.abs() } else { q };
        }
        acc
    };
    let signed = integrate_multi(&fields, |vals| point_form(vals, false));
    let abs = integrate_multi(&fields, |vals| point_form(vals, true));
    Ok((signed, abs))
}

/// The two sides of the integration-by-parts identity:
/// returns ((f(u), Lap u), (f'(u) grad u, grad u)).
pub fn ibp_pair(spec: &NonlinearSpec, u: &SpectralField) -> Result<(f64, f64)> {
    if spec.k != u.grid.k {
        return Err(Error::Dimension("component count mismatch".into()));
    }
    let k = spec.k;
    let upts = u.to_physical_fine(DEALIAS_FACTOR);
    let lap = u.laplacian().to_physical_fine(DEALIAS_FACTOR);
    let mut f = vec![0.0; k];
    let f_dot_lap = integrate_multi(&[&upts, &lap], |vals| {
        spec.eval(vals[0], &mut f);
        f.iter().zip(vals[1]).map(|(a, b)| a * b).sum()
    });
    let (grad_form, _) = grad_quadratic_form(spec, u)?;
    Ok((f_dot_lap, grad_form))
}

/// Integral of |f(u).u| (the dissipation functional).
pub fn fu_dot_u_abs(spec: &NonlinearSpec, u: &SpectralField) -> Result<f64> {
    if spec.k != u.grid.k {
        return Err(Error::Dimension("component count mismatch".into()));
    }
    let k = spec.k;
    let phys = u.to_physical_fine(DEALIAS_FACTOR);
    let mut f = vec![0.0; k];
    Ok(integrate(&phys, |uu| {
        spec.eval(uu, &mut f);
        let fu: f64 = f.iter().zip(uu).map(|(a, b)| a * b).sum();
        fu.abs()
    }))
}

/// ||f(u)||_{L^2}^2 by dealiased quadrature.
pub fn f_l2_sq(spec: &NonlinearSpec, u: &SpectralField) -> Result<f64> {
    if spec.k != u.grid.k {
        return Err(Error::Dimension("component count mismatch".into()));
    }
    let k = spec.k;
    let phys = u.to_physical_fine(DEALIAS_FACTOR);
    let mut f = vec![0.0; k];
    Ok(integrate(&phys, |uu| {
        spec.eval(uu, &mut f);
        f.iter().map(|x| x * x).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::nonlin::builtins::cubic_scalar;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn random_field(grid: Grid, seed: u64, decay: f64) -> SpectralField {
        let mut rng = SplitMix64::new(seed);
        let nd = grid.modes();
        let mut f = SpectralField::zeros(grid);
        for c in 0..grid.k {
            for m in 0..nd {
                let lam = grid.eigenvalue(m) / grid.lambda_min();
                f.coeffs[c * nd + m] = rng.next_normal() * lam.powf(-decay / 2.0);
            }
        }
        f
    }

    #[test]
    fn linear_map_quadratic_form_is_exact() {
        let g = Grid::new(1, 1.0, 16, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let spec = NonlinearSpec::linear(a.clone()).unwrap();
        let v = random_field(g, 9, 1.0);
        let form = jac_quadratic_form(&spec, &SpectralField::zeros(g), &v).unwrap();
        // (A v, v) = sum over modes of coefficient-wise quadratic form
        let nd = g.modes();
        let mut expect = 0.0;
        for m in 0..nd {
            let vm = [v.coeffs[m], v.coeffs[nd + m]];
            for i in 0..2 {
                for j in 0..2 {
                    expect += a[(i, j)] * vm[j] * vm[i];
                }
            }
        }
        assert_relative_eq!(form, expect, max_relative = 1e-12);
    }

    #[test]
    fn const_interpolant_cubic_form_is_three_c_squared() {
        // u interpolating the constant c: (f'(u) v, v) = 3 c^2 ||v||^2 up to
        // the Gibbs layer of the odd extension, which the quadrature averages
        // out to ~1e-5 relative at this resolution.
        let g = Grid::new(1, 1.0, 32, 1).unwrap();
        let c = 0.8;
        let u = SpectralField::from_physical(g, &vec![c; 32]).unwrap();
        let v = SpectralField::single_mode(g, 0, &[2], 1.0).unwrap();
        let spec = cubic_scalar(0.0).unwrap();
        let form = jac_quadratic_form(&spec, &u, &v).unwrap();
        let expect = 3.0 * c * c * v.norm_l2().powi(2);
        assert!((form - expect).abs() <= 1e-3 * expect, "form {form} vs {expect}");
    }

    #[test]
    fn cubic_form_matches_fine_grid_oracle() {
        let g = Grid::new(1, 1.0, 24, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let u = SpectralField::single_mode(g, 0, &[2], 1.2).unwrap();
        let v = random_field(g, 4, 1.5);
        let coarse = jac_quadratic_form(&spec, &u, &v).unwrap();
        // 4x resolution oracle
        let up = u.to_physical_fine(4);
        let vp = v.to_physical_fine(4);
        let mut jac = [0.0];
        let fine = integrate_multi(&[&up, &vp], |vals| {
            spec.jacobian(vals[0], &mut jac);
            jac[0] * vals[1][0] * vals[1][0]
        });
        assert_relative_eq!(coarse, fine, max_relative = 1e-6);
    }

    #[test]
    fn projection_of_cubic_matches_oracle() {
        let g = Grid::new(1, 1.0, 20, 1).unwrap();
        let spec = cubic_scalar(0.0).unwrap();
        let u = random_field(g, 12, 2.0);
        let f2 = eval_on_field(&spec, &u).unwrap();
        let f4 = eval_on_field_with_factor(&spec, &u, 4).unwrap();
        // factor 2 is alias-free for cubics on the retained band
        assert!(f2.sub(&f4).norm_l2() <= 1e-12 * f4.norm_l2().max(1.0));
    }

    #[test]
    fn ibp_identity_residual_is_small_for_cubic() {
        let g = Grid::new(1, 1.0, 32, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let u = random_field(g, 21, 1.5);
        let (lhs, rhs) = ibp_pair(&spec, &u).unwrap();
        let h2 = u.spectral_multiplier(|l| l).norm_l2();
        let h1 = u.spectral_multiplier(|l| l.sqrt()).norm_l2();
        let resid = (lhs + rhs).abs();
        assert!(resid <= 1e-10 * h2 * h1, "residual {resid}, scale {}", h2 * h1);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g1 = Grid::new(1, 1.0, 8, 1).unwrap();
        let g2 = Grid::new(1, 1.0, 16, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let u = SpectralField::zeros(g1);
        let v = SpectralField::zeros(g2);
        assert!(jac_quadratic_form(&spec, &u, &v).is_err());
    }
}
