//! Monotone semilinear elliptic solves: a Lap v - f(v) - shift v = G.
//!
//! The shifted operator is strictly monotone when shift >= K and a has
//! positive symmetric part, which gives uniqueness and lets a damped Newton
//! iteration with the spectral preconditioner (-a Lap + shift)^{-1} converge
//! from any starting point.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField, DEALIAS_FACTOR};
use crate::grid::Grid;
use crate::nonlin::{approximate, eval_on_field, f_l2_sq, ApproxSpec, NonlinearSpec};
use crate::quad::integrate_multi;
use crate::solver::{newton_solve, ModalBlockSolver, NewtonOptions, SolveInfo};

/// Validated problem data.
pub struct EllipticProblem {
    pub grid: Grid,
    pub a: DMatrix<f64>,
    pub f: Option<NonlinearSpec>,
    pub shift: f64,
    pub rhs: SpectralField,
}

/// Smallest eigenvalue of the symmetric part of a.
pub fn symmetric_part_min_eig(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()).scale(0.5);
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

impl EllipticProblem {
    pub fn new(a: DMatrix<f64>, f: Option<NonlinearSpec>, shift: f64, rhs: SpectralField) -> Result<Self> {
        let grid = rhs.grid;
        if a.nrows() != grid.k || a.ncols() != grid.k {
            return Err(Error::config("a", format!("diffusion matrix must be {0}x{0}", grid.k)));
        }
        if symmetric_part_min_eig(&a) <= 0.0 {
            return Err(Error::config("a", "a + a^T must be positive definite"));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::config("shift", format!("shift must be >= 0, got {shift}")));
        }
        if let Some(spec) = &f {
            if spec.k != grid.k {
                return Err(Error::Dimension("nonlinearity component count mismatch".into()));
            }
            // Strict monotonicity of the full operator: the spectral gap of
            // -a Lap plus the shift must exceed the monotonicity defect.
            let coercivity = symmetric_part_min_eig(&a) * grid.lambda_min() + shift;
            if coercivity <= spec.monotonicity_defect {
                return Err(Error::config(
                    "shift",
                    format!(
                        "operator not strictly monotone: a0 lambda_min + shift = {coercivity} <= K = {}",
                        spec.monotonicity_defect
                    ),
                ));
            }
        }
        Ok(EllipticProblem { grid, a, f, shift, rhs })
    }

    /// Modal application of a Lap v - shift v (no nonlinearity).
    fn linear_apply(&self, c: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (k, modes) = (g.k, g.modes());
        if k == 1 {
            let a00 = self.a[(0, 0)];
            for m in 0..modes {
                out[m] = -(g.eigenvalue(m) * a00 + self.shift) * c[m];
            }
            return;
        }
        for m in 0..modes {
            let lam = g.eigenvalue(m);
            for i in 0..k {
                let mut acc = 0.0;
                for j in 0..k {
                    acc += self.a[(i, j)] * c[j * modes + m];
                }
                out[i * modes + m] = -lam * acc - self.shift * c[i * modes + m];
            }
        }
    }

    /// Solve from the zero initial guess.
    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<(SpectralField, SolveInfo)> {
        self.solve_from(&SpectralField::zeros(self.grid), tol, max_iter)
    }

    /// Solve with an explicit starting point.
    pub fn solve_from(&self, guess: &SpectralField, tol: f64, max_iter: usize) -> Result<(SpectralField, SolveInfo)> {
        if !guess.grid.same_layout(&self.grid) {
            return Err(Error::Dimension("initial guess grid mismatch".into()));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
        }
        let grid = self.grid;
        let k = grid.k;
        let shift = self.shift;
        let a = self.a.clone();
        let precond = ModalBlockSolver::new(&grid, |lam| {
            let mut m = a.scale(lam);
            for i in 0..k {
                m[(i, i)] += shift;
            }
            m
        })?;

        let mut residual = |c: &[f64], out: &mut [f64]| {
            self.linear_apply(c, out);
            if let Some(spec) = &self.f {
                let v = SpectralField {
                    grid,
                    coeffs: c.to_vec(),
                };
                let fv = eval_on_field(spec, &v).expect("component counts validated");
                for (o, fc) in out.iter_mut().zip(&fv.coeffs) {
                    *o -= fc;
                }
            }
            for (o, gc) in out.iter_mut().zip(&self.rhs.coeffs) {
                *o -= gc;
            }
        };

        // Pointwise Jacobians of f at the current Newton state, cached per
        // iteration on the dealiased grid.
        let jac_cache: std::cell::RefCell<Vec<f64>> = std::cell::RefCell::new(Vec::new());
        let mut prepare = |c: &[f64]| {
            if let Some(spec) = &self.f {
                let v = SpectralField {
                    grid,
                    coeffs: c.to_vec(),
                };
                let phys = v.to_physical_fine(DEALIAS_FACTOR);
                let fine_pts = phys.points_total();
                let mut cache = jac_cache.borrow_mut();
                cache.resize(fine_pts * k * k, 0.0);
                let mut u = vec![0.0; k];
                let mut jac = vec![0.0; k * k];
                for p in 0..fine_pts {
                    for c_ in 0..k {
                        u[c_] = phys.values[c_ * fine_pts + p];
                    }
                    spec.jacobian(&u, &mut jac);
                    cache[p * k * k..(p + 1) * k * k].copy_from_slice(&jac);
                }
            }
        };

        // A w = -F'(v) w = lambda a w + shift w + P f'(v) w
        let mut jac_apply = |w: &[f64]| {
            let mut out = vec![0.0; w.len()];
            self.linear_apply(w, &mut out);
            for o in out.iter_mut() {
                *o = -*o;
            }
            if self.f.is_some() {
                let wf = SpectralField {
                    grid,
                    coeffs: w.to_vec(),
                };
                let mut phys = wf.to_physical_fine(DEALIAS_FACTOR);
                let npts = phys.points_total();
                let cache = jac_cache.borrow();
                let mut wv = vec![0.0; k];
                for p in 0..npts {
                    for c_ in 0..k {
                        wv[c_] = phys.values[c_ * npts + p];
                    }
                    for i in 0..k {
                        let mut acc = 0.0;
                        for j in 0..k {
                            acc += cache[p * k * k + i * k + j] * wv[j];
                        }
                        phys.values[i * npts + p] = acc;
                    }
                }
                let proj = SpectralField::from_physical_fine(grid, &phys).expect("layout fixed");
                for (o, pc) in out.iter_mut().zip(&proj.coeffs) {
                    *o += pc;
                }
            }
            out
        };

        let opts = NewtonOptions {
            tol,
            max_iter,
            ..NewtonOptions::default()
        };
        let (c, info) = newton_solve(
            guess.coeffs.clone(),
            &mut residual,
            &mut prepare,
            &mut jac_apply,
            &precond,
            &opts,
        )?;
        Ok((SpectralField { grid, coeffs: c }, info))
    }
}

/// Prepared initial data: the solution of a Lap v - f_n(v) - K v = G with
/// G = a Lap u0 - f(u0) - K u0, so that the approximate problem starts with
/// a time derivative controlled by the D-norm of u0.
pub fn prepare_initial_data(
    a: &DMatrix<f64>,
    u0: &SpectralField,
    f_spec: &NonlinearSpec,
    n: u32,
    p1: f64,
    tol: f64,
) -> Result<(SpectralField, ApproxSpec)> {
    let approx = approximate(f_spec, n, p1)?;
    let kshift = f_spec.monotonicity_defect;
    let fu0 = eval_on_field(f_spec, u0)?;
    let mut rhs = u0.laplacian();
    // a acting componentwise in mode space
    let modes = u0.grid.modes();
    let k = u0.grid.k;
    if k == 1 {
        let a00 = a[(0, 0)];
        for c in rhs.coeffs.iter_mut() {
            *c *= a00;
        }
    } else {
        let lap = rhs.clone();
        for m in 0..modes {
            for i in 0..k {
                let mut acc = 0.0;
                for j in 0..k {
                    acc += a[(i, j)] * lap.coeffs[j * modes + m];
                }
                rhs.coeffs[i * modes + m] = acc;
            }
        }
    }
    rhs.axpy(-1.0, &fu0);
    rhs.axpy(-kshift, u0);
    let problem = EllipticProblem::new(a.clone(), Some(approx.to_spec()), kshift, rhs)?;
    let (v, _info) = problem.solve_from(u0, tol, 100)?;
    Ok((v, approx))
}

/// Everything Theorem A-style elliptic regularity measures on one solve.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RegularityReport {
    pub h2: f64,
    pub fl2: f64,
    /// (||u||_{H^2} + ||f(u)||_{L^2}) / ||g||_{L^2}
    pub ratio_2reg: f64,
    pub q: f64,
    pub kappa: f64,
    /// r = d(q-2)/(d-q); absent when the formula degenerates (d <= 2 or q >= d).
    pub r: Option<f64>,
    /// || |D^2 u| |grad u|^(r/2) ||_{L^2}
    pub mixed: Option<f64>,
    /// ||grad u||_{L^{d(r+2)/(d-2)}}, reported for d = 3 only.
    pub grad_lr: Option<f64>,
    /// q < d - d(d-2)/(kappa+d); None when r is undefined.
    pub admissible: Option<bool>,
}

/// Measure the elliptic regularity functionals for a solution u of
/// a Lap u - f(u) = g.
pub fn regularity_report(
    u: &SpectralField,
    g: &SpectralField,
    f_spec: Option<&NonlinearSpec>,
    q: f64,
    kappa: f64,
) -> Result<RegularityReport> {
    if !u.grid.same_layout(&g.grid) {
        return Err(Error::Dimension("solution and right-hand side grids differ".into()));
    }
    if !(q.is_finite() && q > 2.0) {
        return Err(Error::Argument(format!("q must exceed 2, got {q}")));
    }
    let d = u.grid.d;
    let h2 = u.hs(2.0);
    let fl2 = match f_spec {
        Some(spec) => f_l2_sq(spec, u)?.sqrt(),
        None => 0.0,
    };
    let gnorm = g.norm_l2();
    let ratio_2reg = (h2 + fl2) / gnorm.max(1e-300);

    let df = d as f64;
    let r = if d > 2 && q < df {
        Some(df * (q - 2.0) / (df - q))
    } else {
        None
    };
    let admissible = r.map(|_| q < df - df * (df - 2.0) / (kappa + df));

    let (mixed, grad_lr) = if let Some(rv) = r {
        let k = u.grid.k;
        let grads: Vec<PhysicalField> = (0..d).map(|ax| u.gradient_axis_closed(ax, DEALIAS_FACTOR)).collect();
        let mut hessians = Vec::new();
        for i in 0..d {
            for j in i..d {
                hessians.push((i, j, u.hessian_closed(i, j, DEALIAS_FACTOR)));
            }
        }
        let mut fields: Vec<&PhysicalField> = grads.iter().collect();
        for (_, _, h) in &hessians {
            fields.push(h);
        }
        let mixed_sq = integrate_multi(&fields, |vals| {
            let mut grad_sq = 0.0;
            for gv in &vals[..d] {
                for c in 0..k {
                    grad_sq += gv[c] * gv[c];
                }
            }
            let mut hess_sq = 0.0;
            for (idx, (i, j, _)) in hessians.iter().enumerate() {
                let hv = vals[d + idx];
                let mult = if i == j { 1.0 } else { 2.0 };
                for c in 0..k {
                    hess_sq += mult * hv[c] * hv[c];
                }
            }
            hess_sq * grad_sq.powf(rv / 2.0)
        });
        let grad_lr = if d == 3 {
            let exponent = df * (rv + 2.0) / (df - 2.0);
            let grad_fields: Vec<&PhysicalField> = grads.iter().collect();
            let int = integrate_multi(&grad_fields, |vals| {
                let mut grad_sq = 0.0;
                for gv in vals {
                    for c in 0..k {
                        grad_sq += gv[c] * gv[c];
                    }
                }
                grad_sq.sqrt().powf(exponent)
            });
            Some(int.powf(1.0 / exponent))
        } else {
            None
        };
        (Some(mixed_sq.max(0.0).sqrt()), grad_lr)
    } else {
        (None, None)
    };

    Ok(RegularityReport {
        h2,
        fl2,
        ratio_2reg,
        q,
        kappa,
        r,
        mixed,
        grad_lr,
        admissible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlin::builtins::cubic_scalar;
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    fn identity(k: usize) -> DMatrix<f64> {
        DMatrix::identity(k, k)
    }

    #[test]
    fn linear_single_mode_is_exact() {
        let g = Grid::new(1, 1.0, 16, 1).unwrap();
        let mode = SpectralField::single_mode(g, 0, &[1], 1.0).unwrap();
        let lam1 = g.eigenvalue(0);
        let rhs = mode.scaled(-lam1);
        let problem = EllipticProblem::new(identity(1), None, 0.0, rhs).unwrap();
        let (v, info) = problem.solve(1e-12, 20).unwrap();
        assert!(v.sub(&mode).norm_l2() <= 1e-11);
        assert!(info.final_residual <= 1e-12);
    }

    #[test]
    fn manufactured_cubic_solution_is_recovered() {
        let g = Grid::new(1, 1.0, 32, 1).unwrap();
        let spec = cubic_scalar(0.0).unwrap(); // f(u) = u^3, K = 0
        let c = 1.5;
        let target = SpectralField::single_mode(g, 0, &[1], c).unwrap();
        // G = a Lap u - f(u) - shift u with the same discrete operators
        let f_target = eval_on_field(&spec, &target).unwrap();
        let mut rhs = target.laplacian();
        rhs.axpy(-1.0, &f_target);
        rhs.axpy(-1.0, &target); // shift = 1
        let problem = EllipticProblem::new(identity(1), Some(spec), 1.0, rhs).unwrap();
        let (v, info) = problem.solve(1e-10, 50).unwrap();
        assert!(info.final_residual <= 1e-10);
        assert!(v.sub(&target).norm_l2() <= 1e-8, "error {}", v.sub(&target).norm_l2());
    }

    #[test]
    fn distinct_guesses_converge_to_the_same_solution() {
        let g = Grid::new(1, 1.0, 24, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let mut rng = SplitMix64::new(8);
        let coeffs: Vec<f64> = (0..g.coeff_len()).map(|_| rng.next_normal() * 0.5).collect();
        let rhs = SpectralField::from_coeffs(g, coeffs).unwrap();
        let problem = EllipticProblem::new(identity(1), Some(spec), 1.0, rhs).unwrap();
        let tol = 1e-11;
        let (v1, _) = problem.solve(tol, 60).unwrap();
        let mut g2 = SpectralField::single_mode(g, 0, &[2], 3.0).unwrap();
        g2.axpy(2.0, &SpectralField::single_mode(g, 0, &[1], 1.0).unwrap());
        let (v2, _) = problem.solve_from(&g2, tol, 60).unwrap();
        assert!(v1.sub(&v2).norm_l2() <= 10.0 * tol, "gap {}", v1.sub(&v2).norm_l2());
    }

    #[test]
    fn residual_history_descends_monotonically() {
        let g = Grid::new(1, 1.0, 24, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let rhs = SpectralField::single_mode(g, 0, &[1], 4.0).unwrap();
        let problem = EllipticProblem::new(identity(1), Some(spec), 1.0, rhs).unwrap();
        let (_, info) = problem.solve(1e-10, 60).unwrap();
        for w in info.residual_history.windows(2) {
            assert!(w[1] < w[0], "history {:?}", info.residual_history);
        }
    }

    #[test]
    fn comparison_principle_for_monotone_scalar_problem() {
        // g1 <= g2 = 0 pointwise implies solve(g1) >= solve(g2) = 0.
        let g = Grid::new(1, 1.0, 32, 1).unwrap();
        let spec = cubic_scalar(0.0).unwrap();
        let tol = 1e-11;
        let g1 = SpectralField::single_mode(g, 0, &[1], -5.0).unwrap(); // -5 sqrt2 sin(pi x) <= 0
        let p1 = EllipticProblem::new(identity(1), Some(spec.clone()), 1.0, g1).unwrap();
        let (v1, _) = p1.solve(tol, 60).unwrap();
        let phys = v1.to_physical();
        for &val in &phys.values {
            assert!(val >= -10.0 * tol, "comparison violated: {val}");
        }
    }

    #[test]
    fn indefinite_diffusion_is_rejected() {
        let g = Grid::new(1, 1.0, 8, 1).unwrap();
        let rhs = SpectralField::zeros(g);
        let a = DMatrix::from_element(1, 1, -1.0);
        assert!(EllipticProblem::new(a, None, 0.0, rhs).is_err());
    }

    #[test]
    fn shift_below_defect_is_rejected() {
        // lambda_min = pi^2/100 on a long box, so a defect K = 1 needs a
        // genuine shift; shift = 0.5 leaves the operator non-monotone.
        let g = Grid::new(1, 10.0, 8, 1).unwrap();
        let rhs = SpectralField::zeros(g);
        let spec = cubic_scalar(1.0).unwrap(); // K = 1
        assert!(EllipticProblem::new(identity(1), Some(spec), 0.5, rhs).is_err());
        // on the unit box the spectral gap pi^2 already covers K = 1
        let g1 = Grid::new(1, 1.0, 8, 1).unwrap();
        let spec1 = cubic_scalar(1.0).unwrap();
        assert!(EllipticProblem::new(identity(1), Some(spec1), 0.0, SpectralField::zeros(g1)).is_ok());
    }

    #[test]
    fn prepared_data_converges_to_u0_in_h1() {
        let g = Grid::new(1, 1.0, 32, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let u0 = SpectralField::single_mode(g, 0, &[1], 2.0 / (2.0_f64).sqrt()).unwrap(); // 2 sin(pi x)
        let mut errs = Vec::new();
        for n in [1, 4, 16, 64] {
            let (v, _) = prepare_initial_data(&identity(1), &u0, &spec, n, 3.5, 1e-11).unwrap();
            errs.push(v.sub(&u0).hs(1.0));
        }
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "H1 errors not decreasing: {errs:?}");
        }
        // first-order in eps = 1/n once eps is small (n = 16 -> 64)
        let rate = (errs[2] / errs[3]).log2() / 4.0_f64.log2();
        assert!(rate > 0.8, "rate {rate}, errors {errs:?}");
    }

    #[test]
    fn prepared_data_is_nearly_exact_for_small_data_and_large_n() {
        // On the range of a small u0 the perturbation f_n - f is
        // eps (p1+1)|u|^(p1-1) u, here below 1e-7, so v stays within the
        // linearized response of that size.
        let g = Grid::new(1, 1.0, 16, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let u0 = SpectralField::single_mode(g, 0, &[1], 0.05).unwrap();
        let tol = 1e-10;
        let (v, _) = prepare_initial_data(&identity(1), &u0, &spec, 1024, 3.5, tol).unwrap();
        assert!(v.sub(&u0).norm_l2() <= 1e-6, "gap {}", v.sub(&u0).norm_l2());
    }

    #[test]
    fn prepared_data_d_norm_bounded_uniformly_in_n() {
        let g = Grid::new(1, 1.0, 32, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let u0 = SpectralField::single_mode(g, 0, &[1], 2.0 / (2.0_f64).sqrt()).unwrap();
        let d0 = crate::norms::norms(&u0, Some(&spec)).unwrap().d_norm.unwrap();
        let mut worst: f64 = 0.0;
        for n in [1, 4, 16, 64] {
            let (v, approx) = prepare_initial_data(&identity(1), &u0, &spec, n, 3.5, 1e-10).unwrap();
            let h2 = v.hs(2.0);
            let fnl2 = f_l2_sq(&approx.to_spec(), &v).unwrap().sqrt();
            worst = worst.max((h2 * h2 + fnl2 * fnl2).sqrt());
        }
        // one constant C with ||u0n||_H2 + ||f_n(u0n)|| <= C ||u0||_D across n
        assert!(worst <= 5.0 * d0, "worst {worst}, d0 {d0}");
    }

    #[test]
    fn regularity_formula_matches_hand_arithmetic() {
        let g = Grid::new(3, 1.0, 6, 1).unwrap();
        let u = SpectralField::single_mode(g, 0, &[1, 1, 1], 1.0).unwrap();
        let rhs = u.laplacian();
        let rep = regularity_report(&u, &rhs, None, 2.2, 1.0).unwrap();
        assert_relative_eq!(rep.r.unwrap(), 0.75, max_relative = 1e-14);
        // admissible: 2.2 < 3 - 3/4 = 2.25 at kappa = 1
        assert_eq!(rep.admissible, Some(true));
        let rep2 = regularity_report(&u, &rhs, None, 2.24, 0.5).unwrap();
        assert_eq!(rep2.admissible, Some(false));
    }

    #[test]
    fn pure_laplacian_ratio_is_exactly_one() {
        // u = -lambda^{-1} g, a = I: ||u||_{H2} = ||g||, f = 0.
        let g = Grid::new(1, 1.0, 16, 1).unwrap();
        let rhs = SpectralField::single_mode(g, 0, &[3], 2.0).unwrap();
        let problem = EllipticProblem::new(identity(1), None, 0.0, rhs.clone()).unwrap();
        let (u, _) = problem.solve(1e-13, 10).unwrap();
        let rep = regularity_report(&u, &rhs, None, 2.2, 1.0).unwrap();
        assert_relative_eq!(rep.ratio_2reg, 1.0, epsilon = 1e-10);
    }
}
