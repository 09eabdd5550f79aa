//! Damped Newton iteration on modal coefficient vectors, with per-mode
//! spectral preconditioning and GMRES inner solves.
//!
//! Both the monotone elliptic solves and the implicit time stepper reduce to
//! root-finding for F(c) = 0 where the linearization splits into a per-mode
//! block-diagonal part (exactly invertible) plus a pointwise multiplication
//! operator coming from f'(u).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Per-mode k x k matrices (lambda-dependent), factored for direct solves.
/// Applies M^{-1} where M is block diagonal over modes.
pub struct ModalBlockSolver {
    k: usize,
    modes: usize,
    /// Inverses, row-major k x k per mode. For k = 1, reciprocal.
    inv: Vec<f64>,
}

impl ModalBlockSolver {
    /// Build from a per-mode matrix: block(lambda_m) must be invertible.
    pub fn new(grid: &Grid, block: impl Fn(f64) -> DMatrix<f64>) -> Result<Self> {
        let k = grid.k;
        let modes = grid.modes();
        let mut inv = vec![0.0; modes * k * k];
        for m in 0..modes {
            let b = block(grid.eigenvalue(m));
            let b_inv = b.clone().try_inverse().ok_or_else(|| {
                Error::Internal(format!("singular per-mode matrix at eigenvalue {}", grid.eigenvalue(m)))
            })?;
            for i in 0..k {
                for j in 0..k {
                    inv[m * k * k + i * k + j] = b_inv[(i, j)];
                }
            }
        }
        Ok(ModalBlockSolver { k, modes, inv })
    }

    /// out = M^{-1} input, component-major coefficient layout.
    pub fn apply(&self, input: &[f64], out: &mut [f64]) {
        let (k, modes) = (self.k, self.modes);
        if k == 1 {
            for m in 0..modes {
                out[m] = self.inv[m] * input[m];
            }
            return;
        }
        for m in 0..modes {
            for i in 0..k {
                let mut acc = 0.0;
                for j in 0..k {
                    acc += self.inv[m * k * k + i * k + j] * input[j * modes + m];
                }
                out[i * modes + m] = acc;
            }
        }
    }

    pub fn apply_vec(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; input.len()];
        self.apply(input, &mut out);
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES for x with A x = b, matvec supplied as a closure.
/// Returns (x, achieved relative residual).
pub fn gmres(
    matvec: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iters: usize,
    restart: usize,
) -> (Vec<f64>, f64) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (x, 0.0);
    }
    let mut total = 0usize;
    let mut last_rel = 1.0;
    'outer: while total < max_iters {
        let ax = matvec(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        last_rel = beta / bnorm;
        if last_rel <= rel_tol {
            break;
        }
        for ri in r.iter_mut() {
            *ri /= beta;
        }
        let m = restart.min(max_iters - total);
        let mut basis: Vec<Vec<f64>> = vec![r];
        let mut h = vec![vec![0.0_f64; m]; m + 1];
        let mut cs = vec![0.0_f64; m];
        let mut sn = vec![0.0_f64; m];
        let mut g = vec![0.0_f64; m + 1];
        g[0] = beta;
        let mut cols = 0usize;
        for j in 0..m {
            total += 1;
            let mut w = matvec(&basis[j]);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hjj = norm(&w);
            h[j + 1][j] = hjj;
            // Givens rotations to maintain the least-squares triangle.
            for i in 0..j {
                let tmp = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = tmp;
            }
            let denom = (h[j][j] * h[j][j] + hjj * hjj).sqrt();
            if denom == 0.0 {
                cols = j + 1;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hjj / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            cols = j + 1;
            last_rel = g[j + 1].abs() / bnorm;
            if hjj == 0.0 || last_rel <= rel_tol {
                break;
            }
            for wk in w.iter_mut() {
                *wk /= hjj;
            }
            basis.push(w);
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0_f64; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for jj in i + 1..cols {
                acc -= h[i][jj] * y[jj];
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&basis[i]) {
                *xk += yi * vk;
            }
        }
        if last_rel <= rel_tol {
            break 'outer;
        }
    }
    (x, last_rel)
}

/// Outcome of a converged damped-Newton run.
#[derive(Debug, Clone)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
}

pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub gmres_rel_tol: f64,
    pub gmres_max_iters: usize,
    pub gmres_restart: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            gmres_rel_tol: 0.05,
            gmres_max_iters: 200,
            gmres_restart: 40,
        }
    }
}

/// Damped Newton on F(c) = 0.
///
/// `residual` fills F(c). `prepare` is called once per Newton iteration with
/// the current state (to cache pointwise data); `jac_apply` then applies the
/// *negated* Jacobian direction operator A = -F'(c) to a vector. `precond`
/// approximates A^{-1} (the spectral part). The update solves A delta = F
/// by preconditioned GMRES, then Armijo backtracking on ||F|| with factor
/// 1/2 down to 2^-20 accepts the step.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve(
    c0: Vec<f64>,
    residual: &mut dyn FnMut(&[f64], &mut [f64]),
    prepare: &mut dyn FnMut(&[f64]),
    jac_apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precond: &ModalBlockSolver,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = c0.len();
    let mut c = c0;
    let mut f = vec![0.0; n];
    residual(&c, &mut f);
    let mut fnorm = norm(&f);
    let mut history = vec![fnorm];
    let mut iterations = 0usize;
    while fnorm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::SolverFailure {
                iterations,
                last_residual: fnorm,
                residual_history: history,
            });
        }
        prepare(&c);
        let rhs = precond.apply_vec(&f);
        let mut pre_matvec = |v: &[f64]| precond.apply_vec(&jac_apply(v));
        let (delta, _) = gmres(
            &mut pre_matvec,
            &rhs,
            opts.gmres_rel_tol,
            opts.gmres_max_iters,
            opts.gmres_restart,
        );
        // Armijo backtracking on the residual norm.
        let mut step = 1.0_f64;
        let mut accepted = false;
        let mut trial = vec![0.0; n];
        let mut ftrial = vec![0.0; n];
        while step >= 2.0_f64.powi(-20) {
            for i in 0..n {
                trial[i] = c[i] + step * delta[i];
            }
            residual(&trial, &mut ftrial);
            let fnew = norm(&ftrial);
            if fnew <= (1.0 - 1e-4 * step) * fnorm {
                c.copy_from_slice(&trial);
                f.copy_from_slice(&ftrial);
                fnorm = fnew;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(Error::SolverFailure {
                iterations,
                last_residual: fnorm,
                residual_history: history,
            });
        }
        history.push(fnorm);
    }
    Ok((
        c,
        SolveInfo {
            iterations,
            residual_history: history,
            final_residual: fnorm,
        },
    ))
}
