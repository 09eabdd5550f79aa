//! Time integration of the reaction-diffusion system
//!     du/dt = -a (-Lap)^alpha u - f(u) + g            (beta = 0)
//! and its Cahn-Hilliard form
//!     du/dt = -(-Lap)^beta ( a (-Lap)^alpha u + f(u) - g )   (beta > 0)
//! on the modal truncation, with an IMEX Euler scheme, a monotone implicit
//! Euler scheme, and a fourth-order explicit reference integrator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::elliptic::symmetric_part_min_eig;
use crate::error::{Error, Result};
use crate::field::{SpectralField, DEALIAS_FACTOR};
use crate::grid::Grid;
use crate::nonlin::{eval_on_field, NonlinearSpec};
use crate::solver::{newton_solve, ModalBlockSolver, NewtonOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexEuler,
    ImplicitMonotoneEuler,
    ReferenceRk4,
}

#[derive(Clone)]
pub struct EvolutionConfig {
    pub grid: Grid,
    pub a: DMatrix<f64>,
    pub f: Option<NonlinearSpec>,
    pub g: SpectralField,
    /// Fractional diffusion order in (0, 2]; 1 is the classical Laplacian.
    pub alpha: f64,
    /// Cahn-Hilliard mobility order in [0, 1]; 0 is the plain system.
    pub beta: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// cached lambda_m^alpha per flat mode
    lam_alpha: Vec<f64>,
    /// cached lambda_m^beta per flat mode (all ones when beta = 0)
    lam_beta: Vec<f64>,
}

impl EvolutionConfig {
    pub fn new(
        grid: Grid,
        a: DMatrix<f64>,
        f: Option<NonlinearSpec>,
        g: SpectralField,
        alpha: f64,
        beta: f64,
        scheme: Scheme,
        dt: f64,
    ) -> Result<Self> {
        if a.nrows() != grid.k || a.ncols() != grid.k {
            return Err(Error::config("a", format!("diffusion matrix must be {0}x{0}", grid.k)));
        }
        if symmetric_part_min_eig(&a) <= 0.0 {
            return Err(Error::config("a", "a + a^T must be positive definite"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::config("alpha", format!("diffusion order must lie in (0, 2], got {alpha}")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::config("beta", format!("mobility order must lie in [0, 1], got {beta}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("dt", format!("time step must be positive, got {dt}")));
        }
        if !g.grid.same_layout(&grid) {
            return Err(Error::Dimension("forcing g lives on a different grid".into()));
        }
        if let Some(spec) = &f {
            if spec.k != grid.k {
                return Err(Error::Dimension("nonlinearity component count mismatch".into()));
            }
        }
        let modes = grid.modes();
        let lam_alpha: Vec<f64> = (0..modes).map(|m| grid.eigenvalue(m).powf(alpha)).collect();
        let lam_beta: Vec<f64> = if beta == 0.0 {
            vec![1.0; modes]
        } else {
            (0..modes).map(|m| grid.eigenvalue(m).powf(beta)).collect()
        };
        Ok(EvolutionConfig {
            grid,
            a,
            f,
            g,
            alpha,
            beta,
            scheme,
            dt,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            lam_alpha,
            lam_beta,
        })
    }

    fn defect(&self) -> f64 {
        self.f.as_ref().map(|s| s.monotonicity_defect).unwrap_or(0.0)
    }

    /// Semi-discrete right-hand side: -lam^beta (a lam^alpha c + fhat - ghat) per mode.
    pub fn rhs(&self, u: &SpectralField) -> Result<SpectralField> {
        if !u.grid.same_layout(&self.grid) {
            return Err(Error::Dimension("state grid mismatch".into()));
        }
        let (k, modes) = (self.grid.k, self.grid.modes());
        let fhat = match &self.f {
            Some(spec) => Some(eval_on_field(spec, u)?),
            None => None,
        };
        let mut out = SpectralField::zeros(self.grid);
        for m in 0..modes {
            let la = self.lam_alpha[m];
            let lb = self.lam_beta[m];
            for i in 0..k {
                let mut inner = 0.0;
                for j in 0..k {
                    inner += self.a[(i, j)] * u.coeffs[j * modes + m];
                }
                inner *= la;
                if let Some(fh) = &fhat {
                    inner += fh.coeffs[i * modes + m];
                }
                inner -= self.g.coeffs[i * modes + m];
                out.coeffs[i * modes + m] = -lb * inner;
            }
        }
        Ok(out)
    }

    /// Per-mode implicit matrices (I + h lam^(alpha+beta) a), inverted.
    fn imex_solver(&self, h: f64) -> Result<ModalBlockSolver> {
        let k = self.grid.k;
        let a = self.a.clone();
        let (alpha, beta) = (self.alpha, self.beta);
        ModalBlockSolver::new(&self.grid, move |lam| {
            let mut m = a.scale(h * lam.powf(alpha + beta));
            for i in 0..k {
                m[(i, i)] += 1.0;
            }
            m
        })
    }

    /// One IMEX Euler step: linear spectral part implicit, f explicit; the
    /// Cahn-Hilliard mobility multiplies the explicit terms by lam^beta.
    pub fn step_imex(&self, u: &SpectralField, h: f64, solver: &ModalBlockSolver) -> Result<SpectralField> {
        let (k, modes) = (self.grid.k, self.grid.modes());
        let fhat = match &self.f {
            Some(spec) => Some(eval_on_field(spec, u)?),
            None => None,
        };
        let mut rhs = vec![0.0; u.coeffs.len()];
        for m in 0..modes {
            let lb = self.lam_beta[m];
            for i in 0..k {
                let idx = i * modes + m;
                let mut expl = self.g.coeffs[idx];
                if let Some(fh) = &fhat {
                    expl -= fh.coeffs[idx];
                }
                rhs[idx] = u.coeffs[idx] + h * lb * expl;
            }
        }
        let coeffs = solver.apply_vec(&rhs);
        Ok(SpectralField {
            grid: self.grid,
            coeffs,
        })
    }

    /// One implicit monotone Euler step, solved by damped Newton. The
    /// per-step operator c/h + lam^beta (a lam^alpha c + f(c)) is strictly
    /// monotone for h < 1/K.
    pub fn step_implicit(&self, u: &SpectralField, h: f64) -> Result<SpectralField> {
        let grid = self.grid;
        let (k, modes) = (grid.k, grid.modes());
        let a = self.a.clone();
        let (alpha, beta) = (self.alpha, self.beta);
        let precond = ModalBlockSolver::new(&grid, |lam| {
            let mut m = a.scale(lam.powf(alpha + beta));
            for i in 0..k {
                m[(i, i)] += 1.0 / h;
            }
            m
        })?;
        let target = u.coeffs.clone();
        let mut residual = |c: &[f64], out: &mut [f64]| {
            let v = SpectralField {
                grid,
                coeffs: c.to_vec(),
            };
            let fhat = self.f.as_ref().map(|spec| eval_on_field(spec, &v).expect("validated"));
            for m in 0..modes {
                let la = self.lam_alpha[m];
                let lb = self.lam_beta[m];
                for i in 0..k {
                    let idx = i * modes + m;
                    let mut inner = 0.0;
                    for j in 0..k {
                        inner += self.a[(i, j)] * c[j * modes + m];
                    }
                    inner *= la;
                    if let Some(fh) = &fhat {
                        inner += fh.coeffs[idx];
                    }
                    inner -= self.g.coeffs[idx];
                    out[idx] = (target[idx] - c[idx]) / h - lb * inner;
                }
            }
        };
        let jac_cache: std::cell::RefCell<Vec<f64>> = std::cell::RefCell::new(Vec::new());
        let mut prepare = |c: &[f64]| {
            if let Some(spec) = &self.f {
                let v = SpectralField {
                    grid,
                    coeffs: c.to_vec(),
                };
                let phys = v.to_physical_fine(DEALIAS_FACTOR);
                let npts = phys.points_total();
                let mut cache = jac_cache.borrow_mut();
                cache.resize(npts * k * k, 0.0);
                let mut uv = vec![0.0; k];
                let mut jac = vec![0.0; k * k];
                for p in 0..npts {
                    for c_ in 0..k {
                        uv[c_] = phys.values[c_ * npts + p];
                    }
                    spec.jacobian(&uv, &mut jac);
                    cache[p * k * k..(p + 1) * k * k].copy_from_slice(&jac);
                }
            }
        };
        // A w = w/h + lam^beta (a lam^alpha w + P f'(v) w)
        let mut jac_apply = |w: &[f64]| {
            let mut fw: Option<SpectralField> = None;
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
                fw = Some(SpectralField::from_physical_fine(grid, &phys).expect("layout fixed"));
            }
            let mut out = vec![0.0; w.len()];
            for m in 0..modes {
                let la = self.lam_alpha[m];
                let lb = self.lam_beta[m];
                for i in 0..k {
                    let idx = i * modes + m;
                    let mut inner = 0.0;
                    for j in 0..k {
                        inner += self.a[(i, j)] * w[j * modes + m];
                    }
                    inner *= la;
                    if let Some(fh) = &fw {
                        inner += fh.coeffs[idx];
                    }
                    out[idx] = w[idx] / h + lb * inner;
                }
            }
            out
        };
        let opts = NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            ..NewtonOptions::default()
        };
        let (c, _info) = newton_solve(
            u.coeffs.clone(),
            &mut residual,
            &mut prepare,
            &mut jac_apply,
            &precond,
            &opts,
        )?;
        Ok(SpectralField { grid, coeffs: c })
    }

    /// Implicit step with rejection: on Newton failure the step is retried
    /// as two half steps, recursively, up to 8 halvings.
    fn step_implicit_adaptive(&self, u: &SpectralField, h: f64, depth: usize) -> Result<SpectralField> {
        match self.step_implicit(u, h) {
            Ok(next) => Ok(next),
            Err(Error::SolverFailure { .. }) if depth < 8 => {
                let mid = self.step_implicit_adaptive(u, 0.5 * h, depth + 1)?;
                self.step_implicit_adaptive(&mid, 0.5 * h, depth + 1)
            }
            Err(e) => Err(e),
        }
    }
}

/// A sampled trajectory. `times[0] = 0` holds the initial state; derivs are
/// the semi-discrete right-hand side evaluated at the stored states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub derivs: Vec<SpectralField>,
    pub scheme: Scheme,
    pub dt_nominal: f64,
    pub steps_taken: usize,
    pub wall_seconds: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory never empty")
    }
}

/// Integrate to T, sampling at the given schedule times (strictly
/// increasing, in (0, T]). Steps are aligned to land exactly on every
/// sample: each segment is subdivided into equal steps of length <= dt.
pub fn evolve(config: &EvolutionConfig, u0: &SpectralField, t_final: f64, schedule: &[f64]) -> Result<Trajectory> {
    if !u0.grid.same_layout(&config.grid) {
        return Err(Error::Dimension("initial state grid mismatch".into()));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::Argument(format!("final time must be positive, got {t_final}")));
    }
    let mut samples: Vec<f64> = schedule.to_vec();
    if samples.is_empty() {
        samples.push(t_final);
    }
    for w in samples.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Argument("schedule times must be strictly increasing".into()));
        }
    }
    if samples[0] <= 0.0 || *samples.last().unwrap() > t_final * (1.0 + 1e-12) {
        return Err(Error::Argument("schedule must lie in (0, T]".into()));
    }
    if config.scheme == Scheme::ImplicitMonotoneEuler {
        let defect = config.defect();
        if defect > 0.0 && config.dt >= 0.5 / defect {
            return Err(Error::config(
                "dt",
                format!(
                    "implicit monotone stepping needs dt < 1/(2K) = {}, got {}",
                    0.5 / defect,
                    config.dt
                ),
            ));
        }
    }
    if config.scheme == Scheme::ReferenceRk4 {
        return reference_solve_sampled(config, u0, t_final, &samples, None);
    }

    let start = std::time::Instant::now();
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut u = u0.clone();
    let mut t_prev = 0.0;
    let mut steps = 0usize;
    // Explicit-term step guard for IMEX: dt <= 0.5/(K + max |f'| on the
    // current state range), evaluated on coarse physical values.
    let defect = config.defect();
    for &t in &samples {
        let span = t - t_prev;
        let mut n_steps = (span / config.dt).ceil().max(1.0) as usize;
        if config.scheme == Scheme::ImexEuler {
            if let Some(spec) = &config.f {
                let fmax = max_jacobian_norm(spec, &u);
                let cap = 0.5 / (defect + fmax).max(1e-12);
                if span / n_steps as f64 > cap {
                    n_steps = (span / cap).ceil() as usize;
                }
            }
        }
        let h = span / n_steps as f64;
        match config.scheme {
            Scheme::ImexEuler => {
                let solver = config.imex_solver(h)?;
                let energy_guard = guard_level(config);
                for _ in 0..n_steps {
                    let next = config.step_imex(&u, h, &solver)?;
                    let before = u.norm_l2();
                    let after = next.norm_l2();
                    if after * after > (before * before).max(energy_guard) * (1.0 + 20.0 * h * (1.0 + defect)) && after > before {
                        // Energy grew past the absorbing level: reject by
                        // substepping this segment once with halved steps.
                        let solver2 = config.imex_solver(0.5 * h)?;
                        let mid = config.step_imex(&u, 0.5 * h, &solver2)?;
                        u = config.step_imex(&mid, 0.5 * h, &solver2)?;
                        steps += 2;
                    } else {
                        u = next;
                        steps += 1;
                    }
                }
            }
            Scheme::ImplicitMonotoneEuler => {
                for _ in 0..n_steps {
                    u = config.step_implicit_adaptive(&u, h, 0)?;
                    steps += 1;
                }
            }
            Scheme::ReferenceRk4 => unreachable!(),
        }
        times.push(t);
        states.push(u.clone());
        t_prev = t;
    }
    let derivs = states.iter().map(|s| config.rhs(s)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        states,
        derivs,
        scheme: config.scheme,
        dt_nominal: config.dt,
        steps_taken: steps,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn guard_level(config: &EvolutionConfig) -> f64 {
    let gn = config.g.norm_l2();
    let c = config.f.as_ref().map(|s| s.dissipativity).unwrap_or(0.0);
    let vol = config.grid.len.powi(config.grid.d as i32);
    100.0 * (1.0 + gn * gn + c * vol)
}

fn max_jacobian_norm(spec: &NonlinearSpec, u: &SpectralField) -> f64 {
    let phys = u.to_physical();
    let npts = phys.points_total();
    let k = spec.k;
    let mut uv = vec![0.0; k];
    let mut jac = vec![0.0; k * k];
    let mut worst = 0.0_f64;
    for p in 0..npts {
        for c in 0..k {
            uv[c] = phys.values[c * npts + p];
        }
        spec.jacobian(&uv, &mut jac);
        let frob: f64 = jac.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(frob);
    }
    worst
}

/// Fourth-order explicit reference integrator on the full modal system.
/// Guard: k N^d <= 20000. Used as ground truth in tests; dt is bounded by
/// the stability limit of the stiffest mode.
pub fn reference_solve(
    config: &EvolutionConfig,
    u0: &SpectralField,
    t_final: f64,
    dt_hint: Option<f64>,
) -> Result<Trajectory> {
    reference_solve_sampled(config, u0, t_final, &[t_final], dt_hint)
}

pub fn reference_solve_sampled(
    config: &EvolutionConfig,
    u0: &SpectralField,
    _t_final: f64,
    samples: &[f64],
    dt_hint: Option<f64>,
) -> Result<Trajectory> {
    let grid = config.grid;
    if grid.coeff_len() > 20_000 {
        return Err(Error::Refusal(format!(
            "reference integrator is restricted to k N^d <= 20000, got {}",
            grid.coeff_len()
        )));
    }
    if !u0.grid.same_layout(&grid) {
        return Err(Error::Dimension("initial state grid mismatch".into()));
    }
    let start = std::time::Instant::now();
    // Stability bound of the stiffest mode: |a| lam_max^(alpha+beta) plus a
    // nonlinear margin re-estimated per segment.
    let anorm = config.a.norm();
    let lam_stiff = grid.lambda_max().powf(config.alpha + config.beta);
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut u = u0.clone();
    let mut t_prev = 0.0;
    let mut steps = 0usize;
    for &t in samples {
        let span = t - t_prev;
        let fmargin = config
            .f
            .as_ref()
            .map(|s| max_jacobian_norm(s, &u))
            .unwrap_or(0.0);
        let lam_total = anorm * lam_stiff + fmargin + config.defect();
        let mut h = 0.4 * 2.785 / lam_total.max(1e-9);
        if let Some(hint) = dt_hint {
            h = h.min(hint);
        }
        let n_steps = (span / h).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;
        for _ in 0..n_steps {
            let k1 = config.rhs(&u)?;
            let mut u2 = u.clone();
            u2.axpy(0.5 * h, &k1);
            let k2 = config.rhs(&u2)?;
            let mut u3 = u.clone();
            u3.axpy(0.5 * h, &k2);
            let k3 = config.rhs(&u3)?;
            let mut u4 = u.clone();
            u4.axpy(h, &k3);
            let k4 = config.rhs(&u4)?;
            u.axpy(h / 6.0, &k1);
            u.axpy(h / 3.0, &k2);
            u.axpy(h / 3.0, &k3);
            u.axpy(h / 6.0, &k4);
            steps += 1;
        }
        times.push(t);
        states.push(u.clone());
        t_prev = t;
    }
    let derivs = states.iter().map(|s| config.rhs(s)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        states,
        derivs,
        scheme: Scheme::ReferenceRk4,
        dt_nominal: dt_hint.unwrap_or(0.0),
        steps_taken: steps,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlin::builtins::cubic_scalar;
    use approx::assert_relative_eq;

    fn heat_config(n: usize, dt: f64, scheme: Scheme) -> EvolutionConfig {
        let grid = Grid::new(1, 1.0, n, 1).unwrap();
        EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            None,
            SpectralField::zeros(grid),
            1.0,
            0.0,
            scheme,
            dt,
        )
        .unwrap()
    }

    #[test]
    fn imex_linear_recursion_is_exact() {
        let config = heat_config(8, 1e-3, Scheme::ImexEuler);
        let u0 = SpectralField::single_mode(config.grid, 0, &[2], 1.0).unwrap();
        let traj = evolve(&config, &u0, 10e-3, &[10e-3]).unwrap();
        let lam = config.grid.axis_eigenvalue(2);
        let expect = (1.0 + 1e-3 * lam).powi(-10);
        let idx = config.grid.flat_index(&[2]);
        assert_relative_eq!(traj.final_state().coeff(0, idx), expect, max_relative = 1e-13);
    }

    #[test]
    fn rhs_single_mode_is_spectral_multiplier() {
        // beta = 0: rhs = -lam^alpha a u; beta = 1, alpha = 1: biharmonic -lam^2 u
        let grid = Grid::new(1, 1.0, 8, 1).unwrap();
        let u = SpectralField::single_mode(grid, 0, &[3], 1.7).unwrap();
        let lam = grid.axis_eigenvalue(3);
        let idx = grid.flat_index(&[3]);
        for (alpha, beta, expect) in [(0.5, 0.0, -lam.sqrt()), (1.0, 1.0, -lam * lam)] {
            let config = EvolutionConfig::new(
                grid,
                DMatrix::identity(1, 1),
                None,
                SpectralField::zeros(grid),
                alpha,
                beta,
                Scheme::ImexEuler,
                1e-3,
            )
            .unwrap();
            let r = config.rhs(&u).unwrap();
            assert_relative_eq!(r.coeff(0, idx), expect * 1.7, max_relative = 1e-13);
        }
    }

    #[test]
    fn cubic_rhs_matches_fine_grid_oracle() {
        let grid = Grid::new(1, 1.0, 16, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            Some(spec.clone()),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImexEuler,
            1e-3,
        )
        .unwrap();
        let u = SpectralField::single_mode(grid, 0, &[2], 1.3).unwrap();
        let r = config.rhs(&u).unwrap();
        // oracle: assemble the rhs with 4x-resolution dealiasing
        let f4 = crate::nonlin::eval_on_field_with_factor(&spec, &u, 4).unwrap();
        let mut oracle = u.laplacian();
        oracle.axpy(-1.0, &f4);
        assert!(r.sub(&oracle).norm_l2() <= 1e-8, "gap {}", r.sub(&oracle).norm_l2());
    }

    #[test]
    fn implicit_equals_imex_for_linear_problems() {
        let ci = heat_config(8, 1e-3, Scheme::ImexEuler);
        let cm = heat_config(8, 1e-3, Scheme::ImplicitMonotoneEuler);
        let u0 = SpectralField::single_mode(ci.grid, 0, &[1], 2.0).unwrap();
        let a = evolve(&ci, &u0, 0.05, &[0.05]).unwrap();
        let b = evolve(&cm, &u0, 0.05, &[0.05]).unwrap();
        assert!(a.final_state().sub(b.final_state()).norm_l2() <= 1e-9);
    }

    #[test]
    fn one_step_error_is_second_order_in_dt() {
        // Richardson: one-step defect vs exact flow scales like dt^2.
        let grid = Grid::new(1, 1.0, 4, 1).unwrap();
        let u0 = SpectralField::single_mode(grid, 0, &[1], 1.0).unwrap();
        let lam = grid.eigenvalue(0);
        let mut errs = Vec::new();
        for &dt in &[1e-2, 5e-3, 2.5e-3] {
            let config = heat_config(4, dt, Scheme::ImexEuler);
            let solver = config.imex_solver(dt).unwrap();
            let one = config.step_imex(&u0, dt, &solver).unwrap();
            let exact = (-lam * dt).exp();
            errs.push((one.coeff(0, 0) - exact).abs());
        }
        let slope = (errs[0] / errs[2]).log2() / 4.0_f64.log2();
        assert!(slope > 1.8 && slope < 2.2, "slope {slope}, errs {errs:?}");
    }

    #[test]
    fn heat_decay_error_matches_first_order_bound() {
        // The module-level target here is the honest first-order bound
        // n (dt lam)^2 / 2 relative; at dt = 1e-4, T = 0.1, lam = pi^2 that
        // is 1.28e-4 in L^2.
        for scheme in [Scheme::ImexEuler, Scheme::ImplicitMonotoneEuler] {
            let config = heat_config(32, 1e-4, scheme);
            let u0 = SpectralField::single_mode(config.grid, 0, &[1], (0.5_f64).sqrt()).unwrap();
            let traj = evolve(&config, &u0, 0.1, &[0.1]).unwrap();
            let lam = config.grid.eigenvalue(0);
            let exact = u0.scaled((-lam * 0.1).exp());
            let err = traj.final_state().sub(&exact).norm_l2();
            assert!(err <= 2e-4, "{scheme:?}: err {err}");
            assert!(err >= 1e-5, "{scheme:?}: err suspiciously small {err}");
        }
    }

    #[test]
    fn reference_matches_exact_heat_to_1e10() {
        let config = heat_config(32, 1e-4, Scheme::ReferenceRk4);
        let u0 = SpectralField::single_mode(config.grid, 0, &[1], (0.5_f64).sqrt()).unwrap();
        let traj = reference_solve(&config, &u0, 0.1, None).unwrap();
        let lam = config.grid.eigenvalue(0);
        let exact = u0.scaled((-lam * 0.1).exp());
        assert!(traj.final_state().sub(&exact).norm_l2() <= 1e-10);
    }

    #[test]
    fn reference_self_convergence_is_fourth_order() {
        let grid = Grid::new(1, 1.0, 6, 1).unwrap();
        let spec = cubic_scalar(1.0).unwrap();
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            Some(spec),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ReferenceRk4,
            1e-3,
        )
        .unwrap();
        let u0 = SpectralField::single_mode(grid, 0, &[1], 1.0).unwrap();
        let fine = reference_solve(&config, &u0, 0.2, Some(1e-4)).unwrap();
        let mut errs = Vec::new();
        // all below the stability bound so the hint is what actually runs
        for &dt in &[2e-3, 1e-3, 5e-4] {
            let t = reference_solve(&config, &u0, 0.2, Some(dt)).unwrap();
            errs.push(t.final_state().sub(fine.final_state()).norm_l2());
        }
        let slope = (errs[0] / errs[2]).log2() / 4.0_f64.log2();
        assert!(slope > 3.6 && slope < 4.4, "slope {slope}, errs {errs:?}");
    }

    #[test]
    fn cubic_imex_tracks_reference() {
        let grid = Grid::new(1, 1.0, 16, 1).unwrap();
        let make = |scheme, dt| {
            EvolutionConfig::new(
                grid,
                DMatrix::identity(1, 1),
                Some(cubic_scalar(1.0).unwrap()),
                SpectralField::zeros(grid),
                1.0,
                0.0,
                scheme,
                dt,
            )
            .unwrap()
        };
        let u0 = SpectralField::single_mode(grid, 0, &[1], 1.5).unwrap();
        let reference = reference_solve(&make(Scheme::ReferenceRk4, 1e-3), &u0, 1.0, Some(1e-4)).unwrap();
        let imex = evolve(&make(Scheme::ImexEuler, 1e-4), &u0, 1.0, &[1.0]).unwrap();
        let err = imex.final_state().sub(reference.final_state()).norm_l2();
        assert!(err <= 1e-3, "imex vs reference {err}");
        let implicit = evolve(&make(Scheme::ImplicitMonotoneEuler, 1e-4), &u0, 1.0, &[1.0]).unwrap();
        let err2 = implicit.final_state().sub(reference.final_state()).norm_l2();
        assert!(err2 <= 1e-3, "implicit vs reference {err2}");
    }

    #[test]
    fn implicit_large_step_has_no_energy_blowup() {
        let grid = Grid::new(1, 1.0, 24, 1).unwrap();
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            Some(cubic_scalar(1.0).unwrap()),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImplicitMonotoneEuler,
            0.1,
        )
        .unwrap();
        let u0 = SpectralField::single_mode(grid, 0, &[1], 8.0).unwrap();
        let schedule: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
        let traj = evolve(&config, &u0, 2.0, &schedule).unwrap();
        let norms: Vec<f64> = traj.states.iter().map(|s| s.norm_l2()).collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "energy grew: {norms:?}");
        }
    }

    #[test]
    fn trajectory_derivs_equal_rhs_of_states() {
        let grid = Grid::new(1, 1.0, 12, 1).unwrap();
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            Some(cubic_scalar(1.0).unwrap()),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImexEuler,
            1e-3,
        )
        .unwrap();
        let u0 = SpectralField::single_mode(grid, 0, &[2], 1.0).unwrap();
        let traj = evolve(&config, &u0, 0.1, &[0.05, 0.1]).unwrap();
        for (s, d) in traj.states.iter().zip(&traj.derivs) {
            let r = config.rhs(s).unwrap();
            assert!(r.sub(d).norm_l2() == 0.0);
        }
    }

    #[test]
    fn deterministic_repeat_runs_are_bit_identical() {
        let grid = Grid::new(1, 1.0, 16, 1).unwrap();
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            Some(cubic_scalar(1.0).unwrap()),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImexEuler,
            1e-3,
        )
        .unwrap();
        let u0 = SpectralField::single_mode(grid, 0, &[1], 2.0).unwrap();
        let a = evolve(&config, &u0, 0.5, &[0.5]).unwrap();
        let b = evolve(&config, &u0, 0.5, &[0.5]).unwrap();
        assert_eq!(a.final_state().coeffs, b.final_state().coeffs);
    }

    #[test]
    fn fractional_and_ch_single_mode_rates() {
        // decay multiplier is lam^(alpha+beta) for a = I, f = 0.
        let grid = Grid::new(1, 1.0, 8, 1).unwrap();
        for &(alpha, beta) in &[(0.5, 0.0), (1.0, 1.0), (0.5, 1.0)] {
            let config = EvolutionConfig::new(
                grid,
                DMatrix::identity(1, 1),
                None,
                SpectralField::zeros(grid),
                alpha,
                beta,
                Scheme::ReferenceRk4,
                1e-4,
            )
            .unwrap();
            let u0 = SpectralField::single_mode(grid, 0, &[1], 1.0).unwrap();
            let t = 0.5 / grid.eigenvalue(0).powf(alpha + beta);
            let traj = reference_solve(&config, &u0, t, Some(t / 400.0)).unwrap();
            let rate = -(traj.final_state().norm_l2().ln()) / t;
            let expect = grid.eigenvalue(0).powf(alpha + beta);
            assert_relative_eq!(rate, expect, max_relative = 1e-6);
        }
    }

    #[test]
    fn coupled_system_with_nonsymmetric_diffusion_tracks_reference() {
        // k = 2 Ginzburg-Landau with a rotational diffusion part: exercises
        // the per-mode 2x2 solves and the vector implicit Newton path.
        let grid = Grid::new(1, 1.0, 12, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        let gl = crate::nonlin::builtins::ginzburg_landau().unwrap();
        let mut u0 = SpectralField::single_mode(grid, 0, &[1], 1.2).unwrap();
        u0.axpy(1.0, &SpectralField::single_mode(grid, 1, &[2], 0.7).unwrap());
        let make = |scheme, dt| {
            EvolutionConfig::new(
                grid,
                a.clone(),
                Some(gl.clone()),
                SpectralField::zeros(grid),
                1.0,
                0.0,
                scheme,
                dt,
            )
            .unwrap()
        };
        let reference = reference_solve(&make(Scheme::ReferenceRk4, 1e-3), &u0, 0.3, Some(1e-4)).unwrap();
        let imex = evolve(&make(Scheme::ImexEuler, 1e-4), &u0, 0.3, &[0.3]).unwrap();
        let implicit = evolve(&make(Scheme::ImplicitMonotoneEuler, 1e-4), &u0, 0.3, &[0.3]).unwrap();
        let e1 = imex.final_state().sub(reference.final_state()).norm_l2();
        let e2 = implicit.final_state().sub(reference.final_state()).norm_l2();
        assert!(e1 <= 1e-3, "imex error {e1}");
        assert!(e2 <= 1e-3, "implicit error {e2}");
    }

    #[test]
    fn cahn_hilliard_implicit_matches_reference() {
        // beta = 1 with a cubic: the mobility multiplies the nonlinear term
        // inside the implicit residual.
        let grid = Grid::new(1, 1.0, 10, 1).unwrap();
        let make = |scheme, dt| {
            EvolutionConfig::new(
                grid,
                DMatrix::identity(1, 1),
                Some(cubic_scalar(1.0).unwrap()),
                SpectralField::zeros(grid),
                1.0,
                1.0,
                scheme,
                dt,
            )
            .unwrap()
        };
        let u0 = SpectralField::single_mode(grid, 0, &[1], 0.8).unwrap();
        let t = 2e-3;
        let reference = reference_solve(&make(Scheme::ReferenceRk4, 1e-6), &u0, t, Some(2e-7)).unwrap();
        let implicit = evolve(&make(Scheme::ImplicitMonotoneEuler, 1e-6), &u0, t, &[t]).unwrap();
        let err = implicit.final_state().sub(reference.final_state()).norm_l2();
        assert!(err <= 1e-5, "implicit CH error {err}");
    }

    #[test]
    fn reference_guard_refuses_large_grids() {
        let grid = Grid::new(3, 1.0, 30, 1).unwrap(); // 27000 modes
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            None,
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ReferenceRk4,
            1e-3,
        )
        .unwrap();
        let u0 = SpectralField::zeros(grid);
        assert!(matches!(reference_solve(&config, &u0, 0.1, None), Err(Error::Refusal(_))));
    }

    #[test]
    fn implicit_rejects_step_beyond_monotonicity_window() {
        let grid = Grid::new(1, 1.0, 8, 1).unwrap();
        let config = EvolutionConfig::new(
            grid,
            DMatrix::identity(1, 1),
            Some(cubic_scalar(10.0).unwrap()), // K = 10 -> dt must be < 0.05
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImplicitMonotoneEuler,
            0.1,
        )
        .unwrap();
        let u0 = SpectralField::zeros(grid);
        assert!(evolve(&config, &u0, 1.0, &[1.0]).is_err());
    }
}
