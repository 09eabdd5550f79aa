//! Energy functionals along trajectories, envelope fits, and PASS/FAIL
//! verdicts for the a priori estimates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig, Trajectory};
use crate::field::SpectralField;
use crate::fitting::{line_fit, loglog_slope};
use crate::nonlin::{f_l2_sq, fu_dot_u_abs, grad_quadratic_form, ibp_pair, NonlinearSpec};

/// One sample time of an energy report.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub t: f64,
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub h2_sq: f64,
    /// int |f(u).u|
    pub fu_dot_u_abs: f64,
    /// (f'(u) grad u, grad u), signed
    pub fprime_grad_form: f64,
    /// int |f'(u) grad u . grad u|
    pub fprime_grad_form_abs: f64,
    /// ||du/dt||_{L^2}^2
    pub dt_l2_sq: f64,
    /// ||du/dt||_{L^{r+2}}
    pub dt_lr: f64,
    /// ||u||_D^2 = ||u||_{H^2}^2 + ||f(u)||_{L^2}^2
    pub d_norm_sq: f64,
    /// |(f(u), Lap u) + (f'(u) grad u, grad u)|
    pub ibp_residual: f64,
}

/// Constants fitted from one trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyFits {
    pub c_l2: f64,
    pub alpha_l2: f64,
    pub c_h1: f64,
    pub alpha_h1: f64,
    /// max observed exponential growth rate of ||du/dt||^2 (0 when decaying)
    pub k1_fit: f64,
    /// exponent N in ||du/dt||^2 ~ t^-N near t = 0, when fittable
    pub n_fit: Option<f64>,
    pub absorbing_b: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
    pub fits: EnergyFits,
    pub dt_nominal: f64,
    pub r_exponent: f64,
}

/// Compute every functional of the a priori estimates along a trajectory.
/// `r` is the small exponent of the L^{r+2} derivative estimate.
pub fn energy_report(traj: &Trajectory, f_spec: Option<&NonlinearSpec>, r: f64) -> Result<EnergyReport> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Argument(format!("r must be positive, got {r}")));
    }
    let rows: Result<Vec<EnergyRow>> = traj
        .times
        .par_iter()
        .zip(traj.states.par_iter().zip(traj.derivs.par_iter()))
        .map(|(&t, (u, du))| {
            let l2 = u.norm_l2();
            let h1 = u.hs(1.0);
            let h2 = u.hs(2.0);
            let (fu_abs, grad_signed, grad_abs, fl2, ibp) = match f_spec {
                Some(spec) => {
                    let fu_abs = fu_dot_u_abs(spec, u)?;
                    let (gs, ga) = grad_quadratic_form(spec, u)?;
                    let fl2 = f_l2_sq(spec, u)?;
                    let (lhs, rhs) = ibp_pair(spec, u)?;
                    (fu_abs, gs, ga, fl2, (lhs + rhs).abs())
                }
                None => (0.0, 0.0, 0.0, 0.0, 0.0),
            };
            Ok(EnergyRow {
                t,
                l2_sq: l2 * l2,
                h1_sq: h1 * h1,
                h2_sq: h2 * h2,
                fu_dot_u_abs: fu_abs,
                fprime_grad_form: grad_signed,
                fprime_grad_form_abs: grad_abs,
                dt_l2_sq: du.norm_l2().powi(2),
                dt_lr: du.lp(r + 2.0)?,
                d_norm_sq: h2 * h2 + fl2,
                ibp_residual: ibp,
            })
        })
        .collect();
    let rows = rows?;
    let fits = fit_single(&rows);
    Ok(EnergyReport {
        rows,
        fits,
        dt_nominal: traj.dt_nominal,
        r_exponent: r,
    })
}

/// Tail level of a series: the last-quarter maximum when the tail has
/// flattened, zero while it is still visibly decaying (subtracting a level
/// from a pure exponential would bias the fitted rate).
fn tail_level(ys: &[f64]) -> f64 {
    let n = ys.len();
    let tail_start = n - (n / 4).max(1);
    let tail_max = ys[tail_start..].iter().cloned().fold(0.0, f64::max);
    let last = ys[n - 1].max(1e-300);
    if tail_max / last > 2.0 {
        0.0
    } else {
        tail_max
    }
}

fn envelope_fit(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    // Fit y(t) <= C e^{-alpha t} y(0) + B: B from the tail, alpha and C from
    // log-linear least squares above the tail level, C inflated to dominate.
    let y0 = ys[0].max(1e-300);
    let b = tail_level(ys);
    let mut ft = Vec::new();
    let mut fz = Vec::new();
    for (t, y) in ts.iter().zip(ys) {
        let excess = y - b;
        if excess > 1e-3 * b.max(1e-300) && excess > 0.0 {
            ft.push(*t);
            fz.push((excess / y0).ln());
        }
    }
    let (mut alpha, mut c) = match line_fit(&ft, &fz) {
        Some(fit) => (-fit.slope, fit.intercept.exp()),
        None => (0.0, 1.0),
    };
    if !alpha.is_finite() {
        alpha = 0.0;
    }
    if !c.is_finite() || c <= 0.0 {
        c = 1.0;
    }
    // minimal inflation so the envelope dominates this trajectory
    let mut factor = 1.0_f64;
    for (t, y) in ts.iter().zip(ys) {
        let env = c * (-alpha * t).exp() * y0 + b;
        if env < *y {
            factor = factor.max(y / env);
        }
    }
    (c * factor * (1.0 + 1e-12), alpha, b)
}

fn fit_single(rows: &[EnergyRow]) -> EnergyFits {
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_sq).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.h1_sq).collect();
    let (c_l2, alpha_l2, b_l2) = envelope_fit(&ts, &l2);
    let (c_h1, alpha_h1, _) = envelope_fit(&ts, &h1);
    let mut k1_fit = 0.0_f64;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.dt_l2_sq > 0.0 && b.dt_l2_sq > 0.0 && b.t > a.t {
            k1_fit = k1_fit.max(((b.dt_l2_sq / a.dt_l2_sq).ln() / (b.t - a.t)).max(0.0));
        }
    }
    let positive: Vec<&EnergyRow> = rows.iter().filter(|r| r.t > 0.0 && r.dt_l2_sq > 0.0).collect();
    let n_fit = if positive.len() >= 3 {
        let span = positive.last().unwrap().t / positive[0].t;
        if span >= 10.0 {
            let xs: Vec<f64> = positive.iter().map(|r| r.t).collect();
            let ys: Vec<f64> = positive.iter().map(|r| r.dt_l2_sq).collect();
            loglog_slope(&xs, &ys).map(|f| -f.slope)
        } else {
            None
        }
    } else {
        None
    };
    EnergyFits {
        c_l2,
        alpha_l2,
        c_h1,
        alpha_h1,
        k1_fit,
        n_fit,
        absorbing_b: b_l2,
    }
}

/// Which dissipative estimate a verdict concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyKind {
    L2,
    H1,
}

/// PASS/FAIL record for one inequality.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: String,
    pub pass: bool,
    pub constants: Vec<(String, f64)>,
    /// (sample time, margin); negative margins below -tolerance fail.
    pub margins: Vec<(f64, f64)>,
    pub worst_margin: f64,
    pub witness_t: f64,
    pub tolerance: f64,
}

impl Verdict {
    fn from_margins(id: String, constants: Vec<(String, f64)>, margins: Vec<(f64, f64)>, tolerance: f64, extra_pass: bool) -> Verdict {
        let (witness_t, worst_margin) = margins
            .iter()
            .cloned()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap_or((0.0, 0.0));
        Verdict {
            id,
            pass: extra_pass && worst_margin >= -tolerance,
            constants,
            margins,
            worst_margin,
            witness_t,
            tolerance,
        }
    }
}

/// Fit a dissipative envelope C e^{-alpha t} M0 + B over an ensemble of
/// reports and check that it dominates every trajectory with alpha > 0.
/// `forced` bypasses the fit with prescribed (C, alpha, B).
pub fn check_dissipative(
    reports: &[EnergyReport],
    which: EnergyKind,
    forced: Option<(f64, f64, f64)>,
) -> Result<Verdict> {
    if reports.is_empty() {
        return Err(Error::Refusal("empty ensemble".into()));
    }
    let value = |row: &EnergyRow| match which {
        EnergyKind::L2 => row.l2_sq,
        EnergyKind::H1 => row.h1_sq,
    };
    // need at least 3 distinct initial magnitudes
    let mut mags: Vec<f64> = reports.iter().map(|r| value(&r.rows[0]).sqrt()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut distinct = 1;
    for w in mags.windows(2) {
        if w[1] > w[0] * 1.05 + 1e-12 {
            distinct += 1;
        }
    }
    if distinct < 3 {
        return Err(Error::Refusal(format!(
            "dissipativity fit needs >= 3 distinct initial magnitudes, found {distinct}"
        )));
    }

    let (c, alpha, b) = match forced {
        Some(triple) => triple,
        None => {
            // pooled fit: tail level over the ensemble, then pooled log-excess LS
            let mut b_pool = 0.0_f64;
            for rep in reports {
                let series: Vec<f64> = rep.rows.iter().map(&value).collect();
                b_pool = b_pool.max(tail_level(&series));
            }
            let mut xs = Vec::new();
            let mut zs = Vec::new();
            for rep in reports {
                let m0 = value(&rep.rows[0]).max(1e-300);
                for row in &rep.rows {
                    let excess = value(row) - b_pool;
                    if excess > 1e-3 * b_pool.max(1e-300) && excess > 0.0 {
                        xs.push(row.t);
                        zs.push((excess / m0).ln());
                    }
                }
            }
            let (mut alpha, mut c) = match line_fit(&xs, &zs) {
                Some(fit) => (-fit.slope, fit.intercept.exp()),
                None => (0.0, 1.0),
            };
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            if !c.is_finite() || c <= 0.0 {
                c = 1.0;
            }
            let mut factor = 1.0_f64;
            for rep in reports {
                let m0 = value(&rep.rows[0]).max(1e-300);
                for row in &rep.rows {
                    let env = c * (-alpha * row.t).exp() * m0 + b_pool;
                    let y = value(row);
                    if env < y {
                        factor = factor.max(y / env);
                    }
                }
            }
            (c * factor * (1.0 + 1e-12), alpha, b_pool)
        }
    };

    let mut margins = Vec::new();
    let mut scale = 0.0_f64;
    let mut dt = 0.0_f64;
    for rep in reports {
        dt = dt.max(rep.dt_nominal);
        let m0 = value(&rep.rows[0]).max(1e-300);
        for row in &rep.rows {
            let y = value(row);
            scale = scale.max(y);
            margins.push((row.t, c * (-alpha * row.t).exp() * m0 + b - y));
        }
    }
    let tolerance = 10.0 * dt * scale;
    let id = match which {
        EnergyKind::L2 => "l2_dissipativity",
        EnergyKind::H1 => "h1_dissipativity",
    };
    Ok(Verdict::from_margins(
        id.into(),
        vec![("C".into(), c), ("alpha".into(), alpha), ("B".into(), b)],
        margins,
        tolerance,
        alpha > 0.0,
    ))
}

/// Discrete Lipschitz check: ||u1(t) - u2(t)|| <= (1 + 10 dt) e^{K t} ||u1(0) - u2(0)||.
pub fn check_lipschitz(t1: &Trajectory, t2: &Trajectory, k_const: f64) -> Result<Verdict> {
    if t1.times.len() != t2.times.len() {
        return Err(Error::Dimension("trajectories sampled differently".into()));
    }
    let v0 = t1.states[0].sub(&t2.states[0]).norm_l2();
    let dt = t1.dt_nominal.max(t2.dt_nominal);
    let mut margins = Vec::new();
    let mut scale = v0;
    for ((ta, sa), sb) in t1.times.iter().zip(&t1.states).zip(&t2.states) {
        let v = sa.sub(sb).norm_l2();
        scale = scale.max(v);
        let bound = (1.0 + 10.0 * dt) * (k_const * ta).exp() * v0;
        margins.push((*ta, bound - v));
    }
    let tolerance = 1e-12 * scale.max(1.0);
    Ok(Verdict::from_margins(
        "lipschitz".into(),
        vec![("K".into(), k_const), ("v0".into(), v0)],
        margins,
        tolerance,
        true,
    ))
}

/// Squeezing data: the H^eps gain of differences over one time-T map,
/// plus the L^{r+2} gain of the same differences.
#[derive(Debug, Clone, Serialize)]
pub struct SqueezingReport {
    pub k_hat: f64,
    pub eps_sob: f64,
    pub t_map: f64,
    pub ratios: Vec<f64>,
    /// ||S(T)x1 - S(T)x2||_{L^{r+2}} / ||x1 - x2||_{L^2} per pair, r = 0.2
    pub lr_ratios: Vec<f64>,
    pub r_exponent: f64,
    /// pairs whose starting points lie outside the supplied absorbing radius
    pub outside_ball: Vec<bool>,
}

/// Evolve each pair to time T and measure
/// K = max ||S(T)x1 - S(T)x2||_{H^eps} / ||x1 - x2||_{L^2}.
pub fn check_squeezing(
    config: &EvolutionConfig,
    pairs: &[(SpectralField, SpectralField)],
    t_map: f64,
    eps_sob: f64,
    absorbing_radius: Option<f64>,
) -> Result<SqueezingReport> {
    if pairs.is_empty() {
        return Err(Error::Refusal("no pairs supplied".into()));
    }
    let r_exponent = 0.2;
    let outside_ball: Vec<bool> = pairs
        .iter()
        .map(|(a, b)| match absorbing_radius {
            Some(r) => a.norm_l2() > r || b.norm_l2() > r,
            None => false,
        })
        .collect();
    let measured: Result<Vec<(f64, f64)>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let d0 = a.sub(b).norm_l2();
            if d0 == 0.0 {
                return Ok((0.0, 0.0));
            }
            let ta = evolve(config, a, t_map, &[t_map])?;
            let tb = evolve(config, b, t_map, &[t_map])?;
            let diff = ta.final_state().sub(tb.final_state());
            Ok((diff.hs(eps_sob) / d0, diff.lp(r_exponent + 2.0)? / d0))
        })
        .collect();
    let measured = measured?;
    let ratios: Vec<f64> = measured.iter().map(|m| m.0).collect();
    let lr_ratios: Vec<f64> = measured.iter().map(|m| m.1).collect();
    let k_hat = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(SqueezingReport {
        k_hat,
        eps_sob,
        t_map,
        ratios,
        lr_ratios,
        r_exponent,
        outside_ball,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingFit {
    /// slope of log ||du/dt||^2 against log t over the window
    pub dt_l2_slope: f64,
    /// slope of log ||u||_{H^1}^2 against log t
    pub h1_slope: f64,
    /// slope of log ||du/dt||_{L^{r+2}} against log t
    pub lr_slope: f64,
    pub window: (f64, f64),
    pub points_used: usize,
}

/// Fit smoothing rates from a log-sampled trajectory report.
pub fn fit_smoothing_rate(report: &EnergyReport, window: (f64, f64)) -> Result<SmoothingFit> {
    let positive: Vec<&EnergyRow> = report.rows.iter().filter(|r| r.t > 0.0).collect();
    if positive.len() < 3 {
        return Err(Error::Refusal("too few positive-time samples".into()));
    }
    let span = positive.last().unwrap().t / positive[0].t;
    if span < 100.0 {
        return Err(Error::Refusal(format!(
            "samples span only a factor {span:.1} in t; need >= 2 decades"
        )));
    }
    let in_window: Vec<&&EnergyRow> = positive
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .collect();
    if in_window.len() < 3 {
        return Err(Error::Refusal("fewer than 3 samples inside the fit window".into()));
    }
    let ts: Vec<f64> = in_window.iter().map(|r| r.t).collect();
    let dt2: Vec<f64> = in_window.iter().map(|r| r.dt_l2_sq).collect();
    let h1: Vec<f64> = in_window.iter().map(|r| r.h1_sq).collect();
    let lr: Vec<f64> = in_window.iter().map(|r| r.dt_lr).collect();
    let s1 = loglog_slope(&ts, &dt2).ok_or_else(|| Error::Refusal("degenerate dt_l2 data".into()))?;
    let s2 = loglog_slope(&ts, &h1).ok_or_else(|| Error::Refusal("degenerate h1 data".into()))?;
    let s3 = loglog_slope(&ts, &lr).ok_or_else(|| Error::Refusal("degenerate dt_lr data".into()))?;
    Ok(SmoothingFit {
        dt_l2_slope: s1.slope,
        h1_slope: s2.slope,
        lr_slope: s3.slope,
        window,
        points_used: in_window.len(),
    })
}

/// Log-spaced sampling schedule: `per_decade` points per decade over
/// [t_min, t_max], always ending exactly at t_max.
pub fn log_schedule(t_min: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min);
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = t_min * 10f64.powf(decades * i as f64 / n as f64);
        out.push(t.min(t_max));
    }
    out.dedup();
    out
}
