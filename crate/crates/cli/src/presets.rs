//! The verification presets run by `monodiss verify`. Each preset is one
//! self-contained experiment with frozen tolerances; together they make up
//! the acceptance suite.

use nalgebra::DMatrix;
use serde::Serialize;

use monodiss_core::attractor::{attraction_rate, box_counting_dimension, sample_cloud, AttractorCloud};
use monodiss_core::diagnostics::{
    check_dissipative, check_lipschitz, check_squeezing, energy_report, fit_smoothing_rate,
    log_schedule, EnergyKind,
};
use monodiss_core::elliptic::{prepare_initial_data, regularity_report, EllipticProblem};
use monodiss_core::ensemble::{power_law_field, random_field_with_norm};
use monodiss_core::evolution::{evolve, reference_solve, EvolutionConfig, Scheme};
use monodiss_core::exponents::{bootstrap, critical_exponents, epsilon_window, smoothing_exponents};
use monodiss_core::fitting::loglog_slope;
use monodiss_core::nonlin::builtins::{cubic_scalar, polynomial_odd};
use monodiss_core::nonlin::{eval_on_field, ibp_pair};
use monodiss_core::{approximate, verify_constants, Grid, NonlinearSpec, Result, SpectralField};
use rayon::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
}

impl CriterionReport {
    fn new(id: u32, name: &str) -> Self {
        CriterionReport {
            id,
            name: name.into(),
            passed: true,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(CheckLine {
            label: label.into(),
            passed,
            detail,
        });
    }

    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {:02} {}: {}", self.id, self.name, verdict)
    }
}

pub const PRESET_NAMES: [&str; 13] = [
    "linear-oracle",
    "scheme-convergence",
    "dissipativity",
    "lipschitz",
    "approximation",
    "smoothing",
    "exponents-algebra",
    "ibp-identity",
    "elliptic-regularity",
    "squeezing",
    "attractor-sanity",
    "fractional-variants",
    "determinism",
];

pub fn run_preset(name: &str, seed: u64) -> Result<CriterionReport> {
    match name {
        "linear-oracle" => criterion_01(seed),
        "scheme-convergence" => criterion_02(seed),
        "dissipativity" => criterion_03(seed),
        "lipschitz" => criterion_04(seed),
        "approximation" => criterion_05(seed),
        "smoothing" => criterion_06(seed),
        "exponents-algebra" => criterion_07(seed),
        "ibp-identity" => criterion_08(seed),
        "elliptic-regularity" => criterion_09(seed),
        "squeezing" => criterion_10(seed),
        "attractor-sanity" => criterion_11(seed),
        "fractional-variants" => criterion_12(seed),
        "determinism" => criterion_13(seed),
        other => Err(monodiss_core::Error::config(
            "preset",
            format!("unknown preset '{other}'; valid names: {}", PRESET_NAMES.join(", ")),
        )),
    }
}

fn identity(k: usize) -> DMatrix<f64> {
    DMatrix::identity(k, k)
}

fn scalar_config(
    n: usize,
    f: Option<NonlinearSpec>,
    scheme: Scheme,
    dt: f64,
) -> Result<EvolutionConfig> {
    let grid = Grid::new(1, 1.0, n, 1)?;
    EvolutionConfig::new(
        grid,
        identity(1),
        f,
        SpectralField::zeros(grid),
        1.0,
        0.0,
        scheme,
        dt,
    )
}

/// sin(pi x) on (0,1): coefficient 1/sqrt(2) of the first orthonormal mode.
fn sin_pi(grid: Grid) -> SpectralField {
    SpectralField::single_mode(grid, 0, &[1], (0.5_f64).sqrt()).unwrap()
}

/// 1. Linear oracle: heat equation against the exact exponential.
fn criterion_01(_seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(1, "linear-oracle");
    let lam = std::f64::consts::PI.powi(2);
    let exact_factor = (-lam * 0.1).exp();
    for scheme in [Scheme::ImexEuler, Scheme::ImplicitMonotoneEuler] {
        let config = scalar_config(32, None, scheme, 1e-4)?;
        let u0 = sin_pi(config.grid);
        let traj = evolve(&config, &u0, 0.1, &[0.1])?;
        let err = traj.final_state().sub(&u0.scaled(exact_factor)).norm_l2();
        rep.check(
            &format!("{scheme:?} error vs exp(-pi^2 0.1) at dt=1e-4"),
            err <= 1e-6,
            format!("{err:.3e} (bound 1e-6)"),
        );
    }
    let config = scalar_config(32, None, Scheme::ReferenceRk4, 1e-4)?;
    let u0 = sin_pi(config.grid);
    let traj = reference_solve(&config, &u0, 0.1, None)?;
    let err = traj.final_state().sub(&u0.scaled(exact_factor)).norm_l2();
    rep.check("reference_rk4 error", err <= 1e-10, format!("{err:.3e} (bound 1e-10)"));
    Ok(rep)
}

/// 2. Scheme self-convergence at order one against the reference integrator.
fn criterion_02(_seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(2, "scheme-convergence");
    let grid = Grid::new(1, 1.0, 16, 1)?;
    let u0 = SpectralField::single_mode(grid, 0, &[1], 1.5)?;
    let refer = {
        let config = scalar_config(16, Some(cubic_scalar(1.0)?), Scheme::ReferenceRk4, 1e-4)?;
        reference_solve(&config, &u0, 0.5, Some(2e-5))?
    };
    let dts = [4e-3, 2e-3, 1e-3];
    for scheme in [Scheme::ImexEuler, Scheme::ImplicitMonotoneEuler] {
        let errs: Result<Vec<f64>> = dts
            .par_iter()
            .map(|&dt| {
                let config = scalar_config(16, Some(cubic_scalar(1.0)?), scheme, dt)?;
                let traj = evolve(&config, &u0, 0.5, &[0.5])?;
                Ok(traj.final_state().sub(refer.final_state()).norm_l2())
            })
            .collect();
        let errs = errs?;
        let fit = loglog_slope(&dts, &errs).expect("three error samples");
        rep.check(
            &format!("{scheme:?} convergence order"),
            fit.slope >= 0.8 && fit.slope <= 1.2,
            format!("slope {:.3} from errors {:?}", fit.slope, errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()),
        );
    }
    Ok(rep)
}

/// 3. Dissipative envelopes dominate a multi-magnitude ensemble.
fn criterion_03(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(3, "dissipativity");
    let config = scalar_config(64, Some(cubic_scalar(1.0)?), Scheme::ImplicitMonotoneEuler, 2e-3)?;
    let schedule: Vec<f64> = (1..=60).map(|i| 6.0 * i as f64 / 60.0).collect();
    let mut tasks = Vec::new();
    for (mi, &mag) in [1.0, 4.0, 16.0].iter().enumerate() {
        for s in 0..3 {
            tasks.push((mi * 3 + s, mag));
        }
    }
    let reports: Result<Vec<_>> = tasks
        .par_iter()
        .map(|&(stream, mag)| {
            let u0 = random_field_with_norm(config.grid, seed, stream as u64, 1.5, mag);
            let traj = evolve(&config, &u0, 6.0, &schedule)?;
            energy_report(&traj, config.f.as_ref(), 0.2)
        })
        .collect();
    let reports = reports?;
    for kind in [EnergyKind::L2, EnergyKind::H1] {
        let verdict = check_dissipative(&reports, kind, None)?;
        let alpha = verdict.constants.iter().find(|(n, _)| n == "alpha").unwrap().1;
        rep.check(
            &format!("{kind:?} envelope dominates with positive rate"),
            verdict.pass,
            format!(
                "alpha {:.3}, C {:.3}, B {:.3e}, worst margin {:.3e}",
                alpha,
                verdict.constants[0].1,
                verdict.constants[2].1,
                verdict.worst_margin
            ),
        );
    }
    Ok(rep)
}

/// 4. Discrete Lipschitz continuity in L^2.
fn criterion_04(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(4, "lipschitz");
    let dt = 1e-3;
    let config = scalar_config(32, Some(cubic_scalar(1.0)?), Scheme::ImplicitMonotoneEuler, dt)?;
    let samples = [0.25, 0.5, 0.75, 1.0];
    let results: Result<Vec<bool>> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let a = random_field_with_norm(config.grid, seed, 2 * i, 1.2, 0.4 + 0.06 * i as f64);
            let mut b = a.clone();
            let bump = random_field_with_norm(config.grid, seed, 2 * i + 1, 1.2, 0.2);
            b.axpy(1.0, &bump);
            let ta = evolve(&config, &a, 1.0, &samples)?;
            let tb = evolve(&config, &b, 1.0, &samples)?;
            let v = check_lipschitz(&ta, &tb, 1.0)?;
            Ok(v.pass)
        })
        .collect();
    let results = results?;
    let passed = results.iter().filter(|&&p| p).count();
    rep.check(
        "20 random pairs satisfy (1+10dt) e^(K t) growth, K = 1",
        passed == 20,
        format!("{passed}/20 pairs within bound"),
    );
    // exact contraction of the linear semigroup
    let config0 = scalar_config(32, None, Scheme::ImexEuler, 1e-4)?;
    let u0 = sin_pi(config0.grid);
    let traj = evolve(&config0, &u0, 1.0, &[1.0])?;
    let ratio = traj.final_state().norm_l2() / u0.norm_l2();
    let exact = (-std::f64::consts::PI.powi(2)).exp();
    rep.check(
        "f = 0 contraction equals exp(-pi^2 T)",
        (ratio - exact).abs() <= 1e-6,
        format!("ratio {ratio:.9e} vs {exact:.9e}"),
    );
    Ok(rep)
}

/// 5. Approximation machinery: uniform certification and prepared data.
fn criterion_05(_seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(5, "approximation");
    let base = cubic_scalar(1.0)?;
    let mut growth_constants = Vec::new();
    let mut all_cert = true;
    for n in [1u32, 4, 16, 64] {
        let approx = approximate(&base, n, 3.5)?;
        let cert = verify_constants(&approx.to_spec(), 4.0 * approx.r_cutoff.sqrt(), 500, 7)?;
        let ck_ok = cert.dissipativity.value >= -cert.tol && cert.monotonicity.value >= -cert.tol;
        all_cert &= ck_ok;
        growth_constants.push(approx.fitted_growth_constant);
    }
    rep.check(
        "verify_constants passes with C = 1/4, K = 1 for n in {1,4,16,64}",
        all_cert,
        format!("growth constants {:?}", growth_constants.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>()),
    );
    let max_growth = growth_constants.iter().cloned().fold(0.0, f64::max);
    rep.check(
        "n-independent growth constant (max within 2x of n=1 value)",
        max_growth <= 2.0 * growth_constants[0],
        format!("max {:.3} vs n=1 {:.3}", max_growth, growth_constants[0]),
    );
    // prepared initial data for u0 = 2 sin(pi x)
    let grid = Grid::new(1, 1.0, 32, 1)?;
    let u0 = SpectralField::single_mode(grid, 0, &[1], 2.0 / (2.0_f64).sqrt())?;
    let errs: Result<Vec<f64>> = [1u32, 4, 16, 64]
        .par_iter()
        .map(|&n| {
            let (v, _) = prepare_initial_data(&identity(1), &u0, &base, n, 3.5, 1e-10)?;
            Ok(v.sub(&u0).hs(1.0))
        })
        .collect();
    let errs = errs?;
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    rep.check(
        "||u0^n - u0||_H1 monotonically decreasing",
        monotone,
        format!("errors {:?}", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()),
    );
    rep.check(
        "||u0^n - u0||_H1 < 1e-3 at n = 64",
        errs[3] < 1e-3,
        format!("{:.3e} (bound 1e-3)", errs[3]),
    );
    Ok(rep)
}

/// 6. Smoothing rates for rough initial data.
fn criterion_06(_seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(6, "smoothing");
    // Box sizes keep lambda_min small enough that the whole fit window
    // [1e-3, 1e-1] lies inside the smoothing regime (t < 1/lambda_min),
    // not the terminal single-mode exponential decay.
    for (d, n, len) in [(1usize, 256usize, 1.0), (2, 56, 2.5)] {
        let grid = Grid::new(d, len, n, 1)?;
        let config = EvolutionConfig::new(
            grid,
            identity(1),
            Some(cubic_scalar(1.0)?),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImexEuler,
            1e-3,
        )?;
        let u0 = power_law_field(grid, 1.1, 0);
        let schedule = log_schedule(1e-4, 1.0, 20);
        let traj = evolve(&config, &u0, 1.0, &schedule)?;
        let report = energy_report(&traj, config.f.as_ref(), 0.2)?;
        let fit = fit_smoothing_rate(&report, (1e-3, 1e-1))?;
        let se = smoothing_exponents(d, 3.5)?;
        let bound = -(se.n_theory + 0.5);
        rep.check(
            &format!("d={d}: slope of log ||du/dt||^2 vs log t >= -(N_theory + 0.5)"),
            fit.dt_l2_slope >= bound,
            format!("slope {:.3} vs bound {:.3} (N_theory = {:.3})", fit.dt_l2_slope, bound, se.n_theory),
        );
        rep.check(
            &format!("d={d}: H1 slope >= -1.1"),
            fit.h1_slope >= -1.1,
            format!("slope {:.3}", fit.h1_slope),
        );
    }
    Ok(rep)
}

/// 7. Exponent algebra, exact values and the bootstrap sweep.
fn criterion_07(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(7, "exponents-algebra");
    let t5 = critical_exponents(5, 1.0)?;
    rep.check(
        "p_crit_D(5) = 5",
        t5.p_crit_d.value() == Some(5.0),
        format!("{:?}", t5.p_crit_d),
    );
    let t3 = critical_exponents(3, 0.5)?;
    rep.check(
        "p_crit_h1(3) = 5",
        t3.p_crit_h1.value() == Some(5.0),
        format!("{:?}", t3.p_crit_h1),
    );
    rep.check(
        "p_crit_frac(3, 0.5) = 3",
        t3.p_crit_frac.value() == Some(3.0),
        format!("{:?}", t3.p_crit_frac),
    );
    let se = smoothing_exponents(3, 3.0)?;
    rep.check(
        "smoothing_exponents(3,3) = (1/2, 4/3) with zero Hoelder residual",
        se.s == 0.5 && se.q1 == 4.0 / 3.0 && se.holder_residual == 0.0,
        format!("s = {}, q1 = {}, residual = {:e}", se.s, se.q1, se.holder_residual),
    );
    // 1000-case sweep: first-step direction against the monotonicity criterion
    let mut rng = monodiss_core::rng::SplitMix64::new(seed ^ 0xB007);
    let mut mismatches = 0usize;
    let mut cases = 0usize;
    while cases < 1000 {
        let d = 5 + (rng.next_u64() % 4) as usize;
        let p = 1.5 + 5.0 * rng.next_f64();
        let kappa = 0.3 * rng.next_f64();
        let q0 = 0.5 + 10.0 * rng.next_f64();
        let q = d as f64 / 2.0 + 10.0;
        let lhs = p - q0 * (2.0 - kappa) / d as f64;
        if (lhs - 1.0).abs() < 1e-9 {
            continue;
        }
        let res = bootstrap(d, p, q, kappa, 0.2, 3, Some(q0))?;
        if res.first_step_increasing_criterion != res.first_step_increased {
            mismatches += 1;
        }
        cases += 1;
    }
    rep.check(
        "bootstrap first step matches the monotonicity criterion (1000 cases)",
        mismatches == 0,
        format!("{mismatches} mismatches"),
    );
    let w = epsilon_window(5, 0.2, &[0.0])?;
    rep.check(
        "epsilon_window(5, 0.2, kappa -> 0) = 1.5",
        (w[0].1 - 1.5).abs() <= 8.0 * f64::EPSILON * 1.5,
        format!("{:.17}", w[0].1),
    );
    Ok(rep)
}

/// 8. Integration-by-parts identity, magnitude and refinement behavior.
fn criterion_08(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(8, "ibp-identity");
    let spec = cubic_scalar(1.0)?;
    let grid = Grid::new(1, 1.0, 32, 1)?;
    let mut worst_rel: f64 = 0.0;
    for i in 0..50 {
        let u = random_field_with_norm(grid, seed, i, 1.5, 1.0 + 0.05 * i as f64);
        let (lhs, rhs) = ibp_pair(&spec, &u)?;
        let scale = u.hs(2.0) * u.hs(1.0);
        worst_rel = worst_rel.max((lhs + rhs).abs() / scale);
    }
    rep.check(
        "max residual over 50 band-limited fields <= 1e-6 (h2 h1)",
        worst_rel <= 1e-6,
        format!("max relative residual {worst_rel:.3e}"),
    );
    // refinement: fixed band-16 fields represented on N = 32 and N = 64
    let coarse_band = Grid::new(1, 1.0, 16, 1)?;
    let rel_at = |n: usize| -> Result<f64> {
        let target = Grid::new(1, 1.0, n, 1)?;
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let u = random_field_with_norm(coarse_band, seed ^ 0xF00D, i, 1.5, 1.0).embed(target)?;
            let (lhs, rhs) = ibp_pair(&spec, &u)?;
            worst = worst.max((lhs + rhs).abs() / (u.hs(2.0) * u.hs(1.0)));
        }
        Ok(worst)
    };
    let r32 = rel_at(32)?;
    let r64 = rel_at(64)?;
    // The dealiased quadrature is exact for cubics, so residuals sit at the
    // rounding floor; a refinement order is only measurable above it.
    let floor = 1e-12;
    let order = (r32 / r64.max(1e-300)).log2();
    rep.check(
        "residual decreasing under N-doubling at order >= 1 (or at rounding floor)",
        order >= 1.0 || (r32 <= floor && r64 <= floor),
        format!("rel residuals {r32:.3e} -> {r64:.3e}, order {order:.2}, floor {floor:.0e}"),
    );
    Ok(rep)
}

/// 9. Elliptic regularity: bounded, refinement-stable ratio and a
/// manufactured solution.
fn criterion_09(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(9, "elliptic-regularity");
    let cubic = polynomial_odd(3)?; // f(u) = u^3, the monotone model of the appendix
    let max_ratio = |d: usize, n: usize, count: u64| -> Result<f64> {
        let grid = Grid::new(d, 1.0, n, 1)?;
        let ratios: Result<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let g = random_field_with_norm(grid, seed ^ 0xE111, i, 1.0, 1.0);
                let problem = EllipticProblem::new(identity(1), Some(cubic.clone()), 0.0, g.clone())?;
                let (u, _) = problem.solve(1e-10, 60)?;
                let report = regularity_report(&u, &g, Some(&cubic), 2.2, 1.0)?;
                Ok(report.ratio_2reg)
            })
            .collect();
        Ok(ratios?.into_iter().fold(0.0, f64::max))
    };
    for (d, n, count) in [(1usize, 32usize, 50u64), (3, 12, 50)] {
        let coarse = max_ratio(d, n, count)?;
        let fine = max_ratio(d, 2 * n, count)?;
        let change = (fine - coarse).abs() / coarse.max(1e-300);
        rep.check(
            &format!("d={d}: max ratio_2reg finite and stable under N-doubling"),
            coarse.is_finite() && change <= 0.2,
            format!("ratio {coarse:.4} -> {fine:.4} ({:.1}% change)", 100.0 * change),
        );
    }
    // manufactured solution
    let grid = Grid::new(1, 1.0, 32, 1)?;
    let target = SpectralField::single_mode(grid, 0, &[1], 1.5)?;
    let f_target = eval_on_field(&cubic, &target)?;
    let mut rhs = target.laplacian();
    rhs.axpy(-1.0, &f_target);
    let problem = EllipticProblem::new(identity(1), Some(cubic.clone()), 0.0, rhs)?;
    let (_, info) = problem.solve(1e-10, 60)?;
    rep.check(
        "manufactured-solution residual < 1e-8",
        info.final_residual < 1e-8,
        format!("residual {:.3e}", info.final_residual),
    );
    Ok(rep)
}

/// 10. Squeezing constant, finite and refinement-stable.
fn criterion_10(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(10, "squeezing");
    let coarse = Grid::new(1, 1.0, 32, 1)?;
    let pairs: Vec<(SpectralField, SpectralField)> = (0..20u64)
        .map(|i| {
            let a = random_field_with_norm(coarse, seed, 2 * i, 1.5, 0.3 + 0.03 * i as f64);
            let mut b = a.clone();
            b.axpy(1.0, &random_field_with_norm(coarse, seed, 2 * i + 1, 1.5, 0.1));
            (a, b)
        })
        .collect();
    let mut k_hats = Vec::new();
    for n in [32usize, 64] {
        let grid = Grid::new(1, 1.0, n, 1)?;
        let config = EvolutionConfig::new(
            grid,
            identity(1),
            Some(cubic_scalar(1.0)?),
            SpectralField::zeros(grid),
            1.0,
            0.0,
            Scheme::ImplicitMonotoneEuler,
            2e-3,
        )?;
        let embedded: Vec<(SpectralField, SpectralField)> = pairs
            .iter()
            .map(|(a, b)| (a.embed(grid).unwrap(), b.embed(grid).unwrap()))
            .collect();
        let report = check_squeezing(&config, &embedded, 1.0, 0.25, Some(2.0))?;
        k_hats.push(report.k_hat);
    }
    let change = (k_hats[1] - k_hats[0]).abs() / k_hats[0].max(1e-300);
    rep.check(
        "K finite and stable within 20% across N in {32, 64}",
        k_hats.iter().all(|k| k.is_finite() && *k > 0.0) && change <= 0.2,
        format!("K {:.5} -> {:.5} ({:.2}% change)", k_hats[0], k_hats[1], 100.0 * change),
    );
    Ok(rep)
}

/// 11. Attractor sanity on the Chafee-Infante benchmark.
fn criterion_11(seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(11, "attractor-sanity");
    let pi_sq = std::f64::consts::PI.powi(2);
    // subcritical: lambda = 5 < pi^2, attractor is the origin
    let config5 = scalar_config(24, Some(cubic_scalar(5.0)?), Scheme::ImexEuler, 2e-3)?;
    let cloud5 = sample_cloud(&config5, 5.0, 8, 4, 0.5, seed, (0.5, 4.0), 8)?;
    rep.check(
        "lambda = 5: cloud collapses to the origin",
        cloud5.max_norm() < 1e-4,
        format!("max snapshot norm {:.3e}", cloud5.max_norm()),
    );
    let dims = box_counting_dimension(&cloud5, &[0.04, 0.08, 0.16, 0.32])?;
    rep.check(
        "lambda = 5: box-counting dimension < 0.2",
        dims.dim.abs() < 0.2,
        format!("dim {:.3} (R^2 {:.3})", dims.dim, dims.r2),
    );
    // attraction rate to the origin within 10% of pi^2 - 5
    let probes: Vec<SpectralField> = (0..5)
        .map(|i| SpectralField::single_mode(config5.grid, 0, &[1], 0.02 + 0.02 * i as f64).unwrap())
        .collect();
    let cloud0 = AttractorCloud::from_snapshots(vec![SpectralField::zeros(config5.grid)], 8);
    let rate_cfg = scalar_config(24, Some(cubic_scalar(5.0)?), Scheme::ImexEuler, 2e-4)?;
    let fit = attraction_rate(&rate_cfg, &cloud0, &probes, 1.5, 40)?;
    let gap = pi_sq - 5.0;
    rep.check(
        "lambda = 5: attraction rate within 10% of pi^2 - 5",
        (fit.alpha_hat - gap).abs() <= 0.1 * gap,
        format!("alpha {:.4} vs {:.4}", fit.alpha_hat, gap),
    );
    // supercritical window: pi^2 < lambda = 15 < 4 pi^2, cloud near +-phi
    let config15 = scalar_config(32, Some(cubic_scalar(15.0)?), Scheme::ImplicitMonotoneEuler, 2e-3)?;
    let cloud15 = sample_cloud(&config15, 8.0, 10, 3, 0.7, seed + 1, (0.5, 3.0), 8)?;
    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    for s in &cloud15.snapshots {
        if s.coeffs[0] >= 0.0 {
            plus.push(s.clone());
        } else {
            minus.push(s.clone());
        }
    }
    let mut worst_resid: f64 = 0.0;
    let mut sided = true;
    for cluster in [&plus, &minus] {
        if cluster.is_empty() {
            sided = false;
            continue;
        }
        let mut centroid = SpectralField::zeros(config15.grid);
        for s in cluster.iter() {
            centroid.axpy(1.0 / cluster.len() as f64, s);
        }
        let fc = eval_on_field(config15.f.as_ref().unwrap(), &centroid)?;
        let mut resid = centroid.laplacian();
        resid.axpy(-1.0, &fc);
        worst_resid = worst_resid.max(resid.norm_l2());
    }
    rep.check(
        "lambda = 15: cluster centroids solve the equilibrium equation to 1e-3",
        sided && worst_resid < 1e-3,
        format!("worst residual {worst_resid:.3e}; clusters {} / {}", plus.len(), minus.len()),
    );
    Ok(rep)
}

/// 12. Fractional and Cahn-Hilliard wiring: single-mode decay rates.
fn criterion_12(_seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(12, "fractional-variants");
    let grid = Grid::new(1, 1.0, 8, 1)?;
    let lam1 = grid.eigenvalue(0);
    for &(alpha, beta) in &[(0.5, 0.0), (1.0, 1.0), (0.5, 1.0)] {
        let config = EvolutionConfig::new(
            grid,
            identity(1),
            None,
            SpectralField::zeros(grid),
            alpha,
            beta,
            Scheme::ReferenceRk4,
            1e-3,
        )?;
        let u0 = SpectralField::single_mode(grid, 0, &[1], 1.0)?;
        let expect = lam1.powf(alpha + beta);
        let t = 0.5 / expect;
        let traj = reference_solve(&config, &u0, t, Some(t / 400.0))?;
        let rate = -traj.final_state().norm_l2().ln() / t;
        rep.check(
            &format!("(alpha, beta) = ({alpha}, {beta}): decay rate = lambda^(alpha+beta)"),
            (rate - expect).abs() <= 1e-6 * expect,
            format!("rate {rate:.9e} vs {expect:.9e}"),
        );
        // the IMEX recursion must also follow its closed form exactly
        let config_imex = EvolutionConfig::new(
            grid,
            identity(1),
            None,
            SpectralField::zeros(grid),
            alpha,
            beta,
            Scheme::ImexEuler,
            1e-3,
        )?;
        let traj2 = evolve(&config_imex, &u0, 10e-3, &[10e-3])?;
        let formula = (1.0 + 1e-3 * expect).powi(-10);
        let got = traj2.final_state().coeff(0, 0);
        rep.check(
            &format!("(alpha, beta) = ({alpha}, {beta}): IMEX matches (1 + dt lambda^(a+b))^-n"),
            (got - formula).abs() <= 1e-12,
            format!("{got:.15e} vs {formula:.15e}"),
        );
    }
    Ok(rep)
}

/// 13. Determinism: a repeated preset run with a fixed seed is byte-identical.
fn criterion_13(_seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(13, "determinism");
    let a = run_preset("lipschitz", 7)?;
    let b = run_preset("lipschitz", 7)?;
    let ja = serde_json::to_string(&a).expect("serializable");
    let jb = serde_json::to_string(&b).expect("serializable");
    rep.check(
        "verify --preset lipschitz --seed 7 twice is byte-identical",
        ja == jb,
        format!("{} bytes each", ja.len()),
    );
    Ok(rep)
}
