//! Subcommand implementations. All artifact writing funnels through
//! `output` so formats stay deterministic.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use monodiss_core::attractor::{attraction_rate, box_counting_dimension, sample_cloud, EnsembleSpec};
use monodiss_core::diagnostics::energy_report;
use monodiss_core::elliptic::{regularity_report, EllipticProblem, RegularityReport};
use monodiss_core::ensemble::random_field_with_norm;
use monodiss_core::evolution::evolve;
use monodiss_core::exponents::{bootstrap, critical_exponents, epsilon_window, smoothing_exponents};
use monodiss_core::{Error, Result, SpectralField};

use crate::config::ExperimentConfig;
use crate::output::{write_json, write_text, CsvWriter};
use crate::presets::{run_preset, CriterionReport, PRESET_NAMES};

/// Columns of the trajectory time-series CSV.
const ENERGY_COLUMNS: [&str; 11] = [
    "t",
    "l2_sq",
    "h1_sq",
    "h2_sq",
    "fu_dot_u_abs",
    "fprime_grad_form",
    "fprime_grad_form_abs",
    "dt_l2_sq",
    "dt_lr",
    "d_norm_sq",
    "ibp_residual",
];

#[derive(Serialize)]
struct RunMetadata<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    steps_taken: usize,
    samples: usize,
}

pub fn simulate(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    let evo = config.evolution(seed)?;
    let u0 = config.initial_state(seed)?;
    let schedule = config.schedule.build(config.t_final)?;
    let traj = evolve(&evo, &u0, config.t_final, &schedule)?;
    let report = energy_report(&traj, evo.f.as_ref(), config.r_exponent)?;
    let mut csv = CsvWriter::new(&ENERGY_COLUMNS);
    for row in &report.rows {
        csv.row(&[
            row.t,
            row.l2_sq,
            row.h1_sq,
            row.h2_sq,
            row.fu_dot_u_abs,
            row.fprime_grad_form,
            row.fprime_grad_form_abs,
            row.dt_l2_sq,
            row.dt_lr,
            row.d_norm_sq,
            row.ibp_residual,
        ]);
    }
    write_text(&out.join("trajectory.csv"), &csv.into_string())?;
    write_json(
        &out.join("metadata.json"),
        &RunMetadata {
            config,
            seed,
            steps_taken: traj.steps_taken,
            samples: traj.times.len(),
        },
    )?;
    write_json(&out.join("fits.json"), &report.fits)?;
    for (i, t) in config.snapshot_times.iter().enumerate() {
        // snapshot at the nearest sampled time
        let idx = traj
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        write_json(&out.join(format!("snapshot_{i:03}.json")), &traj.states[idx])?;
    }
    eprintln!(
        "simulate: {} samples, {} steps -> {}",
        traj.times.len(),
        traj.steps_taken,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EllipticRun<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    q: f64,
    kappa: f64,
    reports: Vec<RegularityReport>,
}

pub fn elliptic(
    config: &ExperimentConfig,
    seed: u64,
    out: &Path,
    n_rhs: usize,
    q: f64,
    kappa: f64,
) -> Result<()> {
    let spec = match &config.nonlinearity {
        Some(nl) => Some(nl.build()?),
        None => None,
    };
    let a = config.a_matrix();
    let reports: Result<Vec<RegularityReport>> = (0..n_rhs as u64)
        .into_par_iter()
        .map(|i| {
            let g = random_field_with_norm(config.grid, seed, i, 1.0, 1.0);
            let problem = EllipticProblem::new(a.clone(), spec.clone(), 0.0, g.clone())?;
            let (u, _) = problem.solve(1e-10, 80)?;
            regularity_report(&u, &g, spec.as_ref(), q, kappa)
        })
        .collect();
    let reports = reports?;
    let mut csv = CsvWriter::new(&["h2", "fl2", "ratio_2reg", "r", "mixed", "grad_lr"]);
    for r in &reports {
        csv.row(&[
            r.h2,
            r.fl2,
            r.ratio_2reg,
            r.r.unwrap_or(f64::NAN),
            r.mixed.unwrap_or(f64::NAN),
            r.grad_lr.unwrap_or(f64::NAN),
        ]);
    }
    write_text(&out.join("regularity.csv"), &csv.into_string())?;
    write_json(
        &out.join("regularity.json"),
        &EllipticRun {
            config,
            seed,
            q,
            kappa,
            reports,
        },
    )?;
    eprintln!("elliptic: {n_rhs} solves -> {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct ExponentsOutput {
    table: monodiss_core::exponents::ExponentTable,
    smoothing: monodiss_core::exponents::SmoothingExponents,
    epsilon_window: Option<Vec<(f64, f64)>>,
    bootstrap: Option<monodiss_core::exponents::BootstrapResult>,
}

#[allow(clippy::too_many_arguments)]
pub fn exponents(
    d: usize,
    alpha: f64,
    p1: f64,
    p: Option<f64>,
    q: Option<f64>,
    kappa: f64,
    r: f64,
    out: Option<&Path>,
) -> Result<String> {
    let table = critical_exponents(d, alpha)?;
    let smoothing = smoothing_exponents(d, p1)?;
    let window = if d as f64 > 4.0_f64.max(r + 4.0) {
        Some(epsilon_window(d, r, &[0.0, 0.01, 0.05, 0.1, 0.2])?)
    } else {
        None
    };
    let boot = match (p, q) {
        (Some(p), Some(q)) => Some(bootstrap(d, p, q, kappa, r, 64, None)?),
        _ => None,
    };
    let output = ExponentsOutput {
        table,
        smoothing,
        epsilon_window: window,
        bootstrap: boot,
    };
    let json = serde_json::to_string_pretty(&output).expect("serializable");
    if let Some(dir) = out {
        write_text(&dir.join("exponents.json"), &(json.clone() + "\n"))?;
    }
    // aligned text table
    let mut text = String::new();
    let fmt = |v: &monodiss_core::exponents::ExponentValue| match v.value() {
        Some(x) if x.is_infinite() => "inf".to_string(),
        Some(x) => format!("{x:.6}"),
        None => "undefined".to_string(),
    };
    text.push_str(&format!("{:<22} {}\n", "p_crit_energy", fmt(&output.table.p_crit_energy)));
    text.push_str(&format!("{:<22} {}\n", "p_crit_h1", fmt(&output.table.p_crit_h1)));
    text.push_str(&format!("{:<22} {}\n", "p_crit_D", fmt(&output.table.p_crit_d)));
    text.push_str(&format!(
        "{:<22} {}   (alpha = {})\n",
        "p_crit_frac",
        fmt(&output.table.p_crit_frac),
        output.table.alpha
    ));
    text.push_str(&format!("{:<22} {:.6}\n", "s", output.smoothing.s));
    text.push_str(&format!("{:<22} {:.6}\n", "q1", output.smoothing.q1));
    text.push_str(&format!("{:<22} {:.6}\n", "N_theory", output.smoothing.n_theory));
    Ok(format!("{json}\n{text}"))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    seed: u64,
    presets: &'a [String],
    reports: &'a [CriterionReport],
}

/// Run the requested presets; returns (all_passed, printable lines).
pub fn verify(presets: &[String], seed: u64, out: Option<&Path>) -> Result<(bool, String)> {
    let names: Vec<String> = if presets.is_empty() || presets.iter().any(|p| p == "all") {
        PRESET_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        presets.to_vec()
    };
    let mut reports = Vec::new();
    let mut text = String::new();
    for name in &names {
        let rep = run_preset(name, seed)?;
        text.push_str(&rep.summary_line());
        text.push('\n');
        for c in &rep.checks {
            text.push_str(&format!(
                "    [{}] {}: {}\n",
                if c.passed { "ok" } else { "FAIL" },
                c.label,
                c.detail
            ));
        }
        reports.push(rep);
    }
    let all = reports.iter().all(|r| r.passed);
    if let Some(dir) = out {
        write_json(
            &dir.join("verdicts.json"),
            &VerifyOutput {
                seed,
                presets: &names,
                reports: &reports,
            },
        )?;
    }
    Ok((all, text))
}

#[derive(Serialize)]
struct AttractorOutput<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    absorbing: monodiss_core::attractor::AbsorbingReport,
    dimension: monodiss_core::attractor::DimensionFit,
    rate: Option<monodiss_core::attractor::RateFit>,
    snapshots: usize,
    max_norm: f64,
}

pub fn attractor(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    let params = config.attractor.as_ref().ok_or_else(|| {
        Error::config("attractor", "config must carry an 'attractor' section for this subcommand")
    })?;
    let evo = config.evolution(seed)?;
    let ensemble = EnsembleSpec {
        seed,
        magnitudes: params.magnitudes.clone(),
        per_magnitude: params.per_magnitude,
        decay: 1.0,
        horizon: params.horizon,
        samples: 100,
    };
    let absorbing = monodiss_core::attractor::absorbing_radius(&evo, &ensemble)?;
    let max_entry = absorbing
        .entry_times_l2
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let burn_in = params.burn_in.max(2.0 * max_entry);
    let cloud = sample_cloud(
        &evo,
        burn_in,
        params.n_traj,
        params.n_snap,
        params.spacing,
        seed,
        (params.magnitudes[0], *params.magnitudes.last().unwrap()),
        8,
    )?;
    let dimension = box_counting_dimension(&cloud, &params.eps_range)?;
    let rate = if params.probes > 0 {
        let probes: Vec<SpectralField> = (0..params.probes as u64)
            .map(|i| random_field_with_norm(evo.grid, seed ^ 0xAB, i, 1.5, absorbing.r_l2 * 0.5))
            .collect();
        Some(attraction_rate(&evo, &cloud, &probes, params.probe_horizon, 50)?)
    } else {
        None
    };
    let mut csv = CsvWriter::new(&["eps", "boxes"]);
    for (e, n) in &dimension.counts {
        csv.row(&[*e, *n as f64]);
    }
    write_text(&out.join("dimension.csv"), &csv.into_string())?;
    write_json(&out.join("cloud.json"), &cloud.snapshots)?;
    write_json(
        &out.join("attractor.json"),
        &AttractorOutput {
            config,
            seed,
            absorbing,
            dimension,
            rate,
            snapshots: cloud.snapshots.len(),
            max_norm: cloud.max_norm(),
        },
    )?;
    eprintln!("attractor: {} snapshots -> {}", cloud.snapshots.len(), out.display());
    Ok(())
}

/// Cartesian sweep over the config's `sweep` table; one directory per point.
pub fn sweep(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    let table = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "config must carry a 'sweep' table for this subcommand"))?;
    let mut base: Value =
        serde_json::to_value(config).map_err(|e| Error::Internal(format!("reserialize config: {e}")))?;
    if let Some(obj) = base.as_object_mut() {
        obj.remove("sweep");
    }
    let axes: Vec<(&String, &Vec<Value>)> = table
        .iter()
        .map(|(k, v)| {
            v.as_array()
                .map(|arr| (k, arr))
                .ok_or_else(|| Error::config("sweep", format!("sweep entry '{k}' must be a list")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for (path, values) in &axes {
        let mut next = Vec::new();
        for p in &points {
            for v in values.iter() {
                let mut q = p.clone();
                q.push(((*path).clone(), v.clone()));
                next.push(q);
            }
        }
        points = next;
    }
    let runs: Vec<(usize, Vec<(String, Value)>)> = points.into_iter().enumerate().collect();
    let results: Result<Vec<()>> = runs
        .par_iter()
        .map(|(idx, assignments)| {
            let mut v = base.clone();
            for (path, value) in assignments {
                let ptr = if path.starts_with('/') {
                    path.clone()
                } else {
                    format!("/{}", path.replace('.', "/"))
                };
                match v.pointer_mut(&ptr) {
                    Some(slot) => *slot = value.clone(),
                    None => {
                        return Err(Error::config(
                            "sweep",
                            format!("config path '{path}' does not exist"),
                        ))
                    }
                }
            }
            let text = serde_json::to_string(&v).expect("valid json");
            let point_config = ExperimentConfig::from_json(&text)?;
            let dir: PathBuf = out.join(format!("point_{idx:04}"));
            simulate(&point_config, seed.wrapping_add(*idx as u64), &dir)
        })
        .collect();
    results?;
    eprintln!("sweep: {} points -> {}", runs.len(), out.display());
    Ok(())
}
