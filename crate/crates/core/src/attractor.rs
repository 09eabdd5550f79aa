//! Empirical attractor study: absorbing-set detection, long-run snapshot
//! clouds, box-counting dimension on modal projections, and exponential
//! attraction-rate fits. The snapshot cloud is a surrogate for the global
//! attractor; every attraction statement is an upper-bound check against it.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::random_field_with_norm;
use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig};
use crate::field::SpectralField;
use crate::fitting::{line_fit, loglog_slope};

/// Ensemble of random initial data for absorbing-set and rate studies.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub magnitudes: Vec<f64>,
    pub per_magnitude: usize,
    /// spectral decay of the random initial data
    pub decay: f64,
    pub horizon: f64,
    pub samples: usize,
}

impl EnsembleSpec {
    pub fn initial_data(&self, config: &EvolutionConfig) -> Vec<SpectralField> {
        let mut out = Vec::new();
        let mut stream = 0u64;
        for &mag in &self.magnitudes {
            for _ in 0..self.per_magnitude {
                out.push(random_field_with_norm(config.grid, self.seed, stream, self.decay, mag));
                stream += 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorbingReport {
    pub r_l2: f64,
    pub r_h1: f64,
    /// per-trajectory first entry times into the L^2 ball of radius r_l2
    pub entry_times_l2: Vec<f64>,
    pub entry_times_h1: Vec<f64>,
    pub horizon: f64,
}

/// Smallest radii (with a 5% margin) such that every ensemble trajectory
/// enters and never re-exits within the horizon, plus entry times.
pub fn absorbing_radius(config: &EvolutionConfig, ensemble: &EnsembleSpec) -> Result<AbsorbingReport> {
    if ensemble.magnitudes.len() < 3 {
        return Err(Error::Refusal("ensemble must span >= 3 magnitudes".into()));
    }
    let u0s = ensemble.initial_data(config);
    let mut init_norms: Vec<f64> = u0s.iter().map(|u| u.norm_l2()).collect();
    let max_mag = init_norms.iter().cloned().fold(0.0, f64::max);
    init_norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_mag = init_norms[init_norms.len() / 2];
    let schedule: Vec<f64> = (1..=ensemble.samples)
        .map(|i| ensemble.horizon * i as f64 / ensemble.samples as f64)
        .collect();
    let norms: Result<Vec<(Vec<f64>, Vec<f64>)>> = u0s
        .par_iter()
        .map(|u0| {
            let traj = evolve(config, u0, ensemble.horizon, &schedule)?;
            let l2: Vec<f64> = traj.states.iter().map(|s| s.norm_l2()).collect();
            let h1: Vec<f64> = traj.states.iter().map(|s| s.hs(1.0)).collect();
            Ok((l2, h1))
        })
        .collect();
    let norms = norms?;
    let times: Vec<f64> = std::iter::once(0.0).chain(schedule.iter().cloned()).collect();

    let suffix_max = |series: &[f64]| {
        let mut suffix = vec![0.0; series.len()];
        let mut acc = 0.0_f64;
        for i in (0..series.len()).rev() {
            acc = acc.max(series[i]);
            suffix[i] = acc;
        }
        suffix
    };
    let cutoff = 0.8 * ensemble.horizon;
    // smallest level a trajectory permanently stays under, measured no
    // later than the cutoff so a tail remains to witness non-re-exit
    let resident_level = |series: &[f64]| {
        let suffix = suffix_max(series);
        let mut best = f64::INFINITY;
        for (i, &t) in times.iter().enumerate() {
            if t <= cutoff {
                best = best.min(suffix[i]);
            }
        }
        best
    };
    let radius_and_entries = |select: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Result<(f64, Vec<f64>)> {
        let levels: Vec<f64> = norms.iter().map(|p| resident_level(select(p))).collect();
        let worst = levels.iter().cloned().fold(0.0, f64::max);
        let radius = worst * 1.05 + 1e-14;
        // An absorbing level must not track the largest initial data: if
        // removing the top-magnitude trajectories shrinks it materially,
        // the transient is still running. Levels below the floor mean the
        // ensemble collapsed toward zero and the check is moot.
        let floor = 1e-4 * median_mag.max(1.0);
        if radius > floor {
            let reduced = norms
                .iter()
                .zip(&u0s)
                .filter(|(_, u0)| u0.norm_l2() < 0.99 * max_mag)
                .map(|(p, _)| resident_level(select(p)))
                .fold(0.0, f64::max);
            if reduced > 0.0 && reduced < 0.7 * worst {
                return Err(Error::Refusal(format!(
                    "horizon {} too short: the absorbing level {radius:.3e} still tracks the largest initial data",
                    ensemble.horizon
                )));
            }
        }
        let mut entries = Vec::new();
        for pair in &norms {
            let suffix = suffix_max(select(pair));
            let entry = times
                .iter()
                .enumerate()
                .find(|(i, _)| suffix[*i] <= radius)
                .map(|(_, t)| *t);
            match entry {
                Some(t) if t <= 0.9 * ensemble.horizon => entries.push(t),
                _ => {
                    return Err(Error::Refusal(format!(
                        "horizon {} too short: a trajectory never settles into radius {radius:.3e}",
                        ensemble.horizon
                    )))
                }
            }
        }
        Ok((radius, entries))
    };

    let (r_l2, entry_times_l2) = radius_and_entries(&|p| &p.0)?;
    let (r_h1, entry_times_h1) = radius_and_entries(&|p| &p.1)?;
    Ok(AbsorbingReport {
        r_l2,
        r_h1,
        entry_times_l2,
        entry_times_h1,
        horizon: ensemble.horizon,
    })
}

/// Long-run snapshot cloud sampled after burn-in.
#[derive(Debug, Clone)]
pub struct AttractorCloud {
    pub snapshots: Vec<SpectralField>,
    pub burn_in: f64,
    pub seed: u64,
    pub n_traj: usize,
    pub spacing: f64,
    /// flat coefficient indices (component-major) used for dimension work
    pub projection: Vec<usize>,
}

impl AttractorCloud {
    pub fn from_snapshots(snapshots: Vec<SpectralField>, projection_dims: usize) -> Self {
        let projection = leading_projection(&snapshots, projection_dims);
        AttractorCloud {
            snapshots,
            burn_in: 0.0,
            seed: 0,
            n_traj: 0,
            spacing: 0.0,
            projection,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.snapshots.iter().map(|s| s.norm_l2()).fold(0.0, f64::max)
    }

    pub fn min_distance_to(&self, u: &SpectralField) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.sub(u).norm_l2())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Leading coefficient indices by average energy over the snapshots.
fn leading_projection(snapshots: &[SpectralField], dims: usize) -> Vec<usize> {
    if snapshots.is_empty() {
        return Vec::new();
    }
    let len = snapshots[0].coeffs.len();
    let mut energy = vec![0.0_f64; len];
    for s in snapshots {
        for (e, c) in energy.iter_mut().zip(&s.coeffs) {
            *e += c * c;
        }
    }
    let mut idx: Vec<usize> = (0..len).collect();
    idx.sort_by(|&a, &b| energy[b].partial_cmp(&energy[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(dims.min(len));
    idx
}

/// Sample a snapshot cloud: n_traj trajectories burned in to t0, then
/// n_snap snapshots per trajectory at the given spacing (use 1/alpha_fit
/// for decorrelation).
pub fn sample_cloud(
    config: &EvolutionConfig,
    t0: f64,
    n_traj: usize,
    n_snap: usize,
    spacing: f64,
    seed: u64,
    magnitude_range: (f64, f64),
    projection_dims: usize,
) -> Result<AttractorCloud> {
    if n_traj == 0 || n_snap == 0 {
        return Err(Error::Argument("need at least one trajectory and one snapshot".into()));
    }
    if !(t0 > 0.0 && spacing > 0.0) {
        return Err(Error::Argument("burn-in and spacing must be positive".into()));
    }
    let total_t = t0 + spacing * n_snap as f64;
    let schedule: Vec<f64> = (1..=n_snap).map(|i| t0 + spacing * i as f64).collect();
    let snapshots: Result<Vec<Vec<SpectralField>>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mag = magnitude_range.0
                + (magnitude_range.1 - magnitude_range.0) * (i as f64 + 0.5) / n_traj as f64;
            let u0 = random_field_with_norm(config.grid, seed, i as u64, 1.0, mag);
            let traj = evolve(config, &u0, total_t, &schedule)?;
            Ok(traj.states[1..].to_vec())
        })
        .collect();
    let snapshots: Vec<SpectralField> = snapshots?.into_iter().flatten().collect();
    let projection = leading_projection(&snapshots, projection_dims);
    Ok(AttractorCloud {
        snapshots,
        burn_in: t0,
        seed,
        n_traj,
        spacing,
        projection,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionFit {
    pub dim: f64,
    pub r2: f64,
    /// (epsilon, box count) pairs actually used
    pub counts: Vec<(f64, usize)>,
    pub truncated: bool,
}

/// Box-counting dimension estimate on the projected snapshot cloud:
/// slope of log N(eps) against log(1/eps).
pub fn box_counting_dimension(cloud: &AttractorCloud, eps_range: &[f64]) -> Result<DimensionFit> {
    if cloud.snapshots.len() < 2 {
        return Err(Error::Refusal("need at least 2 snapshots".into()));
    }
    if eps_range.len() < 2 {
        return Err(Error::Argument("need at least two box sizes".into()));
    }
    let proj: Vec<Vec<f64>> = cloud
        .snapshots
        .iter()
        .map(|s| cloud.projection.iter().map(|&i| s.coeffs[i]).collect())
        .collect();
    let n_snap = proj.len();
    let mut counts = Vec::new();
    let mut truncated = false;
    for &eps in eps_range {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Argument(format!("box size must be positive, got {eps}")));
        }
        let mut boxes: HashSet<Vec<i64>> = HashSet::new();
        for p in &proj {
            let key: Vec<i64> = p.iter().map(|x| (x / eps).floor() as i64).collect();
            boxes.insert(key);
        }
        let count = boxes.len();
        if count * 2 > n_snap {
            // finer boxes than samples can fill: drop this scale
            truncated = true;
            continue;
        }
        counts.push((eps, count));
    }
    if counts.len() < 2 {
        return Err(Error::Refusal(
            "box counts defined at fewer than two scales; enlarge the cloud or coarsen eps_range".into(),
        ));
    }
    let xs: Vec<f64> = counts.iter().map(|(e, _)| 1.0 / e).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, n)| *n as f64).collect();
    let fit = loglog_slope(&xs, &ys).ok_or_else(|| Error::Refusal("degenerate box counts".into()))?;
    Ok(DimensionFit {
        dim: fit.slope,
        r2: fit.r2,
        counts,
        truncated,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub alpha_hat: f64,
    pub q_hat: f64,
    /// per-probe distance series (t, dist)
    pub distances: Vec<Vec<(f64, f64)>>,
}

/// Fit dist(u(t), cloud) <= Q e^{-alpha t} over a probe ensemble.
pub fn attraction_rate(
    config: &EvolutionConfig,
    cloud: &AttractorCloud,
    probes: &[SpectralField],
    horizon: f64,
    samples: usize,
) -> Result<RateFit> {
    if probes.is_empty() {
        return Err(Error::Refusal("no probes supplied".into()));
    }
    let schedule: Vec<f64> = (1..=samples).map(|i| horizon * i as f64 / samples as f64).collect();
    let distances: Result<Vec<Vec<(f64, f64)>>> = probes
        .par_iter()
        .map(|p| {
            let traj = evolve(config, p, horizon, &schedule)?;
            Ok(traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, s)| (t, cloud.min_distance_to(s)))
                .collect())
        })
        .collect();
    let distances = distances?;
    // refuse when distances do not decrease overall
    let mut improved = 0usize;
    for series in &distances {
        let first = series.first().unwrap().1;
        let last = series.last().unwrap().1;
        if last < 0.9 * first || first == 0.0 {
            improved += 1;
        }
    }
    if improved * 2 < distances.len() {
        return Err(Error::Refusal(
            "probe distances are not decreasing; the cloud is too sparse to act as an attractor surrogate".into(),
        ));
    }
    let floor = 1e-13
        * distances
            .iter()
            .flat_map(|s| s.iter().map(|(_, d)| *d))
            .fold(0.0, f64::max)
            .max(1e-300);
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for series in &distances {
        for &(t, d) in series {
            if t > 0.0 && d > floor {
                xs.push(t);
                zs.push(d.ln());
            }
        }
    }
    let fit = line_fit(&xs, &zs).ok_or_else(|| Error::Refusal("too few usable distance samples".into()))?;
    let alpha_hat = -fit.slope;
    let mut q_hat = fit.intercept.exp();
    for series in &distances {
        for &(t, d) in series {
            let env = q_hat * (-alpha_hat * t).exp();
            if env < d {
                q_hat *= d / env;
            }
        }
    }
    Ok(RateFit {
        alpha_hat,
        q_hat,
        distances,
    })
}
