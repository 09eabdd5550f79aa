//! Experiment configuration: everything needed to reconstruct a run.
//! Round-trips losslessly through JSON; validated before any computation;
//! every run output embeds the resolved config.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use monodiss_core::ensemble::{power_law_field, random_field_with_norm};
use monodiss_core::evolution::{EvolutionConfig, Scheme};
use monodiss_core::{Builtin, Error, Grid, NonlinearSpec, Result, SpectralField};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NonlinearityConfig {
    #[serde(flatten)]
    pub builtin: Builtin,
    /// auxiliary growth exponent for the approximating sequence f_n
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<NonlinearSpec> {
        self.builtin.build()
    }
}

/// One modal amplitude of a field specification.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModeAmp {
    pub mode: Vec<usize>,
    #[serde(default)]
    pub component: usize,
    pub amp: f64,
}

/// Specification of a field (initial data or forcing).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldConfig {
    Zero,
    Modes { modes: Vec<ModeAmp> },
    /// seeded random field with prescribed L^2 norm and spectral decay
    Random { magnitude: f64, decay: f64, #[serde(default)] stream: u64 },
    /// coefficients |m|^(-power) with seeded signs (rough data)
    PowerLaw { power: f64 },
}

impl FieldConfig {
    pub fn build(&self, grid: Grid, seed: u64) -> Result<SpectralField> {
        match self {
            FieldConfig::Zero => Ok(SpectralField::zeros(grid)),
            FieldConfig::Modes { modes } => {
                let mut f = SpectralField::zeros(grid);
                for m in modes {
                    let single = SpectralField::single_mode(grid, m.component, &m.mode, m.amp)?;
                    f.axpy(1.0, &single);
                }
                Ok(f)
            }
            FieldConfig::Random { magnitude, decay, stream } => {
                Ok(random_field_with_norm(grid, seed, *stream, *decay, *magnitude))
            }
            FieldConfig::PowerLaw { power } => Ok(power_law_field(grid, *power, seed)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScheduleConfig {
    /// n evenly spaced samples over (0, T]
    Linear { n: usize },
    /// log-spaced samples from t_min to T
    Log { t_min: f64, per_decade: usize },
    Times { times: Vec<f64> },
}

impl ScheduleConfig {
    pub fn build(&self, t_final: f64) -> Result<Vec<f64>> {
        match self {
            ScheduleConfig::Linear { n } => {
                if *n == 0 {
                    return Err(Error::config("schedule.n", "need at least one sample"));
                }
                Ok((1..=*n).map(|i| t_final * i as f64 / *n as f64).collect())
            }
            ScheduleConfig::Log { t_min, per_decade } => {
                if !(*t_min > 0.0 && *t_min < t_final) {
                    return Err(Error::config("schedule.t_min", "must lie in (0, T)"));
                }
                if *per_decade == 0 {
                    return Err(Error::config("schedule.per_decade", "must be positive"));
                }
                Ok(monodiss_core::diagnostics::log_schedule(*t_min, t_final, *per_decade))
            }
            ScheduleConfig::Times { times } => {
                if times.is_empty() {
                    return Err(Error::config("schedule.times", "must be nonempty"));
                }
                Ok(times.clone())
            }
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_r() -> f64 {
    0.2
}

/// Full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Grid,
    /// dense k x k diffusion matrix, row-major rows
    pub a: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearityConfig>,
    pub g: FieldConfig,
    pub u0: FieldConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub schedule: ScheduleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// exponent r of the L^{r+2} derivative functional
    #[serde(default = "default_r")]
    pub r_exponent: f64,
    /// write JSON field snapshots at (the nearest samples to) these times
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    /// parameters of the `attractor` subcommand
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorParams>,
    /// optional parameter sweep: config-path -> list of values
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<serde_json::Map<String, serde_json::Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AttractorParams {
    pub magnitudes: Vec<f64>,
    pub per_magnitude: usize,
    pub horizon: f64,
    pub burn_in: f64,
    pub n_traj: usize,
    pub n_snap: usize,
    pub spacing: f64,
    pub eps_range: Vec<f64>,
    #[serde(default)]
    pub probes: usize,
    #[serde(default = "default_probe_horizon")]
    pub probe_horizon: f64,
}

fn default_probe_horizon() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::config("<config>", format!("malformed JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid.d, self.grid.len, self.grid.n, self.grid.k)?;
        let k = self.grid.k;
        if self.a.len() != k || self.a.iter().any(|row| row.len() != k) {
            return Err(Error::config("a", format!("diffusion matrix must be {k}x{k}")));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt", "time step must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::config("t_final", "final time must be positive"));
        }
        if let Some(nl) = &self.nonlinearity {
            let spec = nl.build()?;
            if let Some(p1) = nl.p1 {
                if p1 <= spec.growth_exponent {
                    return Err(Error::config(
                        "nonlinearity.p1",
                        format!("p1 = {p1} must exceed the growth exponent {}", spec.growth_exponent),
                    ));
                }
            }
        }
        self.schedule.build(self.t_final)?;
        Ok(())
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        let k = self.grid.k;
        let flat: Vec<f64> = self.a.iter().flatten().cloned().collect();
        DMatrix::from_row_slice(k, k, &flat)
    }

    /// Build the runtime evolution config. `seed` must already be resolved.
    pub fn evolution(&self, seed: u64) -> Result<EvolutionConfig> {
        let f = match &self.nonlinearity {
            Some(nl) => Some(nl.build()?),
            None => None,
        };
        let g = self.g.build(self.grid, seed.wrapping_add(0x9E37))?;
        EvolutionConfig::new(
            self.grid,
            self.a_matrix(),
            f,
            g,
            self.alpha,
            self.beta,
            self.scheme,
            self.dt,
        )
    }

    pub fn initial_state(&self, seed: u64) -> Result<SpectralField> {
        self.u0.build(self.grid, seed)
    }
}
