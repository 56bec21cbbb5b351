//! TOML run configuration with explicit units.
//!
//! Frequencies are strings of the form `"<factors> <unit>"`:
//!
//! * `"78 kHz"`: an ordinary frequency, converted to 2π × 78 kHz.
//! * `"pi*78 kHz"`, `"2*pi*500 MHz"`: a literal angular frequency; the
//!   written factors (including π) are taken as given, in rad/s.
//! * `"0.245 rad/us"`, `"1e5 rad/s"`: raw angular frequencies.
//!
//! Times take `s`, `ms`, `us` (or `μs`) and `ns`. Unknown keys are rejected.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use pnin_core::oracle::{Integrator, OracleConfig};
use pnin_core::spectro::{thermal_doppler_sigma, VelocityGrid, DEFAULT_POINTS_PER_SIDE};
use pnin_core::trace::DetrendWindow;
use pnin_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Angular frequency in rad/μs, parsed from a unit-suffixed string.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub struct Frequency(pub f64);

/// Duration in μs, parsed from a unit-suffixed string.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub struct Time(pub f64);

fn split_quantity(s: &str) -> Result<(f64, bool, &str), String> {
    let s = s.trim();
    let (expr, unit) = s
        .rsplit_once(char::is_whitespace)
        .ok_or_else(|| format!("`{s}` has no unit suffix"))?;
    let mut value = 1.0;
    let mut has_pi = false;
    for factor in expr.split('*').map(str::trim) {
        match factor {
            "pi" | "π" => {
                value *= PI;
                has_pi = true;
            }
            f => {
                value *= f
                    .parse::<f64>()
                    .map_err(|_| format!("`{f}` in `{s}` is not a number"))?;
            }
        }
    }
    if !value.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok((value, has_pi, unit.trim()))
}

pub fn parse_frequency(s: &str) -> Result<f64, String> {
    let (value, has_pi, unit) = split_quantity(s)?;
    // cycles per μs or radians per μs
    let (scale, ordinary) = match unit {
        "Hz" => (1e-6, true),
        "kHz" => (1e-3, true),
        "MHz" => (1.0, true),
        "GHz" => (1e3, true),
        "rad/s" => (1e-6, false),
        "rad/ms" => (1e-3, false),
        "rad/us" | "rad/μs" => (1.0, false),
        u => return Err(format!("unknown frequency unit `{u}` in `{s}`")),
    };
    let angular = if ordinary && !has_pi { TAU } else { 1.0 };
    Ok(value * scale * angular)
}

pub fn parse_time(s: &str) -> Result<f64, String> {
    let (value, _, unit) = split_quantity(s)?;
    let scale = match unit {
        "s" => 1e6,
        "ms" => 1e3,
        "us" | "μs" => 1.0,
        "ns" => 1e-3,
        u => return Err(format!("unknown time unit `{u}` in `{s}`")),
    };
    Ok(value * scale)
}

impl TryFrom<String> for Frequency {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        parse_frequency(&s).map(Frequency)
    }
}

impl TryFrom<String> for Time {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        parse_time(&s).map(Time)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    variance_floor: Option<f64>,
    model: Option<RawModel>,
    #[serde(default)]
    sweep: RawSweep,
    oracle: Option<RawOracle>,
    doppler: Option<RawDoppler>,
    eit: Option<RawEit>,
    #[serde(default)]
    analyze: RawAnalyze,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    rabi: Frequency,
    one_photon_detuning: Option<Frequency>,
    two_photon_detuning: Option<Frequency>,
    excited_decay: Frequency,
    ground_coh_decay: Frequency,
    /// Defaults to `ground_coh_decay`.
    ground_pop_decay: Option<Frequency>,
    laser_hwhm: Frequency,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    delta: Option<Vec<Frequency>>,
    points_per_side: Option<usize>,
    rabi: Option<Vec<Frequency>>,
    laser_hwhm: Option<Vec<Frequency>>,
    rabi_saturating: Option<Frequency>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    time_step: Time,
    total_time: Time,
    burn_in: Time,
    trajectories: usize,
    additive_noise_rms: Option<f64>,
    integrator: Option<Integrator>,
    sample_every: Option<usize>,
    blocks_per_trajectory: Option<usize>,
    bootstrap_resamples: Option<usize>,
    /// Two-photon detunings to validate; defaults to the model value.
    delta: Option<Vec<Frequency>>,
    #[serde(default)]
    emit_traces: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoppler {
    classes: usize,
    excited_decay: Frequency,
    sigma: Option<Frequency>,
    temperature_k: Option<f64>,
    wavelength_nm: Option<f64>,
    mass_amu: Option<f64>,
    span_sigmas: Option<f64>,
    points_per_side: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEit {
    rabi: Option<Vec<Frequency>>,
    degree: Option<usize>,
    points_per_side: Option<usize>,
    /// μW per (rad/μs)², used only to label the power axis.
    power_calibration: Option<f64>,
    data: Option<RawEitData>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEitData {
    power: Vec<f64>,
    fwhm: Vec<Frequency>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalyze {
    /// `"global"` or a moving-average window such as `"50 us"`.
    detrend: Option<String>,
    blocks: Option<usize>,
    resamples: Option<usize>,
}

/// Detuning grid of a spectrum command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaGrid {
    Explicit(Vec<f64>),
    Adaptive { points_per_side: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub delta: DeltaGrid,
    pub rabi: Option<Vec<f64>>,
    pub laser_hwhm: Option<Vec<f64>>,
    pub rabi_saturating: Option<f64>,
    pub points_per_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSection {
    pub config: OracleConfig,
    pub delta: Vec<f64>,
    pub emit_traces: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DopplerSection {
    pub velocity: VelocityGrid,
    pub excited_decay: f64,
    pub points_per_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EitSection {
    pub rabi: Vec<f64>,
    pub degree: usize,
    pub points_per_side: usize,
    pub power_calibration: Option<f64>,
    /// Measured (power, FWHM in rad/μs) pairs to extrapolate instead of
    /// solver widths.
    pub data: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeSection {
    pub detrend: DetrendSetting,
    pub blocks: usize,
    pub resamples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetrendSetting {
    Global,
    MovingWindowUs(f64),
}

impl DetrendSetting {
    pub fn window(self) -> DetrendWindow {
        match self {
            DetrendSetting::Global => DetrendWindow::Global,
            DetrendSetting::MovingWindowUs(w) => DetrendWindow::Moving(w),
        }
    }
}

/// Fully resolved configuration. All frequencies are in rad/μs and all
/// times in μs; this is the form embedded in every output sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub units: &'static str,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub variance_floor: f64,
    pub model: Option<ModelParams>,
    pub sweep: SweepConfig,
    pub oracle: Option<OracleSection>,
    pub doppler: Option<DopplerSection>,
    pub eit: Option<EitSection>,
    pub analyze: AnalyzeSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display())).at(path, None)
        })?;
        RunConfig::parse(&text).map_err(|e| e.at(path, None))
    }

    pub fn parse(text: &str) -> CliResult<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        resolve(raw)
    }

    pub fn model(&self) -> CliResult<ModelParams> {
        self.model
            .ok_or_else(|| CliError::config("this command needs a [model] section"))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(o) = self.oracle.as_mut() {
            o.config.seed = seed;
        }
        self
    }
}

fn list(v: Option<Vec<Frequency>>) -> Option<Vec<f64>> {
    v.map(|v| v.into_iter().map(|f| f.0).collect())
}

fn resolve(raw: RawConfig) -> CliResult<RunConfig> {
    let seed = raw.seed.unwrap_or(0);
    let model = raw.model.map(|m| ModelParams {
        rabi: m.rabi.0,
        one_photon_detuning: m.one_photon_detuning.map_or(0.0, |f| f.0),
        two_photon_detuning: m.two_photon_detuning.map_or(0.0, |f| f.0),
        excited_decay: m.excited_decay.0,
        ground_pop_decay: m.ground_pop_decay.unwrap_or(m.ground_coh_decay).0,
        ground_coh_decay: m.ground_coh_decay.0,
        laser_hwhm: m.laser_hwhm.0,
    });
    if let Some(m) = &model {
        m.validate()?;
    }

    let points_per_side = raw.sweep.points_per_side.unwrap_or(DEFAULT_POINTS_PER_SIDE);
    if points_per_side == 0 {
        return Err(CliError::config("sweep.points_per_side must be >= 1"));
    }
    let delta = match list(raw.sweep.delta) {
        Some(mut d) => {
            d.sort_by(f64::total_cmp);
            d.dedup();
            DeltaGrid::Explicit(d)
        }
        None => DeltaGrid::Adaptive { points_per_side },
    };
    let sweep = SweepConfig {
        delta,
        rabi: list(raw.sweep.rabi),
        laser_hwhm: list(raw.sweep.laser_hwhm),
        rabi_saturating: raw.sweep.rabi_saturating.map(|f| f.0),
        points_per_side,
    };

    let oracle = raw.oracle.map(|o| {
        let defaults = OracleConfig::default();
        OracleSection {
            config: OracleConfig {
                time_step: o.time_step.0,
                total_time: o.total_time.0,
                burn_in: o.burn_in.0,
                trajectories: o.trajectories,
                seed,
                additive_noise_rms: o.additive_noise_rms.unwrap_or(0.0),
                integrator: o.integrator.unwrap_or(defaults.integrator),
                sample_every: o.sample_every.unwrap_or(defaults.sample_every),
                blocks_per_trajectory: o
                    .blocks_per_trajectory
                    .unwrap_or(defaults.blocks_per_trajectory),
                bootstrap_resamples: o
                    .bootstrap_resamples
                    .unwrap_or(defaults.bootstrap_resamples),
                phase_refinement: 0,
            },
            delta: list(o.delta)
                .unwrap_or_else(|| vec![model.map_or(0.0, |m| m.two_photon_detuning)]),
            emit_traces: o.emit_traces,
        }
    });

    let doppler = match raw.doppler {
        None => None,
        Some(d) => {
            let sigma = match (d.sigma, d.temperature_k, d.wavelength_nm, d.mass_amu) {
                (Some(s), None, None, None) => s.0,
                (None, Some(t), Some(l), Some(m)) => thermal_doppler_sigma(l, m, t),
                _ => {
                    return Err(CliError::config(
                        "doppler needs either `sigma` or all of `temperature_k`, `wavelength_nm`, `mass_amu`",
                    ))
                }
            };
            let mut velocity = VelocityGrid::new(d.classes, sigma);
            if let Some(s) = d.span_sigmas {
                velocity.span_sigmas = s;
            }
            velocity.nodes()?;
            Some(DopplerSection {
                velocity,
                excited_decay: d.excited_decay.0,
                points_per_side: d.points_per_side.unwrap_or(40),
            })
        }
    };

    let eit = match raw.eit {
        None => None,
        Some(e) => {
            let data = match e.data {
                Some(d) if d.power.len() != d.fwhm.len() => {
                    return Err(CliError::config(format!(
                        "eit.data has {} powers but {} widths",
                        d.power.len(),
                        d.fwhm.len()
                    )))
                }
                Some(d) => Some((d.power, d.fwhm.into_iter().map(|f| f.0).collect())),
                None => None,
            };
            Some(EitSection {
                rabi: list(e.rabi).unwrap_or_default(),
                degree: e.degree.unwrap_or(2),
                points_per_side: e.points_per_side.unwrap_or(100),
                power_calibration: e.power_calibration,
                data,
            })
        }
    };

    let detrend = match raw.analyze.detrend.as_deref().map(str::trim) {
        None | Some("global") => DetrendSetting::Global,
        Some(w) => DetrendSetting::MovingWindowUs(
            parse_time(w).map_err(|e| CliError::config(format!("analyze.detrend: {e}")))?,
        ),
    };
    let analyze = AnalyzeSection {
        detrend,
        blocks: raw.analyze.blocks.unwrap_or(50),
        resamples: raw.analyze.resamples.unwrap_or(200),
    };
    if analyze.blocks == 0 {
        return Err(CliError::config("analyze.blocks must be >= 1"));
    }

    Ok(RunConfig {
        units: "frequencies in rad/us, times in us",
        seed,
        output_dir: raw.output_dir,
        variance_floor: raw
            .variance_floor
            .unwrap_or(pnin_core::moments::DEFAULT_VARIANCE_FLOOR),
        model,
        sweep,
        oracle,
        doppler,
        eit,
        analyze,
    })
}
