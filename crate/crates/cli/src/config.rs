//! JSON experiment config. Physical quantities are strings with a unit suffix
//! (`"5000um"`, `"63rad/s"`, `"150Hz"`, `"2s"`); command-line flags override
//! the file field by field.

use std::path::Path;

use resetq::linear::{discretize, Discretization};
use resetq::metrics::{AmplitudePolicy, LoopSetup, SteadyStatePolicy};
use resetq::presets::{self, PlantTf};
use resetq::reset::cglp_pid;
use resetq::scalar::logspace;
use resetq::sim::{NoiseSpec, QuantizerSpec, Reference};
use resetq::{CgLpPidParams, TimeRegularization};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::units::{self, Dim};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub preset: Option<String>,
    /// Replaces the preset plant; coefficients in SI units.
    pub plant: Option<PlantTf>,
    pub controller: Option<ControllerOverrides>,
    pub gamma: Option<f64>,
    pub gain_scale: Option<f64>,
    pub fs: Option<String>,
    pub fc: Option<String>,
    pub quantizer: Option<QuantizerConfig>,
    pub noise: Option<NoiseConfig>,
    pub tr: Option<TrConfig>,
    pub reference: Option<ReferenceConfig>,
    pub amplitude: Option<String>,
    pub duration: Option<String>,
    pub grid: Option<GridConfig>,
    pub ks: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerOverrides {
    pub k: Option<f64>,
    pub wc: Option<String>,
    pub wi: Option<String>,
    pub wd: Option<String>,
    pub wt: Option<String>,
    pub wra: Option<String>,
    pub wr: Option<String>,
    pub wf: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerConfig {
    pub q: Option<String>,
    pub range: Option<String>,
    pub bits: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub amplitude: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrConfig {
    pub k: Option<f64>,
    pub rho: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// `sine`, `step` or `zero`.
    pub kind: String,
    pub frequency: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub f_min: Option<String>,
    pub f_max: Option<String>,
    pub points: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// `key=value` pairs separated by spaces or commas.
fn pairs(spec: &str) -> Result<Vec<(&str, &str)>, CliError> {
    spec.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| CliError::config(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

/// `bits=9 range=5000um`, `q=10nm` or `none`.
pub fn parse_quantizer_flag(spec: &str) -> Result<Option<QuantizerConfig>, CliError> {
    if spec.trim() == "none" {
        return Ok(None);
    }
    let mut q = QuantizerConfig::default();
    for (k, v) in pairs(spec)? {
        match k {
            "q" => q.q = Some(v.into()),
            "range" => q.range = Some(v.into()),
            "bits" => {
                q.bits = Some(v.parse().map_err(|_| CliError::config(format!("bad bits `{v}`")))?)
            }
            _ => return Err(CliError::config(format!("unknown quantizer key `{k}`"))),
        }
    }
    Ok(Some(q))
}

/// `k=2.5`, `rho=1ms` or `none`.
pub fn parse_tr_flag(spec: &str) -> Result<Option<TrConfig>, CliError> {
    if spec.trim() == "none" {
        return Ok(None);
    }
    let mut tr = TrConfig::default();
    for (k, v) in pairs(spec)? {
        match k {
            "k" => tr.k = Some(v.parse().map_err(|_| CliError::config(format!("bad k `{v}`")))?),
            "rho" => tr.rho = Some(v.into()),
            _ => return Err(CliError::config(format!("unknown tr key `{k}`"))),
        }
    }
    Ok(Some(tr))
}

/// `sin:63rad`, `sin:10Hz`, `step` or `zero`.
pub fn parse_reference_flag(spec: &str) -> Result<ReferenceConfig, CliError> {
    let (kind, freq) = match spec.split_once(':') {
        Some((k, f)) => (k, Some(f.to_string())),
        None => (spec, None),
    };
    let kind = match kind {
        "sin" | "sine" => "sine",
        "step" => "step",
        "zero" => "zero",
        _ => return Err(CliError::config(format!("unknown reference `{spec}`"))),
    };
    Ok(ReferenceConfig {
        kind: kind.into(),
        frequency: freq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "by", rename_all = "lowercase")]
pub enum TrChoice {
    /// Holding time `1 / (2 k f_c)`.
    K { k: f64 },
    Rho { rho: f64 },
}

/// Fully resolved system, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct System {
    pub preset: String,
    pub plant: PlantTf,
    pub controller: CgLpPidParams,
    pub fs: f64,
    pub fc_hz: f64,
    pub quantizer: Option<QuantizerSpec<f64>>,
    pub noise: Option<NoiseSpec<f64>>,
    pub tr: Option<TrChoice>,
}

impl System {
    pub fn from_config(cfg: &Config) -> Result<Self, CliError> {
        let name = cfg
            .preset
            .as_deref()
            .ok_or_else(|| CliError::config("no preset given (--preset or \"preset\")"))?;
        let base = presets::by_name(name).ok_or_else(|| {
            CliError::config(format!(
                "unknown preset `{name}` (known: {})",
                presets::NAMES.join(", ")
            ))
        })?;
        let mut controller = base.controller;
        if let Some(o) = &cfg.controller {
            let w = |v: &Option<String>, cur: f64| -> Result<f64, CliError> {
                v.as_deref()
                    .map_or(Ok(cur), |s| units::parse(s, Dim::AngularFrequency))
            };
            controller.k = o.k.unwrap_or(controller.k);
            controller.wc = w(&o.wc, controller.wc)?;
            controller.wi = w(&o.wi, controller.wi)?;
            controller.wd = w(&o.wd, controller.wd)?;
            controller.wt = w(&o.wt, controller.wt)?;
            controller.wra = w(&o.wra, controller.wra)?;
            controller.wr = w(&o.wr, controller.wr)?;
            controller.wf = w(&o.wf, controller.wf)?;
        }
        if let Some(g) = cfg.gamma {
            controller = controller.with_gamma(g);
        }
        if let Some(s) = cfg.gain_scale {
            controller = controller.with_gain_scale(s);
        }
        controller.validate()?;

        let fs = cfg.fs.as_deref().map_or(Ok(base.fs), units::parse_hz)?;
        let fc_hz = cfg.fc.as_deref().map_or(Ok(base.fc_hz), units::parse_hz)?;
        let quantizer = cfg
            .quantizer
            .as_ref()
            .map(|q| resolve_quantizer(q, base.sensor_range))
            .transpose()?;
        let noise = cfg
            .noise
            .as_ref()
            .map(|n| {
                Ok::<_, CliError>(NoiseSpec {
                    max_amplitude: units::parse(&n.amplitude, Dim::Length)?,
                    seed: cfg.seed.or(n.seed).unwrap_or(0),
                })
            })
            .transpose()?;
        let tr = cfg.tr.as_ref().map(resolve_tr).transpose()?;
        Ok(Self {
            preset: base.name,
            plant: cfg.plant.clone().unwrap_or(base.plant),
            controller,
            fs,
            fc_hz,
            quantizer,
            noise,
            tr,
        })
    }

    pub fn time_regularization(&self) -> Result<TimeRegularization, CliError> {
        Ok(match self.tr {
            None => TimeRegularization::none(),
            Some(TrChoice::K { k }) => TimeRegularization::from_bandwidth(self.fc_hz, k, self.fs)?,
            Some(TrChoice::Rho { rho }) => TimeRegularization::new(rho, self.fs)?,
        })
    }

    /// ZOH plant and the discrete controller with the configured holding time.
    pub fn loop_setup(&self) -> Result<LoopSetup<f64>, CliError> {
        let plant = discretize(&self.plant.model(), 1.0 / self.fs, Discretization::Zoh)?;
        let (mut controller, _) = cglp_pid(&self.controller, self.fs)?;
        controller.set_time_regularization(self.time_regularization()?);
        Ok(LoopSetup {
            plant,
            controller,
            quantizer: self.quantizer,
            noise: self.noise,
        })
    }
}

fn resolve_quantizer(q: &QuantizerConfig, sensor_range: Option<f64>) -> Result<QuantizerSpec<f64>, CliError> {
    match (&q.q, q.bits) {
        (Some(level), None) if q.range.is_none() => {
            Ok(QuantizerSpec::with_level(units::parse(level, Dim::Length)?)?)
        }
        (None, Some(bits)) => {
            let range = match &q.range {
                Some(r) => units::parse(r, Dim::Length)?,
                None => sensor_range
                    .ok_or_else(|| CliError::config("quantizer bits given without a range"))?,
            };
            Ok(QuantizerSpec::from_range_bits(range, bits)?)
        }
        _ => Err(CliError::config(
            "quantizer needs either q=LEVEL or bits=N (with range=R unless the preset has one)",
        )),
    }
}

fn resolve_tr(tr: &TrConfig) -> Result<TrChoice, CliError> {
    match (tr.k, &tr.rho) {
        (Some(k), None) => Ok(TrChoice::K { k }),
        (None, Some(rho)) => Ok(TrChoice::Rho {
            rho: units::parse(rho, Dim::Time)?,
        }),
        _ => Err(CliError::config("time regularization needs exactly one of k or rho")),
    }
}

/// Reference signal and its frequency in Hz when sinusoidal.
pub fn resolve_reference(cfg: &Config, default_amplitude: f64) -> Result<(Reference<f64>, Option<f64>), CliError> {
    let amplitude = cfg
        .amplitude
        .as_deref()
        .map_or(Ok(default_amplitude), |a| units::parse(a, Dim::Length))?;
    let r = match &cfg.reference {
        None => return Ok((Reference::Zero, None)),
        Some(r) => r,
    };
    match r.kind.as_str() {
        "zero" => Ok((Reference::Zero, None)),
        "step" => Ok((Reference::Step { amplitude }, None)),
        "sine" => {
            let f = r
                .frequency
                .as_deref()
                .ok_or_else(|| CliError::config("sine reference needs a frequency"))?;
            let omega = units::parse(f, Dim::AngularFrequency)?;
            if !(omega > 0.0) {
                return Err(CliError::config("reference frequency must be positive"));
            }
            Ok((
                Reference::Sine { amplitude, omega },
                Some(omega / std::f64::consts::TAU),
            ))
        }
        other => Err(CliError::config(format!("unknown reference kind `{other}`"))),
    }
}

pub fn resolve_duration(cfg: &Config, default: f64) -> Result<f64, CliError> {
    let d = cfg
        .duration
        .as_deref()
        .map_or(Ok(default), |d| units::parse(d, Dim::Time))?;
    if !(d > 0.0) {
        return Err(CliError::config("duration must be positive"));
    }
    Ok(d)
}

/// Frequency grid in Hz; defaults to 40 log points over 0.5 to 300 Hz.
pub fn resolve_grid(cfg: &Config) -> Result<Vec<f64>, CliError> {
    let g = cfg.grid.clone().unwrap_or_default();
    let lo = g.f_min.as_deref().map_or(Ok(0.5), units::parse_hz)?;
    let hi = g.f_max.as_deref().map_or(Ok(300.0), units::parse_hz)?;
    let n = g.points.unwrap_or(40);
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(CliError::config("grid needs 0 < f_min < f_max and at least 2 points"));
    }
    Ok(logspace(lo, hi, n))
}

pub fn amplitude_policy(cfg: &Config, default: f64) -> Result<AmplitudePolicy<f64>, CliError> {
    let a = cfg
        .amplitude
        .as_deref()
        .map_or(Ok(default), |a| units::parse(a, Dim::Length))?;
    if !(a > 0.0) {
        return Err(CliError::config("amplitude must be positive"));
    }
    Ok(AmplitudePolicy::constant(a))
}

pub fn steady_state() -> SteadyStatePolicy<f64> {
    SteadyStatePolicy::default()
}
