use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{ChannelConfig, DEFAULT_PATHS, DEFAULT_SPACING, DEFAULT_WAVELENGTH};
use crate::error::{Error, Result};
use crate::frontend::McConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// High-SNR capacity slope for the atomic, in-phase and phase-known links.
    DofSlope,
    /// Monte-Carlo MI of the magnitude model against the linearized closed form.
    MiVsRsnr,
    /// Digital and hybrid rates against receive SNR.
    RateVsSnr,
    /// Digital and hybrid rates against the number of receive antennas.
    RateVsNr,
    /// Objective traces of the FC and SC hybrid designs.
    Convergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::DofSlope,
        ExperimentKind::MiVsRsnr,
        ExperimentKind::RateVsSnr,
        ExperimentKind::RateVsNr,
        ExperimentKind::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DofSlope => "dof_slope",
            ExperimentKind::MiVsRsnr => "mi_vs_rsnr",
            ExperimentKind::RateVsSnr => "rate_vs_snr",
            ExperimentKind::RateVsNr => "rate_vs_nr",
            ExperimentKind::Convergence => "convergence",
        }
    }

    pub fn axis(self) -> SweepAxis {
        match self {
            ExperimentKind::DofSlope => SweepAxis::SnrDb,
            ExperimentKind::MiVsRsnr => SweepAxis::RsnrDb,
            ExperimentKind::RateVsSnr => SweepAxis::ReceiveSnrDb,
            ExperimentKind::RateVsNr => SweepAxis::Nr,
            ExperimentKind::Convergence => SweepAxis::NRf,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::DofSlope => {
                "capacity slope vs log2(P/sigma^2) for atomic, in-phase and phase-known links"
            }
            ExperimentKind::MiVsRsnr => {
                "nonlinear Monte-Carlo MI vs linearized MI over the reference strength"
            }
            ExperimentKind::RateVsSnr => {
                "IQ-aware/classical digital and FC/SC hybrid rates vs receive SNR"
            }
            ExperimentKind::RateVsNr => {
                "IQ-aware/classical digital and FC/SC hybrid rates vs receive antennas"
            }
            ExperimentKind::Convergence => {
                "alternating-minimization objective traces of the hybrid designs"
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `10 log10(P / sigma^2)`.
    SnrDb,
    RsnrDb,
    ReceiveSnrDb,
    Nr,
    NRf,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::RsnrDb => "rsnr_db",
            SweepAxis::ReceiveSnrDb => "receive_snr_db",
            SweepAxis::Nr => "nr",
            SweepAxis::NRf => "n_rf",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, SweepAxis::Nr | SweepAxis::NRf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub paths: usize,
    pub wavelength: f64,
    pub spacing: f64,
    pub noise_variance: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            paths: DEFAULT_PATHS,
            wavelength: DEFAULT_WAVELENGTH,
            spacing: DEFAULT_SPACING,
            noise_variance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub nt: usize,
    pub nr: usize,
    #[serde(default = "one")]
    pub ns: usize,
    #[serde(default = "one")]
    pub n_rf: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    /// Results file; summary and trace files are written next to it.
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSettings {
    pub samples: usize,
    pub inner: usize,
    pub batches: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        let d = McConfig::default();
        McSettings {
            samples: d.samples,
            inner: d.inner,
            batches: d.batches,
        }
    }
}

impl McSettings {
    pub fn to_config(&self) -> McConfig {
        McConfig {
            samples: self.samples,
            inner: self.inner,
            batches: self.batches,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Fc,
    Sc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HybridSettings {
    pub architectures: Vec<ArchitectureKind>,
    pub tol: f64,
    pub fc_max_iter: usize,
    pub sc_max_iter: usize,
    pub restarts: usize,
}

impl Default for HybridSettings {
    fn default() -> Self {
        HybridSettings {
            architectures: vec![ArchitectureKind::Fc, ArchitectureKind::Sc],
            tol: 1e-6,
            fc_max_iter: 500,
            sc_max_iter: 100,
            restarts: 1,
        }
    }
}

impl HybridSettings {
    pub fn has(&self, kind: ArchitectureKind) -> bool {
        self.architectures.contains(&kind)
    }
}

/// One experiment, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub channel: ChannelParams,
    pub dims: Dims,
    pub sweep: Sweep,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSettings,
    /// Target RSNR for experiments that do not sweep it.
    #[serde(default = "default_rsnr")]
    pub rsnr_db: f64,
    /// Target receive SNR for experiments that do not sweep it.
    #[serde(default)]
    pub receive_snr_db: f64,
    /// `P / sigma^2` for the convergence experiment.
    #[serde(default)]
    pub snr_db: f64,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub hybrid: HybridSettings,
}

fn default_trials() -> usize {
    1000
}

fn default_rsnr() -> f64 {
    20.0
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Channel model for `nr` receive antennas.
    pub fn channel_config(&self, nr: usize) -> ChannelConfig {
        ChannelConfig {
            nt: self.dims.nt,
            nr,
            paths: self.channel.paths,
            wavelength: self.channel.wavelength,
            spacing: self.channel.spacing,
            noise_variance: self.channel.noise_variance,
            ..ChannelConfig::default()
        }
    }

    /// Receive-antenna counts visited by the sweep.
    pub fn nr_values(&self) -> Vec<usize> {
        if self.sweep.axis == SweepAxis::Nr {
            self.sweep.grid.iter().map(|&v| v as usize).collect()
        } else {
            vec![self.dims.nr]
        }
    }

    fn n_rf_values(&self) -> Vec<usize> {
        if self.sweep.axis == SweepAxis::NRf {
            self.sweep.grid.iter().map(|&v| v as usize).collect()
        } else {
            vec![self.dims.n_rf]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let grid = &self.sweep.grid;
        if grid.is_empty() {
            return Err(Error::config("sweep.grid", "must not be empty"));
        }
        if self.sweep.axis != kind.axis() {
            return Err(Error::config(
                "sweep.axis",
                format!(
                    "{kind} sweeps `{}`, got `{}`",
                    kind.axis().name(),
                    self.sweep.axis.name()
                ),
            ));
        }
        for (i, v) in grid.iter().enumerate() {
            finite(&format!("sweep.grid[{i}]"), *v)?;
            if self.sweep.axis.is_count() && (v.fract() != 0.0 || *v < 1.0) {
                return Err(Error::config(
                    format!("sweep.grid[{i}]"),
                    format!(
                        "`{}` values must be positive integers, got {v}",
                        self.sweep.axis.name()
                    ),
                ));
            }
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("sweep.grid", "must be strictly increasing"));
        }
        if kind == ExperimentKind::DofSlope && grid.len() < 2 {
            return Err(Error::config(
                "sweep.grid",
                "slope estimation needs at least 2 points",
            ));
        }
        for nr in self.nr_values() {
            self.channel_config(nr).validate().map_err(|e| match e {
                Error::Config { path, message } => {
                    let prefix = if path == "nt" || path == "nr" {
                        "dims"
                    } else {
                        "channel"
                    };
                    Error::config(format!("{prefix}.{path}"), message)
                }
                other => other,
            })?;
        }
        for (path, v) in [
            ("rsnr_db", self.rsnr_db),
            ("receive_snr_db", self.receive_snr_db),
            ("snr_db", self.snr_db),
        ] {
            finite(path, v)?;
        }
        let d = &self.dims;
        if d.ns == 0 {
            return Err(Error::config("dims.ns", "must be at least 1"));
        }
        match kind {
            ExperimentKind::DofSlope => {}
            ExperimentKind::MiVsRsnr => {
                let mc = &self.mc;
                if mc.batches < 2 {
                    return Err(Error::config("mc.batches", "must be at least 2"));
                }
                if mc.inner == 0 {
                    return Err(Error::config("mc.inner", "must be at least 1"));
                }
                if mc.samples < mc.batches {
                    return Err(Error::config("mc.samples", "must be at least mc.batches"));
                }
            }
            ExperimentKind::RateVsSnr | ExperimentKind::RateVsNr | ExperimentKind::Convergence => {
                for nr in self.nr_values() {
                    if 2 * d.ns > nr.min(2 * d.nt) {
                        return Err(Error::config(
                            "dims.ns",
                            format!(
                                "2Ns = {} exceeds min(Nr, 2Nt) = {} at Nr = {nr}",
                                2 * d.ns,
                                nr.min(2 * d.nt)
                            ),
                        ));
                    }
                }
                let h = &self.hybrid;
                if !(h.tol >= 0.0 && h.tol.is_finite()) {
                    return Err(Error::config(
                        "hybrid.tol",
                        "must be finite and nonnegative",
                    ));
                }
                if h.restarts == 0 {
                    return Err(Error::config("hybrid.restarts", "must be at least 1"));
                }
                let rf_path = if kind == ExperimentKind::Convergence {
                    "sweep.grid"
                } else {
                    "dims.n_rf"
                };
                // N_RF only matters when some hybrid design runs.
                let rf_values = if h.architectures.is_empty() {
                    Vec::new()
                } else {
                    self.n_rf_values()
                };
                for n_rf in rf_values {
                    if n_rf < d.ns {
                        return Err(Error::config(
                            rf_path,
                            format!("N_RF = {n_rf} is below Ns = {}", d.ns),
                        ));
                    }
                    if h.has(ArchitectureKind::Sc) && !d.nt.is_multiple_of(n_rf) {
                        return Err(Error::config(
                            rf_path,
                            format!(
                                "sub-connected networks need N_RF to divide Nt = {}, got {n_rf}",
                                d.nt
                            ),
                        ));
                    }
                }
                if kind == ExperimentKind::Convergence && h.architectures.is_empty() {
                    return Err(Error::config(
                        "hybrid.architectures",
                        "must name at least one architecture",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sets `path` (dot separated) in a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::config(path, "malformed override key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            _ => return Err(Error::config(keys[..i].join("."), "is not an object")),
        };
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override key has at least one segment")
}

/// Parses a config document after applying overrides, then validates it.
pub fn parse_config(text: &str, origin: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut doc: Value =
        serde_json::from_str(text).map_err(|e| Error::config(origin, e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(doc).map_err(|e| Error::config(origin, e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string(), overrides)
}
