//! Seeded Monte-Carlo experiment runner.
//!
//! Trial `t` draws its channel from the stream seeded with `seed + t`, so a
//! trial sees the same channel at every sweep point (common random numbers)
//! and results do not depend on the worker count. Trials run on a rayon pool
//! and are reduced in trial order. Records are emitted sweep-point major,
//! then by trial.
//!
//! Where a run needs the physical signal levels, each trial first sets the
//! transmit power for the target receive SNR under a uniform input
//! covariance, then sets the reference amplitude for the target RSNR.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    apply_override, load_config, parse_config, ArchitectureKind, ExperimentConfig, ExperimentKind,
    OutputFormat, SweepAxis,
};
pub use output::{emit_results, summarize, SummaryRow, TraceRow, TrialRecord};

use crate::channel::{
    generate_channel, power_for_receive_snr, receive_snr_db, reference_gain_for_rsnr,
    rescale_reference, rsnr_db, ChannelRealization, TxCovariance,
};
use crate::error::{Error, Result};
use crate::frontend::{linearize, mi_linearized, mi_nonlinear_mc};
use crate::hybrid::{alg1_fc, alg2_sc, AltMinTrace, HybridOptions};
use crate::numerics::RealMatrix;
use crate::precoding::{
    achievable_rate, classical_precoder, finite_difference_slopes, iq_digital_precoder,
    scheme_capacity, DofScheme,
};
use crate::rng::{trial_rng, trial_seed};

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    /// Hybrid objective traces (convergence experiment only).
    pub traces: Vec<TraceRow>,
}

struct TrialResult {
    /// One metric map per sweep point.
    points: Vec<BTreeMap<String, f64>>,
    traces: Vec<TraceRow>,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seed of the Monte-Carlo estimator at sweep point `point` of trial `trial`.
fn mc_seed(seed: u64, trial: u64, point: usize) -> u64 {
    trial_seed(seed, trial) ^ ((point as u64 + 1) << 40)
}

/// Runs every trial of `cfg` on `jobs` workers (all cores when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<TrialResult> = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                run_trial(cfg, t).map_err(|e| Error::Trial {
                    context: format!("{} trial {t}", cfg.experiment),
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let name = cfg.experiment.name();
    let mut records = Vec::new();
    for (p, &value) in cfg.sweep.grid.iter().enumerate() {
        for (t, res) in results.iter().enumerate() {
            let metrics = &res.points[p];
            if metrics.is_empty() {
                continue;
            }
            if let Some((k, v)) = metrics.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Trial {
                    context: format!("{name} trial {t} at {value}"),
                    source: Box::new(Error::InvalidArgument(format!("metric `{k}` is {v}"))),
                });
            }
            records.push(TrialRecord {
                experiment: name.to_string(),
                sweep_value: value,
                trial: t as u64,
                metrics: metrics.clone(),
                seed: trial_seed(cfg.seed, t as u64),
            });
        }
    }
    let mut traces: Vec<TraceRow> = results.into_iter().flat_map(|r| r.traces).collect();
    traces.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.trial.cmp(&b.trial))
            .then(a.architecture.cmp(&b.architecture))
            .then(a.iteration.cmp(&b.iteration))
    });
    let summary = summarize(&records);
    Ok(RunOutput {
        records,
        summary,
        traces,
    })
}

fn run_trial(cfg: &ExperimentConfig, t: u64) -> Result<TrialResult> {
    match cfg.experiment {
        ExperimentKind::DofSlope => dof_trial(cfg, t),
        ExperimentKind::MiVsRsnr => mi_trial(cfg, t),
        ExperimentKind::RateVsSnr | ExperimentKind::RateVsNr => rate_trial(cfg, t),
        ExperimentKind::Convergence => convergence_trial(cfg, t),
    }
}

fn draw(cfg: &ExperimentConfig, nr: usize, t: u64) -> ChannelRealization {
    generate_channel(&cfg.channel_config(nr), &mut trial_rng(cfg.seed, t))
}

fn dof_trial(cfg: &ExperimentConfig, t: u64) -> Result<TrialResult> {
    let ch = draw(cfg, cfg.dims.nr, t);
    let noise = cfg.channel.noise_variance;
    let grid = &cfg.sweep.grid;
    let mut points = vec![BTreeMap::new(); grid.len()];
    for scheme in DofScheme::ALL {
        let rates = grid
            .iter()
            .map(|&db| {
                scheme_capacity(
                    scheme,
                    &ch.h,
                    &ch.reference,
                    db_to_linear(db) * noise,
                    noise,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        for (p, r) in rates.iter().enumerate() {
            points[p].insert(format!("capacity_{}", scheme.name()), *r);
        }
        let slopes = finite_difference_slopes(grid, &rates)?;
        if grid.len() == 2 {
            for point in points.iter_mut() {
                point.insert(format!("slope_{}", scheme.name()), slopes[0].1);
            }
        } else {
            for (i, (_, s)) in slopes.iter().enumerate() {
                points[i + 1].insert(format!("slope_{}", scheme.name()), *s);
            }
        }
    }
    Ok(TrialResult {
        points,
        traces: Vec::new(),
    })
}

/// `Q_bar` of `x ~ CN(0, P/Nt I)`.
fn uniform_real_covariance(nt: usize, power: f64) -> RealMatrix {
    RealMatrix::identity(2 * nt, 2 * nt) * (power / (2 * nt) as f64)
}

fn mi_trial(cfg: &ExperimentConfig, t: u64) -> Result<TrialResult> {
    let ch = draw(cfg, cfg.dims.nr, t);
    let noise = cfg.channel.noise_variance;
    let power = power_for_receive_snr(&ch.h, noise, cfg.receive_snr_db)?;
    let cov = TxCovariance::Uniform { power };
    let q_bar = uniform_real_covariance(cfg.dims.nt, power);
    let mc = cfg.mc.to_config();
    let points = cfg
        .sweep
        .grid
        .iter()
        .enumerate()
        .map(|(p, &target)| {
            let gain = reference_gain_for_rsnr(&ch.h, &cov, noise, target)?;
            let reference = rescale_reference(&ch.reference, gain);
            let lin = mi_linearized(&linearize(&ch.h, &reference)?.real, &q_bar, noise)?;
            let est = mi_nonlinear_mc(
                &ch.h,
                &reference,
                noise,
                &q_bar,
                &mc,
                mc_seed(cfg.seed, t, p),
            )?;
            Ok(BTreeMap::from([
                ("mi_linearized".to_string(), lin),
                ("mi_nonlinear".to_string(), est.value),
                ("mi_nonlinear_se".to_string(), est.std_error),
                ("relative_error".to_string(), (est.value - lin).abs() / lin),
                (
                    "rsnr_db".to_string(),
                    rsnr_db(&ch.h, &reference, &cov, noise)?,
                ),
                (
                    "receive_snr_db".to_string(),
                    receive_snr_db(&ch.h, &cov, noise)?,
                ),
                ("tx_power".to_string(), power),
                ("reference_gain".to_string(), gain),
            ]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult {
        points,
        traces: Vec::new(),
    })
}

fn hybrid_options(cfg: &ExperimentConfig, kind: ArchitectureKind, t: u64) -> HybridOptions {
    let h = &cfg.hybrid;
    let seed = trial_seed(cfg.seed, t);
    let base = match kind {
        ArchitectureKind::Fc => HybridOptions {
            max_iter: h.fc_max_iter,
            ..HybridOptions::fully_connected(seed)
        },
        ArchitectureKind::Sc => HybridOptions {
            max_iter: h.sc_max_iter,
            ..HybridOptions::sub_connected(seed)
        },
    };
    HybridOptions {
        tol: h.tol,
        restarts: h.restarts,
        ..base
    }
}

fn rate_trial(cfg: &ExperimentConfig, t: u64) -> Result<TrialResult> {
    let noise = cfg.channel.noise_variance;
    let d = &cfg.dims;
    let by_nr = cfg.experiment == ExperimentKind::RateVsNr;
    let fixed = (!by_nr).then(|| draw(cfg, d.nr, t));
    let points = cfg
        .sweep
        .grid
        .iter()
        .map(|&value| {
            let (ch, target_snr) = match &fixed {
                Some(ch) => (ch.clone(), value),
                None => (draw(cfg, value as usize, t), cfg.receive_snr_db),
            };
            let power = power_for_receive_snr(&ch.h, noise, target_snr)?;
            let cov = TxCovariance::Uniform { power };
            let gain = reference_gain_for_rsnr(&ch.h, &cov, noise, cfg.rsnr_db)?;
            let reference = rescale_reference(&ch.reference, gain);
            let lc = linearize(&ch.h, &reference)?;
            let iq = iq_digital_precoder(&lc.real, power, noise, d.ns)?;
            let classical = classical_precoder(&lc.rotated, power, noise, d.ns)?;
            let rate = |q: &RealMatrix| achievable_rate(&lc.real, q, noise);
            let mut m = BTreeMap::from([
                ("rate_iq_digital".to_string(), rate(&iq.covariance())?),
                (
                    "rate_classical_digital".to_string(),
                    rate(&classical.covariance())?,
                ),
                (
                    "receive_snr_db".to_string(),
                    receive_snr_db(&ch.h, &cov, noise)?,
                ),
                (
                    "rsnr_db".to_string(),
                    rsnr_db(&ch.h, &reference, &cov, noise)?,
                ),
            ]);
            if cfg.hybrid.has(ArchitectureKind::Fc) {
                let (hp, _) = alg1_fc(
                    &iq.matrix,
                    d.n_rf,
                    power,
                    &hybrid_options(cfg, ArchitectureKind::Fc, t),
                )?;
                m.insert("rate_fc_hybrid".into(), rate(&hp.covariance())?);
            }
            if cfg.hybrid.has(ArchitectureKind::Sc) {
                let (hp, _) = alg2_sc(
                    &iq.matrix,
                    d.n_rf,
                    power,
                    &hybrid_options(cfg, ArchitectureKind::Sc, t),
                )?;
                m.insert("rate_sc_hybrid".into(), rate(&hp.covariance())?);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult {
        points,
        traces: Vec::new(),
    })
}

fn trace_rows(value: f64, t: u64, arch: &str, trace: &AltMinTrace) -> Vec<TraceRow> {
    trace
        .objective
        .iter()
        .enumerate()
        .map(|(i, &objective)| TraceRow {
            sweep_value: value,
            trial: t,
            architecture: arch.to_string(),
            iteration: i,
            objective,
        })
        .collect()
}

fn convergence_trial(cfg: &ExperimentConfig, t: u64) -> Result<TrialResult> {
    let noise = cfg.channel.noise_variance;
    let power = db_to_linear(cfg.snr_db) * noise;
    let d = &cfg.dims;
    let ch = draw(cfg, d.nr, t);
    let lc = linearize(&ch.h, &ch.reference)?;
    let f_bar = iq_digital_precoder(&lc.real, power, noise, d.ns)?.matrix;
    let mut points = Vec::new();
    let mut traces = Vec::new();
    for &value in &cfg.sweep.grid {
        let n_rf = value as usize;
        let mut m = BTreeMap::new();
        for kind in [ArchitectureKind::Fc, ArchitectureKind::Sc] {
            if !cfg.hybrid.has(kind) {
                continue;
            }
            let opts = hybrid_options(cfg, kind, t);
            let (hp, trace) = match kind {
                ArchitectureKind::Fc => alg1_fc(&f_bar, n_rf, power, &opts)?,
                ArchitectureKind::Sc => alg2_sc(&f_bar, n_rf, power, &opts)?,
            };
            let prefix = match kind {
                ArchitectureKind::Fc => "fc",
                ArchitectureKind::Sc => "sc",
            };
            m.insert(format!("{prefix}_objective"), trace.last());
            m.insert(format!("{prefix}_iterations"), trace.iterations as f64);
            m.insert(
                format!("{prefix}_converged"),
                if trace.converged { 1.0 } else { 0.0 },
            );
            m.insert(
                format!("{prefix}_relative_error"),
                hp.relative_error(&f_bar),
            );
            m.insert(
                format!("{prefix}_monotone"),
                if trace.is_monotone(1e-12) { 1.0 } else { 0.0 },
            );
            traces.extend(trace_rows(value, t, prefix, &trace));
        }
        points.push(m);
    }
    Ok(TrialResult { points, traces })
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub traces: Option<PathBuf>,
}

/// Writes the results file plus `<stem>.summary.csv` and, when traces were
/// recorded, `<stem>.traces.csv`.
pub fn write_outputs(
    out: &RunOutput,
    experiment: ExperimentKind,
    format: OutputFormat,
    path: &Path,
) -> Result<WrittenFiles> {
    emit_results(&out.records, format, path)?;
    let summary = output::sibling_path(path, "summary");
    std::fs::write(&summary, output::summary_csv(&out.summary))
        .map_err(|e| Error::io(&summary, e))?;
    let traces = if out.traces.is_empty() {
        None
    } else {
        let p = output::sibling_path(path, "traces");
        std::fs::write(&p, output::traces_csv(experiment.name(), &out.traces))
            .map_err(|e| Error::io(&p, e))?;
        Some(p)
    };
    Ok(WrittenFiles {
        results: path.to_path_buf(),
        summary,
        traces,
    })
}
