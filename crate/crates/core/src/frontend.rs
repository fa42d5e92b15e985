//! Receiver measurement models.
//!
//! An atomic receiver observes `y = |H x + r + w|`. With a reference much
//! stronger than signal plus noise, `y - |r|` is well approximated by the
//! real-part detector `Re(H~ x) + w_bar` where `H~` is `H` with row `m`
//! rotated by `-arg(r_m)`. This module provides both models and a nested
//! Monte-Carlo estimate of the exact mutual information so the
//! approximation can be checked.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{
    log2_det_gain, psd_sqrt, realify_channel, stack_iq, ComplexMatrix, ComplexVector, RealMatrix,
    RealVector,
};
use crate::rng::substream;

/// Sample count below which an estimate is flagged as statistically weak.
pub const MIN_RECOMMENDED_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedChannel {
    /// `H~`, rows rotated by `-arg(r_m)`.
    pub rotated: ComplexMatrix,
    /// `(H~_I, -H~_Q)`.
    pub real: RealMatrix,
    /// `|r|`.
    pub offset: RealVector,
}

pub fn linearize(h: &ComplexMatrix, reference: &ComplexVector) -> Result<LinearizedChannel> {
    if reference.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "reference has {} entries for {} receive antennas",
            reference.len(),
            h.nrows()
        )));
    }
    if let Some(index) = reference.iter().position(|r| r.norm() == 0.0) {
        return Err(Error::DegenerateReference { index });
    }
    let mut rotated = h.clone();
    for (m, r) in reference.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -r.arg());
        rotated.row_mut(m).apply(|z| *z *= phase);
    }
    let real = realify_channel(&rotated);
    let offset = reference.map(|r| r.norm());
    Ok(LinearizedChannel {
        rotated,
        real,
        offset,
    })
}

/// Exact magnitude detector `|H x + r + w|`.
pub fn measure_magnitude(
    h: &ComplexMatrix,
    x: &ComplexVector,
    reference: &ComplexVector,
    noise: &ComplexVector,
) -> Result<RealVector> {
    if h.ncols() != x.len() || h.nrows() != reference.len() || h.nrows() != noise.len() {
        return Err(Error::Dimension("measure_magnitude operand shapes".into()));
    }
    Ok((h * x + reference + noise).map(|z| z.norm()))
}

/// Linearized detector `Re(H~ x) + w_bar`.
pub fn measure_linearized(
    lc: &LinearizedChannel,
    x: &ComplexVector,
    noise: &RealVector,
) -> Result<RealVector> {
    if lc.rotated.ncols() != x.len() || lc.rotated.nrows() != noise.len() {
        return Err(Error::Dimension("measure_linearized operand shapes".into()));
    }
    Ok(&lc.real * stack_iq(x) + noise)
}

/// Real-part noise `Re(exp(-j arg r_m) w_m)` matching a complex draw `w`.
pub fn rotate_noise(reference: &ComplexVector, noise: &ComplexVector) -> RealVector {
    reference.zip_map(noise, |r, w| (Complex64::from_polar(1.0, -r.arg()) * w).re)
}

/// `1/2 log2 det(I + (2 / sigma^2) H_bar Q_bar H_bar^T)`, in bits.
pub fn mi_linearized(h_bar: &RealMatrix, q_bar: &RealMatrix, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise}"
        )));
    }
    Ok(0.5 * log2_det_gain(h_bar, q_bar, 2.0 / noise)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    /// Bits.
    pub value: f64,
    pub samples: usize,
    /// Bits, from batch means.
    pub std_error: f64,
    /// Set when fewer than [`MIN_RECOMMENDED_SAMPLES`] outer samples were used.
    pub low_samples: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Outer `(x, y)` draws.
    pub samples: usize,
    /// Input draws per batch forming the mixture estimate of `p(y)`.
    pub inner: usize,
    pub batches: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: 100_000,
            inner: 512,
            batches: 20,
        }
    }
}

/// `ln(exp(-x) I0(x))` for `x >= 0`, polynomial fits with relative error
/// below 2e-7 (Abramowitz and Stegun 9.8.1, 9.8.2).
fn ln_i0e(x: f64) -> f64 {
    if x <= 3.75 {
        let t = (x / 3.75) * (x / 3.75);
        let i0 = 1.0
            + t * (3.515_622_9
                + t * (3.089_942_4
                    + t * (1.206_749_2 + t * (0.265_973_2 + t * (0.036_076_8 + t * 0.004_581_3)))));
        i0.ln() - x
    } else {
        let t = 3.75 / x;
        let p = 0.398_942_28
            + t * (0.013_285_92
                + t * (0.002_253_19
                    + t * (-0.001_575_65
                        + t * (0.009_162_81
                            + t * (-0.020_577_06
                                + t * (0.026_355_37 + t * (-0.016_476_33 + t * 0.003_923_77)))))));
        p.ln() - 0.5 * x.ln()
    }
}

/// Log-density of a Rice variable with amplitude `nu` and per-component
/// variance `s2`, written to stay finite for large `y * nu / s2`.
#[inline]
fn ln_rice(y: f64, nu: f64, s2: f64) -> f64 {
    let d = y - nu;
    (y / s2).ln() - d * d / (2.0 * s2) + ln_i0e(y * nu / s2)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Nested Monte-Carlo estimate of `I(y; x)` for `y = |H x + r + w|`,
/// `x_bar ~ N(0, Q_bar)`, `w ~ CN(0, sigma^2 I)`.
///
/// Given `x`, the entries of `y` are independent Rice variables, so
/// `log p(y | x)` is exact. The marginal `p(y)` is the average of
/// `p(y | x_j)` over `inner` fresh input draws. Batches run in parallel on
/// disjoint random streams and are reduced in index order; the standard
/// error is taken over batch means.
pub fn mi_nonlinear_mc(
    h: &ComplexMatrix,
    reference: &ComplexVector,
    noise: f64,
    q_bar: &RealMatrix,
    cfg: &McConfig,
    seed: u64,
) -> Result<MiEstimate> {
    let (nr, nt) = h.shape();
    if reference.len() != nr {
        return Err(Error::Dimension(format!(
            "reference has {} entries for {nr} receive antennas",
            reference.len()
        )));
    }
    if q_bar.shape() != (2 * nt, 2 * nt) {
        return Err(Error::Dimension(format!(
            "input covariance must be {0}x{0}, got {1}x{2}",
            2 * nt,
            q_bar.nrows(),
            q_bar.ncols()
        )));
    }
    if !(noise > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise}"
        )));
    }
    if cfg.batches < 2 || cfg.inner == 0 || cfg.samples < cfg.batches {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 batches, 1 inner draw and one sample per batch, got {cfg:?}"
        )));
    }
    let shaping = psd_sqrt(q_bar)?;
    let s2 = noise / 2.0;
    let per_batch = cfg.samples / cfg.batches;
    let extra = cfg.samples % cfg.batches;

    let draw_signal = |rng: &mut crate::rng::SimRng| -> ComplexVector {
        let z = RealVector::from_fn(2 * nt, |_, _| rng.sample(StandardNormal));
        let xb = &shaping * z;
        let x = ComplexVector::from_fn(nt, |i, _| Complex64::new(xb[i], xb[i + nt]));
        h * x + reference
    };

    let batch_means: Vec<f64> = (0..cfg.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let n = per_batch + usize::from(b < extra);
            // Amplitudes |H x_j + r| of the mixture components, row-major by draw.
            let mut inner = Vec::with_capacity(cfg.inner * nr);
            for _ in 0..cfg.inner {
                inner.extend(draw_signal(&mut rng).iter().map(|z| z.norm()));
            }
            let mut log_terms = vec![0.0; cfg.inner];
            let mut acc = 0.0;
            for _ in 0..n {
                let mean = draw_signal(&mut rng);
                let y: Vec<f64> = mean
                    .iter()
                    .map(|mu| {
                        let w =
                            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                                * s2.sqrt();
                        (mu + w).norm()
                    })
                    .collect();
                let cond: f64 = y
                    .iter()
                    .zip(mean.iter())
                    .map(|(&ym, mu)| ln_rice(ym, mu.norm(), s2))
                    .sum();
                for (j, term) in log_terms.iter_mut().enumerate() {
                    let amps = &inner[j * nr..(j + 1) * nr];
                    *term = y
                        .iter()
                        .zip(amps)
                        .map(|(&ym, &nu)| ln_rice(ym, nu, s2))
                        .sum();
                }
                let marginal = log_sum_exp(&log_terms) - (cfg.inner as f64).ln();
                acc += cond - marginal;
            }
            acc / n as f64 / std::f64::consts::LN_2
        })
        .collect();

    let b = batch_means.len() as f64;
    // Batches differ in size by at most one sample; weight them equally.
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(MiEstimate {
        value: mean,
        samples: cfg.samples,
        std_error: (var / b).sqrt(),
        low_samples: cfg.samples < MIN_RECOMMENDED_SAMPLES,
    })
}
