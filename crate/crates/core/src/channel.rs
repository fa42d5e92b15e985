//! Saleh-Valenzuela channels between uniform linear arrays, local-oscillator
//! reference vectors, and the SNR/RSNR metrics used to calibrate runs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{real_equivalent, ComplexMatrix, ComplexVector, RealMatrix};

/// Carrier wavelength of the 27.7 GHz transition, in meters.
pub const DEFAULT_WAVELENGTH: f64 = 10.83e-3;
/// Array element spacing, in meters.
pub const DEFAULT_SPACING: f64 = 10e-3;
pub const DEFAULT_PATHS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub nt: usize,
    pub nr: usize,
    pub paths: usize,
    /// Meters.
    pub wavelength: f64,
    /// Meters.
    pub spacing: f64,
    /// Reference amplitude `|r_m|`.
    pub reference_gain: f64,
    pub noise_variance: f64,
    pub tx_power: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            nt: 2,
            nr: 2,
            paths: DEFAULT_PATHS,
            wavelength: DEFAULT_WAVELENGTH,
            spacing: DEFAULT_SPACING,
            reference_gain: 1.0,
            noise_variance: 1.0,
            tx_power: 1.0,
        }
    }
}

impl ChannelConfig {
    pub fn new(nt: usize, nr: usize) -> Self {
        ChannelConfig {
            nt,
            nr,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nt", self.nt), ("nr", self.nr), ("paths", self.paths)] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("spacing", self.spacing),
            ("reference_gain", self.reference_gain),
            ("noise_variance", self.noise_variance),
            ("tx_power", self.tx_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// One propagation path: complex gain plus arrival/departure angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    #[serde(with = "complex_pair")]
    pub gain: Complex64,
    pub arrival_deg: f64,
    pub departure_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Effective channel, `Nr x Nt`.
    pub h: ComplexMatrix,
    /// Received LO reference, length `Nr`.
    pub reference: ComplexVector,
    pub paths: Vec<Path>,
}

/// Sum of planar-wave outer products over `paths`:
/// `H[m, n] = sum_l a_l exp(j 2 pi (d / lambda) (m sin t_l + n sin p_l))`,
/// antennas indexed from zero.
pub fn channel_from_paths(cfg: &ChannelConfig, paths: &[Path]) -> ComplexMatrix {
    let k = 2.0 * PI * cfg.spacing / cfg.wavelength;
    let mut h = ComplexMatrix::zeros(cfg.nr, cfg.nt);
    for p in paths {
        let sa = p.arrival_deg.to_radians().sin();
        let sd = p.departure_deg.to_radians().sin();
        for n in 0..cfg.nt {
            for m in 0..cfg.nr {
                let phase = k * (m as f64 * sa + n as f64 * sd);
                h[(m, n)] += p.gain * Complex64::from_polar(1.0, phase);
            }
        }
    }
    h
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws path gains from CN(0, 1) and both angles from U(-90, 90) degrees.
pub fn draw_paths(cfg: &ChannelConfig, rng: &mut impl Rng) -> Vec<Path> {
    (0..cfg.paths)
        .map(|_| {
            let gain = complex_normal(rng);
            let arrival_deg = rng.random_range(-90.0..90.0);
            let departure_deg = rng.random_range(-90.0..90.0);
            Path {
                gain,
                arrival_deg,
                departure_deg,
            }
        })
        .collect()
}

/// `r_m = rho_R exp(j theta_m)` with `theta_m ~ U(0, 2 pi)`.
pub fn generate_reference(cfg: &ChannelConfig, rng: &mut impl Rng) -> ComplexVector {
    ComplexVector::from_fn(cfg.nr, |_, _| {
        let theta = rng.random_range(0.0..2.0 * PI);
        Complex64::from_polar(cfg.reference_gain, theta)
    })
}

/// Draws the paths, then the reference phases, from the same stream.
pub fn generate_channel(cfg: &ChannelConfig, rng: &mut impl Rng) -> ChannelRealization {
    let paths = draw_paths(cfg, rng);
    let h = channel_from_paths(cfg, &paths);
    let reference = generate_reference(cfg, rng);
    ChannelRealization {
        h,
        reference,
        paths,
    }
}

/// Transmit covariance used by the SNR metrics.
#[derive(Debug, Clone)]
pub enum TxCovariance {
    /// `E[x x^H] = (P / Nt) I`.
    Uniform { power: f64 },
    /// `E[x x^H]`.
    Complex(ComplexMatrix),
    /// `E[x_bar x_bar^T]` for the stacked `(x_I, x_Q)` signal.
    Real(RealMatrix),
}

/// `E ||H x||^2` under the given covariance.
pub fn signal_power(h: &ComplexMatrix, cov: &TxCovariance) -> Result<f64> {
    let nt = h.ncols();
    match cov {
        TxCovariance::Uniform { power } => Ok(power / nt as f64 * h.norm_squared()),
        TxCovariance::Complex(q) => {
            if q.shape() != (nt, nt) {
                return Err(Error::Dimension(format!(
                    "covariance must be {nt}x{nt}, got {}x{}",
                    q.nrows(),
                    q.ncols()
                )));
            }
            Ok((h * q * h.adjoint()).trace().re)
        }
        TxCovariance::Real(q) => {
            if q.shape() != (2 * nt, 2 * nt) {
                return Err(Error::Dimension(format!(
                    "real covariance must be {0}x{0}, got {1}x{2}",
                    2 * nt,
                    q.nrows(),
                    q.ncols()
                )));
            }
            // Rows of the real equivalent beyond Nr give the imaginary part.
            let hr = real_equivalent(h);
            Ok((&hr * q * hr.transpose()).trace())
        }
    }
}

fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// `10 log10(E||Hx||^2 / (Nr sigma^2))`.
pub fn receive_snr_db(h: &ComplexMatrix, cov: &TxCovariance, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise}"
        )));
    }
    let s = signal_power(h, cov)?;
    Ok(to_db(s / (h.nrows() as f64 * noise)))
}

/// `10 log10(||r||^2 / (E||Hx||^2 + Nr sigma^2))`.
pub fn rsnr_db(
    h: &ComplexMatrix,
    reference: &ComplexVector,
    cov: &TxCovariance,
    noise: f64,
) -> Result<f64> {
    if reference.len() != h.nrows() {
        return Err(Error::Dimension(format!(
            "reference has {} entries for {} receive antennas",
            reference.len(),
            h.nrows()
        )));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be nonnegative, got {noise}"
        )));
    }
    let denom = signal_power(h, cov)? + h.nrows() as f64 * noise;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(
            "signal plus noise power is zero".into(),
        ));
    }
    Ok(to_db(reference.norm_squared() / denom))
}

/// Transmit power that puts the uniform-covariance receive SNR at `target_db`.
pub fn power_for_receive_snr(h: &ComplexMatrix, noise: f64, target_db: f64) -> Result<f64> {
    let gain = h.norm_squared() / h.ncols() as f64;
    if !(gain > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    Ok(10f64.powf(target_db / 10.0) * h.nrows() as f64 * noise / gain)
}

/// Reference amplitude `rho_R` that puts the RSNR at `target_db`.
pub fn reference_gain_for_rsnr(
    h: &ComplexMatrix,
    cov: &TxCovariance,
    noise: f64,
    target_db: f64,
) -> Result<f64> {
    let denom = signal_power(h, cov)? + h.nrows() as f64 * noise;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(
            "signal plus noise power is zero".into(),
        ));
    }
    Ok((10f64.powf(target_db / 10.0) * denom / h.nrows() as f64).sqrt())
}

/// Replaces every reference entry's magnitude with `gain`, keeping phases.
pub fn rescale_reference(reference: &ComplexVector, gain: f64) -> ComplexVector {
    reference.map(|r| Complex64::from_polar(gain, r.arg()))
}

/// JSON fixture form of a realization: complex numbers as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub nr: usize,
    pub nt: usize,
    pub seed: u64,
    pub config: ChannelConfig,
    pub h: Vec<Vec<[f64; 2]>>,
    pub reference: Vec<[f64; 2]>,
    pub paths: Vec<Path>,
}

impl ChannelDocument {
    pub fn new(realization: &ChannelRealization, cfg: &ChannelConfig, seed: u64) -> Self {
        let h = (0..realization.h.nrows())
            .map(|i| realization.h.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        ChannelDocument {
            nr: realization.h.nrows(),
            nt: realization.h.ncols(),
            seed,
            config: cfg.clone(),
            h,
            reference: realization.reference.iter().map(|z| [z.re, z.im]).collect(),
            paths: realization.paths.clone(),
        }
    }

    pub fn to_realization(&self) -> Result<ChannelRealization> {
        if self.h.len() != self.nr || self.h.iter().any(|row| row.len() != self.nt) {
            return Err(Error::Dimension(format!(
                "channel document declares {}x{} but rows disagree",
                self.nr, self.nt
            )));
        }
        if self.reference.len() != self.nr {
            return Err(Error::Dimension(format!(
                "reference has {} entries, expected {}",
                self.reference.len(),
                self.nr
            )));
        }
        let h = ComplexMatrix::from_fn(self.nr, self.nt, |i, j| {
            let [re, im] = self.h[i][j];
            Complex64::new(re, im)
        });
        let reference = ComplexVector::from_iterator(
            self.nr,
            self.reference
                .iter()
                .map(|&[re, im]| Complex64::new(re, im)),
        );
        Ok(ChannelRealization {
            h,
            reference,
            paths: self.paths.clone(),
        })
    }
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
