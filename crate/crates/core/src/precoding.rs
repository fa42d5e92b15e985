//! Fully digital precoding for the linearized atomic link.
//!
//! The IQ-aware precoder acts on the stacked `(s_I, s_Q)` symbols with an
//! unconstrained real matrix `F_bar = [[F11, F12], [F21, F22]]`, which lets it
//! align with the right singular vectors of the real channel and reach
//! capacity. The classical precoder is a complex matrix, so its real form is
//! block-coupled and generally falls short on the same channel.

use rayon::prelude::*;

use crate::channel::{generate_channel, ChannelConfig};
use crate::error::{Error, Result};
use crate::frontend::{linearize, mi_linearized};
use crate::numerics::{
    complex_svd, numerical_rank, real_equivalent, svd, water_fill, ComplexMatrix, RealMatrix,
    WaterFill,
};
use crate::rng::trial_rng;

#[derive(Debug, Clone)]
pub struct DigitalPrecoder {
    /// `F_bar`, `2Nt x S` for `S` real streams.
    pub matrix: RealMatrix,
    /// Top `S` singular values of the real channel.
    pub singular_values: Vec<f64>,
    /// Water-filling over the `S` streams; allocations sum to `2P`.
    pub allocation: WaterFill,
}

impl DigitalPrecoder {
    pub fn real_streams(&self) -> usize {
        self.matrix.ncols()
    }

    /// `(F11, F12, F21, F22)`, each `Nt x Ns`. `None` for an odd stream count.
    pub fn blocks(&self) -> Option<[RealMatrix; 4]> {
        let (rows, cols) = self.matrix.shape();
        if cols % 2 != 0 {
            return None;
        }
        let (nt, ns) = (rows / 2, cols / 2);
        let m = &self.matrix;
        Some([
            m.view((0, 0), (nt, ns)).into_owned(),
            m.view((0, ns), (nt, ns)).into_owned(),
            m.view((nt, 0), (nt, ns)).into_owned(),
            m.view((nt, ns), (nt, ns)).into_owned(),
        ])
    }

    /// `Q_bar = F_bar F_bar^T / 2`.
    pub fn covariance(&self) -> RealMatrix {
        precoder_covariance(&self.matrix)
    }

    /// `sum_k 1/2 log2(1 + s_k^2 p_k / sigma^2)`.
    pub fn closed_form_rate(&self, noise: f64) -> f64 {
        self.singular_values
            .iter()
            .zip(&self.allocation.allocations)
            .map(|(s, p)| 0.5 * (1.0 + s * s * p / noise).log2())
            .sum()
    }
}

pub fn precoder_covariance(f: &RealMatrix) -> RealMatrix {
    f * f.transpose() * 0.5
}

/// Capacity-achieving IQ-aware precoder carrying `ns` complex streams
/// (`2 ns` real streams).
pub fn iq_digital_precoder(
    h_bar: &RealMatrix,
    power: f64,
    noise: f64,
    ns: usize,
) -> Result<DigitalPrecoder> {
    iq_digital_precoder_real_streams(h_bar, power, noise, 2 * ns)
}

/// As [`iq_digital_precoder`] with an explicit, possibly odd, number of real
/// streams.
pub fn iq_digital_precoder_real_streams(
    h_bar: &RealMatrix,
    power: f64,
    noise: f64,
    streams: usize,
) -> Result<DigitalPrecoder> {
    if streams == 0 {
        return Err(Error::InvalidArgument(
            "at least one stream is required".into(),
        ));
    }
    let dec = svd(h_bar)?;
    let rank = dec.rank();
    if streams > rank {
        return Err(Error::StreamCount {
            requested: streams,
            rank,
        });
    }
    let singular_values: Vec<f64> = dec.singular_values.iter().take(streams).copied().collect();
    let allocation = water_fill(&singular_values, 2.0 * power, noise)?;
    let mut matrix = dec.v.columns(0, streams).into_owned();
    for (k, p) in allocation.allocations.iter().enumerate() {
        matrix.column_mut(k).scale_mut(p.sqrt());
    }
    Ok(DigitalPrecoder {
        matrix,
        singular_values,
        allocation,
    })
}

#[derive(Debug, Clone)]
pub struct ClassicalPrecoder {
    /// `F`, `Nt x Ns`.
    pub matrix: ComplexMatrix,
    /// Block-coupled real form `[[F_I, -F_Q], [F_Q, F_I]]`.
    pub real_form: RealMatrix,
    pub singular_values: Vec<f64>,
    /// Complex-channel water-filling; allocations sum to `P`.
    pub allocation: WaterFill,
}

impl ClassicalPrecoder {
    pub fn covariance(&self) -> RealMatrix {
        precoder_covariance(&self.real_form)
    }
}

/// Complex SVD precoder with complex-channel water-filling, the design that
/// is optimal for a coherent linear receiver.
pub fn classical_precoder(
    h: &ComplexMatrix,
    power: f64,
    noise: f64,
    ns: usize,
) -> Result<ClassicalPrecoder> {
    if ns == 0 {
        return Err(Error::InvalidArgument(
            "at least one stream is required".into(),
        ));
    }
    let dec = complex_svd(h)?;
    let rank = numerical_rank(dec.singular_values.as_slice(), h.nrows().max(h.ncols()));
    if ns > rank {
        return Err(Error::StreamCount {
            requested: ns,
            rank,
        });
    }
    let singular_values: Vec<f64> = dec.singular_values.iter().take(ns).copied().collect();
    let allocation = water_fill(&singular_values, power, noise)?;
    let mut matrix = dec.v.columns(0, ns).into_owned();
    for (k, p) in allocation.allocations.iter().enumerate() {
        matrix.column_mut(k).scale_mut(p.sqrt());
    }
    let real_form = real_equivalent(&matrix);
    Ok(ClassicalPrecoder {
        matrix,
        real_form,
        singular_values,
        allocation,
    })
}

/// Rate of the linearized atomic link under input covariance `Q_bar`, bits.
pub fn achievable_rate(h_bar: &RealMatrix, q_bar: &RealMatrix, noise: f64) -> Result<f64> {
    mi_linearized(h_bar, q_bar, noise)
}

/// Capacity of `y = G x + w` with real input, `w ~ N(0, sigma^2 / 2 I)` and
/// `tr(Q) = P`: water-filling over every nonzero singular value of `G`.
pub fn real_channel_capacity(g: &RealMatrix, power: f64, noise: f64) -> Result<f64> {
    let s = svd(g)?.singular_values;
    let gains: Vec<f64> = s.iter().copied().collect();
    let wf = water_fill(&gains, 2.0 * power, noise)?;
    Ok(gains
        .iter()
        .zip(&wf.allocations)
        .map(|(g, p)| 0.5 * (1.0 + g * g * p / noise).log2())
        .sum())
}

/// Capacity of the coherent complex link `y = H x + w`, `w ~ CN(0, sigma^2 I)`.
pub fn phase_known_capacity(h: &ComplexMatrix, power: f64, noise: f64) -> Result<f64> {
    let s = complex_svd(h)?.singular_values;
    let gains: Vec<f64> = s.iter().copied().collect();
    let wf = water_fill(&gains, power, noise)?;
    Ok(gains
        .iter()
        .zip(&wf.allocations)
        .map(|(g, p)| (1.0 + g * g * p / noise).log2())
        .sum())
}

/// Link model whose high-SNR slope is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofScheme {
    /// Linearized atomic receiver with IQ-aware precoding.
    Atomic,
    /// Atomic receiver fed only in-phase symbols (`x_Q = 0`).
    InPhase,
    /// Coherent receiver that also sees the phase.
    PhaseKnown,
}

impl DofScheme {
    pub const ALL: [DofScheme; 3] = [DofScheme::Atomic, DofScheme::InPhase, DofScheme::PhaseKnown];

    pub fn name(self) -> &'static str {
        match self {
            DofScheme::Atomic => "atomic",
            DofScheme::InPhase => "in_phase",
            DofScheme::PhaseKnown => "phase_known",
        }
    }

    /// `min(Nr/2, Nt)`, `min(Nr, Nt)/2` and `min(Nr, Nt)` respectively.
    pub fn theoretical(self, nr: usize, nt: usize) -> f64 {
        let (nr, nt) = (nr as f64, nt as f64);
        match self {
            DofScheme::Atomic => (nr / 2.0).min(nt),
            DofScheme::InPhase => nr.min(nt) / 2.0,
            DofScheme::PhaseKnown => nr.min(nt),
        }
    }
}

/// Capacity of one channel draw under `scheme`, with `SNR = P / sigma^2`.
pub fn scheme_capacity(
    scheme: DofScheme,
    h: &ComplexMatrix,
    reference: &crate::numerics::ComplexVector,
    power: f64,
    noise: f64,
) -> Result<f64> {
    match scheme {
        DofScheme::Atomic => real_channel_capacity(&linearize(h, reference)?.real, power, noise),
        DofScheme::InPhase => {
            let rotated = linearize(h, reference)?.rotated;
            real_channel_capacity(&rotated.map(|z| z.re), power, noise)
        }
        DofScheme::PhaseKnown => phase_known_capacity(h, power, noise),
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Finite-difference slopes of `rates` against `log2 SNR`: central
/// differences at interior grid points, or a single forward difference
/// reported at the midpoint for a two-point grid. Returns `(snr_db, slope)`.
pub fn finite_difference_slopes(grid_db: &[f64], rates: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_grid(grid_db)?;
    if rates.len() != grid_db.len() {
        return Err(Error::Dimension(format!(
            "{} rates for {} grid points",
            rates.len(),
            grid_db.len()
        )));
    }
    let log2_snr = |db: f64| db_to_linear(db).log2();
    if grid_db.len() == 2 {
        let slope = (rates[1] - rates[0]) / (log2_snr(grid_db[1]) - log2_snr(grid_db[0]));
        return Ok(vec![(0.5 * (grid_db[0] + grid_db[1]), slope)]);
    }
    Ok((1..grid_db.len() - 1)
        .map(|i| {
            let slope = (rates[i + 1] - rates[i - 1])
                / (log2_snr(grid_db[i + 1]) - log2_snr(grid_db[i - 1]));
            (grid_db[i], slope)
        })
        .collect())
}

fn check_grid(grid_db: &[f64]) -> Result<()> {
    if grid_db.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "slope estimation needs at least 2 SNR points, got {}",
            grid_db.len()
        )));
    }
    if grid_db.iter().any(|g| !g.is_finite()) || grid_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "SNR grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DofEstimate {
    pub scheme: DofScheme,
    /// Mean over trials of the per-trial average slope, bits per doubling of SNR.
    pub mean: f64,
    pub std_error: f64,
    pub per_trial: Vec<f64>,
}

/// Per-trial slope of capacity against `log2 SNR` for the given schemes,
/// with `SNR = P / sigma^2` and `sigma^2 = cfg.noise_variance`.
pub fn trial_slopes(
    cfg: &ChannelConfig,
    grid_db: &[f64],
    seed: u64,
    trial: u64,
    schemes: &[DofScheme],
) -> Result<Vec<Vec<(f64, f64)>>> {
    check_grid(grid_db)?;
    let ch = generate_channel(cfg, &mut trial_rng(seed, trial));
    let noise = cfg.noise_variance;
    schemes
        .iter()
        .map(|&scheme| {
            let rates = grid_db
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
            finite_difference_slopes(grid_db, &rates)
        })
        .collect()
}

/// Monte-Carlo average of the high-SNR capacity slope.
pub fn dof_slope(
    cfg: &ChannelConfig,
    grid_db: &[f64],
    trials: usize,
    seed: u64,
    scheme: DofScheme,
) -> Result<DofEstimate> {
    cfg.validate()?;
    check_grid(grid_db)?;
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let slopes = trial_slopes(cfg, grid_db, seed, t, &[scheme])?;
            let s = &slopes[0];
            Ok(s.iter().map(|(_, v)| v).sum::<f64>() / s.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let std_error = if per_trial.len() > 1 {
        (per_trial.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(DofEstimate {
        scheme,
        mean,
        std_error,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{log2_det_gain_complex, ComplexVector};
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn worked_channel() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)])
    }

    fn random_complex(rng: &mut impl Rng, r: usize, k: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, k, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn worked_example_precoder() {
        let h_bar = dmatrix![2.0, 0.0, 0.0, -1.0; 0.0, 1.0, -1.0, 0.0];
        let pre = iq_digital_precoder(&h_bar, 1.0, 1.0, 1).unwrap();
        assert_abs_diff_eq!(pre.allocation.allocations[0], 1.15, epsilon = 1e-12);
        assert_abs_diff_eq!(pre.allocation.allocations[1], 0.85, epsilon = 1e-12);
        let v1 = [0.8944, 0.0, 0.0, -0.4472];
        let v2 = [0.0, 0.7071, -0.7071, 0.0];
        for i in 0..4 {
            assert_abs_diff_eq!(pre.matrix[(i, 0)], v1[i] * 1.15f64.sqrt(), epsilon = 1e-4);
            assert_abs_diff_eq!(pre.matrix[(i, 1)], v2[i] * 0.85f64.sqrt(), epsilon = 1e-4);
        }
        assert_abs_diff_eq!(
            0.5 * (&pre.matrix * pre.matrix.transpose()).trace(),
            1.0,
            epsilon = 1e-12
        );
        let [f11, f12, f21, f22] = pre.blocks().unwrap();
        assert_eq!(f11.shape(), (2, 1));
        assert_abs_diff_eq!(f11[(0, 0)], pre.matrix[(0, 0)]);
        assert_abs_diff_eq!(f12[(1, 0)], pre.matrix[(1, 1)]);
        assert_abs_diff_eq!(f21[(1, 0)], pre.matrix[(3, 0)]);
        assert_abs_diff_eq!(f22[(0, 0)], pre.matrix[(2, 1)]);
    }

    #[test]
    fn worked_example_single_stream_rate() {
        // lambda^2 = 5, p = 1.15, sigma^2 = 1.
        let h_bar = dmatrix![2.0, 0.0, 0.0, -1.0; 0.0, 1.0, -1.0, 0.0];
        let pre = iq_digital_precoder(&h_bar, 1.0, 1.0, 1).unwrap();
        let first = 0.5 * (1.0 + 5.0 * pre.allocation.allocations[0]).log2();
        assert_abs_diff_eq!(first, 0.5 * 6.75f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(first, 1.377, epsilon = 1e-3);
    }

    #[test]
    fn scaled_identity_gets_uniform_allocation() {
        let h_bar = RealMatrix::identity(4, 4) * 3.0;
        let pre = iq_digital_precoder(&h_bar, 2.0, 1.0, 2).unwrap();
        for p in &pre.allocation.allocations {
            assert_abs_diff_eq!(*p, 1.0, epsilon = 1e-12);
        }
        let gram = pre.matrix.transpose() * &pre.matrix;
        assert!((gram - RealMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn stream_count_is_checked() {
        let h_bar = dmatrix![2.0, 0.0, 0.0, -1.0; 0.0, 1.0, -1.0, 0.0];
        assert!(matches!(
            iq_digital_precoder(&h_bar, 1.0, 1.0, 2),
            Err(Error::StreamCount {
                requested: 4,
                rank: 2
            })
        ));
        assert!(iq_digital_precoder(&h_bar, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn precoder_invariants_and_closed_form() {
        let mut rng = seeded(31);
        for _ in 0..20 {
            let h = random_complex(&mut rng, 6, 4);
            let h_bar = crate::numerics::realify_channel(&h);
            let power = rng.random_range(0.1..10.0);
            let noise = rng.random_range(0.2..2.0);
            let pre = iq_digital_precoder(&h_bar, power, noise, 2).unwrap();
            let q = pre.covariance();
            assert!((q.trace() - power).abs() <= 1e-9 * power);
            let gram = pre.matrix.transpose() * &pre.matrix;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        assert!(gram[(i, j)].abs() < 1e-9);
                    }
                }
            }
            let rate = achievable_rate(&h_bar, &q, noise).unwrap();
            assert_abs_diff_eq!(rate, pre.closed_form_rate(noise), epsilon = 1e-9);
            assert_eq!(rate, mi_linearized(&h_bar, &q, noise).unwrap());
        }
    }

    #[test]
    fn iq_precoder_beats_random_feasible_precoders() {
        let mut rng = seeded(32);
        let h = random_complex(&mut rng, 3, 2);
        let h_bar = crate::numerics::realify_channel(&h);
        let (power, noise) = (2.0, 1.0);
        // Full rank use: 3 real streams.
        let pre = iq_digital_precoder_real_streams(&h_bar, power, noise, 3).unwrap();
        let best = achievable_rate(&h_bar, &pre.covariance(), noise).unwrap();
        for _ in 0..1000 {
            let f = RealMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = precoder_covariance(&f);
            let q = &q * (power / q.trace());
            assert!(achievable_rate(&h_bar, &q, noise).unwrap() <= best + 1e-9);
        }
    }

    #[test]
    fn achievable_rate_of_zero_covariance() {
        let h_bar = dmatrix![2.0, 0.0, 0.0, -1.0; 0.0, 1.0, -1.0, 0.0];
        assert_eq!(
            achievable_rate(&h_bar, &RealMatrix::zeros(4, 4), 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn classical_loses_on_worked_example() {
        let h = worked_channel();
        let r = ComplexVector::from_element(2, c(1.0, 0.0));
        let h_bar = linearize(&h, &r).unwrap().real;
        let iq = iq_digital_precoder(&h_bar, 1.0, 1.0, 1).unwrap();
        let cl = classical_precoder(&h, 1.0, 1.0, 1).unwrap();
        let r_iq = achievable_rate(&h_bar, &iq.covariance(), 1.0).unwrap();
        let r_cl = achievable_rate(&h_bar, &cl.covariance(), 1.0).unwrap();
        assert!(r_cl < r_iq - 1e-6, "classical {r_cl} iq {r_iq}");
    }

    #[test]
    fn classical_real_form_is_block_coupled() {
        let mut rng = seeded(33);
        let h = random_complex(&mut rng, 4, 3);
        let cl = classical_precoder(&h, 3.0, 1.0, 2).unwrap();
        let (nt, ns) = (3, 2);
        let f = &cl.real_form;
        assert_eq!(f.view((0, 0), (nt, ns)), f.view((nt, ns), (nt, ns)));
        assert_eq!(f.view((0, ns), (nt, ns)), -f.view((nt, 0), (nt, ns)));
        let trace: f64 = cl.matrix.iter().map(|z| z.norm_sqr()).sum();
        assert!((trace - 3.0).abs() < 1e-9 * 3.0);
    }

    #[test]
    fn classical_matches_iq_when_real_channel_is_block_symmetric() {
        // H~ = [D; jD] gives H_bar^T H_bar = diag(D^2, D^2), which a
        // block-coupled precoder can diagonalize. Equal gains keep the two
        // water-filling rules in agreement.
        let d = [1.3, 1.3];
        let mut h = ComplexMatrix::zeros(4, 2);
        for i in 0..2 {
            h[(i, i)] = c(d[i], 0.0);
            h[(i + 2, i)] = c(0.0, d[i]);
        }
        let r = ComplexVector::from_element(4, c(1.0, 0.0));
        let h_bar = linearize(&h, &r).unwrap().real;
        let iq = iq_digital_precoder(&h_bar, 2.0, 1.0, 2).unwrap();
        let cl = classical_precoder(&h, 2.0, 1.0, 2).unwrap();
        let r_iq = achievable_rate(&h_bar, &iq.covariance(), 1.0).unwrap();
        let r_cl = achievable_rate(&h_bar, &cl.covariance(), 1.0).unwrap();
        assert_abs_diff_eq!(r_iq, r_cl, epsilon = 1e-9);
    }

    #[test]
    fn classical_precoder_achieves_coherent_capacity() {
        let mut rng = seeded(34);
        for _ in 0..10 {
            let h = random_complex(&mut rng, 4, 3);
            let (power, noise) = (5.0, 0.5);
            let cl = classical_precoder(&h, power, noise, 3).unwrap();
            let q = &cl.matrix * cl.matrix.adjoint();
            let direct = log2_det_gain_complex(&h, &q, 1.0 / noise).unwrap();
            let closed = phase_known_capacity(&h, power, noise).unwrap();
            assert_abs_diff_eq!(direct, closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn iq_dominates_classical_on_random_channels() {
        let mut rng = seeded(35);
        for _ in 0..500 {
            let nr = rng.random_range(2..6);
            let nt = rng.random_range(2..5);
            let h = random_complex(&mut rng, nr, nt);
            let r = random_complex(&mut rng, nr, 1).column(0).into_owned();
            let h_bar = linearize(&h, &r).unwrap().real;
            let ns = 1;
            let iq = iq_digital_precoder(&h_bar, 1.0, 1.0, ns).unwrap();
            let cl = classical_precoder(&linearize(&h, &r).unwrap().rotated, 1.0, 1.0, ns).unwrap();
            let r_iq = achievable_rate(&h_bar, &iq.covariance(), 1.0).unwrap();
            let r_cl = achievable_rate(&h_bar, &cl.covariance(), 1.0).unwrap();
            assert!(r_iq >= r_cl - 1e-9);
        }
    }

    #[test]
    fn capacity_is_concave_and_increasing_in_power() {
        let mut rng = seeded(36);
        let h = random_complex(&mut rng, 4, 3);
        let h_bar = crate::numerics::realify_channel(&h);
        let powers: Vec<f64> = (1..=40).map(|k| 0.25 * k as f64).collect();
        let rates: Vec<f64> = powers
            .iter()
            .map(|&p| real_channel_capacity(&h_bar, p, 1.0).unwrap())
            .collect();
        for w in rates.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in rates.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-12);
        }
    }

    #[test]
    fn slope_grid_validation() {
        assert!(finite_difference_slopes(&[30.0], &[1.0]).is_err());
        assert!(finite_difference_slopes(&[30.0, 30.0], &[1.0, 2.0]).is_err());
        let s = finite_difference_slopes(&[30.0, 35.0, 40.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].0, 35.0);
        assert_abs_diff_eq!(s[0].1, 2.0 / 10f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn dof_slopes_small_run() {
        let grid = [30.0, 35.0, 40.0];
        for (nr, want) in [(2, 1.0), (3, 1.5), (4, 2.0)] {
            let cfg = ChannelConfig::new(2, nr);
            let est = dof_slope(&cfg, &grid, 100, 1, DofScheme::Atomic).unwrap();
            assert!((est.mean - want).abs() < 0.1, "nr {nr}: {}", est.mean);
            assert_eq!(DofScheme::Atomic.theoretical(nr, 2), want);
        }
        assert!(dof_slope(&ChannelConfig::new(2, 2), &[30.0], 10, 1, DofScheme::Atomic).is_err());
    }
}
