//! IQ-aware hybrid precoding: an analog phase-shifter network `A` followed
//! by a real digital precoder `D_bar` acting on the stacked IQ streams, so
//! the transmitted real signal is `A_bar D_bar s_bar` with
//! `A_bar = real_equivalent(A)`.
//!
//! Fully connected (FC): every RF chain drives every antenna. The design
//! matches `F_bar ~ gamma A_bar D_u` with column-orthonormal `D_u`, completed
//! to a square orthogonal `D~` and an auxiliary `F_c` so that each update is
//! closed-form (unit-circle projection, orthogonal Procrustes, assignment).
//!
//! Sub-connected (SC): RF chain `n` drives its own block of `K = Nt / N_RF`
//! antennas, so `A^H A = K I` and both updates are closed-form.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    frobenius_sq, is_finite_real, procrustes, project_unit_modulus, real_equivalent, ComplexMatrix,
    RealMatrix,
};
use crate::rng::{substream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    FullyConnected,
    SubConnected { antennas_per_chain: usize },
}

#[derive(Debug, Clone)]
pub struct HybridPrecoder {
    /// `Nt x N_RF` phase-shifter matrix.
    pub analog: ComplexMatrix,
    /// `2 N_RF x 2 Ns` IQ-aware digital precoder.
    pub digital: RealMatrix,
    pub architecture: Architecture,
}

impl HybridPrecoder {
    pub fn analog_real(&self) -> RealMatrix {
        real_equivalent(&self.analog)
    }

    /// Equivalent fully digital precoder `A_bar D_bar`.
    pub fn effective(&self) -> RealMatrix {
        self.analog_real() * &self.digital
    }

    /// `Q_bar = (A_bar D_bar)(A_bar D_bar)^T / 2`.
    pub fn covariance(&self) -> RealMatrix {
        let f = self.effective();
        &f * f.transpose() * 0.5
    }

    pub fn power(&self) -> f64 {
        0.5 * frobenius_sq(&self.effective())
    }

    /// `||F_bar - A_bar D_bar||_F / ||F_bar||_F`.
    pub fn relative_error(&self, f_bar: &RealMatrix) -> f64 {
        (f_bar - self.effective()).norm() / f_bar.norm()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AltMinTrace {
    /// Objective after initialization followed by one value per iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl AltMinTrace {
    pub fn last(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::NAN)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    /// `iteration,objective` rows, iteration 0 being the initial point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective\n");
        for (i, v) in self.objective.iter().enumerate() {
            let _ = writeln!(out, "{i},{v:.16e}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    /// Stop once the relative objective decrease over one iteration is below this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Independent random starts; the lowest final objective wins.
    pub restarts: usize,
    /// Fixed scale of the FC surrogate; `None` uses `sqrt(2P / Nt)`.
    pub gamma: Option<f64>,
}

impl HybridOptions {
    pub fn fully_connected(seed: u64) -> Self {
        HybridOptions {
            tol: 1e-6,
            max_iter: 500,
            seed,
            restarts: 1,
            gamma: None,
        }
    }

    pub fn sub_connected(seed: u64) -> Self {
        HybridOptions {
            max_iter: 100,
            ..Self::fully_connected(seed)
        }
    }
}

fn random_phases(rows: usize, cols: usize, rng: &mut SimRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
    })
}

fn converged(prev: f64, cur: f64, tol: f64) -> bool {
    prev <= f64::MIN_POSITIVE || (prev - cur) / prev < tol
}

fn check_target(f_bar: &RealMatrix, n_rf: usize, power: f64) -> Result<(usize, usize)> {
    let (rows, cols) = f_bar.shape();
    if rows == 0 || rows % 2 != 0 || cols == 0 || cols % 2 != 0 {
        return Err(Error::Dimension(format!(
            "target precoder must be 2Nt x 2Ns with positive Nt, Ns; got {rows}x{cols}"
        )));
    }
    if !is_finite_real(f_bar) {
        return Err(Error::NonFinite("target precoder"));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power must be positive, got {power}"
        )));
    }
    let (nt, ns) = (rows / 2, cols / 2);
    if n_rf < ns {
        return Err(Error::Dimension(format!(
            "N_RF = {n_rf} is below Ns = {ns}"
        )));
    }
    Ok((nt, ns))
}

/// Stacked `Z = F~ D~^T` blocks reduced to the phase-shifter target
/// `Z_I + j Z_Q`, with `Z_I = Z11 + Z22` and `Z_Q = Z21 - Z12`.
fn iq_fold(z: &RealMatrix, nt: usize, n_rf: usize) -> (RealMatrix, RealMatrix) {
    let b = |r, c| z.view((r, c), (nt, n_rf));
    let zi = b(0, 0) + b(nt, n_rf);
    let zq = b(nt, 0) - b(0, n_rf);
    (zi, zq)
}

/// FC phase update: entrywise projection of `(Z_I, Z_Q)` onto the unit
/// circle. The surrogate scale `gamma` does not change the projection.
pub fn fc_analog_update(f_tilde: &RealMatrix, d_tilde: &RealMatrix) -> Result<ComplexMatrix> {
    let n = d_tilde.nrows();
    if f_tilde.ncols() != n
        || d_tilde.ncols() != n
        || !n.is_multiple_of(2)
        || !f_tilde.nrows().is_multiple_of(2)
    {
        return Err(Error::Dimension(format!(
            "F~ is {}x{}, D~ is {}x{}",
            f_tilde.nrows(),
            f_tilde.ncols(),
            d_tilde.nrows(),
            d_tilde.ncols()
        )));
    }
    let z = f_tilde * d_tilde.transpose();
    let (zi, zq) = iq_fold(&z, f_tilde.nrows() / 2, n / 2);
    Ok(ComplexMatrix::from_fn(zi.nrows(), zi.ncols(), |i, j| {
        let (re, im) = project_unit_modulus(zi[(i, j)], zq[(i, j)]);
        Complex64::new(re, im)
    }))
}

/// FC digital update: the orthogonal `D~` maximizing `tr(D~ F~^T A_bar)`.
pub fn fc_digital_update(f_tilde: &RealMatrix, a_bar: &RealMatrix) -> Result<RealMatrix> {
    if f_tilde.shape() != a_bar.shape() {
        return Err(Error::Dimension(format!(
            "F~ is {}x{} but A_bar is {}x{}",
            f_tilde.nrows(),
            f_tilde.ncols(),
            a_bar.nrows(),
            a_bar.ncols()
        )));
    }
    procrustes(&(f_tilde.transpose() * a_bar))
}

/// FC auxiliary update `F_c = gamma A_bar D~[:, 2Ns..]`.
pub fn fc_aux_update(
    a_bar: &RealMatrix,
    d_tilde: &RealMatrix,
    gamma: f64,
    ns: usize,
) -> RealMatrix {
    let n = d_tilde.ncols();
    a_bar * d_tilde.columns(2 * ns, n - 2 * ns) * gamma
}

/// `||F~ D~^T - gamma A_bar||_F^2`.
pub fn fc_objective(
    f_tilde: &RealMatrix,
    d_tilde: &RealMatrix,
    a_bar: &RealMatrix,
    gamma: f64,
) -> f64 {
    frobenius_sq(&(f_tilde * d_tilde.transpose() - a_bar * gamma))
}

fn stack_columns(f_bar: &RealMatrix, f_c: &RealMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(f_bar.nrows(), f_bar.ncols() + f_c.ncols());
    out.columns_mut(0, f_bar.ncols()).copy_from(f_bar);
    out.columns_mut(f_bar.ncols(), f_c.ncols()).copy_from(f_c);
    out
}

/// Best of `opts.restarts` runs by final objective, each on its own substream.
fn best_of<F>(opts: &HybridOptions, run: F) -> Result<(HybridPrecoder, AltMinTrace)>
where
    F: Fn(&mut SimRng) -> Result<(HybridPrecoder, AltMinTrace)>,
{
    let mut best: Option<(HybridPrecoder, AltMinTrace)> = None;
    for r in 0..opts.restarts.max(1) as u64 {
        let candidate = run(&mut substream(opts.seed, r))?;
        if best
            .as_ref()
            .is_none_or(|b| candidate.1.last() < b.1.last())
        {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Fully connected IQ-aware hybrid design approximating `f_bar` with
/// `n_rf` RF chains under total power `power`.
pub fn alg1_fc(
    f_bar: &RealMatrix,
    n_rf: usize,
    power: f64,
    opts: &HybridOptions,
) -> Result<(HybridPrecoder, AltMinTrace)> {
    let (nt, ns) = check_target(f_bar, n_rf, power)?;
    let gamma = opts
        .gamma
        .unwrap_or_else(|| (2.0 * power / nt as f64).sqrt());
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    best_of(opts, |rng| {
        // Random phases, then the digital and auxiliary updates, so the
        // starting point of the loop is already consistent with A.
        let mut analog = random_phases(nt, n_rf, rng);
        let mut a_bar = real_equivalent(&analog);
        let mut f_c = RealMatrix::zeros(2 * nt, 2 * (n_rf - ns));
        let mut d_tilde = fc_digital_update(&stack_columns(f_bar, &f_c), &a_bar)?;
        f_c = fc_aux_update(&a_bar, &d_tilde, gamma, ns);
        let mut f_tilde = stack_columns(f_bar, &f_c);
        let mut trace = AltMinTrace {
            objective: vec![fc_objective(&f_tilde, &d_tilde, &a_bar, gamma)],
            ..AltMinTrace::default()
        };
        while trace.iterations < opts.max_iter {
            analog = fc_analog_update(&f_tilde, &d_tilde)?;
            a_bar = real_equivalent(&analog);
            d_tilde = fc_digital_update(&f_tilde, &a_bar)?;
            f_c = fc_aux_update(&a_bar, &d_tilde, gamma, ns);
            f_tilde = stack_columns(f_bar, &f_c);
            let obj = fc_objective(&f_tilde, &d_tilde, &a_bar, gamma);
            let prev = trace.last();
            trace.objective.push(obj);
            trace.iterations += 1;
            if converged(prev, obj, opts.tol) {
                trace.converged = true;
                break;
            }
        }
        let d_u = d_tilde.columns(0, 2 * ns).into_owned();
        let radiated = frobenius_sq(&(&a_bar * &d_u));
        if radiated <= 0.0 {
            return Err(Error::DegenerateAlignment);
        }
        let digital = d_u * (2.0 * power / radiated).sqrt();
        Ok((
            HybridPrecoder {
                analog,
                digital,
                architecture: Architecture::FullyConnected,
            },
            trace,
        ))
    })
}

/// Block-diagonal phase matrix with `phases[n * k + i]` on block `n`.
pub fn sc_analog_from_phases(phases: &[f64], n_rf: usize) -> ComplexMatrix {
    let k = phases.len() / n_rf;
    let mut a = ComplexMatrix::zeros(n_rf * k, n_rf);
    for n in 0..n_rf {
        for i in 0..k {
            a[(n * k + i, n)] = Complex64::from_polar(1.0, phases[n * k + i]);
        }
    }
    a
}

fn sc_dims(nt: usize, n_rf: usize) -> Result<usize> {
    if n_rf == 0 || !nt.is_multiple_of(n_rf) {
        return Err(Error::config(
            "dims.n_rf",
            format!("sub-connected networks need N_RF to divide Nt; got Nt = {nt}, N_RF = {n_rf}"),
        ));
    }
    Ok(nt / n_rf)
}

/// SC phase update: `theta_{n,k} = arg Y[n K + k, n]` with
/// `Y = (Y11 + Y22) + j (Y21 - Y12)` from `F_bar D_bar^T`. A zero entry
/// takes phase 0.
pub fn sc_analog_update(f_bar: &RealMatrix, d_bar: &RealMatrix) -> Result<ComplexMatrix> {
    if f_bar.ncols() != d_bar.ncols()
        || !f_bar.nrows().is_multiple_of(2)
        || !d_bar.nrows().is_multiple_of(2)
    {
        return Err(Error::Dimension(format!(
            "F_bar is {}x{}, D_bar is {}x{}",
            f_bar.nrows(),
            f_bar.ncols(),
            d_bar.nrows(),
            d_bar.ncols()
        )));
    }
    let (nt, n_rf) = (f_bar.nrows() / 2, d_bar.nrows() / 2);
    let k = sc_dims(nt, n_rf)?;
    let (yi, yq) = iq_fold(&(f_bar * d_bar.transpose()), nt, n_rf);
    let mut phases = vec![0.0; nt];
    for n in 0..n_rf {
        for i in 0..k {
            let (re, im) = (yi[(n * k + i, n)], yq[(n * k + i, n)]);
            if re != 0.0 || im != 0.0 {
                phases[n * k + i] = im.atan2(re);
            }
        }
    }
    Ok(sc_analog_from_phases(&phases, n_rf))
}

/// SC digital update `D_bar = sqrt(2P / (K ||A_bar^T F_bar||^2)) A_bar^T F_bar`.
pub fn sc_digital_update(
    f_bar: &RealMatrix,
    a_bar: &RealMatrix,
    power: f64,
    k: usize,
) -> Result<RealMatrix> {
    if f_bar.nrows() != a_bar.nrows() {
        return Err(Error::Dimension(format!(
            "F_bar has {} rows, A_bar has {}",
            f_bar.nrows(),
            a_bar.nrows()
        )));
    }
    let g = a_bar.transpose() * f_bar;
    let norm_sq = frobenius_sq(&g);
    if norm_sq <= 0.0 {
        return Err(Error::DegenerateAlignment);
    }
    Ok(g * (2.0 * power / (k as f64 * norm_sq)).sqrt())
}

/// Sub-connected IQ-aware hybrid design.
pub fn alg2_sc(
    f_bar: &RealMatrix,
    n_rf: usize,
    power: f64,
    opts: &HybridOptions,
) -> Result<(HybridPrecoder, AltMinTrace)> {
    let (nt, _) = check_target(f_bar, n_rf, power)?;
    let k = sc_dims(nt, n_rf)?;
    best_of(opts, |rng| {
        let phases: Vec<f64> = (0..nt).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut analog = sc_analog_from_phases(&phases, n_rf);
        let mut a_bar = real_equivalent(&analog);
        let mut digital = sc_digital_update(f_bar, &a_bar, power, k)?;
        let objective = |a: &RealMatrix, d: &RealMatrix| frobenius_sq(&(f_bar - a * d));
        let mut trace = AltMinTrace {
            objective: vec![objective(&a_bar, &digital)],
            ..AltMinTrace::default()
        };
        while trace.iterations < opts.max_iter {
            analog = sc_analog_update(f_bar, &digital)?;
            a_bar = real_equivalent(&analog);
            digital = sc_digital_update(f_bar, &a_bar, power, k)?;
            let obj = objective(&a_bar, &digital);
            let prev = trace.last();
            trace.objective.push(obj);
            trace.iterations += 1;
            if converged(prev, obj, opts.tol) {
                trace.converged = true;
                break;
            }
        }
        Ok((
            HybridPrecoder {
                analog,
                digital,
                architecture: Architecture::SubConnected {
                    antennas_per_chain: k,
                },
            },
            trace,
        ))
    })
}
