//! Linear-algebra kernel shared by every other module.
//!
//! Complex matrices are mapped to real ones in two ways: [`real_equivalent`]
//! builds the block-coupled form `[[M_I, -M_Q], [M_Q, M_I]]` that any complex
//! linear map acting on stacked `(x_I, x_Q)` vectors has, and
//! [`realify_channel`] builds the wide `(H_I, -H_Q)` form that a real-part
//! detector sees.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealVector = DVector<f64>;
pub type ComplexVector = DVector<Complex64>;

const SVD_EPS: f64 = f64::EPSILON;
const SVD_MAX_ITER: usize = 10_000;
/// Entries below this magnitude are skipped when picking a vector's sign.
const SIGN_EPS: f64 = 1e-12;

/// `[[M_I, -M_Q], [M_Q, M_I]]`, shape `2m x 2n`.
pub fn real_equivalent(m: &ComplexMatrix) -> RealMatrix {
    let (rows, cols) = m.shape();
    let mut out = RealMatrix::zeros(2 * rows, 2 * cols);
    for j in 0..cols {
        for i in 0..rows {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + cols)] = -z.im;
            out[(i + rows, j)] = z.im;
            out[(i + rows, j + cols)] = z.re;
        }
    }
    out
}

/// Inverse of [`real_equivalent`] reading the left block column. The input is
/// assumed block-coupled; the right block column is ignored.
pub fn complex_from_real_equivalent(m: &RealMatrix) -> Result<ComplexMatrix> {
    let (rows, cols) = m.shape();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::Dimension(format!(
            "real-equivalent form must have even dimensions, got {rows}x{cols}"
        )));
    }
    let (r, c) = (rows / 2, cols / 2);
    Ok(ComplexMatrix::from_fn(r, c, |i, j| {
        Complex64::new(m[(i, j)], m[(i + r, j)])
    }))
}

/// Real-part channel `(H_I, -H_Q)`, shape `Nr x 2Nt`.
pub fn realify_channel(h: &ComplexMatrix) -> RealMatrix {
    let (rows, cols) = h.shape();
    let mut out = RealMatrix::zeros(rows, 2 * cols);
    for j in 0..cols {
        for i in 0..rows {
            out[(i, j)] = h[(i, j)].re;
            out[(i, j + cols)] = -h[(i, j)].im;
        }
    }
    out
}

/// Stacks a complex vector as `(x_I, x_Q)`.
pub fn stack_iq(x: &ComplexVector) -> RealVector {
    let n = x.len();
    RealVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

/// Inverse of [`stack_iq`].
pub fn unstack_iq(x: &RealVector) -> Result<ComplexVector> {
    if !x.len().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "stacked IQ vector must have even length, got {}",
            x.len()
        )));
    }
    let n = x.len() / 2;
    Ok(ComplexVector::from_fn(n, |i, _| {
        Complex64::new(x[i], x[i + n])
    }))
}

pub fn is_finite_real(m: &RealMatrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn is_finite_complex(m: &ComplexMatrix) -> bool {
    m.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Thin singular value decomposition `M = U diag(s) V^T`.
///
/// `U` is `m x k`, `V` is `n x k` with `k = min(m, n)`. Singular values are in
/// descending order and each column of `V` has its first nonzero entry
/// positive (the matching column of `U` is flipped with it).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: RealMatrix,
    pub singular_values: RealVector,
    pub v: RealMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        numerical_rank(
            self.singular_values.as_slice(),
            self.u.nrows().max(self.v.nrows()),
        )
    }

    pub fn reconstruct(&self) -> RealMatrix {
        &self.u * RealMatrix::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}

/// Number of singular values above `max(dim) * eps * s_max`.
pub fn numerical_rank(singular_values: &[f64], max_dim: usize) -> usize {
    let top = singular_values.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    let tol = max_dim as f64 * f64::EPSILON * top;
    singular_values.iter().filter(|&&s| s > tol).count()
}

pub fn svd(m: &RealMatrix) -> Result<Svd> {
    if !is_finite_real(m) {
        return Err(Error::NonFinite("svd"));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: RealMatrix::zeros(rows, 0),
            singular_values: RealVector::zeros(0),
            v: RealMatrix::zeros(cols, 0),
        });
    }
    let dec = SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITER).ok_or(Error::SvdFailed)?;
    let u = dec.u.ok_or(Error::SvdFailed)?;
    let v_t = dec.v_t.ok_or(Error::SvdFailed)?;
    let s = dec.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut u_out = RealMatrix::zeros(rows, k);
    let mut v_out = RealMatrix::zeros(cols, k);
    let mut s_out = RealVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut v_col = v_t.row(src).transpose();
        let mut u_col = u.column(src).into_owned();
        let sign = v_col
            .iter()
            .find(|x| x.abs() > SIGN_EPS)
            .map_or(1.0, |x| x.signum());
        if sign < 0.0 {
            v_col.neg_mut();
            u_col.neg_mut();
        }
        v_out.set_column(dst, &v_col);
        u_out.set_column(dst, &u_col);
        s_out[dst] = s[src].max(0.0);
    }
    Ok(Svd {
        u: u_out,
        singular_values: s_out,
        v: v_out,
    })
}

/// Thin SVD of a complex matrix, `M = U diag(s) V^H`, descending order.
#[derive(Debug, Clone)]
pub struct ComplexSvd {
    pub u: ComplexMatrix,
    pub singular_values: RealVector,
    pub v: ComplexMatrix,
}

pub fn complex_svd(m: &ComplexMatrix) -> Result<ComplexSvd> {
    if !is_finite_complex(m) {
        return Err(Error::NonFinite("complex_svd"));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let dec = SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITER).ok_or(Error::SvdFailed)?;
    let u = dec.u.ok_or(Error::SvdFailed)?;
    let v_t = dec.v_t.ok_or(Error::SvdFailed)?;
    let s = dec.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut u_out = ComplexMatrix::zeros(rows, k);
    let mut v_out = ComplexMatrix::zeros(cols, k);
    let mut s_out = RealVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        u_out.set_column(dst, &u.column(src));
        v_out.set_column(dst, &v_t.row(src).adjoint());
        s_out[dst] = s[src];
    }
    Ok(ComplexSvd {
        u: u_out,
        singular_values: s_out,
        v: v_out,
    })
}

/// Water-filling power allocation over parallel channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    /// Power per channel, in the order of the input gains.
    pub allocations: Vec<f64>,
    /// Water level `mu`.
    pub level: f64,
}

/// Allocates `total` power over channels with amplitude gains `gains`:
/// `p_k = max(mu - noise / gain_k^2, 0)` with `sum p_k = total`.
///
/// The water level is found exactly by scanning candidate active sets in
/// order of increasing floor `noise / gain_k^2`. Zero gains never receive
/// power.
pub fn water_fill(gains: &[f64], total: f64, noise: f64) -> Result<WaterFill> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "total power must be positive, got {total}"
        )));
    }
    if !(noise > 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise}"
        )));
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::InvalidArgument(
            "gains must be finite and nonnegative".into(),
        ));
    }

    let mut active: Vec<(usize, f64)> = gains
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > 0.0)
        .map(|(i, &g)| (i, noise / (g * g)))
        .collect();
    if active.is_empty() {
        return Err(Error::DegenerateChannel);
    }
    active.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    // Largest active set whose weakest floor stays under the water level.
    let mut floor_sum = 0.0;
    let mut level = 0.0;
    let mut count = 0;
    for (k, &(_, floor)) in active.iter().enumerate() {
        let candidate = (total + floor_sum + floor) / (k + 1) as f64;
        if k > 0 && candidate <= floor {
            break;
        }
        floor_sum += floor;
        level = candidate;
        count = k + 1;
    }

    let mut allocations = vec![0.0; gains.len()];
    for &(i, floor) in &active[..count] {
        allocations[i] = (level - floor).max(0.0);
    }
    Ok(WaterFill { allocations, level })
}

/// Orthogonal matrix `Q` maximizing `trace(Q G)` for square `G`.
///
/// With `G = V1 S V2^T`, the maximizer is `V2 V1^T`.
pub fn procrustes(g: &RealMatrix) -> Result<RealMatrix> {
    if !g.is_square() {
        return Err(Error::Dimension(format!(
            "procrustes needs a square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let dec = svd(g)?;
    Ok(&dec.v * dec.u.transpose())
}

/// Closest point on the unit circle to `(zi, zq)`. The origin maps to `(1, 0)`.
pub fn project_unit_modulus(zi: f64, zq: f64) -> (f64, f64) {
    let norm = zi.hypot(zq);
    if norm > 0.0 {
        (zi / norm, zq / norm)
    } else {
        (1.0, 0.0)
    }
}

/// Symmetric part check plus smallest eigenvalue, for covariance validation.
pub fn check_psd(q: &RealMatrix) -> Result<()> {
    if !q.is_square() {
        return Err(Error::Dimension(format!(
            "covariance must be square, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if !is_finite_real(q) {
        return Err(Error::NonFinite("covariance"));
    }
    if q.nrows() == 0 {
        return Ok(());
    }
    let scale = q.amax().max(1.0);
    let asym = (q - q.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::InvalidArgument(format!(
            "covariance is not symmetric (asymmetry {asym:e})"
        )));
    }
    let sym = (q + q.transpose()) * 0.5;
    let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
    if min_eig < -1e-9 * scale {
        return Err(Error::NotPsd(min_eig));
    }
    Ok(())
}

/// Symmetric square root `Q^{1/2}` of a PSD matrix; tiny negative
/// eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt(q: &RealMatrix) -> Result<RealMatrix> {
    check_psd(q)?;
    let sym = (q + q.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * RealMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// `log2 det(I + scale * G Q G^T)` for PSD `Q`.
pub fn log2_det_gain(g: &RealMatrix, q: &RealMatrix, scale: f64) -> Result<f64> {
    if g.ncols() != q.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} columns but covariance is {}x{}",
            g.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    check_psd(q)?;
    let n = g.nrows();
    let mut m = g * q * g.transpose() * scale;
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let m = (&m + m.transpose()) * 0.5;
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("I + G Q G^T is not positive definite".into()))?;
    let l = chol.l();
    Ok((0..n).map(|i| 2.0 * l[(i, i)].log2()).sum())
}

/// `log2 det(I + scale * H Q H^H)` for Hermitian PSD `Q`.
pub fn log2_det_gain_complex(h: &ComplexMatrix, q: &ComplexMatrix, scale: f64) -> Result<f64> {
    // The real equivalent doubles every eigenvalue's multiplicity.
    let hr = real_equivalent(h);
    let qr = real_equivalent(q);
    Ok(0.5 * log2_det_gain(&hr, &qr, scale)?)
}

pub fn frobenius_sq(m: &RealMatrix) -> f64 {
    m.iter().map(|v| v * v).sum()
}
