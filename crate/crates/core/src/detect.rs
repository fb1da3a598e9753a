//! DAFT-domain detectors: linear MMSE, exhaustive ML on the widely linear
//! model, and the augmented-system widely linear MMSE.

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::iqi::{NoiseStats, WidelyLinearModel};
use crate::linalg::{check_len, conj_vec, is_identity, solve_hpd, CMatrix, CVector};

/// Largest `N · N_b` the exhaustive search accepts.
pub const ML_MAX_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedFrame {
    pub soft_symbols: CVector,
    pub indices: Vec<usize>,
    pub hard_symbols: CVector,
    pub bits: Vec<u8>,
}

impl DetectedFrame {
    /// Hard decision and demapping of a soft estimate.
    pub fn from_soft(soft: CVector, constellation: &Constellation) -> Self {
        let indices = constellation.decide(&soft);
        Self::from_indices(soft, indices, constellation)
    }

    fn from_indices(soft: CVector, indices: Vec<usize>, constellation: &Constellation) -> Self {
        let hard = CVector::from_iterator(indices.len(), indices.iter().map(|&i| constellation.points[i]));
        let bits = constellation.indices_to_bits(&indices);
        Self {
            soft_symbols: soft,
            indices,
            hard_symbols: hard,
            bits,
        }
    }
}

/// `Hᴴ (H Hᴴ + σ² I)⁻¹ y`.
pub fn mmse_estimate(y: &CVector, h_eff: &CMatrix, sigma2: f64) -> Result<CVector> {
    if !h_eff.is_square() {
        return Err(Error::InvalidArgument("effective channel must be square".into()));
    }
    check_len(h_eff.nrows(), y.len())?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "MMSE noise variance must be positive, got {sigma2}"
        )));
    }
    if is_identity(h_eff) {
        return Ok(y / Complex64::new(1.0 + sigma2, 0.0));
    }
    let n = h_eff.nrows();
    let gram = h_eff * h_eff.adjoint() + CMatrix::identity(n, n) * Complex64::new(sigma2, 0.0);
    let z = solve_hpd(gram, y, "MMSE")?;
    Ok(h_eff.ad_mul(&z))
}

pub fn mmse_detect(
    y: &CVector,
    h_eff: &CMatrix,
    sigma2: f64,
    constellation: &Constellation,
) -> Result<DetectedFrame> {
    Ok(DetectedFrame::from_soft(mmse_estimate(y, h_eff, sigma2)?, constellation))
}

/// Zero-forcing estimate `H⁻¹ y`, available as an alternative inner detector.
pub fn zf_estimate(y: &CVector, h_eff: &CMatrix) -> Result<CVector> {
    check_len(h_eff.nrows(), y.len())?;
    h_eff
        .clone()
        .lu()
        .solve(y)
        .ok_or(Error::SingularSystem("zero forcing"))
}

/// Exact minimiser of `‖y − M1 x − M2 x*‖²` over all constellation vectors.
///
/// Hypotheses are visited in reflected Gray order so consecutive candidates
/// differ in one symbol, and the residual is updated with two column updates
/// per step.
pub fn ml_detect(
    y: &CVector,
    model: &WidelyLinearModel,
    constellation: &Constellation,
) -> Result<DetectedFrame> {
    let n = model.m1.ncols();
    check_len(model.m1.nrows(), y.len())?;
    let bits = n * constellation.bits_per_symbol;
    if bits > ML_MAX_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits,
            limit: ML_MAX_BITS,
        });
    }
    let m = constellation.order();
    let pts = &constellation.points;
    let rows = y.len();

    // candidate starts at all-zero indices
    let mut digits = vec![0usize; n];
    let x0 = CVector::from_element(n, pts[0]);
    let mut residual = y - model.output(&x0);
    let mut best_metric = residual.norm_squared();
    let mut best = digits.clone();

    // Knuth's loopless reflected mixed-radix Gray generator.
    let mut focus: Vec<usize> = (0..=n).collect();
    let mut dir = vec![1i64; n];
    let m1 = &model.m1;
    let m2 = &model.m2;
    loop {
        let j = focus[0];
        focus[0] = 0;
        if j == n {
            break;
        }
        let old = pts[digits[j]];
        digits[j] = (digits[j] as i64 + dir[j]) as usize;
        let delta = pts[digits[j]] - old;
        let delta_c = delta.conj();
        for r in 0..rows {
            residual[r] -= m1[(r, j)] * delta + m2[(r, j)] * delta_c;
        }
        if digits[j] == 0 || digits[j] == m - 1 {
            dir[j] = -dir[j];
            focus[j] = focus[j + 1];
            focus[j + 1] = j + 1;
        }
        let metric = residual.norm_squared();
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&digits);
        }
    }

    let hard = CVector::from_iterator(n, best.iter().map(|&i| pts[i]));
    Ok(DetectedFrame::from_indices(hard, best, constellation))
}

/// Widely linear MMSE on the uncompensated observation.
///
/// Works on the augmented pair `[y; y*] = G [x; x*] + [w̄; w̄*]` with
/// `G = [[M1, M2], [M2*, M1*]]`, augmented noise covariance built from
/// `noise.cov` / `noise.pcov`, and augmented symbol covariance from the
/// constellation's variance and pseudo-variance. Cost is one `2N×2N` solve.
pub fn wl_mmse_detect(
    y: &CVector,
    model: &WidelyLinearModel,
    noise: &NoiseStats,
    constellation: &Constellation,
) -> Result<DetectedFrame> {
    let n = model.m1.nrows();
    check_len(n, y.len())?;
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&model.m1);
    g.view_mut((0, n), (n, n)).copy_from(&model.m2);
    g.view_mut((n, 0), (n, n)).copy_from(&model.m2.conjugate());
    g.view_mut((n, n), (n, n)).copy_from(&model.m1.conjugate());

    let mut rn = CMatrix::zeros(2 * n, 2 * n);
    rn.view_mut((0, 0), (n, n)).copy_from(&noise.cov);
    rn.view_mut((0, n), (n, n)).copy_from(&noise.pcov);
    rn.view_mut((n, 0), (n, n)).copy_from(&noise.pcov.conjugate());
    rn.view_mut((n, n), (n, n)).copy_from(&noise.cov.conjugate());

    let es = Complex64::new(constellation.average_energy(), 0.0);
    let pv = constellation.pseudo_variance();
    let mut rx = CMatrix::identity(2 * n, 2 * n) * es;
    if pv != Complex64::new(0.0, 0.0) {
        for i in 0..n {
            rx[(i, n + i)] = pv;
            rx[(n + i, i)] = pv.conj();
        }
    }

    let mut y_aug = CVector::zeros(2 * n);
    y_aug.rows_mut(0, n).copy_from(y);
    y_aug.rows_mut(n, n).copy_from(&conj_vec(y));

    let g_rx = &g * &rx;
    let k = &g_rx * g.adjoint() + rn;
    let z = solve_hpd(k, &y_aug, "widely linear MMSE")?;
    let est = g_rx.ad_mul(&z);
    let soft = est.rows(0, n).into_owned();
    Ok(DetectedFrame::from_soft(soft, constellation))
}
