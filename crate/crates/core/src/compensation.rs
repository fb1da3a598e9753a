//! Two-step cascaded IQ imbalance compensation: sample-wise Rx inversion on
//! the received frame, an inner detector on the now-proper DAFT-domain model,
//! then Tx inversion on the coarse symbol estimate.

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::detect::{mmse_estimate, zf_estimate, DetectedFrame};
use crate::error::Result;
use crate::frame::{remove_cpp, TimeSignal};
use crate::iqi::IqImbalance;
use crate::linalg::{conj_vec, CMatrix, CVector};
use crate::transform::Daft;

/// Form of the Tx inverse applied in the DAFT domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxInverseForm {
    /// `A (μ* Aᴴ x̃ − υ (Aᴴ x̃)*) / (|μ|² − |υ|²)`, the exact inverse.
    #[default]
    Conjugated,
    /// `A (μ* Aᴴ x̃ − υ Aᵀ x̃) / (|μ|² − |υ|²)`, without the conjugate.
    /// Kept for comparison; it does not invert the imbalance.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerDetector {
    #[default]
    Mmse,
    ZeroForcing,
}

/// Which stages run, with the imbalance parameters they assume known.
/// `None` skips a stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompensationConfig {
    pub rx: Option<IqImbalance>,
    pub tx: Option<IqImbalance>,
    pub inner: InnerDetector,
    pub tx_form: TxInverseForm,
}

impl CompensationConfig {
    /// Plain detection, no compensation.
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn joint(tx: IqImbalance, rx: IqImbalance) -> Self {
        Self {
            rx: Some(rx),
            tx: Some(tx),
            ..Self::default()
        }
    }
}

/// `(μ* r̄ − υ r̄*) / (|μ|² − |υ|²)` on every sample, prefix included.
pub fn compensate_rx(r_bar: &TimeSignal, rx: &IqImbalance) -> Result<TimeSignal> {
    rx.check_invertible()?;
    Ok(r_bar.map(|z| rx.invert(z)))
}

/// Undoes the Tx imbalance on a DAFT-domain estimate `x̃̂`.
pub fn compensate_tx(
    x_tilde_hat: &CVector,
    tx: &IqImbalance,
    daft: &Daft,
    form: TxInverseForm,
) -> Result<CVector> {
    tx.check_invertible()?;
    let u = daft.inverse(x_tilde_hat)?;
    let mirror = match form {
        TxInverseForm::Conjugated => conj_vec(&u),
        TxInverseForm::AsPrinted => daft.transpose_apply(x_tilde_hat)?,
    };
    let d = tx.determinant();
    let s = (u * tx.mu.conj() - mirror * tx.upsilon) / num_complex::Complex64::new(d, 0.0);
    daft.forward(&s)
}

/// Soft DAFT-domain estimate of the transmitted symbols before hard decision.
pub fn cascaded_estimate(
    r_bar: &TimeSignal,
    h_eff: &CMatrix,
    config: &CompensationConfig,
    sigma2: f64,
    daft: &Daft,
) -> Result<CVector> {
    let params = daft.params();
    let r = match &config.rx {
        Some(rx) => compensate_rx(r_bar, rx)?,
        None => r_bar.clone(),
    };
    let y = daft.daft(&remove_cpp(&r, params)?)?;
    let coarse = match config.inner {
        InnerDetector::Mmse => mmse_estimate(&y, h_eff, sigma2)?,
        InnerDetector::ZeroForcing => zf_estimate(&y, h_eff)?,
    };
    match &config.tx {
        Some(tx) => compensate_tx(&coarse, tx, daft, config.tx_form),
        None => Ok(coarse),
    }
}

/// Rx compensation, prefix removal, DAFT, inner detection against `h_eff`
/// with noise variance `sigma2`, Tx compensation, hard decision.
pub fn cascaded_receive(
    r_bar: &TimeSignal,
    h_eff: &CMatrix,
    config: &CompensationConfig,
    sigma2: f64,
    daft: &Daft,
    constellation: &Constellation,
) -> Result<DetectedFrame> {
    let soft = cascaded_estimate(r_bar, h_eff, config, sigma2, daft)?;
    Ok(DetectedFrame::from_soft(soft, constellation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::iqi::{apply_iqi, iqi_from_db};
    use crate::linalg::max_abs_diff_vec;
    use crate::params::AfdmParams;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut impl Rng) -> CVector {
        CVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn rx_inverse_undoes_imbalance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = iqi_from_db(1.0, 3.0).unwrap();
        let s = TimeSignal::new(random_vec(70, &mut rng), true);
        let back = compensate_rx(&apply_iqi(&s, &q), &q).unwrap();
        assert!(max_abs_diff_vec(&back.samples, &s.samples) < 1e-12);
        assert!(back.has_cpp);
    }

    #[test]
    fn tx_inverse_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = AfdmParams::new(32, 2, 2, 1).unwrap();
        let daft = Daft::new(&p);
        let q = iqi_from_db(2.0, 10.0).unwrap();
        let x = random_vec(32, &mut rng);
        let s = daft.inverse(&x).unwrap();
        let x_tilde = daft.forward(&s.map(|z| q.apply(z))).unwrap();
        let good = compensate_tx(&x_tilde, &q, &daft, TxInverseForm::Conjugated).unwrap();
        assert!(max_abs_diff_vec(&good, &x) < 1e-12);
        let bad = compensate_tx(&x_tilde, &q, &daft, TxInverseForm::AsPrinted).unwrap();
        assert!(max_abs_diff_vec(&bad, &x) > 1e-3);
    }

    #[test]
    fn ideal_tx_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = AfdmParams::new(16, 1, 1, 0).unwrap();
        let daft = Daft::new(&p);
        let x = random_vec(16, &mut rng);
        let out = compensate_tx(&x, &IqImbalance::ideal(), &daft, TxInverseForm::Conjugated).unwrap();
        assert!(max_abs_diff_vec(&out, &x) < 1e-12);
    }

    #[test]
    fn singular_imbalance_is_rejected() {
        let half = Complex64::new(0.5, 0.0);
        let q = IqImbalance {
            mu: half,
            upsilon: half,
            ..IqImbalance::ideal()
        };
        let s = TimeSignal::new(CVector::zeros(4), false);
        assert!(matches!(compensate_rx(&s, &q), Err(Error::NonInvertibleImbalance(_))));
    }
}
