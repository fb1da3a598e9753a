//! Narrowband IQ imbalance, AWGN and the widely linear link model.
//!
//! A front end with amplitude mismatch `α` and phase mismatch `θ` maps a
//! baseband sample `s` to `μ s + υ s*` with
//!
//! ```text
//! μ = cos(θ/2) + j α sin(θ/2)
//! υ = α cos(θ/2) − j sin(θ/2)
//! ```
//!
//! The amplitude mismatch is specified in dB as `AIm = 10·log10(1 + α)` and
//! the phase mismatch in degrees.
//!
//! Cascading Tx imbalance, the channel `H` and Rx imbalance gives a DAFT-domain
//! observation that is widely linear in the symbols,
//! `y = M1 x + M2 x* + w̄`, see [`WidelyLinearModel`].

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::frame::TimeSignal;
use crate::linalg::{conj_vec, CMatrix, CVector, ZERO};
use crate::transform::Daft;

/// Below this `|μ|² − |υ|²` the widely linear map is treated as singular.
const INVERTIBILITY_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqImbalance {
    pub amp_db: f64,
    pub phase_deg: f64,
    pub alpha: f64,
    pub theta: f64,
    pub mu: Complex64,
    pub upsilon: Complex64,
}

impl Default for IqImbalance {
    fn default() -> Self {
        Self::ideal()
    }
}

impl IqImbalance {
    pub fn from_db(amp_db: f64, phase_deg: f64) -> Result<Self> {
        if !amp_db.is_finite() || !phase_deg.is_finite() {
            return invalid("IQ imbalance parameters must be finite");
        }
        let alpha = 10f64.powf(amp_db / 10.0) - 1.0;
        let theta = phase_deg.to_radians();
        let (s, c) = (theta / 2.0).sin_cos();
        let mu = Complex64::new(c, alpha * s);
        let upsilon = Complex64::new(alpha * c, -s);
        let det = mu.norm_sqr() - upsilon.norm_sqr();
        if det <= INVERTIBILITY_FLOOR {
            return Err(Error::NonInvertibleImbalance(det));
        }
        Ok(Self {
            amp_db,
            phase_deg,
            alpha,
            theta,
            mu,
            upsilon,
        })
    }

    /// No imbalance: `μ = 1`, `υ = 0`.
    pub fn ideal() -> Self {
        Self {
            amp_db: 0.0,
            phase_deg: 0.0,
            alpha: 0.0,
            theta: 0.0,
            mu: Complex64::new(1.0, 0.0),
            upsilon: ZERO,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.mu == Complex64::new(1.0, 0.0) && self.upsilon == ZERO
    }

    /// `|μ|² − |υ|²`, the determinant of the equivalent real 2×2 map.
    pub fn determinant(&self) -> f64 {
        self.mu.norm_sqr() - self.upsilon.norm_sqr()
    }

    /// `|μ|² + |υ|²`, the power gain on circular inputs.
    pub fn power_gain(&self) -> f64 {
        self.mu.norm_sqr() + self.upsilon.norm_sqr()
    }

    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.mu * z + self.upsilon * z.conj()
    }

    /// Exact inverse of [`apply`](Self::apply): `(μ* z − υ z*) / (|μ|² − |υ|²)`.
    #[inline]
    pub fn invert(&self, z: Complex64) -> Complex64 {
        (self.mu.conj() * z - self.upsilon * z.conj()) / self.determinant()
    }

    pub(crate) fn check_invertible(&self) -> Result<()> {
        let det = self.determinant();
        if det <= INVERTIBILITY_FLOOR {
            Err(Error::NonInvertibleImbalance(det))
        } else {
            Ok(())
        }
    }
}

pub fn iqi_from_db(amp_db: f64, phase_deg: f64) -> Result<IqImbalance> {
    IqImbalance::from_db(amp_db, phase_deg)
}

/// `μ s + υ s*`, sample by sample. Prefix state is preserved.
pub fn apply_iqi(signal: &TimeSignal, iqi: &IqImbalance) -> TimeSignal {
    if iqi.is_ideal() {
        return signal.clone();
    }
    signal.map(|z| iqi.apply(z))
}

/// Adds `CN(0, σ²)` samples (`σ²/2` per real dimension).
pub fn add_awgn(signal: &TimeSignal, sigma2: f64, rng: &mut impl Rng) -> TimeSignal {
    if sigma2 == 0.0 {
        return signal.clone();
    }
    let s = (sigma2 / 2.0).sqrt();
    let mut out = signal.clone();
    for z in out.samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex64::new(re * s, im * s);
    }
    out
}

/// Thermal noise level and the Rx imbalance it passes through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub rx_iqi: Option<IqImbalance>,
}

impl NoiseModel {
    pub fn new(sigma2: f64, rx_iqi: Option<IqImbalance>) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return invalid(format!("noise variance must be positive, got {sigma2}"));
        }
        Ok(Self { sigma2, rx_iqi })
    }

    /// `σ²_w̄ = (|μ_rx|² + |υ_rx|²) σ²`.
    pub fn sigma2_wbar(&self) -> f64 {
        self.rx_iqi.map_or(1.0, |r| r.power_gain()) * self.sigma2
    }
}

/// Covariance and pseudo-covariance of `w̄ = A(μ w + υ w*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStats {
    pub cov: CMatrix,
    pub pcov: CMatrix,
}

/// `cov = (|μ|²+|υ|²) σ² I`, `pcov = 2 μ υ σ² A Aᵀ`.
pub fn daft_noise_stats(rx_iqi: &IqImbalance, sigma2: f64, daft: &Daft) -> NoiseStats {
    let n = daft.n();
    let cov = CMatrix::identity(n, n) * Complex64::new(rx_iqi.power_gain() * sigma2, 0.0);
    let pcov = if rx_iqi.upsilon == ZERO {
        CMatrix::zeros(n, n)
    } else {
        let a = daft.matrix();
        let aat = &a * a.transpose();
        aat * (rx_iqi.mu * rx_iqi.upsilon * 2.0 * sigma2)
    };
    NoiseStats { cov, pcov }
}

/// The four signal terms of the noiseless joint-imbalance observation.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTerms {
    /// `μ_rx μ_tx A H Aᴴ x`
    pub attenuated: CVector,
    /// `μ_rx υ_tx A H Aᵀ x*`
    pub mirror: CVector,
    /// `υ_rx μ_tx* A H* Aᵀ x*`
    pub rx_mirror_chunk: CVector,
    /// `υ_rx υ_tx* A H* Aᴴ x`
    pub tx_rx_mirror_chunk: CVector,
}

impl InterferenceTerms {
    pub fn total(&self) -> CVector {
        &self.attenuated + &self.mirror + &self.rx_mirror_chunk + &self.tx_rx_mirror_chunk
    }
}

/// Splits the noiseless DAFT-domain output into its four imbalance terms.
pub fn decompose_interference(
    x: &CVector,
    chan: &ChannelRealization,
    tx: &IqImbalance,
    rx: &IqImbalance,
    daft: &Daft,
) -> Result<InterferenceTerms> {
    let params = daft.params();
    let s = daft.inverse(x)?;
    let s_conj = conj_vec(&s); // Aᵀ x*
    let hs = chan.apply_matrix(&s, params);
    let hs_conj = chan.apply_matrix(&s_conj, params);
    Ok(InterferenceTerms {
        attenuated: daft.forward(&hs)? * (rx.mu * tx.mu),
        mirror: daft.forward(&hs_conj)? * (rx.mu * tx.upsilon),
        // H* Aᵀ x* = conj(H Aᴴ x)
        rx_mirror_chunk: daft.forward(&conj_vec(&hs))? * (rx.upsilon * tx.mu.conj()),
        // H* Aᴴ x = conj(H Aᵀ x*)
        tx_rx_mirror_chunk: daft.forward(&conj_vec(&hs_conj))? * (rx.upsilon * tx.upsilon.conj()),
    })
}

/// `y = M1 x + M2 x* + w̄` with
///
/// ```text
/// M1 = A (μ_rx μ_tx H + υ_rx υ_tx* H*) Aᴴ
/// M2 = A (μ_rx υ_tx H + υ_rx μ_tx* H*) Aᵀ
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct WidelyLinearModel {
    pub m1: CMatrix,
    pub m2: CMatrix,
}

impl WidelyLinearModel {
    pub fn build(
        chan: &ChannelRealization,
        tx: &IqImbalance,
        rx: &IqImbalance,
        daft: &Daft,
    ) -> Result<Self> {
        let params = daft.params();
        let n = params.n;
        let a1 = rx.mu * tx.mu;
        let b1 = rx.upsilon * tx.upsilon.conj();
        let a2 = rx.mu * tx.upsilon;
        let b2 = rx.upsilon * tx.mu.conj();
        let mut m1 = CMatrix::zeros(n, n);
        let mut m2 = CMatrix::zeros(n, n);
        let mut e = CVector::zeros(n);
        for k in 0..n {
            e[k] = Complex64::new(1.0, 0.0);
            let u = daft.inverse(&e)?; // Aᴴ e_k
            let v = conj_vec(&u); // Aᵀ e_k
            let hu = chan.apply_matrix(&u, params);
            let hv = chan.apply_matrix(&v, params);
            let col1 = &hu * a1 + conj_vec(&hv) * b1;
            let col2 = &hv * a2 + conj_vec(&hu) * b2;
            m1.set_column(k, &daft.forward(&col1)?);
            m2.set_column(k, &daft.forward(&col2)?);
            e[k] = ZERO;
        }
        Ok(Self { m1, m2 })
    }

    /// Noiseless output for symbols `x`.
    pub fn output(&self, x: &CVector) -> CVector {
        &self.m1 * x + &self.m2 * conj_vec(x)
    }

    /// Whether the conjugate branch vanishes (no imbalance anywhere).
    pub fn is_strictly_linear(&self) -> bool {
        self.m2.iter().all(|z| *z == ZERO)
    }
}
