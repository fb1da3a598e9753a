//! Pairwise error probability and average bit error probability bounds for
//! ML detection under joint IQ imbalance.
//!
//! For fixed path positions the noiseless observation is written as
//! `Ψ1(x) h + Ψ2(x) h*` where column `i` of each matrix belongs to path `i`.
//! The bounds use `Ψ = Ψ1 + Ψ2`, the Chernoff-style two-exponential
//! approximation of `Q`, and the Gaussian moment generating function of the
//! gains.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_path, check_covariance, default_covariance, PathGeometry};
use crate::constellation::Constellation;
use crate::error::{invalid, Result};
use crate::iqi::IqImbalance;
use crate::linalg::{conj_vec, hermitian_eigenvalues, psd_rank, psd_sqrt, CMatrix, CVector};
use crate::transform::Daft;

/// Relative cutoff below which an eigenvalue counts as zero.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Fewest trials the Monte Carlo PEP estimator accepts.
pub const MIN_PEP_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CodewordMatrices {
    pub psi1: CMatrix,
    pub psi2: CMatrix,
    pub psi_sum: CMatrix,
}

/// Builds `Ψ1`, `Ψ2` for symbols `x`:
///
/// ```text
/// Ψ1[:, i] = μ_rx μ_tx  A G_i Aᴴ x  + μ_rx υ_tx  A G_i Aᵀ x*
/// Ψ2[:, i] = υ_rx μ_tx* A G_i* Aᵀ x* + υ_rx υ_tx* A G_i* Aᴴ x
/// ```
///
/// with `G_i = Γ_i Δ_i Π^{τ_i}` the unit-gain path matrix.
pub fn build_codeword_matrices(
    x: &CVector,
    geometry: &[PathGeometry],
    tx: &IqImbalance,
    rx: &IqImbalance,
    daft: &Daft,
) -> Result<CodewordMatrices> {
    let params = daft.params();
    let n = params.n;
    let p = geometry.len();
    let s = daft.inverse(x)?;
    let s_conj = conj_vec(&s);
    let mut psi1 = CMatrix::zeros(n, p);
    let mut psi2 = CMatrix::zeros(n, p);
    for (i, g) in geometry.iter().enumerate() {
        let gs = apply_path(g, &s, params);
        let gs_conj = apply_path(g, &s_conj, params);
        let c1 = &gs * (rx.mu * tx.mu) + &gs_conj * (rx.mu * tx.upsilon);
        let c2 = conj_vec(&gs) * (rx.upsilon * tx.mu.conj())
            + conj_vec(&gs_conj) * (rx.upsilon * tx.upsilon.conj());
        psi1.set_column(i, &daft.forward(&c1)?);
        psi2.set_column(i, &daft.forward(&c2)?);
    }
    let psi_sum = &psi1 + &psi2;
    Ok(CodewordMatrices { psi1, psi2, psi_sum })
}

/// Everything the bounds need besides the symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSetup {
    pub geometry: Vec<PathGeometry>,
    /// `E[h hᴴ]`; Hermitian PSD, `P×P`.
    pub covariance: CMatrix,
    pub tx: IqImbalance,
    pub rx: IqImbalance,
    /// Thermal noise variance before the Rx front end.
    pub sigma2: f64,
    /// Symbol placed at the positions where the two codewords agree.
    /// `None` uses the first constellation point.
    pub reference: Option<Complex64>,
}

impl ErrorSetup {
    /// Default gain covariance `(1/P) I`.
    pub fn new(geometry: Vec<PathGeometry>, tx: IqImbalance, rx: IqImbalance, sigma2: f64) -> Result<Self> {
        let p = geometry.len();
        if p == 0 {
            return invalid("at least one path is required");
        }
        if !(sigma2 > 0.0) {
            return invalid(format!("noise variance must be positive, got {sigma2}"));
        }
        Ok(Self {
            geometry,
            covariance: default_covariance(p),
            tx,
            rx,
            sigma2,
            reference: None,
        })
    }

    pub fn with_covariance(mut self, covariance: CMatrix) -> Result<Self> {
        check_covariance(&covariance, self.geometry.len())?;
        self.covariance = covariance;
        Ok(self)
    }

    pub fn with_reference(mut self, reference: Complex64) -> Self {
        self.reference = Some(reference);
        self
    }

    /// `σ²_w̄ = (|μ_rx|² + |υ_rx|²) σ²`.
    pub fn sigma2_wbar(&self) -> f64 {
        self.rx.power_gain() * self.sigma2
    }

    fn reference_or(&self, constellation_point: Complex64) -> Complex64 {
        self.reference.unwrap_or(constellation_point)
    }

    /// `Ψ(x_p) − Ψ(x_q)` for codewords equal to the reference except at `position`.
    pub fn difference_matrix(
        &self,
        xp: Complex64,
        xq: Complex64,
        position: usize,
        fill: Complex64,
        daft: &Daft,
    ) -> Result<CMatrix> {
        let (cp, cq) = self.codeword_pair(xp, xq, position, fill, daft)?;
        Ok(cp.psi_sum - cq.psi_sum)
    }

    fn codeword_pair(
        &self,
        xp: Complex64,
        xq: Complex64,
        position: usize,
        fill: Complex64,
        daft: &Daft,
    ) -> Result<(CodewordMatrices, CodewordMatrices)> {
        let n = daft.n();
        if position >= n {
            return invalid(format!("position {position} out of range for N = {n}"));
        }
        let mut x = CVector::from_element(n, self.reference_or(fill));
        x[position] = xp;
        let cp = build_codeword_matrices(&x, &self.geometry, &self.tx, &self.rx, daft)?;
        x[position] = xq;
        let cq = build_codeword_matrices(&x, &self.geometry, &self.tx, &self.rx, daft)?;
        Ok((cp, cq))
    }
}

/// Ingredients of the PEP bound for one codeword pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PepTerms {
    /// Nonzero eigenvalues of `R^{1/2} Δᴴ Δ R^{1/2}`, descending.
    pub eigenvalues: Vec<f64>,
    /// Number of nonzero eigenvalues.
    pub rank: usize,
    /// Rank of the gain covariance.
    pub channel_rank: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma2_wbar: f64,
}

impl PepTerms {
    /// `(1/12) Π 1/(1+γ1 λ) + (1/4) Π 1/(1+γ2 λ)`.
    pub fn bound(&self) -> f64 {
        let prod = |g: f64| self.eigenvalues.iter().map(|l| 1.0 / (1.0 + g * l)).product::<f64>();
        prod(self.gamma1) / 12.0 + prod(self.gamma2) / 4.0
    }
}

/// Eigen-analysis of the pair `x_p → x_q` differing at `position`.
pub fn pep_terms(
    xp: Complex64,
    xq: Complex64,
    position: usize,
    setup: &ErrorSetup,
    daft: &Daft,
) -> Result<PepTerms> {
    let delta = setup.difference_matrix(xp, xq, position, xp, daft)?;
    pep_terms_from_difference(&delta, setup)
}

fn pep_terms_from_difference(delta: &CMatrix, setup: &ErrorSetup) -> Result<PepTerms> {
    let r_half = psd_sqrt(&setup.covariance);
    let channel_rank = psd_rank(&setup.covariance, EIGEN_CUTOFF);
    let p = setup.geometry.len();
    if channel_rank < 1 || channel_rank > p {
        return invalid(format!("gain covariance rank {channel_rank} outside 1..={p}"));
    }
    let dd = delta.ad_mul(delta);
    let mut weighted = &r_half * dd * &r_half;
    // enforce exact Hermitian symmetry before the eigen-solver
    weighted = (&weighted + weighted.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = hermitian_eigenvalues(&weighted);
    let max = ev.iter().copied().fold(0.0, f64::max);
    let mut eigenvalues: Vec<f64> = ev.into_iter().filter(|&l| max > 0.0 && l > EIGEN_CUTOFF * max).collect();
    eigenvalues.reverse();
    let s2 = setup.sigma2_wbar();
    Ok(PepTerms {
        rank: eigenvalues.len(),
        eigenvalues,
        channel_rank,
        gamma1: 1.0 / (4.0 * s2),
        gamma2: 1.0 / (3.0 * s2),
        sigma2_wbar: s2,
    })
}

/// Upper bound on `Pr(x_p → x_q)` for codewords differing at `position`.
pub fn pep_bound(xp: Complex64, xq: Complex64, position: usize, setup: &ErrorSetup, daft: &Daft) -> Result<f64> {
    Ok(pep_terms(xp, xq, position, setup, daft)?.bound())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionsMode {
    /// Average the pair PEP over all `N` positions.
    #[default]
    Averaged,
    /// Use a single position.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub p: usize,
    pub q: usize,
    pub pep: f64,
    pub bit_errors: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbepResult {
    /// Full union bound. Not clipped to 1.
    pub bound: f64,
    /// Union bound restricted to minimum-distance pairs.
    pub dominant_bound: f64,
    pub per_pair_terms: Vec<PairTerm>,
    pub positions_mode: PositionsMode,
}

/// `(1/(N_b 2^{N_b})) Σ_p Σ_{q≠p} PEP(p→q) N_be(p, q)`.
pub fn abep_bound(
    constellation: &Constellation,
    setup: &ErrorSetup,
    daft: &Daft,
    positions_mode: PositionsMode,
) -> Result<AbepResult> {
    let n = daft.n();
    let positions: Vec<usize> = match positions_mode {
        PositionsMode::Averaged => (0..n).collect(),
        PositionsMode::Fixed(m) => {
            if m >= n {
                return invalid(format!("position {m} out of range for N = {n}"));
            }
            vec![m]
        }
    };
    let pts = &constellation.points;
    let order = constellation.order();
    let mut dmin = f64::INFINITY;
    for p in 0..order {
        for q in 0..order {
            if p != q {
                dmin = dmin.min((pts[p] - pts[q]).norm());
            }
        }
    }
    let norm = 1.0 / (constellation.bits_per_symbol as f64 * order as f64);
    let mut terms = Vec::with_capacity(order * (order - 1));
    let mut bound = 0.0;
    let mut dominant = 0.0;
    for p in 0..order {
        for q in 0..order {
            if p == q {
                continue;
            }
            let mut pep = 0.0;
            for &m in &positions {
                pep += pep_bound(pts[p], pts[q], m, setup, daft)?;
            }
            pep /= positions.len() as f64;
            let bit_errors = constellation.bit_distance(p, q);
            let contribution = norm * pep * bit_errors as f64;
            bound += contribution;
            if (pts[p] - pts[q]).norm() <= dmin * (1.0 + 1e-9) {
                dominant += contribution;
            }
            terms.push(PairTerm { p, q, pep, bit_errors });
        }
    }
    Ok(AbepResult {
        bound,
        dominant_bound: dominant,
        per_pair_terms: terms,
        positions_mode,
    })
}

/// `e^{-x²/2}/12 + e^{-2x²/3}/4`, an approximation of the Gaussian `Q(x)`.
pub fn q_approx(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return invalid(format!("Q approximation needs a nonnegative argument, got {x}"));
    }
    Ok((-x * x / 2.0).exp() / 12.0 + (-2.0 * x * x / 3.0).exp() / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PepEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Monte Carlo `Pr(‖y − Ψ(x_q) h‖² < ‖y − Ψ(x_p) h‖²)` with
/// `y = Ψ(x_p) h + w̄`, `h ~ CN(0, R)` and `w̄ = A(μ_rx w + υ_rx w*)`.
/// Exact ties are split by a fair coin.
pub fn brute_force_pep(
    xp: Complex64,
    xq: Complex64,
    position: usize,
    setup: &ErrorSetup,
    daft: &Daft,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<PepEstimate> {
    if trials < MIN_PEP_TRIALS {
        return invalid(format!("need at least {MIN_PEP_TRIALS} trials, got {trials}"));
    }
    let (cp, cq) = setup.codeword_pair(xp, xq, position, xp, daft)?;
    let r_half = psd_sqrt(&setup.covariance);
    let n = daft.n();
    let p = setup.geometry.len();
    let noise_scale = (setup.sigma2 / 2.0).sqrt();
    let rx = setup.rx;
    let mut errors = 0usize;
    for _ in 0..trials {
        let z = CVector::from_fn(p, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let h = &r_half * z;
        let w = CVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            rx.apply(Complex64::new(re * noise_scale, im * noise_scale))
        });
        let wbar = daft.forward(&w)?;
        let mp = &cp.psi_sum * &h;
        let mq = &cq.psi_sum * &h;
        let y = &mp + wbar;
        let dp = (&y - mp).norm_squared();
        let dq = (&y - mq).norm_squared();
        if dq < dp || (dq == dp && rng.random::<bool>()) {
            errors += 1;
        }
    }
    let est = errors as f64 / trials as f64;
    Ok(PepEstimate {
        estimate: est,
        std_error: (est * (1.0 - est) / trials as f64).sqrt().max(0.5 / trials as f64),
        trials,
    })
}
