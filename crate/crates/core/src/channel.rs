//! Doubly selective channel: sampling, sample-wise application and the
//! equivalent matrix `H = Σ h_i Γ_i Δ_{ν_i} Π^{τ_i}`.
//!
//! Two independent routes exist for the same linear map. [`apply_time_domain`]
//! runs the discrete convolution over the prefixed frame; [`effective_matrix`]
//! builds the post-prefix `N×N` matrix. Tests pin them against each other.

use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::TimeSignal;
use crate::linalg::{cis_cycles, is_hermitian, psd_sqrt, CMatrix, CVector, ZERO};
use crate::params::AfdmParams;
use crate::transform::Daft;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DopplerMode {
    #[default]
    Integer,
    Fractional,
    Jakes,
}

/// How path delays are drawn. Both modes force the first path to delay 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayMode {
    /// Delays pairwise distinct; needs `P ≤ tau_max + 1`.
    #[default]
    Distinct,
    /// Delays may repeat. Under integer Doppler the `(delay, doppler)` pairs
    /// are kept distinct so no two paths collapse into one.
    Shared,
}

/// Delay/Doppler position of one path, without its gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGeometry {
    pub delay: usize,
    pub doppler: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub delay: usize,
    pub doppler: f64,
}

impl PathComponent {
    pub fn geometry(&self) -> PathGeometry {
        PathGeometry {
            delay: self.delay,
            doppler: self.doppler,
        }
    }
}

/// One channel draw plus the gain covariance `E[h hᴴ]` it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathComponent>,
    pub covariance: CMatrix,
}

impl ChannelRealization {
    /// Builds a realization with the default covariance `(1/P) I`.
    pub fn new(paths: Vec<PathComponent>) -> Result<Self> {
        if paths.is_empty() {
            return invalid("a channel needs at least one path");
        }
        let p = paths.len();
        Ok(Self {
            paths,
            covariance: default_covariance(p),
        })
    }

    /// Single unit-gain path with no delay or Doppler.
    pub fn identity() -> Self {
        Self {
            paths: vec![PathComponent {
                gain: Complex64::new(1.0, 0.0),
                delay: 0,
                doppler: 0.0,
            }],
            covariance: CMatrix::identity(1, 1),
        }
    }

    pub fn with_covariance(mut self, covariance: CMatrix) -> Result<Self> {
        check_covariance(&covariance, self.paths.len())?;
        self.covariance = covariance;
        Ok(self)
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn gains(&self) -> CVector {
        CVector::from_iterator(self.paths.len(), self.paths.iter().map(|p| p.gain))
    }

    pub fn geometry(&self) -> Vec<PathGeometry> {
        self.paths.iter().map(PathComponent::geometry).collect()
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay).max().unwrap_or(0)
    }

    /// `H s` on a prefix-free frame, using the sparse path structure.
    pub fn apply_matrix(&self, s: &CVector, params: &AfdmParams) -> CVector {
        let n = params.n;
        let mut out = CVector::zeros(n);
        for path in &self.paths {
            for (row, o) in out.iter_mut().enumerate() {
                *o += path.gain
                    * path_entry(params, path.delay, path.doppler, row)
                    * s[(row + n - path.delay % n) % n];
            }
        }
        out
    }

    /// Dense time-domain matrix `H`.
    pub fn time_matrix(&self, params: &AfdmParams) -> CMatrix {
        let n = params.n;
        let mut h = CMatrix::zeros(n, n);
        for path in &self.paths {
            for row in 0..n {
                h[(row, (row + n - path.delay % n) % n)] +=
                    path.gain * path_entry(params, path.delay, path.doppler, row);
            }
        }
        h
    }
}

pub fn default_covariance(p: usize) -> CMatrix {
    CMatrix::identity(p, p) / Complex64::new(p as f64, 0.0)
}

pub(crate) fn check_covariance(cov: &CMatrix, p: usize) -> Result<()> {
    if cov.shape() != (p, p) {
        return invalid(format!("covariance must be {p}x{p}, got {:?}", cov.shape()));
    }
    if !is_hermitian(cov, 1e-12) {
        return invalid("covariance is not Hermitian");
    }
    let min_ev = crate::linalg::hermitian_eigenvalues(cov)
        .first()
        .copied()
        .unwrap_or(0.0);
    if min_ev < -1e-12 {
        return invalid(format!("covariance is not PSD (eigenvalue {min_ev:e})"));
    }
    Ok(())
}

/// Diagonal factor `Γ_i[n] Δ_i[n]` of a path at output sample `n`.
///
/// `Γ` carries `e^{-j2π c1 (N² - 2N(τ - n))}` on the samples that wrapped into
/// the prefix (`n < τ`) and is 1 elsewhere; `Δ` is `e^{-j2π ν n / N}`.
pub(crate) fn path_entry(params: &AfdmParams, delay: usize, doppler: f64, n: usize) -> Complex64 {
    let nn = params.n as f64;
    let doppler_phase = -doppler * n as f64 / nn;
    let wrap_phase = if n < delay {
        -params.c1 * (nn * nn - 2.0 * nn * (delay - n) as f64)
    } else {
        0.0
    };
    cis_cycles(doppler_phase + wrap_phase)
}

/// Dense `Γ Δ Π^τ` for a unit-gain path.
pub fn path_matrix(geometry: &PathGeometry, params: &AfdmParams) -> CMatrix {
    let n = params.n;
    let mut m = CMatrix::zeros(n, n);
    for row in 0..n {
        m[(row, (row + n - geometry.delay % n) % n)] =
            path_entry(params, geometry.delay, geometry.doppler, row);
    }
    m
}

/// `Γ Δ Π^τ s` for a unit-gain path, without forming the matrix.
pub(crate) fn apply_path(geometry: &PathGeometry, s: &CVector, params: &AfdmParams) -> CVector {
    let n = params.n;
    CVector::from_fn(n, |row, _| {
        path_entry(params, geometry.delay, geometry.doppler, row) * s[(row + n - geometry.delay % n) % n]
    })
}

fn complex_normal(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

fn draw_doppler(mode: DopplerMode, nu_max: usize, rng: &mut impl Rng) -> f64 {
    let nu = nu_max as f64;
    match mode {
        DopplerMode::Integer => rng.random_range(-(nu_max as i64)..=nu_max as i64) as f64,
        DopplerMode::Fractional => {
            if nu_max == 0 {
                0.0
            } else {
                rng.random_range(-nu..=nu)
            }
        }
        DopplerMode::Jakes => nu * (std::f64::consts::TAU * rng.random::<f64>()).cos(),
    }
}

/// Draws path positions. The first path always sits at delay 0.
pub fn sample_geometry(
    p: usize,
    tau_max: usize,
    nu_max: usize,
    doppler_mode: DopplerMode,
    delay_mode: DelayMode,
    rng: &mut impl Rng,
) -> Result<Vec<PathGeometry>> {
    if p == 0 {
        return invalid("P must be at least 1");
    }
    match delay_mode {
        DelayMode::Distinct => {
            if p > tau_max + 1 {
                return invalid(format!(
                    "P = {p} paths cannot have distinct delays within tau_max = {tau_max}"
                ));
            }
            let mut delays = vec![0usize];
            if p > 1 {
                delays.extend(sample_indices(rng, tau_max, p - 1).into_iter().map(|d| d + 1));
            }
            Ok(delays
                .into_iter()
                .map(|delay| PathGeometry {
                    delay,
                    doppler: draw_doppler(doppler_mode, nu_max, rng),
                })
                .collect())
        }
        DelayMode::Shared => {
            let integer = doppler_mode == DopplerMode::Integer;
            let cells = (tau_max + 1) * (2 * nu_max + 1);
            if integer && p > cells {
                return invalid(format!(
                    "P = {p} paths exceed the {cells} distinct integer delay-Doppler cells"
                ));
            }
            let mut out: Vec<PathGeometry> = Vec::with_capacity(p);
            while out.len() < p {
                let delay = if out.is_empty() {
                    0
                } else {
                    rng.random_range(0..=tau_max)
                };
                let doppler = draw_doppler(doppler_mode, nu_max, rng);
                let clash = integer
                    && out
                        .iter()
                        .any(|g| g.delay == delay && g.doppler == doppler);
                if !clash {
                    out.push(PathGeometry { delay, doppler });
                }
            }
            Ok(out)
        }
    }
}

/// Fresh gains `h ~ CN(0, covariance)` on a fixed geometry.
pub fn sample_gains(
    geometry: &[PathGeometry],
    covariance: &CMatrix,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    let p = geometry.len();
    if p == 0 {
        return invalid("a channel needs at least one path");
    }
    check_covariance(covariance, p)?;
    let z = CVector::from_fn(p, |_, _| complex_normal(rng, 1.0));
    let h = if *covariance == default_covariance(p) {
        z / Complex64::new((p as f64).sqrt(), 0.0)
    } else {
        psd_sqrt(covariance) * z
    };
    Ok(ChannelRealization {
        paths: geometry
            .iter()
            .zip(h.iter())
            .map(|(g, &gain)| PathComponent {
                gain,
                delay: g.delay,
                doppler: g.doppler,
            })
            .collect(),
        covariance: covariance.clone(),
    })
}

/// Draws `P` paths with i.i.d. `CN(0, 1/P)` gains.
pub fn sample_channel(
    p: usize,
    tau_max: usize,
    nu_max: usize,
    doppler_mode: DopplerMode,
    delay_mode: DelayMode,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    let geometry = sample_geometry(p, tau_max, nu_max, doppler_mode, delay_mode, rng)?;
    sample_gains(&geometry, &default_covariance(p), rng)
}

/// Sample-wise `r[n] = Σ h_i e^{-j2π ν_i n/N} s[n - τ_i]` over the prefixed
/// frame, `n = -L..N-1`. Samples that would reach before the frame start are
/// taken as zero; they only affect prefix outputs that are later discarded.
pub fn apply_time_domain(
    s: &TimeSignal,
    chan: &ChannelRealization,
    params: &AfdmParams,
) -> Result<TimeSignal> {
    if !s.has_cpp {
        return Err(Error::PrefixState { expected: true });
    }
    let l = params.cpp_len;
    let total = params.frame_len();
    if s.len() != total {
        return Err(Error::LengthMismatch {
            expected: total,
            actual: s.len(),
        });
    }
    if let Some(p) = chan.paths.iter().find(|p| p.delay > l) {
        return Err(Error::DelayExceedsPrefix {
            delay: p.delay,
            cpp_len: l,
        });
    }
    let nn = params.n as f64;
    let mut out = CVector::from_element(total, ZERO);
    for path in &chan.paths {
        for (e, o) in out.iter_mut().enumerate() {
            if e < path.delay {
                continue;
            }
            let n = e as f64 - l as f64;
            *o += path.gain * cis_cycles(-path.doppler * n / nn) * s.samples[e - path.delay];
        }
    }
    Ok(TimeSignal::new(out, true))
}

/// Time-domain `H` and its DAFT-domain counterpart `H_eff = A H Aᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub time_matrix: CMatrix,
    pub daft_matrix: CMatrix,
}

impl EffectiveChannel {
    pub fn identity(n: usize) -> Self {
        Self {
            time_matrix: CMatrix::identity(n, n),
            daft_matrix: CMatrix::identity(n, n),
        }
    }
}

/// Builds `H` and `H_eff`. `H_eff` is assembled column by column as
/// `A H (Aᴴ e_k)` with fast transforms and the sparse path structure.
pub fn effective_matrix(chan: &ChannelRealization, daft: &Daft) -> Result<EffectiveChannel> {
    let params = daft.params();
    let n = params.n;
    let mut heff = CMatrix::zeros(n, n);
    let mut e = CVector::zeros(n);
    for k in 0..n {
        e[k] = Complex64::new(1.0, 0.0);
        let u = daft.inverse(&e)?;
        let col = daft.forward(&chan.apply_matrix(&u, params))?;
        heff.set_column(k, &col);
        e[k] = ZERO;
    }
    Ok(EffectiveChannel {
        time_matrix: chan.time_matrix(params),
        daft_matrix: heff,
    })
}
