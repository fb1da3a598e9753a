//! Discrete affine Fourier transform.
//!
//! `A = Λ_{c2} F Λ_{c1}` where `Λ_c = diag(e^{-j2π c n²})` and `F` is the
//! unitary DFT with kernel `e^{-j2π nm/N}/√N`. The forward transform maps a
//! time-domain frame to chirp-subcarrier symbols, the inverse maps symbols to
//! samples. Power-of-two sizes run through an FFT sandwiched between the two
//! chirp multiplications; other sizes fall back to the explicit matrix.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frame::TimeSignal;
use crate::linalg::{check_len, cis_cycles, conj_vec, CMatrix, CVector};
use crate::params::AfdmParams;

#[derive(Clone)]
enum Engine {
    Fft {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Matrix(Arc<CMatrix>),
}

/// Precomputed DAFT for one parameter set. Cheap to clone and shareable
/// across threads.
#[derive(Clone)]
pub struct Daft {
    params: AfdmParams,
    chirp1: Arc<[Complex64]>,
    chirp2: Arc<[Complex64]>,
    scale: f64,
    engine: Engine,
}

impl fmt::Debug for Daft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Daft")
            .field("params", &self.params)
            .field("fast", &self.is_fast())
            .finish()
    }
}

fn chirp(c: f64, n: usize) -> Arc<[Complex64]> {
    (0..n)
        .map(|i| {
            let i = i as f64;
            cis_cycles(-c * i * i)
        })
        .collect()
}

fn build_matrix(chirp1: &[Complex64], chirp2: &[Complex64], n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |m, k| {
        // reduce mk mod N in integers so the DFT phase stays exact for large N
        let phase = ((m * k) % n) as f64 / n as f64;
        chirp2[m] * cis_cycles(-phase) * chirp1[k] * scale
    })
}

impl Daft {
    pub fn new(params: &AfdmParams) -> Self {
        let n = params.n;
        let chirp1 = chirp(params.c1, n);
        let chirp2 = chirp(params.c2, n);
        let engine = if n.is_power_of_two() {
            let mut planner = FftPlanner::new();
            Engine::Fft {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        } else {
            Engine::Matrix(Arc::new(build_matrix(&chirp1, &chirp2, n)))
        };
        Self {
            params: *params,
            chirp1,
            chirp2,
            scale: 1.0 / (n as f64).sqrt(),
            engine,
        }
    }

    pub fn params(&self) -> &AfdmParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn is_fast(&self) -> bool {
        matches!(self.engine, Engine::Fft { .. })
    }

    /// The explicit `N×N` transform matrix `A`.
    pub fn matrix(&self) -> CMatrix {
        match &self.engine {
            Engine::Matrix(a) => (**a).clone(),
            Engine::Fft { .. } => build_matrix(&self.chirp1, &self.chirp2, self.params.n),
        }
    }

    /// `A v`.
    pub fn forward(&self, v: &CVector) -> Result<CVector> {
        check_len(self.params.n, v.len())?;
        Ok(match &self.engine {
            Engine::Matrix(a) => &**a * v,
            Engine::Fft { forward, .. } => {
                let mut buf: Vec<Complex64> =
                    v.iter().zip(self.chirp1.iter()).map(|(x, c)| x * c).collect();
                forward.process(&mut buf);
                CVector::from_iterator(
                    buf.len(),
                    buf.iter()
                        .zip(self.chirp2.iter())
                        .map(|(x, c)| x * c * self.scale),
                )
            }
        })
    }

    /// `Aᴴ v`.
    pub fn inverse(&self, v: &CVector) -> Result<CVector> {
        check_len(self.params.n, v.len())?;
        Ok(match &self.engine {
            Engine::Matrix(a) => a.ad_mul(v),
            Engine::Fft { inverse, .. } => {
                let mut buf: Vec<Complex64> = v
                    .iter()
                    .zip(self.chirp2.iter())
                    .map(|(x, c)| x * c.conj())
                    .collect();
                inverse.process(&mut buf);
                CVector::from_iterator(
                    buf.len(),
                    buf.iter()
                        .zip(self.chirp1.iter())
                        .map(|(x, c)| x * c.conj() * self.scale),
                )
            }
        })
    }

    /// `Aᵀ v`, computed as `conj(Aᴴ conj(v))`.
    pub fn transpose_apply(&self, v: &CVector) -> Result<CVector> {
        Ok(conj_vec(&self.inverse(&conj_vec(v))?))
    }

    /// IDAFT: symbols to a prefix-free time frame.
    pub fn idaft(&self, x: &CVector) -> Result<TimeSignal> {
        Ok(TimeSignal::new(self.inverse(x)?, false))
    }

    /// DAFT of a frame whose prefix has already been removed.
    pub fn daft(&self, r: &TimeSignal) -> Result<CVector> {
        if r.has_cpp {
            return Err(Error::PrefixState { expected: false });
        }
        self.forward(&r.samples)
    }
}

/// `A = Λ_{c2} F Λ_{c1}` for `params`.
pub fn daft_matrix(params: &AfdmParams) -> CMatrix {
    let chirp1 = chirp(params.c1, params.n);
    let chirp2 = chirp(params.c2, params.n);
    build_matrix(&chirp1, &chirp2, params.n)
}

pub fn idaft(x: &CVector, params: &AfdmParams) -> Result<TimeSignal> {
    Daft::new(params).idaft(x)
}

pub fn daft(r: &TimeSignal, params: &AfdmParams) -> Result<CVector> {
    Daft::new(params).daft(r)
}
