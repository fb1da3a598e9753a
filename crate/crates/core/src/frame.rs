//! Time-domain frames and the chirp-periodic prefix.

use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, CVector};
use crate::params::AfdmParams;

/// Time-domain samples, with or without the `cpp_len` prefix samples in front.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: CVector,
    pub has_cpp: bool,
}

impl TimeSignal {
    pub fn new(samples: CVector, has_cpp: bool) -> Self {
        Self { samples, has_cpp }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.norm_squared()
    }

    pub(crate) fn map(&self, f: impl Fn(num_complex::Complex64) -> num_complex::Complex64) -> Self {
        Self::new(self.samples.map(f), self.has_cpp)
    }

    /// Sample-wise map that keeps the prefix state.
    pub fn map_samples(&self, f: impl Fn(num_complex::Complex64) -> num_complex::Complex64) -> Self {
        self.map(f)
    }

    fn expect(&self, has_cpp: bool, params: &AfdmParams) -> Result<()> {
        if self.has_cpp != has_cpp {
            return Err(Error::PrefixState { expected: has_cpp });
        }
        let expected = if has_cpp { params.frame_len() } else { params.n };
        if self.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Phase applied to prefix sample `n` (negative index) copied from `s[N+n]`.
pub(crate) fn prefix_phase(params: &AfdmParams, n: i64) -> num_complex::Complex64 {
    let nn = params.n as f64;
    cis_cycles(-params.c1 * (nn * nn + 2.0 * nn * n as f64))
}

/// Prepends `cpp_len` samples `s[n] = s[N+n] e^{-j2π c1 (N² + 2Nn)}`, `n = -L..-1`.
pub fn add_cpp(s: &TimeSignal, params: &AfdmParams) -> Result<TimeSignal> {
    s.expect(false, params)?;
    let n = params.n;
    let l = params.cpp_len;
    let out = CVector::from_fn(n + l, |i, _| {
        if i >= l {
            s.samples[i - l]
        } else {
            let idx = i as i64 - l as i64;
            s.samples[(n as i64 + idx) as usize] * prefix_phase(params, idx)
        }
    });
    Ok(TimeSignal::new(out, true))
}

/// Drops the first `cpp_len` samples.
pub fn remove_cpp(r: &TimeSignal, params: &AfdmParams) -> Result<TimeSignal> {
    r.expect(true, params)?;
    Ok(TimeSignal::new(
        r.samples.rows(params.cpp_len, params.n).into_owned(),
        false,
    ))
}
