//! AFDM frame parameters and chirp-rate selection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Frame geometry of one AFDM symbol.
///
/// `c1` and `c2` are in cycles per sample squared. `nu_max`/`tau_max` are the
/// integer Doppler and delay bounds the chirp rate was designed for, and
/// `cpp_len` the number of chirp-periodic prefix samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfdmParams {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub nu_max: usize,
    pub tau_max: usize,
    pub zeta_nu: usize,
    pub cpp_len: usize,
}

/// Returns `(c1, c2)` with `c1 = (2(nu_max + zeta_nu) + 1) / (2N)`.
///
/// Without an override `c2` defaults to `1/(2N^2)`, which is rational and
/// well below the `1/(2N)` ceiling.
pub fn derive_chirp_rates(
    nu_max: usize,
    zeta_nu: usize,
    n: usize,
    c2_override: Option<f64>,
) -> Result<(f64, f64)> {
    if n < 2 {
        return invalid(format!("N must be at least 2, got {n}"));
    }
    let nf = n as f64;
    let c1 = (2 * (nu_max + zeta_nu) + 1) as f64 / (2.0 * nf);
    let c2 = match c2_override {
        Some(c2) => {
            check_c2(c2, n)?;
            c2
        }
        None => 1.0 / (2.0 * nf * nf),
    };
    Ok((c1, c2))
}

fn check_c2(c2: f64, n: usize) -> Result<()> {
    let ceiling = 1.0 / (2.0 * n as f64);
    if !(0.0..ceiling).contains(&c2) {
        return invalid(format!("c2 = {c2} outside [0, 1/(2N)) = [0, {ceiling})"));
    }
    Ok(())
}

impl AfdmParams {
    /// Parameters with chirp rates derived from the Doppler bound and the
    /// shortest valid prefix (`cpp_len = tau_max`).
    pub fn new(n: usize, nu_max: usize, tau_max: usize, zeta_nu: usize) -> Result<Self> {
        let (c1, c2) = derive_chirp_rates(nu_max, zeta_nu, n, None)?;
        Self::with_chirp_rates(n, c1, c2, nu_max, tau_max, zeta_nu, tau_max)
    }

    /// Fully explicit constructor; validates every invariant.
    pub fn with_chirp_rates(
        n: usize,
        c1: f64,
        c2: f64,
        nu_max: usize,
        tau_max: usize,
        zeta_nu: usize,
        cpp_len: usize,
    ) -> Result<Self> {
        if n < 2 {
            return invalid(format!("N must be at least 2, got {n}"));
        }
        if tau_max >= n {
            return invalid(format!("tau_max = {tau_max} must be below N = {n}"));
        }
        if cpp_len < tau_max {
            return invalid(format!("prefix length {cpp_len} shorter than tau_max = {tau_max}"));
        }
        if !c1.is_finite() {
            return invalid("c1 must be finite");
        }
        check_c2(c2, n)?;
        Ok(Self {
            n,
            c1,
            c2,
            nu_max,
            tau_max,
            zeta_nu,
            cpp_len,
        })
    }

    /// OFDM is AFDM with both chirp rates at zero.
    pub fn ofdm(n: usize, nu_max: usize, tau_max: usize) -> Result<Self> {
        Self::with_chirp_rates(n, 0.0, 0.0, nu_max, tau_max, 0, tau_max)
    }

    pub fn with_cpp_len(self, cpp_len: usize) -> Result<Self> {
        Self::with_chirp_rates(
            self.n,
            self.c1,
            self.c2,
            self.nu_max,
            self.tau_max,
            self.zeta_nu,
            cpp_len,
        )
    }

    pub fn with_c2(self, c2: f64) -> Result<Self> {
        Self::with_chirp_rates(
            self.n,
            self.c1,
            c2,
            self.nu_max,
            self.tau_max,
            self.zeta_nu,
            self.cpp_len,
        )
    }

    pub fn frame_len(&self) -> usize {
        self.n + self.cpp_len
    }

    pub fn is_ofdm(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0
    }
}
