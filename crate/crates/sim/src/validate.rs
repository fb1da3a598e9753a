//! Deterministic self-checks of the signal model, shared by the
//! `validate` subcommand and the acceptance tests.

use std::time::Instant;

use afdm_iqi::linalg::{max_abs_diff, max_abs_diff_vec};
use afdm_iqi::{
    add_awgn, add_cpp, apply_iqi, apply_time_domain, compensate_rx, compensate_tx, daft_noise_stats,
    effective_matrix, iqi_from_db, mmse_estimate, remove_cpp, sample_channel, transmit, AfdmParams, CMatrix, CVector,
    CompensationConfig, Complex64, Constellation, Daft, DelayMode, DopplerMode, InnerDetector,
    IqImbalance, TimeSignal, TxInverseForm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the check's statistic.
    pub measured: f64,
    pub threshold: f64,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every check. Timing-based checks are skipped unless `timing`.
pub fn run_all(seed: u64, timing: bool) -> Result<ValidationReport> {
    let mut checks = vec![
        check_transform(seed)?,
        check_channel_equivalence(seed)?,
        check_compensation_exactness(seed)?,
        check_noise_statistics(seed, NOISE_DRAWS)?,
    ];
    if timing {
        checks.push(check_complexity_scaling(seed)?);
    }
    Ok(ValidationReport { seed, checks })
}

fn gaussian_vec(n: usize, rng: &mut impl Rng) -> CVector {
    add_awgn(&TimeSignal::new(CVector::zeros(n), false), 1.0, rng).samples
}

fn qpsk_vec(n: usize, rng: &mut impl Rng) -> CVector {
    let c = Constellation::qpsk();
    CVector::from_fn(n, |_, _| c.points[rng.random_range(0..4)])
}

pub const TRANSFORM_SIZES: [usize; 4] = [2, 8, 64, 256];

/// Unitarity, round trip, fast-vs-matrix and energy preservation.
pub fn check_transform(seed: u64) -> Result<CheckResult> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0f64;
    for n in TRANSFORM_SIZES {
        let tau = 1.min(n - 1);
        let settings = [
            AfdmParams::ofdm(n, 0, tau)?,
            AfdmParams::new(n, 1, tau, 1)?,
            AfdmParams::new(n, 2, tau, 1)?.with_c2(0.9 / (2.0 * n as f64))?,
        ];
        for p in settings {
            let daft = Daft::new(&p);
            let a = daft.matrix();
            worst = worst.max(max_abs_diff(&(&a * a.adjoint()), &CMatrix::identity(n, n)));
            for _ in 0..4 {
                let x = gaussian_vec(n, &mut rng);
                let s = daft.idaft(&x)?;
                worst = worst.max(max_abs_diff_vec(&daft.daft(&s)?, &x));
                worst = worst.max(max_abs_diff_vec(&daft.forward(&x)?, &(&a * &x)));
                worst = worst.max(max_abs_diff_vec(&s.samples, &a.ad_mul(&x)));
                worst = worst.max((s.samples.norm() - x.norm()).abs());
            }
        }
    }
    let seconds = t0.elapsed().as_secs_f64();
    Ok(CheckResult {
        name: "transform".into(),
        passed: worst < 1e-10 && seconds < 10.0,
        measured: worst,
        threshold: 1e-10,
        seconds,
        detail: format!("N in {TRANSFORM_SIZES:?}, budget 10 s"),
    })
}

/// Sample-wise convolution over the prefixed frame against the matrix form.
pub fn check_channel_equivalence(seed: u64) -> Result<CheckResult> {
    let t0 = Instant::now();
    let p = AfdmParams::new(64, 2, 2, 1)?;
    let daft = Daft::new(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let modes = [DopplerMode::Integer, DopplerMode::Fractional, DopplerMode::Jakes];
    let mut worst = 0f64;
    for trial in 0..200 {
        let chan = sample_channel(4, 2, 2, modes[trial % 3], DelayMode::Shared, &mut rng)?;
        let s = TimeSignal::new(gaussian_vec(64, &mut rng), false);
        let conv = remove_cpp(&apply_time_domain(&add_cpp(&s, &p)?, &chan, &p)?, &p)?;
        let eff = effective_matrix(&chan, &daft)?;
        worst = worst.max(max_abs_diff_vec(&conv.samples, &(&eff.time_matrix * &s.samples)));
    }
    let seconds = t0.elapsed().as_secs_f64();
    Ok(CheckResult {
        name: "channel_equivalence".into(),
        passed: worst < 1e-10 && seconds < 30.0,
        measured: worst,
        threshold: 1e-10,
        seconds,
        detail: "200 random channel/signal pairs at N = 64, budget 30 s".into(),
    })
}

/// Exact inverses, noiseless joint-imbalance recovery, and the
/// non-conjugated Tx inverse failing to invert.
pub fn check_compensation_exactness(seed: u64) -> Result<CheckResult> {
    let t0 = Instant::now();
    let p = AfdmParams::new(64, 2, 2, 1)?;
    let daft = Daft::new(&p);
    let tx = iqi_from_db(1.0, 3.0)?;
    let rx = iqi_from_db(1.5, 3.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut inverse_err = 0f64;
    let mut pipeline_err = 0f64;
    let mut printed_err = f64::INFINITY;
    let mut symbols_ok = true;
    let c = Constellation::qpsk();
    let config = CompensationConfig {
        inner: InnerDetector::ZeroForcing,
        ..CompensationConfig::joint(tx, rx)
    };
    let identity = CMatrix::identity(64, 64);
    for _ in 0..20 {
        let s = TimeSignal::new(gaussian_vec(66, &mut rng), true);
        inverse_err = inverse_err.max(max_abs_diff_vec(&compensate_rx(&apply_iqi(&s, &rx), &rx)?.samples, &s.samples));

        let x = gaussian_vec(64, &mut rng);
        let x_tilde = daft.forward(&daft.inverse(&x)?.map(|z| tx.apply(z)))?;
        inverse_err = inverse_err.max(max_abs_diff_vec(&compensate_tx(&x_tilde, &tx, &daft, TxInverseForm::Conjugated)?, &x));
        let printed = compensate_tx(&x_tilde, &tx, &daft, TxInverseForm::AsPrinted)?;
        printed_err = printed_err.min(max_abs_diff_vec(&printed, &x));

        let xq = qpsk_vec(64, &mut rng);
        let r = apply_iqi(&transmit(&xq, &tx, &daft, true)?, &rx);
        let soft = afdm_iqi::cascaded_estimate(&r, &identity, &config, 0.0, &daft)?;
        pipeline_err = pipeline_err.max(max_abs_diff_vec(&soft, &xq));
        symbols_ok &= c.decide(&soft) == c.decide(&xq);
    }
    let worst = inverse_err.max(pipeline_err);
    let seconds = t0.elapsed().as_secs_f64();
    Ok(CheckResult {
        name: "compensation_exactness".into(),
        passed: inverse_err < 1e-12 && pipeline_err < 1e-10 && symbols_ok && printed_err > 1e-3,
        measured: worst,
        threshold: 1e-12,
        seconds,
        detail: format!(
            "inverse error {inverse_err:.2e}, pipeline error {pipeline_err:.2e}, \
             non-conjugated Tx inverse error {printed_err:.2e} (must exceed 1e-3)"
        ),
    })
}

pub const NOISE_DRAWS: usize = 100_000;
const NOISE_N: usize = 16;

/// Sample covariance and pseudo-covariance of DAFT-domain Rx-distorted
/// noise against their closed forms, then the pseudo-covariance after Rx
/// compensation against zero. Statistic: worst deviation in standard errors.
pub fn check_noise_statistics(seed: u64, draws: usize) -> Result<CheckResult> {
    let t0 = Instant::now();
    let n = NOISE_N;
    let daft = Daft::new(&AfdmParams::new(n, 1, 1, 1)?);
    let rx = iqi_from_db(1.5, 3.5)?;
    let sigma2 = 1.0;
    let stats = daft_noise_stats(&rx, sigma2, &daft);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));

    let mut acc = [Moments::new(n), Moments::new(n), Moments::new(n)];
    for _ in 0..draws {
        let w = add_awgn(&TimeSignal::new(CVector::zeros(n), false), sigma2, &mut rng);
        let wbar = apply_iqi(&w, &rx);
        let a = daft.daft(&wbar)?;
        let b = daft.daft(&compensate_rx(&wbar, &rx)?)?;
        acc[0].add(&a, |u, v| u * v.conj());
        acc[1].add(&a, |u, v| u * v);
        acc[2].add(&b, |u, v| u * v);
    }
    let zero = CMatrix::zeros(n, n);
    let z_cov = acc[0].worst_z(&stats.cov, draws);
    let z_pcov = acc[1].worst_z(&stats.pcov, draws);
    let z_after = acc[2].worst_z(&zero, draws);
    let worst = z_cov.max(z_pcov).max(z_after);
    let seconds = t0.elapsed().as_secs_f64();
    Ok(CheckResult {
        name: "noise_statistics".into(),
        passed: worst < 5.0 && seconds < 60.0,
        measured: worst,
        threshold: 5.0,
        seconds,
        detail: format!(
            "{draws} draws at N = {n}; covariance {z_cov:.2} SE, pseudo-covariance {z_pcov:.2} SE, \
             compensated pseudo-covariance {z_after:.2} SE"
        ),
    })
}

struct Moments {
    n: usize,
    sum: Vec<Complex64>,
    sq: Vec<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Self {
            n,
            sum: vec![Complex64::new(0.0, 0.0); n * n],
            sq: vec![0.0; n * n],
        }
    }

    fn add(&mut self, v: &CVector, f: impl Fn(Complex64, Complex64) -> Complex64) {
        for j in 0..self.n {
            for i in 0..self.n {
                let z = f(v[i], v[j]);
                self.sum[i + j * self.n] += z;
                self.sq[i + j * self.n] += z.norm_sqr();
            }
        }
    }

    /// Largest `|mean − target| / SE` over all entries.
    fn worst_z(&self, target: &CMatrix, draws: usize) -> f64 {
        let t = draws as f64;
        let mut worst = 0f64;
        for j in 0..self.n {
            for i in 0..self.n {
                let k = i + j * self.n;
                let mean = self.sum[k] / t;
                let se = ((self.sq[k] / t - mean.norm_sqr()) / t).sqrt();
                worst = worst.max((mean - target[(i, j)]).norm() / se);
            }
        }
        worst
    }
}

pub const SCALING_EXPONENTS: std::ops::RangeInclusive<u32> = 6..=14;

/// Seconds per call, the minimum over several timed batches.
fn time_per_call(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut reps = 1usize;
    loop {
        let t0 = Instant::now();
        for _ in 0..reps {
            f()?;
        }
        if t0.elapsed().as_secs_f64() > 0.02 {
            break;
        }
        reps *= 2;
    }
    let mut best = f64::INFINITY;
    for _ in 0..7 {
        let t0 = Instant::now();
        for _ in 0..reps {
            f()?;
        }
        best = best.min(t0.elapsed().as_secs_f64() / reps as f64);
    }
    Ok(best)
}

fn compensation_cost(n: usize, tx: &IqImbalance, rx: &IqImbalance, rng: &mut impl Rng) -> Result<f64> {
    let p = AfdmParams::new(n, 2, 2, 1)?;
    let daft = Daft::new(&p);
    let r = TimeSignal::new(gaussian_vec(p.frame_len(), rng), true);
    let x = gaussian_vec(n, rng);
    time_per_call(|| {
        std::hint::black_box(compensate_rx(std::hint::black_box(&r), rx)?);
        std::hint::black_box(compensate_tx(std::hint::black_box(&x), tx, &daft, TxInverseForm::Conjugated)?);
        Ok(())
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingMeasurement {
    pub sizes: Vec<usize>,
    pub compensation_seconds: Vec<f64>,
    pub slope: f64,
    pub mmse_seconds_n64: f64,
    pub compensation_seconds_n64: f64,
}

pub fn measure_scaling(seed: u64) -> Result<ScalingMeasurement> {
    let tx = iqi_from_db(1.0, 3.0)?;
    let rx = iqi_from_db(1.0, 3.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
    let sizes: Vec<usize> = SCALING_EXPONENTS.map(|e| 1usize << e).collect();
    let mut secs = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        secs.push(compensation_cost(n, &tx, &rx, &mut rng)?);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &secs);

    let p = AfdmParams::new(64, 2, 2, 1)?;
    let daft = Daft::new(&p);
    let chan = sample_channel(4, 2, 2, DopplerMode::Integer, DelayMode::Shared, &mut rng)?;
    let h_eff = effective_matrix(&chan, &daft)?.daft_matrix;
    let y = gaussian_vec(64, &mut rng);
    let mmse = time_per_call(|| {
        std::hint::black_box(mmse_estimate(std::hint::black_box(&y), &h_eff, 0.1)?);
        Ok(())
    })?;
    let comp64 = compensation_cost(64, &tx, &rx, &mut rng)?;
    Ok(ScalingMeasurement {
        sizes,
        compensation_seconds: secs,
        slope,
        mmse_seconds_n64: mmse,
        compensation_seconds_n64: comp64,
    })
}

/// Compensation cost linear in `N`, and small next to the MMSE solve.
pub fn check_complexity_scaling(seed: u64) -> Result<CheckResult> {
    let t0 = Instant::now();
    let m = measure_scaling(seed)?;
    let ratio = m.mmse_seconds_n64 / m.compensation_seconds_n64;
    Ok(CheckResult {
        name: "complexity_scaling".into(),
        passed: (m.slope - 1.0).abs() <= 0.15 && ratio >= 10.0,
        measured: m.slope,
        threshold: 0.15,
        seconds: t0.elapsed().as_secs_f64(),
        detail: format!(
            "log-log slope {:.3} over N = 2^6..2^14 (target 1 +/- 0.15); MMSE / compensation at N = 64: {ratio:.1} (needs >= 10)",
            m.slope
        ),
    })
}
