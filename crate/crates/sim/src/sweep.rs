//! Seeded Monte Carlo sweeps and bound sweeps.
//!
//! Frames are simulated in fixed-size chunks. Each round evaluates a fixed
//! number of chunks in parallel and the outcomes are then scanned in frame
//! order, so the stopping point and every total are independent of the
//! worker count.

use afdm_iqi::{abep_bound, AbepResult, Daft};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Detector, IqiSpec, LinkConfig, Waveform};
use crate::error::{config_err, Result, SimError};
use crate::linksim::{FrameOutcome, LinkSimulator};

/// Frames per parallel work item.
pub const CHUNK_FRAMES: u64 = 16;
/// Upper bound on chunks per round; rounds grow 1, 2, 4, ... up to this.
const MAX_ROUND_CHUNKS: u64 = 32;

/// Worker pool for the sweeps.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return config_err("worker count must be positive");
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
    /// Stopped at `max_frames` before collecting `min_bit_errors`.
    pub truncated: bool,
}

impl BerPoint {
    /// Binomial standard error of `ber`.
    pub fn std_error(&self) -> f64 {
        if self.bits == 0 {
            return f64::INFINITY;
        }
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    pub config_digest: String,
    pub seed: u64,
}

impl BerCurve {
    pub fn ber_at(&self, snr_db: f64) -> Option<&BerPoint> {
        self.points.iter().find(|p| (p.snr_db - snr_db).abs() < 1e-9)
    }
}

/// Simulates one SNR point until `min_bit_errors` or `max_frames`.
pub fn simulate_point(sim: &LinkSimulator, snr_index: usize, snr_db: f64, runner: &Runner) -> Result<BerPoint> {
    let cfg = sim.config();
    let stop = cfg.stopping;
    let pt = sim.point(snr_index, cfg.sigma2(snr_db));
    let (mut errors, mut bits, mut frames) = (0u64, 0u64, 0u64);
    let mut round_chunks = 1u64;
    'rounds: while frames < stop.max_frames {
        let start = frames;
        let end = (start + round_chunks * CHUNK_FRAMES).min(stop.max_frames);
        let ranges: Vec<(u64, u64)> = (start..end)
            .step_by(CHUNK_FRAMES as usize)
            .map(|a| (a, (a + CHUNK_FRAMES).min(end)))
            .collect();
        let chunks: Vec<Result<Vec<FrameOutcome>>> =
            runner.pool.install(|| ranges.par_iter().map(|&(a, b)| sim.run_frames(&pt, a..b)).collect());
        for chunk in chunks {
            for o in chunk? {
                errors += o.bit_errors;
                bits += o.bits;
                frames += 1;
                if errors >= stop.min_bit_errors {
                    break 'rounds;
                }
            }
        }
        round_chunks = (round_chunks * 2).min(MAX_ROUND_CHUNKS);
    }
    Ok(BerPoint {
        snr_db,
        ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
        bit_errors: errors,
        bits,
        frames,
        truncated: errors < stop.min_bit_errors,
    })
}

pub fn run_ber_sweep(cfg: &LinkConfig, runner: &Runner) -> Result<BerCurve> {
    let sim = LinkSimulator::new(cfg)?;
    let points = cfg
        .snr
        .grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| simulate_point(&sim, i, snr, runner))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        points,
        config_digest: cfg.digest()?,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbepPoint {
    pub snr_db: f64,
    pub abep_bound: f64,
    pub dominant_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbepCurve {
    pub points: Vec<AbepPoint>,
    pub config_digest: String,
    pub seed: u64,
}

fn abep_at(cfg: &LinkConfig, daft: &Daft, snr_db: f64) -> Result<AbepResult> {
    Ok(abep_bound(&cfg.constellation(), &cfg.error_setup(snr_db)?, daft, cfg.bound.positions)?)
}

/// Union bound over the SNR grid. Needs a fixed channel geometry.
pub fn run_abep_sweep(cfg: &LinkConfig, runner: &Runner) -> Result<AbepCurve> {
    cfg.validate()?;
    let daft = Daft::new(&cfg.params()?);
    let points = runner.pool.install(|| {
        cfg.snr
            .grid_db
            .par_iter()
            .map(|&snr_db| {
                let r = abep_at(cfg, &daft, snr_db)?;
                Ok(AbepPoint {
                    snr_db,
                    abep_bound: r.bound,
                    dominant_bound: r.dominant_bound,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(AbepCurve {
        points,
        config_digest: cfg.digest()?,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    #[default]
    Tx,
    Rx,
}

/// Default sweep grid: both mismatches grow together from zero.
pub fn default_iqi_axis() -> Vec<IqiSpec> {
    [(0.0, 0.0), (0.5, 2.0), (1.0, 3.0), (1.5, 3.5), (2.0, 4.0), (2.5, 5.0)]
        .into_iter()
        .map(|(a, p)| IqiSpec::new(a, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqiPoint {
    pub aim_db: f64,
    pub pim_deg: f64,
    pub ber_sim: f64,
    pub abep_bound: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqiSweepResult {
    pub sweep_axis: SweepAxis,
    pub fixed_other: IqiSpec,
    pub snr_db: f64,
    pub points: Vec<IqiPoint>,
    pub config_digest: String,
    pub seed: u64,
}

/// ML-detected BER and union bound at each imbalance on `axis`, with the
/// other front end held at `fixed_other`. Every point reuses the same bits,
/// channels and noise, so differences along the axis come from the
/// imbalance alone.
pub fn run_iqi_sweep(
    cfg: &LinkConfig,
    axis: SweepAxis,
    values: &[IqiSpec],
    fixed_other: IqiSpec,
    snr_db: f64,
    runner: &Runner,
) -> Result<IqiSweepResult> {
    if values.is_empty() {
        return config_err("IQI sweep axis is empty");
    }
    let mut base = cfg.clone();
    base.receiver.detector = Detector::Ml;
    base.receiver.compensate_rx = false;
    base.receiver.compensate_tx = false;
    base.snr.grid_db = vec![snr_db];
    base.validate()?;
    let daft = Daft::new(&base.params()?);
    let mut points = Vec::with_capacity(values.len());
    for v in values {
        let mut c = base.clone();
        match axis {
            SweepAxis::Tx => {
                c.tx_iqi = *v;
                c.rx_iqi = fixed_other;
            }
            SweepAxis::Rx => {
                c.rx_iqi = *v;
                c.tx_iqi = fixed_other;
            }
        }
        let sim = LinkSimulator::new(&c)?;
        let p = simulate_point(&sim, 0, snr_db, runner)?;
        let bound = abep_at(&c, &daft, snr_db)?;
        points.push(IqiPoint {
            aim_db: v.amp_db,
            pim_deg: v.phase_deg,
            ber_sim: p.ber,
            abep_bound: bound.bound,
            bit_errors: p.bit_errors,
            bits: p.bits,
            frames: p.frames,
            truncated: p.truncated,
        });
    }
    Ok(IqiSweepResult {
        sweep_axis: axis,
        fixed_other,
        snr_db,
        points,
        config_digest: base.digest()?,
        seed: cfg.seed,
    })
}

/// SNR at which the curve first falls below `target`, by linear
/// interpolation of `log10(BER)` against SNR. Zero-error points are taken at
/// half an error so the log stays finite.
pub fn snr_at_ber(curve: &BerCurve, target: f64) -> Option<f64> {
    let lg = |p: &BerPoint| (p.ber.max(0.5 / p.bits.max(1) as f64)).log10();
    let t = target.log10();
    let pts = &curve.points;
    if let Some(first) = pts.first() {
        if lg(first) <= t {
            return Some(first.snr_db);
        }
    }
    pts.windows(2).find_map(|w| {
        let (a, b) = (lg(&w[0]), lg(&w[1]));
        (a > t && b <= t).then(|| w[0].snr_db + (t - a) / (b - a) * (w[1].snr_db - w[0].snr_db))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub waveform: Waveform,
    pub target_ber: f64,
    pub ideal_snr_db: Option<f64>,
    pub impaired_snr_db: Option<f64>,
    /// `None` when either curve never reaches the target.
    pub loss_db: Option<f64>,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCurves {
    pub waveform: Waveform,
    pub ideal: BerCurve,
    pub impaired: BerCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub curves: Vec<CompareCurves>,
    pub config_digest: String,
    pub seed: u64,
}

/// Per waveform, the SNR loss at `target_ber` of the impaired link against
/// the same link with both imbalances removed. Both run plain MMSE.
pub fn run_waveform_compare(
    cfg: &LinkConfig,
    waveforms: &[Waveform],
    target_ber: f64,
    runner: &Runner,
) -> Result<CompareTable> {
    if waveforms.is_empty() {
        return config_err("no waveforms to compare");
    }
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return config_err(format!("target BER {target_ber} outside (0, 0.5)"));
    }
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &w in waveforms {
        let mut impaired = cfg.clone();
        impaired.waveform = w;
        impaired.receiver.detector = Detector::Mmse;
        impaired.receiver.compensate_rx = false;
        impaired.receiver.compensate_tx = false;
        let mut ideal = impaired.clone();
        ideal.tx_iqi = IqiSpec::default();
        ideal.rx_iqi = IqiSpec::default();
        let ideal_curve = run_ber_sweep(&ideal, runner)?;
        let impaired_curve = run_ber_sweep(&impaired, runner)?;
        let a = snr_at_ber(&ideal_curve, target_ber);
        let b = snr_at_ber(&impaired_curve, target_ber);
        let loss_db = a.zip(b).map(|(a, b)| b - a);
        rows.push(CompareRow {
            waveform: w,
            target_ber,
            ideal_snr_db: a,
            impaired_snr_db: b,
            loss_db,
            reached: loss_db.is_some(),
        });
        curves.push(CompareCurves {
            waveform: w,
            ideal: ideal_curve,
            impaired: impaired_curve,
        });
    }
    Ok(CompareTable {
        rows,
        curves,
        config_digest: cfg.digest()?,
        seed: cfg.seed,
    })
}
