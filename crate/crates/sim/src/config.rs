//! Link configuration, loaded from TOML.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! waveform = "afdm"
//!
//! [afdm]
//! n = 64
//! nu_max = 2
//! tau_max = 2
//! zeta_nu = 1
//!
//! [channel]
//! paths = 4
//! delay_mode = "shared"
//!
//! [tx_iqi]
//! amp_db = 1.0
//! phase_deg = 3.0
//!
//! [snr]
//! grid_db = [0.0, 5.0, 10.0]
//! ```

use std::path::Path;

use afdm_iqi::analysis::ErrorSetup;
use afdm_iqi::constellation::ConstellationKind;
use afdm_iqi::{
    AfdmParams, Constellation, DelayMode, DopplerMode, InnerDetector, IqImbalance, PathGeometry, PositionsMode,
    TxInverseForm,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_err, Result, SimError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    #[default]
    Afdm,
    Ofdm,
}

impl std::str::FromStr for Waveform {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "afdm" => Ok(Waveform::Afdm),
            "ofdm" => Ok(Waveform::Ofdm),
            other => config_err(format!("unknown waveform {other:?}")),
        }
    }
}

impl std::fmt::Display for Waveform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Waveform::Afdm => "afdm",
            Waveform::Ofdm => "ofdm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    #[default]
    Mmse,
    Ml,
    WlMmse,
}

/// Imbalance terms the widely linear MMSE baseline is told about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WlModel {
    /// Rx imbalance and its improper noise only.
    #[default]
    RxOnly,
    /// Both front ends.
    Full,
}

/// How the SNR axis maps to the noise variance for unit-energy symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrConvention {
    /// `σ² = 1 / SNR`.
    #[default]
    EsN0,
    /// `σ² = 1 / (N_b · SNR)`.
    EbN0,
}

impl SnrConvention {
    pub fn sigma2(self, snr_db: f64, bits_per_symbol: usize) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        match self {
            SnrConvention::EsN0 => 1.0 / snr,
            SnrConvention::EbN0 => 1.0 / (bits_per_symbol as f64 * snr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfdmSection {
    pub n: usize,
    #[serde(default)]
    pub nu_max: usize,
    #[serde(default)]
    pub tau_max: usize,
    #[serde(default)]
    pub zeta_nu: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpp_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default = "one")]
    pub paths: usize,
    #[serde(default)]
    pub doppler_mode: DopplerMode,
    #[serde(default)]
    pub delay_mode: DelayMode,
    #[serde(default)]
    pub awgn_only: bool,
    /// Frames sent over each channel draw.
    #[serde(default = "one")]
    pub frames_per_channel: usize,
    /// Fixed path positions; only the gains are drawn when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_geometry: Option<Vec<PathGeometry>>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            paths: 1,
            doppler_mode: DopplerMode::Integer,
            delay_mode: DelayMode::Distinct,
            awgn_only: false,
            frames_per_channel: 1,
            fixed_geometry: None,
        }
    }
}

/// Imbalance in the units used on the command line and in files.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqiSpec {
    #[serde(default)]
    pub amp_db: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

impl IqiSpec {
    pub fn new(amp_db: f64, phase_deg: f64) -> Self {
        Self { amp_db, phase_deg }
    }

    pub fn build(&self) -> Result<IqImbalance> {
        Ok(IqImbalance::from_db(self.amp_db, self.phase_deg)?)
    }

    pub fn is_zero(&self) -> bool {
        self.amp_db == 0.0 && self.phase_deg == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    #[serde(default)]
    pub detector: Detector,
    /// Rx imbalance inverse on the received samples (MMSE detector only).
    #[serde(default)]
    pub compensate_rx: bool,
    /// Tx imbalance inverse on the detected symbols (MMSE detector only).
    #[serde(default)]
    pub compensate_tx: bool,
    #[serde(default)]
    pub inner: InnerDetector,
    #[serde(default)]
    pub tx_form: TxInverseForm,
    #[serde(default)]
    pub wl_model: WlModel,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self {
            detector: Detector::Mmse,
            compensate_rx: false,
            compensate_tx: false,
            inner: InnerDetector::Mmse,
            tx_form: TxInverseForm::Conjugated,
            wl_model: WlModel::RxOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    pub grid_db: Vec<f64>,
    #[serde(default)]
    pub convention: SnrConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSection {
    #[serde(default = "default_min_errors")]
    pub min_bit_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
}

impl Default for StoppingSection {
    fn default() -> Self {
        Self {
            min_bit_errors: default_min_errors(),
            max_frames: default_max_frames(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    #[serde(default)]
    pub positions: PositionsMode,
}

fn one() -> usize {
    1
}

fn default_min_errors() -> u64 {
    500
}

fn default_max_frames() -> u64 {
    100_000
}

fn default_true() -> bool {
    true
}

fn default_constellation() -> ConstellationKind {
    ConstellationKind::Qpsk
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub waveform: Waveform,
    #[serde(default = "default_constellation")]
    pub constellation: ConstellationKind,
    /// Tx imbalance also distorts the prefix samples.
    #[serde(default = "default_true")]
    pub iqi_on_cpp: bool,
    pub afdm: AfdmSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub tx_iqi: IqiSpec,
    #[serde(default)]
    pub rx_iqi: IqiSpec,
    #[serde(default)]
    pub receiver: ReceiverSection,
    pub snr: SnrSection,
    #[serde(default)]
    pub stopping: StoppingSection,
    #[serde(default)]
    pub bound: BoundSection,
}

impl LinkConfig {
    /// Table-I style defaults: `N = 64`, four paths, QPSK, MMSE, no imbalance.
    pub fn example() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            waveform: Waveform::Afdm,
            constellation: ConstellationKind::Qpsk,
            iqi_on_cpp: true,
            afdm: AfdmSection {
                n: 64,
                nu_max: 2,
                tau_max: 2,
                zeta_nu: 1,
                cpp_len: None,
                c2: None,
            },
            channel: ChannelSection {
                paths: 4,
                delay_mode: DelayMode::Shared,
                ..ChannelSection::default()
            },
            tx_iqi: IqiSpec::default(),
            rx_iqi: IqiSpec::default(),
            receiver: ReceiverSection::default(),
            snr: SnrSection {
                grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
                convention: SnrConvention::EsN0,
            },
            stopping: StoppingSection::default(),
            bound: BoundSection::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(v)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return config_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.snr.grid_db.is_empty() {
            return config_err("snr.grid_db is empty");
        }
        if self.snr.grid_db.iter().any(|s| !s.is_finite()) {
            return config_err("snr.grid_db has a non-finite entry");
        }
        if self.stopping.max_frames == 0 {
            return config_err("stopping.max_frames must be positive");
        }
        if self.channel.frames_per_channel == 0 {
            return config_err("channel.frames_per_channel must be positive");
        }
        if !self.channel.awgn_only {
            match &self.channel.fixed_geometry {
                Some(g) => {
                    if g.is_empty() {
                        return config_err("channel.fixed_geometry is empty");
                    }
                    for p in g {
                        if p.delay > self.afdm.tau_max || p.doppler.abs() > self.afdm.nu_max as f64 + 1.0 {
                            return config_err(format!(
                                "fixed path (delay {}, doppler {}) outside tau_max/nu_max",
                                p.delay, p.doppler
                            ));
                        }
                    }
                }
                None => {
                    if self.channel.paths == 0 {
                        return config_err("channel.paths must be positive");
                    }
                }
            }
        }
        self.params()?;
        self.tx_iqi.build()?;
        self.rx_iqi.build()?;
        if self.receiver.detector == Detector::Ml {
            let bits = self.afdm.n * self.constellation().bits_per_symbol;
            if bits > afdm_iqi::detect::ML_MAX_BITS {
                return Err(afdm_iqi::Error::SearchSpaceTooLarge {
                    bits,
                    limit: afdm_iqi::detect::ML_MAX_BITS,
                }
                .into());
            }
        }
        Ok(())
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::from_kind(self.constellation)
    }

    /// Modem parameters; OFDM forces both chirp rates to zero.
    pub fn params(&self) -> Result<AfdmParams> {
        let a = &self.afdm;
        let base = match self.waveform {
            Waveform::Afdm => {
                let p = AfdmParams::new(a.n, a.nu_max, a.tau_max, a.zeta_nu)?;
                match a.c2 {
                    Some(c2) => p.with_c2(c2)?,
                    None => p,
                }
            }
            Waveform::Ofdm => AfdmParams::ofdm(a.n, a.nu_max, a.tau_max)?,
        };
        Ok(match a.cpp_len {
            Some(l) => base.with_cpp_len(l)?,
            None => base,
        })
    }

    pub fn sigma2(&self, snr_db: f64) -> f64 {
        self.snr.convention.sigma2(snr_db, self.constellation().bits_per_symbol)
    }

    /// Setup for the analytical bounds at `snr_db`. Needs fixed geometry.
    pub fn error_setup(&self, snr_db: f64) -> Result<ErrorSetup> {
        let geometry = self.bound_geometry()?;
        Ok(ErrorSetup::new(geometry, self.tx_iqi.build()?, self.rx_iqi.build()?, self.sigma2(snr_db))?)
    }

    fn bound_geometry(&self) -> Result<Vec<PathGeometry>> {
        if self.channel.awgn_only {
            return Ok(vec![PathGeometry { delay: 0, doppler: 0.0 }]);
        }
        match &self.channel.fixed_geometry {
            Some(g) => Ok(g.clone()),
            None => config_err("analytical bounds need channel.fixed_geometry"),
        }
    }

    /// Copy with every optional field resolved, so equivalent spellings of
    /// one configuration serialise identically.
    pub fn canonical(&self) -> Result<Self> {
        let mut c = self.clone();
        let p = self.params()?;
        c.afdm.cpp_len = Some(p.cpp_len);
        c.afdm.c2 = Some(p.c2);
        if c.channel.awgn_only {
            c.channel.paths = 1;
            c.channel.fixed_geometry = None;
            c.channel.frames_per_channel = 1;
        } else if let Some(g) = &c.channel.fixed_geometry {
            c.channel.paths = g.len();
        }
        Ok(c)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(&self.canonical()?)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

/// Parses `start:step:stop` (inclusive stop, within rounding).
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: std::result::Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    let nums = nums.map_err(|_| SimError::Config(format!("bad SNR range {s:?}")))?;
    match nums.as_slice() {
        [single] => Ok(vec![*single]),
        [start, step, stop] => {
            if !(*step > 0.0) || stop < start {
                return config_err(format!("bad SNR range {s:?}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| start + step * k as f64).collect())
        }
        _ => config_err(format!("SNR range {s:?} is not start:step:stop")),
    }
}
