//! Monte Carlo harness for AFDM links under IQ imbalance.
//!
//! - [`config`]: TOML link configuration and its content digest
//! - [`streams`]: per-frame random streams
//! - [`linksim`]: one configured link, frame by frame
//! - [`sweep`]: BER, bound, imbalance and waveform sweeps
//! - [`output`]: CSV/JSON emission
//! - [`validate`]: deterministic self-checks of the model

pub mod config;
pub mod error;
pub mod linksim;
pub mod output;
pub mod streams;
pub mod sweep;
pub mod validate;

pub use config::{Detector, IqiSpec, LinkConfig, SnrConvention, Waveform, WlModel};
pub use error::{Result, SimError};
pub use linksim::{FrameOutcome, LinkSimulator};
pub use output::{emit_results, render, Emit, Format};
pub use sweep::{
    run_abep_sweep, run_ber_sweep, run_iqi_sweep, run_waveform_compare, snr_at_ber, AbepCurve, BerCurve, BerPoint,
    CompareTable, IqiSweepResult, Runner, SweepAxis,
};
pub use validate::{run_all, CheckResult, ValidationReport};
