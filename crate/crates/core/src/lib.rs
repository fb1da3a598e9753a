//! Baseband AFDM link model under joint transmitter/receiver IQ imbalance.
//!
//! The crate is organised along the signal path:
//!
//! * [`params`], [`transform`], [`frame`] and [`constellation`] implement the
//!   chirp-multicarrier modem (DAFT/IDAFT, chirp-periodic prefix, Gray mapping).
//! * [`channel`] generates doubly selective channels and applies them either
//!   sample-wise or as an effective matrix.
//! * [`iqi`] models narrowband IQ imbalance, AWGN, the DAFT-domain statistics
//!   of the resulting improper noise and the widely linear end-to-end model.
//! * [`detect`] holds the MMSE, exhaustive ML and widely linear MMSE detectors.
//! * [`compensation`] implements the cascaded receive chain: Rx imbalance is
//!   undone in the time domain, the inner detector runs on the restored sparse
//!   system, and the Tx imbalance is removed from the detected symbols.
//! * [`link`] chains the transmitter, channel and receiver front end.
//! * [`analysis`] evaluates pairwise error probability and union bounds.
//!
//! All operations are pure functions of their inputs. Randomness is always
//! injected through an explicit `rand::Rng`.

pub mod analysis;
pub mod channel;
pub mod compensation;
pub mod constellation;
pub mod detect;
pub mod error;
pub mod frame;
pub mod iqi;
pub mod link;
pub mod linalg;
pub mod params;
pub mod transform;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;

pub use analysis::{
    abep_bound, brute_force_pep, build_codeword_matrices, pep_bound, pep_terms, q_approx,
    AbepResult, CodewordMatrices, ErrorSetup, PairTerm, PepEstimate, PepTerms, PositionsMode,
};
pub use channel::{
    apply_time_domain, default_covariance, effective_matrix, path_matrix, sample_channel,
    sample_gains, sample_geometry, ChannelRealization, DelayMode,
    DopplerMode, EffectiveChannel, PathComponent, PathGeometry,
};
pub use compensation::{
    cascaded_estimate, cascaded_receive, compensate_rx, compensate_tx, CompensationConfig, InnerDetector, TxInverseForm,
};
pub use constellation::Constellation;
pub use detect::{ml_detect, mmse_detect, mmse_estimate, wl_mmse_detect, zf_estimate, DetectedFrame};
pub use frame::{add_cpp, remove_cpp, TimeSignal};
pub use iqi::{
    add_awgn, apply_iqi, daft_noise_stats, decompose_interference, iqi_from_db,
    InterferenceTerms, IqImbalance, NoiseModel, NoiseStats, WidelyLinearModel,
};
pub use link::{noiseless_output, propagate, transmit};
pub use params::{derive_chirp_rates, AfdmParams};
pub use transform::{daft, daft_matrix, idaft, Daft};
