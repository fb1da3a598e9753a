//! End-to-end signal path helpers shared by tests and the simulator.

use rand::Rng;

use crate::channel::{apply_time_domain, ChannelRealization};
use crate::error::Result;
use crate::frame::{add_cpp, TimeSignal};
use crate::iqi::{add_awgn, apply_iqi, IqImbalance};
use crate::linalg::CVector;
use crate::transform::Daft;

/// IDAFT, prefix insertion and Tx imbalance.
///
/// With `iqi_on_cpp` the imbalance acts on the whole framed signal, as a
/// front end would. Otherwise it acts on the `N` frame samples and the prefix
/// is built from the distorted frame, which keeps the prefix chirp-periodic
/// for any `c1`.
pub fn transmit(x: &CVector, tx: &IqImbalance, daft: &Daft, iqi_on_cpp: bool) -> Result<TimeSignal> {
    let params = daft.params();
    let s = daft.idaft(x)?;
    if iqi_on_cpp {
        Ok(apply_iqi(&add_cpp(&s, params)?, tx))
    } else {
        add_cpp(&apply_iqi(&s, tx), params)
    }
}

/// Channel, thermal noise of variance `sigma2` (skipped when zero) and Rx
/// imbalance. Input and output carry the prefix.
pub fn propagate(
    s: &TimeSignal,
    chan: &ChannelRealization,
    sigma2: f64,
    rx: &IqImbalance,
    daft: &Daft,
    rng: &mut impl Rng,
) -> Result<TimeSignal> {
    let r = apply_time_domain(s, chan, daft.params())?;
    let r = if sigma2 > 0.0 { add_awgn(&r, sigma2, rng) } else { r };
    Ok(apply_iqi(&r, rx))
}

/// Noiseless received DAFT-domain vector for symbols `x`.
pub fn noiseless_output(
    x: &CVector,
    chan: &ChannelRealization,
    tx: &IqImbalance,
    rx: &IqImbalance,
    daft: &Daft,
    iqi_on_cpp: bool,
) -> Result<CVector> {
    let s = transmit(x, tx, daft, iqi_on_cpp)?;
    let r = apply_iqi(&apply_time_domain(&s, chan, daft.params())?, rx);
    daft.daft(&crate::frame::remove_cpp(&r, daft.params())?)
}
