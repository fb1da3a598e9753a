//! One configured link, run frame by frame.

use std::ops::Range;

use afdm_iqi::{
    cascaded_estimate, daft_noise_stats, effective_matrix, ml_detect, propagate, sample_channel, sample_gains,
    transmit, wl_mmse_detect, AfdmParams, ChannelRealization, CMatrix, CompensationConfig, Constellation, Daft,
    DetectedFrame, IqImbalance, NoiseStats, WidelyLinearModel,
};
use afdm_iqi::channel::default_covariance;
use rand::Rng;

use crate::config::{Detector, LinkConfig, WlModel};
use crate::error::Result;
use crate::streams::{channel_stream, data_stream, noise_stream};

/// Bit errors and bits for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameOutcome {
    pub bit_errors: u64,
    pub bits: u64,
}

/// Noise level of one sweep point and what the receiver derives from it.
#[derive(Debug, Clone)]
pub struct SnrPoint {
    pub snr_index: usize,
    pub sigma2: f64,
    stats: Option<NoiseStats>,
}

/// Receiver-side state that only changes with the channel draw.
struct BlockState {
    block: u64,
    chan: ChannelRealization,
    h_eff: CMatrix,
    model: Option<WidelyLinearModel>,
}

pub struct LinkSimulator {
    cfg: LinkConfig,
    params: AfdmParams,
    daft: Daft,
    constellation: Constellation,
    tx: IqImbalance,
    rx: IqImbalance,
    compensation: CompensationConfig,
}

impl LinkSimulator {
    pub fn new(cfg: &LinkConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.params()?;
        let tx = cfg.tx_iqi.build()?;
        let rx = cfg.rx_iqi.build()?;
        let r = &cfg.receiver;
        let compensation = CompensationConfig {
            rx: r.compensate_rx.then_some(rx),
            tx: r.compensate_tx.then_some(tx),
            inner: r.inner,
            tx_form: r.tx_form,
        };
        Ok(Self {
            cfg: cfg.clone(),
            daft: Daft::new(&params),
            params,
            constellation: cfg.constellation(),
            tx,
            rx,
            compensation,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn bits_per_frame(&self) -> u64 {
        (self.params.n * self.constellation.bits_per_symbol) as u64
    }

    fn draw_channel(&self, block: u64) -> Result<ChannelRealization> {
        let ch = &self.cfg.channel;
        if ch.awgn_only {
            return Ok(ChannelRealization::identity());
        }
        let mut rng = channel_stream(self.cfg.seed, block);
        let chan = match &ch.fixed_geometry {
            Some(g) => sample_gains(g, &default_covariance(g.len()), &mut rng)?,
            None => sample_channel(
                ch.paths,
                self.params.tau_max,
                self.params.nu_max,
                ch.doppler_mode,
                ch.delay_mode,
                &mut rng,
            )?,
        };
        Ok(chan)
    }

    fn block_state(&self, block: u64) -> Result<BlockState> {
        let chan = self.draw_channel(block)?;
        let h_eff = if self.cfg.channel.awgn_only {
            CMatrix::identity(self.params.n, self.params.n)
        } else {
            effective_matrix(&chan, &self.daft)?.daft_matrix
        };
        let model = match self.cfg.receiver.detector {
            Detector::Mmse => None,
            Detector::Ml => Some(WidelyLinearModel::build(&chan, &self.tx, &self.rx, &self.daft)?),
            Detector::WlMmse => {
                let tx = match self.cfg.receiver.wl_model {
                    WlModel::RxOnly => IqImbalance::ideal(),
                    WlModel::Full => self.tx,
                };
                Some(WidelyLinearModel::build(&chan, &tx, &self.rx, &self.daft)?)
            }
        };
        Ok(BlockState {
            block,
            chan,
            h_eff,
            model,
        })
    }

    /// Per-SNR receiver state for noise variance `sigma2`.
    pub fn point(&self, snr_index: usize, sigma2: f64) -> SnrPoint {
        let stats = (self.cfg.receiver.detector == Detector::WlMmse)
            .then(|| daft_noise_stats(&self.rx, sigma2, &self.daft));
        SnrPoint {
            snr_index,
            sigma2,
            stats,
        }
    }

    /// Runs `frames` at one SNR point. Frame `f` always sees the same bits,
    /// channel and (for a given SNR index) noise.
    pub fn run_frames(&self, pt: &SnrPoint, frames: Range<u64>) -> Result<Vec<FrameOutcome>> {
        let fpc = self.cfg.channel.frames_per_channel as u64;
        let mut state: Option<BlockState> = None;
        let mut out = Vec::with_capacity((frames.end - frames.start) as usize);
        for f in frames {
            let block = f / fpc;
            if state.as_ref().is_none_or(|s| s.block != block) {
                state = Some(self.block_state(block)?);
            }
            let st = state.as_ref().expect("block state set above");
            out.push(self.run_frame(st, pt, f)?);
        }
        Ok(out)
    }

    fn run_frame(
        &self,
        st: &BlockState,
        pt: &SnrPoint,
        frame: u64,
    ) -> Result<FrameOutcome> {
        let sigma2 = pt.sigma2;
        let n = self.params.n;
        let c = &self.constellation;
        let mut data = data_stream(self.cfg.seed, frame);
        let bits: Vec<u8> = (0..n * c.bits_per_symbol).map(|_| data.random_range(0..2u8)).collect();
        let x = c.map_bits(&bits, n)?;

        let s = transmit(&x, &self.tx, &self.daft, self.cfg.iqi_on_cpp)?;
        let mut noise = noise_stream(self.cfg.seed, pt.snr_index, frame);
        let r = propagate(&s, &st.chan, sigma2, &self.rx, &self.daft, &mut noise)?;

        let detected = match self.cfg.receiver.detector {
            Detector::Mmse => {
                let soft = cascaded_estimate(&r, &st.h_eff, &self.compensation, sigma2, &self.daft)?;
                DetectedFrame::from_soft(soft, c)
            }
            Detector::Ml => {
                let y = self.daft.daft(&afdm_iqi::remove_cpp(&r, &self.params)?)?;
                ml_detect(&y, st.model.as_ref().expect("ML model"), c)?
            }
            Detector::WlMmse => {
                let y = self.daft.daft(&afdm_iqi::remove_cpp(&r, &self.params)?)?;
                let stats = pt.stats.as_ref().expect("noise statistics");
                wl_mmse_detect(&y, st.model.as_ref().expect("WL model"), stats, c)?
            }
        };
        let bit_errors = bits.iter().zip(&detected.bits).filter(|(a, b)| a != b).count() as u64;
        Ok(FrameOutcome {
            bit_errors,
            bits: bits.len() as u64,
        })
    }
}
