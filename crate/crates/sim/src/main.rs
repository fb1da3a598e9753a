use std::path::PathBuf;
use std::process::ExitCode;

use afdm_sim::config::parse_snr_range;
use afdm_sim::sweep::default_iqi_axis;
use afdm_sim::{
    emit_results, run_abep_sweep, run_all, run_ber_sweep, run_iqi_sweep, run_waveform_compare, Format, IqiSpec,
    LinkConfig, Result, Runner, SimError, SweepAxis, Waveform,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afdm-sim", version, about = "AFDM link simulation under IQ imbalance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML link configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// SNR grid `start:step:stop` in dB, overriding the configuration.
    #[arg(long)]
    snr: Option<String>,
}

impl Common {
    fn load(&self) -> Result<LinkConfig> {
        let mut cfg = match &self.config {
            Some(p) => LinkConfig::load(p)?,
            None => LinkConfig::example(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = &self.snr {
            cfg.snr.grid_db = parse_snr_range(s)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER over the SNR grid.
    Ber {
        #[command(flatten)]
        common: Common,
    },
    /// Union bound on the bit error probability over the SNR grid.
    Abep {
        #[command(flatten)]
        common: Common,
    },
    /// ML BER and bound along an imbalance axis at one SNR.
    IqiSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "tx")]
        axis: SweepAxis,
        /// Amplitude (dB) and phase (deg) of the front end held fixed.
        #[arg(long, num_args = 2, value_names = ["AIM_DB", "PIM_DEG"], default_values_t = [1.0, 3.0])]
        fixed: Vec<f64>,
        /// Axis points as `aim:pim` pairs separated by commas.
        #[arg(long)]
        points: Option<String>,
        /// Sweep SNR in dB; defaults to the first grid point.
        #[arg(long)]
        at: Option<f64>,
    },
    /// SNR loss at a target BER per waveform.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "afdm,ofdm")]
        waveforms: Vec<String>,
        #[arg(long, default_value_t = 1e-3)]
        target_ber: f64,
    },
    /// Deterministic self-checks of the signal model.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Also run the timing-based scaling check.
        #[arg(long)]
        timing: bool,
    },
}

fn parse_points(s: &str) -> Result<Vec<IqiSpec>> {
    s.split(',')
        .map(|pair| {
            let (a, p) = pair
                .split_once(':')
                .ok_or_else(|| SimError::Config(format!("IQI point {pair:?} is not aim:pim")))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| SimError::Config(format!("bad number {t:?} in IQI point")))
            };
            Ok(IqiSpec::new(num(a)?, num(p)?))
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Ber { common } => {
            let cfg = common.load()?;
            let curve = run_ber_sweep(&cfg, &Runner::new(common.workers)?)?;
            emit_results(&curve, Some(&cfg), common.format, common.out.as_deref())?;
        }
        Command::Abep { common } => {
            let cfg = common.load()?;
            let curve = run_abep_sweep(&cfg, &Runner::new(common.workers)?)?;
            emit_results(&curve, Some(&cfg), common.format, common.out.as_deref())?;
        }
        Command::IqiSweep {
            common,
            axis,
            fixed,
            points,
            at,
        } => {
            let cfg = common.load()?;
            let values = match points {
                Some(s) => parse_points(&s)?,
                None => default_iqi_axis(),
            };
            let snr = at.unwrap_or(cfg.snr.grid_db[0]);
            let fixed = IqiSpec::new(fixed[0], fixed[1]);
            let res = run_iqi_sweep(&cfg, axis, &values, fixed, snr, &Runner::new(common.workers)?)?;
            emit_results(&res, Some(&cfg), common.format, common.out.as_deref())?;
        }
        Command::Compare {
            common,
            waveforms,
            target_ber,
        } => {
            let cfg = common.load()?;
            let wf = waveforms
                .iter()
                .map(|w| w.parse::<Waveform>())
                .collect::<Result<Vec<_>>>()?;
            let table = run_waveform_compare(&cfg, &wf, target_ber, &Runner::new(common.workers)?)?;
            emit_results(&table, Some(&cfg), common.format, common.out.as_deref())?;
        }
        Command::Validate { common, timing } => {
            let seed = match &common.config {
                Some(_) => common.load()?.seed,
                None => common.seed.unwrap_or(1),
            };
            let report = run_all(seed, timing)?;
            emit_results(&report, None, common.format, common.out.as_deref())?;
            return Ok(report.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            let err = serde_json::json!({ "error": { "kind": "validation", "message": "one or more checks failed" } });
            eprintln!("{err}");
            ExitCode::from(1)
        }
        Err(e) => {
            let err = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}
