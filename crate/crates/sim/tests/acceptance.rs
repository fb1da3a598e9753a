//! Acceptance criteria, one test each. Every test prints a single
//! `ACn PASS|FAIL` line with the measured values before asserting.

use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use afdm_iqi::{abep_bound, Daft, DelayMode, DopplerMode, PathGeometry, PositionsMode};
use afdm_sim::config::{ChannelSection, SnrSection, StoppingSection};
use afdm_sim::sweep::default_iqi_axis;
use afdm_sim::validate::{
    check_channel_equivalence, check_complexity_scaling, check_compensation_exactness, check_noise_statistics,
    check_transform, NOISE_DRAWS,
};
use afdm_sim::{
    run_ber_sweep, run_iqi_sweep, run_waveform_compare, snr_at_ber, BerCurve, Detector, IqiSpec, LinkConfig, Runner, SweepAxis, Waveform, WlModel,
};

/// Criteria carry runtime budgets and one measures timing, so they run one
/// at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, passed: bool, detail: &str) {
    println!("{id} {}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{id}: {detail}");
}

fn runner() -> Runner {
    Runner::new(std::thread::available_parallelism().map_or(1, |n| n.get())).unwrap()
}

#[test]
fn ac01_transform_correctness() {
    let _guard = serial();
    let r = check_transform(11).unwrap();
    report("AC1", r.passed, &format!("max error {:.2e} (< 1e-10) in {:.2} s; {}", r.measured, r.seconds, r.detail));
}

#[test]
fn ac02_channel_model_equivalence() {
    let _guard = serial();
    let r = check_channel_equivalence(12).unwrap();
    report("AC2", r.passed, &format!("max error {:.2e} (< 1e-10) in {:.2} s; {}", r.measured, r.seconds, r.detail));
}

#[test]
fn ac03_compensation_exactness() {
    let _guard = serial();
    let r = check_compensation_exactness(13).unwrap();
    report("AC3", r.passed, &r.detail);
}

#[test]
fn ac04_noise_statistics() {
    let _guard = serial();
    let r = check_noise_statistics(14, NOISE_DRAWS).unwrap();
    report("AC4", r.passed, &format!("{} in {:.1} s (< 60 s)", r.detail, r.seconds));
}

/// Small ML link: `N = 8`, QPSK, two integer-Doppler paths. With
/// `c1 = 3/16` the two paths land 5 bins apart in the DAFT domain; a
/// separation of `N/2` would let two-symbol error events cancel one path.
fn ml_config() -> LinkConfig {
    let mut c = LinkConfig::example();
    c.seed = 5;
    c.afdm.n = 8;
    c.afdm.nu_max = 1;
    c.afdm.tau_max = 1;
    c.afdm.zeta_nu = 0;
    c.channel = ChannelSection {
        paths: 2,
        doppler_mode: DopplerMode::Integer,
        fixed_geometry: Some(vec![
            PathGeometry { delay: 0, doppler: -1.0 },
            PathGeometry { delay: 1, doppler: 1.0 },
        ]),
        ..ChannelSection::default()
    };
    c.tx_iqi = IqiSpec::new(1.0, 3.0);
    c.rx_iqi = IqiSpec::new(1.0, 3.0);
    c.receiver.detector = Detector::Ml;
    c
}

#[test]
fn ac05_bound_validity() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut c = ml_config();
    c.snr.grid_db = vec![5.0, 10.0, 15.0, 20.0];
    c.stopping = StoppingSection {
        min_bit_errors: 500,
        max_frames: 60_000,
    };
    let curve = run_ber_sweep(&c, &runner()).unwrap();
    let daft = Daft::new(&c.params().unwrap());
    let mut ok = true;
    let mut lines = Vec::new();
    let mut last_ratio = 0.0;
    for p in &curve.points {
        let bound = abep_bound(&c.constellation(), &c.error_setup(p.snr_db).unwrap(), &daft, PositionsMode::Averaged)
            .unwrap()
            .bound;
        let below = p.ber <= bound + 3.0 * p.std_error();
        ok &= below;
        last_ratio = bound / p.ber;
        lines.push(format!(
            "{} dB: sim {:.3e} (+/-{:.1e}, {} errors{}) bound {:.3e}",
            p.snr_db,
            p.ber,
            p.std_error(),
            p.bit_errors,
            if p.truncated { ", truncated" } else { "" },
            bound
        ));
    }
    let tight = (1.0 / 3.0..=3.0).contains(&last_ratio);
    let secs = t0.elapsed().as_secs_f64();
    report(
        "AC5",
        ok && tight && secs < 900.0,
        &format!("{}; bound/sim at 20 dB = {last_ratio:.2} (within x3); {secs:.0} s", lines.join("; ")),
    );
}

#[test]
fn ac06_awgn_snr_loss() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut c = LinkConfig::example();
    c.seed = 6;
    c.afdm.n = 256;
    c.channel.awgn_only = true;
    c.tx_iqi = IqiSpec::new(1.5, 3.5);
    c.rx_iqi = IqiSpec::new(1.5, 3.5);
    c.snr = SnrSection {
        grid_db: (0..=30).map(f64::from).collect(),
        ..c.snr
    };
    c.stopping = StoppingSection {
        min_bit_errors: 500,
        max_frames: 4_000,
    };
    let table = run_waveform_compare(&c, &[Waveform::Afdm, Waveform::Ofdm], 1e-3, &runner()).unwrap();
    let loss = |w: Waveform| table.rows.iter().find(|r| r.waveform == w).and_then(|r| r.loss_db);
    let floor = |w: Waveform| {
        let cv = &table.curves.iter().find(|r| r.waveform == w).unwrap().impaired;
        cv.points.last().unwrap().ber
    };
    let (la, lo) = (loss(Waveform::Afdm), loss(Waveform::Ofdm));
    let ok_a = la.is_some_and(|l| (l - 7.2).abs() <= 1.0);
    let ok_o = lo.is_some_and(|l| (l - 3.0).abs() <= 1.0);
    let fmt = |l: Option<f64>, w| match l {
        Some(v) => format!("{v:.2} dB"),
        None => format!("target not reached (BER at 30 dB {:.3e})", floor(w)),
    };
    let secs = t0.elapsed().as_secs_f64();
    report(
        "AC6",
        ok_a && ok_o && secs < 1200.0,
        &format!(
            "AFDM loss {} (want 7.2 +/- 1.0), OFDM loss {} (want 3.0 +/- 1.0); {secs:.0} s",
            fmt(la, Waveform::Afdm),
            fmt(lo, Waveform::Ofdm)
        ),
    );
}

fn table_config() -> LinkConfig {
    let mut c = LinkConfig::example();
    c.seed = 7;
    c.channel.delay_mode = DelayMode::Shared;
    c.channel.doppler_mode = DopplerMode::Integer;
    c.snr.grid_db = (0..=40).step_by(4).map(f64::from).collect();
    c.stopping = StoppingSection {
        min_bit_errors: 500,
        max_frames: 20_000,
    };
    c
}

fn describe(curve: &BerCurve) -> String {
    curve
        .points
        .iter()
        .map(|p| format!("{}:{:.2e}", p.snr_db, p.ber))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn ac07_cascaded_compensation() {
    let _guard = serial();
    let t0 = Instant::now();
    let r = runner();
    let ideal = run_ber_sweep(&table_config(), &r).unwrap();

    let mut joint = table_config();
    joint.tx_iqi = IqiSpec::new(1.0, 3.0);
    joint.rx_iqi = IqiSpec::new(1.0, 3.0);
    let uncomp = run_ber_sweep(&joint, &r).unwrap();

    let mut comp_cfg = joint.clone();
    comp_cfg.receiver.compensate_rx = true;
    comp_cfg.receiver.compensate_tx = true;
    let comp = run_ber_sweep(&comp_cfg, &r).unwrap();

    let mut wl_cfg = joint.clone();
    wl_cfg.receiver.detector = Detector::WlMmse;
    wl_cfg.receiver.wl_model = WlModel::RxOnly;
    wl_cfg.snr.grid_db = vec![20.0];
    let wl = run_ber_sweep(&wl_cfg, &r).unwrap();

    let target = 1e-2;
    let gap = snr_at_ber(&comp, target).zip(snr_at_ber(&ideal, target)).map(|(a, b)| a - b);
    let overlay = gap.is_some_and(|g| g.abs() <= 0.3);
    let b = |c: &BerCurve, s: f64| c.ber_at(s).unwrap().ber;
    let floor_ratio = b(&uncomp, 40.0) / b(&uncomp, 20.0);
    let comp_ratio = b(&comp, 40.0) / b(&comp, 20.0);
    let wl20 = wl.points[0].ber;
    let between = b(&comp, 20.0) < wl20 && wl20 < b(&uncomp, 20.0);
    let secs = t0.elapsed().as_secs_f64();
    report(
        "AC7",
        overlay && floor_ratio > 0.5 && comp_ratio < 0.1 && between && secs < 1800.0,
        &format!(
            "compensated - ideal at BER 1e-2: {} (want |gap| <= 0.3); uncompensated BER(40)/BER(20) = {floor_ratio:.3} (> 0.5); \
             compensated ratio {comp_ratio:.3} (< 0.1); BER at 20 dB: compensated {:.3e}, WL-MMSE {wl20:.3e}, uncompensated {:.3e}; \
             ideal [{}] compensated [{}] uncompensated [{}]; {secs:.0} s",
            gap.map_or("not reached".to_string(), |g| format!("{g:.2} dB")),
            b(&comp, 20.0),
            b(&uncomp, 20.0),
            describe(&ideal),
            describe(&comp),
            describe(&uncomp),
        ),
    );
}

fn nondecreasing_within_3se(points: &[(f64, u64)]) -> bool {
    points.windows(2).all(|w| {
        let se = |(p, n): (f64, u64)| (p * (1.0 - p) / n as f64).sqrt();
        w[1].0 >= w[0].0 - 3.0 * (se(w[0]).powi(2) + se(w[1]).powi(2)).sqrt()
    })
}

#[test]
fn ac08_distortion_thresholds() {
    let _guard = serial();
    let t0 = Instant::now();
    let r = runner();
    let mut c = ml_config();
    c.stopping = StoppingSection {
        min_bit_errors: 500,
        max_frames: 20_000,
    };
    let axis = default_iqi_axis();
    let fixed = IqiSpec::new(1.0, 3.0);
    let mut ok = true;
    let mut lines = Vec::new();
    for snr in [15.0, 18.0] {
        let tx = run_iqi_sweep(&c, SweepAxis::Tx, &axis, fixed, snr, &r).unwrap();
        let pts: Vec<(f64, u64)> = tx.points.iter().map(|p| (p.ber_sim, p.bits)).collect();
        let monotone = nondecreasing_within_3se(&pts);
        let sharp = pts.last().unwrap().0 >= 2.0 * pts[0].0;
        ok &= monotone && sharp;
        lines.push(format!(
            "{snr} dB Tx sweep [{}] monotone {monotone}, BER(2.5 dB, 5 deg)/BER(0, 0) = {:.2} (>= 2)",
            pts.iter().map(|p| format!("{:.2e}", p.0)).collect::<Vec<_>>().join(" "),
            pts.last().unwrap().0 / pts[0].0
        ));
        let matched = [IqiSpec::new(1.5, 3.5)];
        let rx = run_iqi_sweep(&c, SweepAxis::Rx, &matched, fixed, snr, &r).unwrap();
        let tx_at = tx.points.iter().find(|p| p.aim_db == 1.5 && p.pim_deg == 3.5).unwrap();
        let worse = rx.points[0].ber_sim > tx_at.ber_sim;
        ok &= worse;
        lines.push(format!(
            "{snr} dB at (1.5 dB, 3.5 deg): Rx sweep {:.3e} vs Tx sweep {:.3e}",
            rx.points[0].ber_sim, tx_at.ber_sim
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    report("AC8", ok, &format!("{}; {secs:.0} s", lines.join("; ")));
}

#[test]
fn ac09_complexity_scaling() {
    let _guard = serial();
    let r = check_complexity_scaling(19).unwrap();
    report("AC9", r.passed, &r.detail);
}

#[test]
fn ac10_cli_determinism() {
    let _guard = serial();
    let dir = tempfile::tempdir().unwrap();
    let mut link = LinkConfig::example();
    link.seed = 10;
    link.afdm.n = 16;
    link.tx_iqi = IqiSpec::new(1.0, 3.0);
    link.rx_iqi = IqiSpec::new(1.0, 3.0);
    link.receiver.compensate_rx = true;
    link.receiver.compensate_tx = true;
    link.stopping = StoppingSection {
        min_bit_errors: 200,
        max_frames: 3_000,
    };
    let mut small = ml_config();
    small.stopping = StoppingSection {
        min_bit_errors: 100,
        max_frames: 300,
    };
    let link_path = dir.path().join("link.toml");
    let small_path = dir.path().join("small.toml");
    std::fs::write(&link_path, link.to_toml_string().unwrap()).unwrap();
    std::fs::write(&small_path, small.to_toml_string().unwrap()).unwrap();

    let bin = env!("CARGO_BIN_EXE_afdm-sim");
    let cases: [(&str, &std::path::Path, &[&str]); 3] = [
        ("ber", &link_path, &["--snr", "0:4:16"]),
        ("abep", &small_path, &["--snr", "0:5:20"]),
        ("iqi-sweep", &small_path, &["--at", "12", "--points", "0:0,1:3,2:4"]),
    ];
    let mut mismatches = Vec::new();
    for (sub, cfg, extra) in cases {
        for format in ["csv", "json"] {
            let mut outputs = Vec::new();
            for workers in ["1", "8"] {
                let out = dir.path().join(format!("{sub}-{workers}.{format}"));
                let status = std::process::Command::new(bin)
                    .arg(sub)
                    .arg("--config")
                    .arg(cfg)
                    .args(["--workers", workers, "--format", format])
                    .arg("--out")
                    .arg(&out)
                    .args(extra)
                    .status()
                    .unwrap();
                assert!(status.success(), "{sub} --workers {workers} failed");
                outputs.push(std::fs::read(&out).unwrap());
            }
            if outputs[0] != outputs[1] {
                mismatches.push(format!("{sub}/{format}"));
            }
        }
    }
    report(
        "AC10",
        mismatches.is_empty(),
        &format!("ber, abep and iqi-sweep output files (csv and json), 1 vs 8 workers; mismatches: {mismatches:?}"),
    );
}
