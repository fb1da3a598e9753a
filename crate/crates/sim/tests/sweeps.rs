use afdm_sim::config::StoppingSection;
use afdm_sim::output::to_json_document;
use afdm_sim::{render, run_ber_sweep, Format, LinkConfig, Runner, SnrConvention};
use statrs::distribution::{ContinuousCDF, Normal};

fn q(x: f64) -> f64 {
    1.0 - Normal::standard().cdf(x)
}

fn awgn_config(convention: SnrConvention) -> LinkConfig {
    let mut c = LinkConfig::example();
    c.seed = 21;
    c.afdm.n = 64;
    c.channel.awgn_only = true;
    c.snr.grid_db = vec![0.0, 2.0, 4.0, 6.0];
    c.snr.convention = convention;
    c.stopping = StoppingSection {
        min_bit_errors: 1_000,
        max_frames: 20_000,
    };
    c
}

#[test]
fn ideal_awgn_qpsk_matches_closed_form() {
    for (conv, scale) in [(SnrConvention::EsN0, 1.0), (SnrConvention::EbN0, 2.0)] {
        let curve = run_ber_sweep(&awgn_config(conv), &Runner::new(1).unwrap()).unwrap();
        for p in &curve.points {
            let snr = 10f64.powf(p.snr_db / 10.0);
            let expected = q((scale * snr).sqrt());
            let se = (expected * (1.0 - expected) / p.bits as f64).sqrt();
            assert!(
                (p.ber - expected).abs() < 3.0 * se,
                "{conv:?} {} dB: {} vs {expected} (se {se})",
                p.snr_db,
                p.ber
            );
            assert!(!p.truncated);
        }
    }
}

fn golden_config() -> LinkConfig {
    let mut c = LinkConfig::example();
    c.seed = 1234;
    c.afdm.n = 16;
    c.snr.grid_db = vec![0.0, 5.0, 10.0];
    c.stopping = StoppingSection {
        min_bit_errors: 100,
        max_frames: 200,
    };
    c
}

#[test]
fn golden_ber_csv() {
    let curve = run_ber_sweep(&golden_config(), &Runner::new(2).unwrap()).unwrap();
    let got = String::from_utf8(render(&curve, None, Format::Csv).unwrap()).unwrap();
    assert_eq!(got, include_str!("golden/ber_small.csv"));
}

#[test]
fn json_results_round_trip() {
    let cfg = golden_config();
    let curve = run_ber_sweep(&cfg, &Runner::new(1).unwrap()).unwrap();
    let bytes = render(&curve, Some(&cfg), Format::Json).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(doc, to_json_document(&curve, Some(&cfg)).unwrap());
    let back = LinkConfig::from_json_value(doc["config"].clone()).unwrap();
    assert_eq!(back.digest().unwrap(), curve.config_digest);
    let again = run_ber_sweep(&back, &Runner::new(1).unwrap()).unwrap();
    assert_eq!(again, curve);
}

#[test]
fn cli_reports_errors_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 2\nseed = 1\n[afdm]\nn = 8\n[snr]\ngrid_db = [0.0]\n").unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_afdm-sim"))
        .args(["ber", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");

    let missing = dir.path().join("nope.toml");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_afdm-sim"))
        .args(["ber", "--config"])
        .arg(&missing)
        .output()
        .unwrap();
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
    assert!(err["error"]["message"].as_str().unwrap().contains("nope.toml"));
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let c = LinkConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(c.to_toml_string().map(|t| LinkConfig::from_toml_str(&t).unwrap()).unwrap(), c);
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
