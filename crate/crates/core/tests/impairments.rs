use afdm_iqi::linalg::max_abs_diff_vec;
use afdm_iqi::{
    add_awgn, apply_iqi, compensate_rx, daft_noise_stats, decompose_interference, iqi_from_db, noiseless_output,
    sample_channel, AfdmParams, CMatrix, CVector, Complex64, Constellation, Daft, DelayMode, DopplerMode,
    IqImbalance, NoiseModel, TimeSignal, WidelyLinearModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cn(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    Complex64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

fn random_qpsk(n: usize, rng: &mut impl Rng) -> CVector {
    let c = Constellation::qpsk();
    CVector::from_fn(n, |_, _| c.points[rng.random_range(0..4)])
}

#[test]
fn closed_form_parameters() {
    let q = iqi_from_db(1.5, 3.5).unwrap();
    assert!((q.alpha - 0.41254).abs() < 1e-5);
    assert!((q.mu - Complex64::new(0.99953, 0.012599)).norm() < 1e-5);
    assert!((q.upsilon - Complex64::new(0.41235, -0.030538)).norm() < 1e-5);
    let q = iqi_from_db(1.0, 3.0).unwrap();
    assert!((q.alpha - (10f64.powf(0.1) - 1.0)).abs() < 1e-15);
    assert!((q.power_gain() - (1.0 + q.alpha * q.alpha)).abs() < 1e-12);
}

#[test]
fn energy_ratio_on_circular_inputs() {
    let q = iqi_from_db(1.0, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let s = TimeSignal::new(CVector::from_fn(10_000, |_, _| cn(&mut rng, 1.0)), false);
    let ratio = apply_iqi(&s, &q).energy() / s.energy();
    assert!((ratio / q.power_gain() - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn awgn_sample_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let s = TimeSignal::new(CVector::zeros(1_000_000), false);
    let sigma2 = 0.37;
    let w = add_awgn(&s, sigma2, &mut rng);
    let var = w.energy() / 1e6;
    assert!((var / sigma2 - 1.0).abs() < 0.01, "{var}");
}

#[test]
fn daft_noise_statistics_match_monte_carlo() {
    let n = 16;
    let p = AfdmParams::new(n, 1, 1, 1).unwrap();
    let daft = Daft::new(&p);
    let rx = iqi_from_db(1.5, 3.5).unwrap();
    let sigma2 = 0.5;
    let stats = daft_noise_stats(&rx, sigma2, &daft);
    let diag = stats.cov[(0, 0)].re;
    assert!((diag - 1.17018723 * sigma2).abs() < 1e-7);
    assert!((NoiseModel::new(sigma2, Some(rx)).unwrap().sigma2_wbar() - diag).abs() < 1e-15);

    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    let mut cov = CMatrix::zeros(n, n);
    let mut pcov = CMatrix::zeros(n, n);
    let mut cov_sq = vec![0.0; n * n];
    let mut pcov_sq = vec![0.0; n * n];
    for _ in 0..draws {
        let w = CVector::from_fn(n, |_, _| rx.apply(cn(&mut rng, sigma2)));
        let wb = daft.forward(&w).unwrap();
        for j in 0..n {
            for i in 0..n {
                let c = wb[i] * wb[j].conj();
                let pc = wb[i] * wb[j];
                cov[(i, j)] += c;
                pcov[(i, j)] += pc;
                cov_sq[i + j * n] += c.norm_sqr();
                pcov_sq[i + j * n] += pc.norm_sqr();
            }
        }
    }
    let t = draws as f64;
    for j in 0..n {
        for i in 0..n {
            let k = i + j * n;
            for (sum, sq, target) in [
                (cov[(i, j)], cov_sq[k], stats.cov[(i, j)]),
                (pcov[(i, j)], pcov_sq[k], stats.pcov[(i, j)]),
            ] {
                let mean = sum / t;
                // standard error of the complex mean, per component bound
                let se = ((sq / t - mean.norm_sqr()) / t).sqrt();
                assert!((mean - target).norm() < 5.0 * se, "({i},{j}) {mean} vs {target} se {se}");
            }
        }
    }
    // Frobenius norm of A Aᵀ is √N
    let expected = 2.0 * (rx.mu * rx.upsilon).norm() * sigma2 * (n as f64).sqrt();
    assert!((stats.pcov.norm() - expected).abs() < 1e-10);
}

#[test]
fn rx_compensation_restores_proper_noise() {
    let n = 16;
    let daft = Daft::new(&AfdmParams::new(n, 1, 1, 1).unwrap());
    let rx = iqi_from_db(1.5, 3.5).unwrap();
    let sigma2 = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let draws = 100_000;
    let mut before = CMatrix::zeros(n, n);
    let mut after = CMatrix::zeros(n, n);
    for _ in 0..draws {
        let w = TimeSignal::new(CVector::from_fn(n, |_, _| cn(&mut rng, sigma2)), false);
        let wbar = apply_iqi(&w, &rx);
        let a = daft.daft(&wbar).unwrap();
        let b = daft.daft(&compensate_rx(&wbar, &rx).unwrap()).unwrap();
        before += &a * a.transpose();
        after += &b * b.transpose();
    }
    before /= Complex64::new(draws as f64, 0.0);
    after /= Complex64::new(draws as f64, 0.0);
    let threshold = 1e-2 * n as f64 * sigma2;
    assert!(after.norm() < threshold, "after {}", after.norm());
    assert!(before.norm() > threshold, "before {}", before.norm());
}

#[test]
fn four_terms_sum_to_pipeline_output() {
    let p = AfdmParams::new(64, 2, 2, 1).unwrap();
    let daft = Daft::new(&p);
    let tx = iqi_from_db(1.0, 3.0).unwrap();
    let rx = iqi_from_db(1.5, 3.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    for _ in 0..20 {
        let chan = sample_channel(4, 2, 2, DopplerMode::Integer, DelayMode::Shared, &mut rng).unwrap();
        let x = random_qpsk(64, &mut rng);
        let terms = decompose_interference(&x, &chan, &tx, &rx, &daft).unwrap();
        let y = noiseless_output(&x, &chan, &tx, &rx, &daft, true).unwrap();
        assert!(max_abs_diff_vec(&terms.total(), &y) < 1e-10);
        let model = WidelyLinearModel::build(&chan, &tx, &rx, &daft).unwrap();
        assert!(max_abs_diff_vec(&model.output(&x), &y) < 1e-10);
    }
}

#[test]
fn prefix_free_imbalance_matches_model_for_any_rate() {
    let p = AfdmParams::with_chirp_rates(32, 0.0371, 0.0005, 2, 3, 0, 3).unwrap();
    let daft = Daft::new(&p);
    let tx = iqi_from_db(1.0, 3.0).unwrap();
    let rx = iqi_from_db(1.0, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(305);
    let chan = sample_channel(3, 3, 2, DopplerMode::Fractional, DelayMode::Distinct, &mut rng).unwrap();
    let x = random_qpsk(32, &mut rng);
    let y = noiseless_output(&x, &chan, &tx, &rx, &daft, false).unwrap();
    let terms = decompose_interference(&x, &chan, &tx, &rx, &daft).unwrap();
    assert!(max_abs_diff_vec(&terms.total(), &y) < 1e-10);
}

#[test]
fn term_selection() {
    let p = AfdmParams::new(32, 1, 2, 1).unwrap();
    let daft = Daft::new(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(306);
    let chan = sample_channel(3, 2, 1, DopplerMode::Integer, DelayMode::Distinct, &mut rng).unwrap();
    let x = random_qpsk(32, &mut rng);
    let ideal = IqImbalance::ideal();
    let t = decompose_interference(&x, &chan, &ideal, &ideal, &daft).unwrap();
    let eff = afdm_iqi::effective_matrix(&chan, &daft).unwrap();
    assert!(max_abs_diff_vec(&t.attenuated, &(&eff.daft_matrix * &x)) < 1e-10);
    for v in [&t.mirror, &t.rx_mirror_chunk, &t.tx_rx_mirror_chunk] {
        assert!(v.norm() == 0.0);
    }
    let rx = iqi_from_db(1.0, 3.0).unwrap();
    let t = decompose_interference(&x, &chan, &ideal, &rx, &daft).unwrap();
    assert!(t.mirror.norm() == 0.0);
    assert!(t.tx_rx_mirror_chunk.norm() == 0.0);
    // υ_rx A H* Aᵀ x*, built densely
    let a = daft.matrix();
    let h = chan.time_matrix(&p);
    let dense = (&a * h.conjugate() * a.transpose() * x.conjugate()) * rx.upsilon;
    assert!(max_abs_diff_vec(&t.rx_mirror_chunk, &dense) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn imbalance_is_real_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0,
                                amp in 0.0f64..2.5, ph in -20.0f64..20.0) {
        let q = iqi_from_db(amp, ph).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = TimeSignal::new(CVector::from_fn(8, |_, _| cn(&mut rng, 1.0)), false);
        let v = TimeSignal::new(CVector::from_fn(8, |_, _| cn(&mut rng, 1.0)), false);
        let mix = TimeSignal::new(&u.samples * Complex64::new(a, 0.0) + &v.samples * Complex64::new(b, 0.0), false);
        let lhs = apply_iqi(&mix, &q).samples;
        let rhs = apply_iqi(&u, &q).samples * Complex64::new(a, 0.0) + apply_iqi(&v, &q).samples * Complex64::new(b, 0.0);
        prop_assert!(max_abs_diff_vec(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn power_identity(amp in 0.0f64..2.9, ph in -60.0f64..60.0) {
        let q = iqi_from_db(amp, ph).unwrap();
        prop_assert!((q.power_gain() - (1.0 + q.alpha * q.alpha)).abs() < 1e-12);
        prop_assert!((q.determinant() - (1.0 - q.alpha * q.alpha) * q.theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn rx_inverse_is_exact(seed in any::<u64>(), amp in 0.0f64..2.5, ph in -30.0f64..30.0) {
        let q = iqi_from_db(amp, ph).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = TimeSignal::new(CVector::from_fn(20, |_, _| cn(&mut rng, 1.0)), true);
        let back = compensate_rx(&apply_iqi(&r, &q), &q).unwrap();
        prop_assert!(max_abs_diff_vec(&back.samples, &r.samples) < 1e-12);
    }
}
