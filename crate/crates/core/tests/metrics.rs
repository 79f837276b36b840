use fso_core::metrics::{
    ber_from_q, eye_fold, eye_metrics, link_margin_db, paper_link_margin, EyeDiagram, EyeTrace,
};
use fso_core::waveform::{nrz_encode, prbs_generate, Unit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Upper Gaussian tail by composite Simpson quadrature of the density.
fn gaussian_tail_oracle(q: f64) -> f64 {
    let (a, b) = (q, q + 40.0);
    let n = 200_000;
    let h = (b - a) / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut sum = pdf(a) + pdf(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * pdf(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn ber_matches_quadrature() {
    for q in [1.0, 3.0, 4.0, 6.0, 7.0, 10.0] {
        let oracle = gaussian_tail_oracle(q);
        let ber = ber_from_q(q).unwrap();
        assert!(
            (ber / oracle - 1.0).abs() < 1e-6,
            "q={q}: {ber} vs {oracle}"
        );
    }
    // Frozen from the oracle.
    assert!((ber_from_q(6.0).unwrap() / 9.87e-10 - 1.0).abs() < 0.01);
    assert!((ber_from_q(7.0).unwrap() / 1.28e-12 - 1.0).abs() < 0.01);
}

#[test]
fn ber_is_strictly_decreasing() {
    let grid: Vec<f64> = (0..=300)
        .map(|i| ber_from_q(i as f64 * 0.1).unwrap())
        .collect();
    assert_eq!(grid[0], 0.5);
    assert!(grid.windows(2).all(|w| w[1] < w[0]));
}

fn gaussian_eye(n_traces: usize, sigma: f64, seed: u64) -> EyeDiagram {
    let spb = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let bits = prbs_generate(15, 1, n_traces + 1).unwrap();
    let traces = (0..n_traces)
        .map(|k| {
            let (label, next) = (bits.bits()[k], bits.bits()[k + 1]);
            let samples = (0..2 * spb)
                .map(|j| {
                    let bit = if j < spb { label } else { next };
                    (if bit { 1.0 } else { 0.0 }) + noise.sample(&mut rng)
                })
                .collect();
            EyeTrace {
                samples,
                label,
                next,
            }
        })
        .collect();
    EyeDiagram {
        traces,
        samples_per_ui: spb,
        unit: Unit::Ampere,
    }
}

#[test]
fn synthetic_gaussian_eye() {
    let m = eye_metrics(&gaussian_eye(4000, 0.05, 9)).unwrap();
    assert!((m.q_factor - 10.0).abs() <= 0.5, "{}", m.q_factor);
    assert!((m.mu1 - 1.0).abs() < 0.01 && m.mu0.abs() < 0.01);
    assert!((m.sigma1 - 0.05).abs() < 0.005 && (m.sigma0 - 0.05).abs() < 0.005);
    assert_eq!(m.ber_estimate, ber_from_q(m.q_factor).unwrap());
    // Q = 10 maps to about 7.6e-24.
    let ber10 = ber_from_q(10.0).unwrap();
    assert!((ber10 / gaussian_tail_oracle(10.0) - 1.0).abs() < 1e-6);
    assert!((0.0..1.0).contains(&m.sampling_phase));
    let height = (m.mu1 - 3.0 * m.sigma1) - (m.mu0 + 3.0 * m.sigma0);
    assert_eq!(m.eye_height, height);
}

#[test]
fn fold_average_reproduces_level_one() {
    let bits = prbs_generate(7, 1, 128).unwrap();
    let spb = 64;
    let w = nrz_encode(&bits, spb, 0.8, 0.1, 640e9).unwrap();
    let eye = eye_fold(&w, spb, &bits).unwrap();
    assert_eq!(eye.traces.len(), 127);
    let at_half = spb / 2;
    let ones: Vec<f64> = eye
        .traces
        .iter()
        .filter(|t| t.label)
        .map(|t| t.samples[at_half])
        .collect();
    let mean = ones.iter().sum::<f64>() / ones.len() as f64;
    assert!((mean - 0.8).abs() < 1e-15);
}

#[test]
fn margins_from_published_powers() {
    assert!((link_margin_db(-5.066, -20.0) - 14.934).abs() < 1e-3);
    assert!((link_margin_db(-19.099, -20.0) - 0.901).abs() < 1e-3);
    // Linear-units oracle: 10·log10(P_R[mW] / S[mW]).
    let mw = |dbm: f64| 10f64.powf(dbm / 10.0);
    assert!((10.0 * (mw(-5.066) / mw(-20.0)).log10() - link_margin_db(-5.066, -20.0)).abs() < 1e-9);
    assert!((paper_link_margin(-5.066, -20.0).unwrap() - -5.9636).abs() < 1e-3);
    assert!((paper_link_margin(-19.099, -20.0).unwrap() - -0.2001).abs() < 1e-3);
}

proptest! {
    #[test]
    fn margin_is_translation_consistent(p in -80.0f64..30.0, s in -60.0f64..0.0, c in -50.0f64..50.0) {
        prop_assert!((link_margin_db(p + c, s + c) - link_margin_db(p, s)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn q_is_affine_invariant(seed in any::<u64>(), a in 1e-6f64..1e3, b in -10.0f64..10.0) {
        let eye = gaussian_eye(200, 0.2, seed);
        let scaled = EyeDiagram {
            traces: eye.traces.iter().map(|t| EyeTrace {
                samples: t.samples.iter().map(|v| a * v + b).collect(),
                ..t.clone()
            }).collect(),
            ..eye.clone()
        };
        let q0 = eye_metrics(&eye).unwrap();
        let q1 = eye_metrics(&scaled).unwrap();
        prop_assert!((q1.q_factor / q0.q_factor - 1.0).abs() < 1e-9, "{} vs {}", q0.q_factor, q1.q_factor);
        prop_assert_eq!(q0.sampling_phase, q1.sampling_phase);
    }
}
