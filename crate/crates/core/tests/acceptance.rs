//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::Instant;

use fso_core::channel::{geometric_loss_db, link_loss, transmittance, ChannelParams, Weather};
use fso_core::metrics::{
    ber_from_q, eye_metrics, link_margin_db, paper_link_margin, EyeDiagram, EyeTrace,
};
use fso_core::montecarlo::count_bit_errors;
use fso_core::scenario::{
    max_range_for_q, q_at_range, run_link, run_link_detailed, sweep, sweep_values, ScenarioConfig,
    SeedMode, SweepParam,
};
use fso_core::waveform::{
    bessel_lowpass, nrz_encode, prbs_generate, BesselResponse, BitSequence, FilterSpec,
    SampledWaveform, Unit,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<String, String> {
    if (got - want).abs() <= tol {
        Ok(format!("{name}={got:.6}"))
    } else {
        Err(format!("{name}={got} expected {want} ± {tol}"))
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: fso_core::Error) -> String {
    e.to_string()
}

fn seeded(weather: Weather, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::with_preset(weather);
    c.noise.rng_seed = seed;
    c
}

fn beer_lambert() -> Check {
    let a = within(
        "T(6,1)",
        transmittance(6.0, 1.0).map_err(err)?,
        0.251189,
        1e-5,
    )?;
    let b = within(
        "T(100,0.3)",
        transmittance(100.0, 0.3).map_err(err)?,
        1.000e-3,
        1e-6,
    )?;
    let readme = include_str!("../../../README.md");
    ensure(
        readme.contains("0.8253") && readme.contains("0.9440"),
        "README does not document the published transmittance discrepancy",
    )?;
    Ok(format!("{a}, {b}, discrepancy documented"))
}

fn link_margins() -> Check {
    let values = [
        within(
            "compat(rain)",
            paper_link_margin(-5.066, -20.0).map_err(err)?,
            -5.9636,
            1e-3,
        )?,
        within(
            "compat(fog)",
            paper_link_margin(-19.099, -20.0).map_err(err)?,
            -0.2001,
            1e-3,
        )?,
        within("LM(rain)", link_margin_db(-5.066, -20.0), 14.934, 1e-3)?,
        within("LM(fog)", link_margin_db(-19.099, -20.0), 0.901, 1e-3)?,
    ];
    Ok(values.join(", "))
}

fn geometric_loss() -> Check {
    // Closed form: -20·log10(d_rx / (d_tx + θ·L)).
    let oracle =
        |tx: f64, rx: f64, theta: f64, l_km: f64| -20.0 * (rx / (tx + theta * l_km * 1e3)).log10();
    let case = |tx, rx, theta, l_km| ChannelParams {
        gamma_db_per_km: 0.0,
        range_km: l_km,
        tx_aperture_m: tx,
        rx_aperture_m: rx,
        divergence_rad: theta,
        extra_loss_db: 0.0,
    };
    let a = within(
        "case1",
        geometric_loss_db(&case(0.05, 0.2, 3e-3, 1.0)),
        oracle(0.05, 0.2, 3e-3, 1.0),
        0.01,
    )?;
    let b = within(
        "case2",
        geometric_loss_db(&case(0.05, 0.2, 3e-3, 0.3)),
        oracle(0.05, 0.2, 3e-3, 0.3),
        0.01,
    )?;
    Ok(format!("{a} dB, {b} dB"))
}

fn bessel_filter() -> Check {
    let fc = 7.5e9;
    let fs = 640e9;
    let r = BesselResponse::new(4, fc).map_err(err)?;
    let h0 = within("|H(0)|", r.magnitude(0.0), 1.0, 1e-6)?;
    let hc = within("|H(fc)| dB", 20.0 * r.magnitude(fc).log10(), -3.0, 0.1)?;
    let grid: Vec<f64> = (0..1024)
        .map(|i| r.magnitude(i as f64 * fs / 2.0 / 1023.0))
        .collect();
    ensure(
        grid.windows(2).all(|w| w[1] <= w[0]),
        "magnitude not monotone on 1024-point grid",
    )?;

    // Measured on a sampled tone, too.
    let n = 8192;
    let tone: Vec<f64> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * fc * i as f64 / fs).sin())
        .collect();
    let w = SampledWaveform::new(tone, fs, Unit::DimensionlessDrive).map_err(err)?;
    let out = bessel_lowpass(&w, &FilterSpec::bessel(4, fc)).map_err(err)?;
    let rms = (out.samples().iter().map(|v| v * v).sum::<f64>() / n as f64 * 2.0).sqrt();
    let tone_db = within("tone loss dB", -20.0 * rms.log10(), 3.0, 0.1)?;
    Ok(format!("{h0}, {hc}, {tone_db}, monotone"))
}

fn end_to_end_ordering() -> Check {
    let mut lines = Vec::new();
    for seed in [1u64, 42, 2024] {
        let t = Instant::now();
        let rain = run_link(&seeded(Weather::Rain, seed)).map_err(err)?;
        let t_rain = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let fog = run_link(&seeded(Weather::Fog, seed)).map_err(err)?;
        let t_fog = t.elapsed().as_secs_f64();
        let (qr, qf) = (rain.eye.q_factor, fog.eye.q_factor);
        ensure(
            qr > 2.0 * qf,
            format!("seed {seed}: Q(rain)={qr} not > 2·Q(fog)={qf}"),
        )?;
        ensure(
            t_rain < 1.0 && t_fog < 1.0,
            format!("seed {seed}: runtime {t_rain:.3}s / {t_fog:.3}s"),
        )?;
        lines.push(format!(
            "seed {seed}: Q rain {qr:.2} fog {qf:.2} ({t_rain:.3}s/{t_fog:.3}s)"
        ));
    }
    Ok(lines.join("; "))
}

fn monte_carlo() -> Check {
    let start = Instant::now();
    let base = seeded(Weather::Fog, 1);
    let range = max_range_for_q(&base, 4.0).map_err(err)?;
    let mut tuned = base.clone();
    tuned.channel.params.range_km = range;
    let mc = count_bit_errors(&tuned, 1_000_000).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(mc.bits >= 1_000_000, format!("only {} bits", mc.bits))?;
    ensure(
        (3.5..=4.5).contains(&mc.measured_q),
        format!("measured Q {} outside [3.5, 4.5]", mc.measured_q),
    )?;
    let predicted = ber_from_q(mc.measured_q).map_err(err)?;
    let ratio = mc.counted_ber / predicted;
    ensure(
        (0.5..=2.0).contains(&ratio),
        format!(
            "counted {} vs predicted {predicted} (ratio {ratio:.3})",
            mc.counted_ber
        ),
    )?;
    ensure(elapsed < 60.0, format!("runtime {elapsed:.1}s"))?;
    Ok(format!(
        "range {range:.4} km, Q {:.3}, {} errors / {} bits, counted {:.3e} vs {:.3e} (x{ratio:.2}), {elapsed:.1}s",
        mc.measured_q, mc.errors, mc.bits, mc.counted_ber, predicted
    ))
}

fn property_suites() -> Check {
    // PRBS period and balance.
    let bits = prbs_generate(7, 1, 254).map_err(err)?;
    let (a, b) = bits.bits().split_at(127);
    ensure(a == b, "PRBS7 period is not 127")?;
    ensure(
        a.iter().filter(|&&x| x).count() == 64,
        "PRBS7 not balanced 64/63",
    )?;

    // NRZ round trip over every PRBS9 window.
    let long = prbs_generate(9, 3, 4096).map_err(err)?;
    for chunk in long.bits().chunks(64) {
        let seq = BitSequence::new(chunk.to_vec());
        let w = nrz_encode(&seq, 8, 1.0, 0.0, 8.0).map_err(err)?;
        let back: Vec<bool> = (0..chunk.len())
            .map(|k| w.samples()[k * 8 + 4] > 0.5)
            .collect();
        ensure(back == chunk, "NRZ round trip failed")?;
    }

    // Transmittance multiplicativity.
    for g in [0.0, 0.5, 6.0, 42.0, 100.0] {
        for (l1, l2) in [(0.1, 0.2), (1.0, 2.5), (0.01, 0.7)] {
            let lhs = transmittance(g, l1 + l2).map_err(err)?;
            let rhs = transmittance(g, l1).map_err(err)? * transmittance(g, l2).map_err(err)?;
            ensure(
                (lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300),
                "transmittance not multiplicative",
            )?;
        }
    }

    // Q affine invariance on a simulated eye.
    let run = run_link_detailed(&seeded(Weather::Fog, 5)).map_err(err)?;
    let q0 = eye_metrics(&run.eye).map_err(err)?.q_factor;
    for (scale, shift) in [(3.0, 0.0), (1e3, -2.0), (1e-4, 5e-3)] {
        let eye = EyeDiagram {
            traces: run
                .eye
                .traces
                .iter()
                .map(|t| EyeTrace {
                    samples: t.samples.iter().map(|v| scale * v + shift).collect(),
                    ..t.clone()
                })
                .collect(),
            ..run.eye.clone()
        };
        let q = eye_metrics(&eye).map_err(err)?.q_factor;
        ensure(
            (q / q0 - 1.0).abs() < 1e-9,
            format!("Q not affine invariant: {q} vs {q0}"),
        )?;
    }

    // dB breakdown against the realized power ratio.
    for weather in Weather::ALL {
        let mut c = ScenarioConfig::with_preset(weather);
        c.noise.enabled = false;
        let b = link_loss(&c.channel.params).map_err(err)?;
        let run = run_link_detailed(&c).map_err(err)?;
        let p_tx = c.laser.power_dbm - run.report.modulation_penalty_db;
        let realized = p_tx - run.report.received_power_dbm;
        ensure(
            (realized - b.total_db).abs() < 1e-9,
            format!("{weather:?}: {realized} vs {}", b.total_db),
        )?;
    }

    // Sweep monotonicity of Q in gamma.
    let values = sweep_values(0.0, 100.0, 11).map_err(err)?;
    let mut base = ScenarioConfig::default();
    base.noise.rng_seed = 7;
    let rows = sweep(&base, SweepParam::GammaDbPerKm, &values, SeedMode::Common).map_err(err)?;
    ensure(
        rows.windows(2).all(|w| w[1].q_factor <= w[0].q_factor),
        "Q not non-increasing in gamma",
    )?;

    // Determinism of the seeded JSON report.
    let json = || {
        let mut r = run_link(&seeded(Weather::Fog, 42)).map_err(err)?;
        r.timing_s = None;
        r.to_json().map_err(err)
    };
    ensure(json()? == json()?, "seeded JSON differs between runs")?;
    Ok("PRBS, NRZ, multiplicativity, affine Q, dB consistency, sweep monotone, determinism".into())
}

fn max_range() -> Check {
    let fog = seeded(Weather::Fog, 21);
    let mut parts = Vec::new();
    for l_star in [0.2, 0.35] {
        let q_star = q_at_range(&fog, l_star).map_err(err)?;
        let found = max_range_for_q(&fog, q_star).map_err(err)?;
        ensure(
            (found - l_star).abs() <= 0.001,
            format!("recovered {found} for {l_star}"),
        )?;
        parts.push(format!("L*={l_star} -> {found:.4}"));
    }
    let target = 6.0;
    let r_fog = max_range_for_q(&seeded(Weather::Fog, 1), target).map_err(err)?;
    let r_rain = max_range_for_q(&seeded(Weather::Rain, 1), target).map_err(err)?;
    ensure(
        r_fog < r_rain,
        format!("fog {r_fog} km not < rain {r_rain} km"),
    )?;
    parts.push(format!(
        "Q≥{target}: fog {r_fog:.4} km < rain {r_rain:.4} km"
    ));
    Ok(parts.join(", "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("beer-lambert transmittance", beer_lambert),
        ("link margins", link_margins),
        ("geometric loss", geometric_loss),
        ("bessel filter", bessel_filter),
        ("end-to-end rain vs fog", end_to_end_ordering),
        ("monte carlo BER", monte_carlo),
        ("property suites", property_suites),
        ("max range", max_range),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
