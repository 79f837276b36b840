//! Avalanche photodiode detection and the receive low-pass filter.
//!
//! Mean photocurrent is `M·R·P + I_d`. With noise enabled each sample gets
//! independent zero-mean Gaussian noise of variance
//!
//! ```text
//! σ² = 2q·M²·F·(R·P + I_d)·B_n + N_th·B_n,     B_n = f_s / 2
//! ```
//!
//! where F is the McIntyre excess noise factor and N_th the thermal current
//! PSD. The noise is white up to Nyquist; the receive filter then sets the
//! effective bandwidth. Individual noisy samples can be negative.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optical::OpticalSignal;
use crate::waveform::{bessel_lowpass, FilterSpec, SampledWaveform, Unit};

/// Elementary charge, coulombs.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApdSpec {
    pub responsivity_a_per_w: f64,
    pub dark_current_a: f64,
    /// Hole/electron ionization ratio k.
    pub ionization_ratio: f64,
    /// Avalanche gain M.
    pub gain: f64,
    pub thermal_psd_a2_per_hz: f64,
}

impl Default for ApdSpec {
    fn default() -> Self {
        Self {
            responsivity_a_per_w: 1.0,
            dark_current_a: 10.0e-9,
            ionization_ratio: 0.9,
            gain: 3.0,
            thermal_psd_a2_per_hz: 1.0e-22,
        }
    }
}

impl ApdSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity_a_per_w > 0.0 && self.responsivity_a_per_w.is_finite()) {
            return Err(invalid("apd.responsivity_a_per_w", "must be positive"));
        }
        if !(self.dark_current_a >= 0.0 && self.dark_current_a.is_finite()) {
            return Err(invalid("apd.dark_current_a", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.ionization_ratio) {
            return Err(invalid("apd.ionization_ratio", "must lie in [0, 1]"));
        }
        if !(self.gain >= 1.0 && self.gain.is_finite()) {
            return Err(invalid("apd.gain", "must be at least 1"));
        }
        if !(self.thermal_psd_a2_per_hz >= 0.0 && self.thermal_psd_a2_per_hz.is_finite()) {
            return Err(invalid("apd.thermal_psd_a2_per_hz", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub rng_seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rng_seed: 1,
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn seeded(rng_seed: u64) -> Self {
        Self {
            enabled: true,
            rng_seed,
        }
    }
}

/// F = k·M + (1 - k)·(2 - 1/M).
pub fn excess_noise_factor(spec: &ApdSpec) -> f64 {
    let k = spec.ionization_ratio;
    let m = spec.gain;
    k * m + (1.0 - k) * (2.0 - 1.0 / m)
}

/// Noise variance of one sample at optical power `p_w`.
pub fn sample_noise_variance(spec: &ApdSpec, p_w: f64, sample_rate: f64) -> f64 {
    let bandwidth = sample_rate / 2.0;
    let primary = spec.responsivity_a_per_w * p_w + spec.dark_current_a;
    let shot = 2.0 * ELEMENTARY_CHARGE * spec.gain.powi(2) * excess_noise_factor(spec) * primary;
    (shot + spec.thermal_psd_a2_per_hz) * bandwidth
}

/// Converts optical power to photocurrent.
///
/// The Gaussian draws come from a ChaCha8 stream seeded with
/// `noise.rng_seed`; one standard normal is consumed per sample regardless
/// of power, so equal seeds give the same underlying draws across inputs.
pub fn apd_detect(
    optical: &OpticalSignal,
    spec: &ApdSpec,
    noise: &NoiseConfig,
) -> Result<SampledWaveform> {
    spec.validate()?;
    let power = optical.power();
    let fs = power.sample_rate();
    let mean = |p: f64| spec.gain * spec.responsivity_a_per_w * p + spec.dark_current_a;
    let samples: Vec<f64> = if noise.enabled {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
        power
            .samples()
            .iter()
            .map(|&p| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean(p) + sample_noise_variance(spec, p, fs).sqrt() * z
            })
            .collect()
    } else {
        power.samples().iter().map(|&p| mean(p)).collect()
    };
    SampledWaveform::new(samples, fs, Unit::Ampere)
}

/// Order-4 Bessel cutoff at this fraction of the bit rate.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 0.75;

pub fn receive_filter_spec(bit_rate: f64, cutoff_factor: f64) -> FilterSpec {
    FilterSpec::bessel(4, cutoff_factor * bit_rate)
}

/// Receive low-pass: order-4 Bessel at 0.75 × bit rate.
pub fn receive_filter(current: &SampledWaveform, bit_rate: f64) -> Result<SampledWaveform> {
    receive_filter_with(current, bit_rate, DEFAULT_CUTOFF_FACTOR)
}

pub fn receive_filter_with(
    current: &SampledWaveform,
    bit_rate: f64,
    cutoff_factor: f64,
) -> Result<SampledWaveform> {
    bessel_lowpass(current, &receive_filter_spec(bit_rate, cutoff_factor))
}
