//! CW laser source and Mach-Zehnder intensity modulator.
//!
//! The model is a power envelope for a direct-detection link. Laser
//! linewidth is carried in [`LaserSpec`] so configs round-trip, but nothing
//! downstream reads it: there is no optical phase in this simulation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::waveform::{SampledWaveform, Unit};

/// Converts dBm to watts: 10^((p - 30) / 10).
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Converts watts to dBm. Zero power maps to -inf.
pub fn watts_to_dbm(p_w: f64) -> f64 {
    10.0 * p_w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserSpec {
    pub wavelength_nm: f64,
    pub power_dbm: f64,
    /// Recorded for fidelity with the source configuration; has no effect.
    pub linewidth_hz: f64,
}

impl Default for LaserSpec {
    fn default() -> Self {
        Self {
            wavelength_nm: 1550.0,
            power_dbm: 20.0,
            linewidth_hz: 5.0e6,
        }
    }
}

impl LaserSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(invalid("laser.wavelength_nm", "must be positive"));
        }
        if !self.power_dbm.is_finite() {
            return Err(invalid("laser.power_dbm", "must be finite"));
        }
        if !(self.linewidth_hz >= 0.0) {
            return Err(invalid("laser.linewidth_hz", "must be non-negative"));
        }
        Ok(())
    }
}

/// Linear intensity modulator.
///
/// An infinite extinction ratio is an ideal modulator with a perfectly dark
/// off-state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulatorSpec {
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub extinction_ratio_db: f64,
    pub insertion_loss_db: f64,
}

impl Default for ModulatorSpec {
    fn default() -> Self {
        Self {
            extinction_ratio_db: 30.0,
            insertion_loss_db: 0.0,
        }
    }
}

impl ModulatorSpec {
    pub fn ideal() -> Self {
        Self {
            extinction_ratio_db: f64::INFINITY,
            insertion_loss_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extinction_ratio_db > 0.0) {
            return Err(invalid("modulator.extinction_ratio_db", "must be positive"));
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(invalid(
                "modulator.insertion_loss_db",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    /// Off-state power fraction ε = 10^(-ER/10).
    pub fn off_fraction(&self) -> f64 {
        if self.extinction_ratio_db.is_finite() {
            10f64.powf(-self.extinction_ratio_db / 10.0)
        } else {
            0.0
        }
    }
}

/// Sampled optical power envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalSignal {
    power: SampledWaveform,
    wavelength_nm: f64,
}

impl OpticalSignal {
    pub fn new(power: SampledWaveform, wavelength_nm: f64) -> Result<Self> {
        if power.unit() != Unit::Watt {
            return Err(Error::Mismatch(format!(
                "optical power must be in watts, got {:?}",
                power.unit()
            )));
        }
        if let Some(i) = power.samples().iter().position(|&p| p < 0.0) {
            return Err(invalid("power_w", format!("sample {i} is negative")));
        }
        Ok(Self {
            power,
            wavelength_nm,
        })
    }

    pub fn power(&self) -> &SampledWaveform {
        &self.power
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    pub fn mean_power_w(&self) -> f64 {
        self.power.mean()
    }

    /// Multiplies every sample by a non-negative factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return Err(invalid("factor", "must be non-negative"));
        }
        let samples = self.power.samples().iter().map(|p| p * factor).collect();
        Self::new(self.power.with_samples(samples)?, self.wavelength_nm)
    }
}

/// Constant-power carrier at the laser's output power.
pub fn cw_laser(spec: &LaserSpec, num_samples: usize, sample_rate: f64) -> Result<OpticalSignal> {
    spec.validate()?;
    if num_samples == 0 {
        return Err(invalid("num_samples", "must be at least 1"));
    }
    let p = dbm_to_watts(spec.power_dbm);
    let power = SampledWaveform::new(vec![p; num_samples], sample_rate, Unit::Watt)?;
    OpticalSignal::new(power, spec.wavelength_nm)
}

/// P_out = P_in · 10^(-IL/10) · (ε + (1 - ε)·d), with d clipped to [0, 1].
pub fn mzm_modulate(
    carrier: &OpticalSignal,
    drive: &SampledWaveform,
    spec: &ModulatorSpec,
) -> Result<OpticalSignal> {
    spec.validate()?;
    if drive.unit() != Unit::DimensionlessDrive {
        return Err(Error::Mismatch(format!(
            "modulator drive must be dimensionless, got {:?}",
            drive.unit()
        )));
    }
    if drive.len() != carrier.power().len() {
        return Err(Error::Mismatch(format!(
            "drive has {} samples, carrier has {}",
            drive.len(),
            carrier.power().len()
        )));
    }
    if drive.sample_rate() != carrier.power().sample_rate() {
        return Err(Error::Mismatch(format!(
            "drive rate {} Hz differs from carrier rate {} Hz",
            drive.sample_rate(),
            carrier.power().sample_rate()
        )));
    }
    let transmission = 10f64.powf(-spec.insertion_loss_db / 10.0);
    let eps = spec.off_fraction();
    let samples = carrier
        .power()
        .samples()
        .iter()
        .zip(drive.samples())
        .map(|(&p, &d)| p * transmission * (eps + (1.0 - eps) * d.clamp(0.0, 1.0)))
        .collect();
    OpticalSignal::new(
        carrier.power().with_samples(samples)?,
        carrier.wavelength_nm(),
    )
}
