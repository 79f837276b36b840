//! Free-space channel: Beer-Lambert atmospheric attenuation, geometric
//! beam-spread loss and weather presets.
//!
//! The attenuation coefficient is carried in dB/km. The exponential form of
//! Beer-Lambert uses nepers, γ_np = γ_dB / (10·log₁₀ e), and both forms give
//! the same transmittance:
//!
//! ```text
//! τ = exp(-γ_np · d) = 10^(-γ_dB · d / 10)
//! ```
//!
//! Note on reported transmittances: with 6 dB/km over 1 km the law gives
//! τ ≈ 0.2512, and with 100 dB/km over 300 m it gives τ = 1.0e-3. Published
//! figures of 0.8253 (rain) and 0.9440 (fog) for this scenario both match a
//! single coefficient near 0.192 km⁻¹ and cannot be obtained from the stated
//! dB/km values; this module does not try to reproduce them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optical::OpticalSignal;

/// 10·log₁₀(e): dB per neper of power.
pub const DB_PER_NEPER: f64 = 4.342_944_819_032_518;

/// Transmitter aperture used when none is configured. Not a published value.
pub const DEFAULT_TX_APERTURE_M: f64 = 0.05;
/// Receiver aperture used when none is configured. Not a published value.
pub const DEFAULT_RX_APERTURE_M: f64 = 0.20;
pub const DEFAULT_DIVERGENCE_RAD: f64 = 3.0e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub gamma_db_per_km: f64,
    pub range_km: f64,
    pub tx_aperture_m: f64,
    pub rx_aperture_m: f64,
    /// Full-angle beam divergence.
    pub divergence_rad: f64,
    pub extra_loss_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        preset(Weather::Rain)
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_db_per_km >= 0.0 && self.gamma_db_per_km.is_finite()) {
            return Err(invalid("channel.gamma_db_per_km", "must be non-negative"));
        }
        if !(self.range_km > 0.0 && self.range_km.is_finite()) {
            return Err(invalid("channel.range_km", "must be positive"));
        }
        if !(self.tx_aperture_m > 0.0 && self.tx_aperture_m.is_finite()) {
            return Err(invalid("channel.tx_aperture_m", "must be positive"));
        }
        if !(self.rx_aperture_m > 0.0 && self.rx_aperture_m.is_finite()) {
            return Err(invalid("channel.rx_aperture_m", "must be positive"));
        }
        if !(self.divergence_rad >= 0.0 && self.divergence_rad.is_finite()) {
            return Err(invalid("channel.divergence_rad", "must be non-negative"));
        }
        if !(self.extra_loss_db >= 0.0 && self.extra_loss_db.is_finite()) {
            return Err(invalid("channel.extra_loss_db", "must be non-negative"));
        }
        Ok(())
    }

    /// Beam spot diameter at the receiver, meters.
    pub fn spot_diameter_m(&self) -> f64 {
        self.tx_aperture_m + self.divergence_rad * self.range_km * 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    Rain,
    Fog,
    Clear,
}

impl Weather {
    pub const ALL: [Weather; 3] = [Weather::Rain, Weather::Fog, Weather::Clear];

    pub fn name(self) -> &'static str {
        match self {
            Weather::Rain => "rain",
            Weather::Fog => "fog",
            Weather::Clear => "clear",
        }
    }

    pub fn preset(self) -> WeatherPreset {
        match self {
            Weather::Rain => WeatherPreset {
                name: self,
                gamma_db_per_km: 6.0,
                range_km: 1.0,
            },
            Weather::Fog => WeatherPreset {
                name: self,
                gamma_db_per_km: 100.0,
                range_km: 0.3,
            },
            // Baseline for comparisons, not a published scenario.
            Weather::Clear => WeatherPreset {
                name: self,
                gamma_db_per_km: 0.2,
                range_km: 1.0,
            },
        }
    }
}

impl fmt::Display for Weather {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Weather {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Weather::ALL
            .into_iter()
            .find(|w| w.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherPreset {
    pub name: Weather,
    pub gamma_db_per_km: f64,
    pub range_km: f64,
}

/// Channel parameters for a weather preset with default terminal geometry.
pub fn preset(name: Weather) -> ChannelParams {
    let p = name.preset();
    ChannelParams {
        gamma_db_per_km: p.gamma_db_per_km,
        range_km: p.range_km,
        tx_aperture_m: DEFAULT_TX_APERTURE_M,
        rx_aperture_m: DEFAULT_RX_APERTURE_M,
        divergence_rad: DEFAULT_DIVERGENCE_RAD,
        extra_loss_db: 0.0,
    }
}

/// Looks up a preset by name.
pub fn preset_named(name: &str) -> Result<ChannelParams> {
    Ok(preset(name.parse()?))
}

/// Per-mechanism losses of one channel configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkLossBreakdown {
    pub atmospheric_db: f64,
    pub geometric_db: f64,
    pub extra_db: f64,
    pub total_db: f64,
    /// Atmospheric power transmittance τ.
    pub transmittance: f64,
}

impl LinkLossBreakdown {
    /// Linear power ratio of the total loss.
    pub fn power_ratio(&self) -> f64 {
        10f64.powf(-self.total_db / 10.0)
    }
}

fn check_attenuation(gamma_db_per_km: f64, range_km: f64) -> Result<()> {
    if !(gamma_db_per_km >= 0.0) {
        return Err(invalid(
            "gamma_db_per_km",
            format!("{gamma_db_per_km} is negative"),
        ));
    }
    if !(range_km >= 0.0) {
        return Err(invalid("range_km", format!("{range_km} is negative")));
    }
    Ok(())
}

/// Beer-Lambert transmittance exp(-γ_np · d).
pub fn transmittance(gamma_db_per_km: f64, range_km: f64) -> Result<f64> {
    check_attenuation(gamma_db_per_km, range_km)?;
    Ok((-(gamma_db_per_km / DB_PER_NEPER) * range_km).exp())
}

/// Intensity remaining after `range_km` of attenuation.
pub fn intensity_at(i0: f64, gamma_db_per_km: f64, range_km: f64) -> Result<f64> {
    if !(i0 >= 0.0) {
        return Err(invalid("i0", format!("{i0} is negative")));
    }
    Ok(i0 * transmittance(gamma_db_per_km, range_km)?)
}

/// Geometric spreading loss in dB, floored at 0.
///
/// The captured fraction is (d_rx / (d_tx + θ·L))², capped at 1.
pub fn geometric_loss_db(p: &ChannelParams) -> f64 {
    let capture = (p.rx_aperture_m / p.spot_diameter_m()).powi(2).min(1.0);
    // -10·log10(1) is -0.0; normalize the sign.
    (-10.0 * capture.log10()).max(0.0)
}

pub fn link_loss(p: &ChannelParams) -> Result<LinkLossBreakdown> {
    p.validate()?;
    let atmospheric_db = p.gamma_db_per_km * p.range_km;
    let geometric_db = geometric_loss_db(p);
    let extra_db = p.extra_loss_db;
    Ok(LinkLossBreakdown {
        atmospheric_db,
        geometric_db,
        extra_db,
        total_db: atmospheric_db + geometric_db + extra_db,
        transmittance: 10f64.powf(-atmospheric_db / 10.0),
    })
}

/// Attenuates every power sample by the channel's total loss.
pub fn apply_channel(
    signal: &OpticalSignal,
    p: &ChannelParams,
) -> Result<(OpticalSignal, LinkLossBreakdown)> {
    let breakdown = link_loss(p)?;
    let out = signal.scaled(breakdown.power_ratio())?;
    Ok((out, breakdown))
}
