//! End-to-end scenarios: configuration, the transmission pipeline, sweeps
//! and range search.
//!
//! The pipeline runs PRBS → NRZ → transmit Bessel → MZM → FSO channel → APD
//! → receive Bessel → eye analysis on one record.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apd::{apd_detect, receive_filter_with, ApdSpec, NoiseConfig, DEFAULT_CUTOFF_FACTOR};
use crate::channel::{apply_channel, preset, ChannelParams, LinkLossBreakdown, Weather};
use crate::error::{invalid, Error, Result};
use crate::metrics::{self, eye_fold, eye_metrics, EyeDiagram, EyeMetrics, LinkBudget};
use crate::optical::{
    cw_laser, mzm_modulate, watts_to_dbm, LaserSpec, ModulatorSpec, OpticalSignal,
};
use crate::waveform::{
    bessel_lowpass, circular_cross_correlation, nrz_encode, prbs_generate, BitSequence, FilterSpec,
    SampledWaveform,
};

/// Order of both link Bessel filters.
pub const LINK_FILTER_ORDER: u32 = 4;

/// Channel section of a scenario: an optional preset label plus the
/// resolved parameters.
///
/// When read from a file the preset (rain when absent) fills every field the
/// section does not set explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ChannelSection", into = "ChannelSection")]
pub struct ChannelSetting {
    pub preset: Option<Weather>,
    pub params: ChannelParams,
}

impl ChannelSetting {
    pub fn from_preset(weather: Weather) -> Self {
        Self {
            preset: Some(weather),
            params: preset(weather),
        }
    }

    pub fn custom(params: ChannelParams) -> Self {
        Self {
            preset: None,
            params,
        }
    }
}

impl Default for ChannelSetting {
    fn default() -> Self {
        Self::from_preset(Weather::Rain)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<Weather>,
    gamma_db_per_km: Option<f64>,
    range_km: Option<f64>,
    tx_aperture_m: Option<f64>,
    rx_aperture_m: Option<f64>,
    divergence_rad: Option<f64>,
    extra_loss_db: Option<f64>,
}

impl From<ChannelSection> for ChannelSetting {
    fn from(s: ChannelSection) -> Self {
        let base = preset(s.preset.unwrap_or(Weather::Rain));
        Self {
            preset: s.preset,
            params: ChannelParams {
                gamma_db_per_km: s.gamma_db_per_km.unwrap_or(base.gamma_db_per_km),
                range_km: s.range_km.unwrap_or(base.range_km),
                tx_aperture_m: s.tx_aperture_m.unwrap_or(base.tx_aperture_m),
                rx_aperture_m: s.rx_aperture_m.unwrap_or(base.rx_aperture_m),
                divergence_rad: s.divergence_rad.unwrap_or(base.divergence_rad),
                extra_loss_db: s.extra_loss_db.unwrap_or(base.extra_loss_db),
            },
        }
    }
}

impl From<ChannelSetting> for ChannelSection {
    fn from(s: ChannelSetting) -> Self {
        let p = s.params;
        Self {
            preset: s.preset,
            gamma_db_per_km: Some(p.gamma_db_per_km),
            range_km: Some(p.range_km),
            tx_aperture_m: Some(p.tx_aperture_m),
            rx_aperture_m: Some(p.rx_aperture_m),
            divergence_rad: Some(p.divergence_rad),
            extra_loss_db: Some(p.extra_loss_db),
        }
    }
}

/// Everything needed to run one link simulation.
///
/// Serialized as TOML with one section per component. Every field has a
/// default, so an empty file is the reference 10 Gb/s rain scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub bit_rate_hz: f64,
    pub sequence_length_bits: usize,
    pub samples_per_bit: usize,
    pub prbs_order: u32,
    pub prbs_seed: u32,
    /// Transmit Bessel cutoff as a multiple of the bit rate.
    pub tx_cutoff_factor: f64,
    /// Receive Bessel cutoff as a multiple of the bit rate.
    pub receiver_cutoff_factor: f64,
    pub sensitivity_dbm: f64,
    pub laser: LaserSpec,
    pub modulator: ModulatorSpec,
    pub channel: ChannelSetting,
    pub apd: ApdSpec,
    pub noise: NoiseConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bit_rate_hz: 10.0e9,
            sequence_length_bits: 128,
            samples_per_bit: 64,
            prbs_order: 7,
            prbs_seed: 1,
            tx_cutoff_factor: DEFAULT_CUTOFF_FACTOR,
            receiver_cutoff_factor: DEFAULT_CUTOFF_FACTOR,
            sensitivity_dbm: -20.0,
            laser: LaserSpec::default(),
            modulator: ModulatorSpec::default(),
            channel: ChannelSetting::default(),
            apd: ApdSpec::default(),
            noise: NoiseConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn with_preset(weather: Weather) -> Self {
        Self {
            channel: ChannelSetting::from_preset(weather),
            ..Self::default()
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.bit_rate_hz * self.samples_per_bit as f64
    }

    pub fn total_samples(&self) -> usize {
        self.sequence_length_bits * self.samples_per_bit
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bit_rate_hz > 0.0 && self.bit_rate_hz.is_finite()) {
            return Err(invalid("bit_rate_hz", "must be positive"));
        }
        if self.sequence_length_bits < 2 {
            return Err(invalid("sequence_length_bits", "must be at least 2"));
        }
        if self.samples_per_bit < 2 {
            return Err(invalid("samples_per_bit", "must be at least 2"));
        }
        for (name, factor) in [
            ("tx_cutoff_factor", self.tx_cutoff_factor),
            ("receiver_cutoff_factor", self.receiver_cutoff_factor),
        ] {
            if !(factor > 0.0 && factor < self.samples_per_bit as f64 / 2.0) {
                return Err(invalid(
                    name,
                    format!("{factor} must be positive and below samples_per_bit / 2"),
                ));
            }
        }
        if !self.sensitivity_dbm.is_finite() {
            return Err(invalid("sensitivity_dbm", "must be finite"));
        }
        self.laser.validate()?;
        self.modulator.validate()?;
        self.channel.params.validate()?;
        self.apd.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn tx_filter(&self) -> FilterSpec {
        FilterSpec::bessel(LINK_FILTER_ORDER, self.tx_cutoff_factor * self.bit_rate_hz)
    }

    fn rx_filter(&self) -> FilterSpec {
        FilterSpec::bessel(
            LINK_FILTER_ORDER,
            self.receiver_cutoff_factor * self.bit_rate_hz,
        )
    }
}

/// Output of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Resolved configuration the run used.
    pub config: ScenarioConfig,
    pub losses: LinkLossBreakdown,
    /// Laser power minus mean modulated power, measured on the waveform.
    pub modulation_penalty_db: f64,
    /// Mean optical power at the receiver aperture.
    pub received_power_dbm: f64,
    pub budget: LinkBudget,
    pub eye: EyeMetrics,
    /// Total delay of the link filters, removed before folding.
    pub alignment_delay_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_s: Option<f64>,
}

impl SimReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Report plus the intermediate signals of a run.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub bits: BitSequence,
    pub received_optical: OpticalSignal,
    /// Receive-filtered current, aligned with `bits`.
    pub aligned_current: SampledWaveform,
    pub eye: EyeDiagram,
}

/// Deterministic front half of the chain, shared by every noise realization.
pub(crate) struct Transmission {
    pub bits: BitSequence,
    pub modulated: OpticalSignal,
    pub received: OpticalSignal,
    pub losses: LinkLossBreakdown,
    pub delay: usize,
}

impl Transmission {
    pub(crate) fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let fs = config.sample_rate();
        let bits = prbs_generate(
            config.prbs_order,
            config.prbs_seed,
            config.sequence_length_bits,
        )
        .map_err(|e| e.at("prbs"))?;
        let drive =
            nrz_encode(&bits, config.samples_per_bit, 1.0, 0.0, fs).map_err(|e| e.at("nrz"))?;
        let shaped = bessel_lowpass(&drive, &config.tx_filter()).map_err(|e| e.at("tx filter"))?;
        let carrier = cw_laser(&config.laser, drive.len(), fs).map_err(|e| e.at("laser"))?;
        let modulated =
            mzm_modulate(&carrier, &shaped, &config.modulator).map_err(|e| e.at("modulator"))?;
        let (received, losses) =
            apply_channel(&modulated, &config.channel.params).map_err(|e| e.at("channel"))?;
        let delay = filter_delay(config, &drive, &shaped)?;
        Ok(Self {
            bits,
            modulated,
            received,
            losses,
            delay,
        })
    }

    /// Detects, filters and aligns one noise realization.
    pub(crate) fn receive(
        &self,
        config: &ScenarioConfig,
        noise: &NoiseConfig,
    ) -> Result<SampledWaveform> {
        let current = apd_detect(&self.received, &config.apd, noise).map_err(|e| e.at("apd"))?;
        let filtered =
            receive_filter_with(&current, config.bit_rate_hz, config.receiver_cutoff_factor)
                .map_err(|e| e.at("rx filter"))?;
        Ok(filtered.rotated_left(self.delay))
    }
}

/// Delay of the transmit and receive filters together, found by
/// correlating the noiseless filtered drive against the ideal NRZ.
fn filter_delay(
    config: &ScenarioConfig,
    drive: &SampledWaveform,
    shaped: &SampledWaveform,
) -> Result<usize> {
    let template = bessel_lowpass(shaped, &config.rx_filter()).map_err(|e| e.at("rx filter"))?;
    let centered = |w: &SampledWaveform| {
        let m = w.mean();
        w.samples().iter().map(|v| v - m).collect::<Vec<_>>()
    };
    let corr = circular_cross_correlation(&centered(&template), &centered(drive));
    let causal = corr.len() / 2;
    Ok((0..causal.max(1))
        .max_by(|&a, &b| corr[a].total_cmp(&corr[b]).then(b.cmp(&a)))
        .unwrap_or(0))
}

/// Runs the full chain and keeps the intermediate signals.
pub fn run_link_detailed(config: &ScenarioConfig) -> Result<SimRun> {
    let start = Instant::now();
    let tx = Transmission::build(config)?;
    let aligned = tx.receive(config, &config.noise)?;
    let eye = eye_fold(&aligned, config.samples_per_bit, &tx.bits).map_err(|e| e.at("eye fold"))?;
    let metrics = eye_metrics(&eye).map_err(|e| e.at("eye metrics"))?;

    let received_power_dbm = watts_to_dbm(tx.received.mean_power_w());
    let modulation_penalty_db = config.laser.power_dbm - watts_to_dbm(tx.modulated.mean_power_w());
    let report = SimReport {
        config: config.clone(),
        losses: tx.losses.clone(),
        modulation_penalty_db,
        received_power_dbm,
        budget: LinkBudget::new(received_power_dbm, config.sensitivity_dbm),
        eye: metrics,
        alignment_delay_samples: tx.delay,
        timing_s: Some(start.elapsed().as_secs_f64()),
    };
    Ok(SimRun {
        report,
        bits: tx.bits,
        received_optical: tx.received,
        aligned_current: aligned,
        eye,
    })
}

/// Runs the full chain for one scenario.
pub fn run_link(config: &ScenarioConfig) -> Result<SimReport> {
    run_link_detailed(config).map(|run| run.report)
}

/// Power budget of a scenario without running the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub losses: LinkLossBreakdown,
    pub modulation_penalty_db: f64,
    pub received_power_dbm: f64,
    pub budget: LinkBudget,
}

pub fn link_budget(config: &ScenarioConfig) -> Result<BudgetReport> {
    let tx = Transmission::build(config)?;
    let received_power_dbm = watts_to_dbm(tx.received.mean_power_w());
    Ok(BudgetReport {
        losses: tx.losses,
        modulation_penalty_db: config.laser.power_dbm - watts_to_dbm(tx.modulated.mean_power_w()),
        received_power_dbm,
        budget: LinkBudget::new(received_power_dbm, config.sensitivity_dbm),
    })
}

/// SplitMix64 finalizer over (base, index): a stable per-point seed.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    mix(base_seed ^ mix(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    GammaDbPerKm,
    RangeKm,
    PowerDbm,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::GammaDbPerKm => "gamma_db_per_km",
            SweepParam::RangeKm => "range_km",
            SweepParam::PowerDbm => "power_dbm",
        }
    }

    pub fn apply(self, config: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParam::GammaDbPerKm => config.channel.params.gamma_db_per_km = value,
            SweepParam::RangeKm => config.channel.params.range_km = value,
            SweepParam::PowerDbm => config.laser.power_dbm = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParam::GammaDbPerKm,
            SweepParam::RangeKm,
            SweepParam::PowerDbm,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown sweep parameter `{s}`; expected gamma_db_per_km, range_km or power_dbm"
            ))
        })
    }
}

/// How noise seeds are assigned to sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedMode {
    /// Every point reuses the scenario seed, so points differ only in the
    /// swept parameter.
    #[default]
    Common,
    /// Point `i` uses `derive_seed(seed, i)`.
    PerPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub q_factor: f64,
    pub ber_estimate: f64,
    pub link_margin_db: f64,
    pub total_db: f64,
}

/// Evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(invalid("from/to", "must be finite"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let step = (to - from) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                to
            } else {
                from + step * i as f64
            }
        })
        .collect())
}

/// Runs one scenario per sweep value, in parallel, returning rows in order.
pub fn sweep(
    base: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    seeds: SeedMode,
) -> Result<Vec<SweepRow>> {
    values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut config = base.clone();
            param.apply(&mut config, value);
            if seeds == SeedMode::PerPoint {
                config.noise.rng_seed = derive_seed(base.noise.rng_seed, i as u64);
            }
            let report = run_link(&config)
                .map_err(|e| Error::Config(format!("{param} = {value}: {e}")).at("sweep"))?;
            Ok(SweepRow {
                value,
                q_factor: report.eye.q_factor,
                ber_estimate: report.eye.ber_estimate,
                link_margin_db: report.budget.link_margin_db,
                total_db: report.losses.total_db,
            })
        })
        .collect()
}

/// Q of `base` with the range replaced; the noise seed stays fixed.
pub fn q_at_range(base: &ScenarioConfig, range_km: f64) -> Result<f64> {
    let mut config = base.clone();
    config.channel.params.range_km = range_km;
    Ok(run_link(&config)?.eye.q_factor)
}

/// Longest range at which `base` still reaches `q_target`.
pub fn max_range_for_q(base: &ScenarioConfig, q_target: f64) -> Result<f64> {
    base.validate()?;
    metrics::max_range_for_q(|r| q_at_range(base, r), q_target)
}
