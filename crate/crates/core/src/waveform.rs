//! Digital baseband building blocks: PRBS generation, NRZ pulse shaping and
//! frequency-domain Bessel low-pass filtering.

use std::fmt;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Logical data bits driving the link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSequence {
    bits: Vec<bool>,
}

impl BitSequence {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds a sequence from 0/1 bytes, rejecting any other value.
    pub fn from_binary(values: &[u8]) -> Result<Self> {
        let bits = values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(invalid("bits", format!("symbol {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, index: usize) -> Option<bool> {
        self.bits.get(index).copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Physical meaning of a waveform's samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    /// Normalized modulator drive, nominally in [0, 1].
    DimensionlessDrive,
    Ampere,
    Watt,
}

/// Uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    samples: Vec<f64>,
    sample_rate: f64,
    unit: Unit,
}

impl SampledWaveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64, unit: Unit) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid(
                "sample_rate",
                format!("{sample_rate} must be positive and finite"),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(invalid("samples", format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            unit,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Same rate and unit, new samples (validated).
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate, self.unit)
    }

    /// Relabels the unit without touching the samples.
    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    /// Circular shift to the left by `shift` samples.
    pub fn rotated_left(&self, shift: usize) -> Self {
        let mut samples = self.samples.clone();
        if !samples.is_empty() {
            let n = samples.len();
            samples.rotate_left(shift % n);
        }
        Self {
            samples,
            sample_rate: self.sample_rate,
            unit: self.unit,
        }
    }
}

// ---------------------------------------------------------------------------
// PRBS
// ---------------------------------------------------------------------------

/// Maximal-length Fibonacci taps `(n, m)` for x^n + x^m + 1.
const PRBS_TAPS: [(u32, u32); 6] = [(7, 6), (9, 5), (11, 9), (15, 14), (23, 18), (31, 28)];

pub const SUPPORTED_PRBS_ORDERS: [u32; 6] = [7, 9, 11, 15, 23, 31];

/// Generates `length` bits from a Fibonacci LFSR of the given order.
///
/// The register holds `order` bits with the oldest bit at position
/// `order - 1`. Each step emits `s[n-1] ^ s[m-1]` and shifts it in at bit 0,
/// so seed `1` produces the canonical PRBS-n stream.
pub fn prbs_generate(register_order: u32, seed: u32, length: usize) -> Result<BitSequence> {
    let &(n, m) = PRBS_TAPS
        .iter()
        .find(|(n, _)| *n == register_order)
        .ok_or(Error::UnsupportedOrder(register_order))?;
    let mask: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    if seed & !mask != 0 {
        return Err(invalid(
            "prbs_seed",
            format!("seed {seed:#b} does not fit a {n}-bit register"),
        ));
    }
    if seed == 0 {
        return Err(Error::DegenerateSeed);
    }
    if length == 0 {
        return Err(invalid("length", "must be at least 1"));
    }

    let mut state = seed;
    let bits = (0..length)
        .map(|_| {
            let bit = ((state >> (n - 1)) ^ (state >> (m - 1))) & 1;
            state = ((state << 1) | bit) & mask;
            bit == 1
        })
        .collect();
    Ok(BitSequence::new(bits))
}

// ---------------------------------------------------------------------------
// NRZ
// ---------------------------------------------------------------------------

/// Maps each bit to `samples_per_bit` constant samples at its level.
pub fn nrz_encode(
    bits: &BitSequence,
    samples_per_bit: usize,
    level_one: f64,
    level_zero: f64,
    sample_rate: f64,
) -> Result<SampledWaveform> {
    if bits.is_empty() {
        return Err(Error::EmptySequence);
    }
    if samples_per_bit == 0 {
        return Err(invalid("samples_per_bit", "must be at least 1"));
    }
    if !(level_one > level_zero) {
        return Err(invalid(
            "level_one",
            format!("{level_one} must exceed level_zero {level_zero}"),
        ));
    }
    let samples = bits
        .bits()
        .iter()
        .flat_map(|&b| {
            let level = if b { level_one } else { level_zero };
            std::iter::repeat_n(level, samples_per_bit)
        })
        .collect();
    SampledWaveform::new(samples, sample_rate, Unit::DimensionlessDrive)
}

// ---------------------------------------------------------------------------
// Bessel low-pass
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    #[default]
    BesselLowpass,
}

/// Low-pass filter request: order and -3 dB cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: u32,
    pub cutoff_hz: f64,
    #[serde(default)]
    pub kind: FilterKind,
}

impl FilterSpec {
    pub fn bessel(order: u32, cutoff_hz: f64) -> Self {
        Self {
            order,
            cutoff_hz,
            kind: FilterKind::BesselLowpass,
        }
    }
}

pub const MAX_BESSEL_ORDER: u32 = 12;

/// Analog Bessel low-pass prototype scaled to a -3 dB cutoff.
///
/// H(s) = θ(0) / θ(s·x₃/ω_c), with θ the reversed Bessel polynomial and x₃
/// the normalized frequency where |H|² = 1/2.
#[derive(Debug, Clone)]
pub struct BesselResponse {
    /// Reversed Bessel polynomial coefficients, ascending powers of s.
    coeffs: Vec<f64>,
    /// Normalized angular frequency of the -3 dB point.
    x3db: f64,
    cutoff_hz: f64,
}

impl BesselResponse {
    pub fn new(order: u32, cutoff_hz: f64) -> Result<Self> {
        if order == 0 || order > MAX_BESSEL_ORDER {
            return Err(invalid(
                "order",
                format!("{order} outside supported range 1..={MAX_BESSEL_ORDER}"),
            ));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz.is_finite()) {
            return Err(invalid(
                "cutoff_hz",
                format!("{cutoff_hz} must be positive"),
            ));
        }
        let coeffs = reverse_bessel_coefficients(order);
        let x3db = half_power_point(&coeffs);
        Ok(Self {
            coeffs,
            x3db,
            cutoff_hz,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Normalized -3 dB angular frequency of the delay-normalized prototype.
    pub fn normalized_cutoff(&self) -> f64 {
        self.x3db
    }

    /// Complex response at frequency `freq_hz` (negative frequencies allowed).
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let x = freq_hz / self.cutoff_hz * self.x3db;
        eval_prototype(&self.coeffs, x)
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }
}

/// a_k = (2n-k)! / (2^(n-k) k! (n-k)!), ascending in k.
fn reverse_bessel_coefficients(order: u32) -> Vec<f64> {
    let n = order as usize;
    let fact = |m: usize| (1..=m).fold(1.0f64, |acc, v| acc * v as f64);
    (0..=n)
        .map(|k| fact(2 * n - k) / (2f64.powi((n - k) as i32) * fact(k) * fact(n - k)))
        .collect()
}

fn eval_prototype(coeffs: &[f64], x: f64) -> Complex64 {
    let s = Complex64::new(0.0, x);
    let denom = coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c);
    Complex64::new(coeffs[0], 0.0) / denom
}

fn half_power_point(coeffs: &[f64]) -> f64 {
    let power = |x: f64| eval_prototype(coeffs, x).norm_sqr();
    let mut hi = 1.0;
    while power(hi) > 0.5 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Filters `wave` with an analog Bessel low-pass applied to its DFT.
///
/// The whole record is one block, so the filter acts circularly.
pub fn bessel_lowpass(wave: &SampledWaveform, spec: &FilterSpec) -> Result<SampledWaveform> {
    let nyquist = wave.sample_rate() / 2.0;
    if spec.cutoff_hz >= nyquist {
        return Err(Error::CutoffAboveNyquist {
            cutoff_hz: spec.cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    let response = BesselResponse::new(spec.order, spec.cutoff_hz)?;
    let n = wave.len();
    if n == 0 {
        return Ok(wave.clone());
    }

    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = wave
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = wave.sample_rate() / n as f64;
    for (k, bin) in buf.iter_mut().enumerate() {
        *bin *= response.response(bin_frequency(k, n, df));
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    wave.with_samples(buf.iter().map(|c| c.re * scale).collect())
}

fn bin_frequency(k: usize, n: usize, df: f64) -> f64 {
    if k <= n / 2 {
        k as f64 * df
    } else {
        -((n - k) as f64) * df
    }
}

/// Circular cross-correlation `r[l] = Σ a[i + l] · b[i]` for every lag.
pub(crate) fn circular_cross_correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    planner.plan_fft_inverse(n).process(&mut prod);
    prod.iter().map(|c| c.re / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_four_polynomial() {
        assert_eq!(
            reverse_bessel_coefficients(4),
            vec![105.0, 105.0, 45.0, 10.0, 1.0]
        );
        assert_eq!(reverse_bessel_coefficients(1), vec![1.0, 1.0]);
    }

    #[test]
    fn degenerate_seed_rejected() {
        assert!(matches!(prbs_generate(7, 0, 8), Err(Error::DegenerateSeed)));
    }

    #[test]
    fn unsupported_order_lists_supported() {
        let err = prbs_generate(8, 1, 8).unwrap_err();
        assert!(err.to_string().contains("7, 9, 11, 15, 23, 31"));
    }

    #[test]
    fn seed_wider_than_register_rejected() {
        assert!(prbs_generate(7, 0x80, 8).is_err());
    }

    #[test]
    fn nrz_definition() {
        let bits = BitSequence::from_binary(&[0, 1]).unwrap();
        let w = nrz_encode(&bits, 4, 1.0, 0.0, 4.0).unwrap();
        assert_eq!(w.samples(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let one = nrz_encode(&BitSequence::from_binary(&[1]).unwrap(), 64, 1.0, 0.0, 64.0).unwrap();
        assert_eq!(one.len(), 64);
        assert!(one.samples().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn nrz_rejects_bad_input() {
        let empty = BitSequence::new(vec![]);
        assert!(matches!(
            nrz_encode(&empty, 4, 1.0, 0.0, 1.0),
            Err(Error::EmptySequence)
        ));
        let bits = BitSequence::from_binary(&[1]).unwrap();
        assert!(nrz_encode(&bits, 0, 1.0, 0.0, 1.0).is_err());
        assert!(nrz_encode(&bits, 4, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn from_binary_rejects_two() {
        assert!(BitSequence::from_binary(&[0, 2]).is_err());
    }

    #[test]
    fn waveform_rejects_nan_and_rate() {
        assert!(SampledWaveform::new(vec![f64::NAN], 1.0, Unit::Watt).is_err());
        assert!(SampledWaveform::new(vec![1.0], 0.0, Unit::Watt).is_err());
    }

    #[test]
    fn cutoff_above_nyquist() {
        let w = SampledWaveform::new(vec![0.0; 16], 10.0, Unit::Ampere).unwrap();
        let err = bessel_lowpass(&w, &FilterSpec::bessel(4, 5.0)).unwrap_err();
        assert!(matches!(err, Error::CutoffAboveNyquist { .. }));
    }

    #[test]
    fn cross_correlation_finds_shift() {
        let b: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let mut a = b.clone();
        a.rotate_right(5);
        let r = circular_cross_correlation(&a, &b);
        let best = (0..32).max_by(|&x, &y| r[x].total_cmp(&r[y])).unwrap();
        assert_eq!(best, 5);
    }
}
