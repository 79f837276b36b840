//! Eye diagrams, Q-factor and BER estimation, link margin and range search.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::waveform::{BitSequence, SampledWaveform, Unit};

/// One two-UI window of the received waveform.
///
/// `label` is the bit occupying the first UI of the window and `next` the
/// bit in the second UI.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeTrace {
    pub samples: Vec<f64>,
    pub label: bool,
    pub next: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EyeDiagram {
    pub traces: Vec<EyeTrace>,
    pub samples_per_ui: usize,
    pub unit: Unit,
}

impl EyeDiagram {
    /// Bit label of the sample at `offset` within a trace.
    pub(crate) fn class_at(trace: &EyeTrace, offset: usize, samples_per_ui: usize) -> bool {
        if offset < samples_per_ui {
            trace.label
        } else {
            trace.next
        }
    }
}

/// Folds a waveform into overlapping two-UI traces.
///
/// Trace `k` spans bits `k` and `k + 1`, so a record of `n` bits yields
/// `n - 1` traces. The waveform must already be time-aligned with `bits`.
pub fn eye_fold(
    wave: &SampledWaveform,
    samples_per_bit: usize,
    bits: &BitSequence,
) -> Result<EyeDiagram> {
    if samples_per_bit == 0 {
        return Err(invalid("samples_per_bit", "must be at least 1"));
    }
    if wave.len() != bits.len() * samples_per_bit {
        return Err(Error::Mismatch(format!(
            "waveform has {} samples, expected {} bits x {} samples",
            wave.len(),
            bits.len(),
            samples_per_bit
        )));
    }
    let samples = wave.samples();
    let traces = (0..bits.len().saturating_sub(1))
        .map(|k| {
            let start = k * samples_per_bit;
            EyeTrace {
                samples: samples[start..start + 2 * samples_per_bit].to_vec(),
                label: bits.bits()[k],
                next: bits.bits()[k + 1],
            }
        })
        .collect();
    Ok(EyeDiagram {
        traces,
        samples_per_ui: samples_per_bit,
        unit: wave.unit(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeMetrics {
    pub mu1: f64,
    pub mu0: f64,
    pub sigma1: f64,
    pub sigma0: f64,
    /// `inf` when both classes are noiseless and separated.
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub q_factor: f64,
    pub ber_estimate: f64,
    pub eye_height: f64,
    /// Sampling instant as a fraction of the UI, in [0, 1).
    pub sampling_phase: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ClassStats {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation; exactly zero spread when all values
/// are equal.
pub(crate) fn class_stats(values: &[f64]) -> ClassStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let std = if min == max || values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    ClassStats { mean, std }
}

/// Q = (μ1 - μ0) / (σ1 + σ0), with ±inf when both spreads vanish.
pub fn q_factor(mu1: f64, mu0: f64, sigma1: f64, sigma0: f64) -> f64 {
    let opening = mu1 - mu0;
    let spread = sigma1 + sigma0;
    if spread > 0.0 {
        opening / spread
    } else if opening > 0.0 {
        f64::INFINITY
    } else if opening < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// μ/σ of both classes at the given offset into the traces.
fn stats_at(eye: &EyeDiagram, offset: usize) -> (ClassStats, ClassStats) {
    let (ones, zeros): (Vec<_>, Vec<_>) = eye
        .traces
        .iter()
        .map(|t| {
            (
                EyeDiagram::class_at(t, offset, eye.samples_per_ui),
                t.samples[offset],
            )
        })
        .partition(|(bit, _)| *bit);
    let values = |v: Vec<(bool, f64)>| v.into_iter().map(|(_, x)| x).collect::<Vec<_>>();
    (class_stats(&values(ones)), class_stats(&values(zeros)))
}

/// Evaluates the eye at every phase of the UI centered on the middle of the
/// trace window and keeps the phase with the largest Q.
pub fn eye_metrics(eye: &EyeDiagram) -> Result<EyeMetrics> {
    best_phase(eye).map(|(metrics, _)| metrics)
}

/// Metrics at the best phase together with its sample offset in the trace.
pub(crate) fn best_phase(eye: &EyeDiagram) -> Result<(EyeMetrics, usize)> {
    let spb = eye.samples_per_ui;
    if spb == 0 || eye.traces.iter().any(|t| t.samples.len() != 2 * spb) {
        return Err(Error::Mismatch("eye traces must be two UIs long".into()));
    }
    let count = |pick: fn(&EyeTrace) -> bool| {
        let ones = eye.traces.iter().filter(|t| pick(t)).count();
        (ones, eye.traces.len() - ones)
    };
    for (ones, zeros) in [count(|t| t.label), count(|t| t.next)] {
        if ones < 2 || zeros < 2 {
            return Err(Error::DegeneratePattern);
        }
    }

    let first = spb / 2;
    let mut best: Option<(usize, f64, ClassStats, ClassStats)> = None;
    for offset in first..first + spb {
        let (one, zero) = stats_at(eye, offset);
        let q = q_factor(one.mean, zero.mean, one.std, zero.std);
        if best.as_ref().is_none_or(|(_, bq, _, _)| q > *bq) {
            best = Some((offset, q, one, zero));
        }
    }
    let (offset, q, one, zero) = best.expect("non-empty phase grid");
    let ber_estimate = if q > 0.0 { ber_from_q(q)? } else { 0.5 };
    let metrics = EyeMetrics {
        mu1: one.mean,
        mu0: zero.mean,
        sigma1: one.std,
        sigma0: zero.std,
        q_factor: q,
        ber_estimate,
        eye_height: (one.mean - 3.0 * one.std) - (zero.mean + 3.0 * zero.std),
        sampling_phase: (offset % spb) as f64 / spb as f64,
    };
    Ok((metrics, offset))
}

/// Gaussian-tail BER for a given Q: 0.5·erfc(Q/√2).
pub fn ber_from_q(q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(invalid("q", format!("{q} must be non-negative")));
    }
    if q.is_infinite() {
        return Ok(0.0);
    }
    Ok(0.5 * erfc(q / std::f64::consts::SQRT_2))
}

/// Link margin in dB with powers in linear units: P_R[dBm] - S[dBm].
pub fn link_margin_db(p_r_dbm: f64, s_dbm: f64) -> f64 {
    p_r_dbm - s_dbm
}

/// 10·log₁₀(P_R / S) evaluated on the dBm numbers themselves.
///
/// This ratios two logarithmic quantities and has no physical unit; it
/// exists only to reproduce previously published margin figures.
pub fn paper_link_margin(p_r_dbm: f64, s_dbm: f64) -> Result<f64> {
    if s_dbm == 0.0 || !p_r_dbm.is_finite() || !s_dbm.is_finite() {
        return Err(Error::PaperMarginUndefined);
    }
    let ratio = p_r_dbm / s_dbm;
    if !(ratio > 0.0) {
        return Err(Error::PaperMarginUndefined);
    }
    Ok(10.0 * ratio.log10())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub received_power_dbm: f64,
    pub sensitivity_dbm: f64,
    pub link_margin_db: f64,
    /// Compatibility value in non-physical units; `None` where undefined.
    pub paper_link_margin: Option<f64>,
}

impl LinkBudget {
    pub fn new(received_power_dbm: f64, sensitivity_dbm: f64) -> Self {
        Self {
            received_power_dbm,
            sensitivity_dbm,
            link_margin_db: link_margin_db(received_power_dbm, sensitivity_dbm),
            paper_link_margin: paper_link_margin(received_power_dbm, sensitivity_dbm).ok(),
        }
    }
}

pub const MIN_RANGE_KM: f64 = 0.001;
pub const MAX_RANGE_KM: f64 = 50.0;
/// Bisection stops once the bracket is this narrow (1 m).
pub const RANGE_RESOLUTION_KM: f64 = 0.001;

/// Largest range in [1 m, 50 km] whose Q meets `q_target`, by bisection on
/// an evaluator `q_at(range_km)` assumed non-increasing in range.
pub fn max_range_for_q<F>(mut q_at: F, q_target: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(q_target > 0.0) {
        return Err(invalid("q_target", format!("{q_target} must be positive")));
    }
    let q_min = q_at(MIN_RANGE_KM)?;
    if !(q_min >= q_target) {
        return Err(Error::Unreachable {
            q_target,
            q_at_min: q_min,
        });
    }
    if q_at(MAX_RANGE_KM)? >= q_target {
        return Ok(MAX_RANGE_KM);
    }
    let (mut lo, mut hi) = (MIN_RANGE_KM, MAX_RANGE_KM);
    while hi - lo > RANGE_RESOLUTION_KM {
        let mid = 0.5 * (lo + hi);
        if q_at(mid)? >= q_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
