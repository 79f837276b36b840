//! Direct bit-error counting over many noise realizations of one scenario.
//!
//! The transmitted record is fixed; each realization draws fresh receiver
//! noise. A few pilot realizations pick the sampling phase, then every
//! realization is sampled there and decided against the threshold that
//! balances both tails, μ_th = (σ0·μ1 + σ1·μ0) / (σ0 + σ1). At that
//! threshold a Gaussian eye errs with probability 0.5·erfc(Q/√2).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apd::NoiseConfig;
use crate::error::{invalid, Result};
use crate::metrics::{ber_from_q, best_phase, class_stats, eye_fold, q_factor, EyeDiagram};
use crate::scenario::{derive_seed, ScenarioConfig, Transmission};

const PILOT_REALIZATIONS: u64 = 16;
const PILOT_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub bits: usize,
    pub errors: usize,
    pub counted_ber: f64,
    /// Q measured from all decision samples.
    pub measured_q: f64,
    pub predicted_ber: f64,
    pub threshold: f64,
    pub sampling_phase: f64,
    pub realizations: usize,
}

/// Counts decision errors over at least `min_bits` decisions.
///
/// Realization `r` uses noise seed `derive_seed(config.noise.rng_seed, r)`,
/// so the result depends only on the config.
pub fn count_bit_errors(config: &ScenarioConfig, min_bits: usize) -> Result<MonteCarloResult> {
    if min_bits == 0 {
        return Err(invalid("min_bits", "must be at least 1"));
    }
    let tx = Transmission::build(config)?;
    let spb = config.samples_per_bit;
    let base_seed = config.noise.rng_seed;
    let noise = |stream: u64| NoiseConfig::seeded(derive_seed(base_seed, stream));

    // Pilot: pool the traces of a few realizations to locate the eye center.
    let mut pilot = EyeDiagram {
        traces: Vec::new(),
        samples_per_ui: spb,
        unit: crate::waveform::Unit::Ampere,
    };
    for r in 0..PILOT_REALIZATIONS {
        let aligned = tx.receive(config, &noise(PILOT_STREAM + r))?;
        pilot
            .traces
            .extend(eye_fold(&aligned, spb, &tx.bits)?.traces);
    }
    let (pilot_metrics, offset) = best_phase(&pilot)?;

    let per_record = tx.bits.len() - 1;
    let realizations = min_bits.div_ceil(per_record);
    let decisions: Vec<Vec<(bool, f64)>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let aligned = tx.receive(config, &noise(r))?;
            let eye = eye_fold(&aligned, spb, &tx.bits)?;
            Ok(eye
                .traces
                .iter()
                .map(|t| (EyeDiagram::class_at(t, offset, spb), t.samples[offset]))
                .collect())
        })
        .collect::<Result<_>>()?;

    let (ones, zeros): (Vec<f64>, Vec<f64>) = {
        let mut ones = Vec::new();
        let mut zeros = Vec::new();
        for (bit, v) in decisions.into_iter().flatten() {
            if bit {
                ones.push(v);
            } else {
                zeros.push(v);
            }
        }
        (ones, zeros)
    };
    let one = class_stats(&ones);
    let zero = class_stats(&zeros);
    let measured_q = q_factor(one.mean, zero.mean, one.std, zero.std);
    let spread = one.std + zero.std;
    let threshold = if spread > 0.0 {
        (zero.std * one.mean + one.std * zero.mean) / spread
    } else {
        0.5 * (one.mean + zero.mean)
    };
    let errors = ones.iter().filter(|&&v| v < threshold).count()
        + zeros.iter().filter(|&&v| v >= threshold).count();
    let bits = ones.len() + zeros.len();
    Ok(MonteCarloResult {
        bits,
        errors,
        counted_ber: errors as f64 / bits as f64,
        measured_q,
        predicted_ber: if measured_q > 0.0 {
            ber_from_q(measured_q)?
        } else {
            0.5
        },
        threshold,
        sampling_phase: pilot_metrics.sampling_phase,
        realizations,
    })
}
