//! CSV tables for eye traces and sweeps, and readers for both.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! reading a table back yields the exact values written. Infinite Q is
//! written as `inf`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::EyeDiagram;
use crate::scenario::SweepRow;

/// One sample of one eye trace. Header: `trace_id,phase_ui,current_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeSample {
    pub trace_id: usize,
    /// Position within the two-UI window, in [0, 2).
    pub phase_ui: f64,
    pub current_a: f64,
}

pub fn eye_samples(eye: &EyeDiagram) -> impl Iterator<Item = EyeSample> + '_ {
    let spb = eye.samples_per_ui as f64;
    eye.traces.iter().enumerate().flat_map(move |(id, t)| {
        t.samples.iter().enumerate().map(move |(j, &v)| EyeSample {
            trace_id: id,
            phase_ui: j as f64 / spb,
            current_a: v,
        })
    })
}

pub fn write_eye_csv<W: Write>(eye: &EyeDiagram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for sample in eye_samples(eye) {
        w.serialize(sample)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_eye_csv<R: Read>(input: R) -> Result<Vec<EyeSample>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Serialize, Deserialize)]
struct SweepRecord {
    value: f64,
    q_factor: f64,
    ber_estimate: f64,
    link_margin_db: f64,
    total_db: f64,
}

/// Writes a sweep table with header
/// `value,q_factor,ber_estimate,link_margin_db,total_db`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(SweepRecord {
            value: row.value,
            q_factor: row.q_factor,
            ber_estimate: row.ber_estimate,
            link_margin_db: row.link_margin_db,
            total_db: row.total_db,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<SweepRecord>()
        .map(|rec| {
            let rec = rec?;
            Ok(SweepRow {
                value: rec.value,
                q_factor: rec.q_factor,
                ber_estimate: rec.ber_estimate,
                link_margin_db: rec.link_margin_db,
                total_db: rec.total_db,
            })
        })
        .collect()
}
