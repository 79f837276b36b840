//! Free-space optical link simulator.
//!
//! Models a 1550 nm intensity-modulated, direct-detection link through rain
//! or fog: PRBS data, NRZ shaping, Bessel filtering, a Mach-Zehnder
//! modulator, Beer-Lambert and geometric channel loss, and an APD receiver,
//! ending in eye-diagram Q-factor, BER and link-margin figures.
//!
//! Start with [`scenario::ScenarioConfig`] and [`scenario::run_link`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apd;
pub mod channel;
pub mod error;
pub mod export;
pub mod metrics;
pub mod montecarlo;
pub mod optical;
pub mod scenario;
pub mod serde_ext;
pub mod waveform;

pub use error::{Error, Result};
pub use scenario::{run_link, ScenarioConfig, SimReport};
