//! Simulation library for a macro-scale molecular communication link:
//! text goes in, chemical pulses diffuse to an absorbing receiver, and
//! text (plus error statistics) comes out.
//!
//! The crate is layered bottom-up:
//!
//! - [`erf`]: error-function evaluation the physics rests on.
//! - [`physics`]: closed-form pulse concentration, capture probability,
//!   capture-time inversion, delay spread, and pulse superposition.
//! - [`montecarlo`]: particle-tracking random walks as the stochastic
//!   counterpart (and independent check) of the closed forms.
//! - [`modem`]: on-off-keyed framing, modulation, and detection.
//! - [`link`]: end-to-end runs wiring the layers together, plus rate
//!   and capacity arithmetic.
//! - [`units`]: unit conversion helpers and named channel presets.

pub mod erf;
pub mod error;
pub mod link;
pub mod modem;
pub mod montecarlo;
pub mod physics;
pub mod units;

pub use error::{Error, Result};
pub use link::{
    ber_sweep, binary_entropy, capacity_estimate, data_rate, expected_slot_counts, run_link,
    run_link_trace, ChannelModel, LinkReport, ModulationEcho, RateModel, ReportConfig, SweepRow,
    WalkEcho,
};
pub use modem::{
    decode_bits, demodulate, encode_text, modulate, pack_bits, BitFrame, ModulationConfig,
    ThresholdPolicy, DEFAULT_PREAMBLE,
};
pub use montecarlo::{
    empirical_capture_curve, simulate_walk, slot_capture_counts, AbsorptionRecord, SlotCounts,
    WalkConfig,
};
pub use physics::{
    capture_probability, concentration_pdf, delay_spread, superpose_capture, time_to_capture,
    ChannelParams, EmissionEvent, EmissionSchedule, DEFAULT_SPREAD_WINDOW,
};
