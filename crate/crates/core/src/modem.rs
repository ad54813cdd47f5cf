//! On-off-keyed framing, modulation, and detection.
//!
//! Text becomes a bit frame (fixed preamble, then payload bytes MSB
//! first). Each 1 bit releases a pulse of molecules at the start of its
//! slot; each 0 bit releases nothing. The receiver turns per-slot capture
//! counts back into bits by thresholding, strips the preamble, and
//! repacks bytes.
//!
//! The modem is deliberately physics-free: demodulation takes the
//! expected single-pulse capture level as an argument instead of reaching
//! into the channel model, so it can be exercised on synthetic counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{EmissionEvent, EmissionSchedule};

/// Alternating sync pattern; 0xAA MSB first.
pub const DEFAULT_PREAMBLE: [u8; 8] = [1, 0, 1, 0, 1, 0, 1, 0];

/// How the receiver picks its decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Threshold at `fraction` of the expected single-pulse capture count.
    Fixed { fraction: f64 },
    /// Midpoint between the mean observed 1-slot and 0-slot counts of the
    /// preamble, which is known at the receiver.
    PreambleCalibrated,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Fixed { fraction: 0.5 }
    }
}

/// Modulation parameters shared by transmitter and receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationConfig {
    /// Slot duration in seconds; one bit per slot.
    pub bit_period: f64,
    /// Molecules released per 1 bit.
    pub molecules_per_pulse: u64,
    /// Sync pattern prepended to every frame. Bits, not bytes.
    pub preamble: Vec<u8>,
    pub threshold_policy: ThresholdPolicy,
}

impl ModulationConfig {
    pub fn new(bit_period: f64, molecules_per_pulse: u64) -> Self {
        Self {
            bit_period,
            molecules_per_pulse,
            preamble: DEFAULT_PREAMBLE.to_vec(),
            threshold_policy: ThresholdPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bit_period.is_finite() || self.bit_period <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bit_period = {} s; need a finite value > 0",
                self.bit_period
            )));
        }
        if self.molecules_per_pulse == 0 {
            return Err(Error::InvalidParameter(
                "molecules_per_pulse must be >= 1".into(),
            ));
        }
        if self.preamble.is_empty() {
            return Err(Error::InvalidParameter("preamble must be nonempty".into()));
        }
        if self.preamble.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter(
                "preamble entries must be bits (0 or 1)".into(),
            ));
        }
        if let ThresholdPolicy::Fixed { fraction } = self.threshold_policy {
            if !fraction.is_finite() || fraction <= 0.0 || fraction >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "threshold fraction = {fraction}; need a value in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// One framed transmission: preamble followed by payload bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    /// Preamble plus payload, one entry per slot, each 0 or 1.
    pub bits: Vec<u8>,
    pub payload_length_bytes: usize,
}

impl BitFrame {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Payload bits with the preamble stripped, given its length.
    pub fn payload_bits(&self, preamble_len: usize) -> &[u8] {
        &self.bits[preamble_len.min(self.bits.len())..]
    }
}

/// Frames payload bytes: preamble, then each byte MSB first. An empty
/// payload is rejected; a frame must carry something.
pub fn encode_text(payload: &[u8], mc: &ModulationConfig) -> Result<BitFrame> {
    mc.validate()?;
    if payload.is_empty() {
        return Err(Error::InvalidParameter("text must be nonempty".into()));
    }
    let mut bits = Vec::with_capacity(mc.preamble.len() + 8 * payload.len());
    bits.extend_from_slice(&mc.preamble);
    for &byte in payload {
        for shift in (0..8).rev() {
            bits.push((byte >> shift) & 1);
        }
    }
    Ok(BitFrame {
        bits,
        payload_length_bytes: payload.len(),
    })
}

/// Packs payload bits into bytes, MSB first. Length must be a multiple
/// of 8; callers enforce that before packing.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    debug_assert_eq!(bits.len() % 8, 0);
    bits.chunks_exact(8)
        .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect()
}

/// Unframes a received frame: checks byte alignment of the payload, then
/// the preamble, then repacks bytes.
///
/// Framing is checked first; a frame whose payload cannot be byte-aligned
/// is broken regardless of how the preamble looks.
pub fn decode_bits(frame: &BitFrame, mc: &ModulationConfig) -> Result<Vec<u8>> {
    let p = mc.preamble.len();
    if frame.bits.len() < p {
        return Err(Error::Framing(format!(
            "frame has {} bits, shorter than the {p}-bit preamble",
            frame.bits.len()
        )));
    }
    let payload_bits = frame.bits.len() - p;
    if !payload_bits.is_multiple_of(8) {
        return Err(Error::Framing(format!(
            "payload of {payload_bits} bits is not byte-aligned"
        )));
    }
    if frame.bits[..p] != mc.preamble[..] {
        return Err(Error::Sync("preamble mismatch".into()));
    }
    Ok(pack_bits(&frame.bits[p..]))
}

/// Maps a frame onto the channel: each 1 bit releases
/// `molecules_per_pulse` at the start of its slot `k * bit_period`.
pub fn modulate(frame: &BitFrame, mc: &ModulationConfig) -> Result<EmissionSchedule> {
    mc.validate()?;
    let events = frame
        .bits
        .iter()
        .enumerate()
        .filter(|&(_, &bit)| bit == 1)
        .map(|(k, _)| EmissionEvent {
            time: k as f64 * mc.bit_period,
            count: mc.molecules_per_pulse,
        })
        .collect();
    EmissionSchedule::new(events)
}

/// Thresholds per-slot capture counts back into a frame of
/// `expected_bits` bits.
///
/// `single_pulse_capture` is the expected fraction of one pulse captured
/// within a slot; the fixed policy thresholds at
/// `fraction * molecules_per_pulse * single_pulse_capture`. Counts at or
/// above the threshold read as 1. Slots beyond `expected_bits` are
/// ignored (late arrivals land there); too few slots is a framing error.
pub fn demodulate(
    slot_counts: &[f64],
    mc: &ModulationConfig,
    expected_bits: usize,
    single_pulse_capture: f64,
) -> Result<BitFrame> {
    mc.validate()?;
    if expected_bits < mc.preamble.len() || !(expected_bits - mc.preamble.len()).is_multiple_of(8) {
        return Err(Error::Framing(format!(
            "expected_bits = {expected_bits} cannot hold the {}-bit preamble plus whole bytes",
            mc.preamble.len()
        )));
    }
    if slot_counts.len() < expected_bits {
        return Err(Error::Framing(format!(
            "{} slots cannot carry {expected_bits} bits",
            slot_counts.len()
        )));
    }
    if !single_pulse_capture.is_finite() || single_pulse_capture <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "single_pulse_capture = {single_pulse_capture}; need a finite value > 0"
        )));
    }
    let threshold = match mc.threshold_policy {
        ThresholdPolicy::Fixed { fraction } => {
            fraction * mc.molecules_per_pulse as f64 * single_pulse_capture
        }
        ThresholdPolicy::PreambleCalibrated => {
            let p = mc.preamble.len();
            let mut one_sum = 0.0;
            let mut one_n = 0u32;
            let mut zero_sum = 0.0;
            let mut zero_n = 0u32;
            for (count, &bit) in slot_counts[..p].iter().zip(&mc.preamble) {
                if bit == 1 {
                    one_sum += count;
                    one_n += 1;
                } else {
                    zero_sum += count;
                    zero_n += 1;
                }
            }
            if one_n == 0 || zero_n == 0 {
                return Err(Error::InvalidParameter(
                    "preamble calibration needs both bit values in the preamble".into(),
                ));
            }
            (one_sum / one_n as f64 + zero_sum / zero_n as f64) / 2.0
        }
    };
    let bits = slot_counts[..expected_bits]
        .iter()
        .map(|&count| u8::from(count >= threshold))
        .collect();
    Ok(BitFrame {
        bits,
        payload_length_bytes: (expected_bits - mc.preamble.len()) / 8,
    })
}
