//! End-to-end link runs and rate arithmetic.
//!
//! A run encodes text into a frame, maps it onto an emission schedule,
//! pushes the schedule through the channel (particle simulation or its
//! expected-count limit), detects and decodes, and scores the result:
//! bit and character errors, delay spread, throughput, and a capacity
//! estimate that treats the measured error rate as the crossover
//! probability of a binary symmetric channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modem::{
    decode_bits, demodulate, encode_text, modulate, pack_bits, ModulationConfig, ThresholdPolicy,
};
use crate::montecarlo::{slot_capture_counts, WalkConfig};
use crate::physics::{
    capture_probability, delay_spread, ChannelParams, EmissionSchedule, DEFAULT_SPREAD_WINDOW,
};

/// Which channel realization drives a link run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Particle-simulation counts: binomial noise plus discretization.
    MonteCarlo,
    /// Deterministic expected counts from the closed-form capture curve.
    ExpectedCounts,
}

/// Resource-times-efficiency rate description: a bandwidth-like resource
/// count B and a per-resource capacity C. The quality figure S is carried
/// along for reporting; no functional form C(S) is defined, so it never
/// enters the arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub bandwidth_resource: f64,
    pub capacity_per_resource: f64,
    pub channel_quality: f64,
}

impl RateModel {
    pub fn new(bandwidth_resource: f64, capacity_per_resource: f64, channel_quality: f64) -> Self {
        Self {
            bandwidth_resource,
            capacity_per_resource,
            channel_quality,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bandwidth_resource.is_finite() || self.bandwidth_resource < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bandwidth_resource = {}; need a finite value >= 0",
                self.bandwidth_resource
            )));
        }
        if !self.capacity_per_resource.is_finite() || self.capacity_per_resource < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "capacity_per_resource = {}; need a finite value >= 0",
                self.capacity_per_resource
            )));
        }
        if !self.channel_quality.is_finite() {
            return Err(Error::InvalidParameter(
                "channel_quality must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregate rate in bits/s: exactly `B * C`, bilinear in both factors.
pub fn data_rate(rm: &RateModel) -> Result<f64> {
    rm.validate()?;
    Ok(rm.bandwidth_resource * rm.capacity_per_resource)
}

/// Binary entropy in bits, with the 0 log 0 = 0 convention.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2()) - (1.0 - p) * (1.0 - p).log2()
}

/// Capacity of a binary symmetric channel with crossover `ber`, spread
/// over `bit_period` seconds per symbol: `(1 - H2(ber)) / bit_period`.
/// An error rate above 1/2 folds to `1 - ber` (relabeling the outputs).
pub fn capacity_estimate(ber: f64, bit_period: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::InvalidParameter(format!(
            "ber = {ber}; need a probability in [0, 1]"
        )));
    }
    if !bit_period.is_finite() || bit_period <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bit_period = {bit_period} s; need a finite value > 0"
        )));
    }
    let p = ber.min(1.0 - ber);
    Ok((1.0 - binary_entropy(p)) / bit_period)
}

/// Modulation settings echoed into a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationEcho {
    pub bit_period_s: f64,
    pub molecules_per_pulse: u64,
    /// Preamble bits as a compact string, e.g. "10101010".
    pub preamble: String,
    pub threshold_policy: ThresholdPolicy,
}

/// Walk settings echoed into a report. Execution knobs that cannot change
/// results (shards) and the per-pulse particle count (already fixed by
/// the modulation echo) are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkEcho {
    pub dt_s: f64,
    pub t_max_s: f64,
    pub crossing_correction: bool,
}

/// Full configuration echo carried by every report, sufficient to rerun
/// the experiment together with the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub channel: ChannelParams,
    pub channel_model: ChannelModel,
    pub modulation: ModulationEcho,
    pub walk: WalkEcho,
}

/// Scored outcome of one end-to-end transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    /// Frame length on the air: preamble plus 8 bits per payload byte.
    pub bits_sent: u64,
    pub bit_errors: u64,
    /// `bit_errors / bits_sent` (0 for an empty frame).
    pub ber: f64,
    /// Payload byte mismatches, counting length differences as errors.
    pub char_errors: u64,
    pub recovered_text: String,
    /// Detection produced a frame whose preamble did not match.
    pub sync_error: bool,
    /// Detection could not produce a byte-aligned frame at all.
    pub framing_error: bool,
    pub delay_spread_s: f64,
    /// Payload bits (preamble excluded) over the whole airtime `t_max`.
    pub throughput_bps: f64,
    pub capacity_estimate_bps: f64,
    pub seed: u64,
    pub config: ReportConfig,
}

/// One aggregated sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub guard_multiplier: f64,
    pub bit_period_s: f64,
    pub mean_ber: f64,
    /// Sample standard deviation over seeds; 0 for a single seed.
    pub std_ber: f64,
    pub n_seeds: u32,
}

/// Capture probability clamped to 0 for nonpositive elapsed time, so
/// events later than the window contribute nothing.
fn capture_by(params: &ChannelParams, elapsed: f64) -> Result<f64> {
    if elapsed <= 0.0 {
        Ok(0.0)
    } else {
        capture_probability(params, elapsed)
    }
}

/// Expected absorbed count per slot `[k*P, (k+1)*P)`: each emission
/// event contributes its count times the capture-curve increment across
/// the slot. The deterministic limit of the particle simulation.
pub fn expected_slot_counts(
    schedule: &EmissionSchedule,
    params: &ChannelParams,
    slot_period: f64,
    n_slots: usize,
) -> Result<Vec<f64>> {
    if !slot_period.is_finite() || slot_period <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "slot_period = {slot_period} s; need a finite value > 0"
        )));
    }
    let mut counts = vec![0.0; n_slots];
    for (k, slot) in counts.iter_mut().enumerate() {
        let start = k as f64 * slot_period;
        let end = (k + 1) as f64 * slot_period;
        for event in schedule.events() {
            if event.time >= end {
                break;
            }
            let increment =
                capture_by(params, end - event.time)? - capture_by(params, start - event.time)?;
            *slot += event.count as f64 * increment;
        }
    }
    Ok(counts)
}

fn preamble_string(preamble: &[u8]) -> String {
    preamble
        .iter()
        .map(|&b| if b == 1 { '1' } else { '0' })
        .collect()
}

/// Runs one transmission end to end and also returns the per-slot counts
/// the detector saw (integer-valued for the Monte Carlo channel).
///
/// `wc.params` is overridden by `params`, which is authoritative. The
/// horizon must cover the frame plus a tail of 5 delay spreads so late
/// arrivals have somewhere to land. Decode failures set the report's
/// sync/framing flags rather than erroring; the run itself only fails on
/// invalid configuration.
pub fn run_link_trace(
    text: &str,
    params: &ChannelParams,
    mc: &ModulationConfig,
    wc: &WalkConfig,
    model: ChannelModel,
) -> Result<(LinkReport, Vec<f64>)> {
    params.validate()?;
    mc.validate()?;
    let wc = WalkConfig {
        params: *params,
        ..*wc
    };
    wc.validate()?;

    let frame = encode_text(text.as_bytes(), mc)?;
    let (lo, hi) = DEFAULT_SPREAD_WINDOW;
    let spread = delay_spread(params, lo, hi)?;
    let required = frame.len() as f64 * mc.bit_period + 5.0 * spread;
    if wc.t_max < required {
        return Err(Error::InvalidParameter(format!(
            "t_max = {} s is shorter than frame airtime plus tail margin = {} s",
            wc.t_max, required
        )));
    }

    let schedule = modulate(&frame, mc)?;
    let slot_counts: Vec<f64> = match model {
        ChannelModel::MonteCarlo => slot_capture_counts(&schedule, &wc, mc.bit_period)?
            .counts
            .iter()
            .map(|&c| c as f64)
            .collect(),
        ChannelModel::ExpectedCounts => {
            let n_slots = ((wc.t_max / mc.bit_period).ceil() as usize).max(1);
            expected_slot_counts(&schedule, params, mc.bit_period, n_slots)?
        }
    };

    let single_pulse_capture = capture_probability(params, mc.bit_period)?;
    let (received_bits, recovered, sync_error, framing_error) =
        match demodulate(&slot_counts, mc, frame.len(), single_pulse_capture) {
            Ok(received) => match decode_bits(&received, mc) {
                Ok(bytes) => (received.bits, bytes, false, false),
                Err(Error::Sync(_)) => {
                    // Payload position is still known; salvage the bytes.
                    let bytes = pack_bits(received.payload_bits(mc.preamble.len()));
                    (received.bits, bytes, true, false)
                }
                Err(Error::Framing(_)) => (received.bits, Vec::new(), false, true),
                Err(e) => return Err(e),
            },
            Err(Error::Framing(_)) => (Vec::new(), Vec::new(), false, true),
            Err(e) => return Err(e),
        };

    let bits_sent = frame.len() as u64;
    let bit_errors = if received_bits.len() == frame.len() {
        frame
            .bits
            .iter()
            .zip(&received_bits)
            .filter(|(sent, got)| sent != got)
            .count() as u64
    } else {
        bits_sent
    };
    let ber = if bits_sent == 0 {
        0.0
    } else {
        bit_errors as f64 / bits_sent as f64
    };
    let sent = text.as_bytes();
    let char_errors = sent.iter().zip(&recovered).filter(|(a, b)| a != b).count() as u64
        + sent.len().abs_diff(recovered.len()) as u64;

    let report = LinkReport {
        bits_sent,
        bit_errors,
        ber,
        char_errors,
        recovered_text: String::from_utf8_lossy(&recovered).into_owned(),
        sync_error,
        framing_error,
        delay_spread_s: spread,
        throughput_bps: (8 * sent.len()) as f64 / wc.t_max,
        capacity_estimate_bps: capacity_estimate(ber, mc.bit_period)?,
        seed: wc.seed,
        config: ReportConfig {
            channel: *params,
            channel_model: model,
            modulation: ModulationEcho {
                bit_period_s: mc.bit_period,
                molecules_per_pulse: mc.molecules_per_pulse,
                preamble: preamble_string(&mc.preamble),
                threshold_policy: mc.threshold_policy,
            },
            walk: WalkEcho {
                dt_s: wc.dt,
                t_max_s: wc.t_max,
                crossing_correction: wc.crossing_correction,
            },
        },
    };
    Ok((report, slot_counts))
}

/// [`run_link_trace`] without the slot trace.
pub fn run_link(
    text: &str,
    params: &ChannelParams,
    mc: &ModulationConfig,
    wc: &WalkConfig,
    model: ChannelModel,
) -> Result<LinkReport> {
    run_link_trace(text, params, mc, wc, model).map(|(report, _)| report)
}

/// Guard-time tradeoff sweep: for each multiplier m, runs the link over
/// `n_seeds` seeds (base seed, base + 1, ...) with bit period m times
/// the delay spread, through the Monte Carlo channel, and aggregates
/// mean and sample standard deviation of the BER.
///
/// The horizon is sized per cell as frame airtime plus the 5-spread
/// tail. Rows come back sorted ascending by multiplier. Cells may run in
/// parallel; aggregation is keyed by cell identity, so the result does
/// not depend on scheduling.
pub fn ber_sweep(
    text: &str,
    params: &ChannelParams,
    mc: &ModulationConfig,
    wc: &WalkConfig,
    guard_multipliers: &[f64],
    n_seeds: u32,
) -> Result<Vec<SweepRow>> {
    if guard_multipliers.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one guard multiplier".into(),
        ));
    }
    for &m in guard_multipliers {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "guard multiplier = {m}; need a finite value > 0"
            )));
        }
    }
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("n_seeds must be >= 1".into()));
    }
    params.validate()?;
    mc.validate()?;

    let mut multipliers = guard_multipliers.to_vec();
    multipliers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (lo, hi) = DEFAULT_SPREAD_WINDOW;
    let spread = delay_spread(params, lo, hi)?;
    let frame_bits = (mc.preamble.len() + 8 * text.len()) as f64;

    let cells: Vec<(usize, u32)> = (0..multipliers.len())
        .flat_map(|i| (0..n_seeds).map(move |s| (i, s)))
        .collect();
    let cell_bers: Vec<f64> = cells
        .into_par_iter()
        .map(|(i, s)| {
            let period = multipliers[i] * spread;
            let cell_mc = ModulationConfig {
                bit_period: period,
                ..mc.clone()
            };
            let cell_wc = WalkConfig {
                t_max: frame_bits * period + 5.0 * spread,
                seed: wc.seed.wrapping_add(s as u64),
                ..*wc
            };
            run_link(text, params, &cell_mc, &cell_wc, ChannelModel::MonteCarlo).map(|r| r.ber)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = n_seeds as usize;
    Ok(multipliers
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let bers = &cell_bers[i * n..(i + 1) * n];
            let mean = bers.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SweepRow {
                guard_multiplier: m,
                bit_period_s: m * spread,
                mean_ber: mean,
                std_ber: std,
                n_seeds,
            }
        })
        .collect())
}
