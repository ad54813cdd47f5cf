//! End-to-end frame recovery over the sampled channel.
//!
//! The fixture rides the intracellular preset with a guard time ten
//! delay spreads wide. Single-pulse capture within one slot is about
//! 0.97 while accumulated inter-symbol leakage stays two orders of
//! magnitude below the detection threshold, so a clean decode is the
//! expected outcome by a wide margin, not a lucky seed.

use moldiff_core::{
    delay_spread, run_link_trace, units, ChannelModel, ModulationConfig, ThresholdPolicy,
    WalkConfig, DEFAULT_PREAMBLE, DEFAULT_SPREAD_WINDOW,
};

#[test]
fn hello_roundtrips_over_the_sampled_intracellular_channel() {
    let params = units::intracellular();
    let (lo, hi) = DEFAULT_SPREAD_WINDOW;
    let spread = delay_spread(&params, lo, hi).unwrap();
    let bit_period = 10.0 * spread;
    let mc = ModulationConfig {
        bit_period,
        molecules_per_pulse: 2_000,
        preamble: DEFAULT_PREAMBLE.to_vec(),
        threshold_policy: ThresholdPolicy::Fixed { fraction: 0.5 },
    };
    let frame_bits = (DEFAULT_PREAMBLE.len() + 8 * "HELLO".len()) as f64;
    let wc = WalkConfig {
        params,
        n_particles: 2_000,
        dt: 1.0,
        t_max: frame_bits * bit_period + 5.0 * spread,
        seed: 7,
        shards: 8,
        crossing_correction: false,
    };
    let (report, slots) =
        run_link_trace("HELLO", &params, &mc, &wc, ChannelModel::MonteCarlo).unwrap();

    assert_eq!(report.recovered_text, "HELLO");
    assert_eq!(report.bits_sent, 48);
    assert_eq!(report.bit_errors, 0);
    assert_eq!(report.ber, 0.0);
    assert_eq!(report.char_errors, 0);
    assert!(!report.sync_error);
    assert!(!report.framing_error);
    assert_eq!(report.seed, 7);

    // 48 bit slots plus the fractional settling tail.
    assert_eq!(slots.len(), 49);
    let released = 21.0 * 2_000.0;
    let landed: f64 = slots.iter().sum();
    assert!(landed <= released);
    assert!(landed >= 0.9 * released, "landed {landed} of {released}");
}
