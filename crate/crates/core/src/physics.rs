//! Closed-form mathematics of the one-dimensional diffusion channel.
//!
//! A point release of molecules at the origin spreads by Brownian motion
//! (diffusivity `D`, optional drift `v`) along a line toward a perfectly
//! absorbing receiver at distance `x`. Two closed forms drive everything:
//!
//! * the free-space concentration profile of a unit release,
//!   `(4*pi*D*t)^(-1/2) * exp(-(x - v*t)^2 / (4*D*t))`, and
//! * the first-passage capture probability of the driftless walk,
//!   `erfc(x / (2*sqrt(D*t)))`, which rises from 0 at `t = 0` toward 1.
//!
//! The erfc argument is positive: with the reflection principle, the
//! probability that a Brownian path from the origin has touched level `x`
//! by time `t` is `2*P[B_t >= x] = erfc(x / (2*sqrt(D*t)))`, a value in
//! `[0, 1]` (a negated argument would exceed 1 and cannot be a
//! probability). The particle simulator confirms this form empirically.
//!
//! Capture times, delay spread, and expected pulse-train responses are all
//! derived from the capture probability. Capture under drift has no closed
//! form here and is handled by the particle simulator instead.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::erf::erfc;
use crate::error::{Error, Result};

/// Capture-quantile window used for delay spread unless a caller picks
/// another: the time for the capture probability to climb from 10% to 90%.
pub const DEFAULT_SPREAD_WINDOW: (f64, f64) = (0.1, 0.9);

/// Physical description of one diffusion channel. All values are SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Diffusion coefficient in m^2/s. Finite and > 0.
    #[serde(rename = "diffusivity_m2_per_s")]
    pub diffusivity: f64,
    /// Transmitter-to-receiver distance in m. Finite and >= 0.
    #[serde(rename = "distance_m")]
    pub distance: f64,
    /// Drift velocity toward the receiver in m/s. Finite; 0 disables drift.
    #[serde(rename = "drift_m_per_s")]
    pub drift_velocity: f64,
}

impl ChannelParams {
    pub fn new(diffusivity: f64, distance: f64, drift_velocity: f64) -> Result<Self> {
        let params = Self {
            diffusivity,
            distance,
            drift_velocity,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.diffusivity.is_finite() || self.diffusivity <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "diffusivity = {} m^2/s; need a finite value > 0",
                self.diffusivity
            )));
        }
        if !self.distance.is_finite() || self.distance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "distance = {} m; need a finite value >= 0",
                self.distance
            )));
        }
        if !self.drift_velocity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "drift_velocity = {} m/s; need a finite value",
                self.drift_velocity
            )));
        }
        Ok(())
    }
}

/// One timed release of molecules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionEvent {
    /// Release instant in seconds, >= 0.
    pub time: f64,
    /// Molecules released at that instant, >= 1.
    pub count: u64,
}

/// The transmit waveform: an ordered train of emission events.
///
/// Construction enforces the invariants (times finite, >= 0, strictly
/// increasing; counts >= 1), so holders of a schedule never re-check them.
/// An empty schedule is legal and emits nothing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmissionSchedule {
    events: Vec<EmissionEvent>,
}

impl EmissionSchedule {
    pub fn new(events: Vec<EmissionEvent>) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        for event in &events {
            if !event.time.is_finite() || event.time < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "emission time = {} s; need a finite value >= 0",
                    event.time
                )));
            }
            if event.time <= prev {
                return Err(Error::InvalidParameter(format!(
                    "emission times must be strictly increasing ({} s after {} s)",
                    event.time, prev
                )));
            }
            if event.count == 0 {
                return Err(Error::InvalidParameter(format!(
                    "emission at {} s releases 0 molecules; need >= 1",
                    event.time
                )));
            }
            prev = event.time;
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[EmissionEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn total_emitted(&self) -> u64 {
        self.events.iter().map(|e| e.count).sum()
    }
}

fn require_finite_time(t: f64, least: f64, what: &str) -> Result<()> {
    if !t.is_finite() || t < least {
        return Err(Error::InvalidParameter(format!(
            "t = {t} s; {what} needs finite t >= {least}"
        )));
    }
    Ok(())
}

fn require_no_drift(params: &ChannelParams) -> Result<()> {
    if params.drift_velocity != 0.0 {
        return Err(Error::InvalidParameter(
            "drift_velocity must be 0: capture under drift has no closed form here \
             and goes through the particle simulator"
                .into(),
        ));
    }
    Ok(())
}

/// Concentration profile at the receiver position, `t` seconds after a unit
/// release at the origin: `(4*pi*D*t)^(-1/2) * exp(-(x - v*t)^2 / (4*D*t))`,
/// in 1/m. Defined for `t > 0`; drift shifts the Gaussian mean to `v*t`.
pub fn concentration_pdf(params: &ChannelParams, t: f64) -> Result<f64> {
    params.validate()?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "t = {t} s; the pulse response is defined for finite t > 0"
        )));
    }
    let deviation = params.distance - params.drift_velocity * t;
    let four_dt = 4.0 * params.diffusivity * t;
    Ok((-deviation * deviation / four_dt).exp() / (PI * four_dt).sqrt())
}

/// Probability that a molecule released at the origin at time 0 has been
/// absorbed by the receiver at distance `x` within `t` seconds:
/// `erfc(x / (2*sqrt(D*t)))`.
///
/// Edge values: 1 when `x = 0` (the receiver sits on the source), 0 when
/// `t = 0` and `x > 0`. Monotone nondecreasing in `t` and `D`, nonincreasing
/// in `x`, and a function of the combination `x/sqrt(D*t)` only.
pub fn capture_probability(params: &ChannelParams, t: f64) -> Result<f64> {
    params.validate()?;
    require_no_drift(params)?;
    require_finite_time(t, 0.0, "capture_probability")?;
    if params.distance == 0.0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(erfc(
        params.distance / (2.0 * (params.diffusivity * t).sqrt()),
    ))
}

/// Inverts the capture curve: the time at which the capture probability
/// first reaches `p_target`.
///
/// Root-finding is bracketed bisection on the monotone capture curve,
/// run to a relative interval width of 1e-9. The diffusion time `x^2/D`
/// sets the natural scale: capture reaches about 16% at `t = x^2/(4D)`,
/// so a few factor-of-4 expansions bracket any target in (0, 1).
pub fn time_to_capture(params: &ChannelParams, p_target: f64) -> Result<f64> {
    params.validate()?;
    require_no_drift(params)?;
    if !p_target.is_finite() || p_target <= 0.0 || p_target >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "p_target = {p_target}; need 0 < p_target < 1"
        )));
    }
    if params.distance == 0.0 {
        return Err(Error::DegenerateInput(
            "distance = 0: capture is immediate, there is no finite capture time".into(),
        ));
    }
    let scale = params.distance * params.distance / params.diffusivity;
    let mut lo = 1e-6 * scale;
    let mut hi = scale;
    while capture_probability(params, lo)? >= p_target {
        lo *= 0.25;
    }
    while capture_probability(params, hi)? < p_target {
        hi *= 4.0;
    }
    // Invariant: capture(lo) < p_target <= capture(hi).
    let mut mid = 0.5 * (lo + hi);
    while hi - lo > 1e-9 * mid {
        if capture_probability(params, mid)? < p_target {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    Ok(mid)
}

/// Width of the capture window between the `lo` and `hi` quantiles of the
/// capture curve: `time_to_capture(hi) - time_to_capture(lo)`.
///
/// This is the channel's delay spread when called with
/// [`DEFAULT_SPREAD_WINDOW`]. Scales exactly as `x^2 / D`.
pub fn delay_spread(params: &ChannelParams, lo: f64, hi: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "capture window ({lo}, {hi}); need 0 < lo < hi < 1"
        )));
    }
    Ok(time_to_capture(params, hi)? - time_to_capture(params, lo)?)
}

/// Expected number of molecules from the whole schedule absorbed by
/// absolute time `t`: each event contributes
/// `count * capture_probability(t - event_time)`, by linearity of the
/// channel. Nondecreasing in `t`; an empty schedule gives 0 everywhere.
pub fn superpose_capture(
    schedule: &EmissionSchedule,
    params: &ChannelParams,
    t: f64,
) -> Result<f64> {
    params.validate()?;
    require_no_drift(params)?;
    require_finite_time(t, 0.0, "superpose_capture")?;
    let mut expected = 0.0;
    for event in schedule.events() {
        if event.time > t {
            break;
        }
        expected += event.count as f64 * capture_probability(params, t - event.time)?;
    }
    Ok(expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_channel() -> ChannelParams {
        // x = 2 m, D = 1 m^2/s: capture at t = 1 s is erfc(1).
        ChannelParams::new(1.0, 2.0, 0.0).unwrap()
    }

    const ERFC_1: f64 = 0.15729920705028513;

    fn assert_rel(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol * want.abs(),
            "got {got:e}, want {want:e}"
        );
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(ChannelParams::new(-1.0, 1.0, 0.0).is_err());
        assert!(ChannelParams::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(ChannelParams::new(1.0, -0.5, 0.0).is_err());
        assert!(ChannelParams::new(1.0, f64::INFINITY, 0.0).is_err());
        assert!(ChannelParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(ChannelParams::new(1.0, 0.0, -0.25).is_ok());
    }

    #[test]
    fn schedule_validation() {
        let ok = EmissionSchedule::new(vec![
            EmissionEvent {
                time: 0.0,
                count: 5,
            },
            EmissionEvent {
                time: 1.5,
                count: 1,
            },
        ])
        .unwrap();
        assert_eq!(ok.total_emitted(), 6);
        assert!(EmissionSchedule::new(vec![]).unwrap().is_empty());

        let out_of_order = vec![
            EmissionEvent {
                time: 1.0,
                count: 1,
            },
            EmissionEvent {
                time: 1.0,
                count: 1,
            },
        ];
        assert!(EmissionSchedule::new(out_of_order).is_err());
        assert!(EmissionSchedule::new(vec![EmissionEvent {
            time: -1.0,
            count: 1
        }])
        .is_err());
        assert!(EmissionSchedule::new(vec![EmissionEvent {
            time: 0.0,
            count: 0
        }])
        .is_err());
    }

    #[test]
    fn pdf_prefactor_cases() {
        // D = 1/(4*pi) makes the prefactor exactly 1 at t = 1, x = 0.
        let p = ChannelParams::new(1.0 / (4.0 * PI), 0.0, 0.0).unwrap();
        assert_rel(concentration_pdf(&p, 1.0).unwrap(), 1.0, 1e-14);

        let p = ChannelParams::new(1.0, 0.0, 0.0).unwrap();
        assert_rel(
            concentration_pdf(&p, 1.0).unwrap(),
            0.28209479177387814, // (4*pi)^(-1/2)
            1e-14,
        );

        assert_rel(
            concentration_pdf(&unit_channel(), 1.0).unwrap(),
            0.10377687435514868, // (4*pi)^(-1/2) * exp(-1)
            1e-14,
        );
    }

    #[test]
    fn pdf_rejects_bad_time() {
        let p = unit_channel();
        assert!(concentration_pdf(&p, 0.0).is_err());
        assert!(concentration_pdf(&p, -1.0).is_err());
        assert!(concentration_pdf(&p, f64::NAN).is_err());
        assert!(concentration_pdf(&p, f64::INFINITY).is_err());
    }

    #[test]
    fn pdf_symmetric_about_drifted_mean() {
        // v*t = 6 m; points at 6 +/- delta must match to rounding.
        for delta in [0.1, 1.0, 2.5] {
            let above = ChannelParams::new(0.7, 6.0 + delta, 2.0).unwrap();
            let below = ChannelParams::new(0.7, 6.0 - delta, 2.0).unwrap();
            let fa = concentration_pdf(&above, 3.0).unwrap();
            let fb = concentration_pdf(&below, 3.0).unwrap();
            assert_rel(fa, fb, 1e-15);
        }
    }

    #[test]
    fn capture_probability_reference_points() {
        let p = unit_channel();
        assert_rel(capture_probability(&p, 1.0).unwrap(), ERFC_1, 1e-14);
        assert_eq!(capture_probability(&p, 0.0).unwrap(), 0.0);

        let at_source = ChannelParams::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(capture_probability(&at_source, 5.0).unwrap(), 1.0);
        assert_eq!(capture_probability(&at_source, 0.0).unwrap(), 1.0);

        // Long-time limit: erfc(1e-6) and erfc(~3e-7) versus 1.
        assert!((capture_probability(&p, 1e12).unwrap() - 1.0).abs() < 1.5e-6);
        assert!((capture_probability(&p, 1e13).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn capture_probability_rejects_bad_input() {
        let p = unit_channel();
        assert!(capture_probability(&p, -1.0).is_err());
        assert!(capture_probability(&p, f64::NAN).is_err());
        let drifting = ChannelParams::new(1.0, 2.0, 0.5).unwrap();
        assert!(capture_probability(&drifting, 1.0).is_err());
    }

    #[test]
    fn capture_self_similarity_is_exact_for_power_of_two_scaling() {
        // (x, D) -> (k*x, k^2*D) with k a power of two changes only f64
        // exponents, so the capture value must be bit-identical.
        let base = unit_channel();
        for exp in [-12i32, -3, 1, 7, 12] {
            let k = (2.0f64).powi(exp);
            let scaled =
                ChannelParams::new(base.diffusivity * k * k, base.distance * k, 0.0).unwrap();
            for t in [0.25, 1.0, 9.0] {
                assert_eq!(
                    capture_probability(&base, t).unwrap(),
                    capture_probability(&scaled, t).unwrap(),
                );
            }
        }
    }

    #[test]
    fn time_to_capture_inverts_reference_point() {
        let p = unit_channel();
        assert_rel(time_to_capture(&p, ERFC_1).unwrap(), 1.0, 1e-9);
    }

    #[test]
    fn time_to_capture_rejects_bad_targets() {
        let p = unit_channel();
        assert!(time_to_capture(&p, 0.0).is_err());
        assert!(time_to_capture(&p, 1.0).is_err());
        assert!(time_to_capture(&p, -0.1).is_err());
        assert!(time_to_capture(&p, f64::NAN).is_err());
        let at_source = ChannelParams::new(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            time_to_capture(&at_source, 0.5),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn time_to_capture_handles_extreme_targets() {
        let p = unit_channel();
        for target in [1e-12, 0.001, 0.999, 1.0 - 1e-12] {
            let t = time_to_capture(&p, target).unwrap();
            assert!(t.is_finite() && t > 0.0);
            let roundtrip = capture_probability(&p, t).unwrap();
            assert!(
                (roundtrip - target).abs() <= 1e-6,
                "p = {target}: roundtrip {roundtrip}"
            );
        }
    }

    #[test]
    fn delay_spread_window_validation_and_sign() {
        let p = unit_channel();
        assert!(delay_spread(&p, 0.9, 0.1).is_err());
        assert!(delay_spread(&p, 0.0, 0.5).is_err());
        assert!(delay_spread(&p, 0.5, 1.0).is_err());
        let (lo, hi) = DEFAULT_SPREAD_WINDOW;
        assert!(delay_spread(&p, lo, hi).unwrap() > 0.0);
        // The window (0.1, 0.5) is the difference of the two quantile times.
        let direct = time_to_capture(&p, 0.5).unwrap() - time_to_capture(&p, 0.1).unwrap();
        assert_eq!(delay_spread(&p, 0.1, 0.5).unwrap(), direct);
    }

    #[test]
    fn delay_spread_scaling_law_is_exact() {
        let p = unit_channel();
        let base = delay_spread(&p, 0.1, 0.9).unwrap();

        // Doubling x quadruples the spread; doubling D halves it. Both
        // scalings shift f64 exponents only, so equality is exact.
        let double_x = ChannelParams::new(1.0, 4.0, 0.0).unwrap();
        assert_eq!(delay_spread(&double_x, 0.1, 0.9).unwrap(), 4.0 * base);

        let double_d = ChannelParams::new(2.0, 2.0, 0.0).unwrap();
        assert_eq!(delay_spread(&double_d, 0.1, 0.9).unwrap(), 0.5 * base);
    }

    #[test]
    fn superposition_reference_points() {
        let p = unit_channel();
        assert_eq!(
            superpose_capture(&EmissionSchedule::default(), &p, 123.0).unwrap(),
            0.0
        );

        let single = EmissionSchedule::new(vec![EmissionEvent {
            time: 0.0,
            count: 1000,
        }])
        .unwrap();
        assert_rel(
            superpose_capture(&single, &p, 1.0).unwrap(),
            157.29920705028513,
            1e-14,
        );

        // Events later than t contribute nothing.
        let pair = EmissionSchedule::new(vec![
            EmissionEvent {
                time: 0.0,
                count: 1000,
            },
            EmissionEvent {
                time: 5.0,
                count: 999,
            },
        ])
        .unwrap();
        assert_eq!(
            superpose_capture(&pair, &p, 1.0).unwrap(),
            superpose_capture(&single, &p, 1.0).unwrap()
        );
    }

    #[test]
    fn superposition_is_additive_and_homogeneous() {
        let p = unit_channel();
        let first = EmissionSchedule::new(vec![EmissionEvent {
            time: 0.0,
            count: 300,
        }])
        .unwrap();
        let second = EmissionSchedule::new(vec![EmissionEvent {
            time: 2.0,
            count: 70,
        }])
        .unwrap();
        let both = EmissionSchedule::new(vec![
            EmissionEvent {
                time: 0.0,
                count: 300,
            },
            EmissionEvent {
                time: 2.0,
                count: 70,
            },
        ])
        .unwrap();
        for t in [0.0, 1.0, 2.0, 3.5, 50.0] {
            let sum = superpose_capture(&first, &p, t).unwrap()
                + superpose_capture(&second, &p, t).unwrap();
            assert_eq!(superpose_capture(&both, &p, t).unwrap(), sum);

            let tripled = EmissionSchedule::new(vec![
                EmissionEvent {
                    time: 0.0,
                    count: 900,
                },
                EmissionEvent {
                    time: 2.0,
                    count: 210,
                },
            ])
            .unwrap();
            assert_rel(
                superpose_capture(&tripled, &p, t.max(0.5)).unwrap(),
                3.0 * superpose_capture(&both, &p, t.max(0.5)).unwrap(),
                1e-15,
            );
        }
    }

    proptest! {
        #[test]
        fn capture_stays_in_unit_interval(
            d in 1e-12..1e3f64,
            x in 0.0..1e3f64,
            t in 0.0..1e9f64,
        ) {
            let p = ChannelParams::new(d, x, 0.0).unwrap();
            let c = capture_probability(&p, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn capture_is_monotone_in_time(
            d in 1e-9..1e3f64,
            x in 1e-6..1e3f64,
            t1 in 1e-6..1e6f64,
            scale in 1.0..1e3f64,
        ) {
            let p = ChannelParams::new(d, x, 0.0).unwrap();
            let early = capture_probability(&p, t1).unwrap();
            let late = capture_probability(&p, t1 * scale).unwrap();
            prop_assert!(late >= early);
        }

        #[test]
        fn capture_self_similarity_holds_for_arbitrary_scale(
            k in 1e-3..1e3f64,
            t in 1e-3..1e3f64,
        ) {
            let base = ChannelParams::new(1.0, 2.0, 0.0).unwrap();
            let scaled = ChannelParams::new(k * k, 2.0 * k, 0.0).unwrap();
            let a = capture_probability(&base, t).unwrap();
            let b = capture_probability(&scaled, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn inversion_identity(
            p_target in 0.01..0.99f64,
            d in 1e-10..10.0f64,
            x in 1e-4..10.0f64,
        ) {
            let p = ChannelParams::new(d, x, 0.0).unwrap();
            let t = time_to_capture(&p, p_target).unwrap();
            let roundtrip = capture_probability(&p, t).unwrap();
            prop_assert!((roundtrip - p_target).abs() <= 1e-6);
        }

        #[test]
        fn superposition_nondecreasing_in_time(
            t1 in 0.0..100.0f64,
            dt in 0.0..100.0f64,
        ) {
            let p = unit_channel();
            let schedule = EmissionSchedule::new(vec![
                EmissionEvent { time: 0.0, count: 10 },
                EmissionEvent { time: 1.0, count: 20 },
                EmissionEvent { time: 30.0, count: 5 },
            ]).unwrap();
            let a = superpose_capture(&schedule, &p, t1).unwrap();
            let b = superpose_capture(&schedule, &p, t1 + dt).unwrap();
            prop_assert!(b >= a);
        }
    }
}
