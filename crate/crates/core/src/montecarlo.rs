//! Particle-tracking simulation of the diffusion channel.
//!
//! Every molecule performs an independent discretized Brownian walk from
//! its release point until it hits the absorbing receiver at distance `x`
//! or the horizon `t_max` runs out. The walk serves two roles: it is the
//! noise source for end-to-end link runs, and it is an independent check
//! on the closed-form capture curve in [`crate::physics`].
//!
//! Determinism contract: every particle draws from its own ChaCha8 stream
//! keyed by `(seed, global particle index)`. Results therefore depend only
//! on the configuration, never on how particles are partitioned over
//! shards or threads; `shards` is purely an execution knob. Merging is in
//! particle-index order, so equal configurations give bit-identical
//! records at any shard count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::{ChannelParams, EmissionSchedule};

/// Configuration of one particle-simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub params: ChannelParams,
    /// Number of independent particles (ignored by schedule-driven runs,
    /// where each emission event supplies its own count).
    pub n_particles: u64,
    /// Integration step in seconds.
    pub dt: f64,
    /// Simulation horizon in seconds.
    pub t_max: f64,
    /// Base RNG seed; the single knob that changes the noise.
    pub seed: u64,
    /// Number of work partitions. Changes scheduling only, never results.
    pub shards: u32,
    /// Refine boundary crossings inside a step: a Brownian-bridge test
    /// catches excursions the endpoint check misses, and crossing times
    /// are interpolated within the step instead of snapping to its end.
    /// Off by default; the default step sizes make it unnecessary.
    pub crossing_correction: bool,
}

impl WalkConfig {
    pub fn new(params: ChannelParams, n_particles: u64, dt: f64, t_max: f64, seed: u64) -> Self {
        Self {
            params,
            n_particles,
            dt,
            t_max,
            seed,
            shards: 1,
            crossing_correction: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_particles == 0 {
            return Err(Error::InvalidParameter("n_particles must be >= 1".into()));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "dt = {} s; need a finite value > 0",
                self.dt
            )));
        }
        if !self.t_max.is_finite() || self.t_max <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "t_max = {} s; need a finite value > 0",
                self.t_max
            )));
        }
        if self.dt >= self.t_max {
            return Err(Error::InvalidParameter(format!(
                "dt = {} s must be smaller than t_max = {} s",
                self.dt, self.t_max
            )));
        }
        if self.shards == 0 {
            return Err(Error::InvalidParameter("shards must be >= 1".into()));
        }
        Ok(())
    }

    /// Largest dt that still resolves the boundary approach:
    /// `x^2 / (100 D)`. Coarser steps jump the receiver undetected often
    /// enough to bias the absorbed fraction low.
    pub fn dt_fineness_bound(&self) -> Option<f64> {
        let x = self.params.distance;
        (x > 0.0).then(|| x * x / (100.0 * self.params.diffusivity))
    }
}

/// Outcome of a particle run: one absorption time per absorbed particle,
/// in particle order, plus the count of particles the horizon cut off.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionRecord {
    /// Times in `(0, t_max]`, one per absorbed particle.
    pub absorption_times: Vec<f64>,
    /// Particles not absorbed by `t_max`.
    pub n_escaped: u64,
}

impl AbsorptionRecord {
    pub fn n_absorbed(&self) -> u64 {
        self.absorption_times.len() as u64
    }

    pub fn n_total(&self) -> u64 {
        self.n_absorbed() + self.n_escaped
    }

    pub fn absorbed_fraction(&self) -> f64 {
        self.n_absorbed() as f64 / self.n_total() as f64
    }
}

/// Per-slot capture counts of a schedule-driven run, the simulated
/// counterpart of what a slotted chemical sensor reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCounts {
    /// Absorbed particles per consecutive slot `[k*P, (k+1)*P)`.
    pub counts: Vec<u64>,
    /// Particles not absorbed by `t_max` (including any released at or
    /// after the horizon).
    pub n_escaped: u64,
}

impl SlotCounts {
    pub fn total_absorbed(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// SplitMix64 finisher over `(seed, index)`; adjacent keys decorrelate, so
/// each particle gets an effectively independent ChaCha8 stream.
fn stream_key(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Steps that fit in the horizon; guards the floor against rounding up.
fn step_count(dt: f64, horizon: f64) -> u64 {
    let mut k = (horizon / dt).floor() as u64;
    while k > 0 && (k as f64) * dt > horizon {
        k -= 1;
    }
    k
}

/// Walks one particle for up to `k_max` steps. Returns the absorption time
/// relative to the particle's release, or `None` if it survives.
fn walk_one(
    params: &ChannelParams,
    dt: f64,
    k_max: u64,
    correction: bool,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    let x = params.distance;
    if x == 0.0 {
        // Receiver on top of the source: absorbed at the first boundary.
        return (k_max >= 1).then_some(dt);
    }
    let step_mean = params.drift_velocity * dt;
    let step_sigma = (2.0 * params.diffusivity * dt).sqrt();
    let mut position = 0.0f64;
    for k in 1..=k_max {
        let previous = position;
        let z: f64 = rng.sample(StandardNormal);
        position = previous + step_mean + step_sigma * z;
        if position >= x {
            let fraction = if correction {
                // previous < x <= position, so the ratio is in (0, 1].
                (x - previous) / (position - previous)
            } else {
                1.0
            };
            return Some(((k - 1) as f64 + fraction) * dt);
        }
        if correction {
            // Both endpoints are below the boundary, but the bridge between
            // them may still have touched it inside the step.
            let touch = (-(x - previous) * (x - position) / (params.diffusivity * dt)).exp();
            if rng.random::<f64>() < touch {
                return Some(((k - 1) as f64 + 0.5) * dt);
            }
        }
    }
    None
}

/// Runs `count` particles with global indices starting at `base_index`,
/// partitioned into `cfg.shards` chunks. Chunks may run in parallel; the
/// merge is in index order, so the result is independent of scheduling.
/// `cfg.n_particles` and `cfg.t_max` are not read; the horizon arrives
/// pre-resolved as `k_max`.
fn run_batch(cfg: &WalkConfig, k_max: u64, base_index: u64, count: u64) -> (Vec<f64>, u64) {
    let chunk = count.div_ceil(cfg.shards as u64).max(1);
    let ranges: Vec<(u64, u64)> = (0..cfg.shards as u64)
        .map(|s| ((s * chunk).min(count), ((s + 1) * chunk).min(count)))
        .collect();
    let partials: Vec<(Vec<f64>, u64)> = ranges
        .into_par_iter()
        .map(|(start, end)| {
            let mut absorbed = Vec::new();
            let mut escaped = 0u64;
            for j in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_key(cfg.seed, base_index + j));
                match walk_one(
                    &cfg.params,
                    cfg.dt,
                    k_max,
                    cfg.crossing_correction,
                    &mut rng,
                ) {
                    Some(t) => absorbed.push(t),
                    None => escaped += 1,
                }
            }
            (absorbed, escaped)
        })
        .collect();
    let mut absorbed = Vec::new();
    let mut escaped = 0u64;
    for (a, e) in partials {
        absorbed.extend(a);
        escaped += e;
    }
    (absorbed, escaped)
}

fn warn_if_coarse(cfg: &WalkConfig) {
    if let Some(bound) = cfg.dt_fineness_bound() {
        if cfg.dt > bound {
            log::warn!(
                "dt = {:e} s exceeds the fineness bound x^2/(100 D) = {:e} s; \
                 steps can jump the receiver undetected and bias capture low",
                cfg.dt,
                bound
            );
        }
    }
}

/// Releases `cfg.n_particles` particles at the origin at time 0 and walks
/// each until absorption or `t_max`.
///
/// Gaussian steps have mean `v*dt` and variance `2*D*dt`; a particle is
/// absorbed the first time its position reaches `x` (see
/// [`WalkConfig::crossing_correction`] for in-step refinement). A dt above
/// the fineness bound logs a warning but still runs.
pub fn simulate_walk(cfg: &WalkConfig) -> Result<AbsorptionRecord> {
    cfg.validate()?;
    warn_if_coarse(cfg);
    let k_max = step_count(cfg.dt, cfg.t_max);
    let (absorption_times, n_escaped) = run_batch(cfg, k_max, 0, cfg.n_particles);
    Ok(AbsorptionRecord {
        absorption_times,
        n_escaped,
    })
}

/// Empirical counterpart of the capture curve: for each sample time, the
/// fraction of particles absorbed by that time. Nondecreasing across the
/// (strictly increasing) sample times.
pub fn empirical_capture_curve(cfg: &WalkConfig, sample_times: &[f64]) -> Result<Vec<f64>> {
    let mut prev = f64::NEG_INFINITY;
    for &t in sample_times {
        if !t.is_finite() || t < 0.0 || t > cfg.t_max {
            return Err(Error::InvalidParameter(format!(
                "sample time {t} s lies outside [0, t_max = {} s]",
                cfg.t_max
            )));
        }
        if t <= prev {
            return Err(Error::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
        prev = t;
    }
    let record = simulate_walk(cfg)?;
    let mut sorted = record.absorption_times;
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = cfg.n_particles as f64;
    Ok(sample_times
        .iter()
        .map(|&t| sorted.partition_point(|&at| at <= t) as f64 / n)
        .collect())
}

/// Simulates the full schedule (each event releases its own
/// `molecule_count` particles at its emission time) and counts absorptions
/// per consecutive slot `[k*P, (k+1)*P)` out to `t_max`.
///
/// `cfg.n_particles` is not used here; conservation holds as
/// `sum(counts) + n_escaped = schedule.total_emitted()`.
pub fn slot_capture_counts(
    schedule: &EmissionSchedule,
    cfg: &WalkConfig,
    slot_period: f64,
) -> Result<SlotCounts> {
    cfg.validate()?;
    if !slot_period.is_finite() || slot_period <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "slot_period = {slot_period} s; need a finite value > 0"
        )));
    }
    warn_if_coarse(cfg);
    let n_slots = ((cfg.t_max / slot_period).ceil() as usize).max(1);
    let mut counts = vec![0u64; n_slots];
    let mut n_escaped = 0u64;
    // Global particle indices run over the whole schedule so that every
    // particle keeps its own stream regardless of event boundaries.
    let mut base_index = 0u64;
    for event in schedule.events() {
        let span = cfg.t_max - event.time;
        let k_max = if span > 0.0 {
            step_count(cfg.dt, span)
        } else {
            0
        };
        let (times, escaped) = run_batch(cfg, k_max, base_index, event.count);
        n_escaped += escaped;
        for local in times {
            let absolute = event.time + local;
            let slot = ((absolute / slot_period).floor() as usize).min(n_slots - 1);
            counts[slot] += 1;
        }
        base_index += event.count;
    }
    Ok(SlotCounts { counts, n_escaped })
}
