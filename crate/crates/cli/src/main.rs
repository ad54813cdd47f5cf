//! Command-line front end for the molecular link simulator.
//!
//! Exit codes: 0 success, 2 bad usage or parameters, 1 runtime failure.
//! Numeric stdout lines use nine significant digits so runs can be
//! diffed byte for byte.

mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use serde::Serialize;

use moldiff_core::{
    ber_sweep, data_rate, delay_spread, empirical_capture_curve, run_link_trace, time_to_capture,
    ModulationConfig, RateModel, WalkConfig, DEFAULT_PREAMBLE, DEFAULT_SPREAD_WINDOW,
};

use config::{ChannelArgs, CommonArgs, ModelArg, ModemArgs, OutputFormat, Resolved, WalkArgs};
use error::{CliError, Result};
use output::fmt_sig9;

#[derive(Parser)]
#[command(
    name = "moldiff",
    version,
    about = "Simulate a molecular communication link: diffusion channel, on-off keying, end-to-end text transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit text over the simulated channel and score the result.
    Send(SendArgs),
    /// Closed-form time for a target capture probability, with a Monte
    /// Carlo cross-check at that time.
    CaptureTime(CaptureTimeArgs),
    /// Sweep bit-error rate against the guard-time multiplier.
    Sweep(SweepArgs),
    /// Aggregate data rate of a bandwidth and per-resource capacity budget.
    Rate(RateArgs),
}

#[derive(clap::Args)]
struct SendArgs {
    /// Text to transmit.
    #[arg(long)]
    text: String,
    /// Channel realization: sampled walks or deterministic expected counts.
    #[arg(long, value_enum)]
    channel_model: Option<ModelArg>,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    modem: ModemArgs,
    #[command(flatten)]
    walk: WalkArgs,
}

#[derive(clap::Args)]
struct CaptureTimeArgs {
    /// Capture probability to invert for.
    #[arg(long, default_value_t = 0.9)]
    p_target: f64,
    /// Particles in the Monte Carlo cross-check.
    #[arg(long, default_value_t = 10_000)]
    n_particles: u64,
    /// Integration step in seconds (default: x^2/(100 D)).
    #[arg(long)]
    dt: Option<f64>,
    /// Parallel work partitions; never changes results.
    #[arg(long)]
    shards: Option<u32>,
    /// Refine boundary crossings inside steps (Brownian bridge).
    #[arg(long)]
    crossing_correction: bool,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    channel: ChannelArgs,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Text to transmit at every grid point.
    #[arg(long)]
    text: String,
    /// Comma-separated guard-time multipliers.
    #[arg(long, default_value = "0.25,0.5,1,2,4")]
    multipliers: String,
    /// Independent seeds averaged per multiplier.
    #[arg(long, default_value_t = 20)]
    n_seeds: u32,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    modem: ModemArgs,
    #[command(flatten)]
    walk: WalkArgs,
}

#[derive(clap::Args)]
struct RateArgs {
    /// Number of parallel channel resources.
    #[arg(allow_hyphen_values = true)]
    bandwidth: f64,
    /// Bits per resource use.
    #[arg(allow_hyphen_values = true)]
    capacity: f64,
    /// Channel quality index; recorded in the model but the aggregate
    /// rate does not depend on it.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    quality: f64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Send(args) => cmd_send(args),
        Command::CaptureTime(args) => cmd_capture_time(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Rate(args) => cmd_rate(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.code());
    }
}

fn spread_for(params: &moldiff_core::ChannelParams) -> Result<f64> {
    let (lo, hi) = DEFAULT_SPREAD_WINDOW;
    Ok(delay_spread(params, lo, hi)?)
}

fn modulation_for(cfg: &Resolved, spread: f64) -> ModulationConfig {
    ModulationConfig {
        bit_period: cfg.bit_period.unwrap_or(cfg.guard_mult * spread),
        molecules_per_pulse: cfg.molecules_per_pulse,
        preamble: DEFAULT_PREAMBLE.to_vec(),
        threshold_policy: cfg.threshold_policy,
    }
}

fn cmd_send(args: SendArgs) -> Result<()> {
    let cfg = config::resolve(
        &args.common,
        &args.channel,
        Some(&args.modem),
        Some(&args.walk),
        args.channel_model,
    )?;
    let spread = spread_for(&cfg.params)?;
    let mc = modulation_for(&cfg, spread);
    let frame_bits = (mc.preamble.len() + 8 * args.text.len()) as f64;
    let wc = WalkConfig {
        params: cfg.params,
        n_particles: cfg.molecules_per_pulse,
        dt: cfg.dt_or_default()?,
        t_max: cfg
            .t_max
            .unwrap_or(frame_bits * mc.bit_period + 5.0 * spread),
        seed: cfg.seed,
        shards: cfg.shards,
        crossing_correction: cfg.crossing_correction,
    };
    let (report, slots) = run_link_trace(&args.text, &cfg.params, &mc, &wc, cfg.channel_model)?;
    if report.framing_error {
        log::warn!("framing failed; no payload recovered");
    } else if report.sync_error {
        log::warn!("preamble sync failed; payload decoded positionally");
    }
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    output::write_file(&cfg.out_dir.join("report.json"), &json)?;
    output::write_file(
        &cfg.out_dir.join("slots.csv"),
        &output::slots_csv(&slots, mc.bit_period),
    )?;
    println!("recovered text: {}", report.recovered_text);
    println!("ber: {}", fmt_sig9(report.ber));
    Ok(())
}

#[derive(Serialize)]
struct CaptureTimeReport {
    p_target: f64,
    time_to_capture_s: f64,
    mc_fraction: f64,
    n_particles: u64,
    dt_s: f64,
    seed: u64,
}

fn cmd_capture_time(args: CaptureTimeArgs) -> Result<()> {
    let walk = WalkArgs {
        dt: args.dt,
        t_max: None,
        shards: args.shards,
        crossing_correction: args.crossing_correction,
    };
    let cfg = config::resolve(&args.common, &args.channel, None, Some(&walk), None)?;
    let time = time_to_capture(&cfg.params, args.p_target)?;
    let wc = WalkConfig {
        params: cfg.params,
        n_particles: args.n_particles,
        dt: cfg.dt_or_default()?,
        t_max: time,
        seed: cfg.seed,
        shards: cfg.shards,
        crossing_correction: cfg.crossing_correction,
    };
    let fraction = empirical_capture_curve(&wc, &[time])?[0];
    let report = CaptureTimeReport {
        p_target: args.p_target,
        time_to_capture_s: time,
        mc_fraction: fraction,
        n_particles: args.n_particles,
        dt_s: wc.dt,
        seed: cfg.seed,
    };
    match cfg.format {
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Runtime(e.to_string()))?
                + "\n";
            output::write_file(&cfg.out_dir.join("capture_time.json"), &json)?;
        }
        OutputFormat::Csv => {
            let csv = format!(
                "p_target,time_to_capture_s,mc_fraction,n_particles,dt_s,seed\n{},{},{},{},{},{}\n",
                fmt_sig9(report.p_target),
                fmt_sig9(report.time_to_capture_s),
                fmt_sig9(report.mc_fraction),
                report.n_particles,
                fmt_sig9(report.dt_s),
                report.seed,
            );
            output::write_file(&cfg.out_dir.join("capture_time.csv"), &csv)?;
        }
    }
    println!("p_target: {}", fmt_sig9(report.p_target));
    println!("time_to_capture_s: {}", fmt_sig9(report.time_to_capture_s));
    println!("monte_carlo_fraction: {}", fmt_sig9(report.mc_fraction));
    Ok(())
}

fn parse_multipliers(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|piece| {
            piece.trim().parse::<f64>().map_err(|_| {
                CliError::usage(format!(
                    "bad guard multiplier {:?} in {text:?}",
                    piece.trim()
                ))
            })
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = config::resolve(
        &args.common,
        &args.channel,
        Some(&args.modem),
        Some(&args.walk),
        None,
    )?;
    let multipliers = parse_multipliers(&args.multipliers)?;
    let spread = spread_for(&cfg.params)?;
    // The sweep derives each cell's bit period and horizon itself; the
    // base configs only carry channel, modem, and walk settings.
    let mc = modulation_for(&cfg, spread);
    let dt = cfg.dt_or_default()?;
    let wc = WalkConfig {
        params: cfg.params,
        n_particles: cfg.molecules_per_pulse,
        dt,
        t_max: dt * 2.0,
        seed: cfg.seed,
        shards: cfg.shards,
        crossing_correction: cfg.crossing_correction,
    };
    let rows = ber_sweep(
        &args.text,
        &cfg.params,
        &mc,
        &wc,
        &multipliers,
        args.n_seeds,
    )?;
    let csv = output::sweep_csv(&rows);
    output::write_file(&cfg.out_dir.join("sweep.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_rate(args: RateArgs) -> Result<()> {
    let model = RateModel::new(args.bandwidth, args.capacity, args.quality);
    let rate = data_rate(&model)?;
    println!("{} bits/s", fmt_sig9(rate));
    Ok(())
}
