//! SI conversion factors and the stock channel presets.
//!
//! Everything inside the crate computes in metres and seconds; conversion
//! happens once, at configuration ingest.

use crate::physics::ChannelParams;

/// Metres per micrometre.
pub const M_PER_UM: f64 = 1e-6;
/// Metres per millimetre.
pub const M_PER_MM: f64 = 1e-3;
/// Metres per centimetre.
pub const M_PER_CM: f64 = 1e-2;

/// m^2/s per um^2/s.
pub const M2_PER_UM2: f64 = 1e-12;
/// m^2/s per mm^2/s.
pub const M2_PER_MM2: f64 = 1e-6;
/// m^2/s per cm^2/s.
pub const M2_PER_CM2: f64 = 1e-4;

/// Preset names accepted by [`preset`], in documentation order.
pub const PRESET_NAMES: &[&str] = &["intracellular", "interorganism"];

/// Midpoint of the intracellular regime: D = 100 um^2/s over x = 100 um,
/// typical of small-molecule diffusion inside a cell.
pub fn intracellular() -> ChannelParams {
    // SI literals, not unit-constant products: 100 * 1e-6 lands one ulp
    // off the exact decimal, and presets anchor golden outputs.
    ChannelParams {
        diffusivity: 1e-10,
        distance: 1e-4,
        drift_velocity: 0.0,
    }
}

/// Midpoint of the between-organisms regime: D = 0.5 cm^2/s over x = 2 m,
/// typical of a volatile chemical crossing a room.
pub fn interorganism() -> ChannelParams {
    ChannelParams {
        diffusivity: 0.5e-4,
        distance: 2.0,
        drift_velocity: 0.0,
    }
}

/// Looks up a preset by name. `None` for unknown names; the caller owns
/// the error message (and should list [`PRESET_NAMES`] in it).
pub fn preset(name: &str) -> Option<ChannelParams> {
    match name {
        "intracellular" => Some(intracellular()),
        "interorganism" => Some(interorganism()),
        _ => None,
    }
}
