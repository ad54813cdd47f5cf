//! Deterministic file and stdout formatting. Floats are always printed
//! with 9 significant digits ("1.57299207e-1") and lines end with '\n',
//! so identical runs produce byte-identical outputs.

use std::fs;
use std::path::Path;

use moldiff_core::SweepRow;

use crate::error::Result;

/// 9 significant digits, exponent notation, '.' separator. Negative zero
/// normalizes to "0.00000000e0".
pub fn fmt_sig9(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Per-slot trace: `slot_index,t_start_s,count`. Counts are integers on
/// the Monte Carlo channel but fractional on the expected-count channel,
/// so the column is formatted as a float either way.
pub fn slots_csv(counts: &[f64], slot_period: f64) -> String {
    let mut out = String::from("slot_index,t_start_s,count\n");
    for (k, &count) in counts.iter().enumerate() {
        let t_start = k as f64 * slot_period;
        out.push_str(&format!("{k},{},{}\n", fmt_sig9(t_start), fmt_sig9(count)));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("guard_multiplier,bit_period_s,mean_ber,std_ber,n_seeds\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig9(row.guard_multiplier),
            fmt_sig9(row.bit_period_s),
            fmt_sig9(row.mean_ber),
            fmt_sig9(row.std_ber),
            row.n_seeds
        ));
    }
    out
}
