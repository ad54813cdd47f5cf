//! Checks the error-function implementation against a second, independent
//! evaluation: a cancellation-free power series for small arguments and a
//! continued fraction for the tail.

use std::f64::consts::FRAC_2_SQRT_PI;

use moldiff_core::erf::{erf, erfc};

/// All-positive expansion erf(z) = (2/sqrt(pi)) z exp(-z^2)
/// sum_n (2 z^2)^n / (2n+1)!!. Every term has the same sign, so the sum
/// carries no cancellation error. Practical for |z| up to ~3.
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for n in 1..400u32 {
        term *= 2.0 * z2 / (2 * n + 1) as f64;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    FRAC_2_SQRT_PI * z * (-z2).exp() * sum
}

/// Modified Lentz evaluation of the classical tail fraction
/// erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
/// convergent for z > 0 and fast above ~1.5.
fn erfc_continued_fraction(z: f64) -> f64 {
    const FRAC_1_SQRT_PI: f64 = 0.5641895835477563;
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0f64;
    for j in 1..1000u32 {
        let a = if j == 1 { 1.0 } else { (j - 1) as f64 / 2.0 };
        d = z + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = z + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI * (-z * z).exp() * f
}

fn assert_close(label: &str, z: f64, got: f64, want: f64, tol: f64) {
    let scale = want.abs().max(f64::MIN_POSITIVE);
    let rel = (got - want).abs() / scale;
    assert!(
        rel < tol,
        "{label}({z}): implementation {got:e} vs oracle {want:e} (rel {rel:e})"
    );
}

#[test]
fn erf_matches_the_series() {
    // Crosses every internal approximation band below 3.
    let grid = [
        1e-8, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.7, 0.8, 0.84, 0.85, 1.0, 1.2, 1.24, 1.26, 1.5, 2.0,
        2.5, 2.86, 3.0,
    ];
    for &z in &grid {
        assert_close("erf", z, erf(z), erf_series(z), 5e-14);
        assert_close("erf", -z, erf(-z), -erf_series(z), 5e-14);
    }
}

#[test]
fn erfc_matches_series_complement_below_the_tail() {
    // For z < 1.5 the complement 1 - erf loses at most ~1.5 digits
    // (erfc(1.5) = 0.034), well inside the tolerance.
    let grid = [0.01, 0.1, 0.3, 0.5, 0.7, 0.84, 0.85, 1.0, 1.2, 1.25, 1.4];
    for &z in &grid {
        assert_close("erfc", z, erfc(z), 1.0 - erf_series(z), 5e-13);
        assert_close("erfc", -z, erfc(-z), 1.0 + erf_series(z), 5e-13);
    }
}

#[test]
fn erfc_matches_the_continued_fraction_in_the_tail() {
    // The oracle's exp(-z^2) step costs ~z^2 ulp of relative error, so
    // the tolerance loosens with z; the largest point still has
    // erfc(26) ~ 1e-295 far above underflow.
    let grid = [
        1.5, 2.0, 2.5, 2.86, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 14.0, 20.0, 26.0,
    ];
    for &z in &grid {
        assert_close("erfc", z, erfc(z), erfc_continued_fraction(z), 1e-12);
    }
}

#[test]
fn oracles_agree_with_each_other_where_both_apply() {
    // The complement 1 - erf amplifies series rounding by 1/erfc(z),
    // about 4e3 at the top of this range; the tolerance covers that.
    for &z in &[1.5, 1.8, 2.0, 2.3, 2.6] {
        let series = 1.0 - erf_series(z);
        let fraction = erfc_continued_fraction(z);
        assert_close("oracle-cross", z, series, fraction, 3e-11);
    }
}
