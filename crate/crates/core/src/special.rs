//! Gamma function and the Bessel-potential constant `γ(s)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments away from the non-positive integers.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection formula.
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// `γ(s) = Γ(|s−1|/2) / (√π Γ(s/2))` for `s > 0`, `s ≠ 1`.
///
/// `γ(s)/2` is the value of the Bessel kernel at the origin when `s > 1`,
/// and `(1 − s)γ(s) → 2/π` as `s → 1`.
pub fn gamma_fn(s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!("gamma_fn requires s > 0, got {s}")));
    }
    if s == 1.0 {
        return Err(Error::Domain(
            "gamma_fn has a pole at s = 1; use the (1 - s)·gamma(s) limit 2/pi".into(),
        ));
    }
    Ok(gamma((s - 1.0).abs() / 2.0) / (PI.sqrt() * gamma(s / 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_reference_values() {
        // Factorials and half-integers.
        let mut fact = 1.0;
        for k in 1..25 {
            assert!(rel(gamma(k as f64), fact) < 1e-13, "k = {k}");
            fact *= k as f64;
        }
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(1.5), PI.sqrt() / 2.0) < 1e-14);
        assert!(rel(gamma(0.1), 9.513_507_698_668_732) < 1e-13);
        assert!(rel(gamma(0.25), 3.625_609_908_221_908) < 1e-13);
        assert!(rel(gamma(2.5), 1.329_340_388_179_137) < 1e-13);
        assert!(rel(gamma(29.5), 1.634_812_519_827_426_6e30) < 1e-12);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn gamma_fn_special_values() {
        assert!((gamma_fn(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((gamma_fn(3.0).unwrap() - 2.0 / PI).abs() < 1e-12);
        let s = 1.0 - 1e-4;
        assert!(((1.0 - s) * gamma_fn(s).unwrap() - 2.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn gamma_fn_domain() {
        assert!(gamma_fn(1.0).is_err());
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.0).is_err());
        assert!(gamma_fn(f64::NAN).is_err());
    }
}
