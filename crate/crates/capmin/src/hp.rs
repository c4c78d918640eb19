//! Thin helpers around `rug` multiprecision floats and complexes.

use num_complex::Complex64;
use rug::{Complex, Float};

/// Working precision in bits for a requested number of decimal digits,
/// with guard bits on top.
pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 32
}

pub fn hp(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

pub fn hp_from_c64(prec: u32, z: Complex64) -> Complex {
    Complex::with_val(prec, (z.re, z.im))
}

pub fn c64_from_hp(z: &Complex) -> Complex64 {
    Complex64::new(z.real().to_f64(), z.imag().to_f64())
}

/// |z| as a multiprecision float at the precision of `z`'s parts.
pub fn abs_hp(z: &Complex) -> Float {
    let prec = z.real().prec().max(z.imag().prec());
    let re2 = Float::with_val(prec, z.real() * z.real());
    let im2 = Float::with_val(prec, z.imag() * z.imag());
    let sum = re2 + im2;
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_cover_requested_digits() {
        assert_eq!(digits_to_bits(16), 86);
        assert_eq!(digits_to_bits(50), 199);
        assert_eq!(digits_to_bits(120), 431);
    }

    #[test]
    fn c64_round_trip_is_exact() {
        let z = Complex64::new(0.1234567890123456, -9.87e-3);
        let h = hp_from_c64(128, z);
        assert_eq!(c64_from_hp(&h), z);
    }

    #[test]
    fn abs_of_three_four_is_five() {
        let z = hp(200, 3.0, -4.0);
        let a = abs_hp(&z);
        assert_eq!(a.to_f64(), 5.0);
    }
}
