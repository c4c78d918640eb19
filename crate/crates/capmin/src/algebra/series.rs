//! Laurent series at infinity with explicit truncation tracking.
//!
//! A series holds coefficients of w^k for k = k0 ..= trunc, where w = 1/z.
//! Negative k means positive powers of z. Every coefficient up to the
//! truncation order is stored explicitly (zeros included), and arithmetic
//! propagates the truncation order of the least-resolved operand, so a
//! coefficient you can read is always a coefficient you can trust.

use num_complex::Complex64;
use rug::{Complex, Float};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LaurentSeries {
    k0: i64,
    coeffs: Vec<Complex>,
    trunc: i64,
    prec: u32,
}

impl LaurentSeries {
    fn assemble(k0: i64, mut coeffs: Vec<Complex>, trunc: i64, prec: u32) -> Self {
        let len = (trunc - k0 + 1).max(0) as usize;
        coeffs.truncate(len);
        while coeffs.len() < len {
            coeffs.push(Complex::with_val(prec, (0.0, 0.0)));
        }
        LaurentSeries { k0, coeffs, trunc, prec }
    }

    /// Series with all known coefficients zero, resolved through `trunc`.
    pub fn zero(prec: u32, trunc: i64) -> Self {
        Self::assemble(0, Vec::new(), trunc, prec)
    }

    pub fn constant(prec: u32, value: Complex, trunc: i64) -> Self {
        Self::assemble(0, vec![value], trunc, prec)
    }

    /// z^power = w^(-power).
    pub fn monomial_z(prec: u32, power: i64, trunc: i64) -> Self {
        Self::assemble(-power, vec![Complex::with_val(prec, (1.0, 0.0))], trunc, prec)
    }

    /// Polynomial in w starting at w^0: coeffs[j] multiplies w^j.
    pub fn poly_in_w(prec: u32, coeffs: Vec<Complex>, trunc: i64) -> Self {
        Self::assemble(0, coeffs, trunc, prec)
    }

    pub fn k0(&self) -> i64 {
        self.k0
    }

    /// Truncation order: coefficients of w^k are known for all k ≤ this.
    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Coefficient of w^k. Zero below the stored range; asking beyond the
    /// truncation order is a caller bug.
    pub fn coeff(&self, k: i64) -> Complex {
        assert!(k <= self.trunc, "coefficient of w^{k} beyond truncation order {}", self.trunc);
        if k < self.k0 {
            return Complex::with_val(self.prec, (0.0, 0.0));
        }
        self.coeffs[(k - self.k0) as usize].clone()
    }

    pub fn coeff_f64(&self, k: i64) -> Complex64 {
        let c = self.coeff(k);
        Complex64::new(c.real().to_f64(), c.imag().to_f64())
    }

    /// Lowest order with a nonzero coefficient, if any coefficient is nonzero.
    pub fn leading_order(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !(c.real().is_zero() && c.imag().is_zero()))
            .map(|j| self.k0 + j as i64)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        let prec = self.prec.max(other.prec);
        let trunc = self.trunc.min(other.trunc);
        let k0 = self.k0.min(other.k0);
        let len = (trunc - k0 + 1).max(0) as usize;
        let mut coeffs = Vec::with_capacity(len);
        for j in 0..len {
            let k = k0 + j as i64;
            let a = if k >= self.k0 && k <= self.trunc {
                self.coeff(k)
            } else {
                Complex::with_val(prec, (0.0, 0.0))
            };
            let b = if k >= other.k0 && k <= other.trunc {
                other.coeff(k)
            } else {
                Complex::with_val(prec, (0.0, 0.0))
            };
            let c = if negate {
                Complex::with_val(prec, &a - &b)
            } else {
                Complex::with_val(prec, &a + &b)
            };
            coeffs.push(c);
        }
        Self::assemble(k0, coeffs, trunc, prec)
    }

    pub fn scale(&self, factor: &Complex) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| Complex::with_val(self.prec, c * factor))
            .collect();
        Self::assemble(self.k0, coeffs, self.trunc, self.prec)
    }

    pub fn neg(&self) -> Self {
        self.scale(&Complex::with_val(self.prec, (-1.0, 0.0)))
    }

    /// Same series reported only through a lower truncation order.
    pub fn truncated(&self, new_trunc: i64) -> Self {
        assert!(new_trunc <= self.trunc, "cannot extend a series by truncating");
        Self::assemble(self.k0, self.coeffs.clone(), new_trunc, self.prec)
    }

    /// Multiply by w^m (shift every order up by m).
    pub fn shift(&self, m: i64) -> Self {
        let mut out = self.clone();
        out.k0 += m;
        out.trunc += m;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        // The product coefficient at order k sums a_i b_(k-i); it is fully
        // known only while every contributing pair is below both truncations.
        let trunc = (self.trunc + other.k0).min(other.trunc + self.k0);
        let k0 = self.k0 + other.k0;
        let len = (trunc - k0 + 1).max(0) as usize;
        let mut coeffs = vec![Complex::with_val(prec, (0.0, 0.0)); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.real().is_zero() && a.imag().is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let idx = i + j;
                if idx >= len {
                    break;
                }
                coeffs[idx] += Complex::with_val(prec, a * b);
            }
        }
        Self::assemble(k0, coeffs, trunc, prec)
    }

    /// Raise a series with nonzero constant term to the rational power
    /// num/den, anchored to the principal root of the constant term.
    ///
    /// The input must start at order 0: callers factor out any monomial
    /// first. The result keeps the input's truncation order.
    pub fn pow_rational(&self, num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidInput("fractional power with zero denominator".into()));
        }
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        match self.leading_order() {
            None => return Err(Error::InvalidInput("non-normalizable series".into())),
            Some(m) if m != 0 => {
                return Err(Error::InvalidInput("non-normalizable series".into()));
            }
            Some(_) => {}
        }
        if self.trunc < 0 {
            return Err(Error::InvalidInput("series truncated before order zero".into()));
        }
        let prec = self.prec;
        let t0 = self.coeff(0);
        let n_rel = self.trunc as usize;

        let alpha = Float::with_val(prec, num) / Float::with_val(prec, den);
        let log_t0 = t0.clone().ln();
        let g0 = Complex::with_val(prec, &log_t0 * &alpha).exp();

        let mut g: Vec<Complex> = Vec::with_capacity(n_rel + 1);
        g.push(g0);
        for k in 1..=n_rel {
            let mut acc = Complex::with_val(prec, (0.0, 0.0));
            for j in 1..=k {
                let factor = j as i64 * (num + den) - k as i64 * den;
                if factor == 0 {
                    continue;
                }
                let tj = self.coeff(j as i64);
                if tj.real().is_zero() && tj.imag().is_zero() {
                    continue;
                }
                let prod = Complex::with_val(prec, &tj * &g[k - j]);
                acc += Complex::with_val(prec, &prod * &Float::with_val(prec, factor as f64));
            }
            let denom = Float::with_val(prec, (k as i64 * den) as f64);
            let gk = Complex::with_val(prec, &acc / &t0) / denom;
            g.push(gk);
        }
        Ok(Self::assemble(0, g, self.trunc, prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp::digits_to_bits;

    const P: u32 = 128;

    fn c(prec: u32, re: f64, im: f64) -> Complex {
        Complex::with_val(prec, (re, im))
    }

    fn poly(vals: &[f64], trunc: i64) -> LaurentSeries {
        LaurentSeries::poly_in_w(P, vals.iter().map(|&v| c(P, v, 0.0)).collect(), trunc)
    }

    #[test]
    fn binomial_square_root_of_one_minus_w() {
        let s = poly(&[1.0, -1.0], 3);
        let g = s.pow_rational(1, 2).unwrap();
        let expect = [1.0, -0.5, -0.125, -0.0625];
        for (k, e) in expect.iter().enumerate() {
            assert!((g.coeff_f64(k as i64).re - e).abs() < 1e-15, "order {k}");
            assert_eq!(g.coeff_f64(k as i64).im, 0.0);
        }
    }

    #[test]
    fn exponent_one_is_identity() {
        let s = poly(&[2.0, 0.5, -3.0, 0.25], 5);
        let g = s.pow_rational(1, 1).unwrap();
        for k in 0..=5 {
            assert!((g.coeff_f64(k).re - s.coeff_f64(k).re).abs() < 1e-14);
        }
    }

    #[test]
    fn quarter_powers_multiply_back() {
        let prec = digits_to_bits(50);
        let vals = [3.0, 1.0, -0.5, 2.0, 0.0, -1.25];
        let s = LaurentSeries::poly_in_w(prec, vals.iter().map(|&v| c(prec, v, 0.0)).collect(), 12);
        let a = s.pow_rational(1, 4).unwrap();
        let b = s.pow_rational(3, 4).unwrap();
        let back = a.mul(&b);
        assert_eq!(back.trunc(), 12);
        for k in 0..=12 {
            let want = if k <= 5 { vals[k as usize] } else { 0.0 };
            let diff = (back.coeff_f64(k) - Complex64::new(want, 0.0)).norm();
            assert!(diff < 1e-40, "order {k}: diff {diff:.3e}");
        }
    }

    #[test]
    fn reciprocal_square_root_series_for_one_minus_w_squared() {
        let s = poly(&[1.0, 0.0, -1.0], 6);
        let g = s.pow_rational(-1, 2).unwrap();
        let expect = [1.0, 0.0, 0.5, 0.0, 0.375, 0.0, 0.3125];
        for (k, e) in expect.iter().enumerate() {
            assert!((g.coeff_f64(k as i64).re - e).abs() < 1e-15, "order {k}");
        }
    }

    #[test]
    fn truncation_propagates_through_arithmetic() {
        let a = poly(&[1.0, 2.0], 8);
        let b = LaurentSeries::monomial_z(P, 1, 4); // z = w^(-1), known through w^4
        let sum = a.add(&b);
        assert_eq!(sum.trunc(), 4);
        assert_eq!(sum.k0(), -1);
        let prod = a.mul(&b);
        // Known through min(8 + (-1), 4 + 0) = 4.
        assert_eq!(prod.trunc(), 4);
        assert_eq!(prod.coeff_f64(-1).re, 1.0);
        assert_eq!(prod.coeff_f64(0).re, 2.0);
        assert_eq!(prod.coeff_f64(1).re, 0.0);
    }

    #[test]
    fn monomial_factoring_is_callers_job() {
        let s = LaurentSeries::assemble(1, vec![c(P, 1.0, 0.0)], 5, P);
        let err = s.pow_rational(1, 2).unwrap_err();
        assert!(err.to_string().contains("non-normalizable"));
        let z = LaurentSeries::zero(P, 5);
        assert!(z.pow_rational(1, 2).is_err());
        let ok = poly(&[4.0], 5);
        assert!(ok.pow_rational(0, 0).is_err());
    }

    #[test]
    fn principal_branch_anchors_constant_term() {
        // sqrt of -4: principal root is 2i.
        let s = LaurentSeries::constant(P, c(P, -4.0, 0.0), 3);
        let g = s.pow_rational(1, 2).unwrap();
        let g0 = g.coeff_f64(0);
        assert!((g0 - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn subtraction_and_scaling() {
        let a = poly(&[5.0, 1.0], 6);
        let b = poly(&[2.0, 1.0, 7.0], 6);
        let d = a.sub(&b);
        assert_eq!(d.coeff_f64(0).re, 3.0);
        assert_eq!(d.coeff_f64(1).re, 0.0);
        assert_eq!(d.coeff_f64(2).re, -7.0);
        let s = d.scale(&c(P, -2.0, 0.0));
        assert_eq!(s.coeff_f64(0).re, -6.0);
    }
}
