//! Polynomial root finding by the Aberth-Ehrlich simultaneous iteration,
//! in double precision and in multiprecision for the Pade denominators.
//!
//! Coefficients are ascending: `coeffs[k]` multiplies `z^k`.

use num_complex::Complex64 as C;
use rug::{Complex, Float};

use crate::hp::{abs_hp, c64_from_hp};
use crate::{Error, Result};

/// Evaluate a polynomial with ascending coefficients.
pub fn horner(coeffs: &[C], z: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Evaluate the polynomial and its derivative together.
pub fn horner_deriv(coeffs: &[C], z: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn sort_key(z: &C) -> (f64, f64) {
    (z.re, z.im)
}

/// All complex roots of the polynomial, sorted by (re, im).
///
/// Zero roots are factored out exactly; the rest come from Aberth iteration
/// with a Newton polish. Simple roots reach close to machine precision;
/// multiple roots come back as a tight cluster with correct count.
pub fn polyroots(coeffs: &[C]) -> Result<Vec<C>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 || coeffs.is_empty() {
        return Err(Error::InvalidInput("zero polynomial has no well-defined roots".into()));
    }
    let mut cs: Vec<C> = coeffs.iter().map(|c| c / scale).collect();
    while cs.len() > 1 && cs.last().unwrap().norm() <= 1e-250 {
        cs.pop();
    }
    let mut roots: Vec<C> = Vec::new();
    while cs.len() > 1 && cs[0].norm() <= 1e-250 {
        roots.push(C::new(0.0, 0.0));
        cs.remove(0);
    }
    let n = cs.len() - 1;
    if n == 0 {
        roots.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        return Ok(roots);
    }
    if n == 1 {
        roots.push(-cs[0] / cs[1]);
        roots.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        return Ok(roots);
    }

    let lead = cs[n];
    let radius = 1.0 + cs[..n].iter().map(|c| (c / lead).norm()).fold(0.0, f64::max);
    let mut z: Vec<C> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.43;
            let r = radius * (0.65 + 0.3 * k as f64 / n as f64);
            C::new(r * ang.cos(), r * ang.sin())
        })
        .collect();

    let mut converged = false;
    for _ in 0..400 {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let (p, dp) = horner_deriv(&cs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = if dp.norm() > 1e-290 {
                p / dp
            } else {
                C::new(1e-8 * (1.0 + z[i].norm()), 0.0)
            };
            let mut s = C::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-290 {
                        s += C::new(1.0, 0.0) / d;
                    } else {
                        s += C::new(1e12, 0.0);
                    }
                }
            }
            let denom = C::new(1.0, 0.0) - newton * s;
            let step = if denom.norm() > 1e-290 { newton / denom } else { newton };
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }

    // Newton polish, keeping a step only when it reduces the residual.
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = horner_deriv(&cs, *zi);
            if dp.norm() <= 1e-290 {
                break;
            }
            let cand = *zi - p / dp;
            if horner(&cs, cand).norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }

    if !converged {
        // Multiple roots stall the global step criterion while every root is
        // still accurate to roughly eps^(1/multiplicity); accept on residual.
        for &zi in &z {
            let bound: f64 = cs.iter().enumerate().map(|(k, c)| c.norm() * zi.norm().powi(k as i32)).sum();
            if horner(&cs, zi).norm() > 1e-8 * (bound + 1e-300) {
                return Err(Error::Numerical(format!(
                    "root iteration did not converge: residual {:.3e} at {zi}",
                    horner(&cs, zi).norm()
                )));
            }
        }
    }

    roots.extend(z);
    roots.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
    Ok(roots)
}

fn hp_horner_deriv(coeffs: &[Complex], z: &Complex, prec: u32) -> (Complex, Complex) {
    let mut p = Complex::with_val(prec, (0.0, 0.0));
    let mut dp = Complex::with_val(prec, (0.0, 0.0));
    for c in coeffs.iter().rev() {
        dp = Complex::with_val(prec, &dp * z) + &p;
        p = Complex::with_val(prec, &p * z) + c;
    }
    (p, dp)
}

/// Roots of a multiprecision polynomial, seeded from the double-precision
/// solve and refined by Aberth iteration at full precision.
pub fn polyroots_hp(coeffs: &[Complex], prec: u32) -> Result<Vec<Complex>> {
    let mags: Vec<f64> = coeffs.iter().map(|c| abs_hp(c).to_f64()).collect();
    let scale = mags.iter().fold(0.0f64, |a, &b| a.max(b));
    if scale == 0.0 || !scale.is_finite() || coeffs.is_empty() {
        return Err(Error::InvalidInput("zero or non-finite polynomial in multiprecision root solve".into()));
    }
    let seeds_poly: Vec<C> = coeffs.iter().map(|c| c64_from_hp(c) / scale).collect();
    let seeds = polyroots(&seeds_poly)?;
    let n = seeds.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut z: Vec<Complex> = seeds
        .iter()
        .enumerate()
        .map(|(k, s)| {
            // Tiny deterministic spread keeps clustered seeds distinct.
            let bump = 1e-12 * (1.0 + s.norm()) * (k as f64 + 1.0);
            Complex::with_val(prec, (s.re + bump, s.im + bump * 0.5))
        })
        .collect();

    let tol = Float::with_val(prec, 1.0) >> prec.saturating_sub(16);
    // Backward-error acceptance: a root is done when |p(z)| sinks to the
    // rounding floor of the Horner evaluation itself, Σ|c_k||z|^k · 2^(-prec)
    // with an O(n) headroom factor. Ill-conditioned clusters stall their
    // Newton steps well above the step tolerance while already being
    // backward stable.
    let residual_shift = prec.saturating_sub(8 + 64 - (n as u64).leading_zeros());
    let one = Complex::with_val(prec, (1.0, 0.0));
    let mut converged = false;
    for _ in 0..200 {
        let mut all_small = true;
        let mut backward_ok = true;
        for i in 0..n {
            let (p, dp) = hp_horner_deriv(coeffs, &z[i], prec);
            if backward_ok {
                let az = abs_hp(&z[i]);
                let mut bound = Float::with_val(prec, 0.0);
                for c in coeffs.iter().rev() {
                    bound = bound * &az + abs_hp(c);
                }
                if abs_hp(&p) > bound >> residual_shift {
                    backward_ok = false;
                }
            }
            if abs_hp(&p).is_zero() {
                continue;
            }
            let newton = if abs_hp(&dp).is_zero() {
                Complex::with_val(prec, (1e-20, 0.0))
            } else {
                Complex::with_val(prec, &p / &dp)
            };
            let mut s = Complex::with_val(prec, (0.0, 0.0));
            for j in 0..n {
                if j != i {
                    let d = Complex::with_val(prec, &z[i] - &z[j]);
                    if !abs_hp(&d).is_zero() {
                        s += Complex::with_val(prec, &one / &d);
                    }
                }
            }
            let denom = Complex::with_val(prec, &one - Complex::with_val(prec, &newton * &s));
            let step = if abs_hp(&denom).is_zero() {
                newton
            } else {
                Complex::with_val(prec, &newton / &denom)
            };
            z[i] -= &step;
            let rel = abs_hp(&step) / (Float::with_val(prec, 1.0) + abs_hp(&z[i]));
            if rel > tol {
                all_small = false;
            }
        }
        if all_small || backward_ok {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("multiprecision root iteration did not converge".into()));
    }
    z.sort_by(|a, b| {
        let ka = (a.real().to_f64(), a.imag().to_f64());
        let kb = (b.real().to_f64(), b.imag().to_f64());
        ka.partial_cmp(&kb).unwrap()
    });
    Ok(z)
}
