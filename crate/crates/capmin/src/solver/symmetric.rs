//! Closed-form route to the bifurcation points of the symmetric four-point
//! configuration, via the improper elliptic integral whose root locates
//! them on the real axis.

use num_complex::Complex64 as C;

use crate::quad::adaptive_real;
use crate::{Error, Result};

fn g_kernel(a: f64, x: f64, cos2phi: f64) -> f64 {
    ((x - a) / (x * (x * x - 2.0 * x * cos2phi + 1.0))).abs().sqrt()
}

/// I(a): the balance of mass between the two real rays (a, ∞) and (−∞, 0).
/// Strictly decreasing on (0, 1) with a sign change; its root gives the
/// squared bifurcation point.
pub fn elliptic_condition(a: f64, phi: f64) -> Result<f64> {
    if !(0.0 < a && a < 1.0) {
        return Err(Error::InvalidInput(format!("a = {a} outside (0, 1)")));
    }
    let cos2phi = (2.0 * phi).cos();
    let cut = 8.0f64;
    let rtol = 1e-11;
    let atol = 1e-13;
    let panels = 6000;

    // Right ray up to the cut; t² substitution flattens the √(x−a) kink.
    let (right, _) = adaptive_real(
        |t| 2.0 * t * g_kernel(a, a + t * t, cos2phi),
        0.0,
        (cut - a).sqrt(),
        rtol,
        atol,
        panels,
    )?;
    // Left ray: x = −t² handles the inverse-square-root endpoint at 0.
    let (left, _) = adaptive_real(
        |t| 2.0 * t * g_kernel(a, -t * t, cos2phi),
        0.0,
        cut.sqrt(),
        rtol,
        atol,
        panels,
    )?;
    // Both tails diverge individually but their difference decays like 1/x²;
    // u = 1/x turns it into a smooth integral over (0, 1/cut].
    let (tail, _) = adaptive_real(
        |u| {
            let x = 1.0 / u;
            (g_kernel(a, x, cos2phi) - g_kernel(a, -x, cos2phi)) / (u * u)
        },
        0.0,
        1.0 / cut,
        rtol,
        atol,
        panels,
    )?;
    Ok(right - left + tail)
}

/// Bifurcation points of the four-point configuration with unit-circle
/// branch points at angles ±φ, π±φ. For φ < π/4 they sit at ±√a₀ on the
/// real axis; for φ > π/4 the configuration is the φ' = π/2−φ one rotated
/// by 90°, so they sit on the imaginary axis; at φ = π/4 they merge at 0.
pub fn solve_symmetric_four_point(phi: f64) -> Result<(f64, C, C)> {
    if !(0.0 < phi && phi < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidInput(format!("phi = {phi} outside (0, pi/2)")));
    }
    let quarter = std::f64::consts::FRAC_PI_4;
    if (phi - quarter).abs() <= 1e-12 {
        return Ok((0.0, C::new(0.0, 0.0), C::new(0.0, 0.0)));
    }
    let (reduced, rotated) = if phi < quarter {
        (phi, false)
    } else {
        (std::f64::consts::FRAC_PI_2 - phi, true)
    };

    let mut lo = 1e-12;
    let mut hi = 1.0 - 1e-12;
    let f_lo = elliptic_condition(lo, reduced)?;
    let f_hi = elliptic_condition(hi, reduced)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Numerical(format!(
            "condition integral does not bracket a root: I({lo:.1e}) = {f_lo:.3e}, I(1-{:_>0.1e}) = {f_hi:.3e}",
            1.0 - hi
        )));
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if elliptic_condition(mid, reduced)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let a0 = 0.5 * (lo + hi);
    let root = a0.sqrt();
    let z5 = if rotated { C::new(0.0, root) } else { C::new(root, 0.0) };
    Ok((a0, z5, -z5))
}
