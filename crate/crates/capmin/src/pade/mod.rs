//! Diagonal Padé approximants at infinity and the clustering of their poles
//! on the minimal set.
//!
//! The approximant [n+1/n] to a series in w = 1/z is a rational function
//! P/Q, deg P ≤ n+1, deg Q ≤ n, matching the series through w^(2n+1). The
//! denominator comes from a Hankel system solved at configurable precision;
//! rank-deficient (block) cases take the minimal-degree solution.

use num_complex::Complex64 as C;
use rug::Complex;

use crate::algebra::LaurentSeries;
use crate::capacity::equilibrium;
use crate::geom::point_polyline_distance;
use crate::hp::{abs_hp, c64_from_hp, digits_to_bits};
use crate::roots::polyroots_hp;
use crate::solver::MinimalSet;
use crate::{Error, Result};

/// A diagonal approximant with its high-precision coefficient data, kept so
/// poles can be extracted and the order condition re-checked at the working
/// precision.
#[derive(Debug, Clone)]
pub struct PadeApproximant {
    pub n: usize,
    pub digits: u32,
    /// Numerator coefficients in w, ascending, degree ≤ n+1.
    pub num: Vec<Complex>,
    /// Denominator coefficients in w, ascending, q₀ = 1 after reduction.
    pub den: Vec<Complex>,
    /// Denominator degree after rank-deficiency reduction.
    pub effective_degree: usize,
    prec: u32,
}

/// Classification of the approximant's poles against a computed minimal set.
#[derive(Debug, Clone)]
pub struct PoleReport {
    pub poles: Vec<C>,
    /// Fraction of all poles within ε of the arc system.
    pub near_fraction: f64,
    /// Poles far from the set and far from every declared polar singularity.
    pub spurious: Vec<C>,
    /// Poles matching a declared polar singularity of the function.
    pub systematic: Vec<C>,
    /// Sup over a probe circle of |potential of near poles − equilibrium
    /// potential|; small values mean the pole counting measure approximates
    /// the equilibrium distribution.
    pub discrepancy: f64,
}

fn hp_zero(prec: u32) -> Complex {
    Complex::with_val(prec, (0.0, 0.0))
}

/// Solves a square system by Gaussian elimination with partial pivoting,
/// entirely at the matrix precision. Returns None when a pivot collapses.
fn hp_solve(mut a: Vec<Vec<Complex>>, mut b: Vec<Complex>, prec: u32) -> Option<Vec<Complex>> {
    let n = a.len();
    for col in 0..n {
        let mut piv = col;
        let mut best = abs_hp(&a[col][col]);
        for (r, row) in a.iter().enumerate().skip(col + 1) {
            let v = abs_hp(&row[col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best.is_zero() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let factor = Complex::with_val(prec, &a[r][col] / &a[col][col]);
            for k in col..n {
                let t = Complex::with_val(prec, &factor * &a[col][k]);
                a[r][k] -= t;
            }
            let t = Complex::with_val(prec, &factor * &b[col]);
            b[r] -= t;
        }
    }
    let mut x = vec![hp_zero(prec); n];
    for col in (0..n).rev() {
        let mut s = b[col].clone();
        for k in col + 1..n {
            let t = Complex::with_val(prec, &a[col][k] * &x[k]);
            s -= t;
        }
        x[col] = Complex::with_val(prec, &s / &a[col][col]);
    }
    Some(x)
}

/// Max over the order conditions k = n+2 … 2n+1 of |Σ qⱼ c_{k−j}|,
/// relative to the largest series coefficient in play.
fn block_residual(c: &[Complex], q: &[Complex], n: usize, cscale: f64) -> f64 {
    let prec = c[0].prec().0;
    let mut worst = 0.0f64;
    for k in n + 2..=2 * n + 1 {
        let mut s = hp_zero(prec);
        for (j, qj) in q.iter().enumerate() {
            if k >= j {
                let t = Complex::with_val(prec, qj * &c[k - j]);
                s += t;
            }
        }
        let v = abs_hp(&s).to_f64();
        if v > worst {
            worst = v;
        }
    }
    let qnorm = q.iter().map(|v| abs_hp(v).to_f64()).fold(0.0, f64::max).max(1.0);
    worst / (cscale * qnorm)
}

/// The [n+1/n] approximant of a series at infinity. The denominator solves
/// the Hankel system at the requested decimal precision; in degenerate cases
/// the smallest denominator degree whose order condition still holds is
/// returned.
pub fn compute_pade(series: &LaurentSeries, n: usize, digits: u32) -> Result<PadeApproximant> {
    if digits < 16 {
        return Err(Error::InvalidInput("at least 16 decimal digits are required".into()));
    }
    let need = 2 * n as i64 + 2;
    if series.trunc() < need {
        return Err(Error::InvalidInput(format!(
            "series resolved through w^{}, but order {need} is needed for n = {n}",
            series.trunc()
        )));
    }
    if let Some(k0) = series.leading_order() {
        if k0 < 0 {
            return Err(Error::InvalidInput(
                "the function grows at infinity; no approximant exists at w = 0".into(),
            ));
        }
    } else {
        // Zero function: P = 0, Q = 1.
        let prec = digits_to_bits(digits);
        return Ok(PadeApproximant {
            n,
            digits,
            num: vec![hp_zero(prec)],
            den: vec![Complex::with_val(prec, (1.0, 0.0))],
            effective_degree: 0,
            prec,
        });
    }

    let prec = digits_to_bits(digits);
    let c: Vec<Complex> = (0..=2 * n as i64 + 1)
        .map(|k| Complex::with_val(prec, series.coeff(k)))
        .collect();
    let cscale = c.iter().map(|v| abs_hp(v).to_f64()).fold(0.0, f64::max);
    let accept = 10f64.powf(-0.5 * digits as f64);

    let mut solution: Option<Vec<Complex>> = None;
    for m in 0..=n {
        let q = if m == 0 {
            vec![Complex::with_val(prec, (1.0, 0.0))]
        } else {
            // Least squares for q₁…q_m with q₀ = 1 over all n conditions,
            // via the normal equations at working precision.
            let rows: Vec<usize> = (n + 2..=2 * n + 1).collect();
            let mut ata = vec![vec![hp_zero(prec); m]; m];
            let mut atb = vec![hp_zero(prec); m];
            for &k in &rows {
                for j in 1..=m {
                    let a_kj = if k >= j { c[k - j].clone() } else { hp_zero(prec) };
                    let a_kj_conj = Complex::with_val(prec, a_kj.conj_ref());
                    for l in 1..=m {
                        let a_kl = if k >= l { c[k - l].clone() } else { hp_zero(prec) };
                        let t = Complex::with_val(prec, &a_kj_conj * &a_kl);
                        ata[j - 1][l - 1] += t;
                    }
                    let t = Complex::with_val(prec, &a_kj_conj * &c[k]);
                    atb[j - 1] -= t;
                }
            }
            match hp_solve(ata, atb, prec) {
                Some(tail) => {
                    let mut q = Vec::with_capacity(m + 1);
                    q.push(Complex::with_val(prec, (1.0, 0.0)));
                    q.extend(tail);
                    q
                }
                None => continue,
            }
        };
        if block_residual(&c, &q, n, cscale.max(1e-300)) <= accept {
            solution = Some(q);
            break;
        }
    }

    let den = solution.ok_or_else(|| {
        Error::Numerical(format!(
            "Hankel system for n = {n} is numerically singular at {digits} digits; \
             retry with higher precision"
        ))
    })?;

    let mut num = Vec::with_capacity(n + 2);
    for i in 0..=n + 1 {
        let mut s = hp_zero(prec);
        for (j, qj) in den.iter().enumerate() {
            if i >= j {
                let t = Complex::with_val(prec, qj * &c[i - j]);
                s += t;
            }
        }
        num.push(s);
    }

    let effective_degree = den.len() - 1;
    Ok(PadeApproximant { n, digits, num, den, effective_degree, prec })
}

/// Max relative mismatch of the order condition: coefficients of
/// w⁰ … w^(2n+1) of f·Q − P, divided by the largest series coefficient.
pub fn order_condition_residual(series: &LaurentSeries, approx: &PadeApproximant) -> f64 {
    let prec = approx.prec;
    let top = 2 * approx.n as i64 + 1;
    let c: Vec<Complex> =
        (0..=top).map(|k| Complex::with_val(prec, series.coeff(k))).collect();
    let cscale = c.iter().map(|v| abs_hp(v).to_f64()).fold(0.0, f64::max).max(1e-300);
    let mut worst = 0.0f64;
    for k in 0..=top as usize {
        let mut s = hp_zero(prec);
        for (j, qj) in approx.den.iter().enumerate() {
            if k >= j {
                let t = Complex::with_val(prec, qj * &c[k - j]);
                s += t;
            }
        }
        if k < approx.num.len() {
            s -= &approx.num[k];
        }
        let v = abs_hp(&s).to_f64();
        if v > worst {
            worst = v;
        }
    }
    worst / cscale
}

/// Poles of the approximant in the z-plane: roots of Q(w) mapped through
/// z = 1/w, sorted by (re, im).
pub fn poles(approx: &PadeApproximant) -> Result<Vec<C>> {
    if approx.effective_degree == 0 {
        return Ok(Vec::new());
    }
    let roots = polyroots_hp(&approx.den, approx.prec)?;
    let mut out = Vec::with_capacity(roots.len());
    for w in &roots {
        let inv = Complex::with_val(approx.prec, w.clone().recip());
        out.push(c64_from_hp(&inv));
    }
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(out)
}

/// Classifies poles against the arcs of a solved minimal set: within ε of an
/// arc → near; else within ε of a declared polar singularity → systematic;
/// else spurious. The discrepancy compares the logarithmic potential of the
/// near poles with the equilibrium potential on a circle enclosing the set.
pub fn pole_metrics(
    pole_list: &[C],
    set: &MinimalSet,
    epsilon: f64,
    polar_singularities: &[C],
) -> Result<PoleReport> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput("classification radius must be positive".into()));
    }
    let mut near: Vec<C> = Vec::new();
    let mut systematic: Vec<C> = Vec::new();
    let mut spurious: Vec<C> = Vec::new();
    for &p in pole_list {
        let d_set = set
            .arcs
            .iter()
            .map(|a| point_polyline_distance(p, &a.samples))
            .fold(f64::INFINITY, f64::min);
        if d_set <= epsilon {
            near.push(p);
            continue;
        }
        let d_pol = polar_singularities
            .iter()
            .map(|&s| (p - s).norm())
            .fold(f64::INFINITY, f64::min);
        if d_pol <= epsilon {
            systematic.push(p);
        } else {
            spurious.push(p);
        }
    }
    let near_fraction = if pole_list.is_empty() {
        0.0
    } else {
        near.len() as f64 / pole_list.len() as f64
    };

    let discrepancy = if near.is_empty() {
        f64::INFINITY
    } else {
        let (measure, _) = equilibrium(&set.arcs, 64)?;
        let centroid =
            measure.nodes.iter().sum::<C>() / measure.nodes.len().max(1) as f64;
        let radius = measure
            .nodes
            .iter()
            .map(|x| (x - centroid).norm())
            .fold(0.0f64, f64::max)
            .max(1e-8)
            * 1.6;
        let mut worst = 0.0f64;
        for k in 0..64 {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 64.0;
            let z = centroid + C::from_polar(radius, th);
            let u_eq: f64 = measure
                .nodes
                .iter()
                .zip(&measure.weights)
                .map(|(x, w)| w * (z - x).norm().ln())
                .sum();
            let u_pol: f64 =
                near.iter().map(|p| (z - p).norm().ln()).sum::<f64>() / near.len() as f64;
            worst = worst.max((u_eq - u_pol).abs());
        }
        worst
    };

    Ok(PoleReport { poles: pole_list.to_vec(), near_fraction, spurious, systematic, discrepancy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::expand_at_infinity;
    use crate::examples;
    use crate::qdiff::build_q;
    use crate::solver::extract::extract_minimal_set;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn series_of(f: &crate::algebra::FunctionExpr, order: i64, digits: u32) -> LaurentSeries {
        expand_at_infinity(f, order, digits_to_bits(digits)).unwrap()
    }

    #[test]
    fn degree_zero_copies_the_leading_terms() {
        let prec = digits_to_bits(30);
        let coeffs =
            [2.0, 3.0, 5.0].iter().map(|&v| Complex::with_val(prec, (v, 0.0))).collect();
        let s = LaurentSeries::poly_in_w(prec, coeffs, 4);
        let a = compute_pade(&s, 0, 30).unwrap();
        assert_eq!(a.effective_degree, 0);
        assert!((c64_from_hp(&a.num[0]) - c(2.0, 0.0)).norm() < 1e-25);
        assert!((c64_from_hp(&a.num[1]) - c(3.0, 0.0)).norm() < 1e-25);
    }

    #[test]
    fn geometric_series_reduces_to_a_single_pole() {
        let prec = digits_to_bits(40);
        let mut coeffs = vec![Complex::with_val(prec, (0.0, 0.0))];
        coeffs.extend((1..=12).map(|_| Complex::with_val(prec, (1.0, 0.0))));
        let s = LaurentSeries::poly_in_w(prec, coeffs, 12);
        for n in 1..=5usize {
            let a = compute_pade(&s, n, 40).unwrap();
            assert_eq!(a.effective_degree, 1, "n = {n}");
            let p = poles(&a).unwrap();
            assert_eq!(p.len(), 1);
            assert!((p[0] - c(1.0, 0.0)).norm() < 1e-12, "pole {}", p[0]);
        }
    }

    #[test]
    fn two_point_order_condition_is_tight() {
        let s = series_of(&examples::two_point_sqrt(), 12, 50);
        let a = compute_pade(&s, 4, 50).unwrap();
        assert!(order_condition_residual(&s, &a) < 1e-12);
        let p = poles(&a).unwrap();
        for z in &p {
            assert!(z.im.abs() < 1e-10 && z.re.abs() < 1.0, "pole {z} off the segment");
        }
    }

    #[test]
    fn rational_functions_are_reproduced_exactly() {
        let true_poles =
            [c(0.3, 0.7), c(-1.2, 0.4), c(0.9, -0.8), c(-0.5, -1.1), c(1.4, 0.2)];
        let prec = digits_to_bits(40);
        let order = 20i64;
        let mut coeffs = vec![Complex::with_val(prec, (0.0, 0.0))];
        let mut powers: Vec<Complex> =
            true_poles.iter().map(|_| Complex::with_val(prec, (1.0, 0.0))).collect();
        for _ in 1..=order {
            let mut s = Complex::with_val(prec, (0.0, 0.0));
            for p in &powers {
                s += p;
            }
            coeffs.push(s);
            for (p, a) in powers.iter_mut().zip(&true_poles) {
                let ahp = Complex::with_val(prec, (a.re, a.im));
                *p *= ahp;
            }
        }
        let s = LaurentSeries::poly_in_w(prec, coeffs, order);
        let a = compute_pade(&s, 7, 40).unwrap();
        assert_eq!(a.effective_degree, 5);
        let p = poles(&a).unwrap();
        assert_eq!(p.len(), 5);
        for t in &true_poles {
            let hit = p.iter().map(|z| (z - t).norm()).fold(f64::INFINITY, f64::min);
            assert!(hit < 1e-8, "pole {t} missed by {hit:.2e}");
        }
    }

    #[test]
    fn higher_precision_does_not_worsen_the_residual() {
        let f = examples::four_point_quartic(std::f64::consts::PI / 6.0);
        let s30 = series_of(&f, 16, 30);
        let s60 = series_of(&f, 16, 60);
        let r30 = order_condition_residual(&s30, &compute_pade(&s30, 6, 30).unwrap());
        let r60 = order_condition_residual(&s60, &compute_pade(&s60, 6, 60).unwrap());
        assert!(r60 <= r30 * (1.0 + 1e-12), "r30 {r30:.3e} r60 {r60:.3e}");
    }

    #[test]
    fn scaling_the_argument_scales_the_poles() {
        use crate::algebra::FunctionExpr;
        let lambda = 2.0;
        let f = examples::two_point_sqrt();
        // f(λz) = (1/λ) · 1/√(z² − 1/λ²)
        let scaled = FunctionExpr::Product {
            children: vec![
                FunctionExpr::Constant { value: [1.0 / lambda, 0.0] },
                FunctionExpr::Monomial { power: -1 },
                FunctionExpr::FractionalPower {
                    child: Box::new(FunctionExpr::RootProduct {
                        points: vec![[1.0 / lambda, 0.0], [-1.0 / lambda, 0.0]],
                        order: 2,
                    }),
                    num: -1,
                    den: 1,
                },
            ],
        };
        let p = poles(&compute_pade(&series_of(&f, 16, 40), 6, 40).unwrap()).unwrap();
        let ps = poles(&compute_pade(&series_of(&scaled, 16, 40), 6, 40).unwrap()).unwrap();
        assert_eq!(p.len(), ps.len());
        for (a, b) in p.iter().zip(&ps) {
            assert!((a / lambda - b).norm() <= 1e-8 * a.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn pole_classification_counts_match() {
        let q = build_q(&[(c(-1.0, 0.0), 1), (c(1.0, 0.0), 1)], &[], &[]).unwrap();
        let set = extract_minimal_set(&q, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let polar = [c(0.0, 5.0)];
        let pole_list = [c(0.3, 0.0), c(2.0, 2.0), c(1e-9, 5.0)];
        let report = pole_metrics(&pole_list, &set, 0.05, &polar).unwrap();
        assert_eq!(report.spurious, vec![c(2.0, 2.0)]);
        assert_eq!(report.systematic, vec![c(1e-9, 5.0)]);
        assert!((report.near_fraction - 1.0 / 3.0).abs() < 1e-12);
        assert!(report.discrepancy.is_finite());
    }
}
