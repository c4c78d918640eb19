//! Expression trees for the algebraic functions we minimize over, their
//! Laurent expansion at infinity, and their branch-point structure.
//!
//! A root product [∏(1−z_j/z)]^(1/n) is the normalized building block: it
//! tends to 1 at infinity. Monomial and product nodes supply the z^m
//! prefactors needed for functions that grow or decay at infinity, and
//! fractional powers compose on top (value of the child anchored at
//! infinity, principal branch).

use num_complex::Complex64;
use rug::Complex;
use serde::{Deserialize, Serialize};

use super::series::LaurentSeries;
use crate::roots::{horner, polyroots};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum FunctionExpr {
    Constant { value: [f64; 2] },
    RootProduct { points: Vec<[f64; 2]>, order: u32 },
    Sum { children: Vec<FunctionExpr> },
    Difference { children: Vec<FunctionExpr> },
    Product { children: Vec<FunctionExpr> },
    Monomial { power: i64 },
    FractionalPower { child: Box<FunctionExpr>, num: i64, den: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectivityMode {
    Exact,
    AtLeast,
}

/// Connectivity the complement of an admissible set must realize: each group
/// must be connected, with order-2 groups allowing any pairing of their
/// points instead of full connectivity.
#[derive(Debug, Clone)]
pub struct ConnectivityConstraint {
    pub groups: Vec<Vec<Complex64>>,
    pub orders: Vec<u32>,
    pub mode: ConnectivityMode,
}

fn floor_div(a: i64, b: i64) -> i64 {
    let d = a / b;
    if a % b != 0 && (a < 0) != (b < 0) {
        d - 1
    } else {
        d
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

fn c64(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl FunctionExpr {
    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionExpr::Constant { value } => {
                if !value[0].is_finite() || !value[1].is_finite() {
                    return Err(Error::InvalidInput("constant with non-finite value".into()));
                }
            }
            FunctionExpr::RootProduct { points, order } => {
                if points.is_empty() {
                    return Err(Error::InvalidInput("root product with empty point group".into()));
                }
                if *order < 2 {
                    return Err(Error::InvalidInput("root order must be at least 2".into()));
                }
                if points.iter().any(|p| c64(*p).norm() == 0.0) {
                    return Err(Error::InvalidInput(
                        "root product points must be nonzero (the factor 1 - z_j/z cannot place a branch point at the origin)".into(),
                    ));
                }
                if points.len() % *order as usize != 0 {
                    return Err(Error::InvalidInput(format!(
                        "root product of {} points under an order-{} root branches at the origin; point count must be divisible by the root order",
                        points.len(),
                        order
                    )));
                }
            }
            FunctionExpr::Sum { children } | FunctionExpr::Product { children } => {
                if children.is_empty() {
                    return Err(Error::InvalidInput("sum/product node with no children".into()));
                }
                for ch in children {
                    ch.validate()?;
                }
            }
            FunctionExpr::Difference { children } => {
                if children.len() != 2 {
                    return Err(Error::InvalidInput("difference node needs exactly two children".into()));
                }
                for ch in children {
                    ch.validate()?;
                }
            }
            FunctionExpr::Monomial { .. } => {}
            FunctionExpr::FractionalPower { child, den, .. } => {
                if *den == 0 {
                    return Err(Error::InvalidInput("fractional power with zero denominator".into()));
                }
                child.validate()?;
            }
        }
        Ok(())
    }

    /// Structural estimate of the lowest order (power of w = 1/z) present.
    fn k0_estimate(&self) -> i64 {
        match self {
            FunctionExpr::Constant { .. } => 0,
            FunctionExpr::RootProduct { .. } => 0,
            FunctionExpr::Monomial { power } => -power,
            FunctionExpr::Sum { children } | FunctionExpr::Difference { children } => {
                children.iter().map(|c| c.k0_estimate()).min().unwrap_or(0)
            }
            FunctionExpr::Product { children } => children.iter().map(|c| c.k0_estimate()).sum(),
            FunctionExpr::FractionalPower { child, num, den } => {
                floor_div(child.k0_estimate() * num, *den)
            }
        }
    }

    fn expand_node(&self, prec: u32, need: i64) -> Result<LaurentSeries> {
        let need = need.max(0);
        match self {
            FunctionExpr::Constant { value } => Ok(LaurentSeries::constant(
                prec,
                Complex::with_val(prec, (value[0], value[1])),
                need,
            )),
            FunctionExpr::Monomial { power } => Ok(LaurentSeries::monomial_z(prec, *power, need)),
            FunctionExpr::RootProduct { points, order } => {
                let mut coeffs = vec![Complex::with_val(prec, (1.0, 0.0))];
                for p in points {
                    // Multiply by (1 - z_j w).
                    let zj = Complex::with_val(prec, (p[0], p[1]));
                    let mut next = vec![Complex::with_val(prec, (0.0, 0.0)); coeffs.len() + 1];
                    for (i, c) in coeffs.iter().enumerate() {
                        next[i] += c;
                        next[i + 1] -= Complex::with_val(prec, c * &zj);
                    }
                    coeffs = next;
                }
                let inner = LaurentSeries::poly_in_w(prec, coeffs, need);
                inner.pow_rational(1, *order as i64)
            }
            FunctionExpr::Sum { children } => {
                let mut acc: Option<LaurentSeries> = None;
                for ch in children {
                    let e = ch.expand_node(prec, need)?;
                    acc = Some(match acc {
                        None => e,
                        Some(a) => a.add(&e),
                    });
                }
                Ok(acc.unwrap())
            }
            FunctionExpr::Difference { children } => {
                let a = children[0].expand_node(prec, need)?;
                let b = children[1].expand_node(prec, need)?;
                Ok(a.sub(&b))
            }
            FunctionExpr::Product { children } => {
                let k0s: Vec<i64> = children.iter().map(|c| c.k0_estimate()).collect();
                let total: i64 = k0s.iter().sum();
                let mut acc: Option<LaurentSeries> = None;
                for (ch, k0) in children.iter().zip(&k0s) {
                    let e = ch.expand_node(prec, need - (total - k0))?;
                    acc = Some(match acc {
                        None => e,
                        Some(a) => a.mul(&e),
                    });
                }
                Ok(acc.unwrap())
            }
            FunctionExpr::FractionalPower { child, num, den } => {
                let m_est = child.k0_estimate();
                let need_child = need + ceil_div(m_est * (den - num), *den);
                let e = child.expand_node(prec, need_child)?;
                let m = e.leading_order().ok_or_else(|| {
                    Error::InvalidInput("fractional power of an identically vanishing expression".into())
                })?;
                if (m * num) % den != 0 {
                    return Err(Error::InvalidInput(
                        "fractional power would branch at infinity (leading order times exponent is not an integer)".into(),
                    ));
                }
                let tail = e.shift(-m);
                let p = tail.pow_rational(*num, *den)?;
                Ok(p.shift(m * num / den))
            }
        }
    }

    /// Branch-point groups with the root order attached to each group.
    pub fn branch_point_groups(&self) -> Result<Vec<(Vec<Complex64>, u32)>> {
        let mut out = Vec::new();
        self.collect_groups(&mut out)?;
        Ok(out)
    }

    fn collect_groups(&self, out: &mut Vec<(Vec<Complex64>, u32)>) -> Result<()> {
        match self {
            FunctionExpr::Constant { .. } | FunctionExpr::Monomial { .. } => Ok(()),
            FunctionExpr::RootProduct { points, order } => {
                out.push((points.iter().map(|p| c64(*p)).collect(), *order));
                Ok(())
            }
            FunctionExpr::Sum { children }
            | FunctionExpr::Difference { children }
            | FunctionExpr::Product { children } => {
                for ch in children {
                    ch.collect_groups(out)?;
                }
                Ok(())
            }
            FunctionExpr::FractionalPower { child, den, .. } => {
                child.collect_groups(out)?;
                let q = den.unsigned_abs() as u32;
                if q > 1 {
                    out.push((child.zero_locus()?, q));
                }
                Ok(())
            }
        }
    }

    /// Zeros of this expression, found by clearing the radical into a
    /// polynomial. Only the shape (radical ± constant) is supported; other
    /// shapes have no polynomial form this code knows how to derive.
    fn zero_locus(&self) -> Result<Vec<Complex64>> {
        let (a, c) = match self {
            FunctionExpr::Difference { children } => {
                match (&children[0], &children[1]) {
                    (expr, FunctionExpr::Constant { value }) => (expr, c64(*value)),
                    (FunctionExpr::Constant { value }, expr) => (expr, c64(*value)),
                    _ => {
                        return Err(Error::Numerical(
                            "no defining polynomial available for the fractional-power child; supply branch-point groups explicitly".into(),
                        ))
                    }
                }
            }
            _ => {
                return Err(Error::Numerical(
                    "no defining polynomial available for the fractional-power child; supply branch-point groups explicitly".into(),
                ))
            }
        };
        let (p, points, n) = a.as_simple_radical().ok_or_else(|| {
            Error::Numerical(
                "no defining polynomial available for the fractional-power child; supply branch-point groups explicitly".into(),
            )
        })?;
        if c.norm() == 0.0 {
            return Err(Error::Numerical(
                "radical-minus-constant child with zero constant has its zeros at the declared branch points; nothing to locate".into(),
            ));
        }
        // a = z^p [∏(1-z_j/z)]^(1/n) = c  =>  z^(p n - k) ∏(z - z_j) = c^n.
        let k = points.len() as i64;
        let e = p * n as i64 - k;
        let cn = c.powi(n as i32);
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for zj in &points {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, q) in poly.iter().enumerate() {
                next[i] -= q * zj;
                next[i + 1] += q;
            }
            poly = next;
        }
        if e >= 0 {
            let mut shifted = vec![Complex64::new(0.0, 0.0); e as usize];
            shifted.extend_from_slice(&poly);
            shifted[0] -= cn;
            poly = shifted;
        } else {
            let m = (-e) as usize;
            if poly.len() < m + 1 {
                poly.resize(m + 1, Complex64::new(0.0, 0.0));
            }
            poly[m] -= cn;
        }
        let roots = polyroots(&poly)?;
        let scale: f64 = poly.iter().map(|q| q.norm()).sum();
        for r in &roots {
            let res = horner(&poly, *r).norm();
            let local: f64 = poly
                .iter()
                .enumerate()
                .map(|(i, q)| q.norm() * r.norm().powi(i as i32))
                .sum();
            if res > 1e-8 * (local + scale) {
                return Err(Error::Numerical(format!(
                    "branch point of fractional power not located to tolerance: residual {res:.3e} at {r}"
                )));
            }
        }
        Ok(roots)
    }

    /// Match z^p [∏(1-z_j/z)]^(1/n), the shape whose power can be cleared.
    fn as_simple_radical(&self) -> Option<(i64, Vec<Complex64>, u32)> {
        match self {
            FunctionExpr::RootProduct { points, order } => {
                Some((0, points.iter().map(|p| c64(*p)).collect(), *order))
            }
            FunctionExpr::Product { children } if children.len() == 2 => {
                match (&children[0], &children[1]) {
                    (FunctionExpr::Monomial { power }, FunctionExpr::RootProduct { points, order })
                    | (FunctionExpr::RootProduct { points, order }, FunctionExpr::Monomial { power }) => {
                        Some((*power, points.iter().map(|p| c64(*p)).collect(), *order))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

/// Laurent expansion at infinity through order N (coefficients of w^k,
/// w = 1/z, for k up to N; k may start negative when the function grows).
pub fn expand_at_infinity(f: &FunctionExpr, n: i64, prec: u32) -> Result<LaurentSeries> {
    if n < 0 {
        return Err(Error::InvalidInput("expansion order must be nonnegative".into()));
    }
    f.validate()?;
    let e = f.expand_node(prec, n + 8)?;
    if e.trunc() < n {
        return Err(Error::Numerical(format!(
            "expansion resolved only through order {} of requested {n} (leading-order cancellation)",
            e.trunc()
        )));
    }
    Ok(e.truncated(n))
}

/// Branch-point groups as bare point lists.
pub fn branch_points(f: &FunctionExpr) -> Result<Vec<Vec<Complex64>>> {
    f.validate()?;
    Ok(f.branch_point_groups()?.into_iter().map(|(pts, _)| pts).collect())
}

/// Connectivity constraint the admissible sets must satisfy, derived from
/// root orders: square roots permit pairings inside their group, higher
/// orders force the whole group to be connected.
pub fn admissible_connectivity(f: &FunctionExpr) -> Result<ConnectivityConstraint> {
    f.validate()?;
    let groups = f.branch_point_groups()?;
    let mode = if groups.iter().any(|(pts, ord)| *ord == 2 && pts.len() >= 4) {
        ConnectivityMode::AtLeast
    } else {
        ConnectivityMode::Exact
    };
    let (groups, orders) = groups.into_iter().unzip();
    Ok(ConnectivityConstraint { groups, orders, mode })
}
