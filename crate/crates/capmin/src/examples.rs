//! Constructors for the benchmark function family used across the tests and
//! the sample problem files.

use num_complex::Complex64;

use crate::algebra::FunctionExpr;

fn pt(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// 1/√(z²−1): two branch points, a single arc, no unknowns.
pub fn two_point_sqrt() -> FunctionExpr {
    FunctionExpr::Product {
        children: vec![
            FunctionExpr::Monomial { power: -1 },
            FunctionExpr::FractionalPower {
                child: Box::new(FunctionExpr::RootProduct {
                    points: vec![[1.0, 0.0], [-1.0, 0.0]],
                    order: 2,
                }),
                num: -1,
                den: 1,
            },
        ],
    }
}

/// The four unit-circle points e^{iφ}, e^{i(π−φ)}, e^{i(π+φ)}, e^{i(2π−φ)}.
pub fn unit_circle_points(phi: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, phi),
        Complex64::from_polar(1.0, std::f64::consts::PI - phi),
        Complex64::from_polar(1.0, std::f64::consts::PI + phi),
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI - phi),
    ]
}

/// √(∏(1−z_j/z)) on the four unit-circle points: pairs of branch points may
/// connect separately.
pub fn four_point_sqrt(phi: f64) -> FunctionExpr {
    FunctionExpr::RootProduct {
        points: unit_circle_points(phi).iter().map(|&z| pt(z)).collect(),
        order: 2,
    }
}

/// ⁴√(∏(1−z_j/z)) on the same four points: all four must be connected.
pub fn four_point_quartic(phi: f64) -> FunctionExpr {
    FunctionExpr::RootProduct {
        points: unit_circle_points(phi).iter().map(|&z| pt(z)).collect(),
        order: 4,
    }
}

/// √(√(∏(1−z_j/z)) − c): adds four c-dependent branch points where the inner
/// root hits c.
pub fn nested_sqrt(phi: f64, c: Complex64) -> FunctionExpr {
    FunctionExpr::FractionalPower {
        child: Box::new(FunctionExpr::Difference {
            children: vec![four_point_sqrt(phi), FunctionExpr::Constant { value: pt(c) }],
        }),
        num: 1,
        den: 2,
    }
}

/// The two branch-point groups of the seven-point example.
pub fn seven_point_branch_points() -> ([Complex64; 4], [Complex64; 3]) {
    (
        [
            Complex64::new(1.0, 3.0),
            Complex64::new(-4.0, 2.0),
            Complex64::new(-4.0, 1.0),
            Complex64::new(0.0, 2.0),
        ],
        [Complex64::new(2.0, 2.0), Complex64::new(3.0, 4.0), Complex64::new(1.0, 4.0)],
    )
}

/// ⁴√(∏₁..₄(1−z_j/z)) + ³√(∏₅..₇(1−z_j/z)): two groups that must each be
/// fully connected, an asymmetric configuration.
pub fn seven_point_mixed() -> FunctionExpr {
    let (quartic, cubic) = seven_point_branch_points();
    FunctionExpr::Sum {
        children: vec![
            FunctionExpr::RootProduct { points: quartic.iter().map(|&z| pt(z)).collect(), order: 4 },
            FunctionExpr::RootProduct { points: cubic.iter().map(|&z| pt(z)).collect(), order: 3 },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{admissible_connectivity, branch_points, expand_at_infinity, ConnectivityMode};

    #[test]
    fn all_examples_validate() {
        for f in [
            two_point_sqrt(),
            four_point_sqrt(0.5),
            four_point_quartic(0.5),
            nested_sqrt(0.5, Complex64::new(0.4f64.sqrt(), 0.0)),
            seven_point_mixed(),
        ] {
            f.validate().unwrap();
        }
    }

    #[test]
    fn two_point_series_is_the_binomial_expansion() {
        // 1/√(z²−1) = z⁻¹ + z⁻³/2 + 3z⁻⁵/8 + ...
        let s = expand_at_infinity(&two_point_sqrt(), 6, 50).unwrap();
        assert!((s.coeff_f64(1) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((s.coeff_f64(3) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((s.coeff_f64(5) - Complex64::new(0.375, 0.0)).norm() < 1e-14);
        assert!(s.coeff_f64(2).norm() < 1e-14);
    }

    #[test]
    fn four_point_groups_follow_the_order() {
        let phi = std::f64::consts::PI / 6.0;
        let sqrt_groups = admissible_connectivity(&four_point_sqrt(phi)).unwrap();
        assert_eq!(sqrt_groups.mode, ConnectivityMode::AtLeast);
        let quartic_groups = admissible_connectivity(&four_point_quartic(phi)).unwrap();
        assert_eq!(quartic_groups.mode, ConnectivityMode::Exact);
        assert_eq!(quartic_groups.groups.len(), 1);
        assert_eq!(quartic_groups.orders, vec![4]);
    }

    #[test]
    fn nested_example_has_eight_branch_points() {
        let phi = std::f64::consts::PI / 6.0;
        let c = Complex64::new(0.4f64.sqrt(), 0.0);
        let groups = branch_points(&nested_sqrt(phi, c)).unwrap();
        let pts: Vec<Complex64> = groups.into_iter().flatten().collect();
        assert_eq!(pts.len(), 8);
        let circle = unit_circle_points(phi);
        for z in circle {
            assert!(
                pts.iter().any(|p| (p - z).norm() < 1e-9),
                "missing unit-circle point {z}"
            );
        }
    }

    #[test]
    fn seven_point_expansion_and_groups() {
        let f = seven_point_mixed();
        let s = expand_at_infinity(&f, 4, 50).unwrap();
        assert!((s.coeff_f64(0) - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        let conn = admissible_connectivity(&f).unwrap();
        assert_eq!(conn.mode, ConnectivityMode::Exact);
        assert_eq!(conn.orders, vec![4, 3]);
        assert_eq!(conn.groups[0].len(), 4);
        assert_eq!(conn.groups[1].len(), 3);
    }
}
