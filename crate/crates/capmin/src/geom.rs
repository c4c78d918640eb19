//! Planar geometry helpers shared by the tracing, capacity and check code.
//!
//! Complex numbers double as 2-vectors throughout; all distances are
//! Euclidean in the z-plane.

use num_complex::Complex64;

pub type C = Complex64;

/// Cross product (o->a) x (o->b); positive when a->b turns counterclockwise.
pub fn cross(o: C, a: C, b: C) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull by monotone chain, counterclockwise, no repeated last point.
///
/// Collinear input collapses to the two extreme points; a single point
/// returns itself.
pub fn convex_hull(points: &[C]) -> Vec<C> {
    let mut pts: Vec<C> = points.to_vec();
    pts.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    pts.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    if pts.len() <= 2 {
        return pts;
    }
    let chain = |iter: &mut dyn Iterator<Item = C>| {
        let mut out: Vec<C> = Vec::new();
        for p in iter {
            while out.len() >= 2 && cross(out[out.len() - 2], out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(p);
        }
        out
    };
    let mut lower = chain(&mut pts.iter().copied());
    let upper = chain(&mut pts.iter().rev().copied());
    lower.pop();
    let mut hull = lower;
    hull.extend_from_slice(&upper[..upper.len() - 1]);
    hull
}

/// Distance from a point to a line segment.
pub fn point_segment_distance(p: C, a: C, b: C) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Signed distance from a point to a convex hull: negative inside, positive
/// outside. Degenerate hulls (point, segment) give the plain distance.
pub fn hull_signed_distance(hull: &[C], p: C) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => (p - hull[0]).norm(),
        2 => point_segment_distance(p, hull[0], hull[1]),
        n => {
            let mut inside = true;
            let mut max_inside = f64::NEG_INFINITY;
            let mut min_outside = f64::INFINITY;
            for i in 0..n {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                let c = cross(a, b, p);
                let edge = (b - a).norm();
                let signed = if edge > 0.0 { c / edge } else { 0.0 };
                if signed < 0.0 {
                    inside = false;
                }
                max_inside = max_inside.max(-signed);
                let d = point_segment_distance(p, a, b);
                min_outside = min_outside.min(d);
            }
            if inside {
                // Interior: negative distance to the nearest edge.
                -hull
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| point_segment_distance(p, a, hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            } else {
                min_outside
            }
        }
    }
}

/// Total length of a polyline.
pub fn polyline_length(poly: &[C]) -> f64 {
    poly.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Point on a polyline at arclength `s` from its start (clamped to the ends).
pub fn polyline_at(poly: &[C], s: f64) -> C {
    if poly.is_empty() {
        return C::new(f64::NAN, f64::NAN);
    }
    if s <= 0.0 {
        return poly[0];
    }
    let mut acc = 0.0;
    for w in poly.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if acc + seg >= s {
            if seg == 0.0 {
                return w[0];
            }
            return w[0] + (w[1] - w[0]) * ((s - acc) / seg);
        }
        acc += seg;
    }
    *poly.last().unwrap()
}

/// Unit tangent of a polyline at arclength `s` (direction of the segment
/// containing that arclength).
pub fn polyline_tangent_at(poly: &[C], s: f64) -> C {
    let mut acc = 0.0;
    let mut last = C::new(1.0, 0.0);
    for w in poly.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if seg > 0.0 {
            last = (w[1] - w[0]) / seg;
        }
        if acc + seg >= s {
            return last;
        }
        acc += seg;
    }
    last
}

/// Distance from a point to a polyline.
pub fn point_polyline_distance(p: C, poly: &[C]) -> f64 {
    if poly.len() == 1 {
        return (p - poly[0]).norm();
    }
    poly.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Directed Hausdorff distance: max over `a`'s samples of the distance to the
/// polyline `b`.
pub fn directed_hausdorff(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .map(|&p| point_polyline_distance(p, b))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines.
pub fn hausdorff(a: &[C], b: &[C]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Largest pairwise distance in a point cloud.
pub fn diameter(points: &[C]) -> f64 {
    let hull = convex_hull(points);
    let pts = if hull.len() >= 2 { hull } else { points.to_vec() };
    let mut best = 0.0_f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max((pts[i] - pts[j]).norm());
        }
    }
    best
}

/// Best-fit line deviation: returns (max orthogonal deviation, extent along
/// the fitted direction). The line passes through the centroid along the
/// principal axis of the point cloud.
pub fn collinearity_deviation(points: &[C]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        return (0.0, 0.0);
    }
    let centroid = points.iter().sum::<C>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &p in points {
        let d = p - centroid;
        sxx += d.re * d.re;
        sxy += d.re * d.im;
        syy += d.im * d.im;
    }
    // Principal eigenvector of the 2x2 scatter matrix.
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let lam = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
    let dir = if sxy.abs() > 1e-300 {
        C::new(lam - syy, sxy)
    } else if sxx >= syy {
        C::new(1.0, 0.0)
    } else {
        C::new(0.0, 1.0)
    };
    let dir = dir / dir.norm();
    let mut max_dev = 0.0_f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in points {
        let d = p - centroid;
        let along = d.re * dir.re + d.im * dir.im;
        let across = (d.re * dir.im - d.im * dir.re).abs();
        max_dev = max_dev.max(across);
        lo = lo.min(along);
        hi = hi.max(along);
    }
    (max_dev, hi - lo)
}

/// Minimum distance between two segments a0-a1 and b0-b1.
pub fn segment_segment_distance(a0: C, a1: C, b0: C, b1: C) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

pub fn segments_intersect(a0: C, a1: C, b0: C, b1: C) -> bool {
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Minimum distance between two polylines (0 if they cross).
pub fn polyline_polyline_distance(a: &[C], b: &[C]) -> f64 {
    let mut best = f64::INFINITY;
    if a.len() == 1 || b.len() == 1 {
        return if a.len() == 1 {
            point_polyline_distance(a[0], b)
        } else {
            point_polyline_distance(b[0], a)
        };
    }
    for wa in a.windows(2) {
        for wb in b.windows(2) {
            best = best.min(segment_segment_distance(wa[0], wa[1], wb[0], wb[1]));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn hull_of_square_is_square() {
        let pts = [c(0., 0.), c(1., 0.), c(1., 1.), c(0., 1.), c(0.5, 0.5)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(hull.iter().all(|p| (p.re == 0.0 || p.re == 1.0) && (p.im == 0.0 || p.im == 1.0)));
    }

    #[test]
    fn hull_of_collinear_points_is_segment() {
        let pts = [c(-1., 0.), c(0.3, 0.), c(1., 0.), c(-0.2, 0.)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 2);
        assert_eq!(hull[0], c(-1., 0.));
        assert_eq!(hull[1], c(1., 0.));
    }

    #[test]
    fn signed_distance_sign_convention() {
        let hull = convex_hull(&[c(0., 0.), c(2., 0.), c(2., 2.), c(0., 2.)]);
        assert!(hull_signed_distance(&hull, c(1., 1.)) < 0.0);
        assert!(hull_signed_distance(&hull, c(3., 1.)) > 0.9);
        assert!(hull_signed_distance(&hull, c(1., 0.)).abs() < 1e-15);
    }

    #[test]
    fn polyline_interpolation_walks_arclength() {
        let poly = [c(0., 0.), c(1., 0.), c(1., 1.)];
        assert_eq!(polyline_length(&poly), 2.0);
        assert_eq!(polyline_at(&poly, 0.5), c(0.5, 0.));
        assert_eq!(polyline_at(&poly, 1.5), c(1., 0.5));
        assert_eq!(polyline_at(&poly, 9.0), c(1., 1.));
    }

    #[test]
    fn hausdorff_between_shifted_segments() {
        let a = [c(0., 0.), c(1., 0.)];
        let b = [c(0., 0.1), c(1., 0.1)];
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn collinearity_of_exact_line_is_zero() {
        let pts: Vec<C> = (0..20).map(|k| c(k as f64 * 0.1, 1.0 + k as f64 * 0.05)).collect();
        let (dev, extent) = collinearity_deviation(&pts);
        assert!(dev < 1e-14, "dev = {dev}");
        assert!(extent > 1.0);
    }

    #[test]
    fn collinearity_detects_bend() {
        let mut pts: Vec<C> = (0..20).map(|k| c(k as f64 * 0.1, 0.0)).collect();
        pts[10] = c(1.0, 0.2);
        let (dev, _) = collinearity_deviation(&pts);
        assert!(dev > 0.1);
    }

    #[test]
    fn crossing_segments_have_zero_distance() {
        assert_eq!(
            segment_segment_distance(c(-1., -1.), c(1., 1.), c(-1., 1.), c(1., -1.)),
            0.0
        );
        let d = segment_segment_distance(c(0., 0.), c(1., 0.), c(0., 1.), c(1., 1.));
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diameter_of_unit_square() {
        let pts = [c(0., 0.), c(1., 0.), c(1., 1.), c(0., 1.)];
        assert!((diameter(&pts) - 2f64.sqrt()).abs() < 1e-15);
    }
}
