//! Tracing the full critical graph of a solved quadratic differential and
//! assembling it into a minimal set.
//!
//! Every star direction at every pole and zero is traced. Arcs that land on
//! another anchor are kept (after merging the two traces of the same arc);
//! zeros whose trajectories all loop back to themselves are the critical
//! points of the Green function and stay off the set.

use num_complex::Complex64 as C;

use super::{Component, MinimalSet};
use crate::geom::{point_polyline_distance, segment_segment_distance};
use crate::qdiff::trace::{trace_trajectory, ArcTermination, StopRules, TrajectoryArc};
use crate::qdiff::QuadraticDifferential;
use crate::{Error, Result};

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, a: usize) -> usize {
        if self.0[a] != a {
            let r = self.find(self.0[a]);
            self.0[a] = r;
        }
        self.0[a]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

#[derive(Clone)]
struct RawArc {
    arc: TrajectoryArc,
    a: usize,
    b: usize,
}

fn decimate(samples: &[C], cap: usize) -> Vec<C> {
    if samples.len() <= cap {
        return samples.to_vec();
    }
    let stride = samples.len().div_ceil(cap);
    let mut out: Vec<C> = samples.iter().step_by(stride).copied().collect();
    if *out.last().unwrap() != *samples.last().unwrap() {
        out.push(*samples.last().unwrap());
    }
    out
}

fn trim_ends(samples: &[C], near: &[C], radius: f64) -> Vec<C> {
    let close = |z: C| near.iter().any(|p| (z - *p).norm() <= radius);
    let mut lo = 0;
    let mut hi = samples.len();
    while lo < hi && close(samples[lo]) {
        lo += 1;
    }
    while hi > lo && close(samples[hi - 1]) {
        hi -= 1;
    }
    samples[lo..hi].to_vec()
}

fn polylines_properly_cross(a: &[C], b: &[C]) -> bool {
    if a.len() < 2 || b.len() < 2 {
        return false;
    }
    for wa in a.windows(2) {
        for wb in b.windows(2) {
            if segment_segment_distance(wa[0], wa[1], wb[0], wb[1]) == 0.0 {
                return true;
            }
        }
    }
    false
}

/// Hausdorff distance over sample vertices, orientation agnostic.
fn polyline_gap(a: &[C], b: &[C]) -> f64 {
    let d1 = a.iter().map(|&p| point_polyline_distance(p, b)).fold(0.0f64, f64::max);
    let d2 = b.iter().map(|&p| point_polyline_distance(p, a)).fold(0.0f64, f64::max);
    d1.max(d2)
}

/// Trace every critical trajectory of `q` and build the minimal set. The
/// `e0` points must be exactly the poles of q; they become the branch
/// points of the set, in the given order.
pub fn extract_minimal_set(q: &QuadraticDifferential, e0: &[C]) -> Result<MinimalSet> {
    let rules = StopRules::for_scale(q.scale());
    extract_minimal_set_with_rules(q, e0, &rules)
}

pub fn extract_minimal_set_with_rules(
    q: &QuadraticDifferential,
    e0: &[C],
    rules: &StopRules,
) -> Result<MinimalSet> {
    let scale = q.scale();

    let poles = q.poles();
    if e0.len() != poles.len()
        || e0
            .iter()
            .any(|p| poles.iter().all(|v| (v - p).norm() > 1e-6 * scale))
    {
        return Err(Error::InvalidInput(
            "anchored branch points must coincide with the poles of q".into(),
        ));
    }

    // Anchor table: branch points first (input order), then zeros.
    let mut anchor_pts: Vec<C> = e0.to_vec();
    let mut anchor_mult: Vec<i32> = vec![-1; e0.len()];
    for (z, m) in q.zeros() {
        anchor_pts.push(*z);
        anchor_mult.push(*m as i32);
    }
    let find_anchor = |p: C| -> Option<usize> {
        let mut best = (f64::INFINITY, 0usize);
        for (i, a) in anchor_pts.iter().enumerate() {
            let d = (a - p).norm();
            if d < best.0 {
                best = (d, i);
            }
        }
        (best.0 <= 1e-5 * scale.max(1.0)).then_some(best.1)
    };

    // Trace every star direction of every anchor.
    let mut raw: Vec<RawArc> = Vec::new();
    for (i, (&p, &m)) in anchor_pts.iter().zip(&anchor_mult).enumerate() {
        let _ = m;
        for theta in q.star_angles(p)? {
            let dir = C::new(0.0, theta).exp();
            let arc = trace_trajectory(q, p, dir, rules)?;
            let end = match arc.end {
                ArcTermination::Anchor(a) => a.point(),
                ArcTermination::OutOfBounds => {
                    return Err(Error::Numerical(format!(
                        "unbounded trajectory from {p}: solution rejected"
                    )));
                }
                ArcTermination::MaxLength => {
                    return Err(Error::Numerical(format!(
                        "trajectory from {p} exceeded the length budget: solution rejected"
                    )));
                }
            };
            let b = find_anchor(end).ok_or_else(|| {
                Error::Numerical(format!("trajectory from {p} ended off-anchor at {end}"))
            })?;
            raw.push(RawArc { arc, a: i, b });
        }
    }

    // Merge the two traces of each arc. Loops at one anchor merge in the
    // same way, by closeness of the whole polyline.
    let merge_tol = (8.0 * rules.launch_offset).max(4.0 * rules.max_step_z);
    let mut kept: Vec<RawArc> = Vec::new();
    let mut incidence = vec![0usize; anchor_pts.len()];
    'next: for r in raw {
        let key = (r.a.min(r.b), r.a.max(r.b));
        for k in &kept {
            if (k.a.min(k.b), k.a.max(k.b)) == key {
                let da = decimate(&k.arc.samples, 400);
                let db = decimate(&r.arc.samples, 400);
                if polyline_gap(&da, &db) < merge_tol {
                    continue 'next;
                }
            }
        }
        incidence[r.a] += 1;
        incidence[r.b] += 1;
        kept.push(r);
    }

    // Every star direction must account for exactly one arc end.
    for (i, (&p, &m)) in anchor_pts.iter().zip(&anchor_mult).enumerate() {
        let expected = if m < 0 { 1 } else { m as usize + 2 };
        if incidence[i] != expected {
            return Err(Error::Numerical(format!(
                "invalid trajectory topology: {} arc ends at {p}, expected {expected}",
                incidence[i]
            )));
        }
    }

    // Classify zeros: all-loop zeros are Green-critical points.
    let zero_range = e0.len()..anchor_pts.len();
    let mut is_green = vec![false; anchor_pts.len()];
    for i in zero_range.clone() {
        let mine: Vec<&RawArc> = kept.iter().filter(|r| r.a == i || r.b == i).collect();
        let loops = mine.iter().filter(|r| r.a == r.b).count();
        if loops == mine.len() {
            let m = anchor_mult[i];
            if m % 2 != 0 {
                return Err(Error::Numerical(format!(
                    "invalid trajectory topology: odd-order zero at {} lies off the set",
                    anchor_pts[i]
                )));
            }
            is_green[i] = true;
        } else if loops > 0 {
            return Err(Error::Numerical(format!(
                "invalid trajectory topology: mixed loop and open arcs at {}",
                anchor_pts[i]
            )));
        }
    }

    // Arcs of the set: open arcs between anchors on the set.
    let mut arcs: Vec<TrajectoryArc> = Vec::new();
    let mut arc_ends: Vec<(usize, usize)> = Vec::new();
    for r in &kept {
        if r.a != r.b {
            if is_green[r.a] || is_green[r.b] {
                return Err(Error::Numerical(
                    "invalid trajectory topology: open arc touches a Green-critical point".into(),
                ));
            }
            arcs.push(r.arc.clone());
            arc_ends.push((r.a, r.b));
        }
    }

    // Pairwise disjointness away from shared anchors.
    let trim = 0.03 * scale.max(1e-8);
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            let shared: Vec<C> = anchor_pts
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let (a1, b1) = arc_ends[i];
                    let (a2, b2) = arc_ends[j];
                    (*k == a1 || *k == b1) && (*k == a2 || *k == b2)
                })
                .map(|(_, &p)| p)
                .collect();
            let ta = trim_ends(&decimate(&arcs[i].samples, 300), &shared, trim);
            let tb = trim_ends(&decimate(&arcs[j].samples, 300), &shared, trim);
            if polylines_properly_cross(&ta, &tb) {
                return Err(Error::Numerical(
                    "invalid trajectory topology: arcs intersect away from their anchors".into(),
                ));
            }
        }
    }

    // Connected components over the on-set anchors.
    let mut dsu = Dsu::new(anchor_pts.len());
    for &(a, b) in &arc_ends {
        dsu.union(a, b);
    }

    let mut e0_out: Vec<(C, u32)> = Vec::new();
    for i in 0..e0.len() {
        e0_out.push((anchor_pts[i], incidence[i] as u32));
    }
    let mut e1_out: Vec<(C, u32)> = Vec::new();
    let mut e2_out: Vec<(C, u32)> = Vec::new();
    let mut e1_index = vec![usize::MAX; anchor_pts.len()];
    for i in zero_range {
        if is_green[i] {
            e2_out.push((anchor_pts[i], anchor_mult[i] as u32 / 2));
        } else {
            if incidence[i] < 3 {
                return Err(Error::Numerical(format!(
                    "invalid trajectory topology: bifurcation point {} has fewer than 3 arcs",
                    anchor_pts[i]
                )));
            }
            e1_index[i] = e1_out.len();
            e1_out.push((anchor_pts[i], incidence[i] as u32));
        }
    }

    let mut roots: Vec<usize> = Vec::new();
    let mut components: Vec<Component> = Vec::new();
    let mut comp_of_root = std::collections::HashMap::new();
    for i in 0..e0.len() {
        let r = dsu.find(i);
        if !comp_of_root.contains_key(&r) {
            comp_of_root.insert(r, components.len());
            roots.push(r);
            components.push(Component::default());
        }
        components[comp_of_root[&r]].e0.push(i);
    }
    for (i, &idx) in e1_index.iter().enumerate() {
        if idx != usize::MAX {
            let r = dsu.find(i);
            let Some(&c) = comp_of_root.get(&r) else {
                return Err(Error::Numerical(
                    "invalid trajectory topology: bifurcation point in a component without branch points"
                        .into(),
                ));
            };
            components[c].e1.push(idx);
        }
    }
    for (k, &(a, _)) in arc_ends.iter().enumerate() {
        let r = dsu.find(a);
        components[comp_of_root[&r]].arcs.push(k);
    }
    for c in &components {
        if c.e0.len() < 2 {
            return Err(Error::Numerical(
                "invalid trajectory topology: a component holds fewer than two branch points".into(),
            ));
        }
    }

    Ok(MinimalSet { e0: e0_out, e1: e1_out, e2: e2_out, arcs, components })
}

/// Largest deviation of the consecutive angular gaps between the arcs
/// departing `at` from the regular-star value 2π/k.
pub fn star_regularity_deviation(set: &MinimalSet, at: C) -> Result<f64> {
    let scale = set.scale();
    let tol = 1e-6 * scale;
    let mut angles: Vec<f64> = Vec::new();
    for arc in &set.arcs {
        let s = &arc.samples;
        if s.len() < 2 {
            continue;
        }
        if (s[0] - at).norm() <= tol {
            let d = s[1] - s[0];
            angles.push(d.im.atan2(d.re));
        }
        if (s[s.len() - 1] - at).norm() <= tol {
            let d = s[s.len() - 2] - s[s.len() - 1];
            angles.push(d.im.atan2(d.re));
        }
    }
    if angles.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "fewer than two arcs depart from {at}"
        )));
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = angles.len();
    let want = std::f64::consts::TAU / k as f64;
    let mut worst = 0.0f64;
    for i in 0..k {
        let gap = if i + 1 < k {
            angles[i + 1] - angles[i]
        } else {
            angles[0] + std::f64::consts::TAU - angles[k - 1]
        };
        worst = worst.max((gap - want).abs());
    }
    Ok(worst)
}

/// Largest pre-snap distance from a traced endpoint to its anchor, the
/// shooting certificate of a solved configuration.
pub fn max_end_snap_distance(set: &MinimalSet) -> f64 {
    set.arcs.iter().map(|a| a.end_snap_distance).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::unit_circle_points;
    use crate::geom::collinearity_deviation;
    use crate::qdiff::build_q;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn two_point_set_is_one_segment() {
        let e0 = [c(-1.0, 0.0), c(1.0, 0.0)];
        let q = build_q(&[(e0[0], 1), (e0[1], 1)], &[], &[]).unwrap();
        let set = extract_minimal_set(&q, &e0).unwrap();
        assert_eq!(set.arcs.len(), 1);
        assert!(set.e1.is_empty() && set.e2.is_empty());
        assert_eq!(set.components.len(), 1);
        assert_eq!(set.e0[0].1, 1);
        let worst_im = set.arcs[0]
            .samples
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0f64, f64::max);
        assert!(worst_im < 1e-8, "arc leaves the real axis by {worst_im}");
        let ends = [set.arcs[0].samples[0], *set.arcs[0].samples.last().unwrap()];
        assert!(ends.contains(&e0[0]) && ends.contains(&e0[1]));
    }

    #[test]
    fn symmetric_four_point_set_has_five_arcs_and_two_bifurcations() {
        let phi = std::f64::consts::PI / 6.0;
        let e0 = unit_circle_points(phi);
        let z5 = 0.2315310845f64.sqrt();
        let q = build_q(
            &e0.iter().map(|&p| (p, 1)).collect::<Vec<_>>(),
            &[(c(z5, 0.0), 3), (c(-z5, 0.0), 3)],
            &[],
        )
        .unwrap();
        let set = extract_minimal_set(&q, &e0).unwrap();
        assert_eq!(set.arcs.len(), 5);
        assert_eq!(set.e1.len(), 2);
        assert!(set.e2.is_empty());
        assert_eq!(set.components.len(), 1);
        for &(_, i) in &set.e1 {
            assert_eq!(i, 3);
        }
        let dev = star_regularity_deviation(&set, c(z5, 0.0)).unwrap();
        assert!(dev < 1e-3, "star gaps deviate by {dev} rad");
        assert!(max_end_snap_distance(&set) < 1e-5);
    }

    #[test]
    fn paired_square_root_set_has_two_components_and_a_green_point() {
        let phi = std::f64::consts::PI / 6.0;
        let e0 = unit_circle_points(phi);
        let q = build_q(
            &e0.iter().map(|&p| (p, 1)).collect::<Vec<_>>(),
            &[],
            &[(c(0.0, 0.0), 1)],
        )
        .unwrap();
        let set = extract_minimal_set(&q, &e0).unwrap();
        assert_eq!(set.arcs.len(), 2);
        assert!(set.e1.is_empty());
        assert_eq!(set.e2.len(), 1);
        assert_eq!(set.e2[0].1, 1);
        assert!(set.e2[0].0.norm() < 1e-12);
        assert_eq!(set.components.len(), 2);
        for comp in &set.components {
            assert_eq!(comp.e0.len(), 2);
            assert_eq!(comp.arcs.len(), 1);
        }
    }

    #[test]
    fn squared_pairing_arcs_are_straight_segments() {
        // Under w = z² the paired arcs must map onto straight chords.
        let phi = std::f64::consts::PI / 6.0;
        let e0 = unit_circle_points(phi);
        let q = build_q(
            &e0.iter().map(|&p| (p, 1)).collect::<Vec<_>>(),
            &[],
            &[(c(0.0, 0.0), 1)],
        )
        .unwrap();
        let set = extract_minimal_set(&q, &e0).unwrap();
        for arc in &set.arcs {
            let squared: Vec<C> = arc.samples.iter().map(|z| z * z).collect();
            let (dev, extent) = collinearity_deviation(&squared);
            assert!(dev < 1e-5 * extent, "deviation {dev} vs extent {extent}");
        }
    }

    #[test]
    fn wrong_zero_positions_are_rejected() {
        let phi = std::f64::consts::PI / 6.0;
        let e0 = unit_circle_points(phi);
        let z5 = 0.75f64;
        let q = build_q(
            &e0.iter().map(|&p| (p, 1)).collect::<Vec<_>>(),
            &[(c(z5, 0.0), 3), (c(-z5, 0.0), 3)],
            &[],
        )
        .unwrap();
        assert!(extract_minimal_set(&q, &e0).is_err());
    }

    #[test]
    fn branch_points_must_match_the_poles() {
        let q = build_q(&[(c(-1.0, 0.0), 1), (c(1.0, 0.0), 1)], &[], &[]).unwrap();
        let err = extract_minimal_set(&q, &[c(-1.0, 0.0), c(2.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
