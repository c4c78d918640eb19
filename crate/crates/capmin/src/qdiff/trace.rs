//! Critical-trajectory tracing for rational quadratic differentials.
//!
//! The ODE dz/ds = ±i/√q(z) is integrated with a Dormand-Prince 5(4) pair.
//! The parameter s is the q-length ∫|√q||dz|, so the reported cumulative
//! length is just the elapsed parameter. The square-root branch is continued
//! step by step: every stage compares q's phase against the step start and
//! the step is rejected if the phase turns by π/2 or more, which keeps the
//! sign continuation unambiguous.

use num_complex::Complex64 as C;

use super::QuadraticDifferential;
use crate::quad::adaptive_gk15;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    Pole { point: C },
    Zero { point: C, mult: u32 },
}

impl Anchor {
    pub fn point(&self) -> C {
        match self {
            Anchor::Pole { point } => *point,
            Anchor::Zero { point, .. } => *point,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcTermination {
    Anchor(Anchor),
    MaxLength,
    OutOfBounds,
}

#[derive(Debug, Clone)]
pub struct TrajectoryArc {
    pub samples: Vec<C>,
    pub start: Option<Anchor>,
    pub end: ArcTermination,
    /// ∫|√q||dz| along the arc.
    pub q_length: f64,
    /// Distance from the last integrated point to the end anchor before
    /// snapping (0 when the arc did not end on an anchor).
    pub end_snap_distance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct StopRules {
    pub max_length: f64,
    pub anchor_radius: f64,
    /// Bounding box (lower-left, upper-right).
    pub bounds: (C, C),
    pub max_step_z: f64,
    pub rtol: f64,
    pub launch_offset: f64,
}

impl StopRules {
    pub fn for_scale(scale: f64) -> Self {
        let s = scale.max(1e-8);
        StopRules {
            max_length: 40.0 * s,
            anchor_radius: 1e-6 * s,
            bounds: (C::new(-8.0 * s, -8.0 * s), C::new(8.0 * s, 8.0 * s)),
            max_step_z: 1e-3 * s,
            rtol: 1e-10,
            launch_offset: 1e-4 * s,
        }
    }
}

/// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Field<'a> {
    q: &'a QuadraticDifferential,
    sign: f64,
}

impl Field<'_> {
    /// Velocity at z with the root chosen nearest to w_ref; also reports the
    /// phase-consistency of q against q_ref.
    fn eval(&self, z: C, w_ref: C, q_ref: C) -> Option<(C, C)> {
        let qv = self.q.eval(z);
        if !(qv.re.is_finite() && qv.im.is_finite()) || qv.norm() == 0.0 {
            return None;
        }
        if (qv / q_ref).re <= 0.0 {
            return None;
        }
        let mut w = qv.sqrt();
        if (w - w_ref).norm() > (w + w_ref).norm() {
            w = -w;
        }
        Some((C::new(0.0, self.sign) / w, w))
    }
}

fn in_bounds(z: C, bounds: (C, C)) -> bool {
    z.re >= bounds.0.re && z.re <= bounds.1.re && z.im >= bounds.0.im && z.im <= bounds.1.im
}

/// q-length of the straight launch segment from an anchor, with the
/// endpoint singularity flattened by the t² substitution.
fn launch_q_length(q: &QuadraticDifferential, anchor: C, tip: C) -> Result<f64> {
    let d = tip - anchor;
    if d.norm() == 0.0 {
        return Ok(0.0);
    }
    let (v, _) = adaptive_gk15(
        |t| {
            // Offset evaluation keeps z - anchor = d t² exact; forming z first
            // and subtracting inside eval() loses every digit once d t² drops
            // below the spacing of f64 around the anchor.
            let qv = q.eval_at_offset(anchor, d * (t * t));
            C::new(qv.norm().sqrt() * 2.0 * t * d.norm(), 0.0)
        },
        0.0,
        1.0,
        1e-9,
        1e-12,
        2000,
    )?;
    Ok(v.re)
}

/// Ends an arc on a zero of q. A trajectory reaches a zero along a straight
/// star ray, but the computed tail misses by the transverse error and starts
/// a saddle turn that would break the tangent condition at the final
/// interior samples, so trailing samples near the anchor are dropped and the
/// arc is closed along the asymptote. The trim radius grows with the miss
/// so that the closing chord stays aligned with the ray.
#[allow(clippy::too_many_arguments)]
fn finish_at_zero(
    q: &QuadraticDifferential,
    rules: &StopRules,
    mut samples: Vec<C>,
    mut cum: Vec<f64>,
    a_pt: C,
    mult: u32,
    presnap: f64,
    start_anchor: Option<Anchor>,
) -> Result<TrajectoryArc> {
    let trim = (128.0 * rules.anchor_radius)
        .min(0.5 * rules.max_step_z)
        .max(200.0 * presnap);
    while samples.len() > 2 && (*samples.last().unwrap() - a_pt).norm() <= trim {
        samples.pop();
        cum.pop();
    }
    let z = *samples.last().unwrap();
    let mut q_len = *cum.last().unwrap();
    q_len += launch_q_length(q, a_pt, z)?;
    samples.push(a_pt);
    Ok(TrajectoryArc {
        samples,
        start: start_anchor,
        end: ArcTermination::Anchor(Anchor::Zero { point: a_pt, mult }),
        q_length: q_len,
        end_snap_distance: presnap,
    })
}

struct SaddleApproach {
    point: C,
    min_d: f64,
    min_idx: usize,
}

/// Trace one trajectory from `start` in `initial_direction`. A start on a
/// pole/zero (within 10⁻⁹ × scale) is launched from a small offset along
/// the given direction, which should be one of the star directions.
pub fn trace_trajectory(
    q: &QuadraticDifferential,
    start: C,
    initial_direction: C,
    rules: &StopRules,
) -> Result<TrajectoryArc> {
    let scale = q.scale();
    let dir = initial_direction / initial_direction.norm();
    if !(dir.re.is_finite() && dir.im.is_finite()) {
        return Err(Error::InvalidInput("initial direction must be a nonzero vector".into()));
    }

    let (d_start, anchor_pt, anchor_m) = q.nearest_singularity(start);
    let start_anchor = if d_start <= 1e-9 * scale.max(1.0) {
        Some(if anchor_m < 0 {
            Anchor::Pole { point: anchor_pt }
        } else {
            Anchor::Zero { point: anchor_pt, mult: anchor_m as u32 }
        })
    } else {
        None
    };

    let mut samples: Vec<C> = Vec::new();
    // Cumulative q-length at each sample, so trailing samples can be dropped
    // (with their length contribution) when an end snap replaces them.
    let mut cum: Vec<f64> = Vec::new();
    let mut q_len = 0.0;
    let mut z;
    match start_anchor {
        Some(a) => {
            samples.push(a.point());
            cum.push(0.0);
            // Second-order launch: the trajectory leaves a singular anchor
            // along its star ray bent by the log-derivative of q's regular
            // part. A straight-ray launch sits ~|ζ|² off the trajectory,
            // which the next saddle amplifies into a miss of ~|ζ|^(4/3).
            let tol = 1e-9 * scale.max(1.0);
            let (_, m) = q.local_coefficient(a.point(), tol);
            let a1 = q.local_log_derivative(a.point(), tol);
            let zeta = dir * rules.launch_offset;
            z = a.point() + zeta - zeta * zeta * (a1 / (m as f64 + 4.0));
            q_len += launch_q_length(q, a.point(), z)?;
        }
        None => {
            z = start;
        }
    }
    samples.push(z);
    cum.push(q_len);

    let q0 = q.eval(z);
    if q0.norm() == 0.0 {
        return Err(Error::InvalidInput(format!("trace start {z} sits on a zero of q")));
    }
    let mut w = q0.sqrt();
    if w.re.abs() <= f64::EPSILON * w.im.abs() && w.im < 0.0 {
        w = -w;
    }
    let sign = if ((C::new(0.0, 1.0) / w) * dir.conj()).re >= 0.0 { 1.0 } else { -1.0 };
    let field = Field { q, sign };

    let mut q_here = q0;
    let mut travelled = 0.0f64;
    let min_travel = 4.0 * rules.launch_offset;
    let underflow = 1e-15 * scale;
    let atol = rules.rtol * scale;

    // Initial s-step sized from the local speed.
    let (mut dist, _, _) = q.nearest_singularity(z);
    let mut h = (rules.max_step_z.min(dist / 16.0)).max(underflow) * w.norm() * 0.5;

    // A trajectory heading into a zero is a saddle connection: the tiniest
    // transverse error makes the computed path turn around the zero and
    // continue instead of stopping. Track the closest approach to the
    // nearest zero and treat a clear turn-away as arrival.
    let saddle_window = (1e-3 * scale).max(16.0 * rules.anchor_radius);
    let mut saddle: Option<SaddleApproach> = None;

    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > 400_000 {
            return Err(Error::Numerical(format!("trajectory exceeded step budget near {z}")));
        }

        let (d_near, _, _) = q.nearest_singularity(z);
        dist = d_near;
        let h_z_allow = rules.max_step_z.min(dist / 16.0);
        let h_max_s = h_z_allow * w.norm();
        if h > h_max_s {
            h = h_max_s;
        }
        if h / w.norm() < underflow {
            return Err(Error::Numerical(format!(
                "step-size underflow near unresolved singularity; last point {z}"
            )));
        }

        // One DP54 attempt.
        let mut k = [C::new(0.0, 0.0); 7];
        k[0] = C::new(0.0, sign) / w;
        let mut failed = false;
        for stage in 0..6 {
            let mut zi = z;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                zi += *kj * (h * A[stage][j]);
            }
            match field.eval(zi, w, q_here) {
                Some((v, _)) => k[stage + 1] = v,
                None => {
                    failed = true;
                    break;
                }
            }
        }
        if !failed {
            let z_new = z
                + (k[0] * A[5][0] + k[2] * A[5][2] + k[3] * A[5][3] + k[4] * A[5][4] + k[5] * A[5][5])
                    * h;
            let err = (k[0] * ERR[0]
                + k[2] * ERR[2]
                + k[3] * ERR[3]
                + k[4] * ERR[4]
                + k[5] * ERR[5]
                + k[6] * ERR[6])
                .norm()
                * h;
            let tol = atol + rules.rtol * z_new.norm();
            let step_z = (z_new - z).norm();
            if err <= tol && step_z <= 1.25 * h_z_allow {
                if let Some((_, w_new)) = field.eval(z_new, w, q_here) {
                    // w_new was already computed as stage 7 at z_new; commit.
                    z = z_new;
                    w = w_new;
                    q_here = q.eval(z);
                    q_len += h;
                    travelled += step_z;
                    samples.push(z);
                    cum.push(q_len);

                    let grow = 0.9 * (tol / err.max(1e-300)).powf(0.2);
                    h *= grow.clamp(0.2, 5.0);

                    // Stop checks.
                    let (d_a, a_pt, a_m) = q.nearest_singularity(z);
                    let is_start = start_anchor
                        .map(|a| (a.point() - a_pt).norm() <= 1e-12 * scale)
                        .unwrap_or(false);
                    if d_a <= rules.anchor_radius && (!is_start || travelled >= min_travel) {
                        if a_m >= 0 {
                            return finish_at_zero(
                                q,
                                rules,
                                samples,
                                cum,
                                a_pt,
                                a_m as u32,
                                d_a,
                                start_anchor,
                            );
                        }
                        q_len += launch_q_length(q, a_pt, z)?;
                        samples.push(a_pt);
                        return Ok(TrajectoryArc {
                            samples,
                            start: start_anchor,
                            end: ArcTermination::Anchor(Anchor::Pole { point: a_pt }),
                            q_length: q_len,
                            end_snap_distance: d_a,
                        });
                    }
                    if a_m >= 1
                        && d_a <= saddle_window
                        && (!is_start || travelled >= 2.0 * saddle_window.max(min_travel))
                    {
                        match &mut saddle {
                            Some(s) if (s.point - a_pt).norm() <= 1e-12 * scale => {
                                if d_a < s.min_d {
                                    s.min_d = d_a;
                                    s.min_idx = samples.len() - 1;
                                } else if d_a > 3.0 * s.min_d && s.min_d < saddle_window / 8.0 {
                                    samples.truncate(s.min_idx + 1);
                                    cum.truncate(s.min_idx + 1);
                                    return finish_at_zero(
                                        q,
                                        rules,
                                        samples,
                                        cum,
                                        s.point,
                                        a_m as u32,
                                        s.min_d,
                                        start_anchor,
                                    );
                                }
                            }
                            _ => {
                                saddle = Some(SaddleApproach {
                                    point: a_pt,
                                    min_d: d_a,
                                    min_idx: samples.len() - 1,
                                });
                            }
                        }
                    } else {
                        saddle = None;
                    }
                    if q_len >= rules.max_length {
                        return Ok(TrajectoryArc {
                            samples,
                            start: start_anchor,
                            end: ArcTermination::MaxLength,
                            q_length: q_len,
                            end_snap_distance: 0.0,
                        });
                    }
                    if !in_bounds(z, rules.bounds) {
                        return Ok(TrajectoryArc {
                            samples,
                            start: start_anchor,
                            end: ArcTermination::OutOfBounds,
                            q_length: q_len,
                            end_snap_distance: 0.0,
                        });
                    }
                    continue;
                }
                failed = true;
            }
            if !failed {
                // Error too large: shrink and retry.
                let shrink = 0.9 * (tol / err.max(1e-300)).powf(0.2);
                h *= shrink.clamp(0.1, 0.9);
                continue;
            }
        }
        // A stage failed the phase guard; halve the step.
        h *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdiff::build_q;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn two_point_q() -> QuadraticDifferential {
        build_q(&[(c(-1.0, 0.0), 1), (c(1.0, 0.0), 1)], &[], &[]).unwrap()
    }

    fn tangent_invariant_max(q: &QuadraticDifferential, samples: &[C]) -> f64 {
        let mut worst = 0.0f64;
        for i in 1..samples.len().saturating_sub(1) {
            let t = samples[i + 1] - samples[i - 1];
            if t.norm() == 0.0 {
                continue;
            }
            let qv = q.eval(samples[i]);
            let w = qv.sqrt();
            let v = (w * t).re.powi(2) / (qv.norm() * t.norm_sqr());
            worst = worst.max(v);
        }
        worst
    }

    #[test]
    fn regular_start_reaches_the_pole() {
        let q = two_point_q();
        let rules = StopRules::for_scale(1.0);
        let arc = trace_trajectory(&q, c(0.0, 0.0), c(1.0, 0.0), &rules).unwrap();
        match arc.end {
            ArcTermination::Anchor(Anchor::Pole { point }) => {
                assert!((point - c(1.0, 0.0)).norm() < 1e-12);
            }
            other => panic!("expected pole end, got {other:?}"),
        }
        assert!(arc.end_snap_distance <= rules.anchor_radius);
        for s in &arc.samples {
            assert!(s.im.abs() < 1e-12, "trajectory left the real axis at {s}");
        }
    }

    #[test]
    fn pole_to_pole_arc_has_q_length_pi() {
        let q = two_point_q();
        let rules = StopRules::for_scale(1.0);
        let arc = trace_trajectory(&q, c(1.0, 0.0), c(-1.0, 0.0), &rules).unwrap();
        match arc.end {
            ArcTermination::Anchor(Anchor::Pole { point }) => {
                assert!((point - c(-1.0, 0.0)).norm() < 1e-12);
            }
            other => panic!("expected pole end, got {other:?}"),
        }
        // ∫ dx/sqrt(1-x²) over [-1,1] = π.
        assert!(
            (arc.q_length - std::f64::consts::PI).abs() < 1e-5,
            "q-length {}",
            arc.q_length
        );
        assert_eq!(arc.start, Some(Anchor::Pole { point: c(1.0, 0.0) }));
    }

    #[test]
    fn tangent_condition_holds_on_curved_arcs() {
        let q = QuadraticDifferential::new(
            vec![c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)],
            vec![(c(0.0, 0.0), 1)],
        )
        .unwrap();
        let rules = StopRules::for_scale(3.0);
        for angle in q.star_angles(c(0.0, 0.0)).unwrap() {
            let dir = C::from_polar(1.0, angle);
            let arc = trace_trajectory(&q, c(0.0, 0.0), dir, &rules).unwrap();
            assert!(arc.samples.len() > 10);
            let worst = tangent_invariant_max(&q, &arc.samples);
            assert!(worst < 1e-6, "tangent invariant {worst:.3e} at angle {angle}");
        }
    }

    #[test]
    fn closed_level_line_stops_at_max_length() {
        let q = two_point_q();
        let mut rules = StopRules::for_scale(1.0);
        rules.max_length = 2.0;
        // Off the critical trajectory the level lines are closed loops.
        let arc = trace_trajectory(&q, c(0.5, 0.5), c(1.0, 0.0), &rules).unwrap();
        assert_eq!(arc.end, ArcTermination::MaxLength);
        assert!(arc.q_length >= 2.0);
        let worst = tangent_invariant_max(&q, &arc.samples);
        assert!(worst < 1e-6, "tangent invariant {worst:.3e}");
    }

    #[test]
    fn reversal_retraces_the_segment() {
        let q = two_point_q();
        let rules = StopRules::for_scale(1.0);
        let fwd = trace_trajectory(&q, c(-1.0, 0.0), c(1.0, 0.0), &rules).unwrap();
        let bwd = trace_trajectory(&q, c(1.0, 0.0), c(-1.0, 0.0), &rules).unwrap();
        let h = crate::geom::hausdorff(&fwd.samples, &bwd.samples);
        assert!(h < 10.0 * rules.rtol * 1.0_f64.max(1.0) + 1e-9, "hausdorff {h:.3e}");
    }

    #[test]
    fn star_launches_depart_along_star_directions() {
        let q = QuadraticDifferential::new(
            vec![c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)],
            vec![(c(0.0, 0.0), 1)],
        )
        .unwrap();
        let rules = StopRules::for_scale(3.0);
        for angle in q.star_angles(c(0.0, 0.0)).unwrap() {
            let dir = C::from_polar(1.0, angle);
            let arc = trace_trajectory(&q, c(0.0, 0.0), dir, &rules).unwrap();
            // First few samples should hug the analytic ray.
            let early = arc.samples[2] - c(0.0, 0.0);
            let dev = (early.arg() - angle).sin().abs();
            assert!(dev < 5e-3, "departure angle off by {dev:.2e}");
        }
    }

    #[test]
    fn bounds_stop_is_reported() {
        // A configuration with trajectories escaping to infinity: single
        // zero of high multiplicity with far poles pushed away.
        let q = QuadraticDifferential::new(
            vec![c(30.0, 0.0), c(-30.0, 0.0), c(0.0, 30.0), c(0.0, -30.0)],
            vec![(c(0.0, 0.0), 2)],
        )
        .unwrap();
        let mut rules = StopRules::for_scale(1.0);
        rules.bounds = (c(-5.0, -5.0), c(5.0, 5.0));
        rules.max_length = 1e6;
        let angles = q.star_angles(c(0.0, 0.0)).unwrap();
        let arc = trace_trajectory(&q, c(0.0, 0.0), C::from_polar(1.0, angles[0]), &rules).unwrap();
        assert_eq!(arc.end, ArcTermination::OutOfBounds);
    }
}
