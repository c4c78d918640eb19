//! Period integrals ∫√q dz along polyline paths, with the square-root
//! branch continued along the path.
//!
//! Endpoint singularities are integrable (simple poles and zeros of any
//! order) and are flattened by the substitution z = P + (Q−P)t², which the
//! first/last segment applies at its singular end. Panels are refined left
//! to right so the branch tracker only ever moves forward along the path.

use num_complex::Complex64 as C;

use super::QuadraticDifferential;
use crate::geom::point_segment_distance;
use crate::quad::gk15;
use crate::{Error, Result};

#[derive(Clone)]
struct BranchTracker {
    w_ref: Option<C>,
    last_q: Option<C>,
    jump: bool,
    first_w: Option<C>,
    seed: Option<C>,
    evals: usize,
}

impl BranchTracker {
    fn new(seed: Option<C>) -> Self {
        BranchTracker { w_ref: None, last_q: None, jump: false, first_w: None, seed, evals: 0 }
    }

    fn eval(&mut self, q: &QuadraticDifferential, z: C) -> C {
        let qv = q.eval(z);
        if let Some(lq) = self.last_q {
            // The sign continuation is only trustworthy while the phase of q
            // turns by less than π/2 between consecutive evaluations. Written
            // negated so NaN also counts as a jump.
            let ratio = qv / lq;
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(ratio.re > 0.0) {
                self.jump = true;
            }
        }
        self.last_q = Some(qv);
        let mut w = qv.sqrt();
        // On the branch cut (q negative real) the ±0 imaginary part decides
        // the principal root; canonicalize the unseeded start to +i.
        if w.re.abs() <= f64::EPSILON * w.im.abs() && w.im < 0.0 {
            w = -w;
        }
        let reference = self.w_ref.or(self.seed);
        let chosen = match reference {
            None => w,
            Some(r) => {
                if (w - r).norm() <= (w + r).norm() {
                    w
                } else {
                    -w
                }
            }
        };
        self.w_ref = Some(chosen);
        if self.first_w.is_none() {
            self.first_w = Some(chosen);
        }
        self.evals += 1;
        chosen
    }
}

enum SegKind {
    Direct,
    SingularStart,
    SingularEnd,
}

struct Segment<'a> {
    q: &'a QuadraticDifferential,
    a: C,
    b: C,
    kind: SegKind,
}

impl Segment<'_> {
    /// Point and parameter derivative at t ∈ [0,1]; t always walks a → b.
    fn eval(&self, t: f64, tr: &mut BranchTracker) -> C {
        let (z, dz) = match self.kind {
            SegKind::Direct => (self.a + (self.b - self.a) * t, self.b - self.a),
            SegKind::SingularStart => (
                self.a + (self.b - self.a) * (t * t),
                (self.b - self.a) * (2.0 * t),
            ),
            SegKind::SingularEnd => {
                let u = 1.0 - t;
                (self.b + (self.a - self.b) * (u * u), (self.b - self.a) * (2.0 * u))
            }
        };
        tr.eval(self.q, z) * dz
    }
}

fn adaptive_panel(
    seg: &Segment,
    tr: &mut BranchTracker,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Result<C> {
    tr.jump = false;
    let saved = tr.clone();
    let (v, e) = gk15(&mut |t| seg.eval(t, tr), a, b);
    let jumped = tr.jump;
    if !jumped && e <= tol {
        return Ok(v);
    }
    if depth == 0 || tr.evals > 400_000 {
        if jumped {
            return Err(Error::Numerical(format!(
                "branch continuation ambiguity on panel [{a:.6}, {b:.6}]: refine near zero"
            )));
        }
        return Err(Error::Numerical(format!(
            "period integral failed to converge on panel [{a:.6}, {b:.6}]: error {e:.3e}"
        )));
    }
    *tr = saved;
    let mid = 0.5 * (a + b);
    let left = adaptive_panel(seg, tr, a, mid, 0.5 * tol, depth - 1)?;
    let right = adaptive_panel(seg, tr, mid, b, 0.5 * tol, depth - 1)?;
    Ok(left + right)
}

/// ∫√q dz along the polyline, branch continued from the first evaluation
/// (principal root there, or the sign closest to `seed` when given).
/// Returns the integral and the branch value at the first evaluation node,
/// which lets callers keep signs consistent across repeated calls.
pub fn period_integral_seeded(
    q: &QuadraticDifferential,
    path: &[C],
    seed: Option<C>,
) -> Result<(C, C)> {
    if path.len() < 2 {
        return Err(Error::InvalidInput("period path needs at least two vertices".into()));
    }
    let scale = q.scale();
    let snap_tol = 1e-9 * scale;
    let singular = |z: C| q.nearest_singularity(z).0 <= snap_tol;

    // Only the whole path's two endpoints may sit on a singularity.
    for (i, v) in path.iter().enumerate() {
        if i != 0 && i != path.len() - 1 && singular(*v) {
            return Err(Error::InvalidInput(format!(
                "path passes through an interior singularity at vertex {v}"
            )));
        }
    }
    for w in path.windows(2) {
        for s in q
            .poles()
            .iter()
            .copied()
            .chain(q.zeros().iter().map(|(b, _)| *b))
        {
            if (s - w[0]).norm() > snap_tol
                && (s - w[1]).norm() > snap_tol
                && point_segment_distance(s, w[0], w[1]) <= snap_tol
            {
                return Err(Error::InvalidInput(format!(
                    "path passes through an interior singularity at {s}"
                )));
            }
        }
    }

    // Expand into parameter segments, splitting any segment that has
    // singularities at both ends.
    let mut segs: Vec<(C, C, SegKind)> = Vec::new();
    for (i, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let sa = i == 0 && singular(a);
        let sb = i == path.len() - 2 && singular(b);
        match (sa, sb) {
            (false, false) => segs.push((a, b, SegKind::Direct)),
            (true, false) => segs.push((a, b, SegKind::SingularStart)),
            (false, true) => segs.push((a, b, SegKind::SingularEnd)),
            (true, true) => {
                let m = 0.5 * (a + b);
                segs.push((a, m, SegKind::SingularStart));
                segs.push((m, b, SegKind::SingularEnd));
            }
        }
    }

    let total_len: f64 = segs.iter().map(|(a, b, _)| (b - a).norm()).sum();
    let atol = 1e-13 * (1.0 + total_len / (1.0 + scale));
    let mut tr = BranchTracker::new(seed);
    let mut total = C::new(0.0, 0.0);
    for (a, b, kind) in segs {
        let seg = Segment { q, a, b, kind };
        let seg_tol = atol * ((b - a).norm() / total_len).max(1e-3);
        total += adaptive_panel(&seg, &mut tr, 0.0, 1.0, seg_tol, 46)?;
    }
    let first_w = tr.first_w.expect("at least one evaluation");
    Ok((total, first_w))
}

/// ∫√q dz along the polyline with the principal branch at the first node.
pub fn period_integral(q: &QuadraticDifferential, path: &[C]) -> Result<C> {
    period_integral_seeded(q, path, None).map(|(v, _)| v)
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

    #[test]
    fn segment_between_the_poles_gives_i_pi() {
        let q = two_point_q();
        let v = period_integral(&q, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let expect = c(0.0, std::f64::consts::PI);
        assert!((v - expect).norm() < 1e-10, "got {v}");
    }

    #[test]
    fn loop_around_all_poles_gives_two_pi_i() {
        let q = two_point_q();
        let path = [c(2.0, 2.0), c(-2.0, 2.0), c(-2.0, -2.0), c(2.0, -2.0), c(2.0, 2.0)];
        let v = period_integral(&q, &path).unwrap();
        assert!(v.re.abs() < 1e-10, "real part {v}");
        assert!((v.im.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn off_trajectory_path_has_nonzero_real_part() {
        let q = two_point_q();
        let path = [c(0.5, 0.0), c(0.5, 1.0)];
        let v = period_integral(&q, &path).unwrap();
        assert!(v.re.abs() > 1e-3, "got {v}");

        // Independent oracle: on this path z²−1 stays off the principal
        // branch cut, so the plain principal-root quadrature must agree.
        let (oracle, _) = crate::quad::adaptive_gk15(
            |y| {
                let z = c(0.5, y);
                let w = (z * z - c(1.0, 0.0)).sqrt();
                c(0.0, 1.0) / w
            },
            0.0,
            1.0,
            1e-12,
            1e-13,
            4000,
        )
        .unwrap();
        assert!((v - oracle).norm() < 1e-9, "tracked {v} vs oracle {oracle}");
    }

    #[test]
    fn interior_singularity_is_rejected() {
        let q = two_point_q();
        let err = period_integral(&q, &[c(-2.0, 0.0), c(2.0, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("interior singularity"));
    }

    #[test]
    fn seed_controls_the_overall_sign() {
        let q = two_point_q();
        let (v1, w1) = period_integral_seeded(&q, &[c(-1.0, 0.0), c(1.0, 0.0)], None).unwrap();
        let (v2, w2) = period_integral_seeded(&q, &[c(-1.0, 0.0), c(1.0, 0.0)], Some(-w1)).unwrap();
        assert!((v1 + v2).norm() < 1e-10);
        assert!((w1 + w2).norm() < 1e-12 * (1.0 + w1.norm()));
    }

    #[test]
    fn zero_crossing_panel_is_refined_not_silently_wrong() {
        // q with a simple zero near the path: branch tracking must hold the
        // analytic continuation on a path that bends around the zero.
        let q = QuadraticDifferential::new(
            vec![c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)],
            vec![(c(0.0, 0.0), 1)],
        )
        .unwrap();
        let up = period_integral(&q, &[c(-1.0, 0.3), c(1.0, 0.3)]).unwrap();
        let bent = period_integral(&q, &[c(-1.0, 0.3), c(0.0, 0.3), c(1.0, 0.3)]).unwrap();
        assert!((up - bent).norm() < 1e-9, "polyline refinement changed the value");
    }
}
