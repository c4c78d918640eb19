//! Damped least-squares iteration for the period conditions.
//!
//! The unknowns are the positions of the interior bifurcation points and of
//! the Green-critical points; the residuals are the real parts of ∫√q dz
//! along representatives of every required arc plus one connection between
//! consecutive components. The system is overdetermined but consistent at a
//! solution, so a Levenberg-Marquardt step with backtracking is used
//! throughout, with finite-difference Jacobians and deterministic jittered
//! restarts when an attempt stalls.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::topology::{Node, TreeShape};
use crate::geom::point_segment_distance;
use crate::qdiff::{build_q, period::period_integral_seeded, QuadraticDifferential};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Convergence bar on the residual ∞-norm.
    pub tol: f64,
    pub restarts: usize,
    /// Jitter radius for restarts, in absolute units.
    pub jitter: f64,
    pub rng_seed: u64,
}

impl NewtonOptions {
    pub fn for_scale(scale: f64) -> Self {
        NewtonOptions {
            max_iters: 100,
            tol: 1e-10 * scale.max(0.1),
            restarts: 8,
            jitter: 0.08 * scale,
            rng_seed: 0x5eed_cab1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub restarts_used: usize,
}

fn norm_inf(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn norm2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Minimize ||f(x)||₂ by Levenberg-Marquardt with finite-difference
/// Jacobians. Returns once the ∞-norm of the residual drops below `tol`;
/// stalled attempts are restarted from jittered copies of `x0`.
pub fn solve_least_squares(
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    if x0.is_empty() {
        let r = f(&[])?;
        let rn = norm_inf(&r);
        if rn < opts.tol {
            return Ok(NewtonOutcome { x: Vec::new(), residual_norm: rn, iterations: 0, restarts_used: 0 });
        }
        return Err(Error::Numerical(format!(
            "no unknowns to adjust but the residual is {rn:.3e}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut best: Option<NewtonOutcome> = None;

    for attempt in 0..=opts.restarts {
        let mut x: Vec<f64> = x0.to_vec();
        if attempt > 0 {
            for v in &mut x {
                *v += opts.jitter * rng.random_range(-1.0..1.0) * attempt as f64
                    / opts.restarts as f64;
            }
        }
        match lm_attempt(f, &mut x, opts) {
            Ok(out) => {
                let better = best.as_ref().map_or(true, |b| out.residual_norm < b.residual_norm);
                if better {
                    let mut out = out;
                    out.restarts_used = attempt;
                    best = Some(out);
                }
                if best.as_ref().unwrap().residual_norm < opts.tol {
                    return Ok(best.unwrap());
                }
            }
            Err(_) => continue,
        }
    }

    match best {
        Some(b) if b.residual_norm < opts.tol => Ok(b),
        Some(b) => Err(Error::Numerical(format!(
            "iteration did not converge: best residual {:.3e} after {} restarts",
            b.residual_norm, opts.restarts
        ))),
        None => Err(Error::Numerical(
            "residuals could not be evaluated at any starting point".into(),
        )),
    }
}

fn lm_attempt(
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    x: &mut Vec<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = x.len();
    let mut r = f(x)?;
    let m = r.len();
    let mut lambda = 1e-3;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        iterations += 1;
        if norm_inf(&r) < opts.tol {
            break;
        }

        let mut jac = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * (1.0 + x[k].abs());
            let saved = x[k];
            x[k] = saved + h;
            let rp = match f(x) {
                Ok(v) => v,
                Err(_) => {
                    x[k] = saved - h;
                    let rm = f(x)?;
                    x[k] = saved;
                    for i in 0..m {
                        jac[(i, k)] = (r[i] - rm[i]) / h;
                    }
                    continue;
                }
            };
            x[k] = saved;
            for i in 0..m {
                jac[(i, k)] = (rp[i] - r[i]) / h;
            }
        }

        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let r2 = norm2(&r);

        let mut accepted = false;
        for _ in 0..25 {
            let mut a = jtj.clone();
            for i in 0..n {
                let d = a[(i, i)].max(1e-12);
                a[(i, i)] += lambda * d;
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match a.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            match f(&trial) {
                Ok(rt) if norm2(&rt) < r2 => {
                    *x = trial;
                    r = rt;
                    lambda = (lambda / 3.0).max(1e-14);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            break;
        }
    }

    Ok(NewtonOutcome {
        x: x.clone(),
        residual_norm: norm_inf(&r),
        iterations,
        restarts_used: 0,
    })
}

/// A component scheduled for solving: which anchor points it joins and the
/// tree shape joining them.
#[derive(Debug, Clone)]
pub struct ComponentPlan {
    /// Positions of this component's anchor points.
    pub anchors: Vec<C>,
    pub shape: TreeShape,
}

/// The period-condition system for one candidate structure. Unknowns are
/// ordered component by component (interior vertices in local order), then
/// the Green-critical points.
pub struct PeriodSystem {
    pub components: Vec<ComponentPlan>,
    pub e2_count: usize,
    /// Branch seeds per residual row, fixed at the start of each outer
    /// iteration so finite-difference probes stay on one sign sheet.
    seeds: Vec<Option<C>>,
}

impl PeriodSystem {
    pub fn new(components: Vec<ComponentPlan>, e2_count: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("at least one component is required".into()));
        }
        for c in &components {
            c.shape.validate(c.anchors.len())?;
        }
        let rows = components.iter().map(|c| c.shape.edges.len()).sum::<usize>()
            + components.len().saturating_sub(1);
        Ok(PeriodSystem { components, e2_count, seeds: vec![None; rows] })
    }

    /// Number of complex unknowns.
    pub fn unknown_count(&self) -> usize {
        self.components.iter().map(|c| c.shape.interior_count).sum::<usize>() + self.e2_count
    }

    pub fn scale(&self) -> f64 {
        let pts: Vec<C> = self.components.iter().flat_map(|c| c.anchors.iter().copied()).collect();
        crate::problem_scale(&pts)
    }

    /// Initial guess from the tree layout and component spacing.
    pub fn initial_guess(&self) -> Vec<f64> {
        self.guess_with(super::topology::seed_interior_positions)
    }

    /// Alternative start emphasizing each tree's own local layout.
    pub fn local_guess(&self) -> Vec<f64> {
        self.guess_with(super::topology::seed_interior_positions_local)
    }

    fn guess_with(&self, seeder: fn(&[C], &super::topology::TreeShape) -> Vec<C>) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.unknown_count());
        for c in &self.components {
            for p in seeder(&c.anchors, &c.shape) {
                x.push(p.re);
                x.push(p.im);
            }
        }
        let centroids: Vec<C> = self
            .components
            .iter()
            .map(|c| c.anchors.iter().sum::<C>() / c.anchors.len() as f64)
            .collect();
        let greens = super::topology::seed_green_critical(&centroids);
        for p in greens.iter().take(self.e2_count) {
            x.push(p.re);
            x.push(p.im);
        }
        // Components sharing a centroid layout may seed fewer Green points
        // than requested; pad at the overall centroid.
        while x.len() < 2 * self.unknown_count() {
            let all = centroids.iter().sum::<C>() / centroids.len() as f64;
            x.push(all.re);
            x.push(all.im);
        }
        x
    }

    fn split(&self, x: &[f64]) -> (Vec<Vec<C>>, Vec<C>) {
        let mut it = x.chunks_exact(2).map(|c| C::new(c[0], c[1]));
        let interiors: Vec<Vec<C>> = self
            .components
            .iter()
            .map(|c| (0..c.shape.interior_count).map(|_| it.next().unwrap()).collect())
            .collect();
        let greens: Vec<C> = (0..self.e2_count).map(|_| it.next().unwrap()).collect();
        (interiors, greens)
    }

    /// Quadratic differential for the unknown vector: simple poles at the
    /// anchors, zeros of multiplicity (degree − 2) at interior vertices and
    /// multiplicity 2 at Green-critical points.
    pub fn build(&self, x: &[f64]) -> Result<QuadraticDifferential> {
        if x.len() != 2 * self.unknown_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} unknowns, got {}",
                2 * self.unknown_count(),
                x.len()
            )));
        }
        let (interiors, greens) = self.split(x);
        let mut e0 = Vec::new();
        let mut e1 = Vec::new();
        for (c, pos) in self.components.iter().zip(&interiors) {
            for p in &c.anchors {
                e0.push((*p, 1u32));
            }
            for (i, p) in pos.iter().enumerate() {
                e1.push((*p, c.shape.interior_degree(i) as u32));
            }
        }
        let e2: Vec<(C, u32)> = greens.iter().map(|&p| (p, 1u32)).collect();
        build_q(&e0, &e1, &e2)
    }

    fn vertex_position(plan: &ComponentPlan, interiors: &[C], n: Node) -> C {
        match n {
            Node::Anchor(a) => plan.anchors[a],
            Node::Interior(i) => interiors[i],
        }
    }

    /// Period residuals at x. `update_seeds` stores the branch value of each
    /// row's first quadrature node for reuse by nearby evaluations.
    pub fn residuals_seeded(&mut self, x: &[f64], update_seeds: bool) -> Result<Vec<f64>> {
        let q = self.build(x)?;
        let (interiors, _) = self.split(x);
        let mut out = Vec::with_capacity(self.seeds.len());
        let mut row = 0usize;

        for (plan, pos) in self.components.iter().zip(&interiors) {
            for (na, nb) in &plan.shape.edges {
                let a = Self::vertex_position(plan, pos, *na);
                let b = Self::vertex_position(plan, pos, *nb);
                let path = connection_path(&q, a, b);
                let (p, w) = period_integral_seeded(&q, &path, self.seeds[row])?;
                if update_seeds {
                    self.seeds[row] = Some(w);
                }
                out.push(p.re);
                row += 1;
            }
        }
        for k in 1..self.components.len() {
            let a = self.components[k - 1].anchors[0];
            let b = self.components[k].anchors[0];
            let path = connection_path(&q, a, b);
            let (p, w) = period_integral_seeded(&q, &path, self.seeds[row])?;
            if update_seeds {
                self.seeds[row] = Some(w);
            }
            out.push(p.re);
            row += 1;
        }
        Ok(out)
    }

    pub fn reset_seeds(&mut self) {
        for s in &mut self.seeds {
            *s = None;
        }
    }

    /// Solve the system from its own initial guess.
    pub fn solve(&mut self, opts: &NewtonOptions) -> Result<NewtonOutcome> {
        let x0 = self.initial_guess();
        self.solve_from(&x0, opts)
    }

    /// Solve the system from a caller-provided start.
    pub fn solve_from(&mut self, x0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome> {
        if x0.len() != 2 * self.unknown_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} start values, got {}",
                2 * self.unknown_count(),
                x0.len()
            )));
        }
        let sys = std::cell::RefCell::new(self);
        let mut f = |x: &[f64]| sys.borrow_mut().residuals_seeded(x, false);
        // Seeds are refreshed once per solve; the branch tracker keeps signs
        // consistent within each row as the unknowns move.
        {
            let mut s = sys.borrow_mut();
            s.reset_seeds();
            let _ = s.residuals_seeded(x0, true);
        }
        solve_least_squares(&mut f, x0, opts)
    }
}

/// Straight path from a to b with perpendicular detours inserted around any
/// other singularity of q that blocks the segment.
pub fn connection_path(q: &QuadraticDifferential, a: C, b: C) -> Vec<C> {
    let scale = q.scale();
    let clearance = 2e-5 * scale;
    let mut path = vec![a, b];
    for round in 1..=6 {
        let mut blocked: Option<(usize, C)> = None;
        'scan: for (i, w) in path.windows(2).enumerate() {
            for s in q.poles().iter().copied().chain(q.zeros().iter().map(|(z, _)| *z)) {
                if (s - a).norm() <= clearance || (s - b).norm() <= clearance {
                    continue;
                }
                if point_segment_distance(s, w[0], w[1]) < clearance {
                    blocked = Some((i, s));
                    break 'scan;
                }
            }
        }
        let Some((i, s)) = blocked else {
            return path;
        };
        let dir = path[i + 1] - path[i];
        let len = dir.norm();
        if len == 0.0 {
            return path;
        }
        let t = dir / len;
        // Offset sideways from the blocking singularity, growing each round.
        let detour = s + C::new(0.0, 1.0) * t * clearance * (40.0 * round as f64);
        path.insert(i + 1, detour);
    }
    path
}
