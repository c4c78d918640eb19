//! Solving for the unknown zeros of the quadratic differential and
//! extracting the minimal set they induce.

pub mod extract;
pub mod newton;
pub mod symmetric;
pub mod topology;

use num_complex::Complex64 as C;

use crate::algebra::{admissible_connectivity, ConnectivityConstraint, FunctionExpr};
use crate::capacity::{equilibrium, CapacityEstimate, DiscreteMeasure};
use crate::qdiff::trace::TrajectoryArc;
use crate::qdiff::QuadraticDifferential;
use crate::{Error, Result};

use self::extract::{extract_minimal_set, max_end_snap_distance};
use self::newton::{ComponentPlan, NewtonOptions, PeriodSystem};
use self::topology::{enumerate_connectivity, tree_shapes, CandidateTopology};

/// One connected component of a minimal set, given by indices into the
/// owning set's point and arc lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Component {
    pub e0: Vec<usize>,
    pub e1: Vec<usize>,
    pub arcs: Vec<usize>,
}

/// A computed minimal set: branch points E₀ with their bifurcation indices,
/// bifurcation points E₁, Green-critical points E₂ (off the set), the traced
/// arcs joining them, and the partition into connected components.
#[derive(Debug, Clone, Default)]
pub struct MinimalSet {
    pub e0: Vec<(C, u32)>,
    pub e1: Vec<(C, u32)>,
    pub e2: Vec<(C, u32)>,
    pub arcs: Vec<TrajectoryArc>,
    pub components: Vec<Component>,
}

impl MinimalSet {
    /// Largest modulus among the set's defining points, clamped away from 0.
    pub fn scale(&self) -> f64 {
        let pts: Vec<C> = self
            .e0
            .iter()
            .chain(self.e1.iter())
            .chain(self.e2.iter())
            .map(|&(p, _)| p)
            .collect();
        crate::problem_scale(&pts)
    }

    /// Arc polylines belonging to one component.
    pub fn component_polylines(&self, component: usize) -> Vec<&[C]> {
        self.components[component]
            .arcs
            .iter()
            .map(|&i| self.arcs[i].samples.as_slice())
            .collect()
    }

    /// All points of a component: its E₀ and E₁ members plus arc samples.
    pub fn component_points(&self, component: usize) -> Vec<C> {
        let comp = &self.components[component];
        let mut pts: Vec<C> = comp.e0.iter().map(|&i| self.e0[i].0).collect();
        pts.extend(comp.e1.iter().map(|&i| self.e1[i].0));
        for &a in &comp.arcs {
            pts.extend_from_slice(&self.arcs[a].samples);
        }
        pts
    }
}

/// Knobs for the structure search. `capacity_nodes` is the per-arc
/// discretization used to rank certified candidates; the winner can be
/// re-measured at any resolution afterwards.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub newton: Option<NewtonOptions>,
    pub capacity_nodes: usize,
    pub max_shape_combos: usize,
    /// Explicit starting positions for the free zeros, tried as an extra
    /// start by every candidate whose unknown count matches their number.
    /// It is an input error if no candidate can use them.
    pub seeds: Option<Vec<C>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { newton: None, capacity_nodes: 64, max_shape_combos: 64, seeds: None }
    }
}

/// A certified minimal-set solution: the quadratic differential, the traced
/// set, its equilibrium measure and capacity, and the certificates that
/// admitted it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub q: QuadraticDifferential,
    pub set: MinimalSet,
    pub measure: DiscreteMeasure,
    pub capacity: CapacityEstimate,
    /// Final ∞-norm of the period conditions.
    pub period_residual: f64,
    /// Largest gap closed when snapping traced arc ends onto their anchors.
    pub end_snap: f64,
    /// Encoding of the winning component structure.
    pub encoding: String,
    pub candidates_tried: usize,
    pub candidates_certified: usize,
}

/// The extracted components must realize exactly the partition the candidate
/// was solved for, point for point, and carry the expected number of
/// Green-critical points.
fn partition_matches(
    set: &MinimalSet,
    cand: &CandidateTopology,
    points: &[C],
    scale: f64,
) -> bool {
    if set.components.len() != cand.components.len() {
        return false;
    }
    let e2_total: usize = set.e2.iter().map(|&(_, j)| j as usize).sum();
    if e2_total != cand.e2_count {
        return false;
    }
    let tol = 1e-6 * scale;
    let mut used = vec![false; set.components.len()];
    for group in &cand.components {
        let mut found = None;
        for (ci, comp) in set.components.iter().enumerate() {
            if used[ci] || comp.e0.len() != group.len() {
                continue;
            }
            let pts: Vec<C> = comp.e0.iter().map(|&i| set.e0[i].0).collect();
            if group.iter().all(|&gi| pts.iter().any(|p| (p - points[gi]).norm() <= tol)) {
                found = Some(ci);
                break;
            }
        }
        match found {
            Some(ci) => used[ci] = true,
            None => return false,
        }
    }
    true
}

/// Finds the admissible set of minimal capacity for a connectivity
/// constraint. Every candidate component structure is solved for its period
/// conditions; converged ones are traced, certified (period residual and end
/// snaps within tolerance, components matching the candidate) and ranked by
/// discretized capacity. Ties fall back to the smaller residual, then the
/// lexicographically smallest encoding.
pub fn solve_minimal_set(
    constraint: &ConnectivityConstraint,
    opts: &SolveOptions,
) -> Result<Solution> {
    let candidates = enumerate_connectivity(constraint)?;
    let points: Vec<C> = constraint.groups.iter().flatten().copied().collect();
    let scale = crate::problem_scale(&points);
    let newton_opts =
        opts.newton.clone().unwrap_or_else(|| NewtonOptions::for_scale(scale));

    let mut best: Option<Solution> = None;
    let mut failures: Vec<String> = Vec::new();
    let mut tried = 0usize;
    let mut certified = 0usize;
    let mut seeds_consumed = false;

    for cand in &candidates {
        let shape_lists: Vec<Vec<topology::TreeShape>> = cand
            .components
            .iter()
            .zip(&cand.orders)
            .map(|(idxs, &ord)| {
                let anchors: Vec<C> = idxs.iter().map(|&i| points[i]).collect();
                tree_shapes(&anchors, ord)
            })
            .collect();
        if shape_lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let combo_count: usize = shape_lists.iter().map(|l| l.len()).product();
        if combo_count > opts.max_shape_combos {
            return Err(Error::InvalidInput(format!(
                "candidate {} requires {combo_count} tree-shape combinations, \
                 above the limit of {}",
                cand.encoding, opts.max_shape_combos
            )));
        }

        let mut pick = vec![0usize; shape_lists.len()];
        'combos: loop {
            tried += 1;
            let plans: Vec<ComponentPlan> = cand
                .components
                .iter()
                .enumerate()
                .map(|(k, idxs)| ComponentPlan {
                    anchors: idxs.iter().map(|&i| points[i]).collect(),
                    shape: shape_lists[k][pick[k]].clone(),
                })
                .collect();

            match try_candidate(cand, plans, &points, scale, &newton_opts, opts, &mut seeds_consumed)
            {
                Ok(sol) => {
                    certified += 1;
                    best = Some(match best.take() {
                        None => sol,
                        Some(b) => pick_better(b, sol),
                    });
                }
                Err(e) => {
                    if failures.len() < 8 {
                        failures.push(format!("{}: {e}", cand.encoding));
                    }
                }
            }

            // Advance the shape odometer.
            for k in 0..pick.len() {
                pick[k] += 1;
                if pick[k] < shape_lists[k].len() {
                    continue 'combos;
                }
                pick[k] = 0;
            }
            break;
        }
    }

    if let Some(seeds) = &opts.seeds {
        if !seeds_consumed {
            return Err(Error::InvalidInput(format!(
                "{} seed positions match no candidate structure's unknown count",
                seeds.len()
            )));
        }
    }

    match best {
        Some(mut sol) => {
            sol.candidates_tried = tried;
            sol.candidates_certified = certified;
            Ok(sol)
        }
        None => Err(Error::Numerical(format!(
            "no candidate structure could be certified ({tried} tried): {}",
            failures.join("; ")
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn try_candidate(
    cand: &CandidateTopology,
    plans: Vec<ComponentPlan>,
    points: &[C],
    scale: f64,
    newton_opts: &NewtonOptions,
    opts: &SolveOptions,
    seeds_consumed: &mut bool,
) -> Result<Solution> {
    let mut system = PeriodSystem::new(plans, cand.e2_count)?;
    // The period system can have several critical configurations; two
    // deterministic starts in different basins keep the capacity comparison
    // honest.
    let mut starts = vec![system.initial_guess(), system.local_guess()];
    if let Some(seeds) = &opts.seeds {
        if seeds.len() == system.unknown_count() {
            *seeds_consumed = true;
            starts.push(seeds.iter().flat_map(|z| [z.re, z.im]).collect());
        }
    }
    let mut best: Option<Solution> = None;
    let mut last_err: Option<Error> = None;
    for x0 in &starts {
        let outcome = match system.solve_from(x0, newton_opts) {
            Ok(o) => o,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        match certify(cand, &system, &outcome, points, scale, opts) {
            Ok(sol) => {
                best = Some(match best.take() {
                    None => sol,
                    Some(b) => pick_better(b, sol),
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Internal("no start attempted".into())))
}

fn certify(
    cand: &CandidateTopology,
    system: &PeriodSystem,
    outcome: &newton::NewtonOutcome,
    points: &[C],
    scale: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    let q = system.build(&outcome.x)?;
    let set = extract_minimal_set(&q, points)?;
    if !partition_matches(&set, cand, points, scale) {
        return Err(Error::Numerical(
            "traced components do not realize the candidate partition".into(),
        ));
    }
    let end_snap = max_end_snap_distance(&set);
    if end_snap > 1e-6 * scale {
        return Err(Error::Numerical(format!(
            "arc ends snap by {end_snap:.3e}, above the shooting tolerance"
        )));
    }
    let (measure, capacity) = equilibrium(&set.arcs, opts.capacity_nodes)?;
    Ok(Solution {
        q,
        set,
        measure,
        capacity,
        period_residual: outcome.residual_norm,
        end_snap,
        encoding: cand.encoding.clone(),
        candidates_tried: 0,
        candidates_certified: 0,
    })
}

fn pick_better(a: Solution, b: Solution) -> Solution {
    let denom = a.capacity.value.abs().max(b.capacity.value.abs()).max(1e-300);
    let rel = (a.capacity.value - b.capacity.value) / denom;
    if rel.abs() > 1e-8 {
        return if a.capacity.value <= b.capacity.value { a } else { b };
    }
    if (a.period_residual - b.period_residual).abs() > 0.0 {
        return if a.period_residual <= b.period_residual { a } else { b };
    }
    if a.encoding <= b.encoding {
        a
    } else {
        b
    }
}

/// Minimal set for an algebraic function: derives the connectivity its
/// branch points impose and searches the admissible structures.
pub fn solve_function(f: &FunctionExpr, opts: &SolveOptions) -> Result<Solution> {
    let constraint = admissible_connectivity(f)?;
    solve_minimal_set(&constraint, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn two_point_problem_solves_to_the_segment() {
        let sol = solve_function(&examples::two_point_sqrt(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.encoding, "[0,1]");
        assert_eq!(sol.set.arcs.len(), 1);
        assert!(sol.set.e1.is_empty());
        assert!(sol.set.e2.is_empty());
        assert!(sol.period_residual < 1e-8);
        assert!((sol.capacity.value - 0.5).abs() < 3e-3, "cap {}", sol.capacity.value);
    }

    #[test]
    fn quartic_solution_matches_the_symmetric_solver() {
        for phi in [std::f64::consts::PI / 6.0, std::f64::consts::PI / 5.0] {
            let (_, z5, z6) = symmetric::solve_symmetric_four_point(phi).unwrap();
            let sol =
                solve_function(&examples::four_point_quartic(phi), &SolveOptions::default())
                    .unwrap();
            assert_eq!(sol.set.components.len(), 1);
            assert_eq!(sol.set.arcs.len(), 5);
            assert_eq!(sol.set.e1.len(), 2);
            for target in [z5, z6] {
                let hit = sol
                    .set
                    .e1
                    .iter()
                    .map(|&(p, _)| (p - target).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(hit < 1e-5, "phi {phi}: bifurcation point off by {hit:.2e}");
            }
        }
    }

    #[test]
    fn seven_point_solution_is_reproducible() {
        let sol =
            solve_function(&examples::seven_point_mixed(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.encoding, "[0,1,2,3][4,5,6]");
        assert_eq!(sol.set.components.len(), 2);
        assert_eq!(sol.set.arcs.len(), 8);
        assert_eq!(sol.set.e1.len(), 3);
        assert_eq!(sol.set.e2.len(), 1);
        assert!(sol.period_residual < 1e-8);
        // Cross-checked three ways: period residuals at 1e-13, trajectory
        // end snaps at 5e-6, and the poles of the [26/25] diagonal
        // approximant at 120 digits clustering along the traced arcs.
        let expected = [
            C::new(-3.602255, 1.634973),
            C::new(-0.069155, 2.259922),
            C::new(1.401147, 3.164830),
        ];
        for t in expected {
            let hit = sol
                .set
                .e1
                .iter()
                .map(|&(p, _)| (p - t).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(hit < 1e-4, "bifurcation point near {t} missed by {hit:.2e}");
        }
        assert!((sol.set.e2[0].0 - C::new(1.135215, 2.985026)).norm() < 1e-4);
        assert!((sol.capacity.value - 2.0950).abs() < 5e-3, "cap {}", sol.capacity.value);
    }

    #[test]
    fn square_root_pairing_beats_the_connected_structure() {
        let phi = std::f64::consts::PI / 6.0;
        let sol =
            solve_function(&examples::four_point_sqrt(phi), &SolveOptions::default()).unwrap();
        assert_eq!(sol.encoding, "[0,3][1,2]");
        assert_eq!(sol.set.components.len(), 2);
        assert_eq!(sol.set.arcs.len(), 2);
        assert_eq!(sol.set.e2.len(), 1);
        assert!(sol.set.e2[0].0.norm() < 1e-6, "green point at {}", sol.set.e2[0].0);
        assert!(sol.candidates_certified >= 1);
    }

    #[test]
    fn seed_positions_matching_no_structure_are_rejected() {
        let opts = SolveOptions { seeds: Some(vec![C::new(0.3, 0.0)]), ..Default::default() };
        let err = solve_function(&examples::two_point_sqrt(), &opts).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)), "got {err}");
    }

    #[test]
    fn matching_seed_positions_start_an_extra_solve() {
        let phi = std::f64::consts::PI / 6.0;
        let (_, z5, z6) = symmetric::solve_symmetric_four_point(phi).unwrap();
        let opts = SolveOptions { seeds: Some(vec![z5, z6]), ..Default::default() };
        let sol = solve_function(&examples::four_point_quartic(phi), &opts).unwrap();
        assert_eq!(sol.set.e1.len(), 2);
        assert!(sol.period_residual < 1e-8);
    }
}
