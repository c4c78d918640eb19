//! Discretized equilibrium measures, logarithmic capacity, the Green
//! function, and the verification probes built on them.
//!
//! The continuous problem minimizes the logarithmic energy over probability
//! measures on the arc set; its discretization places endpoint-clustered
//! nodes on each arc, regularizes the kernel diagonal by the exact
//! self-energy of a uniformly charged cell, and solves the resulting convex
//! QP through its KKT system.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use crate::geom;
use crate::qdiff::trace::TrajectoryArc;
use crate::solver::MinimalSet;
use crate::{Error, Result};

/// A discrete probability measure supported on arc nodes.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub nodes: Vec<C>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Capacity value together with the energy it came from and the refinement
/// context needed to judge its accuracy.
#[derive(Debug, Clone)]
pub struct CapacityEstimate {
    pub value: f64,
    pub energy: f64,
    pub discretization_size: usize,
    /// |cap(M) − cap(M/2)|, absent when M/2 would fall below the minimum.
    pub refinement_delta: Option<f64>,
}

/// Node placement for one refinement level: positions, owning arc, arclength
/// along that arc, and the arclength of the cell each node represents.
struct Layout {
    nodes: Vec<C>,
    cells: Vec<f64>,
    arc_of: Vec<usize>,
    s_of: Vec<f64>,
    lengths: Vec<f64>,
}

fn layout(polys: &[&[C]], m: usize) -> Result<Layout> {
    let mut out = Layout {
        nodes: Vec::with_capacity(polys.len() * m),
        cells: Vec::with_capacity(polys.len() * m),
        arc_of: Vec::with_capacity(polys.len() * m),
        s_of: Vec::with_capacity(polys.len() * m),
        lengths: Vec::with_capacity(polys.len()),
    };
    for (ai, poly) in polys.iter().enumerate() {
        let len = geom::polyline_length(poly);
        if !(len > 0.0) {
            return Err(Error::InvalidInput(format!("arc {ai} has zero length")));
        }
        out.lengths.push(len);
        for i in 0..m {
            // Chebyshev-type clustering: equal steps in θ concentrate both
            // the nodes and their cells near the arc endpoints, matching the
            // inverse-square-root blowup of equilibrium densities there.
            let th_mid = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * m) as f64;
            let th_lo = std::f64::consts::PI * i as f64 / m as f64;
            let th_hi = std::f64::consts::PI * (i + 1) as f64 / m as f64;
            let s = len * (1.0 - th_mid.cos()) / 2.0;
            out.nodes.push(geom::polyline_at(poly, s));
            out.cells.push(len * (th_lo.cos() - th_hi.cos()) / 2.0);
            out.arc_of.push(ai);
            out.s_of.push(s);
        }
    }
    Ok(out)
}

fn cell_self_integral(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t * (2.0 * t.ln() - 3.0) / 4.0
    }
}

/// Mean of −log|x−y| over two abutting collinear segments of lengths `la`,
/// `lb` with uniform charge. Point charges at cell centers misstate this
/// interaction by O(1), which would cap the capacity error at O(1/M).
fn adjacent_cell_kernel(la: f64, lb: f64) -> f64 {
    -((cell_self_integral(la + lb) - cell_self_integral(la) - cell_self_integral(lb)) / (la * lb))
}

fn singular_matrix_error() -> Error {
    Error::Numerical(
        "singular quadrature matrix; increase the nodes per arc or jitter the nodes".into(),
    )
}

fn assemble_kernel(layout: &Layout) -> Result<DMatrix<f64>> {
    let n = layout.nodes.len();
    let scale = layout
        .nodes
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.5 - layout.cells[i].ln();
        for j in 0..i {
            let v = if layout.arc_of[i] == layout.arc_of[j] && i - j == 1 {
                adjacent_cell_kernel(layout.cells[i], layout.cells[j])
            } else {
                let d = (layout.nodes[i] - layout.nodes[j]).norm();
                if d <= 1e-14 * scale {
                    return Err(singular_matrix_error());
                }
                -d.ln()
            };
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// Minimize wᵀAw over the simplex via the equality-constrained KKT system,
/// dropping negative weights until the active set settles.
fn solve_weights(a: &DMatrix<f64>) -> Result<(DVector<f64>, f64)> {
    let n = a.nrows();
    let mut free: Vec<usize> = (0..n).collect();
    for _ in 0..60 {
        let f = free.len();
        if f == 0 {
            return Err(singular_matrix_error());
        }
        let mut k = DMatrix::zeros(f + 1, f + 1);
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                k[(r, c)] = 2.0 * a[(i, j)];
            }
            k[(r, f)] = 1.0;
            k[(f, r)] = 1.0;
        }
        let mut rhs = DVector::zeros(f + 1);
        rhs[f] = 1.0;
        let sol = k.lu().solve(&rhs).ok_or_else(singular_matrix_error)?;
        if free.iter().enumerate().all(|(r, _)| sol[r] >= -1e-12) {
            let mut w = DVector::zeros(n);
            for (r, &i) in free.iter().enumerate() {
                w[i] = sol[r].max(0.0);
            }
            let energy = w.dot(&(a * &w));
            return Ok((w, energy));
        }
        let kept: Vec<usize> = free
            .iter()
            .enumerate()
            .filter(|&(r, _)| sol[r] >= -1e-12)
            .map(|(_, &i)| i)
            .collect();
        free = kept;
    }
    Err(Error::Numerical("weight cleanup did not settle; jitter the nodes".into()))
}

fn solve_at(polys: &[&[C]], m: usize) -> Result<(Layout, DVector<f64>, f64)> {
    let layout = layout(polys, m)?;
    let a = assemble_kernel(&layout)?;
    let (w, energy) = solve_weights(&a)?;
    Ok((layout, w, energy))
}

/// Equilibrium measure and capacity for a set of arc polylines, `m` nodes
/// per arc.
pub fn equilibrium_polylines(
    polys: &[&[C]],
    m: usize,
) -> Result<(DiscreteMeasure, CapacityEstimate)> {
    if polys.is_empty() {
        return Err(Error::InvalidInput("at least one arc is required".into()));
    }
    if m < 8 {
        return Err(Error::InvalidInput("at least 8 nodes per arc are required".into()));
    }
    let (layout, w, energy) = solve_at(polys, m)?;
    let value = (-energy).exp();
    let refinement_delta = if m / 2 >= 8 {
        let (_, _, coarse) = solve_at(polys, m / 2)?;
        Some((value - (-coarse).exp()).abs())
    } else {
        None
    };
    let measure = DiscreteMeasure { nodes: layout.nodes, weights: w.iter().copied().collect() };
    let estimate = CapacityEstimate {
        value,
        energy,
        discretization_size: measure.nodes.len(),
        refinement_delta,
    };
    Ok((measure, estimate))
}

/// Equilibrium measure and capacity on traced arcs.
pub fn equilibrium(
    arcs: &[TrajectoryArc],
    m: usize,
) -> Result<(DiscreteMeasure, CapacityEstimate)> {
    let polys: Vec<&[C]> = arcs.iter().map(|a| a.samples.as_slice()).collect();
    equilibrium_polylines(&polys, m)
}

/// Green function of the complement at `z`: Σ wᵢ log|z − xᵢ| − log cap.
/// Values in (−10⁻¹⁰, 0) are clamped to 0.
pub fn green_eval(measure: &DiscreteMeasure, cap: &CapacityEstimate, z: C) -> Result<f64> {
    let scale = measure
        .nodes
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut g = cap.energy;
    for (x, w) in measure.nodes.iter().zip(&measure.weights) {
        if *w == 0.0 {
            continue;
        }
        let d = (z - x).norm();
        if d <= 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "evaluation point {z} coincides with a measure node"
            )));
        }
        g += w * d.ln();
    }
    if g < 0.0 && g > -1e-10 {
        g = 0.0;
    }
    Ok(g)
}

/// Maximum over interior arc nodes of |g(z+hn) − g(z−hn)| / h, the centered
/// proxy for the mismatch of the two one-sided normal derivatives of g.
/// Vanishing residual certifies the S-property of the arc set.
pub fn s_residual(
    set: &MinimalSet,
    measure: &DiscreteMeasure,
    cap: &CapacityEstimate,
) -> Result<f64> {
    s_residual_with_offset(set, measure, cap, 1e-4 * set.scale())
}

pub fn s_residual_with_offset(
    set: &MinimalSet,
    measure: &DiscreteMeasure,
    cap: &CapacityEstimate,
    h: f64,
) -> Result<f64> {
    if set.arcs.is_empty() {
        return Err(Error::InvalidInput("set has no arcs".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("offset must be positive".into()));
    }
    let n_arcs = set.arcs.len();
    let m = measure.nodes.len() / n_arcs;
    let polys: Vec<&[C]> = set.arcs.iter().map(|a| a.samples.as_slice()).collect();
    if m < 8 || m * n_arcs != measure.nodes.len() {
        return Err(Error::InvalidInput("measure does not match the set discretization".into()));
    }
    let layout = layout(&polys, m)?;
    let scale = set.scale();
    for (a, b) in layout.nodes.iter().zip(&measure.nodes) {
        if (a - b).norm() > 1e-9 * scale {
            return Err(Error::InvalidInput(
                "measure does not match the set discretization".into(),
            ));
        }
    }

    let mut worst = 0.0f64;
    let mut used = 0usize;
    for k in 0..layout.nodes.len() {
        let ai = layout.arc_of[k];
        let s = layout.s_of[k];
        let len = layout.lengths[ai];
        // Endpoint neighborhoods are excluded: the density is singular there
        // and the normal offsets leave the arc's tubular neighborhood.
        if s < 0.08 * len || s > 0.92 * len {
            continue;
        }
        let t = geom::polyline_tangent_at(polys[ai], s);
        let nrm = t * C::new(0.0, 1.0);
        let zp = layout.nodes[k] + nrm * h;
        let zm = layout.nodes[k] - nrm * h;
        let collides = |p: C| polys.iter().any(|q| geom::point_polyline_distance(p, q) < 0.5 * h);
        if collides(zp) || collides(zm) {
            continue;
        }
        let gp = green_eval(measure, cap, zp)?;
        let gm = green_eval(measure, cap, zm)?;
        worst = worst.max((gp - gm).abs() / h);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Numerical(
            "every interior sample was skipped; arcs are too close for this offset".into(),
        ));
    }
    Ok(worst)
}

/// A smooth compactly supported normal displacement of one arc. `center` and
/// `width` are fractions of the arc length; the profile is the standard C∞
/// bump exp(1 − 1/(1−x²)) on |x| < 1.
#[derive(Debug, Clone, Copy)]
pub struct BumpProfile {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

fn bump_value(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn decimate(poly: &[C], max_pts: usize) -> Vec<C> {
    if poly.len() <= max_pts {
        return poly.to_vec();
    }
    let stride = poly.len().div_ceil(max_pts);
    let mut out: Vec<C> = poly.iter().step_by(stride).copied().collect();
    if *out.last().unwrap() != *poly.last().unwrap() {
        out.push(*poly.last().unwrap());
    }
    out
}

fn polylines_cross(a: &[C], b: &[C]) -> bool {
    for sa in a.windows(2) {
        for sb in b.windows(2) {
            if geom::segments_intersect(sa[0], sa[1], sb[0], sb[1]) {
                return true;
            }
        }
    }
    false
}

/// Capacity change under a bump perturbation of one arc, both sides computed
/// at the same discretization so systematic error cancels to first order.
pub fn local_min_probe(
    set: &MinimalSet,
    arc_index: usize,
    bump: &BumpProfile,
    m: usize,
) -> Result<f64> {
    if arc_index >= set.arcs.len() {
        return Err(Error::InvalidInput(format!("arc index {arc_index} out of range")));
    }
    let scale = set.scale();
    if !bump.amplitude.is_finite() || bump.amplitude.abs() > 1e-2 * scale {
        return Err(Error::InvalidInput(
            "bump amplitude must not exceed 10⁻² × problem scale".into(),
        ));
    }
    if !(bump.width > 0.0) {
        return Err(Error::InvalidInput("bump width must be positive".into()));
    }
    if bump.center - bump.width < 0.02 || bump.center + bump.width > 0.98 {
        return Err(Error::InvalidInput("bump support must stay clear of the arc endpoints".into()));
    }

    let original: Vec<Vec<C>> = set.arcs.iter().map(|a| a.samples.clone()).collect();
    let mut perturbed = original.clone();
    {
        let poly = &original[arc_index];
        let len = geom::polyline_length(poly);
        let mut s = 0.0;
        let mut prev = poly[0];
        for (k, v) in perturbed[arc_index].iter_mut().enumerate() {
            if k > 0 {
                s += (poly[k] - prev).norm();
                prev = poly[k];
            }
            let x = (s / len - bump.center) / bump.width;
            let disp = bump.amplitude * bump_value(x);
            if disp != 0.0 {
                let t = geom::polyline_tangent_at(poly, s);
                *v += t * C::new(0.0, 1.0) * disp;
            }
        }
    }

    let dec: Vec<Vec<C>> = perturbed.iter().map(|p| decimate(p, 220)).collect();
    let own = &dec[arc_index];
    for i in 0..own.len().saturating_sub(1) {
        for j in (i + 2)..own.len() - 1 {
            if geom::segments_intersect(own[i], own[i + 1], own[j], own[j + 1]) {
                return Err(Error::InvalidInput("perturbed arc self-intersects".into()));
            }
        }
    }
    for (j, other) in dec.iter().enumerate() {
        if j != arc_index && polylines_cross(own, other) {
            return Err(Error::InvalidInput("perturbed arc crosses another arc".into()));
        }
    }

    let orig_refs: Vec<&[C]> = original.iter().map(|p| p.as_slice()).collect();
    let pert_refs: Vec<&[C]> = perturbed.iter().map(|p| p.as_slice()).collect();
    let (_, cap0) = equilibrium_polylines(&orig_refs, m)?;
    let (_, cap1) = equilibrium_polylines(&pert_refs, m)?;
    Ok(cap1.value - cap0.value)
}

/// Diameter bounds of one connected component against its standalone
/// capacity.
#[derive(Debug, Clone)]
pub struct ComponentBounds {
    pub diameter: f64,
    pub capacity: f64,
    pub lower: f64,
    pub upper: f64,
    /// Discretization error bar used when judging the bounds.
    pub error_bar: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct GeometryReport {
    /// Largest signed distance of any arc sample to the convex hull of the
    /// E₀ points (negative means strictly inside).
    pub hull_max_excess: f64,
    pub hull_ok: bool,
    pub components: Vec<ComponentBounds>,
    pub ok: bool,
}

/// Verifies that arcs stay inside the convex hull of E₀ and that each
/// component's capacity sits between diameter/4 and diameter/2.
pub fn geometry_checks(set: &MinimalSet, m: usize) -> Result<GeometryReport> {
    if set.e0.is_empty() {
        return Err(Error::InvalidInput("set has no branch points".into()));
    }
    let e0pts: Vec<C> = set.e0.iter().map(|&(p, _)| p).collect();
    let hull = geom::convex_hull(&e0pts);
    let mut excess = f64::NEG_INFINITY;
    for arc in &set.arcs {
        for &z in &arc.samples {
            excess = excess.max(geom::hull_signed_distance(&hull, z));
        }
    }
    if !excess.is_finite() {
        excess = 0.0;
    }
    let hull_ok = excess <= 1e-9;

    let mut components = Vec::new();
    for ci in 0..set.components.len() {
        let polys = set.component_polylines(ci);
        if polys.is_empty() {
            continue;
        }
        let (_, cap) = equilibrium_polylines(&polys, m)?;
        let diameter = geom::diameter(&set.component_points(ci));
        let error_bar = cap.refinement_delta.unwrap_or(0.0).mul_add(4.0, 1e-9 * diameter);
        let (lower, upper) = (diameter / 4.0, diameter / 2.0);
        let ok = cap.value >= lower - error_bar && cap.value <= upper + error_bar;
        components.push(ComponentBounds {
            diameter,
            capacity: cap.value,
            lower,
            upper,
            error_bar,
            ok,
        });
    }
    let ok = hull_ok && components.iter().all(|c| c.ok);
    Ok(GeometryReport { hull_max_excess: excess, hull_ok, components, ok })
}
