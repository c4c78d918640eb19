//! Enumeration of admissible component structures.
//!
//! A candidate fixes how the branch points split into connected components
//! and how each component is joined internally by a tree through bifurcation
//! points. Square-root groups admit any partition into even-sized blocks
//! (pairings being the common case); higher-order groups must stay whole.

use num_complex::Complex64 as C;

use crate::algebra::{ConnectivityConstraint, ConnectivityMode};
use crate::geom::segments_intersect;
use crate::{Error, Result};

/// Vertex of a component tree: either one of the component's anchor points
/// (by local index) or an interior bifurcation point (by local index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Anchor(usize),
    Interior(usize),
}

/// Unrooted tree joining a component's anchors. Anchors have degree 1,
/// interior vertices degree ≥ 3; an interior vertex of degree d carries a
/// zero of multiplicity d − 2 in the quadratic differential.
#[derive(Debug, Clone)]
pub struct TreeShape {
    pub interior_count: usize,
    pub edges: Vec<(Node, Node)>,
}

impl TreeShape {
    fn degree(&self, n: Node) -> usize {
        self.edges.iter().filter(|(a, b)| *a == n || *b == n).count()
    }

    pub fn interior_degree(&self, i: usize) -> usize {
        self.degree(Node::Interior(i))
    }

    pub fn validate(&self, anchor_count: usize) -> Result<()> {
        let n = anchor_count + self.interior_count;
        if self.edges.len() + 1 != n {
            return Err(Error::Internal(format!(
                "tree with {n} vertices has {} edges",
                self.edges.len()
            )));
        }
        for a in 0..anchor_count {
            if self.degree(Node::Anchor(a)) != 1 {
                return Err(Error::Internal(format!("anchor {a} must have degree 1")));
            }
        }
        for i in 0..self.interior_count {
            if self.interior_degree(i) < 3 {
                return Err(Error::Internal(format!("interior vertex {i} has degree < 3")));
            }
        }
        // Connectivity: edge count + degree constraints leave room for
        // cycles plus isolated vertices, so walk the tree once.
        let idx = |n: Node| match n {
            Node::Anchor(a) => a,
            Node::Interior(i) => anchor_count + i,
        };
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (a, b) in &self.edges {
                let (ia, ib) = (idx(*a), idx(*b));
                let other = if ia == v {
                    ib
                } else if ib == v {
                    ia
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Internal("tree shape is disconnected".into()));
        }
        Ok(())
    }
}

fn single_edge() -> TreeShape {
    TreeShape { interior_count: 0, edges: vec![(Node::Anchor(0), Node::Anchor(1))] }
}

fn star(k: usize) -> TreeShape {
    TreeShape {
        interior_count: 1,
        edges: (0..k).map(|a| (Node::Anchor(a), Node::Interior(0))).collect(),
    }
}

fn binary_pair(split: [usize; 4]) -> TreeShape {
    TreeShape {
        interior_count: 2,
        edges: vec![
            (Node::Anchor(split[0]), Node::Interior(0)),
            (Node::Anchor(split[1]), Node::Interior(0)),
            (Node::Anchor(split[2]), Node::Interior(1)),
            (Node::Anchor(split[3]), Node::Interior(1)),
            (Node::Interior(0), Node::Interior(1)),
        ],
    }
}

/// Single heuristic shape for five or more anchors: agglomerate the two
/// nearest clusters until three remain, then join those under one vertex.
fn agglomerative(anchors: &[C]) -> TreeShape {
    let k = anchors.len();
    let mut clusters: Vec<(Node, C, usize)> =
        (0..k).map(|a| (Node::Anchor(a), anchors[a], 1)).collect();
    let mut edges = Vec::new();
    let mut next_interior = 0usize;
    while clusters.len() > 3 {
        let mut best = (0usize, 1usize, f64::INFINITY);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = (clusters[i].1 - clusters[j].1).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (i, j, _) = best;
        let b = clusters.remove(j);
        let a = clusters.remove(i);
        let v = Node::Interior(next_interior);
        next_interior += 1;
        edges.push((a.0, v));
        edges.push((b.0, v));
        let w = a.2 + b.2;
        let centroid = (a.1 * a.2 as f64 + b.1 * b.2 as f64) / w as f64;
        clusters.push((v, centroid, w));
    }
    let v = Node::Interior(next_interior);
    for (node, _, _) in clusters {
        edges.push((node, v));
    }
    TreeShape { interior_count: next_interior + 1, edges }
}

/// Tree shapes to try for a block of `anchors` belonging to a group of
/// root order `order`. Square-root blocks of four admit the single
/// bifurcation point of index 4 as well as the generic two-point trees.
pub fn tree_shapes(anchors: &[C], order: u32) -> Vec<TreeShape> {
    match anchors.len() {
        0 | 1 => Vec::new(),
        2 => vec![single_edge()],
        3 => vec![star(3)],
        4 => {
            let binaries =
                [binary_pair([0, 1, 2, 3]), binary_pair([0, 2, 1, 3]), binary_pair([0, 3, 1, 2])];
            if order == 2 {
                let mut v = vec![star(4)];
                v.extend(binaries);
                v
            } else {
                binaries.to_vec()
            }
        }
        _ => vec![agglomerative(anchors)],
    }
}

/// One admissible component structure. `components` holds global indices
/// into the flattened constraint point list; `orders` the root order each
/// component inherits from its group.
#[derive(Debug, Clone)]
pub struct CandidateTopology {
    pub components: Vec<Vec<usize>>,
    pub orders: Vec<u32>,
    /// Number of critical points of the Green function off the set, each a
    /// double zero of the quadratic differential.
    pub e2_count: usize,
    pub encoding: String,
}

impl CandidateTopology {
    fn new(mut components: Vec<(Vec<usize>, u32)>) -> Self {
        for (c, _) in &mut components {
            c.sort_unstable();
        }
        components.sort_by(|a, b| a.0.cmp(&b.0));
        let encoding = components
            .iter()
            .map(|(c, _)| {
                let inner =
                    c.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
                format!("[{inner}]")
            })
            .collect::<String>();
        let e2_count = components.len() - 1;
        let (components, orders) = components.into_iter().unzip();
        CandidateTopology { components, orders, e2_count, encoding }
    }

    /// Σ(i(v) − 2) over bifurcation points plus Σ2j(v) over Green-critical
    /// points must equal the pole count minus two.
    pub fn degree_accounts(&self, points_total: usize) -> bool {
        let interior_sum: usize =
            self.components.iter().map(|c| c.len().saturating_sub(2)).sum();
        interior_sum + 2 * self.e2_count == points_total - 2
    }
}

/// Partitions of `items` into blocks of even size ≥ 2.
fn even_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let rest = &items[1..];
    let mut out = Vec::new();
    // Choose the companions of `first`: any odd-sized subset of the rest.
    let m = rest.len();
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() % 2 == 0 {
            continue;
        }
        let mut block = vec![first];
        let mut remaining = Vec::new();
        for (b, item) in rest.iter().enumerate() {
            if mask & (1 << b) != 0 {
                block.push(*item);
            } else {
                remaining.push(*item);
            }
        }
        for mut tail in even_partitions(&remaining) {
            let mut p = vec![block.clone()];
            p.append(&mut tail);
            out.push(p);
        }
    }
    out
}

/// Two-point blocks whose straight chords properly cross cannot both be
/// realized by disjoint arcs without a detour that increases capacity.
fn has_crossing_pair(blocks: &[(Vec<usize>, u32)], points: &[C]) -> bool {
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            let (a, b) = (&blocks[i].0, &blocks[j].0);
            if a.len() == 2
                && b.len() == 2
                && segments_intersect(points[a[0]], points[a[1]], points[b[0]], points[b[1]])
            {
                return true;
            }
        }
    }
    false
}

/// All admissible component structures for the constraint. Groups of root
/// order ≥ 3 stay whole; square-root groups of four or more points are
/// split into every even partition when the mode allows it. Candidates are
/// returned in encoding order.
pub fn enumerate_connectivity(
    constraint: &ConnectivityConstraint,
) -> Result<Vec<CandidateTopology>> {
    if constraint.groups.is_empty() || constraint.groups.iter().all(|g| g.is_empty()) {
        return Err(Error::InvalidInput("connectivity constraint has no points".into()));
    }
    if constraint.groups.len() != constraint.orders.len() {
        return Err(Error::InvalidInput("one root order per group is required".into()));
    }
    let mut points: Vec<C> = Vec::new();
    let mut group_indices: Vec<Vec<usize>> = Vec::new();
    for g in &constraint.groups {
        let start = points.len();
        points.extend_from_slice(g);
        group_indices.push((start..points.len()).collect());
    }

    // Per-group alternatives, then the cartesian product across groups.
    let mut per_group: Vec<Vec<Vec<(Vec<usize>, u32)>>> = Vec::new();
    for (gi, idxs) in group_indices.iter().enumerate() {
        let order = constraint.orders[gi];
        if idxs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "group {gi} has fewer than two branch points"
            )));
        }
        let splittable = order == 2
            && idxs.len() >= 4
            && constraint.mode == ConnectivityMode::AtLeast;
        if splittable {
            if idxs.len() > 12 {
                return Err(Error::InvalidInput(
                    "square-root groups beyond 12 points are not enumerable".into(),
                ));
            }
            let mut alts: Vec<Vec<(Vec<usize>, u32)>> = even_partitions(idxs)
                .into_iter()
                .map(|p| p.into_iter().map(|b| (b, order)).collect())
                .collect();
            alts.retain(|blocks| !has_crossing_pair(blocks, &points));
            per_group.push(alts);
        } else {
            per_group.push(vec![vec![(idxs.clone(), order)]]);
        }
    }

    let mut candidates = vec![Vec::new()];
    for alts in per_group {
        let mut next = Vec::new();
        for partial in &candidates {
            for alt in &alts {
                let mut c: Vec<(Vec<usize>, u32)> = partial.clone();
                c.extend(alt.iter().cloned());
                next.push(c);
            }
        }
        candidates = next;
    }

    let mut out: Vec<CandidateTopology> =
        candidates.into_iter().map(CandidateTopology::new).collect();
    out.sort_by(|a, b| a.encoding.cmp(&b.encoding));
    out.dedup_by(|a, b| a.encoding == b.encoding);
    Ok(out)
}

/// Starting positions for a tree's interior vertices: anchors stay fixed
/// while interior vertices relax to the mean of their neighbors, seeded at
/// the component centroid.
pub fn seed_interior_positions(anchors: &[C], shape: &TreeShape) -> Vec<C> {
    if shape.interior_count == 0 {
        return Vec::new();
    }
    let centroid = anchors.iter().sum::<C>() / anchors.len() as f64;
    let mut pos = vec![centroid; shape.interior_count];
    for _ in 0..40 {
        for i in 0..shape.interior_count {
            let mut sum = C::new(0.0, 0.0);
            let mut n = 0.0;
            for (a, b) in &shape.edges {
                let other = if *a == Node::Interior(i) {
                    *b
                } else if *b == Node::Interior(i) {
                    *a
                } else {
                    continue;
                };
                sum += match other {
                    Node::Anchor(k) => anchors[k],
                    Node::Interior(k) => pos[k],
                };
                n += 1.0;
            }
            if n > 0.0 {
                // Bias toward the centroid keeps seeds off straight lines
                // through the anchors, where the Jacobian can degenerate.
                pos[i] = (sum / n) * 0.75 + centroid * 0.25;
            }
        }
    }
    pos
}

/// Alternative starting positions emphasizing the tree's own layout: each
/// interior vertex starts at the mean of its anchor neighbors and relaxes by
/// pure neighbor averaging, without the centroid pull. Lands in a different
/// basin than [`seed_interior_positions`] when the period system has several
/// critical configurations.
pub fn seed_interior_positions_local(anchors: &[C], shape: &TreeShape) -> Vec<C> {
    if shape.interior_count == 0 {
        return Vec::new();
    }
    let centroid = anchors.iter().sum::<C>() / anchors.len() as f64;
    let mut pos = vec![C::new(0.0, 0.0); shape.interior_count];
    for (i, p) in pos.iter_mut().enumerate() {
        let mut sum = C::new(0.0, 0.0);
        let mut n = 0.0;
        for (a, b) in &shape.edges {
            let other = if *a == Node::Interior(i) {
                *b
            } else if *b == Node::Interior(i) {
                *a
            } else {
                continue;
            };
            if let Node::Anchor(k) = other {
                sum += anchors[k];
                n += 1.0;
            }
        }
        *p = if n > 0.0 { sum / n } else { centroid };
    }
    for _ in 0..60 {
        for i in 0..shape.interior_count {
            let mut sum = C::new(0.0, 0.0);
            let mut n = 0.0;
            for (a, b) in &shape.edges {
                let other = if *a == Node::Interior(i) {
                    *b
                } else if *b == Node::Interior(i) {
                    *a
                } else {
                    continue;
                };
                sum += match other {
                    Node::Anchor(k) => anchors[k],
                    Node::Interior(k) => pos[k],
                };
                n += 1.0;
            }
            if n > 0.0 {
                pos[i] = sum / n;
            }
        }
    }
    pos
}

/// Seeds for the Green-critical points: midpoints of a minimum spanning
/// tree over the component centroids.
pub fn seed_green_critical(component_centroids: &[C]) -> Vec<C> {
    let m = component_centroids.len();
    if m < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; m];
    in_tree[0] = true;
    let mut seeds = Vec::with_capacity(m - 1);
    for _ in 1..m {
        let mut best = (0usize, 0usize, f64::INFINITY);
        for (i, &inside) in in_tree.iter().enumerate() {
            if !inside {
                continue;
            }
            for (j, &inside_j) in in_tree.iter().enumerate() {
                if inside_j {
                    continue;
                }
                let d = (component_centroids[i] - component_centroids[j]).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        in_tree[best.1] = true;
        seeds.push(0.5 * (component_centroids[best.0] + component_centroids[best.1]));
    }
    seeds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{seven_point_branch_points, unit_circle_points};

    fn constraint(groups: Vec<Vec<C>>, orders: Vec<u32>, mode: ConnectivityMode) -> ConnectivityConstraint {
        ConnectivityConstraint { groups, orders, mode }
    }

    #[test]
    fn four_point_square_root_gives_two_pairings_plus_full() {
        let pts = unit_circle_points(std::f64::consts::PI / 6.0);
        let c = constraint(vec![pts.to_vec()], vec![2], ConnectivityMode::AtLeast);
        let cands = enumerate_connectivity(&c).unwrap();
        let encodings: Vec<&str> = cands.iter().map(|c| c.encoding.as_str()).collect();
        assert_eq!(encodings, vec!["[0,1,2,3]", "[0,1][2,3]", "[0,3][1,2]"]);
        for cand in &cands {
            assert!(cand.degree_accounts(4), "{}", cand.encoding);
        }
        let full = cands.iter().find(|c| c.components.len() == 1).unwrap();
        assert_eq!(full.e2_count, 0);
        let paired = cands.iter().find(|c| c.encoding == "[0,1][2,3]").unwrap();
        assert_eq!(paired.e2_count, 1);
    }

    #[test]
    fn the_crossing_pairing_is_pruned() {
        let pts = unit_circle_points(std::f64::consts::PI / 6.0);
        let c = constraint(vec![pts.to_vec()], vec![2], ConnectivityMode::AtLeast);
        let cands = enumerate_connectivity(&c).unwrap();
        assert!(cands.iter().all(|c| c.encoding != "[0,2][1,3]"));
    }

    #[test]
    fn two_points_give_the_single_arc_candidate() {
        let g = vec![C::new(-1.0, 0.0), C::new(1.0, 0.0)];
        let c = constraint(vec![g], vec![2], ConnectivityMode::Exact);
        let cands = enumerate_connectivity(&c).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].components, vec![vec![0, 1]]);
        assert_eq!(cands[0].e2_count, 0);
        assert!(cands[0].degree_accounts(2));
    }

    #[test]
    fn quartic_group_must_stay_whole() {
        let pts = unit_circle_points(std::f64::consts::PI / 6.0);
        let c = constraint(vec![pts.to_vec()], vec![4], ConnectivityMode::Exact);
        let cands = enumerate_connectivity(&c).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].components.len(), 1);
        let shapes = tree_shapes(&pts, 4);
        assert_eq!(shapes.len(), 3);
        assert!(shapes.iter().all(|s| s.interior_count == 2));
        for s in &shapes {
            s.validate(4).unwrap();
        }
    }

    #[test]
    fn two_group_mixed_orders_gives_one_candidate_with_a_green_point() {
        let (g4, g3) = seven_point_branch_points();
        let c = constraint(
            vec![g4.to_vec(), g3.to_vec()],
            vec![4, 3],
            ConnectivityMode::Exact,
        );
        let cands = enumerate_connectivity(&c).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].components.len(), 2);
        assert_eq!(cands[0].e2_count, 1);
        assert!(cands[0].degree_accounts(7));
        assert_eq!(tree_shapes(&g3, 3).len(), 1);
        assert_eq!(tree_shapes(&g3, 3)[0].interior_count, 1);
    }

    #[test]
    fn square_root_block_of_four_offers_the_index_four_star_first() {
        let pts = unit_circle_points(std::f64::consts::PI / 4.5);
        let shapes = tree_shapes(&pts, 2);
        assert_eq!(shapes.len(), 4);
        assert_eq!(shapes[0].interior_count, 1);
        assert_eq!(shapes[0].interior_degree(0), 4);
        for s in &shapes {
            s.validate(4).unwrap();
        }
    }

    #[test]
    fn agglomerative_shape_is_a_valid_tree() {
        let pts: Vec<C> = (0..6)
            .map(|k| C::new(k as f64, (k as f64 * 1.3).sin()))
            .collect();
        let shapes = tree_shapes(&pts, 5);
        assert_eq!(shapes.len(), 1);
        assert_eq!(shapes[0].interior_count, 4);
        shapes[0].validate(6).unwrap();
    }

    #[test]
    fn interior_seeds_land_inside_the_hull() {
        let pts = unit_circle_points(std::f64::consts::PI / 6.0);
        for shape in tree_shapes(&pts, 4) {
            let seeds = seed_interior_positions(&pts, &shape);
            assert_eq!(seeds.len(), 2);
            for s in seeds {
                assert!(s.norm() < 1.0, "seed {s} outside the unit disk");
            }
        }
    }

    #[test]
    fn green_seeds_sit_between_components() {
        let centroids = [C::new(-2.0, 0.0), C::new(2.0, 1.0), C::new(2.1, 0.9)];
        let seeds = seed_green_critical(&centroids);
        assert_eq!(seeds.len(), 2);
        assert!(seeds.iter().any(|s| (s - C::new(2.05, 0.95)).norm() < 1e-9));
    }
}
