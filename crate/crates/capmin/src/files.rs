//! JSON problem and result files for the command-line front end.
//!
//! A problem spec carries the function (either a full expression tree or a
//! shorthand list of root-product groups), optional solver settings, an
//! optional Pade request, and the function's known polar singularities for
//! pole classification. A result file stores the solved differential, the
//! traced set geometry, the capacity estimate, the certificate reports and
//! enough metadata to re-run every check on the stored data alone.
//!
//! All complex numbers are stored as `[re, im]` pairs. Serialization uses
//! shortest-round-trip float formatting, so `load(save(x))` reproduces every
//! numeric field bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::algebra::FunctionExpr;
use crate::capacity::{equilibrium, geometry_checks, s_residual, CapacityEstimate, DiscreteMeasure};
use crate::pade::PoleReport;
use crate::qdiff::trace::{Anchor, ArcTermination, TrajectoryArc};
use crate::qdiff::{validate_normalization, QuadraticDifferential};
use crate::solver::{Component, MinimalSet, Solution};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Pass bar for the re-run S-property residual.
pub const S_RESIDUAL_BAR: f64 = 1e-3;

fn pt(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn cpt(p: [f64; 2]) -> C {
    C::new(p[0], p[1])
}

// ---------------------------------------------------------------------------
// Problem specs
// ---------------------------------------------------------------------------

/// One branch-point group in the shorthand form: the points under a single
/// root of the given order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GroupSpec {
    pub points: Vec<[f64; 2]>,
    pub order: u32,
}

/// Solver settings a spec file may override. Everything is optional; absent
/// fields fall back to the scale-derived defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Convergence bar on the period-residual ∞-norm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Nodes per arc for the reported equilibrium measure and checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_nodes: Option<usize>,
    /// Cap on tree-shape combinations tried per connectivity candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_shape_combos: Option<usize>,
    /// Explicit starting positions for the free zeros. Used for every
    /// candidate structure whose unknown count matches the number of seeds;
    /// rejected as invalid input when no structure can use them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<[f64; 2]>>,
    /// Default decimal digits for Pade computations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digits: Option<u32>,
    /// Fixed series truncation order (power of 1/z). When set, a Pade degree
    /// needing more coefficients than this is an input error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_order: Option<usize>,
}

/// A Pade report requested alongside a solve, computed against the solved
/// set and embedded in the result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PadeRequest {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digits: Option<u32>,
    /// Pole classification radius; defaults to 0.05 × problem scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// Outputs the spec asks for in addition to the result file itself.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct OutputRequests {
    /// SVG figure path, used when the command line does not name one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemSpecFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Full expression tree. Exactly one of `function` and `groups` must be
    /// present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionExpr>,
    /// Shorthand: the function is the sum of one root product per group.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupSpec>,
    /// Poles of the function itself, for Pade pole classification.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polar_singularities: Vec<[f64; 2]>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pade: Option<PadeRequest>,
    #[serde(default)]
    pub outputs: OutputRequests,
}

impl ProblemSpecFile {
    /// The function to analyze, assembled from whichever form the spec used.
    pub fn function(&self) -> Result<FunctionExpr> {
        match (&self.function, self.groups.is_empty()) {
            (Some(f), true) => Ok(f.clone()),
            (None, false) => {
                let mut children: Vec<FunctionExpr> = self
                    .groups
                    .iter()
                    .map(|g| FunctionExpr::RootProduct { points: g.points.clone(), order: g.order })
                    .collect();
                Ok(if children.len() == 1 {
                    children.pop().unwrap()
                } else {
                    FunctionExpr::Sum { children }
                })
            }
            (Some(_), false) => Err(Error::InvalidInput(
                "spec must give either `function` or `groups`, not both".into(),
            )),
            (None, true) => {
                Err(Error::InvalidInput("spec gives neither `function` nor `groups`".into()))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema version {} (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        self.function()?.validate()?;
        for p in &self.polar_singularities {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidInput("non-finite polar singularity".into()));
            }
        }
        if let Some(t) = self.solver.tolerance {
            if !(t > 0.0) {
                return Err(Error::InvalidInput("tolerance must be positive".into()));
            }
        }
        if let Some(m) = self.solver.capacity_nodes {
            if m < 8 {
                return Err(Error::InvalidInput("capacityNodes must be at least 8".into()));
            }
        }
        if let Some(seeds) = &self.solver.seeds {
            if seeds.is_empty() {
                return Err(Error::InvalidInput("seeds list must not be empty when given".into()));
            }
            if seeds.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(Error::InvalidInput("non-finite seed position".into()));
            }
        }
        if let Some(d) = self.solver.digits {
            if d < 16 {
                return Err(Error::InvalidInput("digits must be at least 16".into()));
            }
        }
        if let Some(p) = &self.pade {
            if let Some(d) = p.digits {
                if d < 16 {
                    return Err(Error::InvalidInput("pade digits must be at least 16".into()));
                }
            }
            if let Some(e) = p.epsilon {
                if !(e > 0.0) {
                    return Err(Error::InvalidInput("pade epsilon must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn polar_points(&self) -> Vec<C> {
        self.polar_singularities.iter().map(|&p| cpt(p)).collect()
    }
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

/// A point carrying a small integer mark: the bifurcation index for E₀ and
/// E₁ points, the critical order for E₂ points, the zero multiplicity for
/// differential zeros.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MarkedPoint {
    pub point: [f64; 2],
    pub mark: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QDifferentialData {
    pub poles: Vec<[f64; 2]>,
    pub zeros: Vec<MarkedPoint>,
}

impl QDifferentialData {
    pub fn from_q(q: &QuadraticDifferential) -> Self {
        QDifferentialData {
            poles: q.poles().iter().map(|&z| pt(z)).collect(),
            zeros: q.zeros().iter().map(|&(z, m)| MarkedPoint { point: pt(z), mark: m }).collect(),
        }
    }

    pub fn to_q(&self) -> Result<QuadraticDifferential> {
        QuadraticDifferential::new(
            self.poles.iter().map(|&p| cpt(p)).collect(),
            self.zeros.iter().map(|z| (cpt(z.point), z.mark)).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum AnchorData {
    Pole { point: [f64; 2] },
    Zero { point: [f64; 2], mult: u32 },
}

impl AnchorData {
    fn from_anchor(a: &Anchor) -> Self {
        match *a {
            Anchor::Pole { point } => AnchorData::Pole { point: pt(point) },
            Anchor::Zero { point, mult } => AnchorData::Zero { point: pt(point), mult },
        }
    }

    fn to_anchor(self) -> Anchor {
        match self {
            AnchorData::Pole { point } => Anchor::Pole { point: cpt(point) },
            AnchorData::Zero { point, mult } => Anchor::Zero { point: cpt(point), mult },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArcData {
    pub start: AnchorData,
    pub end: AnchorData,
    pub samples: Vec<[f64; 2]>,
    pub q_length: f64,
    pub end_snap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ComponentData {
    pub e0: Vec<usize>,
    pub e1: Vec<usize>,
    pub arcs: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MinimalSetData {
    pub e0: Vec<MarkedPoint>,
    pub e1: Vec<MarkedPoint>,
    pub e2: Vec<MarkedPoint>,
    pub arcs: Vec<ArcData>,
    pub components: Vec<ComponentData>,
}

impl MinimalSetData {
    /// Every stored arc must join two anchors; sets with runaway arcs are a
    /// solver failure and are never written.
    pub fn from_set(set: &MinimalSet) -> Result<Self> {
        let marked = |v: &[(C, u32)]| {
            v.iter().map(|&(z, m)| MarkedPoint { point: pt(z), mark: m }).collect::<Vec<_>>()
        };
        let mut arcs = Vec::with_capacity(set.arcs.len());
        for arc in &set.arcs {
            let start = arc
                .start
                .as_ref()
                .ok_or_else(|| Error::Internal("arc without a start anchor".into()))?;
            let end = match &arc.end {
                ArcTermination::Anchor(a) => a,
                other => {
                    return Err(Error::Internal(format!(
                        "arc terminated off-anchor ({other:?}); refusing to store"
                    )))
                }
            };
            arcs.push(ArcData {
                start: AnchorData::from_anchor(start),
                end: AnchorData::from_anchor(end),
                samples: arc.samples.iter().map(|&z| pt(z)).collect(),
                q_length: arc.q_length,
                end_snap: arc.end_snap_distance,
            });
        }
        Ok(MinimalSetData {
            e0: marked(&set.e0),
            e1: marked(&set.e1),
            e2: marked(&set.e2),
            arcs,
            components: set
                .components
                .iter()
                .map(|c| ComponentData { e0: c.e0.clone(), e1: c.e1.clone(), arcs: c.arcs.clone() })
                .collect(),
        })
    }

    pub fn to_set(&self) -> Result<MinimalSet> {
        let unmarked = |v: &[MarkedPoint]| {
            v.iter().map(|m| (cpt(m.point), m.mark)).collect::<Vec<_>>()
        };
        let n_arcs = self.arcs.len();
        for (i, c) in self.components.iter().enumerate() {
            let ok = c.e0.iter().all(|&j| j < self.e0.len())
                && c.e1.iter().all(|&j| j < self.e1.len())
                && c.arcs.iter().all(|&j| j < n_arcs);
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "component {i} references points or arcs that do not exist"
                )));
            }
        }
        let mut arcs = Vec::with_capacity(n_arcs);
        for (i, a) in self.arcs.iter().enumerate() {
            if a.samples.len() < 2 {
                return Err(Error::InvalidInput(format!("arc {i} has fewer than 2 samples")));
            }
            arcs.push(TrajectoryArc {
                samples: a.samples.iter().map(|&p| cpt(p)).collect(),
                start: Some(a.start.to_anchor()),
                end: ArcTermination::Anchor(a.end.to_anchor()),
                q_length: a.q_length,
                end_snap_distance: a.end_snap,
            });
        }
        Ok(MinimalSet {
            e0: unmarked(&self.e0),
            e1: unmarked(&self.e1),
            e2: unmarked(&self.e2),
            arcs,
            components: self
                .components
                .iter()
                .map(|c| Component { e0: c.e0.clone(), e1: c.e1.clone(), arcs: c.arcs.clone() })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CapacityData {
    pub value: f64,
    pub energy: f64,
    pub discretization_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement_delta: Option<f64>,
}

impl CapacityData {
    pub fn from_estimate(e: &CapacityEstimate) -> Self {
        CapacityData {
            value: e.value,
            energy: e.energy,
            discretization_size: e.discretization_size,
            refinement_delta: e.refinement_delta,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NormalizationData {
    pub residual: f64,
    pub bar: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SPropertyData {
    pub residual: f64,
    pub bar: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ComponentBoundsData {
    pub diameter: f64,
    pub capacity: f64,
    pub lower: f64,
    pub upper: f64,
    pub error_bar: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GeometryData {
    pub hull_max_excess: f64,
    pub hull_ok: bool,
    pub components: Vec<ComponentBoundsData>,
    pub ok: bool,
}

/// The certificates attached to a solved set. The normalization, S-property
/// and geometry blocks are recomputable from the stored geometry alone;
/// `period_residual` and `end_snap` are solver outputs carried for context.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CheckReports {
    pub period_residual: f64,
    pub end_snap: f64,
    pub normalization: NormalizationData,
    pub s_property: SPropertyData,
    pub geometry: GeometryData,
    pub all_pass: bool,
}

/// A Pade pole report, either embedded in a result file or standalone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PoleReportData {
    pub n: usize,
    pub digits: u32,
    /// Denominator degree after rank reduction.
    pub effective_degree: usize,
    pub poles: Vec<[f64; 2]>,
    /// Classification radius; absent when no set was available to classify
    /// against, along with the fields below.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spurious: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systematic: Vec<[f64; 2]>,
    /// Sup over a probe circle of the potential mismatch; absent when no
    /// pole lies near the set (or no classification was done).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
}

impl PoleReportData {
    pub fn classified(n: usize, digits: u32, effective_degree: usize, epsilon: f64, r: &PoleReport) -> Self {
        PoleReportData {
            n,
            digits,
            effective_degree,
            poles: r.poles.iter().map(|&z| pt(z)).collect(),
            epsilon: Some(epsilon),
            near_fraction: Some(r.near_fraction),
            spurious: r.spurious.iter().map(|&z| pt(z)).collect(),
            systematic: r.systematic.iter().map(|&z| pt(z)).collect(),
            discrepancy: r.discrepancy.is_finite().then_some(r.discrepancy),
        }
    }

    pub fn unclassified(n: usize, digits: u32, effective_degree: usize, poles: &[C]) -> Self {
        PoleReportData {
            n,
            digits,
            effective_degree,
            poles: poles.iter().map(|&z| pt(z)).collect(),
            epsilon: None,
            near_fraction: None,
            spurious: Vec::new(),
            systematic: Vec::new(),
            discrepancy: None,
        }
    }

    pub fn pole_points(&self) -> Vec<C> {
        self.poles.iter().map(|&p| cpt(p)).collect()
    }
}

/// Standalone pole-report file written by the `pade` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PoleFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub report: PoleReportData,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Metadata {
    pub tool_version: String,
    /// Component-structure encoding of the winning candidate.
    pub encoding: String,
    pub capacity_nodes: usize,
    pub tolerance: f64,
    pub candidates_tried: usize,
    pub candidates_certified: usize,
    /// Wall-clock solve time. Informational only: this is the one field not
    /// covered by the determinism guarantee.
    pub solve_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ResultFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub function: FunctionExpr,
    pub q: QDifferentialData,
    pub set: MinimalSetData,
    pub capacity: CapacityData,
    pub checks: CheckReports,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pade: Option<PoleReportData>,
    pub meta: Metadata,
}

impl ResultFile {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema version {} (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if self.meta.capacity_nodes < 8 {
            return Err(Error::InvalidInput("capacityNodes must be at least 8".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Check orchestration
// ---------------------------------------------------------------------------

/// Re-runs every certificate that depends only on the stored data: the
/// asymptotic normalization of q, the equality of one-sided normal
/// derivatives of the Green function, hull containment and the per-component
/// capacity bounds. Returns the reports together with the equilibrium
/// measure and capacity they were computed from.
pub fn run_checks(
    q: &QuadraticDifferential,
    set: &MinimalSet,
    capacity_nodes: usize,
    period_residual: f64,
    end_snap: f64,
) -> Result<(CheckReports, DiscreteMeasure, CapacityEstimate)> {
    let norm = validate_normalization(q);
    let (measure, cap) = equilibrium(&set.arcs, capacity_nodes)?;
    let s = s_residual(set, &measure, &cap)?;
    let geo = geometry_checks(set, capacity_nodes)?;
    let s_pass = s < S_RESIDUAL_BAR;
    let reports = CheckReports {
        period_residual,
        end_snap,
        normalization: NormalizationData { residual: norm.residual, bar: norm.bar, pass: norm.pass },
        s_property: SPropertyData { residual: s, bar: S_RESIDUAL_BAR, pass: s_pass },
        geometry: GeometryData {
            hull_max_excess: geo.hull_max_excess,
            hull_ok: geo.hull_ok,
            components: geo
                .components
                .iter()
                .map(|c| ComponentBoundsData {
                    diameter: c.diameter,
                    capacity: c.capacity,
                    lower: c.lower,
                    upper: c.upper,
                    error_bar: c.error_bar,
                    ok: c.ok,
                })
                .collect(),
            ok: geo.ok,
        },
        all_pass: norm.pass && s_pass && geo.ok,
    };
    Ok((reports, measure, cap))
}

/// Assembles a result file from a certified solution, re-measuring the
/// capacity and running the full check suite at `capacity_nodes`.
pub fn result_from_solution(
    name: Option<String>,
    function: &FunctionExpr,
    sol: &Solution,
    capacity_nodes: usize,
    tolerance: f64,
    pade: Option<PoleReportData>,
    solve_ms: u64,
) -> Result<ResultFile> {
    let (checks, _, cap) =
        run_checks(&sol.q, &sol.set, capacity_nodes, sol.period_residual, sol.end_snap)?;
    Ok(ResultFile {
        schema_version: SCHEMA_VERSION,
        name,
        function: function.clone(),
        q: QDifferentialData::from_q(&sol.q),
        set: MinimalSetData::from_set(&sol.set)?,
        capacity: CapacityData::from_estimate(&cap),
        checks,
        pade,
        meta: Metadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            encoding: sol.encoding.clone(),
            capacity_nodes,
            tolerance,
            candidates_tried: sol.candidates_tried,
            candidates_certified: sol.candidates_certified,
            solve_ms,
        },
    })
}

// ---------------------------------------------------------------------------
// Disk IO
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub fn load_spec(path: &Path) -> Result<ProblemSpecFile> {
    let spec: ProblemSpecFile = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

pub fn save_spec(path: &Path, spec: &ProblemSpecFile) -> Result<()> {
    spec.validate()?;
    write_json(path, spec)
}

pub fn load_result(path: &Path) -> Result<ResultFile> {
    let result: ResultFile = read_json(path)?;
    result.validate()?;
    Ok(result)
}

pub fn save_result(path: &Path, result: &ResultFile) -> Result<()> {
    result.validate()?;
    write_json(path, result)
}

pub fn load_pole_file(path: &Path) -> Result<PoleFile> {
    let file: PoleFile = read_json(path)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported schema version {} (expected {})",
            file.schema_version, SCHEMA_VERSION
        )));
    }
    Ok(file)
}

pub fn save_pole_file(path: &Path, file: &PoleFile) -> Result<()> {
    write_json(path, file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::solver::{solve_function, SolveOptions};

    fn two_point_spec() -> ProblemSpecFile {
        ProblemSpecFile {
            schema_version: SCHEMA_VERSION,
            name: Some("two-point".into()),
            function: Some(examples::two_point_sqrt()),
            groups: Vec::new(),
            polar_singularities: Vec::new(),
            solver: SolverSettings::default(),
            pade: None,
            outputs: OutputRequests::default(),
        }
    }

    fn solved_two_point() -> ResultFile {
        let f = examples::two_point_sqrt();
        let sol = solve_function(&f, &SolveOptions::default()).unwrap();
        result_from_solution(Some("two-point".into()), &f, &sol, 64, 1e-10, None, 17).unwrap()
    }

    #[test]
    fn spec_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        let spec = two_point_spec();
        save_spec(&path, &spec).unwrap();
        let back = load_spec(&path).unwrap();
        assert_eq!(
            serde_json::to_string(&spec).unwrap(),
            serde_json::to_string(&back).unwrap()
        );
    }

    #[test]
    fn groups_shorthand_expands_to_a_sum() {
        let spec = ProblemSpecFile {
            function: None,
            groups: vec![
                GroupSpec { points: vec![[1.0, 0.0], [-1.0, 0.0]], order: 2 },
                GroupSpec { points: vec![[0.0, 1.0], [0.0, -1.0]], order: 2 },
            ],
            ..two_point_spec()
        };
        match spec.function().unwrap() {
            FunctionExpr::Sum { children } => assert_eq!(children.len(), 2),
            other => panic!("expected a sum, got {other:?}"),
        }
    }

    #[test]
    fn spec_needs_exactly_one_function_form() {
        let both = ProblemSpecFile {
            groups: vec![GroupSpec { points: vec![[1.0, 0.0], [-1.0, 0.0]], order: 2 }],
            ..two_point_spec()
        };
        assert!(both.validate().is_err());
        let neither = ProblemSpecFile { function: None, ..two_point_spec() };
        assert!(neither.validate().is_err());
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let spec = ProblemSpecFile { schema_version: 99, ..two_point_spec() };
        assert!(matches!(spec.validate(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn malformed_json_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{\"schemaVersion\": 1, ").unwrap();
        assert!(matches!(load_spec(&path), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn missing_result_fields_are_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.json");
        let result = solved_two_point();
        let mut v = serde_json::to_value(&result).unwrap();
        v.as_object_mut().unwrap().remove("capacity");
        std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        assert!(matches!(load_result(&path), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn result_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.json");
        let result = solved_two_point();
        save_result(&path, &result).unwrap();
        let back = load_result(&path).unwrap();
        let a = serde_json::to_string(&result).unwrap();
        let b = serde_json::to_string(&back).unwrap();
        assert_eq!(a, b);
        assert_eq!(result.capacity.value.to_bits(), back.capacity.value.to_bits());
        assert_eq!(
            result.checks.s_property.residual.to_bits(),
            back.checks.s_property.residual.to_bits()
        );
        for (x, y) in result.set.arcs[0].samples.iter().zip(&back.set.arcs[0].samples) {
            assert_eq!(x[0].to_bits(), y[0].to_bits());
            assert_eq!(x[1].to_bits(), y[1].to_bits());
        }
    }

    #[test]
    fn rerunning_checks_on_stored_data_reproduces_the_flags() {
        let result = solved_two_point();
        let set = result.set.to_set().unwrap();
        let q = result.q.to_q().unwrap();
        let (again, _, cap) = run_checks(
            &q,
            &set,
            result.meta.capacity_nodes,
            result.checks.period_residual,
            result.checks.end_snap,
        )
        .unwrap();
        assert_eq!(again.all_pass, result.checks.all_pass);
        assert_eq!(again.normalization.pass, result.checks.normalization.pass);
        assert_eq!(again.s_property.pass, result.checks.s_property.pass);
        assert_eq!(again.geometry.ok, result.checks.geometry.ok);
        assert_eq!(again.s_property.residual.to_bits(), result.checks.s_property.residual.to_bits());
        assert_eq!(cap.value.to_bits(), result.capacity.value.to_bits());
    }

    #[test]
    fn stored_set_rebuilds_into_the_same_geometry() {
        let result = solved_two_point();
        let set = result.set.to_set().unwrap();
        assert_eq!(set.arcs.len(), result.set.arcs.len());
        assert_eq!(set.e0.len(), 2);
        assert!(set.arcs.iter().all(|a| a.start.is_some()));
        assert!(set
            .arcs
            .iter()
            .all(|a| matches!(a.end, ArcTermination::Anchor(_))));
    }

    #[test]
    fn component_references_are_validated() {
        let result = solved_two_point();
        let mut data = result.set.clone();
        data.components[0].arcs.push(99);
        assert!(matches!(data.to_set(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn infinite_discrepancy_is_stored_as_absent() {
        let report = PoleReport {
            poles: vec![C::new(3.0, 3.0)],
            near_fraction: 0.0,
            spurious: vec![C::new(3.0, 3.0)],
            systematic: Vec::new(),
            discrepancy: f64::INFINITY,
        };
        let data = PoleReportData::classified(4, 32, 1, 0.05, &report);
        assert!(data.discrepancy.is_none());
        let text = serde_json::to_string(&data).unwrap();
        let back: PoleReportData = serde_json::from_str(&text).unwrap();
        assert!(back.discrepancy.is_none());
        assert_eq!(back.near_fraction, Some(0.0));
    }
}
