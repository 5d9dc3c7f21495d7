//! Named, tolerance-aware checks of the identities, inequalities, and
//! qualitative properties soliton surfaces satisfy, reported as
//! reproducible entries: measured left side, measured right side,
//! tolerance, pass flag, and a digest of the inputs.
//!
//! Checks whose hypotheses the input does not satisfy report
//! `applicable: false` with a vacuous pass; the overall verdict of a
//! report counts applicable entries only. Tolerances that absorb
//! discretization error scale with the mesh size and are pinned here.

use nalgebra::{Point2, Point3, Vector2, Vector3};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundary::PlanarBoundary;
use crate::domain::{reflect, DomainMesh};
use crate::frame::DensityFrame;
use crate::graph::GraphSolution;
use crate::integrals::{conormal_height_integral, flux, squared_normal_flux};
use crate::mesh::TriMesh;
use crate::slices::coarea_slices;

/// Relative slack on the global height-area comparison.
pub const AREA_GLOBAL_SLACK: f64 = 0.01;
/// Relative slack on the per-level coarea rate bound.
pub const AREA_SLICE_SLACK: f64 = 0.05;
/// Fraction of levels that must satisfy the rate bound (the bound is an
/// equality at the apex, so the coarsest levels wobble around it).
pub const AREA_SLICE_FRACTION: f64 = 0.9;
/// Number of slicing levels used by the area check.
pub const AREA_SLICE_LEVELS: usize = 32;
/// Symmetry tolerance factor: sym_tol = max(1e-9, factor * h^2). The
/// discretization asymmetry constant grows with solution steepness; 3.0
/// covers the solvable unit-disk range |lambda| <= 1/2 with a 2x margin
/// while staying far below any genuinely asymmetric input.
pub const SYMMETRY_FACTOR: f64 = 3.0;
/// Contact-angle constancy tolerance factor: angle_tol = factor * h.
pub const CONTACT_ANGLE_FACTOR: f64 = 2.0;
/// Integrated flux-balance tolerance factor: tol = factor * h. Calibrated
/// over single-loop solves (residual/h stays below 1.9 on disks and 2.5 on
/// a 1.2 x 0.7 ellipse across the solvable lambda range); surfaces with
/// several boundary loops concentrate boundary-layer curvature and exceed
/// any single constant, so the integrated check declares itself
/// inapplicable there. A non-soliton cap (hemisphere, off-grid lambda)
/// violates the identity by an h-independent margin, so the factor keeps
/// its discriminating power for meshes with edge length below ~0.05.
pub const FLUX_INTEGRATED_FACTOR: f64 = 4.0;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("check requires a closed mesh, found {0} boundary loops")]
    NotClosed(usize),
    #[error("check requires a mesh with exactly one boundary loop, found {0}")]
    NotSingleLoop(usize),
    #[error("check requires zero boundary data, found height {0}")]
    NonzeroBoundaryData(f64),
    #[error("check requires a converged solution")]
    NotConverged,
    #[error("cap boundary does not match the surface boundary: {0}")]
    BoundaryMismatch(String),
    #[error("multi-boundary data invalid: {0}")]
    BadSpec(String),
}

/// One named check result.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
    pub applicable: bool,
    pub anchor: String,
    pub inputs: String,
}

/// An ordered collection of check entries with a deterministic layout.
#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = CheckEntry>) {
        self.entries.extend(entries);
    }

    /// Merges another report; the combined order is canonical.
    pub fn merge(&mut self, other: VerificationReport) {
        self.entries.extend(other.entries);
        self.sort();
    }

    /// Canonical order: check name, then input digest.
    pub fn sort(&mut self) {
        self.entries
            .sort_by(|a, b| (a.check.as_str(), a.inputs.as_str()).cmp(&(b.check.as_str(), b.inputs.as_str())));
    }

    /// True when every applicable entry passes.
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| !e.applicable || e.pass)
    }

    pub fn to_json(&self) -> String {
        let mut sorted = self.clone();
        sorted.sort();
        serde_json::to_string_pretty(&sorted.entries).expect("report serializes")
    }
}

/// Rolling input digest; entries carry its first 16 hex characters.
struct InputDigest(Sha256);

impl InputDigest {
    fn new(check: &str) -> Self {
        let mut d = Sha256::new();
        d.update(check.as_bytes());
        InputDigest(d)
    }

    fn f64(&mut self, x: f64) -> &mut Self {
        self.0.update(x.to_bits().to_le_bytes());
        self
    }

    fn usize(&mut self, x: usize) -> &mut Self {
        self.0.update((x as u64).to_le_bytes());
        self
    }

    fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.update(b);
        self
    }

    fn vector3(&mut self, v: &Vector3<f64>) -> &mut Self {
        self.f64(v.x).f64(v.y).f64(v.z)
    }

    fn finish(self) -> String {
        let hex = self.0.finalize();
        hex.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn digest_solution(check: &str, sol: &GraphSolution) -> String {
    let mut d = InputDigest::new(check);
    let dom = sol.domain();
    for p in dom.points() {
        d.f64(p.x).f64(p.y);
    }
    for t in dom.triangles() {
        d.usize(t[0]).usize(t[1]).usize(t[2]);
    }
    for &h in dom.heights() {
        d.f64(h);
    }
    for &u in sol.heights() {
        d.f64(u);
    }
    d.f64(sol.lambda());
    d.finish()
}

fn digest_boundary(d: &mut InputDigest, boundary: &PlanarBoundary) {
    let pp = boundary.plane_point();
    d.f64(pp.x).f64(pp.y).f64(pp.z);
    d.vector3(&boundary.plane_normal());
    for ci in 0..boundary.n_curves() {
        d.f64(boundary.curve_length(ci)).f64(boundary.enclosed_area(ci));
    }
    for hs in boundary.heights() {
        for &h in hs {
            d.f64(h);
        }
    }
}

fn entry(
    check: &str,
    lhs: f64,
    rhs: f64,
    tol: f64,
    pass: bool,
    applicable: bool,
    anchor: &str,
    inputs: String,
) -> CheckEntry {
    CheckEntry {
        check: check.to_string(),
        lhs,
        rhs,
        tol,
        pass,
        applicable,
        anchor: anchor.to_string(),
        inputs,
    }
}

/// Closed surfaces cannot balance the weighted normal flux: on any closed
/// mesh the plain flux vanishes identically while the squared flux is
/// positive unless the normal is everywhere orthogonal to the density
/// direction, so no lambda satisfies the balance. Passes when the mesh
/// exhibits exactly that obstruction.
pub fn check_closed_infeasibility(mesh: &TriMesh, v: &Vector3<f64>) -> Result<CheckEntry, VerifyError> {
    let loops = mesh.boundary_loops().len();
    if loops != 0 {
        return Err(VerifyError::NotClosed(loops));
    }
    let i1 = flux(mesh, v);
    let i2 = squared_normal_flux(mesh, v);
    let tol = 1e-10 * (1.0 + mesh.total_area());
    let mut d = InputDigest::new("closed_infeasibility");
    d.bytes(&mesh.canonical_bytes()).vector3(v);
    Ok(entry(
        "closed_infeasibility",
        i1.abs(),
        i2,
        tol,
        i1.abs() <= tol && i2 > tol,
        true,
        "closed surface: normal flux vanishes while its square stays positive, so no lambda balances them",
        d.finish(),
    ))
}

/// Length-over-weighted-area bound on |lambda| for a compact surface
/// spanning a single planar curve. A failing entry is a nonexistence
/// certificate for that lambda.
pub fn check_lambda_bound(
    boundary: &PlanarBoundary,
    lambda: f64,
    v: &Vector3<f64>,
) -> Result<CheckEntry, VerifyError> {
    let mut d = InputDigest::new("lambda_bound");
    digest_boundary(&mut d, boundary);
    d.f64(lambda).vector3(v);
    let inputs = d.finish();
    match boundary.solvability_bound(v) {
        Ok(bound) => Ok(entry(
            "lambda_bound",
            lambda.abs(),
            bound,
            1e-9,
            lambda.abs() <= bound + 1e-9,
            true,
            "boundary length caps |lambda| for any spanning compact soliton",
            inputs,
        )),
        Err(crate::boundary::BoundaryError::PlaneParallelToDensity) => Ok(entry(
            "lambda_bound",
            lambda.abs(),
            f64::INFINITY,
            1e-9,
            true,
            false,
            "bound undefined: boundary plane is parallel to the density direction",
            inputs,
        )),
        Err(crate::boundary::BoundaryError::MultiCurve(n)) => Err(VerifyError::NotSingleLoop(n)),
        Err(e) => Err(VerifyError::BadSpec(e.to_string())),
    }
}

/// One boundary component of the signed multi-boundary bound.
#[derive(Debug, Clone)]
pub struct MultiBoundaryComponent {
    /// Unit normal of the component's plane, chosen with `<a, v>` > 0.
    pub plane_normal: Vector3<f64>,
    /// +1 when the solution's outward cap conormal opposes the normal.
    pub sign: i8,
    /// Area of the planar cap the component bounds.
    pub area: f64,
    /// Length of the component curve.
    pub length: f64,
}

/// Per-component data for the signed multi-boundary length bound.
#[derive(Debug, Clone)]
pub struct MultiBoundarySpec {
    pub components: Vec<MultiBoundaryComponent>,
}

impl MultiBoundarySpec {
    pub fn validate(&self, v: &Vector3<f64>) -> Result<(), VerifyError> {
        if self.components.is_empty() {
            return Err(VerifyError::BadSpec("no components".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if (c.plane_normal.norm() - 1.0).abs() > 1e-9 {
                return Err(VerifyError::BadSpec(format!("component {i}: normal not unit")));
            }
            if c.plane_normal.dot(v) <= 0.0 {
                return Err(VerifyError::BadSpec(format!(
                    "component {i}: normal must have positive alignment with the density direction"
                )));
            }
            if c.sign != 1 && c.sign != -1 {
                return Err(VerifyError::BadSpec(format!("component {i}: sign must be +1 or -1")));
            }
            if !(c.area > 0.0 && c.length > 0.0) {
                return Err(VerifyError::BadSpec(format!(
                    "component {i}: area and length must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Reads the component data off a converged solution over a (possibly
    /// multiply connected) domain with planar boundary loops: outer loops
    /// carry sign +1, holes sign -1, matching the induced cap orientation
    /// of an upward graph.
    pub fn from_solution(sol: &GraphSolution) -> Result<Self, VerifyError> {
        if !sol.converged() {
            return Err(VerifyError::NotConverged);
        }
        let dom = sol.domain();
        for lp in dom.boundary_loops() {
            let h0 = dom.heights()[lp[0]];
            if lp.iter().any(|&b| dom.heights()[b] != h0) {
                return Err(VerifyError::BadSpec(
                    "boundary loop heights must be constant (planar caps)".into(),
                ));
            }
        }
        let components = (0..dom.boundary_loops().len())
            .map(|li| {
                let signed = dom.boundary_loop_signed_area(li);
                MultiBoundaryComponent {
                    plane_normal: Vector3::z(),
                    sign: if signed > 0.0 { 1 } else { -1 },
                    area: signed.abs(),
                    length: dom.boundary_loop_length(li),
                }
            })
            .collect();
        Ok(MultiBoundarySpec { components })
    }
}

/// Signed multi-boundary length bound: twice lambda times the signed sum
/// of weighted cap areas cannot exceed the total boundary length.
pub fn check_multi_boundary(
    spec: &MultiBoundarySpec,
    lambda: f64,
    v: &Vector3<f64>,
) -> Result<CheckEntry, VerifyError> {
    spec.validate(v)?;
    let lhs: f64 = 2.0
        * lambda
        * spec
            .components
            .iter()
            .map(|c| c.sign as f64 * c.plane_normal.dot(v) * c.area)
            .sum::<f64>();
    let rhs: f64 = spec.components.iter().map(|c| c.length).sum();
    let tol = 1e-9 * (1.0 + rhs);
    let mut d = InputDigest::new("multi_boundary");
    for c in &spec.components {
        d.vector3(&c.plane_normal).f64(c.sign as f64).f64(c.area).f64(c.length);
    }
    d.f64(lambda).vector3(v);
    Ok(entry(
        "multi_boundary",
        lhs,
        rhs,
        tol,
        lhs <= rhs + tol,
        true,
        "signed sum of weighted cap areas times 2 lambda stays below the total boundary length",
        d.finish(),
    ))
}

/// With zero boundary data a converged solution lies strictly on one side
/// of the boundary plane, the side determined by lambda against -1/2; the
/// planar branch at lambda = -1/2 must vanish identically.
pub fn check_one_sided(sol: &GraphSolution) -> Result<CheckEntry, VerifyError> {
    let dom = sol.domain();
    for lp in dom.boundary_loops() {
        for &b in lp {
            if dom.heights()[b] != 0.0 {
                return Err(VerifyError::NonzeroBoundaryData(dom.heights()[b]));
            }
        }
    }
    let inputs = digest_solution("one_sided", sol);
    if !sol.converged() {
        return Ok(entry(
            "one_sided",
            0.0,
            0.0,
            0.0,
            true,
            false,
            "not applicable: solver did not converge, no surface to test",
            inputs,
        ));
    }
    let lambda = sol.lambda();
    let (min_u, max_u) = sol.interior_range().expect("interior vertices exist");
    if lambda == -0.5 {
        let sup = min_u.abs().max(max_u.abs());
        let tol = 1e-9;
        Ok(entry(
            "one_sided",
            sup,
            0.0,
            tol,
            sup <= tol,
            true,
            "planar branch: zero data at the planar lambda forces the zero solution",
            inputs,
        ))
    } else if lambda > -0.5 {
        Ok(entry(
            "one_sided",
            max_u,
            0.0,
            0.0,
            max_u < 0.0,
            true,
            "interior lies strictly below the boundary plane for lambda above the planar value",
            inputs,
        ))
    } else {
        Ok(entry(
            "one_sided",
            min_u,
            0.0,
            0.0,
            min_u > 0.0,
            true,
            "interior lies strictly above the boundary plane for lambda below the planar value",
            inputs,
        ))
    }
}

/// Height-area comparison: 4 pi h <= |1+2 lambda| A globally, and the
/// slicewise coarea rate bound 4 pi <= |1+2 lambda| dA/dt that it
/// integrates. The rate bound is an equality at the apex in the continuum,
/// so a fixed fraction of levels must clear it within slack.
pub fn check_area_estimate(sol: &GraphSolution) -> Result<Vec<CheckEntry>, VerifyError> {
    if !sol.converged() {
        return Err(VerifyError::NotConverged);
    }
    let dom = sol.domain();
    let inputs_global = digest_solution("area_estimate", sol);
    let inputs_slices = digest_solution("area_estimate_slices", sol);
    let c0 = dom.heights()[dom.boundary_loops()[0][0]];
    let planar_data = dom
        .boundary_loops()
        .iter()
        .all(|lp| lp.iter().all(|&b| dom.heights()[b] == c0));
    if !planar_data {
        let na = |check: &str, anchor: &str, inputs: String| {
            entry(check, 0.0, 0.0, 0.0, true, false, anchor, inputs)
        };
        return Ok(vec![
            na(
                "area_estimate",
                "not applicable: boundary is not contained in a horizontal plane",
                inputs_global,
            ),
            na(
                "area_estimate_slices",
                "not applicable: boundary is not contained in a horizontal plane",
                inputs_slices,
            ),
        ]);
    }

    let lambda = sol.lambda();
    let factor = (1.0 + 2.0 * lambda).abs();
    let u = sol.heights();
    let from_top = lambda < -0.5;
    let height = if from_top {
        u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - c0
    } else {
        c0 - u.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let area = sol.to_mesh().total_area();
    let lhs = 4.0 * std::f64::consts::PI * height;
    let rhs = factor * area;
    let mut pass = lhs <= rhs * (1.0 + AREA_GLOBAL_SLACK);
    if lambda == 0.0 {
        // Strict form: equality is impossible for the translating branch.
        pass = pass && lhs < rhs;
    }
    let global = entry(
        "area_estimate",
        lhs,
        rhs,
        AREA_GLOBAL_SLACK,
        pass,
        true,
        "cap height times 4 pi stays below |1+2 lambda| times the surface area",
        inputs_global,
    );

    let data = coarea_slices(dom, u, AREA_SLICE_LEVELS, from_top);
    let four_pi = 4.0 * std::f64::consts::PI;
    let fraction = if data.degenerate {
        1.0
    } else {
        let ok = data
            .coarea_rates
            .iter()
            .filter(|&&rate| four_pi <= factor * rate * (1.0 + AREA_SLICE_SLACK))
            .count();
        ok as f64 / data.coarea_rates.len() as f64
    };
    let slices = entry(
        "area_estimate_slices",
        fraction,
        AREA_SLICE_FRACTION,
        AREA_SLICE_SLACK,
        fraction >= AREA_SLICE_FRACTION,
        true,
        "per-level coarea rate clears 4 pi / |1+2 lambda|, tight at the apex",
        inputs_slices,
    );
    Ok(vec![global, slices])
}

/// Linear interpolation of per-vertex boundary heights at an arbitrary
/// point, along the nearest segment of the given boundary loop.
fn loop_height_at(dom: &DomainMesh, lp: &[usize], q: &Point2<f64>) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..lp.len() {
        let a = dom.points()[lp[k]];
        let b = dom.points()[lp[(k + 1) % lp.len()]];
        let e = b - a;
        let t = ((q - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
        let dist = (q - (a + e * t)).norm();
        if dist < best.0 {
            let ha = dom.heights()[lp[k]];
            let hb = dom.heights()[lp[(k + 1) % lp.len()]];
            best = (dist, ha + (hb - ha) * t);
        }
    }
    best.1
}

/// Symmetric domain and boundary data force a solution symmetric under the
/// same planar reflection; measured as the sup of |u(x) - u(reflect(x))|
/// with reflected values read by barycentric interpolation. Inputs whose
/// shape or data lack the symmetry yield a not-applicable entry.
pub fn check_reflection_symmetry(sol: &GraphSolution, axis_normal: &Vector2<f64>) -> CheckEntry {
    assert!(
        (axis_normal.norm() - 1.0).abs() < 1e-9,
        "axis normal must be unit"
    );
    let dom = sol.domain();
    let mut d = InputDigest::new("reflection_symmetry");
    d.bytes(digest_solution("", sol).as_bytes()).f64(axis_normal.x).f64(axis_normal.y);
    let inputs = d.finish();

    let h = dom.mean_edge_length();
    let sym_tol = (SYMMETRY_FACTOR * h * h).max(1e-9);
    let not_applicable = |anchor: &str, inputs: String| {
        entry("reflection_symmetry", 0.0, 0.0, sym_tol, true, false, anchor, inputs)
    };
    if !sol.converged() {
        return not_applicable("not applicable: solver did not converge", inputs);
    }
    if !dom.shape().symmetric_under_reflection(axis_normal) {
        return not_applicable(
            "not applicable: domain shape is not symmetric under this reflection",
            inputs,
        );
    }
    // Boundary data must be symmetric: compare each boundary vertex height
    // against the loop-interpolated height at its mirror image.
    for lp in dom.boundary_loops() {
        for &b in lp {
            let q = reflect(&dom.points()[b], axis_normal);
            let mirrored = loop_height_at(dom, lp, &q);
            if (dom.heights()[b] - mirrored).abs() > sym_tol {
                return not_applicable(
                    "not applicable: boundary data is not symmetric under this reflection",
                    inputs,
                );
            }
        }
    }

    let locator = dom.locator();
    let mut sup = 0.0f64;
    let mut measured = 0usize;
    let mut interior = 0usize;
    for (i, p) in dom.points().iter().enumerate() {
        if dom.is_boundary_vertex(i) {
            continue;
        }
        interior += 1;
        let q = reflect(p, axis_normal);
        if let Some(mirrored) = locator.interpolate(&q, sol.heights()) {
            sup = sup.max((sol.heights()[i] - mirrored).abs());
            measured += 1;
        }
    }
    if interior == 0 || (measured as f64) < 0.9 * interior as f64 {
        return not_applicable(
            "not applicable: mirror images fall outside the triangulation",
            inputs,
        );
    }
    entry(
        "reflection_symmetry",
        sup,
        0.0,
        sym_tol,
        sup <= sym_tol,
        true,
        "symmetric domain and data force a solution symmetric under the reflection",
        inputs,
    )
}

/// A surface spanning a planar boundary and confined to its cylinder must
/// be a graph: the vertical projection is injective and lands inside the
/// domain. Counts violations of either condition.
pub fn check_graph_property(mesh: &TriMesh, boundary: &PlanarBoundary) -> Result<CheckEntry, VerifyError> {
    let loops = mesh.boundary_loops().len();
    if loops != 1 {
        return Err(VerifyError::NotSingleLoop(loops));
    }
    let h = mesh.mean_edge_length();
    let proj_radius = h / 4.0;
    let gap_tol = 1e-6 * (1.0 + mesh.bbox_diagonal());
    let slack = 1e-7 * (1.0 + mesh.bbox_diagonal());

    let flat: Vec<Point2<f64>> = mesh.vertices().iter().map(|p| boundary.project(p)).collect();
    let mut violations = 0usize;

    // Mesh-adjacent vertices may legitimately stack in projection where
    // the surface turns steep; a fold overlays sheets that are
    // combinatorially far apart, so adjacency is exempt.
    use std::collections::{HashMap, HashSet};
    let mut adjacent: HashSet<(usize, usize)> = HashSet::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            adjacent.insert((a.min(b), a.max(b)));
        }
    }
    let cell = proj_radius.max(1e-12);
    let key = |p: &Point2<f64>| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in flat.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    for (i, p) in flat.iter().enumerate() {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cellmates) = grid.get(&(kx + dx, ky + dy)) {
                    for &j in cellmates {
                        if j <= i || adjacent.contains(&(i, j)) {
                            continue;
                        }
                        let planar = (flat[j] - p).norm();
                        let height_gap =
                            (boundary.height_of(&mesh.vertices()[j]) - boundary.height_of(&mesh.vertices()[i])).abs();
                        if planar < proj_radius && height_gap > gap_tol {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    for p in &flat {
        if !boundary.contains(p) && boundary.distance_to_boundary(p) > slack {
            violations += 1;
        }
    }

    let mut d = InputDigest::new("graph_property");
    d.bytes(&mesh.canonical_bytes());
    digest_boundary(&mut d, boundary);
    Ok(entry(
        "graph_property",
        violations as f64,
        0.0,
        0.0,
        violations == 0,
        true,
        "surface confined to the boundary cylinder projects injectively onto the domain",
        d.finish(),
    ))
}

/// Per-triangle gradient of the linear interpolant of `u` over the domain.
fn tri_gradient(dom: &DomainMesh, u: &[f64], t: usize) -> Vector2<f64> {
    let tri = dom.triangles()[t];
    let p0 = dom.points()[tri[0]];
    let e1 = dom.points()[tri[1]] - p0;
    let e2 = dom.points()[tri[2]] - p0;
    let det = e1.x * e2.y - e1.y * e2.x;
    Vector2::new(
        (u[tri[1]] - u[tri[0]]) * e2.y - (u[tri[2]] - u[tri[0]]) * e1.y,
        (u[tri[2]] - u[tri[0]]) * e1.x - (u[tri[1]] - u[tri[0]]) * e2.x,
    ) / det
}

/// Contact angles of the lifted solution against the horizontal plane at
/// each boundary vertex (signed arctangent of the inward normal
/// derivative, loop by loop in traversal order), plus a constancy entry.
pub fn measure_contact_angle(sol: &GraphSolution) -> (Vec<(usize, f64)>, CheckEntry) {
    let dom = sol.domain();
    let u = sol.heights();
    let h = dom.mean_edge_length();

    // Area-weighted average of adjacent-triangle gradients per vertex.
    let mut grad_sum = vec![Vector2::zeros(); dom.n_vertices()];
    let mut area_sum = vec![0.0f64; dom.n_vertices()];
    for t in 0..dom.triangles().len() {
        let g = tri_gradient(dom, u, t);
        let a = dom.triangle_area(t);
        for &vtx in &dom.triangles()[t] {
            grad_sum[vtx] += g * a;
            area_sum[vtx] += a;
        }
    }

    let mut angles = Vec::new();
    for lp in dom.boundary_loops() {
        for k in 0..lp.len() {
            let b = lp[k];
            let prev = dom.points()[lp[(k + lp.len() - 1) % lp.len()]];
            let next = dom.points()[lp[(k + 1) % lp.len()]];
            let tangent = (next - prev).normalize();
            // Loops run with the interior on the left.
            let inward = Vector2::new(-tangent.y, tangent.x);
            let grad = grad_sum[b] / area_sum[b];
            angles.push((b, grad.dot(&inward).atan()));
        }
    }

    let angle_tol = CONTACT_ANGLE_FACTOR * h;
    let (min, max) = angles
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, a)| (lo.min(a), hi.max(a)));
    let spread = max - min;
    let inputs = digest_solution("contact_angle", sol);
    let check = if sol.converged() {
        entry(
            "contact_angle",
            spread,
            0.0,
            angle_tol,
            spread <= angle_tol,
            true,
            "the surface meets the boundary plane at a constant angle",
            inputs,
        )
    } else {
        entry(
            "contact_angle",
            spread,
            0.0,
            angle_tol,
            true,
            false,
            "not applicable: solver did not converge",
            inputs,
        )
    };
    (angles, check)
}

/// Fan cap over each boundary loop of the mesh, traversed opposite to the
/// loop so that surface plus cap forms a closed 2-cycle.
pub fn planar_cap_for(mesh: &TriMesh) -> Result<TriMesh, VerifyError> {
    if mesh.boundary_loops().is_empty() {
        return Err(VerifyError::NotSingleLoop(0));
    }
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for lp in mesh.boundary_loops() {
        let start = vertices.len();
        let mut centroid = Vector3::zeros();
        for &b in lp {
            centroid += mesh.vertices()[b].coords;
        }
        let centroid = Point3::from(centroid / lp.len() as f64);
        vertices.push(centroid);
        for &b in lp {
            vertices.push(mesh.vertices()[b]);
        }
        for k in 0..lp.len() {
            let a = start + 1 + k;
            let b = start + 1 + (k + 1) % lp.len();
            triangles.push([start, b, a]);
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| VerifyError::BoundaryMismatch(e.to_string()))
}

fn boundary_points_match(mesh: &TriMesh, cap: &TriMesh) -> Result<(), VerifyError> {
    let tol = 1e-9 * (1.0 + mesh.bbox_diagonal());
    let mesh_loops: Vec<Vec<Point3<f64>>> = mesh
        .boundary_loops()
        .iter()
        .map(|lp| lp.iter().map(|&b| mesh.vertices()[b]).collect())
        .collect();
    let cap_loops: Vec<Vec<Point3<f64>>> = cap
        .boundary_loops()
        .iter()
        .map(|lp| lp.iter().map(|&b| cap.vertices()[b]).collect())
        .collect();
    if mesh_loops.len() != cap_loops.len() {
        return Err(VerifyError::BoundaryMismatch(format!(
            "{} surface loops vs {} cap loops",
            mesh_loops.len(),
            cap_loops.len()
        )));
    }
    let mut used = vec![false; cap_loops.len()];
    for ml in &mesh_loops {
        let mut found = false;
        'cap: for (ci, cl) in cap_loops.iter().enumerate() {
            if used[ci] || cl.len() != ml.len() {
                continue;
            }
            for p in ml {
                if !cl.iter().any(|q| (q - p).norm() <= tol) {
                    continue 'cap;
                }
            }
            used[ci] = true;
            found = true;
            break;
        }
        if !found {
            return Err(VerifyError::BoundaryMismatch(
                "a surface boundary loop has no matching cap loop".into(),
            ));
        }
    }
    Ok(())
}

/// Two flux identities on a surface with a spanning cap: (cycle) the
/// normal fluxes of surface and cap cancel exactly, and (integrated) the
/// inward conormal flux balances the weighted normal integrals when the
/// surface solves the soliton equation. The second is the soliton
/// certificate; a non-soliton surface fails it for every lambda.
pub fn check_flux_balance(
    mesh: &TriMesh,
    cap: &TriMesh,
    frame: &DensityFrame,
) -> Result<Vec<CheckEntry>, VerifyError> {
    boundary_points_match(mesh, cap)?;
    let v = frame.v();
    let lambda = frame.lambda();
    let h = mesh.mean_edge_length();

    let mut d = InputDigest::new("flux_cycle");
    d.bytes(&mesh.canonical_bytes()).bytes(&cap.canonical_bytes()).vector3(&v).f64(lambda);
    let inputs_cycle = d.finish();
    let mut d = InputDigest::new("flux_integrated");
    d.bytes(&mesh.canonical_bytes()).bytes(&cap.canonical_bytes()).vector3(&v).f64(lambda);
    let inputs_int = d.finish();

    let cycle_residual = (flux(mesh, &v) + flux(cap, &v)).abs();
    let cycle_tol = 1e-9 * (1.0 + mesh.total_area() + cap.total_area());
    let cycle = entry(
        "flux_cycle",
        cycle_residual,
        0.0,
        cycle_tol,
        cycle_residual <= cycle_tol,
        true,
        "surface and spanning cap normal fluxes cancel as a closed cycle",
        inputs_cycle,
    );

    let conormal = conormal_height_integral(mesh, &v);
    let weighted = 2.0 * lambda * flux(mesh, &v) + squared_normal_flux(mesh, &v);
    let int_residual = (-conormal - weighted).abs();
    let int_tol = FLUX_INTEGRATED_FACTOR * h;
    let integrated = if mesh.boundary_loops().len() == 1 {
        entry(
            "flux_integrated",
            int_residual,
            0.0,
            int_tol,
            int_residual <= int_tol,
            true,
            "inward conormal flux balances the weighted normal integrals on a soliton",
            inputs_int,
        )
    } else {
        // The residual stays recorded; only the pass/fail verdict is out
        // of the single-loop calibration's scope.
        entry(
            "flux_integrated",
            int_residual,
            0.0,
            int_tol,
            true,
            false,
            "not applicable: the conormal quadrature tolerance is calibrated for a single boundary loop",
            inputs_int,
        )
    };
    Ok(vec![cycle, integrated])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainShape;
    use crate::graph::{solve_graph, SolverConfig};
    use crate::rotational::{rotational_to_mesh, solve_rotational};
    use crate::shapes;

    fn disk_solution(lambda: f64, h: f64) -> GraphSolution {
        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, h, 42)
            .unwrap()
            .with_constant_boundary_height(0.0);
        solve_graph(&dom, &DensityFrame::vertical(lambda), &SolverConfig::default()).unwrap()
    }

    #[test]
    fn closed_infeasibility_on_sphere_and_torus() {
        let sphere = shapes::icosphere(4, 1.0);
        let e = check_closed_infeasibility(&sphere, &Vector3::z()).unwrap();
        assert!(e.pass, "sphere entry: {e:?}");
        assert!(e.lhs < 1e-10);
        let third = 4.0 * std::f64::consts::PI / 3.0;
        assert!((e.rhs - third).abs() < 0.01 * third, "squared flux {}", e.rhs);

        let torus = shapes::torus(2.0, 0.5, 64, 32);
        let e = check_closed_infeasibility(&torus, &Vector3::z()).unwrap();
        assert!(e.pass, "torus entry: {e:?}");

        let disk = disk_solution(-0.5, 0.2).to_mesh();
        assert!(matches!(
            check_closed_infeasibility(&disk, &Vector3::z()),
            Err(VerifyError::NotClosed(1))
        ));
    }

    #[test]
    fn lambda_bound_certificates() {
        let unit = PlanarBoundary::horizontal(
            0.0,
            vec![crate::boundary::BoundaryCurve::Circle {
                center: Point3::origin(),
                radius: 1.0,
            }],
        )
        .unwrap();
        let pass = check_lambda_bound(&unit, 0.5, &Vector3::z()).unwrap();
        assert!(pass.pass && pass.applicable);
        assert_eq!(pass.rhs, 1.0);
        let fail = check_lambda_bound(&unit, 1.5, &Vector3::z()).unwrap();
        assert!(!fail.pass, "1.5 exceeds the unit-circle bound");

        let wide = PlanarBoundary::horizontal(
            0.0,
            vec![crate::boundary::BoundaryCurve::Circle {
                center: Point3::origin(),
                radius: 4.0,
            }],
        )
        .unwrap();
        let e = check_lambda_bound(&wide, 0.3, &Vector3::z()).unwrap();
        assert_eq!(e.rhs, 0.25);
        assert!(!e.pass);

        let undefined = check_lambda_bound(&unit, 0.5, &Vector3::x()).unwrap();
        assert!(!undefined.applicable, "bound undefined for in-plane density");
        assert!(undefined.pass);
    }

    #[test]
    fn multi_boundary_bound_cases() {
        let v = Vector3::z();
        let tight = MultiBoundarySpec {
            components: vec![MultiBoundaryComponent {
                plane_normal: Vector3::z(),
                sign: 1,
                area: std::f64::consts::PI,
                length: 2.0 * std::f64::consts::PI,
            }],
        };
        let e = check_multi_boundary(&tight, 1.0, &v).unwrap();
        assert!(e.pass, "boundary-tight case must pass: {e:?}");
        assert!((e.lhs - e.rhs).abs() < 1e-12);

        let annulus = MultiBoundarySpec {
            components: vec![
                MultiBoundaryComponent {
                    plane_normal: Vector3::z(),
                    sign: 1,
                    area: std::f64::consts::PI,
                    length: 2.0 * std::f64::consts::PI,
                },
                MultiBoundaryComponent {
                    plane_normal: Vector3::z(),
                    sign: 1,
                    area: 4.0 * std::f64::consts::PI,
                    length: 4.0 * std::f64::consts::PI,
                },
            ],
        };
        let e = check_multi_boundary(&annulus, 0.0, &v).unwrap();
        assert!(e.pass && e.lhs == 0.0);
        let e = check_multi_boundary(&annulus, 2.0, &v).unwrap();
        assert!(!e.pass, "20 pi exceeds 6 pi: {e:?}");
    }

    #[test]
    fn one_sided_matches_lambda_side() {
        let below = check_one_sided(&disk_solution(0.0, 0.1)).unwrap();
        assert!(below.pass && below.applicable && below.lhs < 0.0);
        let above = check_one_sided(&disk_solution(-0.9, 0.1)).unwrap();
        assert!(above.pass && above.applicable && above.lhs > 0.0);
        let planar = check_one_sided(&disk_solution(-0.5, 0.1)).unwrap();
        assert!(planar.pass && planar.lhs == 0.0);

        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, 0.2, 42)
            .unwrap()
            .with_constant_boundary_height(0.3);
        let sol = solve_graph(&dom, &DensityFrame::vertical(0.0), &SolverConfig::default()).unwrap();
        assert!(matches!(
            check_one_sided(&sol),
            Err(VerifyError::NonzeroBoundaryData(_))
        ));
    }

    #[test]
    fn area_estimate_passes_on_disk_solutions() {
        for lambda in [-0.5, 0.0, 0.2] {
            let entries = check_area_estimate(&disk_solution(lambda, 0.05)).unwrap();
            assert_eq!(entries.len(), 2);
            for e in &entries {
                assert!(e.applicable);
                assert!(e.pass, "lambda {lambda}: {e:?}");
            }
            if lambda == 0.0 {
                assert!(entries[0].lhs < entries[0].rhs, "strict form at lambda 0");
            }
        }
    }

    #[test]
    fn reflection_symmetry_and_negative_control() {
        let sol = disk_solution(0.0, 0.1);
        let e = check_reflection_symmetry(&sol, &Vector2::new(1.0, 0.0));
        assert!(e.applicable && e.pass, "{e:?}");

        // Asymmetric data: not applicable, negative control. The data
        // breaks the x -> -x reflection while staying symmetric in y.
        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, 0.1, 42)
            .unwrap()
            .with_boundary_heights_fn(|p| 0.2 * p.x.max(0.0));
        let sol = solve_graph(&dom, &DensityFrame::vertical(0.0), &SolverConfig::default()).unwrap();
        let e = check_reflection_symmetry(&sol, &Vector2::new(1.0, 0.0));
        assert!(!e.applicable, "asymmetric data must be flagged: {e:?}");
    }

    #[test]
    fn graph_property_detects_folds() {
        let sol = disk_solution(0.0, 0.1);
        let mesh = sol.to_mesh();
        let boundary = PlanarBoundary::from_domain(sol.domain());
        let e = check_graph_property(&mesh, &boundary).unwrap();
        assert!(e.pass, "graph solution must project injectively: {e:?}");

        let hemi = shapes::hemisphere(1.0, 12, 48);
        let b = PlanarBoundary::horizontal(
            0.0,
            vec![crate::boundary::BoundaryCurve::Circle {
                center: Point3::origin(),
                radius: 1.0,
            }],
        )
        .unwrap();
        let e = check_graph_property(&hemi, &b).unwrap();
        assert!(e.pass, "hemisphere is a graph over the equator disk: {e:?}");

        let folded = shapes::rolled_sheet(40, 12);
        let square = PlanarBoundary::horizontal(
            0.0,
            vec![crate::boundary::BoundaryCurve::Polyline {
                points: vec![
                    Point3::new(-1.2, -0.2, 0.0),
                    Point3::new(1.2, -0.2, 0.0),
                    Point3::new(1.2, 1.2, 0.0),
                    Point3::new(-1.2, 1.2, 0.0),
                ],
            }],
        )
        .unwrap();
        let e = check_graph_property(&folded, &square).unwrap();
        assert!(!e.pass, "folded sheet must fail injectivity: {e:?}");
    }

    #[test]
    fn contact_angle_constancy() {
        let planar = disk_solution(-0.5, 0.1);
        let (angles, e) = measure_contact_angle(&planar);
        assert!(e.pass);
        assert!(angles.iter().all(|&(_, a)| a == 0.0));

        let bowl = disk_solution(0.0, 0.05);
        let (angles, e) = measure_contact_angle(&bowl);
        assert!(e.pass, "rotational solution has constant angle: {e:?}");
        // Slope from the radial oracle: angle = atan(u'(1)), negated by the
        // inward direction.
        let oracle = solve_rotational(0.0, 1.0, 1e-3);
        let want = -oracle.slope_at(1.0).unwrap().atan();
        let mean = angles.iter().map(|&(_, a)| a).sum::<f64>() / angles.len() as f64;
        assert!(
            (mean - want).abs() < 0.05,
            "mean angle {mean} vs oracle {want}"
        );

        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, 0.05, 42)
            .unwrap()
            .with_boundary_heights_fn(|p| 0.3 * p.x);
        let skew = solve_graph(&dom, &DensityFrame::vertical(0.0), &SolverConfig::default()).unwrap();
        let (_, e) = measure_contact_angle(&skew);
        assert!(!e.pass, "tilted data cannot have constant angle: {e:?}");
    }

    #[test]
    fn flux_balance_on_rotational_soliton_and_hemisphere_control() {
        let frame = DensityFrame::vertical(0.0);
        let profile = solve_rotational(0.0, 1.0, 5e-4);
        let mesh = rotational_to_mesh(&profile, 96);
        let cap = planar_cap_for(&mesh).unwrap();
        let entries = check_flux_balance(&mesh, &cap, &frame).unwrap();
        assert!(entries.iter().all(|e| e.pass), "soliton balance: {entries:?}");

        // Flat disk against flat cap: both sides vanish.
        let flat = disk_solution(-0.5, 0.1).to_mesh();
        let cap = planar_cap_for(&flat).unwrap();
        let entries = check_flux_balance(&flat, &cap, &DensityFrame::vertical(-0.5)).unwrap();
        assert!(entries.iter().all(|e| e.pass));
        assert!(entries[0].lhs < 1e-12 && entries[1].lhs < 1e-12);

        // Hemisphere: cycle identity holds, soliton identity fails for
        // every lambda on a grid.
        let hemi = shapes::hemisphere(1.0, 24, 96);
        let cap = planar_cap_for(&hemi).unwrap();
        let mut lambda = -2.0;
        while lambda <= 2.0 {
            let entries = check_flux_balance(&hemi, &cap, &DensityFrame::vertical(lambda)).unwrap();
            assert!(entries[0].pass, "cycle identity is unconditional");
            assert!(
                !entries[1].pass,
                "hemisphere is not a soliton at lambda {lambda}: {:?}",
                entries[1]
            );
            lambda += 0.25;
        }
    }

    #[test]
    fn report_merge_is_deterministic_and_sorted() {
        let sphere = shapes::icosphere(2, 1.0);
        let e1 = check_closed_infeasibility(&sphere, &Vector3::z()).unwrap();
        let e2 = check_closed_infeasibility(&sphere, &Vector3::x()).unwrap();
        let mut a = VerificationReport::new();
        a.push(e1.clone());
        let mut b = VerificationReport::new();
        b.push(e2.clone());
        let mut ab = a.clone();
        ab.merge(b.clone());
        let mut ba = b;
        ba.merge(a);
        assert_eq!(ab.to_json(), ba.to_json());
        assert!(ab.all_pass());
        assert_ne!(e1.inputs, e2.inputs, "digest must depend on the density vector");
    }
}
