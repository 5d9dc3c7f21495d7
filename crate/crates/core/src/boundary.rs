//! Planar boundary configurations: the plane, its closed curves, and the
//! per-vertex height data a surface is asked to span.

use nalgebra::{Point2, Point3, Vector3};
use thiserror::Error;

use crate::domain::{DomainMesh, DomainShape};

#[derive(Debug, Error, PartialEq)]
pub enum BoundaryError {
    #[error("plane normal must be a unit vector")]
    BadNormal,
    #[error("boundary needs at least one curve")]
    Empty,
    #[error("curve {0} has fewer than three vertices")]
    TooFewVertices(usize),
    #[error("curve {curve} vertex {vertex} is off the plane by {offset}")]
    OffPlane { curve: usize, vertex: usize, offset: f64 },
    #[error("curve {0} is not simple")]
    NotSimple(usize),
    #[error("curves {0} and {1} intersect")]
    CurvesIntersect(usize, usize),
    #[error("height data on curve {curve}: expected {expected} values, got {got}")]
    HeightCount { curve: usize, expected: usize, got: usize },
    #[error("curve parameter out of range: {0}")]
    BadCurve(String),
    #[error("the plane is parallel to the density vector; the length bound does not apply")]
    PlaneParallelToDensity,
    #[error("the length bound needs a single boundary curve, found {0}")]
    MultiCurve(usize),
}

/// One closed curve in the boundary plane. Circles carry exact length and
/// enclosed area; polylines use their polygonal values.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCurve {
    Circle { center: Point3<f64>, radius: f64 },
    Polyline { points: Vec<Point3<f64>> },
}

/// A plane with closed curves in it and height data over each curve vertex.
///
/// The curves are the base of a Dirichlet problem: the surface boundary is
/// the curve displaced along the plane normal by the stored heights.
#[derive(Debug, Clone)]
pub struct PlanarBoundary {
    plane_point: Point3<f64>,
    plane_normal: Vector3<f64>,
    curves: Vec<BoundaryCurve>,
    heights: Vec<Vec<f64>>,
    basis: (Vector3<f64>, Vector3<f64>),
}

fn plane_basis(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    // Deterministic in-plane frame: start from the axis least aligned with
    // the normal.
    let trial = if normal.x.abs() <= normal.y.abs() && normal.x.abs() <= normal.z.abs() {
        Vector3::x()
    } else if normal.y.abs() <= normal.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (trial - normal * trial.dot(normal)).normalize();
    let e2 = normal.cross(&e1);
    (e1, e2)
}

impl PlanarBoundary {
    /// Heights are per curve: empty slice means zero everywhere; circles
    /// accept a single constant; polylines need one value per vertex.
    pub fn new(
        plane_point: Point3<f64>,
        plane_normal: Vector3<f64>,
        curves: Vec<BoundaryCurve>,
        heights: Vec<Vec<f64>>,
    ) -> Result<Self, BoundaryError> {
        if (plane_normal.norm() - 1.0).abs() > 1e-12 {
            return Err(BoundaryError::BadNormal);
        }
        if curves.is_empty() {
            return Err(BoundaryError::Empty);
        }
        if heights.len() != curves.len() {
            return Err(BoundaryError::HeightCount {
                curve: heights.len().min(curves.len()),
                expected: curves.len(),
                got: heights.len(),
            });
        }
        let basis = plane_basis(&plane_normal);
        let boundary =
            Self { plane_point, plane_normal, curves, heights, basis };
        boundary.validate()?;
        Ok(boundary)
    }

    /// Curves in the plane z = `height` with zero boundary heights.
    pub fn horizontal(height: f64, curves: Vec<BoundaryCurve>) -> Result<Self, BoundaryError> {
        let heights = vec![Vec::new(); curves.len()];
        Self::new(Point3::new(0.0, 0.0, height), Vector3::z(), curves, heights)
    }

    /// The boundary a domain mesh induces in the plane z = 0. Disks and
    /// annuli with per-loop-constant height data yield exact circles; any
    /// other configuration yields the sampled polylines so no height data
    /// is lost.
    pub fn from_domain(dom: &DomainMesh) -> Self {
        let origin = Point3::origin();
        let loop_constant = |lp: &[usize]| -> Option<f64> {
            let first = dom.heights()[*lp.first()?];
            lp.iter().all(|&v| dom.heights()[v] == first).then_some(first)
        };
        let constants: Option<Vec<f64>> =
            dom.boundary_loops().iter().map(|lp| loop_constant(lp)).collect();
        let exact: Option<Vec<BoundaryCurve>> = match dom.shape() {
            DomainShape::Disk { radius } => {
                Some(vec![BoundaryCurve::Circle { center: origin, radius: *radius }])
            }
            DomainShape::Annulus { inner, outer } => Some(vec![
                BoundaryCurve::Circle { center: origin, radius: *outer },
                BoundaryCurve::Circle { center: origin, radius: *inner },
            ]),
            _ => None,
        };
        let (curves, heights) = match (exact, constants) {
            (Some(curves), Some(consts)) => {
                // Loop order: the mesher emits the outer loop first for
                // annuli, matching the circle order above.
                (curves, consts.into_iter().map(|c| vec![c]).collect())
            }
            _ => (
                dom.boundary_loops()
                    .iter()
                    .map(|lp| BoundaryCurve::Polyline {
                        points: lp
                            .iter()
                            .map(|&v| {
                                let p = dom.points()[v];
                                Point3::new(p.x, p.y, 0.0)
                            })
                            .collect(),
                    })
                    .collect(),
                dom.boundary_loops()
                    .iter()
                    .map(|lp| lp.iter().map(|&v| dom.heights()[v]).collect())
                    .collect(),
            ),
        };
        Self::new(Point3::origin(), Vector3::z(), curves, heights)
            .expect("a valid domain mesh induces a valid boundary")
    }

    fn validate(&self) -> Result<(), BoundaryError> {
        let scale = self.scale();
        let tol = 1e-9 * scale.max(1.0);
        for (ci, curve) in self.curves.iter().enumerate() {
            match curve {
                BoundaryCurve::Circle { center, radius } => {
                    if !(radius.is_finite() && *radius > 0.0) {
                        return Err(BoundaryError::BadCurve(format!(
                            "circle {ci} radius {radius}"
                        )));
                    }
                    let off = (center - self.plane_point).dot(&self.plane_normal).abs();
                    if off > tol {
                        return Err(BoundaryError::OffPlane { curve: ci, vertex: 0, offset: off });
                    }
                    let n = self.heights[ci].len();
                    if n > 1 {
                        return Err(BoundaryError::HeightCount { curve: ci, expected: 1, got: n });
                    }
                }
                BoundaryCurve::Polyline { points } => {
                    if points.len() < 3 {
                        return Err(BoundaryError::TooFewVertices(ci));
                    }
                    for (vi, p) in points.iter().enumerate() {
                        let off = (p - self.plane_point).dot(&self.plane_normal).abs();
                        if off > tol {
                            return Err(BoundaryError::OffPlane {
                                curve: ci,
                                vertex: vi,
                                offset: off,
                            });
                        }
                    }
                    let flat = self.project_curve(ci);
                    if !is_simple(&flat) {
                        return Err(BoundaryError::NotSimple(ci));
                    }
                    let n = self.heights[ci].len();
                    if n != 0 && n != points.len() {
                        return Err(BoundaryError::HeightCount {
                            curve: ci,
                            expected: points.len(),
                            got: n,
                        });
                    }
                }
            }
        }
        for i in 0..self.curves.len() {
            for j in i + 1..self.curves.len() {
                if self.curves_intersect(i, j) {
                    return Err(BoundaryError::CurvesIntersect(i, j));
                }
            }
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        let mut s = 0.0f64;
        for curve in &self.curves {
            match curve {
                BoundaryCurve::Circle { center, radius } => {
                    s = s.max((center - self.plane_point).norm() + radius);
                }
                BoundaryCurve::Polyline { points } => {
                    for p in points {
                        s = s.max((p - self.plane_point).norm());
                    }
                }
            }
        }
        s
    }

    /// In-plane coordinates of a point (its off-plane component dropped).
    pub fn project(&self, p: &Point3<f64>) -> Point2<f64> {
        let d = p - self.plane_point;
        Point2::new(d.dot(&self.basis.0), d.dot(&self.basis.1))
    }

    /// Signed offset of a point along the plane normal.
    pub fn height_of(&self, p: &Point3<f64>) -> f64 {
        (p - self.plane_point).dot(&self.plane_normal)
    }

    fn project_curve(&self, ci: usize) -> Vec<Point2<f64>> {
        match &self.curves[ci] {
            BoundaryCurve::Circle { center, radius } => {
                // Fine polygonal stand-in for intersection tests only.
                let c = self.project(center);
                (0..256)
                    .map(|k| {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
                        Point2::new(c.x + radius * t.cos(), c.y + radius * t.sin())
                    })
                    .collect()
            }
            BoundaryCurve::Polyline { points } => points.iter().map(|p| self.project(p)).collect(),
        }
    }

    fn curves_intersect(&self, i: usize, j: usize) -> bool {
        if let (BoundaryCurve::Circle { center: c1, radius: r1 }, BoundaryCurve::Circle { center: c2, radius: r2 }) =
            (&self.curves[i], &self.curves[j])
        {
            let d = (c1 - c2).norm();
            return d + r1.min(*r2) >= r1.max(*r2) && d <= r1 + r2;
        }
        let a = self.project_curve(i);
        let b = self.project_curve(j);
        for s in 0..a.len() {
            let (a1, a2) = (a[s], a[(s + 1) % a.len()]);
            for t in 0..b.len() {
                let (b1, b2) = (b[t], b[(t + 1) % b.len()]);
                if segments_cross_2d(&a1, &a2, &b1, &b2) {
                    return true;
                }
            }
        }
        false
    }

    pub fn plane_point(&self) -> Point3<f64> {
        self.plane_point
    }

    pub fn plane_normal(&self) -> Vector3<f64> {
        self.plane_normal
    }

    pub fn n_curves(&self) -> usize {
        self.curves.len()
    }

    pub fn curves(&self) -> &[BoundaryCurve] {
        &self.curves
    }

    pub fn heights(&self) -> &[Vec<f64>] {
        &self.heights
    }

    /// Curve length: exact for circles, polygonal for polylines.
    pub fn curve_length(&self, ci: usize) -> f64 {
        match &self.curves[ci] {
            BoundaryCurve::Circle { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            BoundaryCurve::Polyline { points } => (0..points.len())
                .map(|k| (points[(k + 1) % points.len()] - points[k]).norm())
                .sum(),
        }
    }

    pub fn total_length(&self) -> f64 {
        (0..self.curves.len()).map(|c| self.curve_length(c)).sum()
    }

    /// Unsigned area enclosed by one curve: exact for circles, shoelace for
    /// polylines.
    pub fn enclosed_area(&self, ci: usize) -> f64 {
        match &self.curves[ci] {
            BoundaryCurve::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            BoundaryCurve::Polyline { .. } => {
                let flat = self.project_curve(ci);
                let signed: f64 = 0.5
                    * (0..flat.len())
                        .map(|k| {
                            let p = flat[k];
                            let q = flat[(k + 1) % flat.len()];
                            p.x * q.y - q.x * p.y
                        })
                        .sum::<f64>();
                signed.abs()
            }
        }
    }

    /// True when the in-plane point lies inside the region the curves
    /// bound (odd number of enclosing curves).
    pub fn contains(&self, p: &Point2<f64>) -> bool {
        let mut enclosing = 0usize;
        for (ci, curve) in self.curves.iter().enumerate() {
            let inside = match curve {
                BoundaryCurve::Circle { center, radius } => {
                    (self.project(center) - p).norm() <= *radius
                }
                BoundaryCurve::Polyline { .. } => {
                    let flat = self.project_curve(ci);
                    point_in_polygon(p, &flat)
                }
            };
            if inside {
                enclosing += 1;
            }
        }
        enclosing % 2 == 1
    }

    /// In-plane distance from the point to the nearest boundary curve.
    pub fn distance_to_boundary(&self, p: &Point2<f64>) -> f64 {
        let mut best = f64::INFINITY;
        for (ci, curve) in self.curves.iter().enumerate() {
            let d = match curve {
                BoundaryCurve::Circle { center, radius } => {
                    ((self.project(center) - p).norm() - radius).abs()
                }
                BoundaryCurve::Polyline { .. } => {
                    let flat = self.project_curve(ci);
                    let mut min = f64::INFINITY;
                    for k in 0..flat.len() {
                        let a = flat[k];
                        let b = flat[(k + 1) % flat.len()];
                        let e = b - a;
                        let t = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
                        min = min.min((p - (a + e * t)).norm());
                    }
                    min
                }
            };
            best = best.min(d);
        }
        best
    }

    /// Largest |lambda| a compact surface spanning this boundary can have:
    /// L / (2 |<v,a>| area(D)). Needs a single curve and a plane not
    /// parallel to the density vector.
    pub fn solvability_bound(&self, v: &Vector3<f64>) -> Result<f64, BoundaryError> {
        if self.curves.len() != 1 {
            return Err(BoundaryError::MultiCurve(self.curves.len()));
        }
        let cosine = v.normalize().dot(&self.plane_normal).abs();
        if cosine < 1e-9 {
            return Err(BoundaryError::PlaneParallelToDensity);
        }
        Ok(self.curve_length(0) / (2.0 * cosine * self.enclosed_area(0)))
    }
}

fn segments_cross_2d(
    a1: &Point2<f64>,
    a2: &Point2<f64>,
    b1: &Point2<f64>,
    b2: &Point2<f64>,
) -> bool {
    let area = |p: &Point2<f64>, q: &Point2<f64>, r: &Point2<f64>| {
        (q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y)
    };
    let d1 = area(b1, b2, a1);
    let d2 = area(b1, b2, a2);
    let d3 = area(a1, a2, b1);
    let d4 = area(a1, a2, b2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn is_simple(points: &[Point2<f64>]) -> bool {
    let n = points.len();
    for i in 0..n {
        let (a1, a2) = (points[i], points[(i + 1) % n]);
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (points[j], points[(j + 1) % n]);
            if segments_cross_2d(&a1, &a2, &b1, &b2) {
                return false;
            }
        }
    }
    true
}

fn point_in_polygon(p: &Point2<f64>, polygon: &[Point2<f64>]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}
