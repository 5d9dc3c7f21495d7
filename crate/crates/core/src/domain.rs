//! Planar domains and their triangulations: the meshes the graph solver
//! works on.

use nalgebra::{Point2, Point3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{ConstrainedDelaunayTriangulation, Point2 as SpadePoint, Triangulation};
use std::collections::HashMap;
use thiserror::Error;

use crate::mesh::TriMesh;

/// Fraction of the target edge length used to jitter interior lattice
/// points, and the clearance kept between lattice points and the boundary.
const JITTER_FRACTION: f64 = 0.22;
const BOUNDARY_CLEARANCE: f64 = 0.68;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("shape parameter out of range: {0}")]
    InvalidShape(String),
    #[error("target edge length {h} cannot resolve the shape")]
    TooCoarse { h: f64 },
    #[error("polygon is not simple (edges {0} and {1} cross)")]
    SelfIntersecting(usize, usize),
    #[error("expected {expected} boundary heights, got {got}")]
    HeightCount { expected: usize, got: usize },
    #[error("triangulation produced an unusable mesh: {0}")]
    BadTriangulation(String),
}

/// Planar domain shapes the generators understand. Polygons are stored
/// counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainShape {
    Disk { radius: f64 },
    Ellipse { rx: f64, ry: f64 },
    Annulus { inner: f64, outer: f64 },
    Polygon { points: Vec<Point2<f64>> },
}

impl DomainShape {
    fn validate(&self) -> Result<(), DomainError> {
        let bad = |msg: &str| Err(DomainError::InvalidShape(msg.to_string()));
        match self {
            DomainShape::Disk { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("disk radius must be positive");
                }
            }
            DomainShape::Ellipse { rx, ry } => {
                if !(rx.is_finite() && ry.is_finite() && *rx > 0.0 && *ry > 0.0) {
                    return bad("ellipse semi-axes must be positive");
                }
            }
            DomainShape::Annulus { inner, outer } => {
                if !(inner.is_finite() && outer.is_finite() && *inner > 0.0 && outer > inner) {
                    return bad("annulus needs 0 < inner < outer");
                }
            }
            DomainShape::Polygon { points } => {
                if points.len() < 3 {
                    return bad("polygon needs at least three vertices");
                }
                for p in points {
                    if !(p.x.is_finite() && p.y.is_finite()) {
                        return bad("polygon vertex not finite");
                    }
                }
                check_simple(points)?;
            }
        }
        Ok(())
    }

    /// True when the shape maps to itself under reflection across the line
    /// through the origin with this (unit) normal.
    pub fn symmetric_under_reflection(&self, axis_normal: &Vector2<f64>) -> bool {
        let tol = 1e-9;
        match self {
            DomainShape::Disk { .. } | DomainShape::Annulus { .. } => true,
            DomainShape::Ellipse { .. } => {
                axis_normal.x.abs() < tol || axis_normal.y.abs() < tol
            }
            DomainShape::Polygon { points } => {
                let scale: f64 =
                    points.iter().map(|p| p.coords.norm()).fold(0.0, f64::max).max(1.0);
                points.iter().all(|p| {
                    let q = reflect(p, axis_normal);
                    points.iter().any(|r| (r - q).norm() < tol.max(1e-12 * scale))
                })
            }
        }
    }
}

pub fn reflect(p: &Point2<f64>, axis_normal: &Vector2<f64>) -> Point2<f64> {
    let n = axis_normal.normalize();
    p - 2.0 * p.coords.dot(&n) * n
}

/// A triangulated planar domain with Dirichlet boundary heights.
///
/// Triangles are counterclockwise; boundary loops run counterclockwise on
/// the outer curve and clockwise on holes, matching the orientation a graph
/// lifted over the domain induces. Generation is deterministic for a fixed
/// shape, edge length, and seed.
#[derive(Debug, Clone)]
pub struct DomainMesh {
    shape: DomainShape,
    points: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    boundary_mask: Vec<bool>,
    heights: Vec<f64>,
    target_h: f64,
    seed: u64,
}

impl DomainMesh {
    pub fn generate(shape: DomainShape, h: f64, seed: u64) -> Result<Self, DomainError> {
        shape.validate()?;
        if !(h.is_finite() && h > 0.0) {
            return Err(DomainError::InvalidShape("edge length must be positive".into()));
        }

        let loops = boundary_polylines(&shape, h)?;
        for lp in &loops {
            if lp.len() < 8 {
                return Err(DomainError::TooCoarse { h });
            }
        }
        let interior = interior_lattice(&loops, h, seed);
        let (points, triangles) = triangulate(&loops, &interior)?;

        let (boundary_loops, boundary_mask) = extract_boundary(&points, &triangles)?;
        if boundary_loops.len() != loops.len() {
            return Err(DomainError::BadTriangulation(format!(
                "expected {} boundary loops, found {}",
                loops.len(),
                boundary_loops.len()
            )));
        }

        let heights = vec![0.0; points.len()];
        Ok(Self {
            shape,
            points,
            triangles,
            boundary_loops,
            boundary_mask,
            heights,
            target_h: h,
            seed,
        })
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    pub fn points(&self) -> &[Point2<f64>] {
        &self.points
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    /// Boundary loops with the orientation induced by the triangle winding.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_mask[v]
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.boundary_mask.iter().filter(|&&b| b).count()
    }

    /// Dirichlet height at each vertex; zero at interior vertices.
    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn target_edge_length(&self) -> f64 {
        self.target_h
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_constant_boundary_height(mut self, height: f64) -> Self {
        for (i, h) in self.heights.iter_mut().enumerate() {
            *h = if self.boundary_mask[i] { height } else { 0.0 };
        }
        self
    }

    /// Heights listed per boundary vertex, loops concatenated in stored
    /// order, each loop in its stored orientation.
    pub fn with_boundary_heights(mut self, values: &[f64]) -> Result<Self, DomainError> {
        let expected = self.n_boundary_vertices();
        if values.len() != expected {
            return Err(DomainError::HeightCount { expected, got: values.len() });
        }
        let mut it = values.iter();
        for lp in &self.boundary_loops {
            for &v in lp {
                self.heights[v] = *it.next().unwrap();
            }
        }
        Ok(self)
    }

    pub fn with_boundary_heights_fn(mut self, f: impl Fn(&Point2<f64>) -> f64) -> Self {
        for v in 0..self.points.len() {
            self.heights[v] = if self.boundary_mask[v] { f(&self.points[v]) } else { 0.0 };
        }
        self
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if a < b {
                    sum += (self.points[b] - self.points[a]).norm();
                    count += 1;
                }
            }
        }
        sum / count.max(1) as f64
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(&self.points[a], &self.points[b], &self.points[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Length of one boundary loop's polyline.
    pub fn boundary_loop_length(&self, lp: usize) -> f64 {
        let ring = &self.boundary_loops[lp];
        (0..ring.len())
            .map(|i| (self.points[ring[(i + 1) % ring.len()]] - self.points[ring[i]]).norm())
            .sum()
    }

    /// Signed area enclosed by one boundary loop in its stored orientation.
    pub fn boundary_loop_signed_area(&self, lp: usize) -> f64 {
        let ring = &self.boundary_loops[lp];
        0.5 * (0..ring.len())
            .map(|i| {
                let p = self.points[ring[i]];
                let q = self.points[ring[(i + 1) % ring.len()]];
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
    }

    /// Lifts per-vertex heights to an oriented surface mesh; the winding
    /// keeps normals pointing up.
    pub fn lift(&self, u: &[f64]) -> TriMesh {
        assert_eq!(u.len(), self.points.len(), "one height per vertex");
        let vertices =
            self.points.iter().zip(u).map(|(p, &z)| Point3::new(p.x, p.y, z)).collect();
        TriMesh::new(vertices, self.triangles.clone())
            .expect("lifting a valid domain mesh yields a valid surface")
    }

    pub fn locator(&self) -> PointLocator<'_> {
        PointLocator::new(self)
    }
}

/// Grid-bucketed point location over a domain mesh, for evaluating
/// piecewise-linear fields at arbitrary planar points.
pub struct PointLocator<'a> {
    dom: &'a DomainMesh,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(dom: &'a DomainMesh) -> Self {
        let cell = (2.0 * dom.target_edge_length()).max(1e-12);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (t, tri) in dom.triangles().iter().enumerate() {
            let xs = tri.map(|v| dom.points()[v].x);
            let ys = tri.map(|v| dom.points()[v].y);
            let (x0, x1) = (xs.iter().copied().fold(f64::MAX, f64::min), xs.iter().copied().fold(f64::MIN, f64::max));
            let (y0, y1) = (ys.iter().copied().fold(f64::MAX, f64::min), ys.iter().copied().fold(f64::MIN, f64::max));
            let (cx0, cx1) = ((x0 / cell).floor() as i64, (x1 / cell).floor() as i64);
            let (cy0, cy1) = ((y0 / cell).floor() as i64, (y1 / cell).floor() as i64);
            for cx in cx0..=cx1 {
                for cy in cy0..=cy1 {
                    grid.entry((cx, cy)).or_default().push(t);
                }
            }
        }
        Self { dom, cell, grid }
    }

    /// Triangle containing the point plus barycentric coordinates; points
    /// a hair outside an edge snap to the best candidate.
    pub fn locate(&self, p: &Point2<f64>) -> Option<(usize, [f64; 3])> {
        let key = ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for (cx, cy) in
            [(0i64, 0i64), (-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]
        {
            let Some(tris) = self.grid.get(&(key.0 + cx, key.1 + cy)) else { continue };
            for &t in tris {
                let [a, b, c] = self.dom.triangles()[t];
                let (pa, pb, pc) =
                    (self.dom.points()[a], self.dom.points()[b], self.dom.points()[c]);
                let full = signed_area(&pa, &pb, &pc);
                let wa = signed_area(p, &pb, &pc) / full;
                let wb = signed_area(&pa, p, &pc) / full;
                let wc = 1.0 - wa - wb;
                let worst = wa.min(wb).min(wc);
                if best.map_or(true, |(_, _, bw)| worst > bw) {
                    best = Some((t, [wa, wb, wc], worst));
                }
            }
        }
        match best {
            Some((t, bary, worst)) if worst >= -1e-9 => Some((t, bary)),
            _ => None,
        }
    }

    /// Piecewise-linear interpolation of a per-vertex field.
    pub fn interpolate(&self, p: &Point2<f64>, field: &[f64]) -> Option<f64> {
        let (t, bary) = self.locate(p)?;
        let [a, b, c] = self.dom.triangles()[t];
        Some(bary[0] * field[a] + bary[1] * field[b] + bary[2] * field[c])
    }
}

fn signed_area(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn check_simple(points: &[Point2<f64>]) -> Result<(), DomainError> {
    let n = points.len();
    for i in 0..n {
        let (a1, a2) = (points[i], points[(i + 1) % n]);
        for j in i + 1..n {
            // Adjacent edges share an endpoint; skip them.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (points[j], points[(j + 1) % n]);
            if segments_cross(&a1, &a2, &b1, &b2) {
                return Err(DomainError::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}

fn segments_cross(a1: &Point2<f64>, a2: &Point2<f64>, b1: &Point2<f64>, b2: &Point2<f64>) -> bool {
    let d1 = signed_area(b1, b2, a1);
    let d2 = signed_area(b1, b2, a2);
    let d3 = signed_area(a1, a2, b1);
    let d4 = signed_area(a1, a2, b2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Boundary polylines: outer loop counterclockwise, holes clockwise.
fn boundary_polylines(shape: &DomainShape, h: f64) -> Result<Vec<Vec<Point2<f64>>>, DomainError> {
    let circle = |r: f64, clockwise: bool| -> Vec<Point2<f64>> {
        let n = ((2.0 * std::f64::consts::PI * r / h).round() as usize).max(8);
        (0..n)
            .map(|k| {
                let sign = if clockwise { -1.0 } else { 1.0 };
                let t = sign * 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect()
    };
    Ok(match shape {
        DomainShape::Disk { radius } => vec![circle(*radius, false)],
        DomainShape::Annulus { inner, outer } => {
            vec![circle(*outer, false), circle(*inner, true)]
        }
        DomainShape::Ellipse { rx, ry } => vec![ellipse_polyline(*rx, *ry, h)],
        DomainShape::Polygon { points } => {
            let mut pts = points.clone();
            let area: f64 = 0.5
                * (0..pts.len())
                    .map(|i| {
                        let p = pts[i];
                        let q = pts[(i + 1) % pts.len()];
                        p.x * q.y - q.x * p.y
                    })
                    .sum::<f64>();
            if area < 0.0 {
                pts.reverse();
            }
            let mut out = Vec::new();
            for i in 0..pts.len() {
                let a = pts[i];
                let b = pts[(i + 1) % pts.len()];
                let len = (b - a).norm();
                let segments = (len / h).ceil().max(1.0) as usize;
                for s in 0..segments {
                    let t = s as f64 / segments as f64;
                    out.push(a + (b - a) * t);
                }
            }
            vec![out]
        }
    })
}

fn ellipse_polyline(rx: f64, ry: f64, h: f64) -> Vec<Point2<f64>> {
    // Uniform arclength sampling through a dense parameter table.
    let dense = 8192;
    let mut cumulative = Vec::with_capacity(dense + 1);
    cumulative.push(0.0);
    let mut prev = Point2::new(rx, 0.0);
    for k in 1..=dense {
        let t = 2.0 * std::f64::consts::PI * k as f64 / dense as f64;
        let p = Point2::new(rx * t.cos(), ry * t.sin());
        cumulative.push(cumulative[k - 1] + (p - prev).norm());
        prev = p;
    }
    let total = *cumulative.last().unwrap();
    let n = ((total / h).round() as usize).max(8);
    let mut out = Vec::with_capacity(n);
    let mut idx = 0usize;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while idx + 1 < cumulative.len() && cumulative[idx + 1] < target {
            idx += 1;
        }
        let span = (cumulative[idx + 1] - cumulative[idx]).max(1e-300);
        let frac = (target - cumulative[idx]) / span;
        let t = 2.0 * std::f64::consts::PI * (idx as f64 + frac) / dense as f64;
        out.push(Point2::new(rx * t.cos(), ry * t.sin()));
    }
    out
}

fn winding_number(p: &Point2<f64>, loops: &[Vec<Point2<f64>>]) -> i32 {
    let mut winding = 0;
    for lp in loops {
        for i in 0..lp.len() {
            let a = lp[i];
            let b = lp[(i + 1) % lp.len()];
            if a.y <= p.y {
                if b.y > p.y && signed_area(&a, &b, p) > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && signed_area(&a, &b, p) < 0.0 {
                winding -= 1;
            }
        }
    }
    winding
}

fn distance_to_loops(p: &Point2<f64>, loops: &[Vec<Point2<f64>>]) -> f64 {
    let mut best = f64::INFINITY;
    for lp in loops {
        for i in 0..lp.len() {
            let a = lp[i];
            let b = lp[(i + 1) % lp.len()];
            let ab = b - a;
            let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            best = best.min((p - (a + ab * t)).norm());
        }
    }
    best
}

/// Jittered hexagonal lattice clipped to the domain with a clearance band
/// along the boundary. Deterministic for a fixed seed.
fn interior_lattice(loops: &[Vec<Point2<f64>>], h: f64, seed: u64) -> Vec<Point2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for lp in loops {
        for p in lp {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    }
    let dy = h * 3.0f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let rows = ((hi.y - lo.y) / dy).ceil() as i64 + 1;
    let cols = ((hi.x - lo.x) / h).ceil() as i64 + 1;
    for j in 0..rows {
        let y = lo.y + j as f64 * dy;
        let offset = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..cols {
            let x = lo.x + offset + i as f64 * h;
            // Jitter is drawn unconditionally so the stream stays aligned
            // with the lattice walk regardless of which points survive.
            let jx = rng.gen_range(-JITTER_FRACTION..JITTER_FRACTION) * h;
            let jy = rng.gen_range(-JITTER_FRACTION..JITTER_FRACTION) * h;
            let p = Point2::new(x + jx, y + jy);
            if winding_number(&p, loops) == 1 && distance_to_loops(&p, loops) >= BOUNDARY_CLEARANCE * h {
                out.push(p);
            }
        }
    }
    out
}

fn triangulate(
    loops: &[Vec<Point2<f64>>],
    interior: &[Point2<f64>],
) -> Result<(Vec<Point2<f64>>, Vec<[usize; 3]>), DomainError> {
    let mut cdt: ConstrainedDelaunayTriangulation<SpadePoint<f64>> = Default::default();
    let mut points: Vec<Point2<f64>> = Vec::new();
    let mut handles = Vec::new();
    for lp in loops {
        let mut loop_handles = Vec::with_capacity(lp.len());
        for p in lp {
            let handle = cdt
                .insert(SpadePoint::new(p.x, p.y))
                .map_err(|e| DomainError::BadTriangulation(format!("{e:?}")))?;
            loop_handles.push(handle);
            points.push(*p);
        }
        handles.push(loop_handles);
    }
    for loop_handles in &handles {
        for i in 0..loop_handles.len() {
            let a = loop_handles[i];
            let b = loop_handles[(i + 1) % loop_handles.len()];
            if a != b {
                cdt.add_constraint(a, b);
            }
        }
    }
    for p in interior {
        cdt.insert(SpadePoint::new(p.x, p.y))
            .map_err(|e| DomainError::BadTriangulation(format!("{e:?}")))?;
        points.push(*p);
    }
    if cdt.num_vertices() != points.len() {
        return Err(DomainError::BadTriangulation(
            "duplicate points collapsed during triangulation".into(),
        ));
    }

    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let idx = face.vertices().map(|v| v.fix().index());
        let [a, b, c] = idx;
        let centroid = Point2::from((points[a].coords + points[b].coords + points[c].coords) / 3.0);
        if winding_number(&centroid, loops) != 1 {
            continue;
        }
        let mut tri = [a, b, c];
        if signed_area(&points[a], &points[b], &points[c]) < 0.0 {
            tri.swap(1, 2);
        }
        // Rotate the smallest index first so output order is canonical.
        let min_pos = (0..3).min_by_key(|&k| tri[k]).unwrap();
        tri.rotate_left(min_pos);
        triangles.push(tri);
    }
    triangles.sort_unstable();

    // Drop points only referenced by discarded outside faces.
    let mut used = vec![false; points.len()];
    for tri in &triangles {
        for &v in tri {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; points.len()];
    let mut compact = Vec::with_capacity(points.len());
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = compact.len();
            compact.push(points[i]);
        }
    }
    for tri in &mut triangles {
        for v in tri.iter_mut() {
            *v = remap[*v];
        }
    }
    Ok((compact, triangles))
}

fn extract_boundary(
    points: &[Point2<f64>],
    triangles: &[[usize; 3]],
) -> Result<(Vec<Vec<usize>>, Vec<bool>), DomainError> {
    let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            *directed.entry((tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for (&(a, b), _) in &directed {
        if !directed.contains_key(&(b, a)) {
            if next.insert(a, b).is_some() {
                return Err(DomainError::BadTriangulation(format!(
                    "boundary branches at vertex {a}"
                )));
            }
        }
    }
    let mut mask = vec![false; points.len()];
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut loops = Vec::new();
    let mut visited = vec![false; points.len()];
    for &start in &starts {
        if visited[start] {
            continue;
        }
        let mut lp = vec![start];
        visited[start] = true;
        mask[start] = true;
        let mut cur = start;
        loop {
            let nxt = *next
                .get(&cur)
                .ok_or_else(|| DomainError::BadTriangulation(format!("open boundary at {cur}")))?;
            if nxt == start {
                break;
            }
            if visited[nxt] {
                return Err(DomainError::BadTriangulation(format!("boundary crosses at {nxt}")));
            }
            visited[nxt] = true;
            mask[nxt] = true;
            lp.push(nxt);
            cur = nxt;
        }
        let min_pos = lp.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap();
        lp.rotate_left(min_pos);
        loops.push(lp);
    }
    loops.sort_by_key(|lp| lp[0]);
    Ok((loops, mask))
}
