//! Oriented triangle meshes with validated connectivity.

use nalgebra::{Point3, Vector3};
use std::collections::HashMap;
use thiserror::Error;

/// Relative area floor: triangles smaller than this times the squared
/// bounding-box diagonal are rejected as degenerate.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {vertex} out of range")]
    IndexOutOfRange { triangle: usize, vertex: usize },
    #[error("triangle {triangle} repeats a vertex")]
    RepeatedVertex { triangle: usize },
    #[error("triangle {triangle} is degenerate (area {area:.3e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("edge ({a},{b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("edge ({a},{b}) is traversed twice in the same direction; winding is inconsistent")]
    InconsistentWinding { a: usize, b: usize },
    #[error("boundary does not split into simple loops at vertex {vertex}")]
    MalformedBoundary { vertex: usize },
    #[error("vertex {vertex} is not referenced by any triangle")]
    UnreferencedVertex { vertex: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteVertex { vertex: usize },
}

/// Triangle mesh with consistent winding and manifold edges.
///
/// Validity is established on construction and preserved afterwards: indices
/// in range, no degenerate triangles, every edge in at most two triangles,
/// shared edges traversed in opposite directions, and boundary edges chaining
/// into simple closed loops. Boundary loops keep the orientation induced by
/// the triangle winding.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    boundary_mask: Vec<bool>,
    vertex_triangles: Vec<Vec<u32>>,
    bbox_diagonal: f64,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, p) in vertices.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFiniteVertex { vertex: i });
            }
        }

        let n = vertices.len();
        let mut referenced = vec![false; n];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(MeshError::IndexOutOfRange { triangle: t, vertex: v });
                }
                referenced[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex { triangle: t });
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(MeshError::UnreferencedVertex { vertex: v });
        }

        let bbox_diagonal = bbox_diagonal(&vertices);
        let area_floor = DEGENERATE_AREA_FACTOR * bbox_diagonal * bbox_diagonal;
        for (t, tri) in triangles.iter().enumerate() {
            let area = triangle_area(&vertices, tri);
            if !(area > area_floor) {
                return Err(MeshError::DegenerateTriangle { triangle: t, area });
            }
        }

        // Directed edge census. A directed edge may appear once; its reverse
        // at most once. Directed edges without a reverse form the boundary.
        let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                *directed.entry(e).or_insert(0) += 1;
            }
        }
        // Scan in triangle order so the reported offense is deterministic.
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let here = directed[&(a, b)];
                let reverse = directed.get(&(b, a)).copied().unwrap_or(0);
                if here + reverse > 2 {
                    return Err(MeshError::NonManifoldEdge { a, b });
                }
                if here > 1 {
                    return Err(MeshError::InconsistentWinding { a, b });
                }
            }
        }

        let boundary_loops = chain_boundary_loops(&directed)?;
        let mut boundary_mask = vec![false; n];
        for lp in &boundary_loops {
            for &v in lp {
                boundary_mask[v] = true;
            }
        }

        let mut vertex_triangles = vec![Vec::new(); n];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t as u32);
            }
        }

        Ok(Self { vertices, triangles, boundary_loops, boundary_mask, vertex_triangles, bbox_diagonal })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox_diagonal
    }

    /// Boundary loops in the orientation induced by the triangle winding,
    /// each rotated to start at its smallest vertex index and sorted by that
    /// index, so the listing is deterministic.
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops.is_empty()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_mask[v]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    /// Triangles incident to a vertex, in construction order.
    pub fn triangles_at(&self, v: usize) -> &[u32] {
        &self.vertex_triangles[v]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[t])
    }

    /// Half the cross product of two triangle edges; its norm is the area and
    /// its direction the triangle normal.
    pub fn area_vector(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangles[t];
        0.5 * (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]))
    }

    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        self.area_vector(t).normalize()
    }

    pub fn triangle_centroid(&self, t: usize) -> Point3<f64> {
        let [a, b, c] = self.triangles[t];
        Point3::from((self.vertices[a].coords + self.vertices[b].coords + self.vertices[c].coords) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted vertex normals (normalized sum of incident area vectors).
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for t in 0..self.triangles.len() {
            let av = self.area_vector(t);
            for &v in &self.triangles[t] {
                normals[v] += av;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    pub fn mean_edge_length(&self) -> f64 {
        let (sum, count) = self.fold_edges((0.0, 0usize), |(s, c), len| (s + len, c + 1));
        sum / count as f64
    }

    pub fn max_edge_length(&self) -> f64 {
        self.fold_edges(0.0, f64::max)
    }

    fn fold_edges<A>(&self, init: A, mut f: impl FnMut(A, f64) -> A) -> A {
        let mut acc = init;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if a < b {
                    acc = f(acc, (self.vertices[b] - self.vertices[a]).norm());
                }
            }
        }
        // Boundary edges oriented high-to-low would be skipped by the a < b
        // filter only if their reverse never occurs; count those too.
        let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]), ());
            }
        }
        for (&(a, b), _) in &directed {
            if a > b && !directed.contains_key(&(b, a)) {
                acc = f(acc, (self.vertices[b] - self.vertices[a]).norm());
            }
        }
        acc
    }

    /// Rebuilds the mesh with every triangle's winding reversed.
    pub fn reversed_winding(&self) -> TriMesh {
        let flipped = self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect();
        TriMesh::new(self.vertices.clone(), flipped).expect("reversing winding preserves validity")
    }

    /// Rebuilds the mesh with vertices mapped through `f`, re-validating.
    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Result<TriMesh, MeshError> {
        TriMesh::new(self.vertices.iter().map(|p| f(p)).collect(), self.triangles.clone())
    }

    /// Canonical byte encoding of the geometry, used for input digests.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(16 + 24 * self.vertices.len() + 24 * self.triangles.len());
        bytes.extend_from_slice(&(self.vertices.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.triangles.len() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in &[p.x, p.y, p.z] {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        for tri in &self.triangles {
            for &v in tri {
                bytes.extend_from_slice(&(v as u64).to_le_bytes());
            }
        }
        bytes
    }
}

fn bbox_diagonal(vertices: &[Point3<f64>]) -> f64 {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi - lo).norm()
}

fn triangle_area(vertices: &[Point3<f64>], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = *tri;
    0.5 * (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a])).norm()
}

/// Chains boundary directed edges into simple loops. Fails if any vertex has
/// two outgoing boundary edges (a bowtie) or a chain does not close.
fn chain_boundary_loops(directed: &HashMap<(usize, usize), u32>) -> Result<Vec<Vec<usize>>, MeshError> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            if next.insert(a, b).is_some() {
                return Err(MeshError::MalformedBoundary { vertex: a });
            }
        }
    }

    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut visited: HashMap<usize, ()> = HashMap::new();
    let mut loops = Vec::new();
    for &start in &starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut lp = vec![start];
        visited.insert(start, ());
        let mut cur = start;
        loop {
            let nxt = *next.get(&cur).ok_or(MeshError::MalformedBoundary { vertex: cur })?;
            if nxt == start {
                break;
            }
            if visited.insert(nxt, ()).is_some() {
                return Err(MeshError::MalformedBoundary { vertex: nxt });
            }
            lp.push(nxt);
            cur = nxt;
        }
        // Start each loop at its smallest vertex so output order is stable.
        let min_pos = lp.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap();
        lp.rotate_left(min_pos);
        loops.push(lp);
    }
    loops.sort_by_key(|lp| lp[0]);
    Ok(loops)
}
