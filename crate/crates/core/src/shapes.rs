//! Reference surfaces: spheres, tori, cylinders, hemispheres, graph patches,
//! and a folded sheet that is deliberately not a graph.

use crate::mesh::TriMesh;
use nalgebra::Point3;
use std::collections::HashMap;

/// Icosahedron subdivided `level` times with vertices projected to the sphere
/// of the given radius. Winding is outward.
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| {
            let p = Point3::new(x, y, z);
            Point3::from(p.coords * (radius / p.coords.norm()))
        })
        .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = split_edge(&mut vertices, &mut midpoint, a, b, radius);
            let bc = split_edge(&mut vertices, &mut midpoint, b, c, radius);
            let ca = split_edge(&mut vertices, &mut midpoint, c, a, radius);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    TriMesh::new(vertices, triangles).expect("icosphere construction is valid")
}

fn split_edge(
    vertices: &mut Vec<Point3<f64>>,
    midpoint: &mut HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
    radius: f64,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&m) = midpoint.get(&key) {
        return m;
    }
    let mid = (vertices[a].coords + vertices[b].coords) * 0.5;
    let idx = vertices.len();
    vertices.push(Point3::from(mid * (radius / mid.norm())));
    midpoint.insert(key, idx);
    idx
}

/// Torus with major radius `major`, tube radius `minor`, outward winding.
pub fn torus(major: f64, minor: f64, n_major: usize, n_minor: usize) -> TriMesh {
    assert!(n_major >= 3 && n_minor >= 3);
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_minor as f64;
            let ring = major + minor * phi.cos();
            vertices.push(Point3::new(ring * theta.cos(), ring * theta.sin(), minor * phi.sin()));
        }
    }
    let at = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut triangles = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            triangles.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            triangles.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, triangles).expect("torus construction is valid")
}

/// Upper hemisphere of the given radius with a clean equator boundary,
/// `n_rings` latitude rings and `n_around` points per ring, outward winding.
pub fn hemisphere(radius: f64, n_rings: usize, n_around: usize) -> TriMesh {
    assert!(n_rings >= 2 && n_around >= 3);
    let mut vertices = vec![Point3::new(0.0, 0.0, radius)];
    for j in 1..=n_rings {
        let theta = std::f64::consts::FRAC_PI_2 * j as f64 / n_rings as f64;
        for k in 0..n_around {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
            vertices.push(Point3::new(
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ));
        }
    }
    let ring = |j: usize, k: usize| 1 + (j - 1) * n_around + (k % n_around);
    let mut triangles = Vec::new();
    for k in 0..n_around {
        triangles.push([0, ring(1, k), ring(1, k + 1)]);
    }
    for j in 1..n_rings {
        for k in 0..n_around {
            triangles.push([ring(j, k), ring(j + 1, k), ring(j + 1, k + 1)]);
            triangles.push([ring(j, k), ring(j + 1, k + 1), ring(j, k + 1)]);
        }
    }
    TriMesh::new(vertices, triangles).expect("hemisphere construction is valid")
}

/// Open cylinder band of the given radius, axis `e3`, `z` in `[z0, z1]`,
/// outward winding.
pub fn cylinder_band(radius: f64, z0: f64, z1: f64, n_around: usize, n_axial: usize) -> TriMesh {
    assert!(n_around >= 3 && n_axial >= 1 && z1 > z0);
    let mut vertices = Vec::new();
    for j in 0..=n_axial {
        let z = z0 + (z1 - z0) * j as f64 / n_axial as f64;
        for k in 0..n_around {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
            vertices.push(Point3::new(radius * phi.cos(), radius * phi.sin(), z));
        }
    }
    let at = |j: usize, k: usize| j * n_around + (k % n_around);
    let mut triangles = Vec::new();
    for j in 0..n_axial {
        for k in 0..n_around {
            triangles.push([at(j, k), at(j, k + 1), at(j + 1, k + 1)]);
            triangles.push([at(j, k), at(j + 1, k + 1), at(j + 1, k)]);
        }
    }
    TriMesh::new(vertices, triangles).expect("cylinder construction is valid")
}

/// Samples the graph of `f` over the square `[-extent, extent]^2` on an
/// `n x n` grid, upward winding.
pub fn graph_patch(n: usize, extent: f64, f: impl Fn(f64, f64) -> f64) -> TriMesh {
    assert!(n >= 2);
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = -extent + 2.0 * extent * j as f64 / (n - 1) as f64;
        for i in 0..n {
            let x = -extent + 2.0 * extent * i as f64 / (n - 1) as f64;
            vertices.push(Point3::new(x, y, f(x, y)));
        }
    }
    let at = |i: usize, j: usize| j * n + i;
    let mut triangles = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            triangles.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            triangles.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, triangles).expect("graph patch construction is valid")
}

/// Sheet rolled past the vertical: a cylinder section sweeping more than a
/// half turn, so the projection along `e3` folds onto itself. Not a graph.
pub fn rolled_sheet(n_along: usize, n_across: usize) -> TriMesh {
    assert!(n_along >= 2 && n_across >= 2);
    let alpha0 = -0.2;
    let alpha1 = 1.3 * std::f64::consts::PI;
    let mut vertices = Vec::new();
    for j in 0..n_across {
        let y = j as f64 / (n_across - 1) as f64;
        for i in 0..n_along {
            let alpha = alpha0 + (alpha1 - alpha0) * i as f64 / (n_along - 1) as f64;
            vertices.push(Point3::new(alpha.cos(), y, alpha.sin()));
        }
    }
    let at = |i: usize, j: usize| j * n_along + i;
    let mut triangles = Vec::new();
    for j in 0..n_across - 1 {
        for i in 0..n_along - 1 {
            triangles.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            triangles.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, triangles).expect("rolled sheet construction is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn icosphere_is_closed_outward_and_round() {
        let mesh = icosphere(2, 1.5);
        assert!(mesh.is_closed());
        assert_eq!(mesh.n_triangles(), 20 * 16);
        for p in mesh.vertices() {
            assert!((p.coords.norm() - 1.5).abs() < 1e-12);
        }
        for t in 0..mesh.n_triangles() {
            let c = mesh.triangle_centroid(t);
            assert!(mesh.triangle_normal(t).dot(&c.coords) > 0.0, "winding must be outward");
        }
    }

    #[test]
    fn torus_is_closed_and_outward() {
        let mesh = torus(2.0, 0.5, 48, 24);
        assert!(mesh.is_closed());
        for t in 0..mesh.n_triangles() {
            let c = mesh.triangle_centroid(t);
            // Outward means pointing away from the tube center circle.
            let ring = Vector3::new(c.x, c.y, 0.0).normalize() * 2.0;
            let out = c.coords - ring;
            assert!(mesh.triangle_normal(t).dot(&out) > 0.0);
        }
    }

    #[test]
    fn hemisphere_has_equator_boundary() {
        let mesh = hemisphere(1.0, 8, 32);
        let loops = mesh.boundary_loops();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 32);
        for &v in &loops[0] {
            assert!(mesh.vertices()[v].z.abs() < 1e-12);
        }
        for t in 0..mesh.n_triangles() {
            let c = mesh.triangle_centroid(t);
            assert!(mesh.triangle_normal(t).dot(&c.coords) > 0.0);
        }
    }

    #[test]
    fn cylinder_band_has_two_boundary_loops() {
        let mesh = cylinder_band(2.0, -1.0, 1.0, 24, 6);
        assert_eq!(mesh.boundary_loops().len(), 2);
        for t in 0..mesh.n_triangles() {
            let c = mesh.triangle_centroid(t);
            let out = Vector3::new(c.x, c.y, 0.0);
            assert!(mesh.triangle_normal(t).dot(&out) > 0.0);
        }
    }

    #[test]
    fn graph_patch_points_up() {
        let mesh = graph_patch(12, 1.0, |x, y| 0.1 * (x + y));
        for t in 0..mesh.n_triangles() {
            assert!(mesh.triangle_normal(t).z > 0.0);
        }
    }

    #[test]
    fn rolled_sheet_is_open_and_folded() {
        let mesh = rolled_sheet(40, 8);
        assert_eq!(mesh.boundary_loops().len(), 1);
        // Two sheets over the same projected point: x near 0.9 occurs both
        // ascending and descending.
        let xs: Vec<f64> = mesh.vertices().iter().map(|p| p.x).collect();
        let n_high = xs.iter().filter(|&&x| x > 0.9).count();
        assert!(n_high > 8, "fold must revisit x > 0.9 on two sheets");
    }
}
