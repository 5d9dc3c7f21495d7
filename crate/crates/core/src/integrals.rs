//! Surface integrals: normal flux, weighted area, boundary conormal
//! integral, and a finite-difference first-variation check.

use crate::curvature::mean_curvature;
use crate::frame::DensityFrame;
use crate::mesh::TriMesh;
use nalgebra::{Point3, Vector3};

/// Integral of `<N, v>` over the mesh; exact per triangle because the
/// integrand is constant there. Vanishes on closed meshes.
pub fn flux(mesh: &TriMesh, v: &Vector3<f64>) -> f64 {
    (0..mesh.n_triangles()).map(|t| mesh.area_vector(t).dot(v)).sum()
}

/// Integral of `<N, v>^2` over the mesh, constant per triangle.
pub fn squared_normal_flux(mesh: &TriMesh, v: &Vector3<f64>) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| {
            let av = mesh.area_vector(t);
            let area = av.norm();
            let nv = av.dot(v) / area;
            nv * nv * area
        })
        .sum()
}

/// Area weighted by the ambient density `exp(<q, v>)`, evaluated at triangle
/// centroids (midpoint rule).
pub fn weighted_area(mesh: &TriMesh, v: &Vector3<f64>) -> f64 {
    weighted_area_of(mesh.vertices(), mesh.triangles(), v)
}

fn weighted_area_of(vertices: &[Point3<f64>], triangles: &[[usize; 3]], v: &Vector3<f64>) -> f64 {
    triangles
        .iter()
        .map(|&[a, b, c]| {
            let area = 0.5 * (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a])).norm();
            let centroid = (vertices[a].coords + vertices[b].coords + vertices[c].coords) / 3.0;
            centroid.dot(v).exp() * area
        })
        .sum()
}

/// Integral of `<nu, v>` over the boundary, where `nu` is the unit inward
/// conormal estimated from the triangle attached to each boundary edge.
/// Zero for closed meshes.
pub fn conormal_height_integral(mesh: &TriMesh, v: &Vector3<f64>) -> f64 {
    let mut total = 0.0;
    for lp in mesh.boundary_loops() {
        for i in 0..lp.len() {
            let a = lp[i];
            let b = lp[(i + 1) % lp.len()];
            let c = third_vertex(mesh, a, b);
            let pa = mesh.vertices()[a];
            let e = mesh.vertices()[b] - pa;
            let d = mesh.vertices()[c] - pa;
            // In-plane perpendicular of the edge pointing at the interior
            // vertex of the attached triangle.
            let nu = (d - e * (d.dot(&e) / e.norm_squared())).normalize();
            total += nu.dot(v) * e.norm();
        }
    }
    total
}

fn third_vertex(mesh: &TriMesh, a: usize, b: usize) -> usize {
    for &t in mesh.triangles_at(a) {
        let tri = mesh.triangles()[t as usize];
        for k in 0..3 {
            if tri[k] == a && tri[(k + 1) % 3] == b {
                return tri[(k + 2) % 3];
            }
        }
    }
    unreachable!("boundary edge must belong to a triangle")
}

/// First variation of the weighted area under the normal variation field
/// `speeds * N` (vertex normals), compared two ways: a central finite
/// difference of the weighted area, and the quadrature of
/// `-2 * integral of H_phi * speed` with `H_phi = H - <N, v>/2`.
///
/// Speeds must vanish on boundary vertices. Agreement is first order in the
/// mesh size plus second order in `step`.
pub fn first_variation_check(
    mesh: &TriMesh,
    frame: &DensityFrame,
    speeds: &[f64],
    step: f64,
) -> (f64, f64) {
    assert_eq!(speeds.len(), mesh.n_vertices(), "one speed per vertex");
    for (i, &s) in speeds.iter().enumerate() {
        if mesh.is_boundary_vertex(i) {
            assert!(s == 0.0, "variation speed must vanish on the boundary (vertex {i})");
        }
    }
    let v = frame.v();
    let normals = mesh.vertex_normals();

    let displaced = |sign: f64| -> Vec<Point3<f64>> {
        mesh.vertices()
            .iter()
            .enumerate()
            .map(|(i, p)| p + normals[i] * (sign * step * speeds[i]))
            .collect()
    };
    let plus = weighted_area_of(&displaced(1.0), mesh.triangles(), &v);
    let minus = weighted_area_of(&displaced(-1.0), mesh.triangles(), &v);
    let fd = (plus - minus) / (2.0 * step);

    let h = mean_curvature(mesh);
    let mut analytic = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut corner_mean = 0.0;
        for &i in tri {
            if speeds[i] != 0.0 {
                let h_phi = h.value(i) - 0.5 * normals[i].dot(&v);
                corner_mean += h_phi * speeds[i];
            }
        }
        corner_mean /= 3.0;
        let density = mesh.triangle_centroid(t).coords.dot(&v).exp();
        analytic += -2.0 * corner_mean * density * mesh.triangle_area(t);
    }
    (fd, analytic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use std::f64::consts::PI;

    #[test]
    fn closed_mesh_flux_vanishes() {
        let sphere = shapes::icosphere(3, 1.0);
        assert!(flux(&sphere, &Vector3::z()).abs() < 1e-12);
        let donut = shapes::torus(2.0, 0.5, 48, 24);
        assert!(flux(&donut, &Vector3::z()).abs() < 1e-12);
        assert!(flux(&donut, &Vector3::new(0.6, 0.8, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn hemisphere_flux_is_projected_area() {
        let cap = shapes::hemisphere(1.0, 24, 96);
        let f = flux(&cap, &Vector3::z());
        // Projected area of the triangulated cap: area of the inscribed
        // equator polygon.
        let n = 96.0_f64;
        let polygon = 0.5 * n * (2.0 * PI / n).sin();
        assert!((f - polygon).abs() < 1e-10, "flux {f} vs {polygon}");
    }

    #[test]
    fn unit_sphere_squared_flux_is_4pi_over_3() {
        let sphere = shapes::icosphere(4, 1.0);
        let i2 = squared_normal_flux(&sphere, &Vector3::z());
        let exact = 4.0 * PI / 3.0;
        assert!((i2 - exact).abs() < 0.01 * exact, "I2 {i2} vs {exact}");
    }

    #[test]
    fn torus_squared_flux_matches_quadrature() {
        // <N, e3> = sin(phi) on the tube angle, area element
        // r (R + r cos phi) dphi dtheta; the integral evaluates to
        // 2 pi^2 R r (independent of the sin^2 weighting by symmetry:
        // integral of sin^2 = pi).
        let (major, minor) = (2.0, 0.5);
        let donut = shapes::torus(major, minor, 96, 48);
        let i2 = squared_normal_flux(&donut, &Vector3::z());
        let exact = 2.0 * PI * PI * major * minor;
        assert!((i2 - exact).abs() < 0.01 * exact, "I2 {i2} vs {exact}");
    }

    #[test]
    fn weighted_area_reduces_to_area_at_height_zero() {
        let flat = shapes::graph_patch(10, 1.0, |_, _| 0.0);
        let wa = weighted_area(&flat, &Vector3::z());
        assert!((wa - flat.total_area()).abs() < 1e-12 * wa);
    }

    #[test]
    fn weighted_area_of_vertical_strip_matches_closed_form() {
        // Unit square bent into the xz plane spanning z in [0, 1]:
        // integral of e^z over the strip = e - 1.
        let flat = shapes::graph_patch(64, 0.5, |_, _| 0.0);
        let strip = flat
            .map_vertices(|p| nalgebra::Point3::new(p.x + 0.5, p.y, 0.0))
            .unwrap()
            .map_vertices(|p| nalgebra::Point3::new(p.y, 0.0, p.x))
            .unwrap();
        let wa = weighted_area(&strip, &Vector3::z());
        let exact = std::f64::consts::E - 1.0;
        // Midpoint quadrature of a smooth density: second order in the grid.
        assert!((wa - exact).abs() < 1e-3, "weighted area {wa} vs {exact}");
    }

    #[test]
    fn hemisphere_conormal_integral_is_two_pi() {
        // The inward conormal along the equator of the upper hemisphere
        // points straight up.
        let cap = shapes::hemisphere(1.0, 32, 128);
        let c = conormal_height_integral(&cap, &Vector3::z());
        assert!((c - 2.0 * PI).abs() < 0.05, "conormal integral {c}");
    }

    #[test]
    fn lower_hemisphere_conormal_integral_is_minus_two_pi() {
        let cap = shapes::hemisphere(1.0, 32, 128);
        let lower = cap
            .map_vertices(|p| nalgebra::Point3::new(p.x, p.y, -p.z))
            .unwrap()
            .reversed_winding();
        let c = conormal_height_integral(&lower, &Vector3::z());
        assert!((c + 2.0 * PI).abs() < 0.05, "conormal integral {c}");
    }

    #[test]
    fn first_variation_matches_on_sphere_cap() {
        let cap = shapes::hemisphere(1.0, 24, 96);
        let speeds: Vec<f64> =
            (0..cap.n_vertices()).map(|v| if cap.is_boundary_vertex(v) { 0.0 } else { 1.0 }).collect();
        let (fd, analytic) = first_variation_check(&cap, &DensityFrame::vertical(0.7), &speeds, 1e-5);
        let scale = fd.abs().max(1.0);
        assert!(
            (fd - analytic).abs() < 0.08 * scale,
            "first variation fd {fd} vs analytic {analytic}"
        );
    }

    #[test]
    fn first_variation_vanishes_for_zero_speeds() {
        let cap = shapes::hemisphere(1.0, 8, 24);
        let speeds = vec![0.0; cap.n_vertices()];
        let (fd, analytic) = first_variation_check(&cap, &DensityFrame::vertical(0.0), &speeds, 1e-6);
        assert_eq!(fd, 0.0);
        assert_eq!(analytic, 0.0);
    }
}
