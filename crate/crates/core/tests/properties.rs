//! Randomized invariants of the geometry kernel: identities that must
//! hold for every input, not just the handful of fixtures the unit tests
//! pin down.

use std::collections::HashSet;

use nalgebra::{Point3, Rotation3, Vector3};
use proptest::prelude::*;
use soliton_lab::{
    coarea_slices, flux, read_obj, shapes, solve_rotational, soliton_residual,
    squared_normal_flux, write_obj, BoundaryCurve, DensityFrame, DomainMesh, DomainShape,
    PlanarBoundary, TriMesh,
};

/// A smooth test height over the plane with tunable low-order terms.
fn height(a: f64, b: f64, c: f64, d: f64, x: f64, y: f64) -> f64 {
    a * x + b * y + c * (x * x - y * y) + d * x * y
}

fn sample_mesh(pick: usize, r: f64) -> TriMesh {
    match pick {
        0 => shapes::icosphere(2, r),
        1 => shapes::torus(2.0 * r, 0.6 * r, 20, 10),
        _ => shapes::hemisphere(r, 8, 24),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The normal flux of a lifted graph equals the planar domain area
    /// exactly, triangle by triangle, whatever the heights are.
    #[test]
    fn flux_of_lifted_graph_is_the_projected_area(
        h in 0.15..0.3f64,
        seed in any::<u64>(),
        radius in 0.6..1.5f64,
        a in -0.5..0.5f64,
        b in -0.5..0.5f64,
        c in -0.5..0.5f64,
        d in -0.5..0.5f64,
    ) {
        let dom = DomainMesh::generate(DomainShape::Disk { radius }, h, seed).unwrap();
        let u: Vec<f64> = dom.points().iter().map(|p| height(a, b, c, d, p.x, p.y)).collect();
        let lifted = dom.lift(&u);
        let area = dom.area();
        prop_assert!((flux(&lifted, &Vector3::z()) - area).abs() <= 1e-11 * (1.0 + area));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The soliton residual depends on lambda only through the additive
    /// term, so two residual fields of the same mesh differ by a constant.
    #[test]
    fn residual_shifts_linearly_in_lambda(
        pick in 0usize..3,
        r in 0.7..1.6f64,
        l1 in -1.0..1.0f64,
        l2 in -1.0..1.0f64,
    ) {
        let mesh = sample_mesh(pick, r);
        let f1 = soliton_residual(&mesh, &DensityFrame::vertical(l1));
        let f2 = soliton_residual(&mesh, &DensityFrame::vertical(l2));
        let mut compared = 0usize;
        for v in 0..mesh.vertices().len() {
            if f1.is_reliable(v) && f2.is_reliable(v) {
                prop_assert!((f1.value(v) - f2.value(v) - (l2 - l1)).abs() <= 1e-12);
                compared += 1;
            }
        }
        prop_assert!(compared > 0);
    }

    /// Fluxes against the vertical direction are unchanged by rotations
    /// about that direction and by arbitrary translations.
    #[test]
    fn fluxes_are_invariant_under_rigid_motions_fixing_v(
        pick in 0usize..3,
        r in 0.7..1.6f64,
        theta in 0.0..std::f64::consts::TAU,
        tx in -5.0..5.0f64,
        ty in -5.0..5.0f64,
        tz in -5.0..5.0f64,
    ) {
        let mesh = sample_mesh(pick, r);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), theta);
        let shift = Vector3::new(tx, ty, tz);
        let moved: Vec<Point3<f64>> =
            mesh.vertices().iter().map(|p| rot * p + shift).collect();
        let moved = TriMesh::new(moved, mesh.triangles().to_vec()).unwrap();
        let v = Vector3::z();
        let scale = 1.0 + mesh.total_area();
        prop_assert!((flux(&moved, &v) - flux(&mesh, &v)).abs() <= 1e-9 * scale);
        prop_assert!(
            (squared_normal_flux(&moved, &v) - squared_normal_flux(&mesh, &v)).abs()
                <= 1e-9 * scale
        );
        prop_assert!((moved.total_area() - mesh.total_area()).abs() <= 1e-9 * scale);
    }

    /// Generated planar meshes have the topology of their shape: loop
    /// count, Euler characteristic, positive orientation, and an edge
    /// length near the target.
    #[test]
    fn generated_meshes_have_the_shape_topology(
        annular in any::<bool>(),
        h in 0.12..0.28f64,
        seed in any::<u64>(),
        size in 0.8..1.4f64,
    ) {
        let (shape, loops, euler) = if annular {
            (DomainShape::Annulus { inner: 0.45 * size, outer: size }, 2usize, 0isize)
        } else {
            (DomainShape::Ellipse { rx: size, ry: 0.8 * size }, 1usize, 1isize)
        };
        let dom = DomainMesh::generate(shape, h, seed).unwrap();
        prop_assert_eq!(dom.boundary_loops().len(), loops);

        let mut edges = HashSet::new();
        for t in dom.triangles() {
            for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((i.min(j), i.max(j)));
            }
            let p = dom.points();
            let (pa, pb, pc) = (p[t[0]], p[t[1]], p[t[2]]);
            let signed = (pb - pa).perp(&(pc - pa));
            prop_assert!(signed > 0.0, "clockwise triangle");
        }
        let v = dom.points().len() as isize;
        let e = edges.len() as isize;
        let f = dom.triangles().len() as isize;
        prop_assert_eq!(v - e + f, euler);

        let mean = dom.mean_edge_length();
        prop_assert!(mean > h / 3.0 && mean < 2.0 * h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Writing a mesh to the interchange format and reading it back is
    /// bit-exact and preserves connectivity.
    #[test]
    fn obj_roundtrip_is_exact(pick in 0usize..3, r in 0.7..1.6f64) {
        let mesh = sample_mesh(pick, r);
        let mut buffer = Vec::new();
        write_obj(&mesh, &mut buffer).unwrap();
        let back = read_obj(buffer.as_slice()).unwrap();
        prop_assert_eq!(mesh.vertices().len(), back.vertices().len());
        for (p, q) in mesh.vertices().iter().zip(back.vertices()) {
            prop_assert_eq!(p, q);
        }
        prop_assert_eq!(mesh.triangles(), back.triangles());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Slices grow away from the apex: sublevel regions and their lifted
    /// areas are monotone in depth, the lifted area dominates the planar
    /// one, and nothing exceeds the whole domain.
    #[test]
    fn slices_grow_monotonically(
        h in 0.15..0.3f64,
        seed in any::<u64>(),
        a in 0.05..0.5f64,
        b in -0.5..0.5f64,
        c in -0.5..0.5f64,
        d in -0.5..0.5f64,
        n_levels in 3usize..12,
        from_top in any::<bool>(),
    ) {
        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, h, seed).unwrap();
        let u: Vec<f64> = dom.points().iter().map(|p| height(a, b, c, d, p.x, p.y)).collect();
        let s = coarea_slices(&dom, &u, n_levels, from_top);
        prop_assert!(!s.degenerate);
        prop_assert_eq!(s.levels.len(), n_levels);
        for i in 0..n_levels {
            prop_assert!(s.levels[i] > 0.0 && s.levels[i] < s.height);
            prop_assert!(s.curve_lengths[i] >= 0.0);
            prop_assert!(s.surface_areas[i] >= s.region_areas[i] - 1e-12);
            prop_assert!(s.region_areas[i] <= dom.area() + 1e-9);
            if i > 0 {
                prop_assert!(s.levels[i] > s.levels[i - 1]);
                prop_assert!(s.region_areas[i] >= s.region_areas[i - 1] - 1e-12);
                prop_assert!(s.surface_areas[i] >= s.surface_areas[i - 1] - 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The solvability bound of a circle is the inverse radius, wherever
    /// the circle sits.
    #[test]
    fn circle_solvability_bound_is_the_inverse_radius(
        radius in 0.2..5.0f64,
        cx in -3.0..3.0f64,
        cy in -3.0..3.0f64,
    ) {
        let boundary = PlanarBoundary::horizontal(
            0.0,
            vec![BoundaryCurve::Circle { center: Point3::new(cx, cy, 0.0), radius }],
        )
        .unwrap();
        let bound = boundary.solvability_bound(&Vector3::z()).unwrap();
        prop_assert!((bound - 1.0 / radius).abs() <= 1e-12 * (1.0 + 1.0 / radius));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Radial profiles start flat at the axis and keep one strict sign
    /// determined by the side of the planar value lambda lies on.
    #[test]
    fn radial_profiles_start_flat_and_stay_one_sided(l in -1.0..0.6f64) {
        prop_assume!((l + 0.5).abs() >= 0.05);
        let profile = solve_rotational(l, 0.8, 1e-3);
        prop_assert!(profile.complete());
        prop_assert!(profile.height_at(0.0).unwrap().abs() <= 1e-15);
        let sign = (l + 0.5).signum();
        for r in [0.2, 0.4, 0.6, 0.8] {
            let u = profile.height_at(r).unwrap();
            let p = profile.slope_at(r).unwrap();
            prop_assert!(sign * u > 0.0, "height sign flipped at r={}", r);
            prop_assert!(sign * p > 0.0, "slope sign flipped at r={}", r);
        }
    }
}
