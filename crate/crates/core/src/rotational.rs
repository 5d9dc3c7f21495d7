//! Rotationally symmetric solutions of the graph equation: the radial
//! profile ODE integrated from the axis, and surfaces of revolution built
//! from profiles.
//!
//! In polar form the graph equation reads (1/r) (r u'/W)' = 2 lambda + 1/W
//! with W = sqrt(1 + u'^2). As a first-order system in (u, p = u'):
//! p' = 2 lambda W^3 + W^2 - p W^2 / r, which is singular at the axis; the
//! first steps use the series u = a2 r^2 + a4 r^4 with a2 = (2 lambda+1)/4,
//! a4 = a2^2 (4 lambda + 1)/8, then classic fourth-order Runge-Kutta takes
//! over. Profiles that steepen without bound stop at a finite existence
//! radius; that is a result, not an error.

use nalgebra::Point3;

use crate::mesh::TriMesh;

/// Slope magnitude past which the profile counts as blown up.
pub const SLOPE_BLOWUP: f64 = 1e8;
/// The series start covers r < SERIES_STEPS * step.
const SERIES_STEPS: usize = 10;

#[derive(Debug, Clone)]
pub struct RadialProfile {
    lambda: f64,
    step: f64,
    /// Sample radii 0, step, 2 step, ... (strictly increasing).
    rs: Vec<f64>,
    us: Vec<f64>,
    ps: Vec<f64>,
    /// False when the slope blew up before reaching the requested radius.
    complete: bool,
}

impl RadialProfile {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.rs.len()).map(|i| (self.rs[i], self.us[i], self.ps[i]))
    }

    pub fn n_samples(&self) -> usize {
        self.rs.len()
    }

    /// Largest radius the profile reached.
    pub fn max_r(&self) -> f64 {
        *self.rs.last().unwrap()
    }

    /// True when the profile covers the requested radius; false means the
    /// slope blew up earlier and `max_r` is the numerical existence radius.
    pub fn complete(&self) -> bool {
        self.complete
    }

    /// Height at a radius inside the covered range, by piecewise cubic
    /// Hermite interpolation (the stored slopes are exact derivatives).
    pub fn height_at(&self, r: f64) -> Option<f64> {
        self.hermite(r).map(|(u, _)| u)
    }

    /// Slope u'(r) by Hermite interpolation of the stored samples.
    pub fn slope_at(&self, r: f64) -> Option<f64> {
        self.hermite(r).map(|(_, p)| p)
    }

    fn hermite(&self, r: f64) -> Option<(f64, f64)> {
        if !(r >= 0.0) || r > self.max_r() * (1.0 + 1e-12) {
            return None;
        }
        let r = r.min(self.max_r());
        let i = ((r / self.step) as usize).min(self.rs.len() - 2);
        let (r0, r1) = (self.rs[i], self.rs[i + 1]);
        let dr = r1 - r0;
        let t = ((r - r0) / dr).clamp(0.0, 1.0);
        let (u0, u1, p0, p1) = (self.us[i], self.us[i + 1], self.ps[i], self.ps[i + 1]);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let u = h00 * u0 + h10 * dr * p0 + h01 * u1 + h11 * dr * p1;
        let d00 = 6.0 * t * (t - 1.0);
        let d10 = (1.0 - t) * (1.0 - 3.0 * t);
        let d01 = -d00;
        let d11 = t * (3.0 * t - 2.0);
        let p = d00 * u0 / dr + d10 * p0 + d01 * u1 / dr + d11 * p1;
        Some((u, p))
    }
}

fn slope_rate(lambda: f64, r: f64, p: f64) -> f64 {
    let w2 = 1.0 + p * p;
    let w = w2.sqrt();
    2.0 * lambda * w2 * w + w2 - p * w2 / r
}

/// Integrates the radial profile from the axis with u(0) = 0.
pub fn solve_rotational(lambda: f64, r_max: f64, step: f64) -> RadialProfile {
    assert!(r_max > 0.0 && step > 0.0, "radius and step must be positive");
    assert!(lambda.is_finite());
    let a2 = (2.0 * lambda + 1.0) / 4.0;
    let a4 = a2 * a2 * (4.0 * lambda + 1.0) / 8.0;

    let mut rs = Vec::new();
    let mut us = Vec::new();
    let mut ps = Vec::new();
    let series_end = (SERIES_STEPS as f64) * step;
    let mut i = 0usize;
    while (i as f64) * step <= series_end.min(r_max) + step * 1e-9 {
        let r = (i as f64) * step;
        if r > r_max * (1.0 + 1e-12) {
            break;
        }
        rs.push(r);
        us.push(a2 * r * r + a4 * r * r * r * r);
        ps.push(2.0 * a2 * r + 4.0 * a4 * r * r * r);
        i += 1;
    }

    let mut complete = true;
    if *rs.last().unwrap() < r_max {
        let mut r = *rs.last().unwrap();
        let mut u = *us.last().unwrap();
        let mut p = *ps.last().unwrap();
        while r < r_max - step * 1e-9 {
            let dr = step.min(r_max - r);
            let k1u = p;
            let k1p = slope_rate(lambda, r, p);
            let k2u = p + 0.5 * dr * k1p;
            let k2p = slope_rate(lambda, r + 0.5 * dr, p + 0.5 * dr * k1p);
            let k3u = p + 0.5 * dr * k2p;
            let k3p = slope_rate(lambda, r + 0.5 * dr, p + 0.5 * dr * k2p);
            let k4u = p + dr * k3p;
            let k4p = slope_rate(lambda, r + dr, p + dr * k3p);
            let u_next = u + dr / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            let p_next = p + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            if !(u_next.is_finite() && p_next.is_finite()) || p_next.abs() > SLOPE_BLOWUP {
                complete = false;
                break;
            }
            r += dr;
            u = u_next;
            p = p_next;
            rs.push(r);
            us.push(u);
            ps.push(p);
        }
    }
    RadialProfile { lambda, step, rs, us, ps, complete }
}

/// Tessellates the surface of revolution of a profile, oriented upward.
/// Ring spacing tracks the angular spacing so triangles stay well shaped.
pub fn rotational_to_mesh(profile: &RadialProfile, n_angular: usize) -> TriMesh {
    assert!(n_angular >= 8, "need at least 8 angular samples");
    let r_max = profile.max_r();
    let target = 2.0 * std::f64::consts::PI * r_max / n_angular as f64;
    let n_rings = ((r_max / target).ceil() as usize).max(3);

    let mut vertices = vec![Point3::new(0.0, 0.0, profile.height_at(0.0).unwrap())];
    for ring in 1..=n_rings {
        let r = r_max * ring as f64 / n_rings as f64;
        let z = profile.height_at(r).expect("ring inside profile range");
        for k in 0..n_angular {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n_angular as f64;
            vertices.push(Point3::new(r * t.cos(), r * t.sin(), z));
        }
    }
    let ring_start = |ring: usize| 1 + (ring - 1) * n_angular;
    let mut triangles = Vec::new();
    for k in 0..n_angular {
        let k1 = (k + 1) % n_angular;
        // Counterclockwise from above: upward normals.
        triangles.push([0, ring_start(1) + k, ring_start(1) + k1]);
    }
    for ring in 1..n_rings {
        let (a, b) = (ring_start(ring), ring_start(ring + 1));
        for k in 0..n_angular {
            let k1 = (k + 1) % n_angular;
            triangles.push([a + k, b + k, b + k1]);
            triangles.push([a + k, b + k1, a + k1]);
        }
    }
    TriMesh::new(vertices, triangles).expect("revolution tessellation is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::soliton_residual;
    use crate::frame::DensityFrame;
    use crate::integrals::flux;
    use nalgebra::Vector3;

    #[test]
    fn planar_lambda_profile_is_identically_zero() {
        let profile = solve_rotational(-0.5, 2.0, 1e-3);
        assert!(profile.complete());
        for (_, u, p) in profile.samples() {
            assert_eq!(u, 0.0);
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn axis_curvature_matches_series() {
        // u''(0) = lambda + 1/2, read off as p(r)/r near the axis.
        for (lambda, want) in [(0.0, 0.5), (0.25, 0.75), (-0.25, 0.25)] {
            let profile = solve_rotational(lambda, 1.0, 1e-3);
            let r = 5e-3;
            let ratio = profile.slope_at(r).unwrap() / r;
            assert!(
                (ratio - want).abs() < 1e-4,
                "lambda {lambda}: u''(0) ~ {ratio}, want {want}"
            );
        }
    }

    #[test]
    fn bowl_is_convex_and_positive_away_from_axis() {
        let profile = solve_rotational(0.0, 1.0, 1e-3);
        assert!(profile.complete());
        assert!(profile.height_at(1.0).unwrap() > 0.0);
        let mut prev_p = 0.0;
        for (r, _, p) in profile.samples() {
            if r > 0.0 {
                assert!(p >= prev_p, "slope must not decrease on the bowl");
            }
            prev_p = p;
        }
    }

    #[test]
    fn step_halving_is_fourth_order() {
        let lambda = 0.3;
        let coarse = solve_rotational(lambda, 1.5, 4e-3).height_at(1.5).unwrap();
        let medium = solve_rotational(lambda, 1.5, 2e-3).height_at(1.5).unwrap();
        let fine = solve_rotational(lambda, 1.5, 1e-3).height_at(1.5).unwrap();
        let d1 = (coarse - medium).abs();
        let d2 = (medium - fine).abs();
        let order = (d1 / d2).log2();
        assert!(
            order > 3.0,
            "observed order {order} (diffs {d1:.3e}, {d2:.3e})"
        );
        assert!(d2 < 1e-9, "fine-step increment {d2:.3e}");
    }

    #[test]
    fn steep_lambda_reports_existence_radius() {
        let profile = solve_rotational(2.0, 5.0, 1e-3);
        assert!(!profile.complete());
        assert!(profile.max_r() < 5.0);
        assert!(profile.max_r() > 0.05, "existence radius {}", profile.max_r());
    }

    #[test]
    fn revolution_mesh_of_planar_profile_is_flat() {
        let profile = solve_rotational(-0.5, 1.0, 1e-3);
        let mesh = rotational_to_mesh(&profile, 32);
        assert_eq!(mesh.boundary_loops().len(), 1);
        for v in mesh.vertices() {
            assert_eq!(v.z, 0.0);
        }
        let residual = soliton_residual(&mesh, &DensityFrame::vertical(-0.5));
        assert!(residual.sup_reliable() < 1e-10);
    }

    #[test]
    fn revolution_residual_drops_under_refinement() {
        let profile = solve_rotational(0.0, 1.0, 5e-4);
        let frame = DensityFrame::vertical(0.0);
        let coarse = soliton_residual(&rotational_to_mesh(&profile, 64), &frame).sup_reliable();
        let fine = soliton_residual(&rotational_to_mesh(&profile, 128), &frame).sup_reliable();
        assert!(
            fine < coarse / 2.0,
            "sup residual {coarse:.3e} -> {fine:.3e} must at least halve"
        );
        assert!(fine < 2e-3, "fine revolution mesh residual {fine:.3e}");
    }

    #[test]
    fn upward_orientation_and_flux_sign() {
        let profile = solve_rotational(0.0, 1.0, 1e-3);
        let mesh = rotational_to_mesh(&profile, 48);
        for t in 0..mesh.n_triangles() {
            assert!(mesh.triangle_normal(t).z > 0.0, "upward graph orientation");
        }
        // Vertical flux of an upward graph is the projected area.
        let f = flux(&mesh, &Vector3::z());
        let n = 48.0;
        let polygon = 0.5 * n * (2.0 * std::f64::consts::PI / n).sin();
        assert!((f - polygon).abs() < 1e-6, "flux {f} vs projected polygon {polygon}");
    }
}
