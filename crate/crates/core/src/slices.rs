//! Level-set slicing of graph solutions: exact piecewise-linear level
//! curves, sublevel areas, and the coarea rate dA/dt, the ingredients of
//! the area-height comparison.
//!
//! Everything is computed per triangle in closed form: a linear function's
//! level set crosses a triangle in a segment, the sublevel region is a
//! polygon clip, and the lifted area of any planar subregion is the planar
//! area times the triangle's constant slope factor W.

use nalgebra::{Point2, Vector2};

use crate::domain::DomainMesh;

/// Slice statistics of a lifted graph at uniformly spaced interior levels.
#[derive(Debug, Clone)]
pub struct SliceData {
    /// Depth levels, midpoints of a uniform partition of [0, height].
    pub levels: Vec<f64>,
    /// Planar length of the level curve at each level.
    pub curve_lengths: Vec<f64>,
    /// Planar (projected) area of the sublevel region at each level.
    pub region_areas: Vec<f64>,
    /// Surface area of the lifted sublevel region A(t) at each level.
    pub surface_areas: Vec<f64>,
    /// Coarea rate dA/dt at each level (sum of segment length x W/|Du|).
    pub coarea_rates: Vec<f64>,
    /// Total depth range of the data.
    pub height: f64,
    /// True when the data is constant to machine precision; no levels then.
    pub degenerate: bool,
}

/// Slices the graph of `u` over the domain at `n_levels` uniformly spaced
/// depths. Depth is measured from the lowest vertex upward, or from the
/// highest vertex downward with `from_top`, so the slices always grow away
/// from an apex of the surface toward the boundary.
pub fn coarea_slices(dom: &DomainMesh, u: &[f64], n_levels: usize, from_top: bool) -> SliceData {
    assert_eq!(u.len(), dom.points().len(), "one height per vertex");
    assert!(n_levels >= 1);
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let scale = min.abs().max(max.abs()).max(1.0);
    if !(range > 1e-12 * scale) {
        return SliceData {
            levels: Vec::new(),
            curve_lengths: Vec::new(),
            region_areas: Vec::new(),
            surface_areas: Vec::new(),
            coarea_rates: Vec::new(),
            height: 0.0,
            degenerate: true,
        };
    }
    let depth: Vec<f64> = if from_top {
        u.iter().map(|&v| max - v).collect()
    } else {
        u.iter().map(|&v| v - min).collect()
    };

    let levels: Vec<f64> = (0..n_levels)
        .map(|k| range * (k as f64 + 0.5) / n_levels as f64)
        .collect();
    let mut curve_lengths = vec![0.0; n_levels];
    let mut region_areas = vec![0.0; n_levels];
    let mut surface_areas = vec![0.0; n_levels];
    let mut coarea_rates = vec![0.0; n_levels];

    for tri in dom.triangles() {
        let p = [
            dom.points()[tri[0]],
            dom.points()[tri[1]],
            dom.points()[tri[2]],
        ];
        let d = [depth[tri[0]], depth[tri[1]], depth[tri[2]]];
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let det = e1.x * e2.y - e1.y * e2.x;
        // Gradient of the linear interpolant of depth over the triangle;
        // |grad| equals the surface slope |Du| up to the sign convention.
        let grad = Vector2::new(
            (d[1] - d[0]) * e2.y - (d[2] - d[0]) * e1.y,
            (d[2] - d[0]) * e1.x - (d[1] - d[0]) * e2.x,
        ) / det;
        let slope = grad.norm();
        let w = (1.0 + slope * slope).sqrt();

        let lo = d[0].min(d[1]).min(d[2]);
        let hi = d[0].max(d[1]).max(d[2]);
        for (k, &t) in levels.iter().enumerate() {
            if t >= hi {
                // Entire triangle below the level.
                let area = 0.5 * det.abs();
                region_areas[k] += area;
                surface_areas[k] += area * w;
            } else if t > lo {
                let (area, seg) = clip_below(&p, &d, t);
                region_areas[k] += area;
                surface_areas[k] += area * w;
                curve_lengths[k] += seg;
                if slope > 1e-14 {
                    coarea_rates[k] += seg * w / slope;
                }
            }
        }
    }

    SliceData {
        levels,
        curve_lengths,
        region_areas,
        surface_areas,
        coarea_rates,
        height: range,
        degenerate: false,
    }
}

/// Clips the triangle to {depth <= t}; returns the clipped planar area and
/// the length of the level segment, exact for linear depth.
fn clip_below(p: &[Point2<f64>; 3], d: &[f64; 3], t: f64) -> (f64, f64) {
    let mut poly: Vec<Point2<f64>> = Vec::with_capacity(4);
    let mut crossings: Vec<Point2<f64>> = Vec::with_capacity(2);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] <= t {
            poly.push(p[i]);
        }
        if (d[i] <= t) != (d[j] <= t) {
            let s = (t - d[i]) / (d[j] - d[i]);
            let q = p[i] + (p[j] - p[i]) * s;
            poly.push(q);
            crossings.push(q);
        }
    }
    let mut area2 = 0.0;
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        area2 += poly[i].x * poly[j].y - poly[j].x * poly[i].y;
    }
    let seg = if crossings.len() == 2 {
        (crossings[1] - crossings[0]).norm()
    } else {
        0.0
    };
    (0.5 * area2.abs(), seg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainShape;
    use nalgebra::Point2;

    fn unit_square(h: f64) -> DomainMesh {
        let shape = DomainShape::Polygon {
            points: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
        };
        DomainMesh::generate(shape, h, 42).unwrap()
    }

    #[test]
    fn tilted_plane_slices_are_unit_chords() {
        // u = x over the unit square: every level curve is a vertical chord
        // of planar length exactly 1, while the surface-area rate carries
        // the slope factor sqrt(2). The two quantities must not be conflated.
        let dom = unit_square(0.07);
        let u: Vec<f64> = dom.points().iter().map(|p| p.x).collect();
        let data = coarea_slices(&dom, &u, 16, false);
        assert!(!data.degenerate);
        assert!((data.height - 1.0).abs() < 1e-12);
        let sqrt2 = 2.0f64.sqrt();
        for k in 0..data.levels.len() {
            assert!(
                (data.curve_lengths[k] - 1.0).abs() < 1e-9,
                "chord length {} at level {}",
                data.curve_lengths[k],
                data.levels[k]
            );
            assert!(
                (data.coarea_rates[k] - sqrt2).abs() < 1e-9,
                "coarea rate {} at level {}",
                data.coarea_rates[k],
                data.levels[k]
            );
            assert!((data.region_areas[k] - data.levels[k]).abs() < 1e-9);
            assert!((data.surface_areas[k] - sqrt2 * data.levels[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn paraboloid_slices_match_closed_forms() {
        // u = |x|^2/2 over the unit disk: level t is the circle of radius
        // sqrt(2t); the lifted sublevel area is (2 pi/3)((1+r^2)^{3/2} - 1).
        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, 0.03, 42).unwrap();
        let u: Vec<f64> = dom.points().iter().map(|p| 0.5 * p.coords.norm_squared()).collect();
        let data = coarea_slices(&dom, &u, 12, false);
        assert!(!data.degenerate);
        for k in 1..data.levels.len() - 1 {
            let t = data.levels[k];
            let r = (2.0 * t).sqrt();
            let circle = 2.0 * std::f64::consts::PI * r;
            let rate = 2.0 * std::f64::consts::PI * (1.0 + r * r).sqrt();
            let cap = 2.0 * std::f64::consts::PI / 3.0 * ((1.0 + r * r).powf(1.5) - 1.0);
            assert!(
                (data.curve_lengths[k] - circle).abs() < 0.02 * circle,
                "L {} vs circle {circle}",
                data.curve_lengths[k]
            );
            assert!(
                (data.coarea_rates[k] - rate).abs() < 0.02 * rate,
                "dA/dt {} vs {rate}",
                data.coarea_rates[k]
            );
            assert!(
                (data.surface_areas[k] - cap).abs() < 0.01 * cap,
                "A {} vs cap {cap}",
                data.surface_areas[k]
            );
        }
    }

    #[test]
    fn coarea_rate_matches_area_derivative() {
        let dom = DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, 0.03, 42).unwrap();
        let u: Vec<f64> = dom.points().iter().map(|p| 0.5 * p.coords.norm_squared()).collect();
        let data = coarea_slices(&dom, &u, 40, false);
        let dt = data.height / 40.0;
        for k in 1..data.levels.len() - 1 {
            let fd = (data.surface_areas[k + 1] - data.surface_areas[k - 1]) / (2.0 * dt);
            assert!(
                (data.coarea_rates[k] - fd).abs() < 0.05 * fd.abs().max(1.0),
                "rate {} vs centered difference {fd} at level {k}",
                data.coarea_rates[k]
            );
        }
    }

    #[test]
    fn slices_grow_monotonically() {
        let dom = unit_square(0.06);
        let u: Vec<f64> = dom.points().iter().map(|p| (3.0 * p.x).sin() * p.y + p.x).collect();
        for from_top in [false, true] {
            let data = coarea_slices(&dom, &u, 25, from_top);
            for k in 1..data.levels.len() {
                assert!(data.surface_areas[k] >= data.surface_areas[k - 1]);
                assert!(data.region_areas[k] >= data.region_areas[k - 1]);
            }
            let top = *data.surface_areas.last().unwrap();
            let total: f64 = (0..dom.triangles().len()).map(|t| lifted_area(&dom, &u, t)).sum();
            assert!(top <= total + 1e-12);
            assert!(top > 0.8 * total, "last slice {top} vs total {total}");
        }
    }

    fn lifted_area(dom: &DomainMesh, u: &[f64], t: usize) -> f64 {
        let tri = dom.triangles()[t];
        let planar = dom.triangle_area(t);
        let p = [dom.points()[tri[0]], dom.points()[tri[1]], dom.points()[tri[2]]];
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let det = e1.x * e2.y - e1.y * e2.x;
        let g = nalgebra::Vector2::new(
            (u[tri[1]] - u[tri[0]]) * e2.y - (u[tri[2]] - u[tri[0]]) * e1.y,
            (u[tri[2]] - u[tri[0]]) * e1.x - (u[tri[1]] - u[tri[0]]) * e2.x,
        ) / det;
        planar * (1.0 + g.norm_squared()).sqrt()
    }

    #[test]
    fn mirrored_data_gives_identical_slices_from_the_other_side() {
        let dom = unit_square(0.08);
        let u: Vec<f64> = dom.points().iter().map(|p| p.x * p.x + 0.3 * p.y).collect();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        let below = coarea_slices(&dom, &u, 10, false);
        let above = coarea_slices(&dom, &neg, 10, true);
        for k in 0..10 {
            assert!((below.surface_areas[k] - above.surface_areas[k]).abs() < 1e-12);
            assert!((below.curve_lengths[k] - above.curve_lengths[k]).abs() < 1e-12);
            assert!((below.coarea_rates[k] - above.coarea_rates[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_data_is_degenerate() {
        let dom = unit_square(0.1);
        let u = vec![0.7; dom.points().len()];
        let data = coarea_slices(&dom, &u, 8, false);
        assert!(data.degenerate);
        assert!(data.levels.is_empty());
        assert_eq!(data.height, 0.0);
    }
}
