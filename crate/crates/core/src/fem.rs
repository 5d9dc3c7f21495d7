//! Piecewise-linear finite-element assembly for the graph equation
//! div(Du/W) = 2 lambda + 1/W, W = sqrt(1 + |Du|^2), with Dirichlet
//! boundary heights eliminated.
//!
//! The weak residual at an interior hat function w is
//! F(u; w) = int Du.Dw / W + int (2 lambda + 1/W) w, assembled per triangle
//! with the centroid rule on the zeroth-order term. Newton needs its exact
//! linearization, assembled alongside.

use nalgebra::Vector2;

use crate::domain::DomainMesh;
use crate::linsolve::{BandedLu, CsrMatrix, LinSolveError};

struct TriGeom {
    v: [usize; 3],
    /// Hat-function gradients; grad[0] = -grad[1] - grad[2] exactly.
    grad: [Vector2<f64>; 3],
    area: f64,
}

/// Discrete problem on a fixed domain mesh: unknown numbering, per-triangle
/// geometry, and the Jacobian sparsity pattern, all built once.
pub struct FemSystem {
    dirichlet: Vec<f64>,
    is_boundary: Vec<bool>,
    interior: Vec<usize>,
    index_of: Vec<usize>,
    tris: Vec<TriGeom>,
    template: CsrMatrix,
}

impl FemSystem {
    pub fn new(dom: &DomainMesh) -> Self {
        let n = dom.n_vertices();
        let is_boundary: Vec<bool> = (0..n).map(|v| dom.is_boundary_vertex(v)).collect();
        let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();
        let mut index_of = vec![usize::MAX; n];
        for (k, &v) in interior.iter().enumerate() {
            index_of[v] = k;
        }

        let rot90 = |v: Vector2<f64>| Vector2::new(-v.y, v.x);
        let tris = dom
            .triangles()
            .iter()
            .map(|&tri| {
                let [a, b, c] = tri;
                let (pa, pb, pc) = (dom.points()[a], dom.points()[b], dom.points()[c]);
                let e1 = pb - pa;
                let e2 = pc - pa;
                let double_area = e1.x * e2.y - e1.y * e2.x;
                let g1 = Vector2::new(e2.y, -e2.x) / double_area;
                let g2 = rot90(e1) / double_area;
                TriGeom { v: tri, grad: [-g1 - g2, g1, g2], area: 0.5 * double_area }
            })
            .collect::<Vec<_>>();

        let mut edges = Vec::new();
        for t in &tris {
            for a in 0..3 {
                for b in a + 1..3 {
                    let (i, j) = (index_of[t.v[a]], index_of[t.v[b]]);
                    if i != usize::MAX && j != usize::MAX {
                        edges.push((i, j));
                    }
                }
            }
        }
        let template = CsrMatrix::from_edges(interior.len(), edges);

        Self { dirichlet: dom.heights().to_vec(), is_boundary, interior, index_of, tris, template }
    }

    pub fn n_unknowns(&self) -> usize {
        self.interior.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.is_boundary.len()
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    /// Full per-vertex heights from interior unknowns plus Dirichlet data.
    pub fn full_heights(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.interior.len());
        let mut u = self.dirichlet.clone();
        for (k, &v) in self.interior.iter().enumerate() {
            u[v] = x[k];
        }
        u
    }

    /// Interior part of full heights.
    pub fn interior_part(&self, u_full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| u_full[v]).collect()
    }

    /// Starting iterate: the constant extension when every boundary height
    /// is the same value (then the residual at lambda = -1/2 vanishes
    /// identically), the harmonic extension otherwise.
    pub fn initial_guess(&self) -> Result<Vec<f64>, LinSolveError> {
        let mut boundary_vals =
            self.is_boundary.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| self.dirichlet[v]);
        let first = boundary_vals.next().unwrap_or(0.0);
        if boundary_vals.all(|h| h == first) {
            return Ok(vec![first; self.n_vertices()]);
        }
        self.harmonic_extension()
    }

    /// Solves the flat-metric Laplace problem for the interior values.
    pub fn harmonic_extension(&self) -> Result<Vec<f64>, LinSolveError> {
        let mut stiffness = self.template.clone();
        let mut rhs = vec![0.0; self.n_unknowns()];
        for t in &self.tris {
            for a in 0..3 {
                let ia = self.index_of[t.v[a]];
                if ia == usize::MAX {
                    continue;
                }
                for b in 0..3 {
                    let entry = t.grad[b].dot(&t.grad[a]) * t.area;
                    let ib = self.index_of[t.v[b]];
                    if ib != usize::MAX {
                        stiffness.add(ia, ib, entry);
                    } else {
                        rhs[ia] -= entry * self.dirichlet[t.v[b]];
                    }
                }
            }
        }
        let x = BandedLu::factor(&stiffness)?.solve(&rhs)?;
        Ok(self.full_heights(&x))
    }

    fn triangle_slope(&self, t: &TriGeom, u: &[f64]) -> Vector2<f64> {
        // Difference form: exactly zero for constant heights.
        let d1 = u[t.v[1]] - u[t.v[0]];
        let d2 = u[t.v[2]] - u[t.v[0]];
        d1 * t.grad[1] + d2 * t.grad[2]
    }

    /// Weak residual at every interior vertex, given full heights.
    pub fn residual(&self, u_full: &[f64], lambda: f64) -> Vec<f64> {
        assert_eq!(u_full.len(), self.n_vertices());
        let mut res = vec![0.0; self.n_unknowns()];
        for t in &self.tris {
            let du = self.triangle_slope(t, u_full);
            let w = (1.0 + du.norm_squared()).sqrt();
            let lower = (2.0 * lambda + 1.0 / w) * t.area / 3.0;
            for a in 0..3 {
                let ia = self.index_of[t.v[a]];
                if ia != usize::MAX {
                    res[ia] += du.dot(&t.grad[a]) / w * t.area + lower;
                }
            }
        }
        res
    }

    /// Exact linearization of `residual` in the interior unknowns.
    pub fn jacobian(&self, u_full: &[f64], lambda: f64) -> CsrMatrix {
        let _ = lambda; // the lambda term is constant in u
        assert_eq!(u_full.len(), self.n_vertices());
        let mut jac = self.template.clone();
        for t in &self.tris {
            let du = self.triangle_slope(t, u_full);
            let w = (1.0 + du.norm_squared()).sqrt();
            let w3 = w * w * w;
            for a in 0..3 {
                let ia = self.index_of[t.v[a]];
                if ia == usize::MAX {
                    continue;
                }
                let da = du.dot(&t.grad[a]);
                for b in 0..3 {
                    let ib = self.index_of[t.v[b]];
                    if ib == usize::MAX {
                        continue;
                    }
                    let db = du.dot(&t.grad[b]);
                    let principal = (t.grad[b].dot(&t.grad[a]) / w - da * db / w3) * t.area;
                    let lower = -db / w3 * t.area / 3.0;
                    jac.add(ia, ib, principal + lower);
                }
            }
        }
        jac
    }

    pub fn residual_norm(&self, u_full: &[f64], lambda: f64) -> f64 {
        self.residual(u_full, lambda).iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainMesh, DomainShape};

    fn small_disk() -> DomainMesh {
        DomainMesh::generate(DomainShape::Disk { radius: 1.0 }, 0.35, 11).unwrap()
    }

    #[test]
    fn constant_data_at_planar_lambda_has_exactly_zero_residual() {
        let dom = small_disk().with_constant_boundary_height(0.7);
        let fem = FemSystem::new(&dom);
        let u = fem.initial_guess().unwrap();
        assert!(u.iter().all(|&v| v == 0.7));
        let res = fem.residual(&u, -0.5);
        assert!(res.iter().all(|&r| r == 0.0), "residual must vanish bit-exactly");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let dom = small_disk();
        let fem = FemSystem::new(&dom);
        let n = fem.n_unknowns();
        assert!(n > 3, "need interior unknowns, got {n}");
        // Deterministic non-trivial iterate.
        let x: Vec<f64> = (0..n).map(|k| 0.3 * ((k * 7 % 13) as f64 / 13.0 - 0.5)).collect();
        let u = fem.full_heights(&x);
        let jac = fem.jacobian(&u, 0.3);
        let eps = 1e-6;
        let mut worst = 0.0f64;
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += eps;
            let rp = fem.residual(&fem.full_heights(&xp), 0.3);
            xp[j] -= 2.0 * eps;
            let rm = fem.residual(&fem.full_heights(&xp), 0.3);
            for i in 0..n {
                let fd = (rp[i] - rm[i]) / (2.0 * eps);
                worst = worst.max((jac.get(i, j) - fd).abs());
            }
        }
        assert!(worst < 1e-7, "Jacobian deviates from finite differences by {worst}");
    }

    #[test]
    fn harmonic_extension_reproduces_affine_data() {
        // PL interpolants of affine functions are discretely harmonic on
        // any triangulation, so the extension recovers them exactly.
        let dom = small_disk().with_boundary_heights_fn(|p| 0.25 * p.x + 0.5 * p.y);
        let fem = FemSystem::new(&dom);
        let u = fem.harmonic_extension().unwrap();
        let dom2 = small_disk();
        for (v, p) in dom2.points().iter().enumerate() {
            let expected = 0.25 * p.x + 0.5 * p.y;
            if !dom2.is_boundary_vertex(v) {
                assert!(
                    (u[v] - expected).abs() < 1e-12,
                    "vertex {v}: {} vs {expected}",
                    u[v]
                );
            }
        }
    }

    #[test]
    fn residual_scales_with_planar_defect() {
        // For u = 0, W = 1 and the residual reduces to (2 lambda + 1)
        // times the vertex area weights; it vanishes only at lambda=-1/2.
        let dom = small_disk();
        let fem = FemSystem::new(&dom);
        let u = vec![0.0; fem.n_vertices()];
        let r0 = fem.residual_norm(&u, -0.5);
        let r1 = fem.residual_norm(&u, 0.0);
        let r2 = fem.residual_norm(&u, 0.5);
        assert_eq!(r0, 0.0);
        assert!(r1 > 0.0);
        assert!((r2 / r1 - 2.0).abs() < 1e-12, "linear in 2 lambda + 1");
    }
}
