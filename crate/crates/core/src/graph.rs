//! Damped-Newton continuation solver for the Dirichlet problem of the
//! graph equation div(Du/W) = 2 lambda + 1/W.
//!
//! Every solve walks lambda from -1/2, where constant boundary data has the
//! exact constant solution, to the requested value, warm-starting Newton at
//! each step and halving the step when Newton fails. Losing solvability as
//! |lambda + 1/2| grows is an expected outcome: the solver then reports a
//! non-converged result carrying the furthest solution it reached.

use nalgebra::Vector3;
use thiserror::Error;

use crate::domain::DomainMesh;
use crate::fem::FemSystem;
use crate::frame::DensityFrame;
use crate::linsolve::BandedLu;
use crate::mesh::TriMesh;

#[derive(Debug, Error, PartialEq)]
pub enum GraphSolveError {
    #[error("the graph formulation needs the density vector e3, got {0:?}")]
    FrameNotVertical(Vector3<f64>),
    #[error("solver configuration out of range: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Convergence threshold on the 2-norm of the weak residual.
    pub newton_tolerance: f64,
    pub max_newton_iters: usize,
    /// Backtracking factor for the damped line search.
    pub damping_factor: f64,
    /// Smallest accepted line-search step before Newton gives up.
    pub min_damping: f64,
    /// Initial continuation step in lambda.
    pub continuation_step: f64,
    /// Continuation gives up when adaptive halving pushes the step below
    /// this.
    pub min_continuation_step: f64,
    /// Target edge length for domain meshes built by callers.
    pub mesh_size: f64,
    /// Sanity ceiling on |u|: past the solvability fold the discrete system
    /// keeps spurious solutions with huge gradients that satisfy the
    /// residual gate but approximate no actual surface. A Newton outcome
    /// exceeding the cap counts as failed.
    pub solution_height_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tolerance: 1e-10,
            max_newton_iters: 50,
            damping_factor: 0.5,
            min_damping: 1e-6,
            continuation_step: 0.1,
            min_continuation_step: 1e-4,
            mesh_size: 0.05,
            solution_height_cap: 100.0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), GraphSolveError> {
        let bad = |m: &str| Err(GraphSolveError::BadConfig(m.into()));
        if !(self.newton_tolerance > 0.0) {
            return bad("newton_tolerance must be positive");
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be positive");
        }
        if !(self.damping_factor > 0.0 && self.damping_factor < 1.0) {
            return bad("damping_factor must be in (0,1)");
        }
        if !(self.min_damping > 0.0 && self.continuation_step > 0.0) {
            return bad("damping and continuation steps must be positive");
        }
        if !(self.min_continuation_step > 0.0 && self.mesh_size > 0.0) {
            return bad("min_continuation_step and mesh_size must be positive");
        }
        if !(self.solution_height_cap > 0.0) {
            return bad("solution_height_cap must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStats {
    /// Newton iterations summed over all continuation stages.
    pub iterations: usize,
    /// Number of Newton stages attempted (continuation steps incl. retries).
    pub stages: usize,
    pub final_residual: f64,
    /// Furthest lambda with a converged solution along the walk.
    pub achieved_lambda: f64,
}

/// A solve outcome: the solution when `converged`, otherwise the furthest
/// converged iterate along the continuation path (at `achieved_lambda`).
#[derive(Debug, Clone)]
pub struct GraphSolution {
    domain: DomainMesh,
    u: Vec<f64>,
    lambda: f64,
    stats: NewtonStats,
    converged: bool,
}

impl GraphSolution {
    pub fn domain(&self) -> &DomainMesh {
        &self.domain
    }

    pub fn heights(&self) -> &[f64] {
        &self.u
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn stats(&self) -> &NewtonStats {
        &self.stats
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Lifted surface, oriented upward.
    pub fn to_mesh(&self) -> TriMesh {
        self.domain.lift(&self.u)
    }

    /// Extremes of u over interior vertices; None when the mesh has no
    /// interior vertex.
    pub fn interior_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for v in 0..self.domain.n_vertices() {
            if self.domain.is_boundary_vertex(v) {
                continue;
            }
            let value = self.u[v];
            range = Some(match range {
                None => (value, value),
                Some((lo, hi)) => (lo.min(value), hi.max(value)),
            });
        }
        range
    }

    /// Interpolated height at a planar point.
    pub fn value_at(&self, x: f64, y: f64) -> Option<f64> {
        self.domain.locator().interpolate(&nalgebra::Point2::new(x, y), &self.u)
    }
}

struct NewtonOutcome {
    u: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Damped Newton from a full-height starting iterate at fixed lambda.
fn newton_stage(
    fem: &FemSystem,
    u_start: &[f64],
    lambda: f64,
    config: &SolverConfig,
) -> NewtonOutcome {
    let mut x = fem.interior_part(u_start);
    let mut u = fem.full_heights(&x);
    let mut norm = fem.residual_norm(&u, lambda);
    let mut iterations = 0;
    while norm > config.newton_tolerance && norm.is_finite() {
        if iterations >= config.max_newton_iters {
            break;
        }
        iterations += 1;
        let jac = fem.jacobian(&u, lambda);
        let residual = fem.residual(&u, lambda);
        let neg: Vec<f64> = residual.iter().map(|r| -r).collect();
        let delta = match BandedLu::factor(&jac).and_then(|lu| lu.solve(&neg)) {
            Ok(d) => d,
            Err(_) => break,
        };
        let mut step = 1.0;
        let mut accepted = false;
        while step >= config.min_damping {
            let x_try: Vec<f64> =
                x.iter().zip(&delta).map(|(xi, di)| xi + step * di).collect();
            let u_try = fem.full_heights(&x_try);
            let norm_try = fem.residual_norm(&u_try, lambda);
            if norm_try.is_finite() && norm_try < (1.0 - 1e-4 * step) * norm {
                x = x_try;
                u = u_try;
                norm = norm_try;
                accepted = true;
                break;
            }
            step *= config.damping_factor;
        }
        if !accepted {
            break;
        }
    }
    let sane = u.iter().all(|&v| v.abs() <= config.solution_height_cap);
    let converged = norm.is_finite() && norm <= config.newton_tolerance && sane;
    NewtonOutcome { u, iterations, residual: norm, converged }
}

/// Walks lambda from `state.lambda` toward `target`, updating `state` to
/// the furthest converged point. Returns true when the target is reached.
struct WalkState {
    u: Vec<f64>,
    lambda: f64,
    iterations: usize,
    stages: usize,
    residual: f64,
}

fn walk_to(fem: &FemSystem, state: &mut WalkState, target: f64, config: &SolverConfig) -> bool {
    while state.lambda != target {
        let direction = (target - state.lambda).signum();
        let mut step = config.continuation_step.min((target - state.lambda).abs());
        loop {
            let next = if (target - state.lambda).abs() <= step {
                target
            } else {
                state.lambda + direction * step
            };
            let outcome = newton_stage(fem, &state.u, next, config);
            state.stages += 1;
            state.iterations += outcome.iterations;
            if outcome.converged {
                state.u = outcome.u;
                state.lambda = next;
                state.residual = outcome.residual;
                break;
            }
            step *= 0.5;
            if step < config.min_continuation_step {
                return false;
            }
        }
    }
    true
}

/// Solves the Dirichlet problem at `frame.lambda` by continuation from
/// lambda = -1/2. Non-convergence is a result, not an error.
pub fn solve_graph(
    domain: &DomainMesh,
    frame: &DensityFrame,
    config: &SolverConfig,
) -> Result<GraphSolution, GraphSolveError> {
    config.validate()?;
    check_vertical(frame)?;
    let fem = FemSystem::new(domain);
    let mut solutions = run_targets(domain, &fem, &[frame.lambda()], config);
    Ok(solutions.remove(0))
}

/// Solves a sorted list of lambda targets, walking outward from -1/2 and
/// warm-starting each stage; after the walk first fails in a direction, the
/// remaining targets in that direction are reported non-converged from the
/// furthest reached state.
pub fn continuation_sweep(
    domain: &DomainMesh,
    frame_v: &DensityFrame,
    targets: &[f64],
    config: &SolverConfig,
) -> Result<Vec<GraphSolution>, GraphSolveError> {
    config.validate()?;
    check_vertical(frame_v)?;
    let fem = FemSystem::new(domain);
    Ok(run_targets(domain, &fem, targets, config))
}

fn check_vertical(frame: &DensityFrame) -> Result<(), GraphSolveError> {
    let v = frame.v();
    if (v - Vector3::z()).norm() > 1e-9 {
        return Err(GraphSolveError::FrameNotVertical(v));
    }
    Ok(())
}

fn run_targets(
    domain: &DomainMesh,
    fem: &FemSystem,
    targets: &[f64],
    config: &SolverConfig,
) -> Vec<GraphSolution> {
    let base = 0.5;
    let seed_state = || -> WalkState {
        let u0 = fem
            .initial_guess()
            .unwrap_or_else(|_| fem.full_heights(&vec![0.0; fem.n_unknowns()]));
        WalkState { u: u0, lambda: -base, iterations: 0, stages: 0, residual: f64::NAN }
    };

    // Anchor at lambda = -1/2 once; both directions start from it.
    let mut anchor = seed_state();
    let anchor_outcome = newton_stage(fem, &anchor.u, -base, config);
    anchor.stages += 1;
    anchor.iterations += anchor_outcome.iterations;
    anchor.residual = anchor_outcome.residual;
    let anchor_ok = anchor_outcome.converged;
    anchor.u = anchor_outcome.u;

    let mut below: Vec<(usize, f64)> = Vec::new();
    let mut above: Vec<(usize, f64)> = Vec::new();
    for (k, &t) in targets.iter().enumerate() {
        if t < -base {
            below.push((k, t));
        } else {
            above.push((k, t));
        }
    }
    // Walk away from the anchor in each direction.
    below.sort_by(|a, b| b.1.total_cmp(&a.1));
    above.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut results: Vec<Option<GraphSolution>> = vec![None; targets.len()];
    for group in [above, below] {
        let mut state = WalkState {
            u: anchor.u.clone(),
            lambda: -base,
            iterations: anchor.iterations,
            stages: anchor.stages,
            residual: anchor.residual,
        };
        let mut dead = !anchor_ok;
        for (k, t) in group {
            let reached = if dead { false } else { walk_to(fem, &mut state, t, config) };
            if !reached {
                dead = true;
            }
            results[k] = Some(GraphSolution {
                domain: domain.clone(),
                u: state.u.clone(),
                lambda: t,
                stats: NewtonStats {
                    iterations: state.iterations,
                    stages: state.stages,
                    final_residual: state.residual,
                    achieved_lambda: state.lambda,
                },
                converged: reached && state.lambda == t,
            });
        }
    }
    results.into_iter().map(|s| s.expect("every target filled")).collect()
}
