//! Numerical laboratory for soliton surfaces of the vertical-density
//! functional: surfaces whose mean curvature satisfies
//! `H = lambda + <N, v>/2` for a fixed direction `v`.
//!
//! The crate solves the nonparametric (graph) Dirichlet problem by damped
//! Newton continuation, integrates the rotationally symmetric profile ODE,
//! and verifies the geometric identities and inequalities the family
//! satisfies (flux balance, solvability bounds, one-sidedness, symmetry
//! inheritance, area-height estimates) on the computed discrete surfaces.

mod boundary;
mod curvature;
mod domain;
mod fem;
mod frame;
mod graph;
mod integrals;
mod linsolve;
mod mesh;
mod obj;
mod rotational;
pub mod shapes;
mod slices;
mod verify;

pub use boundary::{BoundaryCurve, BoundaryError, PlanarBoundary};
pub use curvature::{
    mean_curvature, mean_curvature_cotan, mean_curvature_mls, mean_curvature_quadric,
    mixed_voronoi_areas, soliton_residual, soliton_residual_smoothed, VertexField,
};
pub use domain::{reflect, DomainError, DomainMesh, DomainShape, PointLocator};
pub use fem::FemSystem;
pub use frame::{DensityFrame, FrameError};
pub use graph::{
    continuation_sweep, solve_graph, GraphSolution, GraphSolveError, NewtonStats, SolverConfig,
};
pub use integrals::{
    conormal_height_integral, first_variation_check, flux, squared_normal_flux, weighted_area,
};
pub use linsolve::{rcm_order, BandedLu, CsrMatrix, LinSolveError};
pub use mesh::{MeshError, TriMesh, DEGENERATE_AREA_FACTOR};
pub use obj::{load_obj, read_obj, save_obj, write_obj, ObjError};
pub use rotational::{rotational_to_mesh, solve_rotational, RadialProfile, SLOPE_BLOWUP};
pub use slices::{coarea_slices, SliceData};
pub use verify::{
    check_area_estimate, check_closed_infeasibility, check_flux_balance, check_graph_property,
    check_lambda_bound, check_multi_boundary, check_one_sided, check_reflection_symmetry,
    measure_contact_angle, planar_cap_for, CheckEntry, MultiBoundaryComponent, MultiBoundarySpec,
    VerificationReport, VerifyError, AREA_GLOBAL_SLACK, AREA_SLICE_FRACTION, AREA_SLICE_LEVELS,
    AREA_SLICE_SLACK, CONTACT_ANGLE_FACTOR, FLUX_INTEGRATED_FACTOR, SYMMETRY_FACTOR,
};

