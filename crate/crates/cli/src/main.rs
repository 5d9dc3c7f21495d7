//! Batch driver for the soliton surface laboratory.
//!
//! Runs are described by a JSON config with a flat key space and executed
//! by one of four subcommands: `solve-graph`, `solve-rotational`, `verify`,
//! and `sweep`. Every run writes its artifacts (solution OBJ, profile CSV,
//! verification JSON, summary CSV) into a run directory; re-running the
//! same config overwrites them with identical bytes.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use nalgebra::{Point2, Point3, Vector2, Vector3};
use serde::Deserialize;
use soliton_lab::{
    check_area_estimate, check_closed_infeasibility, check_flux_balance, check_graph_property,
    check_lambda_bound, check_multi_boundary, check_one_sided, check_reflection_symmetry,
    load_obj, measure_contact_angle, planar_cap_for, rotational_to_mesh, solve_graph,
    solve_rotational, write_obj, BoundaryCurve, DensityFrame, DomainMesh, DomainShape,
    GraphSolution, MultiBoundarySpec, PlanarBoundary, RadialProfile, SolverConfig, TriMesh,
    VerificationReport, VerifyError,
};

#[derive(Parser)]
#[command(
    name = "soliton-lab",
    version,
    about = "Numerical laboratory for soliton surfaces: solves, sweeps, verification runs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the Dirichlet graph problem at one lambda
    SolveGraph(RunArgs),
    /// Integrate the rotational profile equation at one lambda
    SolveRotational(RunArgs),
    /// Run verification checks on a mesh file
    Verify(RunArgs),
    /// Solve a list of lambda targets over one domain
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh seed, overriding the config's `seed`
    #[arg(long)]
    seed: Option<u64>,
}

/// Flat-key run configuration. Unknown fields are rejected, and each mode
/// additionally rejects fields it does not consume, so configs fail closed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    mode: String,
    #[serde(default)]
    domain: Option<DomainSpec>,
    /// Target mesh edge length for generated domains.
    #[serde(default)]
    h: Option<f64>,
    #[serde(default)]
    boundary_height: Option<HeightSpec>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    lambdas: Option<Vec<f64>>,
    #[serde(default)]
    r_max: Option<f64>,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    n_angular: Option<usize>,
    /// Mesh file to verify (OBJ), for mode "verify".
    #[serde(default)]
    mesh: Option<String>,
    /// Density direction, for mode "verify" only; the graph solver is
    /// formulated for the vertical direction.
    #[serde(default)]
    v: Option<[f64; 3]>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out: Option<String>,
    #[serde(default)]
    newton_tolerance: Option<f64>,
    #[serde(default)]
    max_newton_iters: Option<usize>,
    #[serde(default)]
    damping_factor: Option<f64>,
    #[serde(default)]
    min_damping: Option<f64>,
    #[serde(default)]
    continuation_step: Option<f64>,
    #[serde(default)]
    min_continuation_step: Option<f64>,
    #[serde(default)]
    solution_height_cap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "shape", rename_all = "kebab-case")]
enum DomainSpec {
    Disk { radius: f64 },
    Ellipse { rx: f64, ry: f64 },
    Annulus { inner: f64, outer: f64 },
    Polygon { points: Vec<[f64; 2]> },
}

/// Boundary height data: a single constant, or one value per boundary
/// vertex in concatenated loop order.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum HeightSpec {
    Constant(f64),
    PerVertex(Vec<f64>),
}

/// A machine-readable failure: printed as one JSON object on stderr.
#[derive(Debug)]
struct Diag {
    kind: &'static str,
    detail: String,
}

impl Diag {
    fn config(detail: impl Into<String>) -> Self {
        Diag { kind: "config", detail: detail.into() }
    }

    fn io(detail: impl Into<String>) -> Self {
        Diag { kind: "io", detail: detail.into() }
    }

    fn mesh(detail: impl Into<String>) -> Self {
        Diag { kind: "mesh", detail: detail.into() }
    }

    fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "detail": self.detail } }).to_string()
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(d) => {
            eprintln!("{}", d.to_json());
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32, Diag> {
    let (mode, args) = match &cli.cmd {
        Cmd::SolveGraph(a) => ("solve-graph", a),
        Cmd::SolveRotational(a) => ("solve-rotational", a),
        Cmd::Verify(a) => ("verify", a),
        Cmd::Sweep(a) => ("sweep", a),
    };
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Diag::io(format!("cannot read config {}: {e}", args.config.display())))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| Diag::config(format!("invalid config: {e}")))?;
    if config.mode != mode {
        return Err(Diag::config(format!(
            "config mode \"{}\" does not match subcommand \"{mode}\"",
            config.mode
        )));
    }
    check_mode_fields(mode, &config)?;

    let seed = args.seed.or(config.seed).unwrap_or(42);
    let out = args
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(mode));
    std::fs::create_dir_all(&out)
        .map_err(|e| Diag::io(format!("cannot create {}: {e}", out.display())))?;

    match mode {
        "solve-graph" => run_solve_graph(&config, seed, &out),
        "solve-rotational" => run_solve_rotational(&config, &out),
        "verify" => run_verify(&config, &out),
        "sweep" => run_sweep(&config, seed, &out),
        _ => unreachable!(),
    }
}

/// Rejects config fields the mode does not consume, so a config cannot
/// silently carry settings that change nothing.
fn check_mode_fields(mode: &str, c: &RunConfig) -> Result<(), Diag> {
    let solver_set = c.newton_tolerance.is_some()
        || c.max_newton_iters.is_some()
        || c.damping_factor.is_some()
        || c.min_damping.is_some()
        || c.continuation_step.is_some()
        || c.min_continuation_step.is_some()
        || c.solution_height_cap.is_some();
    let fields = [
        ("domain", c.domain.is_some()),
        ("h", c.h.is_some()),
        ("boundary_height", c.boundary_height.is_some()),
        ("lambda", c.lambda.is_some()),
        ("lambdas", c.lambdas.is_some()),
        ("r_max", c.r_max.is_some()),
        ("step", c.step.is_some()),
        ("n_angular", c.n_angular.is_some()),
        ("mesh", c.mesh.is_some()),
        ("v", c.v.is_some()),
        ("solver settings", solver_set),
    ];
    let (required, allowed): (&[&str], &[&str]) = match mode {
        "solve-graph" => (
            &["domain", "lambda"],
            &["domain", "lambda", "h", "boundary_height", "solver settings"],
        ),
        "solve-rotational" => (&["lambda", "r_max"], &["lambda", "r_max", "step", "n_angular"]),
        "verify" => (&["mesh"], &["mesh", "lambda", "v"]),
        "sweep" => (
            &["domain", "lambdas"],
            &["domain", "lambdas", "h", "boundary_height", "solver settings"],
        ),
        _ => unreachable!(),
    };
    for name in required {
        let set = fields.iter().find(|(n, _)| n == name).map(|(_, s)| *s).unwrap_or(false);
        if !set {
            return Err(Diag::config(format!("mode \"{mode}\" requires field \"{name}\"")));
        }
    }
    for (name, set) in fields {
        if set && !allowed.contains(&name) {
            return Err(Diag::config(format!("mode \"{mode}\" does not use field \"{name}\"")));
        }
    }
    Ok(())
}

fn solver_config(c: &RunConfig) -> Result<SolverConfig, Diag> {
    let mut cfg = SolverConfig::default();
    if let Some(x) = c.newton_tolerance {
        cfg.newton_tolerance = x;
    }
    if let Some(x) = c.max_newton_iters {
        cfg.max_newton_iters = x;
    }
    if let Some(x) = c.damping_factor {
        cfg.damping_factor = x;
    }
    if let Some(x) = c.min_damping {
        cfg.min_damping = x;
    }
    if let Some(x) = c.continuation_step {
        cfg.continuation_step = x;
    }
    if let Some(x) = c.min_continuation_step {
        cfg.min_continuation_step = x;
    }
    if let Some(x) = c.solution_height_cap {
        cfg.solution_height_cap = x;
    }
    if let Some(h) = c.h {
        if !(h.is_finite() && h > 0.0) {
            return Err(Diag::config("h must be a positive number".to_string()));
        }
        cfg.mesh_size = h;
    }
    Ok(cfg)
}

fn build_domain(c: &RunConfig, seed: u64, mesh_size: f64) -> Result<DomainMesh, Diag> {
    let shape = match c.domain.clone().expect("checked by mode validation") {
        DomainSpec::Disk { radius } => DomainShape::Disk { radius },
        DomainSpec::Ellipse { rx, ry } => DomainShape::Ellipse { rx, ry },
        DomainSpec::Annulus { inner, outer } => DomainShape::Annulus { inner, outer },
        DomainSpec::Polygon { points } => DomainShape::Polygon {
            points: points.iter().map(|p| Point2::new(p[0], p[1])).collect(),
        },
    };
    let dom = DomainMesh::generate(shape, mesh_size, seed)
        .map_err(|e| Diag::config(format!("domain: {e}")))?;
    match &c.boundary_height {
        None => Ok(dom.with_constant_boundary_height(0.0)),
        Some(HeightSpec::Constant(v)) => {
            if !v.is_finite() {
                return Err(Diag::config("boundary_height must be finite".to_string()));
            }
            Ok(dom.with_constant_boundary_height(*v))
        }
        Some(HeightSpec::PerVertex(vals)) => dom
            .with_boundary_heights(vals)
            .map_err(|e| Diag::config(format!("boundary_height: {e}"))),
    }
}

fn require_finite(name: &str, x: f64) -> Result<f64, Diag> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Diag::config(format!("{name} must be finite")))
    }
}

// ---------------------------------------------------------------------------
// Artifact writers. Every writer assembles the full byte buffer first and
// writes it in one call, so reruns replace files atomically enough for the
// byte-identical guarantee to be observable.

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Diag> {
    std::fs::write(path, bytes)
        .map_err(|e| Diag::io(format!("cannot write {}: {e}", path.display())))
}

fn write_mesh_obj(path: &Path, mesh: &TriMesh) -> Result<(), Diag> {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).map_err(|e| Diag::io(format!("obj encode: {e}")))?;
    write_file(path, &buf)
}

fn write_report(path: &Path, report: &VerificationReport) -> Result<(), Diag> {
    let mut text = report.to_json();
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_profile_csv(path: &Path, profile: &RadialProfile) -> Result<(), Diag> {
    let mut text = String::from("r,u,p\n");
    for (r, u, p) in profile.samples() {
        text.push_str(&format!("{r},{u},{p}\n"));
    }
    write_file(path, text.as_bytes())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "na".to_string())
}

fn fmt_flag(f: Option<bool>) -> &'static str {
    match f {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "na",
    }
}

/// Joint pass flag over all applicable entries of one check: `None` when
/// the report has no applicable entry of that name.
fn flag_for(report: &VerificationReport, check: &str) -> Option<bool> {
    let mut joint = None;
    for e in report.entries.iter().filter(|e| e.check == check && e.applicable) {
        joint = Some(joint.unwrap_or(true) && e.pass);
    }
    joint
}

// ---------------------------------------------------------------------------
// Graph solves (single and sweep member).

const GRAPH_SUMMARY_HEADER: &str = "lambda,mesh_h,converged,height,area,four_pi_height,\
weighted_area,lambda_bound,pass_lambda_bound,pass_multi_boundary,pass_area_global,\
pass_area_slices,pass_one_sided,pass_symmetry,pass_contact_angle,pass_graph_property,\
pass_flux_cycle,pass_flux_integrated\n";

struct GraphRow {
    lambda: f64,
    mesh_h: f64,
    converged: bool,
    height: Option<f64>,
    area: Option<f64>,
    bound: Option<f64>,
    flags: [Option<bool>; 10],
}

impl GraphRow {
    fn csv_line(&self) -> String {
        let four_pi_h = self.height.map(|h| 4.0 * std::f64::consts::PI * h);
        let weighted =
            self.area.map(|a| (1.0 + 2.0 * self.lambda).abs() * a);
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            self.lambda,
            self.mesh_h,
            self.converged,
            fmt_opt(self.height),
            fmt_opt(self.area),
            fmt_opt(four_pi_h),
            fmt_opt(weighted),
            fmt_opt(self.bound),
        );
        for f in self.flags {
            line.push(',');
            line.push_str(fmt_flag(f));
        }
        line.push('\n');
        line
    }
}

/// The verification set run on every graph solve. Checks whose
/// preconditions the solve does not meet (multi-loop bound on a single
/// loop, flux on a non-converged state) are simply absent from the report.
fn graph_verification(sol: &GraphSolution) -> VerificationReport {
    let mut report = VerificationReport::new();
    let dom = sol.domain();
    let lambda = sol.lambda();
    let v = Vector3::z();
    let boundary = PlanarBoundary::from_domain(dom);

    match check_lambda_bound(&boundary, lambda, &v) {
        Ok(e) => report.push(e),
        Err(VerifyError::NotSingleLoop(_)) => {
            if let Ok(spec) = MultiBoundarySpec::from_solution(sol) {
                if let Ok(e) = check_multi_boundary(&spec, lambda, &v) {
                    report.push(e);
                }
            }
        }
        Err(_) => {}
    }
    if let Ok(e) = check_one_sided(sol) {
        report.push(e);
    }
    if let Ok(es) = check_area_estimate(sol) {
        report.extend(es);
    }
    for k in 0..8 {
        let theta = k as f64 * std::f64::consts::PI / 8.0;
        report.push(check_reflection_symmetry(sol, &Vector2::new(theta.cos(), theta.sin())));
    }
    let (_angles, contact) = measure_contact_angle(sol);
    report.push(contact);
    if sol.converged() {
        let mesh = sol.to_mesh();
        if let Ok(e) = check_graph_property(&mesh, &boundary) {
            report.push(e);
        }
        if let Ok(cap) = planar_cap_for(&mesh) {
            if let Ok(es) = check_flux_balance(&mesh, &cap, &DensityFrame::vertical(lambda)) {
                report.extend(es);
            }
        }
    }
    report.sort();
    report
}

fn graph_row(sol: &GraphSolution, mesh_h: f64, report: &VerificationReport) -> GraphRow {
    let dom = sol.domain();
    let (height, area) = if sol.converged() {
        let c0 = dom.heights()[dom.boundary_loops()[0][0]];
        let height =
            sol.heights().iter().map(|&u| (u - c0).abs()).fold(0.0f64, f64::max);
        (Some(height), Some(sol.to_mesh().total_area()))
    } else {
        (None, None)
    };
    let bound = report
        .entries
        .iter()
        .find(|e| e.check == "lambda_bound" && e.applicable)
        .map(|e| e.rhs);
    let flags = [
        flag_for(report, "lambda_bound"),
        flag_for(report, "multi_boundary"),
        flag_for(report, "area_estimate"),
        flag_for(report, "area_estimate_slices"),
        flag_for(report, "one_sided"),
        flag_for(report, "reflection_symmetry"),
        flag_for(report, "contact_angle"),
        flag_for(report, "graph_property"),
        flag_for(report, "flux_cycle"),
        flag_for(report, "flux_integrated"),
    ];
    GraphRow { lambda: sol.lambda(), mesh_h, converged: sol.converged(), height, area, bound, flags }
}

/// Solve one lambda over a prebuilt domain and write its artifacts into
/// `dir`. Non-convergence is a recorded result: the OBJ then holds the
/// furthest converged continuation iterate.
fn run_graph_case(
    dom: &DomainMesh,
    lambda: f64,
    cfg: &SolverConfig,
    dir: &Path,
) -> Result<GraphRow, Diag> {
    let frame = DensityFrame::vertical(lambda);
    let sol = solve_graph(dom, &frame, cfg).map_err(|e| Diag::config(e.to_string()))?;
    let report = graph_verification(&sol);
    std::fs::create_dir_all(dir)
        .map_err(|e| Diag::io(format!("cannot create {}: {e}", dir.display())))?;
    write_mesh_obj(&dir.join("solution.obj"), &sol.to_mesh())?;
    write_report(&dir.join("verification.json"), &report)?;
    Ok(graph_row(&sol, dom.target_edge_length(), &report))
}

fn run_solve_graph(c: &RunConfig, seed: u64, out: &Path) -> Result<i32, Diag> {
    let lambda = require_finite("lambda", c.lambda.expect("checked"))?;
    let cfg = solver_config(c)?;
    let dom = build_domain(c, seed, cfg.mesh_size)?;
    let row = run_graph_case(&dom, lambda, &cfg, out)?;
    let mut csv = String::from(GRAPH_SUMMARY_HEADER);
    csv.push_str(&row.csv_line());
    write_file(&out.join("summary.csv"), csv.as_bytes())?;
    Ok(0)
}

fn run_sweep(c: &RunConfig, seed: u64, out: &Path) -> Result<i32, Diag> {
    let lambdas = c.lambdas.clone().expect("checked");
    if lambdas.is_empty() {
        return Err(Diag::config("lambdas must not be empty".to_string()));
    }
    for &l in &lambdas {
        require_finite("lambdas entry", l)?;
    }
    let cfg = solver_config(c)?;
    let dom = build_domain(c, seed, cfg.mesh_size)?;
    let threads = sweep_threads(lambdas.len())?;

    // Each member solves independently (anchored continuation), so the
    // artifacts are identical for any thread count; rows merge by index.
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<GraphRow>>> =
        lambdas.iter().map(|_| Mutex::new(None)).collect();
    let failures: Mutex<Vec<Diag>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= lambdas.len() {
                    break;
                }
                let dir = out.join(member_dir_name(i, lambdas[i]));
                match run_graph_case(&dom, lambdas[i], &cfg, &dir) {
                    Ok(row) => *results[i].lock().unwrap() = Some(row),
                    Err(d) => failures.lock().unwrap().push(d),
                }
            });
        }
    });
    if let Some(d) = failures.into_inner().unwrap().into_iter().next() {
        return Err(d);
    }
    let mut csv = String::from(GRAPH_SUMMARY_HEADER);
    for slot in &results {
        let row = slot.lock().unwrap().take().expect("all members completed");
        csv.push_str(&row.csv_line());
    }
    write_file(&out.join("summary.csv"), csv.as_bytes())?;
    Ok(0)
}

fn member_dir_name(index: usize, lambda: f64) -> String {
    format!("{index:03}_lambda_{lambda:+.4}")
}

fn sweep_threads(n_members: usize) -> Result<usize, Diag> {
    let cap = match std::env::var("SOLITON_LAB_THREADS") {
        Ok(s) => match s.parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                return Err(Diag::config(
                    "SOLITON_LAB_THREADS must be a positive integer".to_string(),
                ))
            }
        },
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    Ok(cap.min(n_members.max(1)))
}

// ---------------------------------------------------------------------------
// Rotational solves.

const ROTATIONAL_SUMMARY_HEADER: &str = "lambda,step,r_max,complete,n_samples,height,area,\
four_pi_height,weighted_area,pass_lambda_bound,pass_graph_property,pass_flux_cycle,\
pass_flux_integrated\n";

fn run_solve_rotational(c: &RunConfig, out: &Path) -> Result<i32, Diag> {
    let lambda = require_finite("lambda", c.lambda.expect("checked"))?;
    let r_max = require_finite("r_max", c.r_max.expect("checked"))?;
    if r_max <= 0.0 {
        return Err(Diag::config("r_max must be positive".to_string()));
    }
    let step = c.step.unwrap_or(1e-3);
    if !(step.is_finite() && step > 0.0 && step <= r_max) {
        return Err(Diag::config("step must be positive and at most r_max".to_string()));
    }
    let n_angular = c.n_angular.unwrap_or(96);
    if n_angular < 8 {
        return Err(Diag::config("n_angular must be at least 8".to_string()));
    }

    let profile = solve_rotational(lambda, r_max, step);
    write_profile_csv(&out.join("profile.csv"), &profile)?;

    let mesh = rotational_to_mesh(&profile, n_angular);
    write_mesh_obj(&out.join("solution.obj"), &mesh)?;

    let r_end = profile.max_r();
    let z_end = profile.height_at(r_end).expect("profile covers its own range");
    let mut report = VerificationReport::new();
    if let Ok(cap) = planar_cap_for(&mesh) {
        if let Ok(es) = check_flux_balance(&mesh, &cap, &DensityFrame::vertical(lambda)) {
            report.extend(es);
        }
    }
    if let Ok(boundary) = PlanarBoundary::horizontal(
        z_end,
        vec![BoundaryCurve::Circle { center: Point3::new(0.0, 0.0, z_end), radius: r_end }],
    ) {
        if let Ok(e) = check_graph_property(&mesh, &boundary) {
            report.push(e);
        }
        if let Ok(e) = check_lambda_bound(&boundary, lambda, &Vector3::z()) {
            report.push(e);
        }
    }
    report.sort();
    write_report(&out.join("verification.json"), &report)?;

    let height = z_end.abs();
    let area = mesh.total_area();
    let mut csv = String::from(ROTATIONAL_SUMMARY_HEADER);
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        lambda,
        step,
        r_max,
        profile.complete(),
        profile.n_samples(),
        height,
        area,
        4.0 * std::f64::consts::PI * height,
        (1.0 + 2.0 * lambda).abs() * area,
        fmt_flag(flag_for(&report, "lambda_bound")),
        fmt_flag(flag_for(&report, "graph_property")),
        fmt_flag(flag_for(&report, "flux_cycle")),
        fmt_flag(flag_for(&report, "flux_integrated")),
    ));
    write_file(&out.join("summary.csv"), csv.as_bytes())?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Verification runs on mesh files.

fn run_verify(c: &RunConfig, out: &Path) -> Result<i32, Diag> {
    let path = c.mesh.clone().expect("checked");
    let mesh = load_obj(&path).map_err(|e| Diag::mesh(format!("{path}: {e}")))?;
    let lambda = match c.lambda {
        Some(l) => require_finite("lambda", l)?,
        None => 0.0,
    };
    let v = match c.v {
        Some([x, y, z]) => Vector3::new(x, y, z),
        None => Vector3::z(),
    };
    let frame =
        DensityFrame::new(v, lambda).map_err(|e| Diag::config(format!("v: {e}")))?;

    let mut report = VerificationReport::new();
    if mesh.is_closed() {
        let e = check_closed_infeasibility(&mesh, &frame.v())
            .map_err(|e| Diag::mesh(e.to_string()))?;
        report.push(e);
    } else {
        if let Ok(cap) = planar_cap_for(&mesh) {
            if let Ok(es) = check_flux_balance(&mesh, &cap, &frame) {
                report.extend(es);
            }
        }
        // A single horizontal boundary loop supports the graph and length
        // bound checks against its own polygon.
        if mesh.boundary_loops().len() == 1 {
            let lp = &mesh.boundary_loops()[0];
            let z0 = mesh.vertices()[lp[0]].z;
            let tol = 1e-9 * (1.0 + mesh.bbox_diagonal());
            if lp.iter().all(|&b| (mesh.vertices()[b].z - z0).abs() <= tol) {
                let points: Vec<Point3<f64>> = lp
                    .iter()
                    .map(|&b| {
                        let p = mesh.vertices()[b];
                        Point3::new(p.x, p.y, z0)
                    })
                    .collect();
                if let Ok(boundary) =
                    PlanarBoundary::horizontal(z0, vec![BoundaryCurve::Polyline { points }])
                {
                    if let Ok(e) = check_graph_property(&mesh, &boundary) {
                        report.push(e);
                    }
                    if let Ok(e) = check_lambda_bound(&boundary, lambda, &frame.v()) {
                        report.push(e);
                    }
                }
            }
        }
    }
    report.sort();
    write_report(&out.join("verification.json"), &report)?;
    Ok(if report.all_pass() { 0 } else { 1 })
}
