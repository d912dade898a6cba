//! Runs a [`CaseSpec`] to its end time and collects diagnostics.

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::boundary::{BoundaryError, BoundaryPlan};
use crate::case::{CaseError, CaseSpec, InterfaceDefinition};
use crate::diagnostics::{
    extract_isolines_2d, linf_error, locate_interface_1d, locate_level_1d, sample_diagonal,
    DiagnosticsError, InterfaceLocation, InterfaceTrace, IsolineSet,
};
use crate::lattice::{make_lattice, Grid};
use crate::output;
use crate::schemes::{liquid_fraction_from_enthalpy, phi_delta, Method, SchemeError, SolverState};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("no interface found at t = {time}")]
    NoInterface { time: f64 },
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 2 invalid case, 3 solver non-convergence,
    /// 4 diagnostic failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Case(_) | RunError::Boundary(_) => 2,
            RunError::Scheme(SchemeError::NewtonFailed { .. })
            | RunError::Scheme(SchemeError::InnerLoopNotConverged { .. }) => 3,
            RunError::Scheme(_) => 2,
            RunError::Diagnostics(_) | RunError::NoInterface { .. } => 4,
            RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NewtonSummary {
    pub total_iterations: u64,
    /// Mean iterations per node and step.
    pub mean_iterations: f64,
    /// Largest iteration count of any node solve.
    pub max_iterations: u32,
    pub bisections: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InnerSummary {
    pub mean_iterations: f64,
    pub max_iterations: u32,
}

/// Temperature along a line at one time: `x` for 1D cases, diagonal
/// arclength for 2D cases.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub coordinate: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub spec: CaseSpec,
    pub method: Method,
    pub grid: Grid,
    pub dt: f64,
    pub tau: f64,
    pub t_start: f64,
    pub t_final: f64,
    pub steps: u64,
    /// Time spent stepping and sampling, excluding output files.
    pub wall_seconds: f64,
    pub newton: NewtonSummary,
    pub inner: InnerSummary,
    /// Largest per-node residual of the implicit regularized equation.
    pub max_residual: f64,
    /// Largest `|theta - theta_wall|` over Dirichlet nodes and steps.
    pub max_dirichlet_deviation: f64,
    /// Largest temperature jump across Neumann-on-q pairs over steps.
    pub max_neumann_deviation: f64,
    pub enthalpy_start: f64,
    pub enthalpy_end: f64,
    pub theta: Vec<f64>,
    pub trace: Option<InterfaceTrace>,
    pub profiles: Vec<Snapshot>,
    pub isolines: Option<IsolineSet>,
    /// Final max-norm error against the exact solution (1D exact cases).
    pub linf_error: Option<f64>,
    pub warnings: Vec<String>,
    pub written: Vec<PathBuf>,
}

/// Liquid fraction of the current state as the scheme defines it.
pub fn liquid_fraction(state: &SolverState) -> Vec<f64> {
    let cfg = state.config;
    match cfg.method {
        Method::Eebm => state
            .enthalpy
            .as_ref()
            .expect("enthalpy cache present")
            .iter()
            .map(|&h| liquid_fraction_from_enthalpy(h, cfg.ste))
            .collect(),
        Method::Ilfbm => state.ell.clone().expect("liquid fraction present"),
        Method::Irebm => state
            .theta
            .iter()
            .map(|&t| phi_delta(t, cfg.delta))
            .collect(),
    }
}

fn locate(state: &SolverState, def: InterfaceDefinition) -> InterfaceLocation {
    let dx = state.grid().dx;
    match def {
        InterfaceDefinition::ZeroCrossing => locate_interface_1d(&state.theta, dx),
        InterfaceDefinition::LiquidFraction => locate_level_1d(&liquid_fraction(state), dx, 0.5),
    }
}

/// Builds the initial state and boundary plan of a case.
pub fn prepare(spec: &CaseSpec) -> Result<(SolverState, BoundaryPlan), RunError> {
    spec.validate()?;
    let lattice = make_lattice(spec.case.lattice);
    let grid = spec.grid();
    let plan = BoundaryPlan::new(&spec.boundary_spec()?, &lattice, &grid)?;
    let mut theta = spec.initial_theta()?;
    for (node, value) in plan.dirichlet_nodes() {
        theta[node] = value;
    }
    let state = SolverState::new(spec.scheme_config(), lattice, grid, theta)?;
    Ok((state, plan))
}

fn snapshot(state: &SolverState, time: f64) -> Result<Snapshot, DiagnosticsError> {
    let grid = *state.grid();
    if grid.ny == 1 {
        Ok(Snapshot {
            time,
            coordinate: (0..grid.nx).map(|j| j as f64 * grid.dx).collect(),
            theta: state.theta.clone(),
        })
    } else {
        let d = sample_diagonal(&state.theta, &grid)?;
        Ok(Snapshot {
            time,
            coordinate: d.arclength,
            theta: d.theta,
        })
    }
}

/// Runs the case to `t_end`, sampling diagnostics on the way, and writes
/// the requested CSV files when `output.dir` is set.
pub fn run_case(spec: &CaseSpec) -> Result<RunReport, RunError> {
    let (mut state, plan) = prepare(spec)?;
    let grid = *state.grid();
    let method = spec.scheme.method;
    let dt = spec.dt();
    let t_start = spec.t_start();
    let steps = spec.steps();
    let every = spec.sample_every();
    let out = &spec.output;

    let oracle = if spec.case.dimension == 1 && spec.case.theta0 < 0.0 {
        spec.oracle().ok()
    } else {
        None
    };
    let mut trace = if out.trace {
        if oracle.is_none() {
            return Err(CaseError::Field {
                path: "output.trace".into(),
                message: "needs an exact solution (negative theta0)".into(),
            }
            .into());
        }
        Some(InterfaceTrace::new())
    } else {
        None
    };
    let mut profile_steps: Vec<(u64, f64)> = out
        .profile_times
        .iter()
        .map(|&t| (((t - t_start) / dt).round() as u64, t))
        .collect();
    profile_steps.sort_by_key(|p| p.0);

    let mut report = RunReport {
        spec: spec.clone(),
        method,
        grid,
        dt,
        tau: spec.tau(),
        t_start,
        t_final: t_start,
        steps,
        wall_seconds: 0.0,
        newton: NewtonSummary::default(),
        inner: InnerSummary::default(),
        max_residual: 0.0,
        max_dirichlet_deviation: plan.dirichlet_deviation(&state.theta),
        max_neumann_deviation: 0.0,
        enthalpy_start: state.total_enthalpy(),
        enthalpy_end: 0.0,
        theta: Vec::new(),
        trace: None,
        profiles: Vec::new(),
        isolines: None,
        linf_error: None,
        warnings: Vec::new(),
        written: Vec::new(),
    };
    let mut multiple_warned = false;
    let mut profile_cursor = 0;
    let mut take_profiles = |k: u64, state: &SolverState, report: &mut RunReport| {
        while profile_cursor < profile_steps.len() && profile_steps[profile_cursor].0 == k {
            let time = t_start + k as f64 * dt;
            report.profiles.push(snapshot(state, time)?);
            profile_cursor += 1;
        }
        Ok::<(), DiagnosticsError>(())
    };

    let clock = Instant::now();
    take_profiles(0, &state, &mut report)?;
    let mut inner_total = 0u64;
    for k in 1..=steps {
        let stats = state.advance(&plan)?;
        report.newton.total_iterations += stats.newton_iterations;
        report.newton.max_iterations = report
            .newton
            .max_iterations
            .max(stats.newton_max_iterations);
        report.newton.bisections += stats.newton_bisections;
        report.max_residual = report.max_residual.max(stats.max_residual);
        inner_total += stats.inner_iterations as u64;
        report.inner.max_iterations = report.inner.max_iterations.max(stats.inner_iterations);
        report.max_dirichlet_deviation = report
            .max_dirichlet_deviation
            .max(plan.dirichlet_deviation(&state.theta));
        report.max_neumann_deviation = report
            .max_neumann_deviation
            .max(plan.neumann_deviation(&state.theta));

        let time = t_start + k as f64 * dt;
        if let (Some(tr), Some(o)) = (trace.as_mut(), oracle.as_ref()) {
            if k % every == 0 {
                match locate(&state, out.interface) {
                    InterfaceLocation::Found { position, multiple } => {
                        if multiple && !multiple_warned {
                            multiple_warned = true;
                            report
                                .warnings
                                .push(format!("several interface crossings at t = {time}"));
                        }
                        tr.push(time, position, o.interface_position(time))?;
                    }
                    InterfaceLocation::NoInterface => return Err(RunError::NoInterface { time }),
                }
            }
        }
        take_profiles(k, &state, &mut report)?;
    }
    report.wall_seconds = clock.elapsed().as_secs_f64();

    let nodes = grid.len() as f64;
    if steps > 0 {
        report.newton.mean_iterations =
            report.newton.total_iterations as f64 / (steps as f64 * nodes);
        report.inner.mean_iterations = inner_total as f64 / steps as f64;
    }
    report.t_final = t_start + steps as f64 * dt;
    report.enthalpy_end = state.total_enthalpy();
    if let Some(o) = oracle.as_ref() {
        if report.t_final > 0.0 {
            report.linf_error = Some(linf_error(&state.theta, &grid, o, report.t_final)?);
        }
    }
    if !out.isolines.is_empty() {
        report.isolines = Some(extract_isolines_2d(&state.theta, &grid, &out.isolines)?);
    }
    report.trace = trace;
    report.theta = state.theta;

    if let Some(dir) = &out.dir {
        report.written = output::write_report(&report, dir.as_ref())?;
    }
    Ok(report)
}

/// Wall time of a fixed number of steps, without diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub n: usize,
    pub steps: u64,
    pub seconds: f64,
}

impl BenchRow {
    pub fn seconds_per_step(&self) -> f64 {
        self.seconds / self.steps.max(1) as f64
    }
}

/// Times `steps` steps of the case (all steps to `t_end` when `None`).
pub fn bench_case(spec: &CaseSpec, steps: Option<u64>) -> Result<BenchRow, RunError> {
    let (mut state, plan) = prepare(spec)?;
    let steps = steps.unwrap_or_else(|| spec.steps());
    let clock = Instant::now();
    for _ in 0..steps {
        state.advance(&plan)?;
    }
    Ok(BenchRow {
        method: spec.scheme.method,
        n: spec.case.n,
        steps,
        seconds: clock.elapsed().as_secs_f64(),
    })
}
