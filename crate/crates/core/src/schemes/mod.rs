//! Time-stepping kernels for the enthalpy formulation of the Stefan problem.
//!
//! Three BGK schemes share one state layout:
//!
//! * [`Method::Eebm`], explicit enthalpy: the zeroth moment of `f` is the
//!   enthalpy and the temperature is read off the enthalpy plateau map;
//! * [`Method::Ilfbm`], implicit liquid fraction: latent heat enters as a
//!   source, iterated to a fixed point with a streaming pass per iteration;
//! * [`Method::Irebm`], implicit regularized enthalpy: the liquid fraction is
//!   smoothed with `tanh` and the new temperature is found by a local Newton
//!   solve on the post-stream moment, with no extra streaming.
//!
//! In lattice units the diffusivity is `(tau - 1/2) / 3`, hence
//! `tau = 1/2 + 3 dt / dx^2` for unit physical diffusivity.

mod eebm;
mod ilfbm;
mod irebm;
mod newton;
mod transfer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryError, BoundaryPlan};
use crate::lattice::{DistributionField, Grid, Lattice, LatticeError};

pub use eebm::step_eebm;
pub use ilfbm::step_ilfbm;
pub use irebm::step_irebm;
pub use newton::{implicit_residual, newton_update, solve_node, NodeSolve, NodeSolveFailure};
pub use transfer::{
    liquid_fraction_from_enthalpy, phi_delta, phi_delta_prime, phi_delta_with_prime,
    sharp_enthalpy, sharp_liquid_fraction, temperature_from_enthalpy,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "Newton solve failed at node ({x}, {y}) on step {step}: residual {residual:e} after {iterations} iterations"
    )]
    NewtonFailed {
        step: u64,
        x: usize,
        y: usize,
        residual: f64,
        iterations: u32,
    },
    #[error(
        "liquid-fraction inner loop did not converge on step {step}: max change {change:e} after {iterations} iterations"
    )]
    InnerLoopNotConverged {
        step: u64,
        iterations: u32,
        change: f64,
    },
    #[error("initial temperature has {got} values, grid has {expected} nodes")]
    InitialLength { expected: usize, got: usize },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eebm,
    Ilfbm,
    Irebm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Eebm, Method::Ilfbm, Method::Irebm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Eebm => "eebm",
            Method::Ilfbm => "ilfbm",
            Method::Irebm => "irebm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eebm" => Ok(Method::Eebm),
            "ilfbm" => Ok(Method::Ilfbm),
            "irebm" => Ok(Method::Irebm),
            other => Err(format!("unknown method `{other}` (eebm, ilfbm, irebm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub method: Method,
    pub tau: f64,
    pub ste: f64,
    /// Regularization width, used by the implicit regularized scheme only.
    pub delta: f64,
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    pub inner_tol: f64,
    pub inner_max_iter: u32,
}

pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
pub const DEFAULT_NEWTON_MAX_ITER: u32 = 50;
pub const DEFAULT_INNER_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_MAX_ITER: u32 = 100;

impl SchemeConfig {
    pub fn new(method: Method, tau: f64, ste: f64, delta: f64) -> Self {
        Self {
            method,
            tau,
            ste,
            delta,
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: String| Err(SchemeError::InvalidConfig(m));
        if !(self.tau > 0.5 && self.tau.is_finite()) {
            return bad(format!("tau must exceed 1/2, got {}", self.tau));
        }
        if !(self.ste > 0.0 && self.ste.is_finite()) {
            return bad(format!("Ste must be positive, got {}", self.ste));
        }
        if self.method == Method::Irebm && !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter < 1 {
            return bad("Newton tolerance must be positive with at least one iteration".into());
        }
        if !(self.inner_tol > 0.0) || self.inner_max_iter < 1 {
            return bad("inner tolerance must be positive with at least one iteration".into());
        }
        Ok(())
    }
}

/// `tau = 1/2 + 3 dt / dx^2`.
pub fn tau_from_timestep(dt: f64, dx: f64) -> Result<f64, SchemeError> {
    if !(dt > 0.0 && dx > 0.0) {
        return Err(SchemeError::InvalidConfig(format!(
            "time step and spacing must be positive (dt = {dt}, dx = {dx})"
        )));
    }
    Ok(0.5 + 3.0 * dt / (dx * dx))
}

/// `dt = (tau - 1/2) dx^2 / 3`.
pub fn timestep_from_tau(tau: f64, dx: f64) -> Result<f64, SchemeError> {
    if !(tau > 0.5) {
        return Err(SchemeError::InvalidConfig(format!(
            "tau must exceed 1/2, got {tau}"
        )));
    }
    if !(dx > 0.0) {
        return Err(SchemeError::InvalidConfig(format!(
            "spacing must be positive, got {dx}"
        )));
    }
    Ok((tau - 0.5) * dx * dx / 3.0)
}

/// Per-step counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Sum of Newton iterations over all nodes.
    pub newton_iterations: u64,
    pub newton_max_iterations: u32,
    pub newton_bisections: u64,
    /// Largest `|F(theta~)|` of the local implicit equation.
    pub max_residual: f64,
    pub inner_iterations: u32,
    pub inner_change: f64,
}

/// Everything a scheme advances in time.
///
/// After construction and after every step, `theta` holds the temperature of
/// the current `f` and, for the explicit enthalpy scheme, `enthalpy` holds
/// its zeroth moment.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub f: DistributionField,
    pub theta: Vec<f64>,
    /// Explicit enthalpy scheme only.
    pub enthalpy: Option<Vec<f64>>,
    /// Liquid-fraction scheme only.
    pub ell: Option<Vec<f64>>,
    pub step: u64,
    pub config: SchemeConfig,
    scratch: Scratch,
}

#[derive(Debug, Clone)]
struct Scratch {
    q: DistributionField,
    post: Option<DistributionField>,
    node: Vec<f64>,
    ell_iter: Vec<f64>,
}

impl SolverState {
    /// Initializes populations at equilibrium with the given temperature.
    ///
    /// Implicit schemes use `f_i = w_i theta`; the explicit enthalpy scheme
    /// uses `f_i = w_i theta` for `i != 0` and `f_0 = H - (1 - w_0) theta`
    /// with the sharp enthalpy `H`. The liquid-fraction field starts from the
    /// sharp fraction.
    pub fn new(
        config: SchemeConfig,
        lattice: Lattice,
        grid: Grid,
        theta: Vec<f64>,
    ) -> Result<Self, SchemeError> {
        config.validate()?;
        if theta.len() != grid.len() {
            return Err(SchemeError::InitialLength {
                expected: grid.len(),
                got: theta.len(),
            });
        }
        let mut f = DistributionField::from_equilibrium(lattice.clone(), grid, |n| theta[n])?;
        let mut enthalpy = None;
        let mut ell = None;
        match config.method {
            Method::Eebm => {
                let h: Vec<f64> = theta
                    .iter()
                    .map(|&t| sharp_enthalpy(t, config.ste))
                    .collect();
                let w0 = lattice.weight(0);
                for (n, v) in f.plane_mut(0).iter_mut().enumerate() {
                    *v = h[n] - (1.0 - w0) * theta[n];
                }
                enthalpy = Some(h);
            }
            Method::Ilfbm => {
                ell = Some(theta.iter().map(|&t| sharp_liquid_fraction(t)).collect());
            }
            Method::Irebm => {}
        }
        let q = DistributionField::zeros(lattice, grid)?;
        let post = (config.method == Method::Ilfbm).then(|| q.clone());
        Ok(Self {
            f,
            theta,
            enthalpy,
            ell,
            step: 0,
            config,
            scratch: Scratch {
                q,
                post,
                node: vec![0.0; grid.len()],
                ell_iter: Vec::new(),
            },
        })
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn lattice(&self) -> &Lattice {
        self.f.lattice()
    }

    /// Advances one step with the configured method.
    pub fn advance(&mut self, plan: &BoundaryPlan) -> Result<StepStats, SchemeError> {
        match self.config.method {
            Method::Eebm => step_eebm(self, plan),
            Method::Ilfbm => step_ilfbm(self, plan),
            Method::Irebm => step_irebm(self, plan),
        }
    }

    /// Conserved energy monitor: sum of `M0(f)` (explicit enthalpy),
    /// `theta + ell / Ste` (liquid fraction) or `theta + phi_delta(theta) / Ste`
    /// (regularized).
    pub fn total_enthalpy(&self) -> f64 {
        let ste = self.config.ste;
        match self.config.method {
            Method::Eebm => self.f.moment0().iter().sum(),
            Method::Ilfbm => {
                let ell = self.ell.as_ref().expect("liquid fraction present");
                self.theta.iter().zip(ell).map(|(t, l)| t + l / ste).sum()
            }
            Method::Irebm => {
                let delta = self.config.delta;
                self.f
                    .moment0()
                    .iter()
                    .map(|&t| t + phi_delta(t, delta) / ste)
                    .sum()
            }
        }
    }
}
