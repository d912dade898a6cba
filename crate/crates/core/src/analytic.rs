//! Similarity solution of the one-dimensional two-phase Stefan problem.
//!
//! Melting of a semi-infinite bar: the face `x = 0` is held at `theta = 1`,
//! the far field stays at `theta0 < 0`, the front moves as `2 lambda sqrt(t)`.
//! All quantities are nondimensional (length `L`, time `L^2 / alpha_l`,
//! temperature `(T - T_f) / (T_h - T_f)`).

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("invalid Stefan parameters: {0}")]
    InvalidParams(String),
    #[error("similarity equation has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("position must be nonnegative, got {0}")]
    NegativePosition(f64),
    #[error("target front position must be positive, got {0}")]
    NonPositiveFront(f64),
}

/// Error function.
///
/// Backed by the libm port of the FreeBSD/Sun rational approximations,
/// accurate to about one ulp over the whole real line.
#[inline]
pub fn erf(z: f64) -> f64 {
    libm::erf(z)
}

/// Complementary error function, evaluated directly (no `1 - erf` cancellation).
#[inline]
pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StefanCaseParams {
    pub ste: f64,
    /// Far-field solid temperature, negative.
    pub theta0: f64,
    /// Diffusivity ratio solid/liquid.
    pub alpha: f64,
    /// Conductivity ratio solid/liquid.
    pub k: f64,
    /// Density ratio solid/liquid.
    pub rho: f64,
}

impl StefanCaseParams {
    /// Equal material properties in both phases.
    pub fn symmetric(ste: f64, theta0: f64) -> Self {
        Self {
            ste,
            theta0,
            alpha: 1.0,
            k: 1.0,
            rho: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        let bad = |msg: String| Err(AnalyticError::InvalidParams(msg));
        if !(self.ste > 0.0 && self.ste.is_finite()) {
            return bad(format!("Ste must be positive, got {}", self.ste));
        }
        if !(self.theta0 < 0.0 && self.theta0.is_finite()) {
            return bad(format!("theta0 must be negative, got {}", self.theta0));
        }
        for (name, v) in [("alpha", self.alpha), ("k", self.k), ("rho", self.rho)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Left side minus right side of the transcendental equation for lambda.
    ///
    /// Positive near zero, negative for large lambda, decreasing in between.
    pub fn lambda_residual(&self, lambda: f64) -> f64 {
        let sa = self.alpha.sqrt();
        let liquid = (-lambda * lambda).exp() / erf(lambda);
        let solid =
            self.theta0 * self.k / sa * (-lambda * lambda / self.alpha).exp() / erfc(lambda / sa);
        liquid + solid - self.rho * lambda * PI.sqrt() / self.ste
    }
}

pub const LAMBDA_BRACKET: (f64, f64) = (1e-8, 5.0);
const LAMBDA_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSolution {
    pub params: StefanCaseParams,
    pub lambda: f64,
}

/// Solves for the similarity constant lambda.
///
/// Bracketed Illinois (modified regula falsi) iteration on
/// [`LAMBDA_BRACKET`]; the bracket is kept at every step so convergence is
/// guaranteed once a sign change exists.
pub fn solve_lambda(params: StefanCaseParams) -> Result<AnalyticSolution, AnalyticError> {
    params.validate()?;
    let (mut a, mut b) = LAMBDA_BRACKET;
    let mut fa = params.lambda_residual(a);
    let mut fb = params.lambda_residual(b);
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(AnalyticError::NoSignChange { lo: a, hi: b });
    }
    // Illinois iteration: the side that is retained twice has its value halved.
    let mut side = 0i8;
    let mut lambda = 0.5 * (a + b);
    for _ in 0..200 {
        lambda = (a * fb - b * fa) / (fb - fa);
        if !(lambda > a && lambda < b) {
            lambda = 0.5 * (a + b);
        }
        let fl = params.lambda_residual(lambda);
        if fl == 0.0 {
            break;
        }
        if fl.signum() == fb.signum() {
            b = lambda;
            fb = fl;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = lambda;
            fa = fl;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if b - a < LAMBDA_TOL * lambda.max(1.0) {
            break;
        }
    }
    Ok(AnalyticSolution { params, lambda })
}

impl AnalyticSolution {
    pub fn residual(&self) -> f64 {
        self.params.lambda_residual(self.lambda)
    }

    pub fn interface_position(&self, t: f64) -> f64 {
        2.0 * self.lambda * t.max(0.0).sqrt()
    }

    /// Time at which the front reaches `x_target`.
    pub fn initial_time_for_front(&self, x_target: f64) -> Result<f64, AnalyticError> {
        if !(x_target > 0.0) {
            return Err(AnalyticError::NonPositiveFront(x_target));
        }
        let s = x_target / (2.0 * self.lambda);
        Ok(s * s)
    }

    /// Exact temperature; liquid branch left of the front, solid branch right of it.
    pub fn exact_theta(&self, x: f64, t: f64) -> Result<f64, AnalyticError> {
        if !(t > 0.0) {
            return Err(AnalyticError::NonPositiveTime(t));
        }
        if x < 0.0 {
            return Err(AnalyticError::NegativePosition(x));
        }
        Ok(self.theta_unchecked(x, t))
    }

    pub(crate) fn theta_unchecked(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        if x <= self.interface_position(t) {
            1.0 - erf(x / (2.0 * t.sqrt())) / erf(self.lambda)
        } else {
            let sa = p.alpha.sqrt();
            p.theta0 - p.theta0 * erfc(x / (2.0 * (p.alpha * t).sqrt())) / erfc(self.lambda / sa)
        }
    }
}

pub fn exact_theta(sol: &AnalyticSolution, x: f64, t: f64) -> Result<f64, AnalyticError> {
    sol.exact_theta(x, t)
}

pub fn interface_position(sol: &AnalyticSolution, t: f64) -> f64 {
    sol.interface_position(t)
}

pub fn initial_time_for_front(sol: &AnalyticSolution, x_target: f64) -> Result<f64, AnalyticError> {
    sol.initial_time_for_front(x_target)
}
