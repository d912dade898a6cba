//! Per-node implicit solve of the regularized enthalpy scheme.
//!
//! At every node the new temperature solves
//!
//! ```text
//! F(t) = t + phi_delta(t) / Ste - m0 - phi_delta(theta_old) / Ste = 0
//! ```
//!
//! `F` is strictly increasing (`F' >= 1`), so the root is unique and lies in
//! `[c - 1/Ste, c]` with `c = m0 + phi_delta(theta_old) / Ste`.

use super::transfer::phi_delta_with_prime;

/// One Newton step for `F` above, starting from `theta_k`.
#[inline]
pub fn newton_update(theta_k: f64, m0: f64, theta_old: f64, ste: f64, delta: f64) -> f64 {
    let (phi_old, _) = phi_delta_with_prime(theta_old, delta);
    newton_update_with(theta_k, m0 + phi_old / ste, ste, delta)
}

#[inline]
fn newton_update_with(theta_k: f64, rhs: f64, ste: f64, delta: f64) -> f64 {
    let (phi, prime) = phi_delta_with_prime(theta_k, delta);
    (rhs + (prime * theta_k - phi) / ste) / (1.0 + prime / ste)
}

/// Residual `F(theta)` for a given right-hand side `m0 + phi(theta_old)/Ste`.
#[inline]
pub fn implicit_residual(theta: f64, rhs: f64, ste: f64, delta: f64) -> f64 {
    theta + phi_delta_with_prime(theta, delta).0 / ste - rhs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSolve {
    pub theta: f64,
    /// Regularized fraction at the solution, reused by the source term.
    pub phi: f64,
    pub iterations: u32,
    pub residual: f64,
    pub bisected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSolveFailure {
    pub residual: f64,
    pub iterations: u32,
}

/// Newton iteration from `theta_init`, safeguarded by the bracket
/// `[rhs - 1/Ste, rhs]` that always contains the root. An iterate that leaves
/// the current bracket is replaced by its midpoint (counted as a bisection).
/// Stops once a Newton step moves less than `tol` or the bracket collapses.
#[inline]
pub fn solve_node(
    m0: f64,
    phi_old: f64,
    theta_init: f64,
    ste: f64,
    delta: f64,
    tol: f64,
    max_iter: u32,
) -> Result<NodeSolve, NodeSolveFailure> {
    let rhs = m0 + phi_old / ste;
    if !(rhs.is_finite() && theta_init.is_finite()) {
        return Err(NodeSolveFailure {
            residual: f64::NAN,
            iterations: 0,
        });
    }
    // the root can sit on either end, so allow for rounding
    let pad = 1e-12 * (1.0 + rhs.abs() + 1.0 / ste);
    let (mut lo, mut hi) = (rhs - 1.0 / ste - pad, rhs + pad);
    let mut theta = theta_init.clamp(lo, hi);
    let mut iterations = 0;
    let mut bisected = false;
    loop {
        let (phi, prime) = phi_delta_with_prime(theta, delta);
        let residual = theta + phi / ste - rhs;
        if residual > 0.0 {
            hi = theta;
        } else if residual < 0.0 {
            lo = theta;
        } else {
            return Ok(NodeSolve {
                theta,
                phi,
                iterations: iterations.max(1),
                residual,
                bisected,
            });
        }
        if iterations >= max_iter {
            return finish_by_bisection(lo, hi, rhs, ste, delta, iterations);
        }
        iterations += 1;
        let newton = theta - residual / (1.0 + prime / ste);
        let took_newton = newton >= lo && newton <= hi;
        let next = if took_newton { newton } else { 0.5 * (lo + hi) };
        bisected |= !took_newton;
        let moved = (next - theta).abs();
        theta = next;
        if (took_newton && moved < tol) || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            let (phi, _) = phi_delta_with_prime(theta, delta);
            return Ok(NodeSolve {
                theta,
                phi,
                iterations,
                residual: theta + phi / ste - rhs,
                bisected,
            });
        }
    }
}

/// Bisection to machine precision inside a bracket known to hold the root.
fn finish_by_bisection(
    mut lo: f64,
    mut hi: f64,
    rhs: f64,
    ste: f64,
    delta: f64,
    iterations: u32,
) -> Result<NodeSolve, NodeSolveFailure> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if implicit_residual(mid, rhs, ste, delta) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (phi, _) = phi_delta_with_prime(theta, delta);
    let residual = theta + phi / ste - rhs;
    if !residual.is_finite() {
        return Err(NodeSolveFailure {
            residual,
            iterations,
        });
    }
    Ok(NodeSolve {
        theta,
        phi,
        iterations,
        residual,
        bisected: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::transfer::phi_delta;
    use proptest::prelude::*;

    const STE: f64 = 0.2857;
    const DELTA: f64 = 0.005;

    /// Plain bisection on F, independent of the Newton path.
    fn oracle(m0: f64, theta_old: f64) -> f64 {
        let c = m0 + phi_delta(theta_old, DELTA) / STE;
        let f = |t: f64| t + phi_delta(t, DELTA) / STE - c;
        let (mut lo, mut hi) = (-100.0, 100.0);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn root_is_a_fixed_point_of_the_update() {
        let (m0, old) = (0.013, -0.004);
        let root = oracle(m0, old);
        let next = newton_update(root, m0, old, STE, DELTA);
        assert!((next - root).abs() < 1e-12);
    }

    #[test]
    fn saturated_liquid_returns_moment() {
        let next = newton_update(0.8, 0.75, 0.8, STE, DELTA);
        assert!((next - 0.75).abs() < 1e-14);
    }

    #[test]
    fn uniform_state_converges_immediately() {
        let theta = -0.3;
        let phi_old = phi_delta(theta, DELTA);
        let s = solve_node(theta, phi_old, theta, STE, DELTA, 1e-12, 50).unwrap();
        assert_eq!(s.iterations, 1);
        assert!((s.theta - theta).abs() < 1e-15);
    }

    #[test]
    fn non_finite_input_fails() {
        assert!(solve_node(f64::NAN, 0.0, 0.0, STE, DELTA, 1e-12, 50).is_err());
    }

    #[test]
    fn bisection_fallback_when_capped() {
        let (m0, old) = (-0.02, 0.03);
        let s = solve_node(m0, phi_delta(old, DELTA), 5.0, STE, DELTA, 1e-13, 1).unwrap();
        assert!(s.bisected);
        assert!((s.theta - oracle(m0, old)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn newton_matches_bisection_oracle(m0 in -1.5f64..1.5, old in -1.0f64..1.0) {
            let s = solve_node(m0, phi_delta(old, DELTA), old, STE, DELTA, 1e-12, 50).unwrap();
            let c = m0 + phi_delta(old, DELTA) / STE;
            let f = s.theta + phi_delta(s.theta, DELTA) / STE - c;
            prop_assert!(f.abs() < 1e-10, "F = {f}");
            prop_assert!((s.theta - oracle(m0, old)).abs() < 1e-10);
        }

        #[test]
        fn stiff_regularization_still_solves(m0 in -0.05f64..0.05, old in -0.05f64..0.05) {
            let delta = 1e-4;
            let phi_old = phi_delta(old, delta);
            let s = solve_node(m0, phi_old, old, STE, delta, 1e-12, 50).unwrap();
            let c = m0 + phi_old / STE;
            prop_assert!((s.theta + phi_delta(s.theta, delta) / STE - c).abs() < 1e-10);
        }
    }
}
