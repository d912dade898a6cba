use super::newton::solve_node;
use super::transfer::phi_delta;
use super::{SchemeError, SolverState, StepStats};
use crate::boundary::{dirichlet_on_q_target, BoundaryPlan};

/// Implicit regularized enthalpy step.
///
/// 1. `theta = M0(f)` (cached from the previous step), `f_eq = w_i theta`;
/// 2. `Omega_i = (1 - 1/tau) f_i + f_eq_i / tau`;
/// 3. stream `q_i(x) = Omega_i(x - e_i)`, close boundary populations of `q`;
/// 4. solve `t + phi(t)/Ste = M0(q) + phi(theta)/Ste` per node;
/// 5. `f~_i = q_i + w_i (phi(theta) - phi(t)) / Ste`.
pub fn step_irebm(state: &mut SolverState, plan: &BoundaryPlan) -> Result<StepStats, SchemeError> {
    let cfg = state.config;
    let omega = 1.0 / cfg.tau;
    let keep = 1.0 - omega;
    let (ste, delta) = (cfg.ste, cfg.delta);
    let q_count = state.f.lattice().q();

    for i in 0..q_count {
        let w = state.f.lattice().weight(i);
        for (v, &tn) in state.f.plane_mut(i).iter_mut().zip(&state.theta) {
            *v = keep * *v + omega * w * tn;
        }
    }

    let q = &mut state.scratch.q;
    state.f.stream_into(q, plan.periodic());
    let theta_prev = &state.theta;
    plan.apply(&state.f, q, |node, wall| {
        dirichlet_on_q_target(wall, theta_prev[node], ste, delta)
    });

    // m0 into the scratch vector, then overwritten by the source amplitude
    let source = &mut state.scratch.node;
    q.moment0_into(source);
    let mut stats = StepStats::default();
    for (node, (s, t)) in source.iter_mut().zip(state.theta.iter_mut()).enumerate() {
        let phi_old = phi_delta(*t, delta);
        let solve = solve_node(
            *s,
            phi_old,
            *t,
            ste,
            delta,
            cfg.newton_tol,
            cfg.newton_max_iter,
        )
        .map_err(|fail| {
            let (x, y) = q.grid().coords(node);
            SchemeError::NewtonFailed {
                step: state.step,
                x,
                y,
                residual: fail.residual,
                iterations: fail.iterations,
            }
        })?;
        stats.newton_iterations += solve.iterations as u64;
        stats.newton_max_iterations = stats.newton_max_iterations.max(solve.iterations);
        stats.newton_bisections += solve.bisected as u64;
        stats.max_residual = stats.max_residual.max(solve.residual.abs());
        *s = (phi_old - solve.phi) / ste;
        *t = solve.theta;
    }

    // add the source and take the new zeroth moment in the same pass
    state.theta.fill(0.0);
    for i in 0..q_count {
        let w = q.lattice().weight(i);
        let plane = q.plane_mut(i).iter_mut().zip(source.iter());
        for ((v, &s), t) in plane.zip(state.theta.iter_mut()) {
            *v += w * s;
            *t += *v;
        }
    }
    std::mem::swap(&mut state.f, q);
    state.step += 1;
    Ok(stats)
}
