use super::transfer::{sharp_enthalpy, temperature_from_enthalpy};
use super::{SchemeError, SolverState, StepStats};
use crate::boundary::BoundaryPlan;

/// Explicit enthalpy step: BGK relaxation toward an equilibrium whose zeroth
/// moment is the enthalpy, then streaming and boundary closure.
pub fn step_eebm(state: &mut SolverState, plan: &BoundaryPlan) -> Result<StepStats, SchemeError> {
    let cfg = state.config;
    let omega = 1.0 / cfg.tau;
    let keep = 1.0 - omega;
    let ste = cfg.ste;
    let q_count = state.f.lattice().q();
    let w0 = state.f.lattice().weight(0);

    let h = state.enthalpy.as_mut().expect("enthalpy cache present");
    let theta = &state.theta;

    // collide in place; f now holds post-collision populations
    {
        let rest = state.f.plane_mut(0);
        for ((v, &hn), &tn) in rest.iter_mut().zip(h.iter()).zip(theta) {
            let eq = hn - (1.0 - w0) * tn;
            *v = keep * *v + omega * eq;
        }
    }
    for i in 1..q_count {
        let w = state.f.lattice().weight(i);
        for (v, &tn) in state.f.plane_mut(i).iter_mut().zip(theta) {
            *v = keep * *v + omega * w * tn;
        }
    }

    let q = &mut state.scratch.q;
    state.f.stream_into(q, plan.periodic());
    plan.apply(&state.f, q, |_, wall| sharp_enthalpy(wall, ste));
    std::mem::swap(&mut state.f, q);

    state.f.moment0_into(h);
    for (t, &hn) in state.theta.iter_mut().zip(h.iter()) {
        *t = temperature_from_enthalpy(hn, ste);
    }
    state.step += 1;
    Ok(StepStats::default())
}
