use super::transfer::liquid_fraction_from_enthalpy;
use super::{SchemeError, SolverState, StepStats};
use crate::boundary::BoundaryPlan;

/// Implicit liquid-fraction step.
///
/// The collision `Omega^0` is computed once. Each inner iteration adds the
/// latent source `w_i (ell - ell^(k-1)) / Ste`, streams, closes the
/// boundaries, and updates `ell^(k) = l(M0(f^(k)) + ell^(k-1) / Ste)` until
/// the largest change of `ell` drops below `inner_tol`.
pub fn step_ilfbm(state: &mut SolverState, plan: &BoundaryPlan) -> Result<StepStats, SchemeError> {
    let cfg = state.config;
    let omega = 1.0 / cfg.tau;
    let keep = 1.0 - omega;
    let ste = cfg.ste;
    let q_count = state.f.lattice().q();

    for i in 0..q_count {
        let w = state.f.lattice().weight(i);
        for (v, &tn) in state.f.plane_mut(i).iter_mut().zip(&state.theta) {
            *v = keep * *v + omega * w * tn;
        }
    }

    let ell = state.ell.as_mut().expect("liquid fraction present");
    let scratch = &mut state.scratch;
    let post = scratch.post.as_mut().expect("source buffer present");
    let q = &mut scratch.q;
    let m0 = &mut scratch.node;
    scratch.ell_iter.clear();
    scratch.ell_iter.extend_from_slice(ell);
    let ell_iter = &mut scratch.ell_iter;

    let mut iterations = 0u32;
    loop {
        iterations += 1;
        for i in 0..q_count {
            let w = post.lattice().weight(i);
            let base = state.f.plane(i);
            let out = post.plane_mut(i);
            for (((o, &b), &l), &lk) in out
                .iter_mut()
                .zip(base)
                .zip(ell.iter())
                .zip(ell_iter.iter())
            {
                *o = b + w * (l - lk) / ste;
            }
        }
        post.stream_into(q, plan.periodic());
        plan.apply(post, q, |_, wall| wall);
        q.moment0_into(m0);

        let mut change = 0.0f64;
        for (lk, &m) in ell_iter.iter_mut().zip(m0.iter()) {
            let next = liquid_fraction_from_enthalpy(m + *lk / ste, ste);
            change = change.max((next - *lk).abs());
            *lk = next;
        }
        if change < cfg.inner_tol {
            let stats = StepStats {
                inner_iterations: iterations,
                inner_change: change,
                ..StepStats::default()
            };
            std::mem::swap(&mut state.f, q);
            ell.copy_from_slice(ell_iter);
            state.theta.copy_from_slice(m0);
            state.step += 1;
            return Ok(stats);
        }
        if iterations >= cfg.inner_max_iter {
            return Err(SchemeError::InnerLoopNotConverged {
                step: state.step,
                iterations,
                change,
            });
        }
    }
}
