use rayon::prelude::*;

use super::params::{PdParams, StepErrors};
use super::problem::{CompositeProblem, SolverState};
use crate::error::{Error, Result};
use crate::funcs::prox::{prox_conjugate_weighted, prox_weighted};

/// One iteration of the first primal-dual class, drawing errors from
/// `params.errors` when present.
pub fn pd1_step(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
) -> Result<SolverState> {
    let errors = scheduled_errors(state, problem, params);
    pd1_step_with(state, problem, params, &errors)
}

/// One iteration of the second primal-dual class (`f = 0`).
pub fn pd2_step(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
) -> Result<SolverState> {
    let errors = scheduled_errors(state, problem, params);
    pd2_step_with(state, problem, params, &errors)
}

fn scheduled_errors(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
) -> StepErrors {
    params
        .errors
        .map(|s| s.at(state.n, problem))
        .unwrap_or_default()
}

fn check_inputs(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
    errors: &StepErrors,
) -> Result<()> {
    params.check(problem)?;
    state.check(problem)?;
    errors.check(problem)
}

/// ```text
/// p   = prox^{U⁻¹}_f(x − U(Σ L_i* v_i + ∇h(x) + c − z)) + a
/// y   = 2p − x
/// x⁺  = x + λ(p − x)
/// q_i = prox^{U_i⁻¹}_{g_i*}(v_i + U_i(L_i y − ∇ℓ_i*(v_i) − d_i − r_i)) + b_i
/// v_i⁺ = v_i + λ(q_i − v_i)
/// ```
pub fn pd1_step_with(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
    errors: &StepErrors,
) -> Result<SolverState> {
    check_inputs(state, problem, params, errors)?;
    let x = &state.x;
    let u = params.primal_metric.weights();

    let mut direction = adjoint_sum(problem, &state.v);
    let mut grad = vec![0.0; x.len()];
    problem.h.gradient_into(x, &mut grad);
    for (k, d) in direction.iter_mut().enumerate() {
        *d += grad[k] - problem.z[k] + errors.c.as_ref().map_or(0.0, |c| c[k]);
    }
    let arg: Vec<f64> = x
        .iter()
        .zip(&direction)
        .zip(u)
        .map(|((xi, di), ui)| xi - ui * di)
        .collect();
    let mut p = vec![0.0; x.len()];
    prox_weighted(&problem.f, u, &arg, &mut p)?;
    if let Some(a) = &errors.a {
        for (pi, ai) in p.iter_mut().zip(a) {
            *pi += ai;
        }
    }

    let y: Vec<f64> = p.iter().zip(x).map(|(pi, xi)| 2.0 * pi - xi).collect();
    let lambda = params.lambda;
    let x_next = relax(x, &p, lambda);
    let q = dual_candidates(state, problem, params, errors, &y)?;
    let v_next = state
        .v
        .iter()
        .zip(&q)
        .map(|(v, qi)| relax(v, qi, lambda))
        .collect();
    Ok(SolverState {
        n: state.n + 1,
        x: x_next,
        v: v_next,
    })
}

/// ```text
/// s   = x − U(∇h(x) + c − z)
/// y   = s − U Σ L_i* v_i
/// q_i = prox^{U_i⁻¹}_{g_i*}(v_i + U_i(L_i y − ∇ℓ_i*(v_i) − d_i − r_i)) + b_i
/// v_i⁺ = v_i + λ(q_i − v_i)
/// p   = s − U Σ L_i* q_i
/// x⁺  = x + λ(p − x)
/// ```
pub fn pd2_step_with(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
    errors: &StepErrors,
) -> Result<SolverState> {
    if !problem.f.is_zero() {
        return Err(Error::Structural("PD2 requires f = 0".into()));
    }
    check_inputs(state, problem, params, errors)?;
    let x = &state.x;
    let u = params.primal_metric.weights();

    let mut grad = vec![0.0; x.len()];
    problem.h.gradient_into(x, &mut grad);
    let s: Vec<f64> = (0..x.len())
        .map(|k| {
            let c = errors.c.as_ref().map_or(0.0, |c| c[k]);
            x[k] - u[k] * (grad[k] + c - problem.z[k])
        })
        .collect();

    let lv = adjoint_sum(problem, &state.v);
    let y: Vec<f64> = s
        .iter()
        .zip(&lv)
        .zip(u)
        .map(|((si, li), ui)| si - ui * li)
        .collect();
    let q = dual_candidates(state, problem, params, errors, &y)?;

    let lq = adjoint_sum(problem, &q);
    let p: Vec<f64> = s
        .iter()
        .zip(&lq)
        .zip(u)
        .map(|((si, li), ui)| si - ui * li)
        .collect();
    let lambda = params.lambda;
    Ok(SolverState {
        n: state.n + 1,
        x: relax(x, &p, lambda),
        v: state
            .v
            .iter()
            .zip(&q)
            .map(|(v, qi)| relax(v, qi, lambda))
            .collect(),
    })
}

/// `Σ_i L_i* w_i`.
fn adjoint_sum(problem: &CompositeProblem, w: &[Vec<f64>]) -> Vec<f64> {
    let mut total = vec![0.0; problem.dim()];
    let mut tmp = vec![0.0; problem.dim()];
    for (b, wi) in problem.blocks.iter().zip(w) {
        b.op.adjoint_into(wi, &mut tmp);
        for (t, v) in total.iter_mut().zip(&tmp) {
            *t += v;
        }
    }
    total
}

/// Dual prox candidates `q_i` at the primal point `y`; blocks are independent.
fn dual_candidates(
    state: &SolverState,
    problem: &CompositeProblem,
    params: &PdParams,
    errors: &StepErrors,
    y: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let update = |i: usize| -> Result<Vec<f64>> {
        let b = &problem.blocks[i];
        let v = &state.v[i];
        let w = params.dual_metrics[i].weights();
        let mut ly = vec![0.0; b.dim()];
        b.op.apply_into(y, &mut ly);
        let mut ell_grad = vec![0.0; b.dim()];
        b.ell.conjugate_gradient_into(v, &mut ell_grad);
        let d = errors.dual_gradient(i);
        let arg: Vec<f64> = (0..b.dim())
            .map(|k| {
                let dk = d.map_or(0.0, |d| d[k]);
                v[k] + w[k] * (ly[k] - ell_grad[k] - dk - b.offset[k])
            })
            .collect();
        let mut q = vec![0.0; b.dim()];
        prox_conjugate_weighted(&b.g, w, &arg, &mut q)?;
        if let Some(e) = errors.dual_prox(i) {
            for (qi, ei) in q.iter_mut().zip(e) {
                *qi += ei;
            }
        }
        Ok(q)
    };
    if problem.blocks.len() > 1 {
        (0..problem.blocks.len())
            .into_par_iter()
            .map(update)
            .collect()
    } else {
        (0..problem.blocks.len()).map(update).collect()
    }
}

fn relax(old: &[f64], candidate: &[f64], lambda: f64) -> Vec<f64> {
    old.iter()
        .zip(candidate)
        .map(|(o, c)| o + lambda * (c - o))
        .collect()
}
