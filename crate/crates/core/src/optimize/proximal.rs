use alloc::vec;
use alloc::vec::Vec;

use super::{
    backtracking_step, gradient_at, relative_change, FitResult, Method, Regularizer, SmoothObjective, SolverConfig,
};
use crate::error::SolverError;

/// Proximal gradient with backtracking. With
/// [`Method::AcceleratedProxGradient`] the extrapolation restarts whenever a
/// step would raise the objective, so the trace never increases.
pub fn prox_gradient_solve<F, R>(f: &F, reg: &R, init: &[f64], config: &SolverConfig) -> Result<FitResult, SolverError>
where
    F: SmoothObjective + ?Sized,
    R: Regularizer + ?Sized,
{
    config.validate().map_err(|_| SolverError::InvalidConfig)?;
    let n = init.len();
    let accelerated = config.method == Method::AcceleratedProxGradient;
    let mut x = init.to_vec();
    let fx0 = f.value(&x);
    if !fx0.is_finite() {
        return Err(SolverError::InfeasibleStart);
    }
    let mut big_f = fx0 + reg.value(&x);
    let mut trace = vec![big_f];
    let mut y: Vec<f64> = x.clone();
    let mut g = vec![0.0; n];
    let mut momentum = 1.0;
    let mut step = config.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let extrapolated = momentum > 1.0;
        let fy = match gradient_at(f, &y, &mut g, iterations) {
            Ok(v) => v,
            Err(_) if extrapolated => {
                // extrapolated point left the domain
                y.copy_from_slice(&x);
                momentum = 1.0;
                gradient_at(f, &y, &mut g, iterations)?
            }
            Err(e) => return Err(e),
        };
        let (z, fz, used) = backtracking_step(f, reg, &y, fy, &g, step, config.backtrack, iterations)?;
        step = used;
        let fz_total = fz + reg.value(&z);
        if accelerated && extrapolated && fz_total > big_f {
            y.copy_from_slice(&x);
            momentum = 1.0;
            continue;
        }
        let change = relative_change(&z, &x);
        if accelerated {
            let next = 0.5 * (1.0 + crate::math::sqrt(1.0 + 4.0 * momentum * momentum));
            let beta = (momentum - 1.0) / next;
            for i in 0..n {
                y[i] = z[i] + beta * (z[i] - x[i]);
            }
            momentum = next;
        } else {
            y.copy_from_slice(&z);
        }
        x = z;
        // rounding can make a plain step rise by an ulp; never record that
        big_f = fz_total.min(big_f);
        trace.push(big_f);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    Ok(FitResult::finish(x, trace, iterations, converged, reg, config))
}
