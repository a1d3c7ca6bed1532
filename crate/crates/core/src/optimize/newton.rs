use alloc::vec;
use alloc::vec::Vec;

use super::{
    backtracking_step, gradient_at, prox_residual, relative_change, FitResult, Method, Regularizer, SmoothObjective,
    SolverConfig,
};
use crate::error::SolverError;
use crate::linalg::{Cholesky, DenseMatrix};
use crate::math::{dot, norm2, sqrt};
use crate::pseudolikelihood::DENSE_HESSIAN_LIMIT;

/// Line-search steps below this switch to a proximal gradient step.
const MIN_NEWTON_STEP: f64 = 1e-10;

/// Proximal Newton: each outer iteration minimizes the local quadratic model
/// plus the penalty with an inner accelerated proximal gradient loop, then
/// takes an Armijo step `F(x + t p) <= F(x) - (t alpha / 2) ||p||^2` along
/// the resulting direction.
///
/// [`Method::ProxNewtonExact`] uses the objective's Hessian (dense up to
/// [`DENSE_HESSIAN_LIMIT`] parameters, Hessian-vector products beyond);
/// [`Method::ProxNewtonBfgs`] keeps a dense BFGS approximation.
pub fn prox_newton_solve<F, R>(f: &F, reg: &R, init: &[f64], config: &SolverConfig) -> Result<FitResult, SolverError>
where
    F: SmoothObjective + ?Sized,
    R: Regularizer + ?Sized,
{
    config.validate().map_err(|_| SolverError::InvalidConfig)?;
    let n = init.len();
    let bfgs = config.method == Method::ProxNewtonBfgs;
    if bfgs && n > DENSE_HESSIAN_LIMIT {
        return Err(SolverError::DimensionTooLarge {
            dim: n,
            limit: DENSE_HESSIAN_LIMIT,
        });
    }
    let mut x = init.to_vec();
    if !f.value(&x).is_finite() {
        return Err(SolverError::InfeasibleStart);
    }
    let mut g = vec![0.0; n];
    let mut fx = gradient_at(f, &x, &mut g, 0)?;
    let mut big_f = fx + reg.value(&x);
    let mut trace = vec![big_f];
    let mut approx: Option<DenseMatrix> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut fallbacks = 0;
    let mut inner_total = 0;
    let mut g_new = vec![0.0; n];

    while iterations < config.max_iter {
        iterations += 1;
        let eta = prox_residual(reg, &x, &g);
        if eta == 0.0 {
            converged = true;
            break;
        }
        let inner_tol = config.forcing_cap.min(sqrt(eta)) * eta;

        let curvature = if bfgs {
            let b = approx.get_or_insert_with(|| DenseMatrix::identity(n)).clone();
            Curvature::dense(b, 0.0)
        } else if n <= DENSE_HESSIAN_LIMIT {
            let h = f
                .dense_hessian(&x)
                .map_err(|_| SolverError::Domain { iteration: iterations })?;
            if !super::finite(h.as_slice()) {
                return Err(SolverError::NonFiniteGradient { iteration: iterations });
            }
            Curvature::dense(h, config.hessian_damping)
        } else {
            Curvature::Operator
        };
        if curvature.fell_back() {
            fallbacks += 1;
        }
        let (u, inner) = {
            let apply = |v: &[f64], out: &mut [f64]| -> Result<(), SolverError> {
                match &curvature {
                    Curvature::Dense { h, .. } => {
                        h.mul_vec(v, out);
                        Ok(())
                    }
                    Curvature::Operator => {
                        f.hessian_vec(&x, v, out)
                            .map_err(|_| SolverError::Domain { iteration: iterations })?;
                        let shift = config.hessian_damping;
                        for (o, vi) in out.iter_mut().zip(v) {
                            *o += shift * vi;
                        }
                        Ok(())
                    }
                }
            };
            let newton_point = curvature.newton_point(&x, &g);
            solve_model(&x, &g, reg, &apply, newton_point, inner_tol, config.max_inner_iter)?
        };
        inner_total += inner;
        let p: Vec<f64> = u.iter().zip(&x).map(|(a, b)| a - b).collect();
        let p_sq = dot(&p, &p);
        if p_sq == 0.0 {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut trial = vec![0.0; n];
        let accepted = loop {
            for i in 0..n {
                trial[i] = x[i] + t * p[i];
            }
            let ft = f.value(&trial);
            if ft.is_finite() {
                let total = ft + reg.value(&trial);
                if total <= big_f - 0.5 * t * config.armijo * p_sq {
                    break Some(total);
                }
            }
            t *= config.backtrack;
            if t < MIN_NEWTON_STEP {
                break None;
            }
        };
        let next_total = match accepted {
            Some(total) => total,
            None => {
                fallbacks += 1;
                let (z, fz, _) =
                    backtracking_step(f, reg, &x, fx, &g, config.initial_step, config.backtrack, iterations)?;
                trial = z;
                (fz + reg.value(&trial)).min(big_f)
            }
        };

        fx = gradient_at(f, &trial, &mut g_new, iterations)?;
        if let Some(b) = approx.as_mut() {
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            bfgs_update(b, &s, &yv, iterations == 1);
        }
        let change = relative_change(&trial, &x);
        x = trial;
        core::mem::swap(&mut g, &mut g_new);
        big_f = next_total.min(big_f);
        trace.push(big_f);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    let mut fit = FitResult::finish(x, trace, iterations, converged, reg, config);
    fit.fallbacks = fallbacks;
    fit.inner_iterations = inner_total;
    Ok(fit)
}

enum Curvature {
    Dense {
        h: DenseMatrix,
        chol: Option<Cholesky>,
        fell_back: bool,
    },
    Operator,
}

impl Curvature {
    /// Damped dense matrix; if it is not numerically positive definite it is
    /// replaced by a multiple of the identity.
    fn dense(mut h: DenseMatrix, damping: f64) -> Self {
        let n = h.rows();
        let diag = h.diagonal();
        let max_diag = diag.iter().cloned().fold(0.0, f64::max);
        h.add_diagonal(damping * max_diag.max(1.0));
        if let Some(chol) = Cholesky::new(&h) {
            return Curvature::Dense {
                h,
                chol: Some(chol),
                fell_back: false,
            };
        }
        let mean = diag.iter().map(|d| d.abs()).sum::<f64>() / (n.max(1) as f64);
        let scale = if mean > 0.0 && mean.is_finite() { mean } else { 1.0 };
        let mut id = DenseMatrix::identity(n);
        for i in 0..n {
            id[(i, i)] = scale;
        }
        let chol = Cholesky::new(&id);
        Curvature::Dense {
            h: id,
            chol,
            fell_back: true,
        }
    }

    fn fell_back(&self) -> bool {
        matches!(self, Curvature::Dense { fell_back: true, .. })
    }

    fn newton_point(&self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        match self {
            Curvature::Dense { chol: Some(c), .. } => {
                let mut step = g.to_vec();
                c.solve(&mut step);
                Some(x.iter().zip(&step).map(|(a, b)| a - b).collect())
            }
            _ => None,
        }
    }
}

/// Largest eigenvalue of a PSD operator by power iteration.
fn operator_norm<A>(apply: &A, n: usize) -> Result<f64, SolverError>
where
    A: Fn(&[f64], &mut [f64]) -> Result<(), SolverError>,
{
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let mut w = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..30 {
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        apply(&v, &mut w)?;
        estimate = dot(&v, &w);
        core::mem::swap(&mut v, &mut w);
    }
    Ok(estimate)
}

/// Minimizes `g.(u - x) + 1/2 (u - x)^T H (u - x) + r(u)` by accelerated
/// proximal gradient with restarts, stopping once the gradient mapping drops
/// below `tol`. Starts from the better of `x` and the unpenalized Newton
/// point when one is available.
fn solve_model<R, A>(
    x: &[f64],
    g: &[f64],
    reg: &R,
    apply: &A,
    newton_point: Option<Vec<f64>>,
    tol: f64,
    max_inner: usize,
) -> Result<(Vec<f64>, usize), SolverError>
where
    R: Regularizer + ?Sized,
    A: Fn(&[f64], &mut [f64]) -> Result<(), SolverError>,
{
    let n = x.len();
    let model = |u: &[f64], hd: &[f64]| -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            let d = u[i] - x[i];
            lin += g[i] * d;
            quad += d * hd[i];
        }
        lin + 0.5 * quad + reg.value(u)
    };

    let mut start = x.to_vec();
    let mut h_start = vec![0.0; n];
    let mut q_start = reg.value(x);
    if let Some(u) = newton_point {
        if super::finite(&u) {
            let d: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
            let mut hd = vec![0.0; n];
            apply(&d, &mut hd)?;
            let q = model(&u, &hd);
            if q < q_start {
                start = u;
                h_start = hd;
                q_start = q;
            }
        }
    }

    let mut lipschitz = operator_norm(apply, n)?.max(1e-12);
    let mut y = start.clone();
    let mut hy = h_start.clone();
    let mut z_prev = start;
    let mut hz_prev = h_start;
    let mut q_prev = q_start;
    let mut momentum = 1.0;
    let mut grad = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut hz = vec![0.0; n];
    let mut iterations = 0;

    while iterations < max_inner {
        iterations += 1;
        for i in 0..n {
            grad[i] = g[i] + hy[i];
        }
        loop {
            let step = 1.0 / lipschitz;
            for i in 0..n {
                z[i] = y[i] - step * grad[i];
            }
            reg.prox(&mut z, step);
            for i in 0..n {
                dz[i] = z[i] - x[i];
            }
            apply(&dz, &mut hz)?;
            let mut curv = 0.0;
            let mut sq = 0.0;
            for i in 0..n {
                let diff = z[i] - y[i];
                curv += diff * (hz[i] - hy[i]);
                sq += diff * diff;
            }
            if curv <= lipschitz * sq * (1.0 + 1e-10) || sq == 0.0 {
                break;
            }
            lipschitz *= 2.0;
        }
        let residual = lipschitz * crate::math::dist2(&z, &y);
        let q = model(&z, &hz);
        if momentum > 1.0 && q > q_prev {
            y.copy_from_slice(&z_prev);
            hy.copy_from_slice(&hz_prev);
            momentum = 1.0;
            continue;
        }
        let next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * momentum * momentum));
        let beta = (momentum - 1.0) / next;
        for i in 0..n {
            y[i] = z[i] + beta * (z[i] - z_prev[i]);
            hy[i] = hz[i] + beta * (hz[i] - hz_prev[i]);
        }
        momentum = next;
        z_prev.copy_from_slice(&z);
        hz_prev.copy_from_slice(&hz);
        q_prev = q;
        if residual <= tol {
            break;
        }
    }
    Ok((z_prev, iterations))
}

/// Dense BFGS update; skipped when the curvature condition fails.
fn bfgs_update(b: &mut DenseMatrix, s: &[f64], y: &[f64], first: bool) {
    let sy = dot(s, y);
    if !(sy > 1e-10 * norm2(s) * norm2(y)) {
        return;
    }
    if first {
        let scale = dot(y, y) / sy;
        *b = DenseMatrix::identity(s.len());
        for i in 0..s.len() {
            b[(i, i)] = scale;
        }
    }
    let mut bs = vec![0.0; s.len()];
    b.mul_vec(s, &mut bs);
    let sbs = dot(s, &bs);
    if sbs > 0.0 {
        b.rank_one_update(-1.0 / sbs, &bs, &bs);
    }
    b.rank_one_update(1.0 / sy, y, y);
    b.symmetrize();
}

#[cfg(test)]
mod tests {
    use super::super::testing::*;
    use super::super::{prox_gradient_solve, NoPenalty};
    use super::*;

    fn config(method: Method) -> SolverConfig {
        SolverConfig {
            tol: 1e-12,
            ..SolverConfig::with_method(method)
        }
    }

    fn quadratic() -> Quadratic {
        Quadratic {
            a: DenseMatrix::from_row_major(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]),
            c: vec![1.0, -2.0, 0.5],
        }
    }

    #[test]
    fn newton_on_quadratic_takes_at_most_two_iterations() {
        let f = quadratic();
        let fit = prox_newton_solve(
            &f,
            &NoPenalty,
            &[0.0; 3],
            &SolverConfig::with_method(Method::ProxNewtonExact),
        )
        .unwrap();
        assert!(fit.iterations <= 2, "{} iterations", fit.iterations);
        for (a, b) in fit.x.iter().zip(&f.c) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_curvature_reproduces_prox_gradient_steps() {
        // curvature <= 1, so unit prox-gradient steps are always accepted
        struct Scaled(Quadratic);
        impl SmoothObjective for Scaled {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn value(&self, x: &[f64]) -> f64 {
                self.0.value(x)
            }
            fn gradient(&self, x: &[f64], g: &mut [f64]) -> crate::Result<f64> {
                self.0.gradient(x, g)
            }
            fn dense_hessian(&self, _x: &[f64]) -> crate::Result<DenseMatrix> {
                Ok(DenseMatrix::identity(self.dim()))
            }
        }
        let f = Scaled(Quadratic {
            a: DenseMatrix::from_row_major(2, 2, vec![0.8, 0.1, 0.1, 0.5]),
            c: vec![2.0, -1.0],
        });
        let reg = L1(0.3);
        for steps in 1..6 {
            let mut cfg = config(Method::ProxNewtonExact);
            cfg.max_iter = steps;
            cfg.hessian_damping = 0.0;
            let pn = prox_newton_solve(&f, &reg, &[0.0, 0.0], &cfg).unwrap();
            cfg.method = Method::ProxGradient;
            let pg = prox_gradient_solve(&f, &reg, &[0.0, 0.0], &cfg).unwrap();
            for (a, b) in pn.x.iter().zip(&pg.x) {
                assert!((a - b).abs() < 1e-9, "step {steps}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn all_methods_agree_on_lasso() {
        let f = quadratic();
        let reg = L1(0.7);
        let reference = prox_gradient_solve(&f, &reg, &[0.0; 3], &config(Method::ProxGradient)).unwrap();
        for method in [
            Method::AcceleratedProxGradient,
            Method::ProxNewtonExact,
            Method::ProxNewtonBfgs,
        ] {
            let fit = super::super::solve(&f, &reg, &[0.0; 3], &config(method)).unwrap();
            let rel = (fit.objective() - reference.objective()).abs() / reference.objective().abs();
            assert!(rel < 1e-9, "{method:?}: {rel}");
            assert_eq!(fit.active, reference.active);
            for w in fit.trace.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn singular_hessian_falls_back() {
        // rank-one curvature: Cholesky of the undamped matrix fails
        let f = Quadratic {
            a: DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0]),
            c: vec![1.0, 1.0],
        };
        let mut cfg = config(Method::ProxNewtonExact);
        cfg.hessian_damping = 0.0;
        let fit = prox_newton_solve(&f, &L1(0.1), &[0.0, 0.0], &cfg).unwrap();
        assert!(fit.fallbacks > 0);
        let reference = prox_gradient_solve(&f, &L1(0.1), &[0.0, 0.0], &config(Method::ProxGradient)).unwrap();
        assert!((fit.objective() - reference.objective()).abs() < 1e-9);
    }

    #[test]
    fn barrier_domain_respected() {
        let f = Barrier {
            b: vec![0.0, 5.0, -1.0],
        };
        for method in [Method::ProxNewtonExact, Method::ProxNewtonBfgs] {
            let fit = prox_newton_solve(&f, &L1(0.2), &[0.0; 3], &config(method)).unwrap();
            assert!(fit.converged);
            assert!(fit.x.iter().all(|v| *v > -2.0));
        }
    }
}
