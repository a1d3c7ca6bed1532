//! Solvers for `F(x) = f(x) + g(x)` with `f` smooth and convex on an open
//! domain and `g` a separable group penalty with a cheap proximal map.
//!
//! `f` reports points outside its domain as `+inf` from [`SmoothObjective::value`],
//! which line searches treat as a rejected trial.

mod newton;
mod path;
mod proximal;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Result, SolverError};
use crate::linalg::DenseMatrix;

pub use newton::prox_newton_solve;
pub use path::{lambda_grid, path_solve, Clock, GridSpec, NoClock, PathResult};
pub use proximal::prox_gradient_solve;

pub trait SmoothObjective {
    fn dim(&self) -> usize;

    /// `+inf` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value.
    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;

    /// Hessian-vector product. The default differences the gradient.
    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        finite_difference_hvp(self, x, v, out)
    }

    fn dense_hessian(&self, x: &[f64]) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut h = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.hessian_vec(x, &e, &mut col)?;
            e[j] = 0.0;
            for (i, c) in col.iter().enumerate() {
                h[(i, j)] = *c;
            }
        }
        h.symmetrize();
        Ok(h)
    }
}

/// Central difference of the gradient along `v`.
pub fn finite_difference_hvp<F: SmoothObjective + ?Sized>(f: &F, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    let nv = crate::math::norm2(v);
    if nv == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return Ok(());
    }
    let nx = crate::math::norm2(x).max(1.0);
    let h = 1e-5 * nx / nv;
    let n = x.len();
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    crate::math::axpy(h, v, &mut plus);
    crate::math::axpy(-h, v, &mut minus);
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    f.gradient(&plus, &mut gp)?;
    f.gradient(&minus, &mut gm)?;
    for i in 0..n {
        out[i] = (gp[i] - gm[i]) / (2.0 * h);
    }
    Ok(())
}

pub trait Regularizer {
    fn value(&self, x: &[f64]) -> f64;

    /// In-place proximal map of `step * g`.
    fn prox(&self, x: &mut [f64], step: f64);

    /// Norms of the penalized groups, in a fixed order.
    fn group_norms(&self, x: &[f64]) -> Vec<f64>;
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoPenalty;

impl Regularizer for NoPenalty {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, _x: &mut [f64], _step: f64) {}

    fn group_norms(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ProxGradient,
    AcceleratedProxGradient,
    ProxNewtonExact,
    ProxNewtonBfgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Stop when `||x_{k+1} - x_k|| / max(||x_k||, 1) < tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub backtrack: f64,
    /// Sufficient-decrease constant of the proximal Newton line search.
    pub armijo: f64,
    pub initial_step: f64,
    /// Inner tolerance is `min(forcing_cap, sqrt(eta)) * eta` where `eta` is
    /// the outer prox-gradient residual.
    pub forcing_cap: f64,
    pub max_inner_iter: usize,
    /// Relative diagonal shift added to the exact Hessian before factoring.
    pub hessian_damping: f64,
    /// Groups with norm above this are reported active.
    pub zero_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::AcceleratedProxGradient,
            tol: 1e-6,
            max_iter: 10_000,
            backtrack: 0.5,
            armijo: 1e-4,
            initial_step: 1.0,
            forcing_cap: 0.1,
            max_inner_iter: 1000,
            hessian_damping: 1e-8,
            zero_threshold: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.armijo <= 0.5
            && self.initial_step > 0.0
            && self.forcing_cap > 0.0
            && self.hessian_damping >= 0.0
            && self.zero_threshold >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Invalid("invalid solver configuration".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub x: Vec<f64>,
    /// `F` at the start point and after every accepted iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Indices of penalty groups with norm above the zero threshold.
    pub active: Vec<usize>,
    pub group_norms: Vec<f64>,
    /// Proximal Newton iterations that used a scaled identity or a plain
    /// proximal gradient step instead of the Newton direction.
    pub fallbacks: usize,
    pub inner_iterations: usize,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        *self.trace.last().unwrap_or(&f64::INFINITY)
    }

    fn finish<R: Regularizer + ?Sized>(
        x: Vec<f64>,
        trace: Vec<f64>,
        iterations: usize,
        converged: bool,
        reg: &R,
        config: &SolverConfig,
    ) -> Self {
        let group_norms = reg.group_norms(&x);
        let active = group_norms
            .iter()
            .enumerate()
            .filter(|(_, n)| **n > config.zero_threshold)
            .map(|(i, _)| i)
            .collect();
        Self {
            x,
            trace,
            iterations,
            converged,
            active,
            group_norms,
            fallbacks: 0,
            inner_iterations: 0,
        }
    }
}

/// Dispatches on `config.method`.
pub fn solve<F, R>(f: &F, reg: &R, init: &[f64], config: &SolverConfig) -> core::result::Result<FitResult, SolverError>
where
    F: SmoothObjective + ?Sized,
    R: Regularizer + ?Sized,
{
    match config.method {
        Method::ProxGradient | Method::AcceleratedProxGradient => prox_gradient_solve(f, reg, init, config),
        Method::ProxNewtonExact | Method::ProxNewtonBfgs => prox_newton_solve(f, reg, init, config),
    }
}

/// Norm of `x - prox(x - grad, 1)`, zero exactly at minimizers of `F`.
pub fn prox_residual<R: Regularizer + ?Sized>(reg: &R, x: &[f64], grad: &[f64]) -> f64 {
    let mut u: Vec<f64> = x.iter().zip(grad).map(|(a, b)| a - b).collect();
    reg.prox(&mut u, 1.0);
    crate::math::dist2(&u, x)
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    crate::math::dist2(new, old) / crate::math::norm2(old).max(1.0)
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Smallest step before a backtracking search gives up.
const MIN_STEP: f64 = 1e-16;

/// One backtracking proximal gradient step from `y` with gradient `g` and
/// value `fy`. Returns the new point, its smooth value, and the step used.
fn backtracking_step<F, R>(
    f: &F,
    reg: &R,
    y: &[f64],
    fy: f64,
    g: &[f64],
    mut step: f64,
    backtrack: f64,
    iteration: usize,
) -> core::result::Result<(Vec<f64>, f64, f64), SolverError>
where
    F: SmoothObjective + ?Sized,
    R: Regularizer + ?Sized,
{
    let mut z = vec![0.0; y.len()];
    loop {
        for i in 0..y.len() {
            z[i] = y[i] - step * g[i];
        }
        reg.prox(&mut z, step);
        let fz = f.value(&z);
        if fz.is_finite() {
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..y.len() {
                let d = z[i] - y[i];
                lin += g[i] * d;
                sq += d * d;
            }
            let model = fy + lin + sq / (2.0 * step);
            if fz <= model + 1e-12 * model.abs() {
                return Ok((z, fz, step));
            }
        }
        step *= backtrack;
        if step < MIN_STEP {
            return Err(SolverError::LineSearch {
                iteration,
                min_step: MIN_STEP,
            });
        }
    }
}

fn gradient_at<F: SmoothObjective + ?Sized>(
    f: &F,
    x: &[f64],
    grad: &mut [f64],
    iteration: usize,
) -> core::result::Result<f64, SolverError> {
    let v = f.gradient(x, grad).map_err(|_| SolverError::Domain { iteration })?;
    if !finite(grad) || !v.is_finite() {
        return Err(SolverError::NonFiniteGradient { iteration });
    }
    Ok(v)
}
