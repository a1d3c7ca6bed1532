use alloc::vec::Vec;

use super::{solve, FitResult, SmoothObjective, SolverConfig};
use crate::error::SolverError;
use crate::math::{exp, ln};
use crate::regularization::PenaltySpec;

/// Log-spaced grid from `lambda_max` down to `ratio * lambda_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub ratio: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 50,
            ratio: 1e-4,
        }
    }
}

/// Strictly decreasing grid starting at `lambda_max`. A single point grid is
/// just `[lambda_max]`.
pub fn lambda_grid(lambda_max: f64, spec: &GridSpec) -> Vec<f64> {
    if spec.points == 0 {
        return Vec::new();
    }
    if spec.points == 1 {
        return alloc::vec![lambda_max];
    }
    let top = ln(lambda_max);
    let bottom = ln(lambda_max * spec.ratio);
    let last = (spec.points - 1) as f64;
    (0..spec.points)
        .map(|i| {
            if i == 0 {
                lambda_max
            } else {
                exp(top + (bottom - top) * (i as f64) / last)
            }
        })
        .collect()
}

/// Monotonic time source in seconds; `no_std` callers can use [`NoClock`].
pub trait Clock {
    fn seconds(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub fits: Vec<Result<FitResult, SolverError>>,
    /// Wall time per grid point.
    pub seconds: Vec<f64>,
}

impl PathResult {
    /// Iterations summed over successful grid points.
    pub fn total_iterations(&self) -> usize {
        self.fits
            .iter()
            .filter_map(|f| f.as_ref().ok())
            .map(|f| f.iterations)
            .sum()
    }

    pub fn objectives(&self) -> Vec<Option<f64>> {
        self.fits
            .iter()
            .map(|f| f.as_ref().ok().map(FitResult::objective))
            .collect()
    }
}

/// Solves along `lambdas` in order. With `warm_start` each point starts at
/// the last successful solution; otherwise every point starts at `init`. A
/// failing point is recorded and does not stop the path.
pub fn path_solve<F, C>(
    f: &F,
    penalty: &PenaltySpec,
    lambdas: &[f64],
    init: &[f64],
    config: &SolverConfig,
    warm_start: bool,
    clock: &C,
) -> PathResult
where
    F: SmoothObjective + ?Sized,
    C: Clock + ?Sized,
{
    let mut start = init.to_vec();
    let mut fits = Vec::with_capacity(lambdas.len());
    let mut seconds = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let spec = penalty.with_lambda(lambda);
        let t0 = clock.seconds();
        let fit = solve(f, &spec, &start, config);
        seconds.push(clock.seconds() - t0);
        if warm_start {
            if let Ok(ok) = &fit {
                start.copy_from_slice(&ok.x);
            }
        }
        fits.push(fit);
    }
    PathResult {
        lambdas: lambdas.to_vec(),
        fits,
        seconds,
    }
}
