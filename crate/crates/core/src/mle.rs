//! Exact likelihood for small models by enumerating the discrete states.
//!
//! The unnormalized log density is linear in the parameters,
//! `log p~(x, y) = theta . T(x, y)`, so the mean negative log-likelihood is
//! `log Z(theta) - theta . mean(T)` and its gradient is `E[T] - mean(T)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::math::{dot, LN_2PI};
use crate::optimize::{solve, FitResult, Regularizer, SmoothObjective, SolverConfig};
use crate::sampler::{decode_state, marginal_from_parts, DiscreteMarginal, GaussianPart};
use crate::schema::{Dataset, Observation};
use crate::theta::{Layout, Theta};

/// Largest discrete state space used for exact likelihood computations.
pub const MLE_ENUMERATION_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct LogPartition {
    pub value: f64,
    pub gaussian: GaussianPart,
    pub marginal: DiscreteMarginal,
}

/// `log Z = log sum_y exp(sum_{r<=j} phi_rj + 1/2 gamma(y)^T B^{-1} gamma(y))
///          + (p/2) log 2 pi - 1/2 log det B`.
pub fn log_partition(theta: &Theta) -> Result<f64> {
    Ok(log_partition_detail(theta)?.value)
}

pub fn log_partition_detail(theta: &Theta) -> Result<LogPartition> {
    let states = theta.schema().check_enumerable(MLE_ENUMERATION_CAP)?;
    let gaussian = GaussianPart::new(theta)?;
    let marginal = marginal_from_parts(theta, &gaussian, states);
    let p = theta.layout().p() as f64;
    let value = marginal.log_normalizer() + 0.5 * p * LN_2PI - 0.5 * gaussian.log_det();
    Ok(LogPartition {
        value,
        gaussian,
        marginal,
    })
}

/// Adds `scale * T(x, y)` into `out`.
pub fn add_sufficient_statistics(layout: &Layout, row: Observation<'_>, scale: f64, out: &mut [f64]) {
    let (p, q) = (layout.p(), layout.q());
    for s in 0..p {
        let xs = row.x[s];
        out[layout.beta_index(s, s)] -= scale * 0.5 * xs * xs;
        for t in (s + 1)..p {
            out[layout.beta_index(s, t)] -= scale * xs * row.x[t];
        }
        out[layout.alpha_index(s)] += scale * xs;
        for j in 0..q {
            out[layout.rho_index(s, j, row.y[j])] += scale * xs;
        }
    }
    for r in 0..q {
        out[layout.phi_node_index(r, row.y[r])] += scale;
        for j in (r + 1)..q {
            if let Some(k) = layout.phi_index(r, j, row.y[r], row.y[j]) {
                out[k] += scale;
            }
        }
    }
}

/// `E[T]` under the model.
pub fn expected_statistics(theta: &Theta) -> Result<Vec<f64>> {
    let detail = log_partition_detail(theta)?;
    Ok(expected_from(theta, &detail))
}

fn expected_from(theta: &Theta, detail: &LogPartition) -> Vec<f64> {
    let layout = theta.layout();
    let (p, q) = (layout.p(), layout.q());
    let levels = layout.levels().to_vec();
    let cov: &DenseMatrix = detail.gaussian.covariance();
    let mut out = vec![0.0; layout.dim()];
    let mut y = vec![0; q];
    let mut gamma = vec![0.0; p];
    let mut mean = vec![0.0; p];
    // The Gaussian second moments share B^{-1} across states.
    for s in 0..p {
        out[layout.beta_index(s, s)] -= 0.5 * cov[(s, s)];
        for t in (s + 1)..p {
            out[layout.beta_index(s, t)] -= cov[(s, t)];
        }
    }
    for (k, &prob) in detail.marginal.probabilities().iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        decode_state(&levels, k, &mut y);
        theta.gaussian_offset(&y, &mut gamma);
        detail.gaussian.mean_into(&gamma, &mut mean);
        for s in 0..p {
            let ms = mean[s];
            out[layout.beta_index(s, s)] -= prob * 0.5 * ms * ms;
            for t in (s + 1)..p {
                out[layout.beta_index(s, t)] -= prob * ms * mean[t];
            }
            out[layout.alpha_index(s)] += prob * ms;
            for j in 0..q {
                out[layout.rho_index(s, j, y[j])] += prob * ms;
            }
        }
        for r in 0..q {
            out[layout.phi_node_index(r, y[r])] += prob;
            for j in (r + 1)..q {
                if let Some(idx) = layout.phi_index(r, j, y[r], y[j]) {
                    out[idx] += prob;
                }
            }
        }
    }
    out
}

/// Mean negative log-likelihood over a dataset.
#[derive(Debug, Clone)]
pub struct MleObjective {
    layout: Layout,
    empirical: Vec<f64>,
}

impl MleObjective {
    /// Fails if the discrete state space exceeds [`MLE_ENUMERATION_CAP`].
    pub fn new(data: &Dataset) -> Result<Self> {
        data.schema().check_enumerable(MLE_ENUMERATION_CAP)?;
        if data.n() == 0 {
            return Err(Error::Invalid("likelihood needs at least one sample".into()));
        }
        let layout = Layout::new(data.schema());
        let mut empirical = vec![0.0; layout.dim()];
        let scale = 1.0 / data.n() as f64;
        for row in data.rows() {
            add_sufficient_statistics(&layout, row, scale, &mut empirical);
        }
        Ok(Self { layout, empirical })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Mean sufficient statistics of the data.
    pub fn empirical_statistics(&self) -> &[f64] {
        &self.empirical
    }

    fn theta(&self, values: &[f64]) -> Theta {
        Theta::from_values(self.layout.clone(), values.to_vec()).expect("parameter length matches layout")
    }
}

impl SmoothObjective for MleObjective {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// `+inf` unless `B` is positive definite.
    fn value(&self, x: &[f64]) -> f64 {
        match log_partition(&self.theta(x)) {
            Ok(z) => z - dot(x, &self.empirical),
            Err(_) => f64::INFINITY,
        }
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let theta = self.theta(x);
        let detail = log_partition_detail(&theta)?;
        let expected = expected_from(&theta, &detail);
        for ((g, e), t) in grad.iter_mut().zip(&expected).zip(&self.empirical) {
            *g = e - t;
        }
        Ok(detail.value - dot(x, &self.empirical))
    }
}

pub fn nll(theta: &Theta, data: &Dataset) -> Result<f64> {
    let objective = MleObjective::new(data)?;
    let z = log_partition(theta)?;
    Ok(z - dot(theta.values(), objective.empirical_statistics()))
}

pub fn nll_gradient(theta: &Theta, data: &Dataset) -> Result<Theta> {
    let objective = MleObjective::new(data)?;
    let mut grad = vec![0.0; objective.dim()];
    objective.gradient(theta.values(), &mut grad)?;
    Theta::from_values(theta.layout().clone(), grad)
}

/// Penalized maximum likelihood from `init` (the independence model if
/// `None`).
pub fn fit_mle<R: Regularizer + ?Sized>(
    data: &Dataset,
    penalty: &R,
    init: Option<&Theta>,
    config: &SolverConfig,
) -> Result<(Theta, FitResult)> {
    let objective = MleObjective::new(data)?;
    let start = match init {
        Some(t) => t.values().to_vec(),
        None => Theta::independence(objective.layout().clone()).into_values(),
    };
    let fit = solve(&objective, penalty, &start, config)?;
    let theta = Theta::from_values(objective.layout().clone(), fit.x.clone())?;
    Ok((theta, fit))
}
