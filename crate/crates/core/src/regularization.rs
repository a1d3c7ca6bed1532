//! Group-lasso penalty over edge groups, calibrated group weights, the
//! proximal operator, and the smallest penalty giving an empty graph.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ln, norm2, sqrt};
use crate::optimize::{Regularizer, SmoothObjective};
use crate::pseudolikelihood::PseudoLikelihood;
use crate::schema::Dataset;
use crate::theta::{EdgeGroup, GroupKind, Layout, Theta};

/// Weights below this are raised to it.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// `lambda * sum_g w_g ||theta_g||` over non-overlapping groups. Coordinates
/// outside every group are not penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub lambda: f64,
    groups: Vec<EdgeGroup>,
    weights: Vec<f64>,
    calibrated: bool,
}

impl PenaltySpec {
    pub fn new(lambda: f64, groups: Vec<EdgeGroup>, weights: Vec<f64>, calibrated: bool) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid("lambda must be finite and nonnegative".into()));
        }
        if groups.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "group weights",
                expected: groups.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid("group weights must be positive".into()));
        }
        Ok(Self {
            lambda,
            groups,
            weights,
            calibrated,
        })
    }

    /// Unit weights on every edge group of `layout` (feature groups included).
    pub fn uniform(layout: &Layout, lambda: f64) -> Result<Self> {
        let mut groups = layout.edge_groups();
        groups.extend(layout.feature_groups());
        let weights = vec![1.0; groups.len()];
        Self::new(lambda, groups, weights, false)
    }

    /// Edge groups weighted by `calibration`; feature groups of the
    /// conditional model, if any, get unit weight.
    pub fn calibrated(layout: &Layout, calibration: &Calibration, lambda: f64) -> Result<Self> {
        let mut groups = layout.edge_groups();
        if calibration.weights.len() != groups.len() {
            return Err(Error::DimensionMismatch {
                what: "calibration weights",
                expected: groups.len(),
                found: calibration.weights.len(),
            });
        }
        let mut weights = calibration.weights.clone();
        let feature_groups = layout.feature_groups();
        weights.extend(core::iter::repeat_n(1.0, feature_groups.len()));
        groups.extend(feature_groups);
        Self::new(lambda, groups, weights, true)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.lambda = lambda;
        out
    }

    pub fn groups(&self) -> &[EdgeGroup] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }
}

impl Regularizer for PenaltySpec {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda
            * self
                .groups
                .iter()
                .zip(&self.weights)
                .map(|(g, w)| w * g.norm(x))
                .sum::<f64>()
    }

    fn prox(&self, x: &mut [f64], step: f64) {
        if self.lambda == 0.0 {
            return;
        }
        for (g, w) in self.groups.iter().zip(&self.weights) {
            group_soft_threshold(&mut x[g.range.clone()], step * self.lambda * w);
        }
    }

    fn group_norms(&self, x: &[f64]) -> Vec<f64> {
        self.groups.iter().map(|g| g.norm(x)).collect()
    }
}

pub fn penalty_value(theta: &Theta, spec: &PenaltySpec) -> f64 {
    Regularizer::value(spec, theta.values())
}

/// Proximal map of `t * penalty` applied to a copy of `point`.
pub fn prox(point: &[f64], step: f64, spec: &PenaltySpec) -> Vec<f64> {
    let mut out = point.to_vec();
    spec.prox(&mut out, step);
    out
}

pub fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Scales `block` by `max(0, 1 - threshold / ||block||)`; blocks with norm at
/// or below the threshold become exactly zero.
pub fn group_soft_threshold(block: &mut [f64], threshold: f64) {
    if block.len() == 1 {
        block[0] = soft_threshold(block[0], threshold);
        return;
    }
    let norm = norm2(block);
    if norm <= threshold {
        block.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let scale = 1.0 - threshold / norm;
        block.iter_mut().for_each(|v| *v *= scale);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationWarning {
    /// Continuous column with zero empirical variance.
    ConstantColumn(usize),
    /// Categorical variable observed at a single level only.
    SingleLevel(usize),
}

/// Weights aligned with [`Layout::edge_groups`]:
/// `w_st = sigma_s sigma_t`, `w_sj = sigma_s sqrt(sum_a p_a (1 - p_a))`,
/// `w_rj = sqrt(sum_a p_a (1 - p_a) * sum_b q_b (1 - q_b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub weights: Vec<f64>,
    pub sd: Vec<f64>,
    pub level_spread: Vec<f64>,
    pub warnings: Vec<CalibrationWarning>,
}

/// Computes calibrated weights from sample standard deviations (denominator
/// `n - 1`) and empirical level frequencies.
pub fn calibrated_weights(data: &Dataset) -> Result<Calibration> {
    if data.n() < 2 {
        return Err(Error::Invalid("calibration needs at least 2 samples".into()));
    }
    let schema = data.schema();
    let mut warnings = Vec::new();
    let sd: Vec<f64> = (0..schema.p())
        .map(|s| {
            let v = sqrt(data.column_variance(s, 1));
            if v == 0.0 {
                warnings.push(CalibrationWarning::ConstantColumn(s));
            }
            v
        })
        .collect();
    let level_spread: Vec<f64> = (0..schema.q())
        .map(|r| {
            let spread: f64 = data.level_frequencies(r).iter().map(|p| p * (1.0 - p)).sum();
            if spread == 0.0 {
                warnings.push(CalibrationWarning::SingleLevel(r));
            }
            spread
        })
        .collect();
    let weights = weights_from_moments(&Layout::new(schema), &sd, &level_spread);
    Ok(Calibration {
        weights,
        sd,
        level_spread,
        warnings,
    })
}

/// Calibrated weights from given standard deviations and per-variable
/// `sum_a p_a (1 - p_a)` values, floored at [`WEIGHT_FLOOR`].
pub fn weights_from_moments(layout: &Layout, sd: &[f64], level_spread: &[f64]) -> Vec<f64> {
    layout
        .edge_groups()
        .iter()
        .map(|g| {
            let w = match g.kind {
                GroupKind::ContinuousContinuous => sd[g.u] * sd[g.v],
                GroupKind::ContinuousDiscrete => sd[g.u] * sqrt(level_spread[g.v]),
                GroupKind::DiscreteDiscrete => sqrt(level_spread[g.u] * level_spread[g.v]),
                GroupKind::FeatureContinuous | GroupKind::FeatureDiscrete => 1.0,
            };
            w.max(WEIGHT_FLOOR)
        })
        .collect()
}

/// Probability floor used for levels never observed in the data.
const FREQUENCY_FLOOR: f64 = 1e-12;

/// Closed-form minimizer of the objective with every edge group held at zero:
/// `beta_ss = 1 / var(x_s)`, `alpha_s = mean(x_s) / var(x_s)` (denominator `n`)
/// and `phi_rr(a, a) = log p_a`.
pub fn independence_fit(data: &Dataset, layout: &Layout) -> Theta {
    let mut theta = Theta::zeros(layout.clone());
    for s in 0..layout.p() {
        let mean = data.column_mean(s);
        let var = data.column_variance(s, 0).max(WEIGHT_FLOOR);
        theta.set_beta(s, s, 1.0 / var);
        theta.set_alpha(s, mean / var);
    }
    for r in 0..layout.q() {
        let freq = data.level_frequencies(r);
        for (d, p) in theta.phi_node_mut(r).iter_mut().zip(freq) {
            *d = ln(p.max(FREQUENCY_FLOOR));
        }
    }
    theta
}

#[derive(Debug, Clone)]
pub struct LambdaMax {
    pub value: f64,
    /// Index into the penalty's groups attaining the maximum.
    pub group: Option<usize>,
    /// The node-only fit at which the gradient was evaluated.
    pub theta: Theta,
}

/// Smallest `lambda` for which the node-only fit is optimal for the
/// normalized pseudolikelihood: `max_g ||grad_g|| / w_g`.
pub fn lambda_max(data: &Dataset, spec: &PenaltySpec) -> Result<LambdaMax> {
    let objective = PseudoLikelihood::new(data);
    let theta = independence_fit(data, objective.layout());
    lambda_max_at(&objective, spec, theta)
}

/// `max_g ||grad_g f(theta)|| / w_g` at a given node-only point.
pub fn lambda_max_at<F: SmoothObjective + ?Sized>(
    objective: &F,
    spec: &PenaltySpec,
    theta: Theta,
) -> Result<LambdaMax> {
    let mut grad = vec![0.0; objective.dim()];
    objective.gradient(theta.values(), &mut grad)?;
    let mut best = (0.0, None);
    for (i, (g, w)) in spec.groups().iter().zip(spec.weights()).enumerate() {
        let ratio = g.norm(&grad) / w;
        if ratio > best.0 {
            best = (ratio, Some(i));
        }
    }
    Ok(LambdaMax {
        value: best.0,
        group: best.1,
        theta,
    })
}
