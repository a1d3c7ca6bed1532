//! Conditional model of `(x, y)` given per-sample features `f`: the node
//! potentials become `alpha_s + sum_l gamma_ls f_l` and
//! `phi_rr(k, k) + sum_l eta_lr(k) f_l`. Trained by pseudolikelihood.
//!
//! Parameters are an ordinary [`Theta`] over [`Layout::with_features`].

use alloc::vec;

use crate::error::Result;
use crate::optimize::{FitResult, Regularizer, SolverConfig};
use crate::pseudolikelihood::{fit_pl, PseudoLikelihood};
use crate::regularization::{independence_fit, lambda_max_at, Calibration, LambdaMax, PenaltySpec};
use crate::schema::{Dataset, FeatureMatrix};
use crate::theta::{Layout, Theta};

/// Pseudolikelihood of the conditional model.
pub fn crf_objective<'a>(data: &'a Dataset, features: &'a FeatureMatrix) -> Result<PseudoLikelihood<'a>> {
    PseudoLikelihood::with_features(data, features)
}

pub fn crf_pl_value(theta: &Theta, data: &Dataset, features: &FeatureMatrix) -> Result<f64> {
    Ok(crf_objective(data, features)?.value(theta.values()))
}

pub fn crf_pl_gradient(theta: &Theta, data: &Dataset, features: &FeatureMatrix) -> Result<Theta> {
    crf_objective(data, features)?.gradient_of(theta)
}

/// Edge groups with calibrated (or unit) weights, plus unit-weight `gamma`
/// and `eta` groups.
pub fn crf_penalty(layout: &Layout, calibration: Option<&Calibration>, lambda: f64) -> Result<PenaltySpec> {
    match calibration {
        Some(c) => PenaltySpec::calibrated(layout, c, lambda),
        None => PenaltySpec::uniform(layout, lambda),
    }
}

/// Smallest `lambda` at which edges and feature coefficients are all zero.
pub fn crf_lambda_max(data: &Dataset, features: &FeatureMatrix, spec: &PenaltySpec) -> Result<LambdaMax> {
    let objective = crf_objective(data, features)?;
    let theta = independence_fit(data, objective.layout());
    lambda_max_at(&objective, spec, theta)
}

pub fn fit_crf<R: Regularizer + ?Sized>(
    data: &Dataset,
    features: &FeatureMatrix,
    penalty: &R,
    init: Option<&Theta>,
    config: &SolverConfig,
) -> Result<(Theta, FitResult)> {
    let objective = crf_objective(data, features)?;
    fit_pl(&objective, penalty, init, config)
}

/// Drops the feature blocks of a conditional-model parameter vector.
pub fn without_features(theta: &Theta) -> Theta {
    let layout = Layout::new(theta.schema());
    let values = theta.values()[..layout.dim()].to_vec();
    Theta::from_values(layout, values).expect("joint parameters form a prefix")
}

/// Embeds joint-model parameters into the conditional layout with zero
/// feature coefficients.
pub fn with_zero_features(theta: &Theta, features: usize) -> Theta {
    let layout = Layout::with_features(theta.schema(), features);
    let mut values = vec![0.0; layout.dim()];
    values[..theta.values().len()].copy_from_slice(theta.values());
    Theta::from_values(layout, values).expect("dimensions match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Schema;

    #[test]
    fn zero_features_reduce_to_joint_objective() {
        let schema = Schema::new(1, vec![2]).unwrap();
        let data = Dataset::new(schema, vec![0.4, -1.0, 0.3], vec![0, 1, 1]).unwrap();
        let features = FeatureMatrix::empty(3);
        let mut theta = Theta::independence(Layout::new(data.schema()));
        theta.rho_mut(0, 0).copy_from_slice(&[0.2, -0.5]);
        let joint = PseudoLikelihood::new(&data);
        let conditional = crf_objective(&data, &features).unwrap();
        assert_eq!(joint.value(theta.values()), conditional.value(theta.values()));
        let embedded = with_zero_features(&theta, 0);
        assert_eq!(without_features(&embedded), theta);
    }
}
