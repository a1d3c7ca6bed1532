//! Negative log pseudolikelihood: the sum over samples of the negative log
//! conditional of every variable given all the others.
//!
//! Each continuous term is written as a function of two quantities, the affine
//! form `w` (linear in `alpha`, `rho`, off-diagonal `beta`, and `gamma`) and
//! the precision `v = beta_ss`:
//!
//! ```text
//! -log p(x_s | rest) = 1/2 log(2 pi) - 1/2 log v + (w - v x_s)^2 / (2 v)
//! ```
//!
//! which is jointly convex on `v > 0`. Each categorical term is a multiclass
//! logistic loss on logits that are linear in the parameters. Value, gradient,
//! Hessian-vector products and the dense Hessian all walk the same linear
//! forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::math::{ln, softmax_into, LN_2PI};
use crate::model::{visit_gaussian_form, visit_logit_form};
use crate::optimize::{solve, FitResult, Regularizer, SmoothObjective, SolverConfig};
use crate::schema::{Dataset, FeatureMatrix, Observation};
use crate::theta::{Layout, Theta, Variable};

/// Dense Hessians are only materialized up to this many parameters.
pub const DENSE_HESSIAN_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Nodes {
    All,
    One(Variable),
}

impl Nodes {
    fn continuous(self, p: usize) -> core::ops::Range<usize> {
        match self {
            Nodes::All => 0..p,
            Nodes::One(Variable::Continuous(s)) => s..s + 1,
            Nodes::One(Variable::Categorical(_)) => 0..0,
        }
    }

    fn categorical(self, q: usize) -> core::ops::Range<usize> {
        match self {
            Nodes::All => 0..q,
            Nodes::One(Variable::Categorical(r)) => r..r + 1,
            Nodes::One(Variable::Continuous(_)) => 0..0,
        }
    }
}

/// Objective over one dataset, normalized by `n` unless built with
/// [`PseudoLikelihood::unnormalized`].
#[derive(Debug, Clone)]
pub struct PseudoLikelihood<'a> {
    data: &'a Dataset,
    features: Option<&'a FeatureMatrix>,
    layout: Layout,
    sample_weights: Option<Vec<f64>>,
    normalize: bool,
}

enum Want<'b> {
    Value,
    Gradient(&'b mut [f64]),
    HessVec(&'b [f64], &'b mut [f64]),
    Dense(&'b mut DenseMatrix),
}

impl<'a> PseudoLikelihood<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self {
            data,
            features: None,
            layout: Layout::new(data.schema()),
            sample_weights: None,
            normalize: true,
        }
    }

    /// Objective of the conditional model; node potentials are shifted by the
    /// per-sample features.
    pub fn with_features(data: &'a Dataset, features: &'a FeatureMatrix) -> Result<Self> {
        if features.n() != data.n() {
            return Err(Error::DimensionMismatch {
                what: "feature rows",
                expected: data.n(),
                found: features.n(),
            });
        }
        Ok(Self {
            data,
            features: Some(features),
            layout: Layout::with_features(data.schema(), features.count()),
            sample_weights: None,
            normalize: true,
        })
    }

    /// Raw sums over samples instead of averages.
    pub fn unnormalized(mut self) -> Self {
        self.normalize = false;
        self
    }

    pub fn with_sample_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.data.n() {
            return Err(Error::DimensionMismatch {
                what: "sample weights",
                expected: self.data.n(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Invalid("sample weights must be finite and nonnegative".into()));
        }
        self.sample_weights = Some(weights);
        Ok(self)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn is_normalized(&self) -> bool {
        self.normalize
    }

    fn scale_denominator(&self) -> f64 {
        if !self.normalize {
            return 1.0;
        }
        self.sample_weights
            .as_ref()
            .map_or(self.data.n() as f64, |w| w.iter().sum())
    }

    fn features_of(&self, i: usize) -> &[f64] {
        self.features.map_or(&[], |f| f.row(i))
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.layout.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.layout.dim(),
                found: theta.len(),
            });
        }
        Ok(())
    }

    fn check_domain(&self, theta: &[f64], nodes: Nodes) -> Result<()> {
        for s in nodes.continuous(self.layout.p()) {
            let v = theta[self.layout.beta_index(s, s)];
            if !(v > 0.0) {
                return Err(Error::NonPositivePrecision { node: s, value: v });
            }
        }
        Ok(())
    }

    /// Objective value, `+inf` when some `beta_ss <= 0`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        if self.check_dim(theta).is_err() || self.check_domain(theta, Nodes::All).is_err() {
            return f64::INFINITY;
        }
        self.walk(theta, Nodes::All, Want::Value)
    }

    pub fn value_of(&self, theta: &Theta) -> f64 {
        self.value(theta.values())
    }

    /// Writes the gradient into `grad` and returns the objective value.
    pub fn gradient(&self, theta: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.node_gradient(theta, Nodes::All, grad)
    }

    pub fn gradient_of(&self, theta: &Theta) -> Result<Theta> {
        let mut g = vec![0.0; self.layout.dim()];
        self.gradient(theta.values(), &mut g)?;
        Theta::from_values(self.layout.clone(), g)
    }

    pub fn hessian_vec(&self, theta: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.node_hessian_vec(theta, Nodes::All, v, out)
    }

    /// Dense Hessian; refuses dimensions above [`DENSE_HESSIAN_LIMIT`].
    pub fn dense_hessian(&self, theta: &[f64]) -> Result<DenseMatrix> {
        self.node_dense_hessian(theta, Nodes::All)
    }

    /// Sum over samples of one variable's negative log conditional (scaled
    /// like the full objective).
    pub fn node_value(&self, theta: &[f64], node: Variable) -> f64 {
        let nodes = Nodes::One(node);
        if self.check_dim(theta).is_err() || self.check_domain(theta, nodes).is_err() {
            return f64::INFINITY;
        }
        self.walk(theta, nodes, Want::Value)
    }

    pub(crate) fn node_gradient(&self, theta: &[f64], nodes: Nodes, grad: &mut [f64]) -> Result<f64> {
        self.check_dim(theta)?;
        self.check_domain(theta, nodes)?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        Ok(self.walk(theta, nodes, Want::Gradient(grad)))
    }

    pub(crate) fn node_hessian_vec(&self, theta: &[f64], nodes: Nodes, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(theta)?;
        self.check_domain(theta, nodes)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        self.walk(theta, nodes, Want::HessVec(v, out));
        Ok(())
    }

    pub(crate) fn node_dense_hessian(&self, theta: &[f64], nodes: Nodes) -> Result<DenseMatrix> {
        self.check_dim(theta)?;
        self.check_domain(theta, nodes)?;
        let d = self.layout.dim();
        if d > DENSE_HESSIAN_LIMIT {
            return Err(Error::Solver(crate::error::SolverError::DimensionTooLarge {
                dim: d,
                limit: DENSE_HESSIAN_LIMIT,
            }));
        }
        let mut h = DenseMatrix::zeros(d, d);
        self.walk(theta, nodes, Want::Dense(&mut h));
        Ok(h)
    }

    /// One pass over samples and selected conditional terms. Returns the value.
    fn walk(&self, theta: &[f64], nodes: Nodes, mut want: Want<'_>) -> f64 {
        let layout = &self.layout;
        let (p, q) = (layout.p(), layout.q());
        let max_levels = layout.levels().iter().copied().max().unwrap_or(0);
        let mut logits = vec![0.0; max_levels];
        let mut probs = vec![0.0; max_levels];
        let mut dlogits = vec![0.0; max_levels];
        // sparse coefficient rows for the dense Hessian
        let mut form: Vec<(usize, f64)> = Vec::new();
        let mut forms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); max_levels];

        let denom = self.scale_denominator();
        let mut total = 0.0;
        for i in 0..self.data.n() {
            let w = self.sample_weights.as_ref().map_or(1.0, |w| w[i]);
            let c = if denom > 0.0 { w / denom } else { 0.0 };
            if c == 0.0 {
                continue;
            }
            let obs: Observation<'_> = self.data.row(i);
            let f = self.features_of(i);

            for s in nodes.continuous(p) {
                let vi = layout.beta_index(s, s);
                let v = theta[vi];
                let xs = obs.x[s];
                let mut w = 0.0;
                visit_gaussian_form(layout, s, obs, f, |k, a| w += a * theta[k]);
                let resid = w - v * xs;
                total += c * (0.5 * LN_2PI - 0.5 * ln(v) + resid * resid / (2.0 * v));

                match &mut want {
                    Want::Value => {}
                    Want::Gradient(grad) => {
                        let dw = w / v - xs;
                        let dv = -0.5 / v - w * w / (2.0 * v * v) + 0.5 * xs * xs;
                        visit_gaussian_form(layout, s, obs, f, |k, a| grad[k] += c * dw * a);
                        grad[vi] += c * dv;
                    }
                    Want::HessVec(dir, out) => {
                        let (hww, hwv, hvv) = gaussian_curvature(w, v);
                        let mut dw = 0.0;
                        visit_gaussian_form(layout, s, obs, f, |k, a| dw += a * dir[k]);
                        let dv = dir[vi];
                        let gw = c * (hww * dw + hwv * dv);
                        visit_gaussian_form(layout, s, obs, f, |k, a| out[k] += gw * a);
                        out[vi] += c * (hwv * dw + hvv * dv);
                    }
                    Want::Dense(h) => {
                        let (hww, hwv, hvv) = gaussian_curvature(w, v);
                        form.clear();
                        visit_gaussian_form(layout, s, obs, f, |k, a| form.push((k, a)));
                        for &(k1, a1) in &form {
                            for &(k2, a2) in &form {
                                h[(k1, k2)] += c * hww * a1 * a2;
                            }
                            h[(k1, vi)] += c * hwv * a1;
                            h[(vi, k1)] += c * hwv * a1;
                        }
                        h[(vi, vi)] += c * hvv;
                    }
                }
            }

            for r in nodes.categorical(q) {
                let levels = layout.levels()[r];
                let yr = obs.y[r];
                for (k, lg) in logits.iter_mut().enumerate().take(levels) {
                    let mut acc = 0.0;
                    visit_logit_form(layout, r, k, obs, f, |idx, a| acc += a * theta[idx]);
                    *lg = acc;
                }
                let lse = softmax_into(&logits[..levels], &mut probs[..levels]);
                total += c * (lse - logits[yr]);

                match &mut want {
                    Want::Value => {}
                    Want::Gradient(grad) => {
                        for k in 0..levels {
                            let gk = c * (probs[k] - if k == yr { 1.0 } else { 0.0 });
                            visit_logit_form(layout, r, k, obs, f, |idx, a| grad[idx] += gk * a);
                        }
                    }
                    Want::HessVec(dir, out) => {
                        for (k, d) in dlogits.iter_mut().enumerate().take(levels) {
                            let mut acc = 0.0;
                            visit_logit_form(layout, r, k, obs, f, |idx, a| acc += a * dir[idx]);
                            *d = acc;
                        }
                        let mean: f64 = (0..levels).map(|k| probs[k] * dlogits[k]).sum();
                        for k in 0..levels {
                            let hk = c * probs[k] * (dlogits[k] - mean);
                            visit_logit_form(layout, r, k, obs, f, |idx, a| out[idx] += hk * a);
                        }
                    }
                    Want::Dense(h) => {
                        for (k, row) in forms.iter_mut().enumerate().take(levels) {
                            row.clear();
                            visit_logit_form(layout, r, k, obs, f, |idx, a| row.push((idx, a)));
                        }
                        for k1 in 0..levels {
                            for k2 in 0..levels {
                                let cov = probs[k1] * (if k1 == k2 { 1.0 } else { 0.0 } - probs[k2]);
                                if cov == 0.0 {
                                    continue;
                                }
                                for &(i1, a1) in &forms[k1] {
                                    for &(i2, a2) in &forms[k2] {
                                        h[(i1, i2)] += c * cov * a1 * a2;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        total
    }
}

/// Second derivatives of `-1/2 log v + (w - v x)^2 / (2 v)` in `(w, v)`.
/// They do not depend on `x`.
fn gaussian_curvature(w: f64, v: f64) -> (f64, f64, f64) {
    (1.0 / v, -w / (v * v), 0.5 / (v * v) + w * w / (v * v * v))
}

impl SmoothObjective for PseudoLikelihood<'_> {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        PseudoLikelihood::value(self, x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        PseudoLikelihood::gradient(self, x, grad)
    }

    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        PseudoLikelihood::hessian_vec(self, x, v, out)
    }

    fn dense_hessian(&self, x: &[f64]) -> Result<DenseMatrix> {
        PseudoLikelihood::dense_hessian(self, x)
    }
}

/// Penalized pseudolikelihood fit from `init` (the independence model if
/// `None`).
pub fn fit_pl<R: Regularizer + ?Sized>(
    objective: &PseudoLikelihood<'_>,
    penalty: &R,
    init: Option<&Theta>,
    config: &SolverConfig,
) -> Result<(Theta, FitResult)> {
    let start = match init {
        Some(t) => {
            objective.check_dim(t.values())?;
            t.values().to_vec()
        }
        None => Theta::independence(objective.layout().clone()).into_values(),
    };
    let fit = solve(objective, penalty, &start, config)?;
    let theta = Theta::from_values(objective.layout().clone(), fit.x.clone())?;
    Ok((theta, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Schema;

    #[test]
    fn standard_normal_at_zero() {
        let data = Dataset::new(Schema::new(1, vec![]).unwrap(), vec![0.0], vec![]).unwrap();
        let pl = PseudoLikelihood::new(&data);
        let theta = Theta::independence(pl.layout().clone());
        assert!((pl.value_of(&theta) - 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn uniform_binary_contributes_log2() {
        let data = Dataset::new(Schema::new(1, vec![2]).unwrap(), vec![0.0, 0.0], vec![0, 1]).unwrap();
        let pl = PseudoLikelihood::new(&data);
        let theta = Theta::independence(pl.layout().clone());
        let expected = 0.5 * LN_2PI + ln(2.0);
        assert!((pl.value_of(&theta) - expected).abs() < 1e-15);
        let raw = pl.clone().unnormalized();
        assert!((raw.value_of(&theta) - 2.0 * expected).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_precision_is_infinite() {
        let data = Dataset::new(Schema::new(2, vec![]).unwrap(), vec![0.1, 0.2], vec![]).unwrap();
        let pl = PseudoLikelihood::new(&data);
        let mut theta = Theta::independence(pl.layout().clone());
        theta.set_beta(1, 1, 0.0);
        assert_eq!(pl.value_of(&theta), f64::INFINITY);
        let mut g = vec![0.0; pl.layout().dim()];
        assert!(matches!(
            pl.gradient(theta.values(), &mut g),
            Err(Error::NonPositivePrecision { node: 1, .. })
        ));
    }

    #[test]
    fn sample_weights_scale_terms() {
        let data = Dataset::new(Schema::new(1, vec![]).unwrap(), vec![0.0, 1.0], vec![]).unwrap();
        let theta = Theta::independence(Layout::new(data.schema()));
        let weighted = PseudoLikelihood::new(&data)
            .unnormalized()
            .with_sample_weights(vec![2.0, 0.0])
            .unwrap();
        assert!((weighted.value_of(&theta) - LN_2PI).abs() < 1e-14);
        assert!(PseudoLikelihood::new(&data).with_sample_weights(vec![1.0]).is_err());
    }
}
