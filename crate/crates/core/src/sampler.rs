//! Draws from the joint model. The discrete part is sampled first from its
//! marginal, which integrates the Gaussian out in closed form; `x` then
//! follows `N(B^{-1} gamma(y), B^{-1})`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::math::{exp, log_sum_exp};
use crate::schema::Dataset;
use crate::theta::Theta;

/// Largest discrete state space tabulated for sampling.
pub const SAMPLER_ENUMERATION_CAP: usize = 1_000_000;

/// `B`, its Cholesky factor and inverse, computed once per parameter vector.
#[derive(Debug, Clone)]
pub struct GaussianPart {
    chol: Option<Cholesky>,
    inverse: DenseMatrix,
    p: usize,
}

impl GaussianPart {
    /// Fails with [`Error::NotPositiveDefinite`] unless `B` is positive definite.
    pub fn new(theta: &Theta) -> Result<Self> {
        let p = theta.layout().p();
        if p == 0 {
            return Ok(Self {
                chol: None,
                inverse: DenseMatrix::zeros(0, 0),
                p,
            });
        }
        let chol = Cholesky::new(&theta.precision_matrix()).ok_or(Error::NotPositiveDefinite)?;
        let inverse = chol.inverse();
        Ok(Self {
            chol: Some(chol),
            inverse,
            p,
        })
    }

    pub fn covariance(&self) -> &DenseMatrix {
        &self.inverse
    }

    pub fn log_det(&self) -> f64 {
        self.chol.as_ref().map_or(0.0, Cholesky::log_det)
    }

    /// Writes `B^{-1} gamma` into `mean` and returns `gamma^T B^{-1} gamma`.
    pub fn mean_into(&self, gamma: &[f64], mean: &mut [f64]) -> f64 {
        if self.p == 0 {
            return 0.0;
        }
        self.inverse.mul_vec(gamma, mean);
        crate::math::dot(gamma, mean)
    }

    /// `x = mean + L^{-T} z` with standard normal `z`.
    fn draw<R: Rng + ?Sized>(&self, mean: &[f64], rng: &mut R, out: &mut [f64]) {
        if let Some(chol) = &self.chol {
            for o in out.iter_mut() {
                *o = StandardNormal.sample(rng);
            }
            chol.solve_upper(out);
            for (o, m) in out.iter_mut().zip(mean) {
                *o += m;
            }
        }
    }
}

/// Unnormalized discrete log marginal
/// `sum_{r<=j} phi_rj(y_r, y_j) + 1/2 gamma(y)^T B^{-1} gamma(y)`.
pub(crate) fn discrete_log_weight(
    theta: &Theta,
    gauss: &GaussianPart,
    y: &[usize],
    gamma: &mut [f64],
    mean: &mut [f64],
) -> f64 {
    let q = y.len();
    let mut total = 0.0;
    for r in 0..q {
        for j in r..q {
            total += theta.phi(r, j, y[r], y[j]);
        }
    }
    theta.gaussian_offset(y, gamma);
    total + 0.5 * gauss.mean_into(gamma, mean)
}

/// Mixed-radix state index with the first variable varying slowest.
pub(crate) fn decode_state(levels: &[usize], mut index: usize, y: &mut [usize]) {
    for r in (0..levels.len()).rev() {
        y[r] = index % levels[r];
        index /= levels[r];
    }
}

pub(crate) fn encode_state(levels: &[usize], y: &[usize]) -> usize {
    y.iter().zip(levels).fold(0, |acc, (&v, &l)| acc * l + v)
}

/// Exact `p(y)` over every joint discrete state.
#[derive(Debug, Clone)]
pub struct DiscreteMarginal {
    levels: Vec<usize>,
    log_weights: Vec<f64>,
    probabilities: Vec<f64>,
    log_normalizer: f64,
}

impl DiscreteMarginal {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Unnormalized log weights, one per state.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `log sum_y exp(log weight)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn state(&self, index: usize) -> Vec<usize> {
        let mut y = vec![0; self.levels.len()];
        decode_state(&self.levels, index, &mut y);
        y
    }

    pub fn index_of(&self, y: &[usize]) -> usize {
        encode_state(&self.levels, y)
    }

    pub fn probability(&self, y: &[usize]) -> f64 {
        self.probabilities[self.index_of(y)]
    }

    fn sample_index<R: Rng + ?Sized>(&self, cdf: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random();
        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }
}

pub fn discrete_marginal_exact(theta: &Theta) -> Result<DiscreteMarginal> {
    discrete_marginal_with_cap(theta, SAMPLER_ENUMERATION_CAP)
}

pub fn discrete_marginal_with_cap(theta: &Theta, cap: usize) -> Result<DiscreteMarginal> {
    let states = theta.schema().check_enumerable(cap)?;
    let gauss = GaussianPart::new(theta)?;
    Ok(marginal_from_parts(theta, &gauss, states))
}

pub(crate) fn marginal_from_parts(theta: &Theta, gauss: &GaussianPart, states: usize) -> DiscreteMarginal {
    let levels = theta.schema().levels().to_vec();
    let p = theta.layout().p();
    let mut y = vec![0; levels.len()];
    let mut gamma = vec![0.0; p];
    let mut mean = vec![0.0; p];
    let log_weights: Vec<f64> = (0..states)
        .map(|k| {
            decode_state(&levels, k, &mut y);
            discrete_log_weight(theta, gauss, &y, &mut gamma, &mut mean)
        })
        .collect();
    let log_normalizer = log_sum_exp(&log_weights);
    let probabilities = log_weights.iter().map(|w| exp(w - log_normalizer)).collect();
    DiscreteMarginal {
        levels,
        log_weights,
        probabilities,
        log_normalizer,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thin: 10,
        }
    }
}

/// Single-site Gibbs over `y` with `x` integrated out. Returns `n` states,
/// row-major `n x q`, taken every `thin` sweeps after `burn_in` sweeps.
pub fn gibbs_discrete<R: Rng + ?Sized>(
    theta: &Theta,
    n: usize,
    config: GibbsConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let gauss = GaussianPart::new(theta)?;
    let levels = theta.schema().levels().to_vec();
    let q = levels.len();
    let p = theta.layout().p();
    let mut y: Vec<usize> = levels.iter().map(|&l| rng.random_range(0..l)).collect();
    let mut gamma = vec![0.0; p];
    let mut mean = vec![0.0; p];
    let mut logits = Vec::new();
    let mut out = Vec::with_capacity(n * q);
    let thin = config.thin.max(1);
    let mut sweep = |y: &mut Vec<usize>, rng: &mut R| {
        for r in 0..q {
            logits.clear();
            for k in 0..levels[r] {
                y[r] = k;
                logits.push(discrete_log_weight(theta, &gauss, y, &mut gamma, &mut mean));
            }
            let lse = log_sum_exp(&logits);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            y[r] = levels[r] - 1;
            for (k, l) in logits.iter().enumerate() {
                acc += exp(l - lse);
                if u < acc {
                    y[r] = k;
                    break;
                }
            }
        }
    };
    for _ in 0..config.burn_in {
        sweep(&mut y, rng);
    }
    for _ in 0..n {
        for _ in 0..thin {
            sweep(&mut y, rng);
        }
        out.extend_from_slice(&y);
    }
    Ok(out)
}

/// How [`JointSampler`] draws `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscreteMethod {
    /// Inverse CDF on the tabulated marginal.
    Exact,
    Gibbs(GibbsConfig),
}

/// Reusable sampler for one parameter vector.
#[derive(Debug, Clone)]
pub struct JointSampler<'a> {
    theta: &'a Theta,
    gauss: GaussianPart,
    marginal: Option<(DiscreteMarginal, Vec<f64>)>,
    gibbs: GibbsConfig,
}

impl<'a> JointSampler<'a> {
    /// Tabulates the discrete marginal when the state space is within
    /// [`SAMPLER_ENUMERATION_CAP`], otherwise falls back to Gibbs with
    /// default settings.
    pub fn new(theta: &'a Theta) -> Result<Self> {
        let method = match theta.schema().check_enumerable(SAMPLER_ENUMERATION_CAP) {
            Ok(_) => DiscreteMethod::Exact,
            Err(Error::EnumerationCap { .. } | Error::StateSpaceOverflow) => {
                DiscreteMethod::Gibbs(GibbsConfig::default())
            }
            Err(e) => return Err(e),
        };
        Self::with_method(theta, method)
    }

    pub fn with_method(theta: &'a Theta, method: DiscreteMethod) -> Result<Self> {
        if let Some(s) = theta.first_nonpositive_precision() {
            return Err(Error::NonPositivePrecision {
                node: s,
                value: theta.beta(s, s),
            });
        }
        let gauss = GaussianPart::new(theta)?;
        let (marginal, gibbs) = match method {
            DiscreteMethod::Exact => {
                let states = theta.schema().check_enumerable(SAMPLER_ENUMERATION_CAP)?;
                let m = marginal_from_parts(theta, &gauss, states);
                let mut acc = 0.0;
                let cdf = m
                    .probabilities()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                (Some((m, cdf)), GibbsConfig::default())
            }
            DiscreteMethod::Gibbs(cfg) => (None, cfg),
        };
        Ok(Self {
            theta,
            gauss,
            marginal,
            gibbs,
        })
    }

    pub fn marginal(&self) -> Option<&DiscreteMarginal> {
        self.marginal.as_ref().map(|(m, _)| m)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        let schema = self.theta.schema().clone();
        let (p, q) = (schema.p(), schema.q());
        let ys = match &self.marginal {
            Some((m, cdf)) => {
                let mut ys = Vec::with_capacity(n * q);
                let mut y = vec![0; q];
                for _ in 0..n {
                    decode_state(&m.levels, m.sample_index(cdf, rng), &mut y);
                    ys.extend_from_slice(&y);
                }
                ys
            }
            None => gibbs_discrete(self.theta, n, self.gibbs, rng)?,
        };
        let mut xs = vec![0.0; n * p];
        let mut gamma = vec![0.0; p];
        let mut mean = vec![0.0; p];
        for i in 0..n {
            self.theta.gaussian_offset(&ys[i * q..(i + 1) * q], &mut gamma);
            self.gauss.mean_into(&gamma, &mut mean);
            self.gauss.draw(&mean, rng, &mut xs[i * p..(i + 1) * p]);
        }
        Dataset::new(schema, xs, ys)
    }
}

pub fn sample_joint<R: Rng + ?Sized>(theta: &Theta, n: usize, rng: &mut R) -> Result<Dataset> {
    JointSampler::new(theta)?.sample(n, rng)
}

/// [`sample_joint`] driven by a ChaCha8 stream seeded with `seed`.
pub fn sample_joint_seeded(theta: &Theta, n: usize, seed: u64) -> Result<Dataset> {
    sample_joint(theta, n, &mut ChaCha8Rng::seed_from_u64(seed))
}
