#![allow(dead_code)]

pub mod oracles;

use mixgm::sampler::sample_joint;
use mixgm::{Dataset, FeatureMatrix, Layout, Schema, Theta};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p <= max_p`, `q <= max_q`, levels in `2..=max_l`, at least one variable.
pub fn random_schema<R: Rng>(rng: &mut R, max_p: usize, max_q: usize, max_l: usize) -> Schema {
    loop {
        let p = rng.random_range(0..=max_p);
        let q = rng.random_range(0..=max_q);
        if p + q == 0 {
            continue;
        }
        let levels = (0..q).map(|_| rng.random_range(2..=max_l)).collect();
        return Schema::new(p, levels).unwrap();
    }
}

/// Random parameters with a diagonally dominant `B`.
pub fn random_theta<R: Rng>(rng: &mut R, layout: &Layout, scale: f64) -> Theta {
    let mut theta = Theta::zeros(layout.clone());
    let p = layout.p();
    for v in theta.values_mut() {
        *v = scale * (rng.random::<f64>() * 2.0 - 1.0);
    }
    for s in 0..p {
        for t in (s + 1)..p {
            theta.set_beta(s, t, 0.3 * (rng.random::<f64>() * 2.0 - 1.0) / p as f64);
        }
        theta.set_beta(s, s, 0.7 + rng.random::<f64>());
    }
    theta
}

/// `n` samples drawn from `theta`.
pub fn sampled<R: Rng>(rng: &mut R, theta: &Theta, n: usize) -> Dataset {
    sample_joint(theta, n, rng).unwrap()
}

/// Random schema, parameters and data from them.
pub fn random_instance(seed: u64, max_p: usize, max_q: usize, max_l: usize, n: usize) -> (Theta, Dataset) {
    let mut r = rng(seed);
    let schema = random_schema(&mut r, max_p, max_q, max_l);
    let layout = Layout::new(&schema);
    let theta = random_theta(&mut r, &layout, 0.5);
    let data = sampled(&mut r, &theta, n);
    (theta, data)
}

pub fn random_features<R: Rng>(rng: &mut R, n: usize, f: usize) -> FeatureMatrix {
    let values = (0..n * f).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    FeatureMatrix::new(n, f, values).unwrap()
}

/// Central differences of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let plus = f(&y);
        y[i] = x[i] - h;
        let minus = f(&y);
        y[i] = x[i];
        g[i] = (plus - minus) / (2.0 * h);
    }
    g
}

/// `max |a - b| / max(max |b|, 1e-8)`.
pub fn sup_rel_error(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1e-8);
    num / den
}

/// Eigenvalues of a symmetric row-major matrix.
pub fn symmetric_eigenvalues(n: usize, data: &[f64]) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, data);
    m.symmetric_eigen().eigenvalues.iter().cloned().collect()
}
