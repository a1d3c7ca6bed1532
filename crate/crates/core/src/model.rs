//! Densities and conditionals of the pairwise mixed model.
//!
//! The unnormalized log density of an observation `(x, y)` is
//!
//! ```text
//! -1/2 sum_{s,t} beta_st x_s x_t + sum_s alpha_s x_s + sum_{s,j} rho_sj(y_j) x_s
//!     + sum_{r <= j} phi_rj(y_r, y_j)
//! ```
//!
//! where the `phi` sum runs over `r <= j` once and only the diagonal of
//! `phi_rr` appears.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::softmax_into;
use crate::schema::Observation;
use crate::theta::{Layout, Theta};

/// Visits the coefficients of the affine form
/// `w_s = alpha_s + sum_j rho_sj(y_j) - sum_{t != s} beta_st x_t + sum_l gamma_ls f_l`,
/// so that the conditional mean of `x_s` is `w_s / beta_ss`.
pub(crate) fn visit_gaussian_form(
    layout: &Layout,
    s: usize,
    obs: Observation<'_>,
    features: &[f64],
    mut visit: impl FnMut(usize, f64),
) {
    visit(layout.alpha_index(s), 1.0);
    for (j, &yj) in obs.y.iter().enumerate() {
        visit(layout.rho_index(s, j, yj), 1.0);
    }
    for (t, &xt) in obs.x.iter().enumerate() {
        if t != s {
            visit(layout.beta_index(s, t), -xt);
        }
    }
    for (l, &fl) in features.iter().enumerate() {
        visit(layout.gamma_index(l, s), fl);
    }
}

/// Visits the coefficients of the logit of level `k` of categorical `r`:
/// `sum_s rho_sr(k) x_s + phi_rr(k, k) + sum_{j != r} phi_rj(k, y_j) + sum_l eta_lr(k) f_l`.
pub(crate) fn visit_logit_form(
    layout: &Layout,
    r: usize,
    k: usize,
    obs: Observation<'_>,
    features: &[f64],
    mut visit: impl FnMut(usize, f64),
) {
    for (s, &xs) in obs.x.iter().enumerate() {
        visit(layout.rho_index(s, r, k), xs);
    }
    visit(layout.phi_node_index(r, k), 1.0);
    for (j, &yj) in obs.y.iter().enumerate() {
        if j != r {
            // r != j so the entry is always stored
            visit(layout.phi_index(r, j, k, yj).unwrap(), 1.0);
        }
    }
    for (l, &fl) in features.iter().enumerate() {
        visit(layout.eta_index(l, r, k), fl);
    }
}

pub(crate) fn gaussian_form(theta: &[f64], layout: &Layout, s: usize, obs: Observation<'_>, f: &[f64]) -> f64 {
    let mut w = 0.0;
    visit_gaussian_form(layout, s, obs, f, |i, c| w += c * theta[i]);
    w
}

pub(crate) fn logits_into(theta: &[f64], layout: &Layout, r: usize, obs: Observation<'_>, f: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        visit_logit_form(layout, r, k, obs, f, |i, c| acc += c * theta[i]);
        *o = acc;
    }
}

fn check(theta: &Theta, row: Observation<'_>) -> Result<()> {
    theta.schema().check_row(row)
}

/// Unnormalized log density of one observation.
pub fn joint_log_density_unnormalized(theta: &Theta, row: Observation<'_>) -> Result<f64> {
    check(theta, row)?;
    let layout = theta.layout();
    let (p, q) = (layout.p(), layout.q());
    let mut total = 0.0;
    for s in 0..p {
        let xs = row.x[s];
        total -= 0.5 * theta.beta(s, s) * xs * xs;
        for t in (s + 1)..p {
            total -= theta.beta(s, t) * xs * row.x[t];
        }
        total += theta.alpha(s) * xs;
        for j in 0..q {
            total += theta.rho(s, j)[row.y[j]] * xs;
        }
    }
    for r in 0..q {
        for j in r..q {
            total += theta.phi(r, j, row.y[r], row.y[j]);
        }
    }
    Ok(total)
}

/// Mean and variance of `x_s` given all other variables.
pub fn conditional_gaussian(theta: &Theta, s: usize, row: Observation<'_>) -> Result<(f64, f64)> {
    check(theta, row)?;
    if s >= theta.layout().p() {
        return Err(Error::DimensionMismatch {
            what: "continuous index",
            expected: theta.layout().p(),
            found: s,
        });
    }
    let variance = theta.conditional_variance(s)?;
    let w = gaussian_form(theta.values(), theta.layout(), s, row, &[]);
    Ok((w * variance, variance))
}

/// Probabilities of each level of `y_r` given all other variables.
pub fn conditional_multinomial(theta: &Theta, r: usize, row: Observation<'_>) -> Result<Vec<f64>> {
    check(theta, row)?;
    let layout = theta.layout();
    if r >= layout.q() {
        return Err(Error::DimensionMismatch {
            what: "categorical index",
            expected: layout.q(),
            found: r,
        });
    }
    let levels = layout.levels()[r];
    let mut logits = vec![0.0; levels];
    logits_into(theta.values(), layout, r, row, &[], &mut logits);
    let mut probs = vec![0.0; levels];
    softmax_into(&logits, &mut probs);
    Ok(probs)
}

/// Equivalent parametrization with sum-to-zero `rho` vectors and
/// double-centered `phi` blocks.
///
/// The mean of each `rho_sj` moves into `alpha_s`. The row and column means of
/// each `phi_rj` (r < j) move into the `phi_rr` and `phi_jj` diagonals, and the
/// grand mean (a constant of the log density) is dropped. Both conditionals are
/// unchanged.
pub fn center(theta: &Theta) -> Theta {
    let mut out = theta.clone();
    let layout = theta.layout().clone();
    let (p, q) = (layout.p(), layout.q());
    let levels = layout.levels();
    for s in 0..p {
        for j in 0..q {
            let block = out.rho_mut(s, j);
            let mean = block.iter().sum::<f64>() / block.len() as f64;
            block.iter_mut().for_each(|v| *v -= mean);
            let a = out.alpha(s);
            out.set_alpha(s, a + mean);
        }
    }
    for r in 0..q {
        for j in (r + 1)..q {
            let (lr, lj) = (levels[r], levels[j]);
            let block = out.phi_pair(r, j).to_vec();
            let grand = block.iter().sum::<f64>() / (lr * lj) as f64;
            let row_dev: Vec<f64> = (0..lr)
                .map(|a| block[a * lj..(a + 1) * lj].iter().sum::<f64>() / lj as f64 - grand)
                .collect();
            let col_dev: Vec<f64> = (0..lj)
                .map(|b| (0..lr).map(|a| block[a * lj + b]).sum::<f64>() / lr as f64 - grand)
                .collect();
            let dst = out.phi_pair_mut(r, j);
            for a in 0..lr {
                for b in 0..lj {
                    dst[a * lj + b] = block[a * lj + b] - grand - row_dev[a] - col_dev[b];
                }
            }
            out.phi_node_mut(r).iter_mut().zip(&row_dev).for_each(|(d, u)| *d += u);
            out.phi_node_mut(j).iter_mut().zip(&col_dev).for_each(|(d, v)| *d += v);
        }
    }
    out
}
