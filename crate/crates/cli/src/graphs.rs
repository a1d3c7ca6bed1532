//! Synthetic ground-truth models.

use mixgm::{Layout, Schema, Theta};

/// Edge strengths of [`ladder`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderWeights {
    /// `beta_ss`
    pub precision: f64,
    /// `|beta_st|` along the continuous chain
    pub continuous: f64,
    /// `rho_sj = (w, -w)` on a rung
    pub mixed: f64,
    /// `phi_rj = [[w, -w], [-w, w]]` along the discrete chain
    pub discrete: f64,
}

impl Default for LadderWeights {
    fn default() -> Self {
        Self {
            precision: 1.0,
            continuous: 0.4,
            mixed: 0.4,
            discrete: 0.4,
        }
    }
}

/// `p` continuous and `q` binary variables on a ladder: a chain through the
/// continuous variables, a chain through the binary ones and a rung between
/// `x_s` and `y_s` for `s < min(p, q)`. Both chains are attractive and the
/// rungs alternate in sign, so every square of the ladder is frustrated.
pub fn ladder(p: usize, q: usize) -> Theta {
    ladder_with(p, q, &LadderWeights::default())
}

pub fn ladder_with(p: usize, q: usize, w: &LadderWeights) -> Theta {
    let schema = Schema::new(p, vec![2; q]).expect("at least one variable");
    let mut theta = Theta::zeros(Layout::new(&schema));
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    for s in 0..p {
        theta.set_beta(s, s, w.precision);
        if s + 1 < p {
            theta.set_beta(s, s + 1, -w.continuous);
        }
    }
    for s in 0..p.min(q) {
        let v = sign(s) * w.mixed;
        theta.rho_mut(s, s).copy_from_slice(&[v, -v]);
    }
    for r in 0..q.saturating_sub(1) {
        let v = w.discrete;
        theta.set_phi(r, r + 1, 0, 0, v);
        theta.set_phi(r, r + 1, 0, 1, -v);
        theta.set_phi(r, r + 1, 1, 0, -v);
        theta.set_phi(r, r + 1, 1, 1, v);
    }
    theta
}

/// Which edge groups (in [`Layout::edge_groups`] order) are nonzero.
pub fn edge_set(theta: &Theta) -> Vec<bool> {
    theta
        .layout()
        .edge_groups()
        .iter()
        .map(|g| theta.group_norm(g) > 0.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixgm::sampler::GaussianPart;
    use mixgm::GroupKind;

    #[test]
    fn ladder_has_chain_and_rung_edges() {
        let theta = ladder(4, 4);
        let groups = theta.layout().edge_groups();
        let edges = edge_set(&theta);
        let count = |kind| groups.iter().zip(&edges).filter(|(g, &e)| e && g.kind == kind).count();
        assert_eq!(count(GroupKind::ContinuousContinuous), 3);
        assert_eq!(count(GroupKind::DiscreteDiscrete), 3);
        assert_eq!(count(GroupKind::ContinuousDiscrete), 4);
        for (g, &e) in groups.iter().zip(&edges) {
            if g.kind == GroupKind::ContinuousDiscrete {
                assert_eq!(e, g.u == g.v);
            }
        }
    }

    #[test]
    fn precision_is_positive_definite() {
        for p in 1..12 {
            assert!(GaussianPart::new(&ladder(p, 2)).is_ok(), "p = {p}");
        }
    }
}
