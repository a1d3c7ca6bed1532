//! Canonical flat storage of the model parameters.
//!
//! All parameters live in one `Vec<f64>` so the solvers can treat them as a
//! point in R^d. The order is fixed:
//!
//! 1. `beta`: upper triangle of the symmetric `p x p` matrix, row-major, diagonal included
//! 2. `alpha`: `p` continuous node potentials
//! 3. `rho`: for each continuous `s`, for each categorical `j`, `L_j` entries
//! 4. `phi` node potentials: the diagonal `phi_rr(a, a)` of each categorical `r`
//! 5. `phi` edges: for each pair `r < j`, the `L_r x L_j` block row-major
//! 6. `gamma` (conditional model only): `F x p`
//! 7. `eta` (conditional model only): for each feature, for each categorical `r`, `L_r` entries
//!
//! Off-diagonal entries of `phi_rr` are not part of the model and read as zero.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::schema::Schema;

/// A node of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Continuous(usize),
    Categorical(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// scalar `beta_st`, `s < t`
    ContinuousContinuous,
    /// vector `rho_sj`
    ContinuousDiscrete,
    /// matrix `phi_rj`, `r < j`
    DiscreteDiscrete,
    /// scalar `gamma_ls` of the conditional model
    FeatureContinuous,
    /// vector `eta_lr` of the conditional model
    FeatureDiscrete,
}

/// One penalized parameter block. `u` and `v` index the endpoints within
/// their kind: `(s, t)`, `(s, j)`, `(r, j)`, `(l, s)` or `(l, r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeGroup {
    pub kind: GroupKind,
    pub u: usize,
    pub v: usize,
    pub range: Range<usize>,
}

impl EdgeGroup {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// The graph edge this group encodes, if it is an edge between model variables.
    pub fn edge(&self) -> Option<(Variable, Variable)> {
        match self.kind {
            GroupKind::ContinuousContinuous => Some((Variable::Continuous(self.u), Variable::Continuous(self.v))),
            GroupKind::ContinuousDiscrete => Some((Variable::Continuous(self.u), Variable::Categorical(self.v))),
            GroupKind::DiscreteDiscrete => Some((Variable::Categorical(self.u), Variable::Categorical(self.v))),
            GroupKind::FeatureContinuous | GroupKind::FeatureDiscrete => None,
        }
    }

    pub fn norm(&self, values: &[f64]) -> f64 {
        crate::math::norm2(&values[self.range.clone()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    schema: Schema,
    features: usize,
    level_offsets: Vec<usize>,
    alpha: usize,
    rho: usize,
    phi_node: usize,
    phi_pairs: Vec<usize>,
    gamma: usize,
    eta: usize,
    dim: usize,
}

impl Layout {
    pub fn new(schema: &Schema) -> Self {
        Self::with_features(schema, 0)
    }

    pub fn with_features(schema: &Schema, features: usize) -> Self {
        let (p, q) = (schema.p(), schema.q());
        let levels = schema.levels();
        let mut level_offsets = Vec::with_capacity(q + 1);
        let mut acc = 0;
        for &l in levels {
            level_offsets.push(acc);
            acc += l;
        }
        level_offsets.push(acc);
        let total = acc;

        let alpha = p * (p + 1) / 2;
        let rho = alpha + p;
        let phi_node = rho + p * total;
        let mut cursor = phi_node + total;
        let mut phi_pairs = Vec::with_capacity(q * q.saturating_sub(1) / 2);
        for r in 0..q {
            for j in (r + 1)..q {
                phi_pairs.push(cursor);
                cursor += levels[r] * levels[j];
            }
        }
        let gamma = cursor;
        let eta = gamma + features * p;
        let dim = eta + features * total;
        Self {
            schema: schema.clone(),
            features,
            level_offsets,
            alpha,
            rho,
            phi_node,
            phi_pairs,
            gamma,
            eta,
            dim,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn p(&self) -> usize {
        self.schema.p()
    }

    pub fn q(&self) -> usize {
        self.schema.q()
    }

    pub fn levels(&self) -> &[usize] {
        self.schema.levels()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_levels(&self) -> usize {
        self.level_offsets[self.q()]
    }

    pub fn level_offset(&self, r: usize) -> usize {
        self.level_offsets[r]
    }

    pub fn beta_index(&self, s: usize, t: usize) -> usize {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        let p = self.p();
        // row `a` of the packed upper triangle starts at a*p - a(a-1)/2
        a * p - a * a.saturating_sub(1) / 2 + (b - a)
    }

    pub fn alpha_index(&self, s: usize) -> usize {
        self.alpha + s
    }

    pub fn rho_index(&self, s: usize, j: usize, a: usize) -> usize {
        self.rho + s * self.total_levels() + self.level_offsets[j] + a
    }

    pub fn rho_range(&self, s: usize, j: usize) -> Range<usize> {
        let start = self.rho_index(s, j, 0);
        start..start + self.levels()[j]
    }

    pub fn phi_node_index(&self, r: usize, a: usize) -> usize {
        self.phi_node + self.level_offsets[r] + a
    }

    pub fn phi_node_range(&self, r: usize) -> Range<usize> {
        let start = self.phi_node_index(r, 0);
        start..start + self.levels()[r]
    }

    fn pair_index(&self, r: usize, j: usize) -> usize {
        debug_assert!(r < j);
        let q = self.q();
        r * q - r * (r + 1) / 2 + (j - r - 1)
    }

    /// Block of `phi_rj` for `r < j`, row-major `L_r x L_j`.
    pub fn phi_pair_range(&self, r: usize, j: usize) -> Range<usize> {
        let start = self.phi_pairs[self.pair_index(r, j)];
        start..start + self.levels()[r] * self.levels()[j]
    }

    /// Storage index of `phi_rj(a, b)`, or `None` for the excluded
    /// off-diagonal entries of `phi_rr`.
    pub fn phi_index(&self, r: usize, j: usize, a: usize, b: usize) -> Option<usize> {
        use core::cmp::Ordering;
        match r.cmp(&j) {
            Ordering::Equal => (a == b).then(|| self.phi_node_index(r, a)),
            Ordering::Less => Some(self.phi_pairs[self.pair_index(r, j)] + a * self.levels()[j] + b),
            Ordering::Greater => self.phi_index(j, r, b, a),
        }
    }

    pub fn gamma_index(&self, l: usize, s: usize) -> usize {
        self.gamma + l * self.p() + s
    }

    pub fn eta_index(&self, l: usize, r: usize, a: usize) -> usize {
        self.eta + l * self.total_levels() + self.level_offsets[r] + a
    }

    pub fn eta_range(&self, l: usize, r: usize) -> Range<usize> {
        let start = self.eta_index(l, r, 0);
        start..start + self.levels()[r]
    }

    /// Edge groups in canonical order: `beta_st` (s < t), `rho_sj`, `phi_rj` (r < j).
    pub fn edge_groups(&self) -> Vec<EdgeGroup> {
        let (p, q) = (self.p(), self.q());
        let mut groups = Vec::new();
        for s in 0..p {
            for t in (s + 1)..p {
                let i = self.beta_index(s, t);
                groups.push(EdgeGroup {
                    kind: GroupKind::ContinuousContinuous,
                    u: s,
                    v: t,
                    range: i..i + 1,
                });
            }
        }
        for s in 0..p {
            for j in 0..q {
                groups.push(EdgeGroup {
                    kind: GroupKind::ContinuousDiscrete,
                    u: s,
                    v: j,
                    range: self.rho_range(s, j),
                });
            }
        }
        for r in 0..q {
            for j in (r + 1)..q {
                groups.push(EdgeGroup {
                    kind: GroupKind::DiscreteDiscrete,
                    u: r,
                    v: j,
                    range: self.phi_pair_range(r, j),
                });
            }
        }
        groups
    }

    /// `gamma_ls` scalars and `eta_lr` vectors of the conditional model.
    pub fn feature_groups(&self) -> Vec<EdgeGroup> {
        let mut groups = Vec::new();
        for l in 0..self.features {
            for s in 0..self.p() {
                let i = self.gamma_index(l, s);
                groups.push(EdgeGroup {
                    kind: GroupKind::FeatureContinuous,
                    u: l,
                    v: s,
                    range: i..i + 1,
                });
            }
            for r in 0..self.q() {
                groups.push(EdgeGroup {
                    kind: GroupKind::FeatureDiscrete,
                    u: l,
                    v: r,
                    range: self.eta_range(l, r),
                });
            }
        }
        groups
    }

    /// Indices of the unpenalized node parameters: `beta_ss`, `alpha_s`, `phi_rr` diagonal.
    pub fn node_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.p()).map(|s| self.beta_index(s, s)).collect();
        idx.extend((0..self.p()).map(|s| self.alpha_index(s)));
        idx.extend(self.phi_node..self.phi_node + self.total_levels());
        idx
    }
}

/// Model parameters in canonical storage (see the module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    layout: Layout,
    values: Vec<f64>,
}

impl Theta {
    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.dim()];
        Self { layout, values }
    }

    /// The independence model: `beta_ss = 1`, everything else zero.
    pub fn independence(layout: Layout) -> Self {
        let mut theta = Self::zeros(layout);
        for s in 0..theta.layout.p() {
            let i = theta.layout.beta_index(s, s);
            theta.values[i] = 1.0;
        }
        theta
    }

    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: layout.dim(),
                found: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn schema(&self) -> &Schema {
        self.layout.schema()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn beta(&self, s: usize, t: usize) -> f64 {
        self.values[self.layout.beta_index(s, t)]
    }

    pub fn set_beta(&mut self, s: usize, t: usize, v: f64) {
        let i = self.layout.beta_index(s, t);
        self.values[i] = v;
    }

    pub fn alpha(&self, s: usize) -> f64 {
        self.values[self.layout.alpha_index(s)]
    }

    pub fn set_alpha(&mut self, s: usize, v: f64) {
        let i = self.layout.alpha_index(s);
        self.values[i] = v;
    }

    pub fn rho(&self, s: usize, j: usize) -> &[f64] {
        &self.values[self.layout.rho_range(s, j)]
    }

    pub fn rho_mut(&mut self, s: usize, j: usize) -> &mut [f64] {
        let r = self.layout.rho_range(s, j);
        &mut self.values[r]
    }

    /// `phi_rj(a, b)` for any ordering of `r` and `j`.
    pub fn phi(&self, r: usize, j: usize, a: usize, b: usize) -> f64 {
        self.layout.phi_index(r, j, a, b).map_or(0.0, |i| self.values[i])
    }

    /// Sets `phi_rj(a, b)`; off-diagonal `phi_rr` entries are not stored and are ignored.
    pub fn set_phi(&mut self, r: usize, j: usize, a: usize, b: usize, v: f64) {
        if let Some(i) = self.layout.phi_index(r, j, a, b) {
            self.values[i] = v;
        }
    }

    pub fn phi_node(&self, r: usize) -> &[f64] {
        &self.values[self.layout.phi_node_range(r)]
    }

    pub fn phi_node_mut(&mut self, r: usize) -> &mut [f64] {
        let range = self.layout.phi_node_range(r);
        &mut self.values[range]
    }

    /// Row-major `L_r x L_j` block for `r < j`.
    pub fn phi_pair(&self, r: usize, j: usize) -> &[f64] {
        &self.values[self.layout.phi_pair_range(r, j)]
    }

    pub fn phi_pair_mut(&mut self, r: usize, j: usize) -> &mut [f64] {
        let range = self.layout.phi_pair_range(r, j);
        &mut self.values[range]
    }

    pub fn gamma(&self, l: usize, s: usize) -> f64 {
        self.values[self.layout.gamma_index(l, s)]
    }

    pub fn eta(&self, l: usize, r: usize) -> &[f64] {
        &self.values[self.layout.eta_range(l, r)]
    }

    /// Conditional variance `1 / beta_ss` of continuous node `s`.
    pub fn conditional_variance(&self, s: usize) -> Result<f64> {
        let b = self.beta(s, s);
        if b > 0.0 {
            Ok(1.0 / b)
        } else {
            Err(Error::NonPositivePrecision { node: s, value: b })
        }
    }

    /// First node with `beta_ss <= 0`, if any.
    pub fn first_nonpositive_precision(&self) -> Option<usize> {
        (0..self.layout.p()).find(|&s| !(self.beta(s, s) > 0.0))
    }

    /// The full symmetric `p x p` matrix `B`.
    pub fn precision_matrix(&self) -> DenseMatrix {
        let p = self.layout.p();
        let mut b = DenseMatrix::zeros(p, p);
        for s in 0..p {
            for t in 0..p {
                b[(s, t)] = self.beta(s, t);
            }
        }
        b
    }

    /// `gamma(y)_s = alpha_s + sum_j rho_sj(y_j)`.
    pub fn gaussian_offset(&self, y: &[usize], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate().take(self.layout.p()) {
            *o = self.alpha(s)
                + y.iter()
                    .enumerate()
                    .map(|(j, &yj)| self.values[self.layout.rho_index(s, j, yj)])
                    .sum::<f64>();
        }
    }

    pub fn group_norm(&self, group: &EdgeGroup) -> f64 {
        group.norm(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn layout() -> Layout {
        Layout::with_features(&Schema::new(3, vec![2, 3, 2]).unwrap(), 2)
    }

    #[test]
    fn indices_are_a_bijection() {
        let l = layout();
        let mut seen = BTreeSet::new();
        let (p, q) = (l.p(), l.q());
        for s in 0..p {
            for t in s..p {
                assert!(seen.insert(l.beta_index(s, t)));
                assert_eq!(l.beta_index(s, t), l.beta_index(t, s));
            }
            assert!(seen.insert(l.alpha_index(s)));
            for j in 0..q {
                for a in 0..l.levels()[j] {
                    assert!(seen.insert(l.rho_index(s, j, a)));
                }
            }
        }
        for r in 0..q {
            for j in r..q {
                for a in 0..l.levels()[r] {
                    for b in 0..l.levels()[j] {
                        if let Some(i) = l.phi_index(r, j, a, b) {
                            assert!(seen.insert(i));
                            assert_eq!(l.phi_index(j, r, b, a), Some(i));
                        } else {
                            assert!(r == j && a != b);
                        }
                    }
                }
            }
        }
        for f in 0..l.features() {
            for s in 0..p {
                assert!(seen.insert(l.gamma_index(f, s)));
            }
            for r in 0..q {
                for a in 0..l.levels()[r] {
                    assert!(seen.insert(l.eta_index(f, r, a)));
                }
            }
        }
        assert_eq!(seen.len(), l.dim());
        assert_eq!(*seen.iter().next_back().unwrap(), l.dim() - 1);
    }

    #[test]
    fn group_sizes_follow_kind() {
        let l = layout();
        for g in l.edge_groups() {
            let expected = match g.kind {
                GroupKind::ContinuousContinuous => 1,
                GroupKind::ContinuousDiscrete => l.levels()[g.v],
                GroupKind::DiscreteDiscrete => l.levels()[g.u] * l.levels()[g.v],
                _ => unreachable!(),
            };
            assert_eq!(g.len(), expected);
        }
        // 3 cc + 9 cd + 3 dd
        assert_eq!(l.edge_groups().len(), 15);
        assert_eq!(l.feature_groups().len(), 2 * (3 + 3));
    }

    #[test]
    fn phi_symmetric_storage() {
        let mut t = Theta::zeros(layout());
        t.set_phi(2, 0, 1, 0, 4.5);
        assert_eq!(t.phi(0, 2, 0, 1), 4.5);
        t.set_phi(1, 1, 0, 2, 9.0);
        assert_eq!(t.phi(1, 1, 0, 2), 0.0);
    }
}
