//! Separate penalized regressions, one per variable: Gaussian linear
//! regression for continuous nodes and multiclass logistic regression for
//! categorical nodes. Each node keeps its own copy of every edge block it
//! touches, so an edge is estimated twice.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result, SolverError};
use crate::optimize::{path_solve, solve, Clock, FitResult, PathResult, SmoothObjective, SolverConfig};
use crate::pseudolikelihood::{Nodes, PseudoLikelihood};
use crate::regularization::PenaltySpec;
use crate::theta::{EdgeGroup, Variable};

/// Every variable of a schema with `p` continuous and `q` categorical nodes.
pub fn all_nodes(p: usize, q: usize) -> Vec<Variable> {
    (0..p)
        .map(Variable::Continuous)
        .chain((0..q).map(Variable::Categorical))
        .collect()
}

/// One node's conditional negative log-likelihood over its own parameters.
///
/// Local coordinates are the node's unpenalized intercepts followed by the
/// blocks of every penalty group incident to the node.
#[derive(Debug, Clone)]
pub struct NodeProblem<'p, 'd> {
    pl: &'p PseudoLikelihood<'d>,
    node: Variable,
    indices: Vec<usize>,
    penalty: PenaltySpec,
    /// For each local group, its index in the full penalty.
    global_groups: Vec<usize>,
}

fn touches(group: &EdgeGroup, node: Variable) -> bool {
    group.edge().is_some_and(|(a, b)| a == node || b == node)
}

impl<'p, 'd> NodeProblem<'p, 'd> {
    /// `penalty` is over the full parameter vector; only groups incident to
    /// `node` are kept, with their weights.
    pub fn new(pl: &'p PseudoLikelihood<'d>, node: Variable, penalty: &PenaltySpec) -> Result<Self> {
        let layout = pl.layout();
        if layout.features() > 0 {
            return Err(Error::Invalid("separate regressions use the joint model only".into()));
        }
        let mut indices = match node {
            Variable::Continuous(s) if s < layout.p() => vec![layout.beta_index(s, s), layout.alpha_index(s)],
            Variable::Categorical(r) if r < layout.q() => layout.phi_node_range(r).collect(),
            _ => return Err(Error::Invalid("node index out of range".into())),
        };
        let mut groups = Vec::new();
        let mut weights = Vec::new();
        let mut global_groups = Vec::new();
        for (g, (group, w)) in penalty.groups().iter().zip(penalty.weights()).enumerate() {
            if !touches(group, node) {
                continue;
            }
            let start = indices.len();
            indices.extend(group.range.clone());
            groups.push(EdgeGroup {
                kind: group.kind,
                u: group.u,
                v: group.v,
                range: start..indices.len(),
            });
            weights.push(*w);
            global_groups.push(g);
        }
        let local = PenaltySpec::new(penalty.lambda, groups, weights, penalty.is_calibrated())?;
        Ok(Self {
            pl,
            node,
            indices,
            penalty: local,
            global_groups,
        })
    }

    pub fn node(&self) -> Variable {
        self.node
    }

    pub fn penalty(&self) -> &PenaltySpec {
        &self.penalty
    }

    pub fn global_groups(&self) -> &[usize] {
        &self.global_groups
    }

    /// Full-length vector with `local` in this node's coordinates, zero elsewhere.
    pub fn scatter(&self, local: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.pl.layout().dim()];
        for (&i, &v) in self.indices.iter().zip(local) {
            full[i] = v;
        }
        full
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| full[i]).collect()
    }

    /// Unit precision, everything else zero.
    pub fn default_start(&self) -> Vec<f64> {
        let mut local = vec![0.0; self.indices.len()];
        if matches!(self.node, Variable::Continuous(_)) {
            local[0] = 1.0;
        }
        local
    }
}

impl SmoothObjective for NodeProblem<'_, '_> {
    fn dim(&self) -> usize {
        self.indices.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.pl.node_value(&self.scatter(x), self.node)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut full = vec![0.0; self.pl.layout().dim()];
        let v = self
            .pl
            .node_gradient(&self.scatter(x), Nodes::One(self.node), &mut full)?;
        for (g, &i) in grad.iter_mut().zip(&self.indices) {
            *g = full[i];
        }
        Ok(v)
    }

    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let mut full = vec![0.0; self.pl.layout().dim()];
        self.pl
            .node_hessian_vec(&self.scatter(x), Nodes::One(self.node), &self.scatter(v), &mut full)?;
        for (o, &i) in out.iter_mut().zip(&self.indices) {
            *o = full[i];
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NodeFit {
    pub node: Variable,
    pub result: FitResult,
    /// The node's solution scattered into a full-length parameter vector.
    pub full: Vec<f64>,
    /// `(index into the full penalty, group norm)` for incident groups.
    pub directed_norms: Vec<(usize, f64)>,
}

impl NodeFit {
    pub fn norm_of(&self, group: usize) -> Option<f64> {
        self.directed_norms.iter().find(|(g, _)| *g == group).map(|(_, n)| *n)
    }
}

fn node_fit(problem: &NodeProblem<'_, '_>, result: FitResult) -> NodeFit {
    let directed_norms = problem
        .global_groups
        .iter()
        .zip(&result.group_norms)
        .map(|(g, n)| (*g, *n))
        .collect();
    NodeFit {
        node: problem.node,
        full: problem.scatter(&result.x),
        result,
        directed_norms,
    }
}

/// Fits one node, starting from `init` in local coordinates or the default start.
pub fn fit_node(
    problem: &NodeProblem<'_, '_>,
    init: Option<&[f64]>,
    config: &SolverConfig,
) -> core::result::Result<NodeFit, SolverError> {
    let start = init.map_or_else(|| problem.default_start(), <[f64]>::to_vec);
    let result = solve(problem, problem.penalty(), &start, config)?;
    Ok(node_fit(problem, result))
}

/// All nodes at a single penalty level, continuous nodes first.
pub fn fit_separate(
    pl: &PseudoLikelihood<'_>,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<Vec<core::result::Result<NodeFit, SolverError>>> {
    let layout = pl.layout();
    all_nodes(layout.p(), layout.q())
        .into_iter()
        .map(|node| Ok(fit_node(&NodeProblem::new(pl, node, penalty)?, None, config)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct NodePath {
    pub node: Variable,
    pub path: PathResult,
    pub global_groups: Vec<usize>,
}

/// Warm-started path for one node.
pub fn node_path<C: Clock + ?Sized>(
    problem: &NodeProblem<'_, '_>,
    lambdas: &[f64],
    config: &SolverConfig,
    clock: &C,
) -> NodePath {
    let path = path_solve(
        problem,
        problem.penalty(),
        lambdas,
        &problem.default_start(),
        config,
        true,
        clock,
    );
    NodePath {
        node: problem.node,
        path,
        global_groups: problem.global_groups.clone(),
    }
}

/// Warm-started paths for every node over the same grid.
pub fn separate_path<C: Clock + ?Sized>(
    pl: &PseudoLikelihood<'_>,
    penalty: &PenaltySpec,
    lambdas: &[f64],
    config: &SolverConfig,
    clock: &C,
) -> Result<Vec<NodePath>> {
    let layout = pl.layout();
    all_nodes(layout.p(), layout.q())
        .into_iter()
        .map(|node| Ok(node_path(&NodeProblem::new(pl, node, penalty)?, lambdas, config, clock)))
        .collect()
}

impl NodePath {
    /// The fit at grid point `k` as a [`NodeFit`], if it succeeded.
    pub fn fit_at(&self, problem: &NodeProblem<'_, '_>, k: usize) -> Option<NodeFit> {
        self.path
            .fits
            .get(k)?
            .as_ref()
            .ok()
            .map(|r| node_fit(problem, r.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    And,
    Or,
}

/// Marks each of the `groups` penalty groups present or absent from the two
/// directed estimates of its block. A missing direction counts as zero.
pub fn combine_edges(groups: &[EdgeGroup], fits: &[NodeFit], rule: EdgeRule, threshold: f64) -> Vec<bool> {
    groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let Some((a, b)) = group.edge() else {
                return false;
            };
            let side = |node: Variable| {
                fits.iter()
                    .find(|f| f.node == node)
                    .and_then(|f| f.norm_of(g))
                    .is_some_and(|n| n > threshold)
            };
            match rule {
                EdgeRule::And => side(a) && side(b),
                EdgeRule::Or => side(a) || side(b),
            }
        })
        .collect()
}
