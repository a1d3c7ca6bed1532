//! Self-describing JSON model documents.

use std::fs::File;
use std::path::Path;

use mixgm::regularization::PenaltySpec;
use mixgm::{EdgeGroup, GroupKind, Layout, Theta};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::Dictionary;

pub const FORMAT: &str = "mixgm-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiBlock {
    pub r: usize,
    pub j: usize,
    /// `L_r x L_j`, row-major by level of `r`.
    pub block: Vec<Vec<f64>>,
}

/// Parameter blocks in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Row `s` holds `beta[s][t]` for `t >= s`.
    pub beta: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    /// `rho[s][j][a]`
    pub rho: Vec<Vec<Vec<f64>>>,
    /// Diagonal of `phi_rr`.
    pub phi_node: Vec<Vec<f64>>,
    /// `phi_rj` for `r < j`.
    pub phi_edges: Vec<PhiBlock>,
    /// `gamma[l][s]`
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<Vec<f64>>,
    /// `eta[l][r][a]`
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta: Vec<Vec<Vec<f64>>>,
}

impl Parameters {
    pub fn from_theta(theta: &Theta) -> Self {
        let layout = theta.layout();
        let (p, q, f) = (layout.p(), layout.q(), layout.features());
        let levels = layout.levels();
        Self {
            beta: (0..p).map(|s| (s..p).map(|t| theta.beta(s, t)).collect()).collect(),
            alpha: (0..p).map(|s| theta.alpha(s)).collect(),
            rho: (0..p)
                .map(|s| (0..q).map(|j| theta.rho(s, j).to_vec()).collect())
                .collect(),
            phi_node: (0..q).map(|r| theta.phi_node(r).to_vec()).collect(),
            phi_edges: (0..q)
                .flat_map(|r| ((r + 1)..q).map(move |j| (r, j)))
                .map(|(r, j)| PhiBlock {
                    r,
                    j,
                    block: (0..levels[r])
                        .map(|a| (0..levels[j]).map(|b| theta.phi(r, j, a, b)).collect())
                        .collect(),
                })
                .collect(),
            gamma: (0..f).map(|l| (0..p).map(|s| theta.gamma(l, s)).collect()).collect(),
            eta: (0..f)
                .map(|l| (0..q).map(|r| theta.eta(l, r).to_vec()).collect())
                .collect(),
        }
    }

    pub fn to_theta(&self, layout: Layout) -> Result<Theta> {
        let (p, q, f) = (layout.p(), layout.q(), layout.features());
        let levels = layout.levels().to_vec();
        let bad = |what: &str| CliError::Invalid(format!("parameter block `{what}` does not match the schema"));
        let mut values = vec![0.0; layout.dim()];

        if self.beta.len() != p || self.beta.iter().enumerate().any(|(s, row)| row.len() != p - s) {
            return Err(bad("beta"));
        }
        for (s, row) in self.beta.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                values[layout.beta_index(s, s + k)] = *v;
            }
        }
        if self.alpha.len() != p {
            return Err(bad("alpha"));
        }
        for (s, v) in self.alpha.iter().enumerate() {
            values[layout.alpha_index(s)] = *v;
        }
        if self.rho.len() != p {
            return Err(bad("rho"));
        }
        for (s, per) in self.rho.iter().enumerate() {
            if per.len() != q {
                return Err(bad("rho"));
            }
            for (j, block) in per.iter().enumerate() {
                if block.len() != levels[j] {
                    return Err(bad("rho"));
                }
                values[layout.rho_range(s, j)].copy_from_slice(block);
            }
        }
        if self.phi_node.len() != q {
            return Err(bad("phi_node"));
        }
        for (r, block) in self.phi_node.iter().enumerate() {
            if block.len() != levels[r] {
                return Err(bad("phi_node"));
            }
            values[layout.phi_node_range(r)].copy_from_slice(block);
        }
        if self.phi_edges.len() != q * q.saturating_sub(1) / 2 {
            return Err(bad("phi_edges"));
        }
        for e in &self.phi_edges {
            if e.r >= e.j || e.j >= q || e.block.len() != levels[e.r] {
                return Err(bad("phi_edges"));
            }
            for (a, row) in e.block.iter().enumerate() {
                if row.len() != levels[e.j] {
                    return Err(bad("phi_edges"));
                }
                for (b, v) in row.iter().enumerate() {
                    let i = layout.phi_index(e.r, e.j, a, b).ok_or_else(|| bad("phi_edges"))?;
                    values[i] = *v;
                }
            }
        }
        if self.gamma.len() != f || self.gamma.iter().any(|g| g.len() != p) {
            return Err(bad("gamma"));
        }
        for (l, row) in self.gamma.iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                values[layout.gamma_index(l, s)] = *v;
            }
        }
        if self.eta.len() != f {
            return Err(bad("eta"));
        }
        for (l, per) in self.eta.iter().enumerate() {
            if per.len() != q {
                return Err(bad("eta"));
            }
            for (r, block) in per.iter().enumerate() {
                if block.len() != levels[r] {
                    return Err(bad("eta"));
                }
                values[layout.eta_range(l, r)].copy_from_slice(block);
            }
        }
        Ok(Theta::from_values(layout, values)?)
    }
}

pub fn kind_name(kind: GroupKind) -> &'static str {
    match kind {
        GroupKind::ContinuousContinuous => "continuous-continuous",
        GroupKind::ContinuousDiscrete => "continuous-discrete",
        GroupKind::DiscreteDiscrete => "discrete-discrete",
        GroupKind::FeatureContinuous => "feature-continuous",
        GroupKind::FeatureDiscrete => "feature-discrete",
    }
}

/// One penalized group with both endpoint names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub kind: String,
    pub a: String,
    pub b: String,
    pub weight: f64,
    pub norm: f64,
}

pub fn group_endpoints(group: &EdgeGroup, dictionary: &Dictionary, features: &[String]) -> (String, String) {
    if let Some((a, b)) = group.edge() {
        return (dictionary.name_of(a).to_owned(), dictionary.name_of(b).to_owned());
    }
    let target = match group.kind {
        GroupKind::FeatureContinuous => mixgm::Variable::Continuous(group.v),
        _ => mixgm::Variable::Categorical(group.v),
    };
    (features[group.u].clone(), dictionary.name_of(target).to_owned())
}

pub fn group_records(
    theta: &Theta,
    penalty: &PenaltySpec,
    dictionary: &Dictionary,
    features: &[String],
) -> Vec<GroupRecord> {
    penalty
        .groups()
        .iter()
        .zip(penalty.weights())
        .map(|(g, &weight)| {
            let (a, b) = group_endpoints(g, dictionary, features);
            GroupRecord {
                kind: kind_name(g.kind).to_owned(),
                a,
                b,
                weight,
                norm: theta.group_norm(g),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyInfo {
    pub lambda: f64,
    pub calibrated: bool,
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub estimator: String,
    pub solver: String,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub dictionary: Dictionary,
    /// Feature names of a conditional model, empty for a joint model.
    #[serde(default)]
    pub features: Vec<String>,
    pub parameters: Parameters,
    #[serde(default)]
    pub penalty: Option<PenaltyInfo>,
    #[serde(default)]
    pub fit: Option<FitInfo>,
}

impl ModelFile {
    pub fn new(theta: &Theta, dictionary: Dictionary, features: Vec<String>) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            dictionary,
            features,
            parameters: Parameters::from_theta(theta),
            penalty: None,
            fit: None,
        }
    }

    pub fn layout(&self) -> Result<Layout> {
        Ok(Layout::with_features(&self.dictionary.schema()?, self.features.len()))
    }

    pub fn theta(&self) -> Result<Theta> {
        self.parameters.to_theta(self.layout()?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != FORMAT || model.version != VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported model format `{}` version {}",
                model.format, model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(File::create(path)?, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
