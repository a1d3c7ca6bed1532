//! Estimators behind one interface, and the experiment harnesses.

use std::fmt;
use std::str::FromStr;

use mixgm::crf::{crf_objective, crf_penalty};
use mixgm::mle::{nll, MleObjective, MLE_ENUMERATION_CAP};
use mixgm::nodewise::{all_nodes, combine_edges, fit_node, EdgeRule, NodeFit, NodeProblem};
use mixgm::optimize::{lambda_grid, path_solve, Clock, FitResult, GridSpec, Method, SmoothObjective, SolverConfig};
use mixgm::pseudolikelihood::PseudoLikelihood;
use mixgm::regularization::{calibrated_weights, independence_fit, lambda_max_at, PenaltySpec};
use mixgm::sampler::sample_joint;
use mixgm::{Dataset, FeatureMatrix, Layout, Theta, Variable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::graphs::{edge_set, ladder_with, LadderWeights};

/// `5 sqrt(log(p + q) / n)`.
pub fn default_lambda(p: usize, q: usize, n: usize) -> f64 {
    5.0 * (((p + q) as f64).ln() / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// penalized pseudolikelihood
    Pl,
    /// penalized exact likelihood (small models)
    Mle,
    /// one penalized regression per node
    Nodewise,
    /// conditional model trained by pseudolikelihood
    Crf,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Pl => "pl",
            Estimator::Mle => "mle",
            Estimator::Nodewise => "nodewise",
            Estimator::Crf => "crf",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pl" => Ok(Estimator::Pl),
            "mle" => Ok(Estimator::Mle),
            "nodewise" => Ok(Estimator::Nodewise),
            "crf" => Ok(Estimator::Crf),
            other => Err(CliError::Invalid(format!("unknown estimator `{other}`"))),
        }
    }
}

pub fn method_name(method: Method) -> &'static str {
    match method {
        Method::ProxGradient => "pg",
        Method::AcceleratedProxGradient => "apg",
        Method::ProxNewtonExact => "pn",
        Method::ProxNewtonBfgs => "pn-bfgs",
    }
}

/// Wall-clock [`Clock`].
#[derive(Debug, Clone, Copy)]
pub struct WallClock(std::time::Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(std::time::Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub estimator: Estimator,
    pub config: SolverConfig,
    pub calibrated: bool,
    /// How the two directed estimates of a nodewise fit are combined.
    pub edge_rule: EdgeRule,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::Pl,
            config: SolverConfig::with_method(Method::ProxNewtonExact),
            calibrated: true,
            edge_rule: EdgeRule::And,
        }
    }
}

fn check_features(estimator: Estimator, features: Option<&FeatureMatrix>) -> Result<()> {
    match (estimator, features) {
        (Estimator::Crf, None) => Err(CliError::Invalid("the conditional model needs feature columns".into())),
        (Estimator::Crf, Some(_)) | (_, None) => Ok(()),
        (other, Some(_)) => Err(CliError::Invalid(format!("estimator `{other}` does not take features"))),
    }
}

/// Penalty with unit `lambda`. Calibrated weights come from `data`; feature
/// groups of the conditional model get unit weight.
pub fn penalty_for(data: &Dataset, features: Option<&FeatureMatrix>, calibrated: bool) -> Result<PenaltySpec> {
    let layout = Layout::with_features(data.schema(), features.map_or(0, FeatureMatrix::count));
    let calibration = if calibrated {
        Some(calibrated_weights(data)?)
    } else {
        None
    };
    Ok(crf_penalty(&layout, calibration.as_ref(), 1.0)?)
}

/// Smallest penalty level with an empty graph. Nodewise fits use the joint
/// pseudolikelihood value.
pub fn lambda_max_for(
    estimator: Estimator,
    data: &Dataset,
    features: Option<&FeatureMatrix>,
    penalty: &PenaltySpec,
) -> Result<mixgm::regularization::LambdaMax> {
    check_features(estimator, features)?;
    Ok(match estimator {
        Estimator::Pl | Estimator::Nodewise => {
            let pl = PseudoLikelihood::new(data);
            lambda_max_at(&pl, penalty, independence_fit(data, pl.layout()))?
        }
        Estimator::Mle => {
            let mle = MleObjective::new(data)?;
            lambda_max_at(&mle, penalty, independence_fit(data, mle.layout()))?
        }
        Estimator::Crf => {
            let f = features.expect("checked");
            let objective = crf_objective(data, f)?;
            lambda_max_at(&objective, penalty, independence_fit(data, objective.layout()))?
        }
    })
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub theta: Theta,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Presence of each edge group in [`Layout::edge_groups`] order.
    pub edges: Vec<bool>,
    /// Per-node fits of the nodewise estimator.
    pub nodes: Vec<NodeFit>,
}

fn edges_from(result: &FitResult, edge_count: usize) -> Vec<bool> {
    let mut edges = vec![false; edge_count];
    for &g in result.active.iter().filter(|&&g| g < edge_count) {
        edges[g] = true;
    }
    edges
}

/// Symmetric parameters from directed node fits: node parameters from their
/// own node, each present edge block the average of its two estimates.
pub fn combine_node_fits(layout: &Layout, fits: &[NodeFit], edges: &[bool]) -> Theta {
    let mut values = vec![0.0; layout.dim()];
    let of = |node: Variable| fits.iter().find(|f| f.node == node);
    for fit in fits {
        let own = match fit.node {
            Variable::Continuous(s) => vec![layout.beta_index(s, s), layout.alpha_index(s)],
            Variable::Categorical(r) => layout.phi_node_range(r).collect(),
        };
        for i in own {
            values[i] = fit.full[i];
        }
    }
    for (group, _) in layout.edge_groups().iter().zip(edges).filter(|(_, &e)| e) {
        let (a, b) = group.edge().expect("edge group");
        let sides: Vec<&NodeFit> = [of(a), of(b)].into_iter().flatten().collect();
        for i in group.range.clone() {
            values[i] = sides.iter().map(|f| f.full[i]).sum::<f64>() / sides.len().max(1) as f64;
        }
    }
    Theta::from_values(layout.clone(), values).expect("dimensions match")
}

fn fit_nodewise(
    data: &Dataset,
    penalty: &PenaltySpec,
    options: &FitOptions,
    inits: Option<&[Vec<f64>]>,
) -> Result<Fitted> {
    let pl = PseudoLikelihood::new(data);
    let layout = pl.layout().clone();
    let mut nodes = Vec::new();
    for (k, node) in all_nodes(layout.p(), layout.q()).into_iter().enumerate() {
        let problem = NodeProblem::new(&pl, node, penalty)?;
        let init = inits.map(|i| i[k].as_slice());
        nodes.push(fit_node(&problem, init, &options.config)?);
    }
    let edges = combine_edges(
        &layout.edge_groups(),
        &nodes,
        options.edge_rule,
        options.config.zero_threshold,
    );
    Ok(Fitted {
        theta: combine_node_fits(&layout, &nodes, &edges),
        objective: nodes.iter().map(|f| f.result.objective()).sum(),
        iterations: nodes.iter().map(|f| f.result.iterations).sum(),
        converged: nodes.iter().all(|f| f.result.converged),
        edges,
        nodes,
    })
}

fn joint_fit(layout: &Layout, result: FitResult) -> Result<Fitted> {
    let edges = edges_from(&result, layout.edge_groups().len());
    Ok(Fitted {
        theta: Theta::from_values(layout.clone(), result.x.clone())?,
        objective: result.objective(),
        iterations: result.iterations,
        converged: result.converged,
        edges,
        nodes: Vec::new(),
    })
}

/// One fit at `penalty.lambda`, started from the independence model.
pub fn fit_estimator(
    data: &Dataset,
    features: Option<&FeatureMatrix>,
    penalty: &PenaltySpec,
    options: &FitOptions,
) -> Result<Fitted> {
    check_features(options.estimator, features)?;
    let solve_with = |f: &dyn SmoothObjective, layout: &Layout| -> Result<Fitted> {
        let init = independence_fit(data, layout).into_values();
        joint_fit(layout, mixgm::optimize::solve(f, penalty, &init, &options.config)?)
    };
    match options.estimator {
        Estimator::Pl => {
            let pl = PseudoLikelihood::new(data);
            solve_with(&pl, pl.layout())
        }
        Estimator::Mle => {
            let mle = MleObjective::new(data)?;
            solve_with(&mle, mle.layout())
        }
        Estimator::Crf => {
            let objective = crf_objective(data, features.expect("checked"))?;
            solve_with(&objective, objective.layout())
        }
        Estimator::Nodewise => fit_nodewise(data, penalty, options, None),
    }
}

/// Fits at every grid point, in order.
pub struct PathFits {
    pub lambdas: Vec<f64>,
    pub fits: Vec<std::result::Result<Fitted, CliError>>,
    pub seconds: Vec<f64>,
}

impl PathFits {
    pub fn total_iterations(&self) -> usize {
        self.fits
            .iter()
            .filter_map(|f| f.as_ref().ok())
            .map(|f| f.iterations)
            .sum()
    }
}

fn from_path(layout: &Layout, path: mixgm::optimize::PathResult) -> PathFits {
    PathFits {
        lambdas: path.lambdas,
        fits: path
            .fits
            .into_iter()
            .map(|f| f.map_err(CliError::from).and_then(|r| joint_fit(layout, r)))
            .collect(),
        seconds: path.seconds,
    }
}

/// Regularization path over `lambdas`. Joint estimators start at the
/// independence model; `warm_start` carries each solution to the next point.
pub fn path_estimator<C: Clock + ?Sized>(
    data: &Dataset,
    features: Option<&FeatureMatrix>,
    penalty: &PenaltySpec,
    lambdas: &[f64],
    options: &FitOptions,
    warm_start: bool,
    clock: &C,
) -> Result<PathFits> {
    check_features(options.estimator, features)?;
    let run = |f: &dyn SmoothObjective, layout: &Layout| {
        let init = independence_fit(data, layout).into_values();
        from_path(
            layout,
            path_solve(f, penalty, lambdas, &init, &options.config, warm_start, clock),
        )
    };
    Ok(match options.estimator {
        Estimator::Pl => {
            let pl = PseudoLikelihood::new(data);
            run(&pl, pl.layout())
        }
        Estimator::Mle => {
            let mle = MleObjective::new(data)?;
            run(&mle, mle.layout())
        }
        Estimator::Crf => {
            let objective = crf_objective(data, features.expect("checked"))?;
            run(&objective, objective.layout())
        }
        Estimator::Nodewise => {
            let mut fits = Vec::with_capacity(lambdas.len());
            let mut seconds = Vec::with_capacity(lambdas.len());
            let mut starts: Option<Vec<Vec<f64>>> = None;
            for &lambda in lambdas {
                let t0 = clock.seconds();
                let fit = fit_nodewise(data, &penalty.with_lambda(lambda), options, starts.as_deref());
                seconds.push(clock.seconds() - t0);
                if let (true, Ok(f)) = (warm_start, &fit) {
                    let pl = PseudoLikelihood::new(data);
                    let local = f
                        .nodes
                        .iter()
                        .map(|n| Ok(NodeProblem::new(&pl, n.node, penalty)?.gather(&n.full)))
                        .collect::<Result<Vec<_>>>()?;
                    starts = Some(local);
                }
                fits.push(fit);
            }
            PathFits {
                lambdas: lambdas.to_vec(),
                fits,
                seconds,
            }
        }
    })
}

/// Seeded generator for trial `index` of an experiment with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone)]
pub struct PhaseConfig {
    pub p: usize,
    pub q: usize,
    pub weights: LadderWeights,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub options: FitOptions,
    /// `lambda = scale * sqrt(log(p + q) / n)`
    pub lambda_scale: f64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            p: 4,
            q: 4,
            weights: LadderWeights::default(),
            sample_sizes: vec![50, 100, 200, 500, 1000],
            trials: 20,
            seed: 0,
            estimators: vec![Estimator::Pl, Estimator::Mle],
            options: FitOptions::default(),
            lambda_scale: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub n: usize,
    pub estimator: String,
    pub lambda: f64,
    pub trials: usize,
    pub recovered: usize,
    pub failures: usize,
    pub probability: f64,
}

/// Fraction of trials in which each estimator recovers the ladder's edge set
/// exactly, per sample size. Every trial draws its own data set; all
/// estimators of a trial share it. Failed fits count as misses.
pub fn phase_transition(config: &PhaseConfig) -> Result<Vec<PhaseRow>> {
    let truth = ladder_with(config.p, config.q, &config.weights);
    let target = edge_set(&truth);
    if config.estimators.contains(&Estimator::Crf) {
        return Err(CliError::Invalid(
            "the phase transition compares joint estimators".into(),
        ));
    }
    let jobs: Vec<(usize, usize)> = (0..config.sample_sizes.len())
        .flat_map(|i| (0..config.trials).map(move |t| (i, t)))
        .collect();
    let outcomes: Vec<Vec<Option<bool>>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let n = config.sample_sizes[i];
            let mut rng = trial_rng(config.seed, (i * config.trials + t) as u64);
            let data = sample_joint(&truth, n, &mut rng)?;
            let penalty = penalty_for(&data, None, config.options.calibrated)?;
            let lambda = config.lambda_scale * (((config.p + config.q) as f64).ln() / n as f64).sqrt();
            let penalty = penalty.with_lambda(lambda);
            Ok(config
                .estimators
                .iter()
                .map(|&estimator| {
                    let options = FitOptions {
                        estimator,
                        ..config.options.clone()
                    };
                    fit_estimator(&data, None, &penalty, &options)
                        .ok()
                        .map(|f| f.edges == target)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, &n) in config.sample_sizes.iter().enumerate() {
        for (e, estimator) in config.estimators.iter().enumerate() {
            let trial = &outcomes[i * config.trials..(i + 1) * config.trials];
            let recovered = trial.iter().filter(|o| o[e] == Some(true)).count();
            let failures = trial.iter().filter(|o| o[e].is_none()).count();
            rows.push(PhaseRow {
                n,
                estimator: estimator.name().into(),
                lambda: config.lambda_scale * (((config.p + config.q) as f64).ln() / n as f64).sqrt(),
                trials: config.trials,
                recovered,
                failures,
                probability: recovered as f64 / config.trials.max(1) as f64,
            });
        }
    }
    Ok(rows)
}

/// Held-out losses of one estimator at one penalty level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub lambda: f64,
    pub estimator: String,
    /// Mean negative log pseudolikelihood over the evaluated variables.
    pub pl_loss: f64,
    /// Mean negative log likelihood, for models small enough to enumerate.
    /// Infinite if the fitted model is not normalizable.
    pub likelihood_loss: Option<f64>,
    pub active_edges: usize,
    /// Regression loss of each evaluated variable given all others.
    pub per_variable: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    pub variables: Vec<String>,
    pub rows: Vec<CompareRow>,
}

/// Grid for a comparison: `points` values below the pseudolikelihood
/// `lambda_max` of `train`, or just `lambda = 0` when `points == 0`.
pub fn comparison_grid(train: &Dataset, penalty: &PenaltySpec, grid: &GridSpec) -> Result<Vec<f64>> {
    if grid.points == 0 {
        return Ok(vec![0.0]);
    }
    let lmax = lambda_max_for(Estimator::Pl, train, None, penalty)?;
    Ok(lambda_grid(lmax.value, grid))
}

fn node_losses(pl: &PseudoLikelihood<'_>, values: &[f64]) -> Vec<f64> {
    let layout = pl.layout();
    all_nodes(layout.p(), layout.q())
        .into_iter()
        .map(|v| pl.node_value(values, v))
        .collect()
}

fn likelihood_loss(theta: &Theta, test: &Dataset) -> Option<f64> {
    // normalizability is a property of B; other errors mean the state space is too big
    test.schema()
        .discrete_state_count()
        .filter(|&s| s <= MLE_ENUMERATION_CAP)?;
    Some(nll(theta, test).unwrap_or(f64::INFINITY))
}

/// Trains each estimator on `train` along `lambdas` (warm-started) and
/// evaluates the fits on `test`. `names` labels the variables.
pub fn compare(
    train: &Dataset,
    test: &Dataset,
    names: Vec<String>,
    estimators: &[Estimator],
    lambdas: &[f64],
    options: &FitOptions,
) -> Result<CompareTable> {
    if train.schema() != test.schema() {
        return Err(CliError::Invalid("train and test schemas differ".into()));
    }
    let cap_ok = train
        .schema()
        .discrete_state_count()
        .is_some_and(|s| s <= MLE_ENUMERATION_CAP);
    if estimators.contains(&Estimator::Mle) && !cap_ok {
        return Err(CliError::Invalid(format!(
            "maximum likelihood needs at most {MLE_ENUMERATION_CAP} discrete states"
        )));
    }
    let penalty = penalty_for(train, None, options.calibrated)?;
    let test_pl = PseudoLikelihood::new(test);
    let mut rows = Vec::new();
    for &estimator in estimators {
        let opts = FitOptions {
            estimator,
            ..options.clone()
        };
        let path = path_estimator(train, None, &penalty, lambdas, &opts, true, &mixgm::optimize::NoClock)?;
        for (&lambda, fit) in path.lambdas.iter().zip(path.fits) {
            let fit = fit?;
            let per_variable = if estimator == Estimator::Nodewise {
                fit.nodes.iter().map(|n| test_pl.node_value(&n.full, n.node)).collect()
            } else {
                node_losses(&test_pl, fit.theta.values())
            };
            rows.push(CompareRow {
                lambda,
                estimator: estimator.name().into(),
                pl_loss: per_variable.iter().sum(),
                likelihood_loss: likelihood_loss(&fit.theta, test),
                active_edges: fit.edges.iter().filter(|&&e| e).count(),
                per_variable,
            });
        }
    }
    Ok(CompareTable { variables: names, rows })
}

/// Conditional model against the joint model over all variables, both scored
/// by the conditional pseudolikelihood of the modeled variables on `test`.
/// `modeled` lists those variables in the joint schema; the conditional data
/// sets hold them in the same order with features built from the rest.
#[allow(clippy::too_many_arguments)]
pub fn compare_conditional(
    joint_train: &Dataset,
    joint_test: &Dataset,
    train: (&Dataset, &FeatureMatrix),
    test: (&Dataset, &FeatureMatrix),
    modeled: &[Variable],
    names: Vec<String>,
    lambdas: &[f64],
    options: &FitOptions,
) -> Result<CompareTable> {
    let joint_order = all_nodes(joint_train.schema().p(), joint_train.schema().q());
    let keep: Vec<usize> = joint_order
        .iter()
        .enumerate()
        .filter(|(_, v)| modeled.contains(v))
        .map(|(i, _)| i)
        .collect();
    let mut rows = Vec::new();

    let crf_options = FitOptions {
        estimator: Estimator::Crf,
        ..options.clone()
    };
    let penalty = penalty_for(train.0, Some(train.1), options.calibrated)?;
    let crf_test = PseudoLikelihood::with_features(test.0, test.1)?;
    let path = path_estimator(
        train.0,
        Some(train.1),
        &penalty,
        lambdas,
        &crf_options,
        true,
        &mixgm::optimize::NoClock,
    )?;
    for (&lambda, fit) in path.lambdas.iter().zip(path.fits) {
        let fit = fit?;
        let per_variable = node_losses(&crf_test, fit.theta.values());
        rows.push(CompareRow {
            lambda,
            estimator: "crf".into(),
            pl_loss: per_variable.iter().sum(),
            likelihood_loss: None,
            active_edges: fit.edges.iter().filter(|&&e| e).count(),
            per_variable,
        });
    }

    let joint_options = FitOptions {
        estimator: Estimator::Pl,
        ..options.clone()
    };
    let penalty = penalty_for(joint_train, None, options.calibrated)?;
    let joint_test_pl = PseudoLikelihood::new(joint_test);
    let path = path_estimator(
        joint_train,
        None,
        &penalty,
        lambdas,
        &joint_options,
        true,
        &mixgm::optimize::NoClock,
    )?;
    for (&lambda, fit) in path.lambdas.iter().zip(path.fits) {
        let fit = fit?;
        let all = node_losses(&joint_test_pl, fit.theta.values());
        let per_variable: Vec<f64> = keep.iter().map(|&i| all[i]).collect();
        rows.push(CompareRow {
            lambda,
            estimator: "generative".into(),
            pl_loss: per_variable.iter().sum(),
            likelihood_loss: None,
            active_edges: fit.edges.iter().filter(|&&e| e).count(),
            per_variable,
        });
    }
    Ok(CompareTable { variables: names, rows })
}

/// Random rows split into a training and a held-out part.
pub fn holdout_split(data: &Dataset, fraction: f64, seed: u64) -> (Dataset, Dataset) {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..data.n()).collect();
    idx.shuffle(&mut trial_rng(seed, u64::MAX));
    let test_n = ((data.n() as f64) * fraction).round() as usize;
    let (test, train) = idx.split_at(test_n.min(data.n()));
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (data.subset(&train), data.subset(&test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixgm::Schema;

    #[test]
    fn default_lambda_matches_rule() {
        assert!((default_lambda(10, 10, 1000) - 0.273_67).abs() < 1e-5);
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::Pl, Estimator::Mle, Estimator::Nodewise, Estimator::Crf] {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("lasso".parse::<Estimator>().is_err());
    }

    #[test]
    fn trial_streams_differ_and_repeat() {
        use rand::Rng;
        let a: u64 = trial_rng(1, 0).random();
        let b: u64 = trial_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, trial_rng(1, 0).random::<u64>());
    }

    #[test]
    fn nodewise_fit_combines_both_directions() {
        let truth = crate::graphs::ladder(2, 2);
        let data = sample_joint(&truth, 400, &mut trial_rng(3, 0)).unwrap();
        let penalty = penalty_for(&data, None, true).unwrap().with_lambda(0.05);
        let options = FitOptions {
            estimator: Estimator::Nodewise,
            ..FitOptions::default()
        };
        let fit = fit_estimator(&data, None, &penalty, &options).unwrap();
        assert_eq!(fit.nodes.len(), 4);
        let layout = fit.theta.layout();
        for (g, &e) in layout.edge_groups().iter().zip(&fit.edges) {
            assert_eq!(fit.theta.group_norm(g) > 0.0, e);
        }
        assert!(fit.theta.beta(0, 0) > 0.0);
    }

    #[test]
    fn conditional_estimator_requires_features() {
        let schema = Schema::new(1, vec![2]).unwrap();
        let data = Dataset::new(schema, vec![0.1, 0.2, 0.3], vec![0, 1, 0]).unwrap();
        let penalty = penalty_for(&data, None, false).unwrap();
        let options = FitOptions {
            estimator: Estimator::Crf,
            ..FitOptions::default()
        };
        assert!(fit_estimator(&data, None, &penalty, &options).is_err());
    }

    #[test]
    fn holdout_split_partitions_rows() {
        let schema = Schema::new(1, vec![]).unwrap();
        let data = Dataset::new(schema, (0..10).map(f64::from).collect(), vec![]).unwrap();
        let (train, test) = holdout_split(&data, 0.3, 5);
        assert_eq!((train.n(), test.n()), (7, 3));
        let mut all: Vec<f64> = train.x().iter().chain(test.x()).cloned().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, data.x());
    }
}
