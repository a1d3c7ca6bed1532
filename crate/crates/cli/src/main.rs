use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mixgm::nodewise::EdgeRule;
use mixgm::optimize::{lambda_grid, GridSpec, Method, SolverConfig};
use mixgm::regularization::calibrated_weights;
use mixgm::sampler::{DiscreteMethod, GibbsConfig, JointSampler};
use mixgm::{Layout, Variable};
use mixgm_cli::experiments::{
    compare, compare_conditional, comparison_grid, default_lambda, fit_estimator, holdout_split, lambda_max_for,
    method_name, path_estimator, penalty_for, phase_transition, trial_rng, CompareTable, Estimator, FitOptions,
    PhaseConfig, WallClock,
};
use mixgm_cli::graphs::{ladder_with, LadderWeights};
use mixgm_cli::io::{read_csv_path, split_features, write_csv, CategoricalOutput, Dictionary, IngestOptions, Ingested};
use mixgm_cli::model_file::{group_records, kind_name, FitInfo, GroupRecord, ModelFile, PenaltyInfo};

#[derive(Parser)]
#[command(name = "mixgm", version, about = "Structure learning for mixed graphical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a CSV file and write it with 1-based level codes and a level dictionary
    Ingest(IngestCmd),
    /// Fit one model
    Fit(FitCmd),
    /// Fit a regularization path
    Path(PathCmd),
    /// Draw samples from a model file or a synthetic ladder graph
    Sample(SampleCmd),
    /// Edge recovery probability against sample size on a ladder graph
    PhaseTransition(PhaseCmd),
    /// Held-out losses of several estimators along a penalty grid
    Compare(CompareCmd),
    /// Calibrated penalty weights of a data set
    Weights(WeightsCmd),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row
    #[arg(long)]
    input: PathBuf,
    /// Categorical column names; every other column is continuous
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Standardize continuous columns
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    standardize: bool,
    /// Encode against an existing level dictionary (JSON)
    #[arg(long)]
    dictionary: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<Ingested> {
        let dictionary = self.dictionary.as_deref().map(Dictionary::load).transpose()?;
        let options = IngestOptions {
            categorical: self.categorical.clone(),
            standardize: self.standardize,
            dictionary,
        };
        read_csv_path(&self.input, &options).with_context(|| format!("reading {}", self.input.display()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Pg,
    Apg,
    Pn,
    PnBfgs,
}

impl From<Solver> for Method {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Pg => Method::ProxGradient,
            Solver::Apg => Method::AcceleratedProxGradient,
            Solver::Pn => Method::ProxNewtonExact,
            Solver::PnBfgs => Method::ProxNewtonBfgs,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EstimatorArg {
    Pl,
    Mle,
    Nodewise,
    Crf,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Pl => Estimator::Pl,
            EstimatorArg::Mle => Estimator::Mle,
            EstimatorArg::Nodewise => Estimator::Nodewise,
            EstimatorArg::Crf => Estimator::Crf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    And,
    Or,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Solver::Pn)]
    solver: Solver,
    /// Calibrated group weights (otherwise unit weights)
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    calibrated: bool,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Combination of the two directed nodewise estimates of an edge
    #[arg(long, value_enum, default_value_t = RuleArg::And)]
    edge_rule: RuleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn options(&self, estimator: Estimator) -> FitOptions {
        FitOptions {
            estimator,
            config: SolverConfig {
                tol: self.tol,
                max_iter: self.max_iter,
                ..SolverConfig::with_method(self.solver.into())
            },
            calibrated: self.calibrated,
            edge_rule: match self.edge_rule {
                RuleArg::And => EdgeRule::And,
                RuleArg::Or => EdgeRule::Or,
            },
        }
    }
}

#[derive(Args)]
struct IngestCmd {
    #[command(flatten)]
    data: DataArgs,
    /// Coded CSV output (stdout if absent)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the level dictionary
    #[arg(long)]
    dictionary_out: Option<PathBuf>,
}

#[derive(Args)]
struct FitCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Pl)]
    estimator: EstimatorArg,
    /// Feature columns of the conditional model
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Penalty level (default 5 sqrt(log(p + q) / n))
    #[arg(long)]
    lambda: Option<f64>,
    /// Print lambda_max and exit
    #[arg(long)]
    lambda_max_only: bool,
    /// Model file (JSON)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Edge list with group norms (CSV, stdout if absent)
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 50)]
    grid_points: usize,
    /// lambda_min / lambda_max
    #[arg(long, default_value_t = 1e-4)]
    grid_ratio: f64,
}

#[derive(Args)]
struct PathCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Pl)]
    estimator: EstimatorArg,
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Start every grid point from the independence model
    #[arg(long)]
    cold: bool,
    /// Path table (CSV, stdout if absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SampleCmd {
    /// Model file to sample from
    #[arg(long, conflicts_with = "ladder")]
    model: Option<PathBuf>,
    /// Synthetic ladder graph with P continuous and Q binary variables
    #[arg(long, value_delimiter = ',', value_name = "P,Q")]
    ladder: Vec<usize>,
    /// Edge weight of the ladder graph
    #[arg(long, default_value_t = 0.4)]
    edge_weight: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gibbs sampling of the discrete part instead of enumeration
    #[arg(long)]
    gibbs: bool,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    /// Write 1-based codes instead of level labels
    #[arg(long)]
    codes: bool,
    /// Samples (CSV, stdout if absent)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Save the sampled-from model (useful with --ladder)
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseCmd {
    #[arg(long, default_value_t = 4)]
    p: usize,
    #[arg(long, default_value_t = 4)]
    q: usize,
    #[arg(long, default_value_t = 0.4)]
    edge_weight: f64,
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,500,1000")]
    sample_sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pl,mle")]
    estimators: Vec<EstimatorArg>,
    /// lambda = SCALE sqrt(log(p + q) / n)
    #[arg(long, default_value_t = 5.0)]
    lambda_scale: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Results table; `.json` writes JSON, anything else CSV (stdout if absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pl,nodewise")]
    estimators: Vec<EstimatorArg>,
    /// Held-out CSV (same columns); otherwise a random holdout of the input
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    holdout: f64,
    /// Conditional comparison: these columns become features of the conditional model
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Train and evaluate on the same rows
    #[arg(long)]
    train_is_test: bool,
    /// Results table; `.json` writes JSON, anything else CSV (stdout if absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct WeightsCmd {
    #[command(flatten)]
    data: DataArgs,
    /// Weights table (CSV, stdout if absent)
    #[arg(long)]
    output: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn is_json(path: Option<&Path>) -> bool {
    path.and_then(Path::extension).is_some_and(|e| e == "json")
}

fn write_groups(out: Box<dyn Write>, groups: &[GroupRecord], only_active: bool) -> anyhow::Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    for g in groups.iter().filter(|g| !only_active || g.norm > 0.0) {
        csv.serialize(g)?;
    }
    csv.flush()?;
    Ok(())
}

/// Data set, features and the dictionaries for the chosen estimator.
struct Prepared {
    data: mixgm::Dataset,
    features: Option<mixgm::FeatureMatrix>,
    dictionary: Dictionary,
    feature_names: Vec<String>,
}

fn prepare(ingested: Ingested, estimator: Estimator, features: &[String]) -> anyhow::Result<Prepared> {
    if estimator == Estimator::Crf {
        if features.is_empty() {
            bail!("--estimator crf needs --features");
        }
        let split = split_features(&ingested.data, &ingested.dictionary, features)?;
        Ok(Prepared {
            features: Some(split.features.standardized()),
            data: split.data,
            dictionary: split.dictionary,
            feature_names: split.feature_names,
        })
    } else {
        if !features.is_empty() {
            bail!("--features is only used by --estimator crf");
        }
        Ok(Prepared {
            data: ingested.data,
            features: None,
            dictionary: ingested.dictionary,
            feature_names: Vec::new(),
        })
    }
}

fn run_ingest(cmd: IngestCmd) -> anyhow::Result<()> {
    let ingested = cmd.data.load()?;
    let schema = ingested.data.schema();
    eprintln!(
        "n = {}, continuous = {}, categorical = {} (levels {:?})",
        ingested.data.n(),
        schema.p(),
        schema.q(),
        schema.levels()
    );
    write_csv(
        sink(cmd.output.as_deref())?,
        &ingested.data,
        &ingested.dictionary,
        CategoricalOutput::Codes,
    )?;
    if let Some(path) = cmd.dictionary_out {
        ingested.dictionary.save(&path)?;
    }
    Ok(())
}

fn run_fit(cmd: FitCmd) -> anyhow::Result<()> {
    let estimator: Estimator = cmd.estimator.into();
    let prepared = prepare(cmd.data.load()?, estimator, &cmd.features)?;
    let options = cmd.solver.options(estimator);
    let (data, features) = (&prepared.data, prepared.features.as_ref());
    let penalty = penalty_for(data, features, options.calibrated)?;
    if cmd.lambda_max_only {
        let lmax = lambda_max_for(estimator, data, features, &penalty)?;
        println!("{}", lmax.value);
        return Ok(());
    }
    let schema = data.schema();
    let lambda = cmd
        .lambda
        .unwrap_or_else(|| default_lambda(schema.p(), schema.q(), data.n()));
    let penalty = penalty.with_lambda(lambda);
    let fit = fit_estimator(data, features, &penalty, &options)?;
    let groups = group_records(&fit.theta, &penalty, &prepared.dictionary, &prepared.feature_names);
    eprintln!(
        "lambda = {lambda}, objective = {}, iterations = {}, converged = {}, edges = {}",
        fit.objective,
        fit.iterations,
        fit.converged,
        fit.edges.iter().filter(|&&e| e).count()
    );
    if let Some(path) = cmd.output.as_deref() {
        let mut file = ModelFile::new(&fit.theta, prepared.dictionary.clone(), prepared.feature_names.clone());
        file.penalty = Some(PenaltyInfo {
            lambda,
            calibrated: options.calibrated,
            groups: groups.clone(),
        });
        file.fit = Some(FitInfo {
            estimator: estimator.name().into(),
            solver: method_name(options.config.method).into(),
            objective: fit.objective,
            iterations: fit.iterations,
            converged: fit.converged,
            tol: options.config.tol,
            seed: None,
        });
        file.save(path)?;
    }
    write_groups(sink(cmd.edges.as_deref())?, &groups, true)
}

fn run_path(cmd: PathCmd) -> anyhow::Result<()> {
    let estimator: Estimator = cmd.estimator.into();
    let prepared = prepare(cmd.data.load()?, estimator, &cmd.features)?;
    let options = cmd.solver.options(estimator);
    let (data, features) = (&prepared.data, prepared.features.as_ref());
    let penalty = penalty_for(data, features, options.calibrated)?;
    let lmax = lambda_max_for(estimator, data, features, &penalty)?;
    let grid = lambda_grid(
        lmax.value,
        &GridSpec {
            points: cmd.grid.grid_points,
            ratio: cmd.grid.grid_ratio,
        },
    );
    let path = path_estimator(data, features, &penalty, &grid, &options, !cmd.cold, &WallClock::new())?;
    let mut csv = csv::Writer::from_writer(sink(cmd.output.as_deref())?);
    csv.write_record([
        "index",
        "lambda",
        "objective",
        "iterations",
        "converged",
        "active_edges",
        "seconds",
        "error",
    ])?;
    for (k, ((lambda, fit), secs)) in path.lambdas.iter().zip(&path.fits).zip(&path.seconds).enumerate() {
        let row = match fit {
            Ok(f) => [
                k.to_string(),
                lambda.to_string(),
                f.objective.to_string(),
                f.iterations.to_string(),
                f.converged.to_string(),
                f.edges.iter().filter(|&&e| e).count().to_string(),
                secs.to_string(),
                String::new(),
            ],
            Err(e) => [
                k.to_string(),
                lambda.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                secs.to_string(),
                e.to_string(),
            ],
        };
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn run_sample(cmd: SampleCmd) -> anyhow::Result<()> {
    let (theta, dictionary, features) = match (&cmd.model, cmd.ladder.as_slice()) {
        (Some(path), _) => {
            let file = ModelFile::load(path)?;
            (file.theta()?, file.dictionary.clone(), file.features.len())
        }
        (None, &[p, q]) => {
            let w = LadderWeights {
                continuous: cmd.edge_weight,
                mixed: cmd.edge_weight,
                discrete: cmd.edge_weight,
                ..LadderWeights::default()
            };
            let theta = ladder_with(p, q, &w);
            let dictionary = Dictionary::generic(theta.schema());
            (theta, dictionary, 0)
        }
        _ => bail!("give either --model or --ladder P,Q"),
    };
    if features > 0 {
        bail!("sampling a conditional model needs feature values; sample its joint part instead");
    }
    if let Some(path) = cmd.model_out.as_deref() {
        ModelFile::new(&theta, dictionary.clone(), Vec::new()).save(path)?;
    }
    let method = if cmd.gibbs {
        DiscreteMethod::Gibbs(GibbsConfig {
            burn_in: cmd.burn_in,
            thin: cmd.thin,
        })
    } else {
        DiscreteMethod::Exact
    };
    let sampler = JointSampler::with_method(&theta, method)?;
    let data = sampler.sample(cmd.n, &mut trial_rng(cmd.seed, 0))?;
    let output = if cmd.codes {
        CategoricalOutput::Codes
    } else {
        CategoricalOutput::Labels
    };
    write_csv(sink(cmd.output.as_deref())?, &data, &dictionary, output)?;
    Ok(())
}

fn run_phase(cmd: PhaseCmd) -> anyhow::Result<()> {
    let config = PhaseConfig {
        p: cmd.p,
        q: cmd.q,
        weights: LadderWeights {
            continuous: cmd.edge_weight,
            mixed: cmd.edge_weight,
            discrete: cmd.edge_weight,
            ..LadderWeights::default()
        },
        sample_sizes: cmd.sample_sizes,
        trials: cmd.trials,
        seed: cmd.solver.seed,
        estimators: cmd.estimators.iter().map(|&e| e.into()).collect(),
        options: cmd.solver.options(Estimator::Pl),
        lambda_scale: cmd.lambda_scale,
    };
    let rows = phase_transition(&config)?;
    let out = sink(cmd.output.as_deref())?;
    if is_json(cmd.output.as_deref()) {
        serde_json::to_writer_pretty(out, &rows)?;
    } else {
        let mut csv = csv::Writer::from_writer(out);
        for row in &rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
    }
    Ok(())
}

fn write_compare(out: Box<dyn Write>, table: &CompareTable, json: bool) -> anyhow::Result<()> {
    if json {
        serde_json::to_writer_pretty(out, table)?;
        return Ok(());
    }
    let mut csv = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["lambda", "estimator", "pl_loss", "likelihood_loss", "active_edges"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(table.variables.iter().map(|v| format!("loss_{v}")));
    csv.write_record(&header)?;
    for row in &table.rows {
        let mut record = vec![
            row.lambda.to_string(),
            row.estimator.clone(),
            row.pl_loss.to_string(),
            row.likelihood_loss.map_or_else(String::new, |v| v.to_string()),
            row.active_edges.to_string(),
        ];
        record.extend(row.per_variable.iter().map(f64::to_string));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

fn run_compare(cmd: CompareCmd) -> anyhow::Result<()> {
    let ingested = cmd.data.load()?;
    let (train, test) = if cmd.train_is_test {
        (ingested.data.clone(), ingested.data.clone())
    } else if let Some(path) = &cmd.test {
        let options = IngestOptions {
            dictionary: Some(ingested.dictionary.clone()),
            ..Default::default()
        };
        (ingested.data.clone(), read_csv_path(path, &options)?.data)
    } else {
        holdout_split(&ingested.data, cmd.holdout, cmd.solver.seed)
    };
    let options = cmd.solver.options(Estimator::Pl);
    let spec = GridSpec {
        points: cmd.grid.grid_points,
        ratio: cmd.grid.grid_ratio,
    };
    let penalty = penalty_for(&train, None, options.calibrated)?;
    let lambdas = comparison_grid(&train, &penalty, &spec)?;
    let table = if cmd.features.is_empty() {
        let estimators: Vec<Estimator> = cmd.estimators.iter().map(|&e| e.into()).collect();
        if estimators.contains(&Estimator::Crf) {
            bail!("the conditional estimator is compared through --features");
        }
        compare(
            &train,
            &test,
            ingested.dictionary.names(),
            &estimators,
            &lambdas,
            &options,
        )?
    } else {
        let dict = &ingested.dictionary;
        let tr = split_features(&train, dict, &cmd.features)?;
        let te = split_features(&test, dict, &cmd.features)?;
        let modeled: Vec<Variable> = tr.dictionary.names().iter().filter_map(|n| dict.variable(n)).collect();
        let (ftr, fte) = (tr.features.standardized(), te.features.standardized());
        compare_conditional(
            &train,
            &test,
            (&tr.data, &ftr),
            (&te.data, &fte),
            &modeled,
            tr.dictionary.names(),
            &lambdas,
            &options,
        )?
    };
    write_compare(sink(cmd.output.as_deref())?, &table, is_json(cmd.output.as_deref()))
}

fn run_weights(cmd: WeightsCmd) -> anyhow::Result<()> {
    let ingested = cmd.data.load()?;
    let calibration = calibrated_weights(&ingested.data)?;
    for w in &calibration.warnings {
        eprintln!("warning: {w:?}");
    }
    let layout = Layout::new(ingested.data.schema());
    let mut csv = csv::Writer::from_writer(sink(cmd.output.as_deref())?);
    csv.write_record(["kind", "a", "b", "weight"])?;
    for (g, w) in layout.edge_groups().iter().zip(&calibration.weights) {
        let (a, b) = g.edge().expect("edge group");
        let d = &ingested.dictionary;
        csv.write_record([kind_name(g.kind), d.name_of(a), d.name_of(b), &w.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> anyhow::Result<()> {
    let outcome = match Cli::parse().command {
        Command::Ingest(c) => run_ingest(c),
        Command::Fit(c) => run_fit(c),
        Command::Path(c) => run_path(c),
        Command::Sample(c) => run_sample(c),
        Command::PhaseTransition(c) => run_phase(c),
        Command::Compare(c) => run_compare(c),
        Command::Weights(c) => run_weights(c),
    };
    match outcome {
        // a closed stdout (`mixgm ... | head`) is not a failure
        Err(e) if broken_pipe(&e) => Ok(()),
        other => other,
    }
}
