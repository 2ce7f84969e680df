use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::report::{EvaluationReport, ModelKind, RunRow};
use super::{evaluate, Metrics};
use crate::clustering::{kmeans, ClusterAssignment, ClusteringConfig, InterestMatrix};
use crate::dataset::{split, RatingDataset, SplitSpec, TagCatalog};
use crate::error::{Error, Result};
use crate::factorization::{train_mf, train_ucmf, BaselineKind, BaselineModel, FactorModel, TrainingConfig};
use crate::seed::{run_seed, stream_seed};
use crate::similarity::{build_neighbor_weights, NeighborWeights};

/// Settings of the comparison protocol.
///
/// The `seed` fields of `training` and `clustering` are ignored: every run
/// derives its own split, clustering and training seeds from `base_seed`,
/// the fraction and the run index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub fractions: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
    pub training: TrainingConfig,
    pub clustering: ClusteringConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            fractions: vec![0.9, 0.8, 0.7],
            runs: 10,
            base_seed: 2014,
            training: TrainingConfig::default(),
            clustering: ClusteringConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.fractions.is_empty() {
            return Err(Error::InvalidConfig("at least one training fraction is required".into()));
        }
        for (k, &f) in self.fractions.iter().enumerate() {
            SplitSpec::new(f, 0)?;
            if self.fractions[..k].contains(&f) {
                return Err(Error::InvalidConfig(format!("fraction {f} listed twice")));
            }
        }
        self.training.validate()?;
        self.clustering.validate()
    }
}

/// Which part of a run failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Split,
    Clustering,
    Model(ModelKind),
    Artifacts,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Split => f.write_str("split"),
            Stage::Clustering => f.write_str("clustering"),
            Stage::Model(m) => write!(f, "model {m}"),
            Stage::Artifacts => f.write_str("artifact output"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Invalid(Error),

    /// A run failed; `partial` holds every row that completed.
    #[error("fraction {fraction}, run {run}, {stage}: {source}")]
    Run {
        fraction: f64,
        run: usize,
        stage: Stage,
        #[source]
        source: Error,
        partial: Box<EvaluationReport>,
    },
}

impl ExperimentError {
    pub fn partial(&self) -> Option<&EvaluationReport> {
        match self {
            ExperimentError::Run { partial, .. } => Some(partial),
            ExperimentError::Invalid(_) => None,
        }
    }
}

/// Everything a single run produced besides its metrics.
pub struct RunArtifacts<'a> {
    pub fraction: f64,
    pub run: usize,
    pub train: &'a RatingDataset,
    pub assignment: &'a ClusterAssignment,
    pub mf: &'a FactorModel,
    pub ucmf: &'a FactorModel,
}

/// Split, interest vectors and seeds of one `(fraction, run)` cell.
pub(crate) struct PreparedRun {
    pub fraction: f64,
    pub run: usize,
    pub seed: u64,
    pub train: RatingDataset,
    pub test: RatingDataset,
    pub interest: InterestMatrix,
}

pub(crate) struct RunFailure {
    pub stage: Stage,
    pub source: Error,
}

impl RunFailure {
    pub fn at(stage: Stage) -> impl FnOnce(Error) -> RunFailure {
        move |source| RunFailure { stage, source }
    }
}

impl PreparedRun {
    pub fn new(
        dataset: &RatingDataset,
        tags: &TagCatalog,
        fraction: f64,
        run: usize,
        base_seed: u64,
    ) -> std::result::Result<Self, RunFailure> {
        let seed = run_seed(base_seed, fraction, run);
        let (train, test) = split(dataset, &SplitSpec::new(fraction, seed).map_err(RunFailure::at(Stage::Split))?)
            .map_err(RunFailure::at(Stage::Split))?;
        let interest = InterestMatrix::build(&train, tags).map_err(RunFailure::at(Stage::Clustering))?;
        Ok(PreparedRun {
            fraction,
            run,
            seed,
            train,
            test,
            interest,
        })
    }

    pub fn cluster(
        &self,
        config: &ClusteringConfig,
    ) -> std::result::Result<(ClusterAssignment, NeighborWeights), RunFailure> {
        let config = ClusteringConfig {
            seed: stream_seed(self.seed, 1),
            ..config.clone()
        };
        let assignment = kmeans(&self.interest, &config).map_err(RunFailure::at(Stage::Clustering))?;
        let weights = build_neighbor_weights(&assignment, &self.train).map_err(RunFailure::at(Stage::Clustering))?;
        Ok((assignment, weights))
    }

    pub fn training_config(&self, config: &TrainingConfig) -> TrainingConfig {
        TrainingConfig {
            seed: stream_seed(self.seed, 2),
            ..config.clone()
        }
    }

    pub fn train_ucmf(
        &self,
        weights: &NeighborWeights,
        config: &TrainingConfig,
    ) -> std::result::Result<(FactorModel, Metrics), RunFailure> {
        let model = train_ucmf(&self.train, weights, &self.training_config(config))
            .map_err(RunFailure::at(Stage::Model(ModelKind::Ucmf)))?;
        let metrics = evaluate(&model, &self.test).map_err(RunFailure::at(Stage::Model(ModelKind::Ucmf)))?;
        Ok((model, metrics))
    }
}

pub(crate) fn for_each_job<T, F>(jobs: &[(f64, usize)], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        jobs.par_iter().map(|&(fraction, run)| f(fraction, run)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(|&(fraction, run)| f(fraction, run)).collect()
    }
}

type ArtifactHook<'h> = &'h (dyn Fn(&RunArtifacts<'_>) -> Result<()> + Sync);

fn run_one(
    dataset: &RatingDataset,
    tags: &TagCatalog,
    config: &ExperimentConfig,
    fraction: f64,
    run: usize,
    hook: Option<ArtifactHook<'_>>,
) -> std::result::Result<Vec<RunRow>, (Vec<RunRow>, RunFailure)> {
    let mut rows = Vec::with_capacity(4);
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(failure) => return Err((rows, failure)),
            }
        };
    }
    let prepared = attempt!(PreparedRun::new(dataset, tags, fraction, run, config.base_seed));
    let partition = prepared.train.fingerprint();
    let push = |rows: &mut Vec<RunRow>, model: ModelKind, metrics: Metrics| {
        rows.push(RunRow {
            fraction,
            run,
            model,
            metrics,
            partition,
        })
    };

    for (kind, model) in [
        (BaselineKind::UserMean, ModelKind::UserMean),
        (BaselineKind::ItemMean, ModelKind::ItemMean),
    ] {
        let metrics = attempt!(BaselineModel::train(&prepared.train, kind)
            .and_then(|b| evaluate(&b, &prepared.test))
            .map_err(RunFailure::at(Stage::Model(model))));
        push(&mut rows, model, metrics);
    }

    let training = prepared.training_config(&config.training);
    let mf = attempt!(train_mf(&prepared.train, &training).map_err(RunFailure::at(Stage::Model(ModelKind::Mf))));
    let metrics = attempt!(evaluate(&mf, &prepared.test).map_err(RunFailure::at(Stage::Model(ModelKind::Mf))));
    push(&mut rows, ModelKind::Mf, metrics);

    let (assignment, weights) = attempt!(prepared.cluster(&config.clustering));
    let (ucmf, metrics) = attempt!(prepared.train_ucmf(&weights, &config.training));
    push(&mut rows, ModelKind::Ucmf, metrics);

    if let Some(hook) = hook {
        let artifacts = RunArtifacts {
            fraction,
            run,
            train: &prepared.train,
            assignment: &assignment,
            mf: &mf,
            ucmf: &ucmf,
        };
        attempt!(hook(&artifacts).map_err(RunFailure::at(Stage::Artifacts)));
    }
    Ok(rows)
}

/// Fits and scores UM, IM, MF and UCMF on `runs` random splits for every
/// training fraction. Clustering and similarities are rebuilt from each
/// training split. Runs execute in parallel; the report does not depend on
/// scheduling.
pub fn run_experiment(
    dataset: &RatingDataset,
    tags: &TagCatalog,
    config: &ExperimentConfig,
) -> std::result::Result<EvaluationReport, ExperimentError> {
    run_experiment_with(dataset, tags, config, None)
}

/// [`run_experiment`] with a callback receiving each run's split, clustering
/// and trained factor models.
pub fn run_experiment_with(
    dataset: &RatingDataset,
    tags: &TagCatalog,
    config: &ExperimentConfig,
    hook: Option<ArtifactHook<'_>>,
) -> std::result::Result<EvaluationReport, ExperimentError> {
    config.validate().map_err(ExperimentError::Invalid)?;
    let jobs: Vec<(f64, usize)> = config
        .fractions
        .iter()
        .flat_map(|&f| (0..config.runs).map(move |r| (f, r)))
        .collect();
    let results = for_each_job(&jobs, |fraction, run| run_one(dataset, tags, config, fraction, run, hook));

    let mut rows = Vec::new();
    let mut first_failure = None;
    for ((fraction, run), result) in jobs.iter().zip(results) {
        match result {
            Ok(r) => rows.extend(r),
            Err((r, failure)) => {
                rows.extend(r);
                if first_failure.is_none() {
                    first_failure = Some((*fraction, *run, failure));
                }
            }
        }
    }
    let report = EvaluationReport::new(config.fractions.clone(), rows);
    match first_failure {
        None => Ok(report),
        Some((fraction, run, failure)) => Err(ExperimentError::Run {
            fraction,
            run,
            stage: failure.stage,
            source: failure.source,
            partial: Box::new(report),
        }),
    }
}
