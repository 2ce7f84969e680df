use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::experiment::{for_each_job, ExperimentConfig, ExperimentError, PreparedRun, RunFailure};
use super::report::{mean_std, EvaluationReport, ModelKind, RunRow};
use super::Metrics;
use crate::clustering::ClusteringConfig;
use crate::dataset::{RatingDataset, SplitSpec, TagCatalog};
use crate::error::{Error, Result};
use crate::factorization::TrainingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    Alpha,
    K,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::K => "k",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepParameter::Alpha => vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            SweepParameter::K => vec![2.0, 3.0, 5.0, 8.0, 12.0],
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(SweepParameter::Alpha),
            "k" => Ok(SweepParameter::K),
            _ => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter `{s}` (expected alpha or k)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    /// Strictly increasing candidate values.
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(parameter: SweepParameter, values: Vec<f64>) -> Result<Self> {
        let spec = SweepSpec { parameter, values };
        spec.validate()?;
        Ok(spec)
    }

    pub fn default_for(parameter: SweepParameter) -> Self {
        SweepSpec {
            parameter,
            values: parameter.default_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("sweep grid must be strictly increasing".into()));
        }
        for &v in &self.values {
            let ok = match self.parameter {
                SweepParameter::Alpha => v.is_finite() && v >= 0.0,
                SweepParameter::K => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
            };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "{v} is not a valid value for {}",
                    self.parameter
                )));
            }
        }
        Ok(())
    }

    fn apply(&self, value: f64, training: &TrainingConfig, clustering: &ClusteringConfig) -> (TrainingConfig, ClusteringConfig) {
        let (mut t, mut c) = (training.clone(), clustering.clone());
        match self.parameter {
            SweepParameter::Alpha => t.alpha = value,
            SweepParameter::K => c.k = value as usize,
        }
        (t, c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub run: usize,
    /// Fingerprint of the training partition; equal across values.
    pub partition: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub runs: Vec<SweepRun>,
    pub mae_mean: f64,
    pub rmse_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub fraction: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    /// Grid value with the lowest mean MAE (first one on ties).
    pub fn best_by_mae(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .fold(None, |best: Option<&SweepPoint>, p| match best {
                Some(b) if b.mae_mean <= p.mae_mean => Some(b),
                _ => Some(p),
            })
    }

    /// `parameter,value,mae_mean,rmse_mean`.
    pub fn csv(&self) -> String {
        let mut s = String::from("parameter,value,mae_mean,rmse_mean\n");
        for p in &self.points {
            writeln!(s, "{},{},{:.5},{:.5}", self.parameter, p.value, p.mae_mean, p.rmse_mean).unwrap();
        }
        s
    }
}

/// UCMF evaluated at every grid value of one parameter. All values share the
/// same per-run splits and seeds, so only the swept parameter changes. For an
/// alpha sweep the clustering of each run is computed once and reused.
pub fn sweep(
    dataset: &RatingDataset,
    tags: &TagCatalog,
    spec: &SweepSpec,
    fraction: f64,
    config: &ExperimentConfig,
) -> std::result::Result<SweepReport, ExperimentError> {
    let checked = ExperimentConfig {
        fractions: vec![fraction],
        ..config.clone()
    };
    checked
        .validate()
        .and_then(|_| spec.validate())
        .and_then(|_| SplitSpec::new(fraction, 0).map(|_| ()))
        .map_err(ExperimentError::Invalid)?;

    let jobs: Vec<(f64, usize)> = (0..config.runs).map(|r| (fraction, r)).collect();
    let results = for_each_job(&jobs, |fraction, run| sweep_run(dataset, tags, spec, config, fraction, run));

    let mut per_value: Vec<Vec<SweepRun>> = vec![Vec::new(); spec.values.len()];
    for (run, result) in results.into_iter().enumerate() {
        match result {
            Ok(metrics) => {
                for (slot, (partition, m)) in per_value.iter_mut().zip(metrics) {
                    slot.push(SweepRun {
                        run,
                        partition,
                        metrics: m,
                    });
                }
            }
            Err(failure) => {
                let partial = EvaluationReport::new(
                    vec![fraction],
                    per_value
                        .first()
                        .map(|runs| {
                            runs.iter()
                                .map(|r| RunRow {
                                    fraction,
                                    run: r.run,
                                    model: ModelKind::Ucmf,
                                    metrics: r.metrics,
                                    partition: r.partition,
                                })
                                .collect()
                        })
                        .unwrap_or_default(),
                );
                return Err(ExperimentError::Run {
                    fraction,
                    run,
                    stage: failure.stage,
                    source: failure.source,
                    partial: Box::new(partial),
                });
            }
        }
    }

    let points = spec
        .values
        .iter()
        .zip(per_value)
        .map(|(&value, runs)| {
            let maes: Vec<f64> = runs.iter().map(|r| r.metrics.mae).collect();
            let rmses: Vec<f64> = runs.iter().map(|r| r.metrics.rmse).collect();
            SweepPoint {
                value,
                mae_mean: mean_std(&maes).0,
                rmse_mean: mean_std(&rmses).0,
                runs,
            }
        })
        .collect();
    Ok(SweepReport {
        parameter: spec.parameter,
        fraction,
        points,
    })
}

fn sweep_run(
    dataset: &RatingDataset,
    tags: &TagCatalog,
    spec: &SweepSpec,
    config: &ExperimentConfig,
    fraction: f64,
    run: usize,
) -> std::result::Result<Vec<(u64, Metrics)>, RunFailure> {
    let prepared = PreparedRun::new(dataset, tags, fraction, run, config.base_seed)?;
    let partition = prepared.train.fingerprint();
    let mut out = Vec::with_capacity(spec.values.len());
    match spec.parameter {
        SweepParameter::Alpha => {
            let (_, weights) = prepared.cluster(&config.clustering)?;
            for &value in &spec.values {
                let (training, _) = spec.apply(value, &config.training, &config.clustering);
                out.push((partition, prepared.train_ucmf(&weights, &training)?.1));
            }
        }
        SweepParameter::K => {
            for &value in &spec.values {
                let (training, clustering) = spec.apply(value, &config.training, &config.clustering);
                let (_, weights) = prepared.cluster(&clustering)?;
                out.push((partition, prepared.train_ucmf(&weights, &training)?.1));
            }
        }
    }
    debug_assert!(prepared.run == run && prepared.fraction == fraction);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(SweepSpec::new(SweepParameter::Alpha, vec![]).is_err());
        assert!(SweepSpec::new(SweepParameter::Alpha, vec![0.1, 0.01]).is_err());
        assert!(SweepSpec::new(SweepParameter::Alpha, vec![0.1, 0.1]).is_err());
        assert!(SweepSpec::new(SweepParameter::K, vec![2.5]).is_err());
        assert!(SweepSpec::new(SweepParameter::K, vec![0.0, 1.0]).is_err());
        assert!(SweepSpec::new(SweepParameter::K, vec![1.0, 3.0]).is_ok());
        assert!(SweepSpec::default_for(SweepParameter::Alpha).validate().is_ok());
        assert!(SweepSpec::default_for(SweepParameter::K).validate().is_ok());
    }

    #[test]
    fn parameter_names() {
        assert_eq!("alpha".parse::<SweepParameter>().unwrap(), SweepParameter::Alpha);
        assert_eq!("K".parse::<SweepParameter>().unwrap(), SweepParameter::K);
        assert!("lambda".parse::<SweepParameter>().is_err());
    }

    #[test]
    fn csv_and_best() {
        let point = |value, mae| SweepPoint {
            value,
            runs: vec![],
            mae_mean: mae,
            rmse_mean: mae + 0.2,
        };
        let report = SweepReport {
            parameter: SweepParameter::Alpha,
            fraction: 0.9,
            points: vec![point(0.0001, 0.8), point(0.001, 0.75), point(0.01, 0.75)],
        };
        assert_eq!(report.best_by_mae().unwrap().value, 0.001);
        assert_eq!(
            report.csv(),
            "parameter,value,mae_mean,rmse_mean\nalpha,0.0001,0.80000,1.00000\n\
             alpha,0.001,0.75000,0.95000\nalpha,0.01,0.75000,0.95000\n"
        );
    }
}
