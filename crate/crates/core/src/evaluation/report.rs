use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::Metrics;

/// The four compared predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    UserMean,
    ItemMean,
    Mf,
    Ucmf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::UserMean, ModelKind::ItemMean, ModelKind::Mf, ModelKind::Ucmf];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::UserMean => "UM",
            ModelKind::ItemMean => "IM",
            ModelKind::Mf => "MF",
            ModelKind::Ucmf => "UCMF",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mae,
    Rmse,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "MAE",
            Metric::Rmse => "RMSE",
        }
    }

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Metric::Mae => m.mae,
            Metric::Rmse => m.rmse,
        }
    }
}

/// One model evaluated on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub fraction: f64,
    pub run: usize,
    pub model: ModelKind,
    pub metrics: Metrics,
    /// Fingerprint of the training partition.
    pub partition: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub fraction: f64,
    pub model: ModelKind,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation over runs (zero for a single run).
    pub stddev: f64,
    pub runs: usize,
}

/// Per-run rows, ordered by fraction (as configured), run and model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationReport {
    pub(crate) fractions: Vec<f64>,
    pub(crate) rows: Vec<RunRow>,
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl EvaluationReport {
    pub fn new(fractions: Vec<f64>, mut rows: Vec<RunRow>) -> Self {
        let pos = |f: f64| fractions.iter().position(|&x| x == f).unwrap_or(usize::MAX);
        rows.sort_by(|a, b| {
            (pos(a.fraction), a.run, a.model).cmp(&(pos(b.fraction), b.run, b.model))
        });
        EvaluationReport { fractions, rows }
    }

    pub fn rows(&self) -> &[RunRow] {
        &self.rows
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Per-run values of one metric, in run order.
    pub fn values(&self, fraction: f64, model: ModelKind, metric: Metric) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.fraction == fraction && r.model == model)
            .map(|r| metric.of(&r.metrics))
            .collect()
    }

    pub fn mean(&self, fraction: f64, model: ModelKind, metric: Metric) -> Option<f64> {
        let values = self.values(fraction, model, metric);
        (!values.is_empty()).then(|| mean_std(&values).0)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out = Vec::new();
        for &fraction in &self.fractions {
            for model in ModelKind::ALL {
                for metric in [Metric::Mae, Metric::Rmse] {
                    let values = self.values(fraction, model, metric);
                    if values.is_empty() {
                        continue;
                    }
                    let (mean, stddev) = mean_std(&values);
                    out.push(SummaryRow {
                        fraction,
                        model,
                        metric,
                        mean,
                        stddev,
                        runs: values.len(),
                    });
                }
            }
        }
        out
    }

    /// `fraction,run,model,metric,value`; metrics `S`, `MAE` and `RMSE` per row.
    pub fn runs_csv(&self) -> String {
        let mut s = String::from("fraction,run,model,metric,value\n");
        for r in &self.rows {
            let head = format!("{},{},{}", r.fraction, r.run, r.model);
            writeln!(s, "{head},S,{}", r.metrics.tested).unwrap();
            writeln!(s, "{head},MAE,{:.5}", r.metrics.mae).unwrap();
            writeln!(s, "{head},RMSE,{:.5}", r.metrics.rmse).unwrap();
        }
        s
    }

    /// `fraction,model,metric,mean,stddev`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("fraction,model,metric,mean,stddev\n");
        for r in self.summary() {
            writeln!(
                s,
                "{},{},{},{:.5},{:.5}",
                r.fraction,
                r.model,
                r.metric.name(),
                r.mean,
                r.stddev
            )
            .unwrap();
        }
        s
    }

    /// Human-readable table: one line per fraction and metric, one column per model.
    pub fn summary_table(&self) -> String {
        let mut s = format!("{:<9} {:<7}", "training", "metric");
        for m in ModelKind::ALL {
            write!(s, " {:>18}", m.name()).unwrap();
        }
        s.push('\n');
        for &fraction in &self.fractions {
            for metric in [Metric::Mae, Metric::Rmse] {
                write!(s, "{:<9} {:<7}", format!("{:.0}%", fraction * 100.0), metric.name()).unwrap();
                for model in ModelKind::ALL {
                    let values = self.values(fraction, model, metric);
                    if values.is_empty() {
                        write!(s, " {:>18}", "-").unwrap();
                    } else {
                        let (mean, sd) = mean_std(&values);
                        write!(s, " {:>18}", format!("{mean:.5} ±{sd:.5}")).unwrap();
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}
