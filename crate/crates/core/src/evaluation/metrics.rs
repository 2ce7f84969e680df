use crate::dataset::RatingDataset;
use crate::error::{Error, Result};
use crate::factorization::Predictor;

pub const MIN_RATING: f64 = 1.0;
pub const MAX_RATING: f64 = 5.0;

fn check(predictions: &[f64], truths: &[f64]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("prediction set"));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check(predictions, truths)?;
    let total: f64 = predictions.iter().zip(truths).map(|(p, t)| (t - p).abs()).sum();
    Ok(total / predictions.len() as f64)
}

/// Root mean square error.
pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check(predictions, truths)?;
    let total: f64 = predictions.iter().zip(truths).map(|(p, t)| (t - p) * (t - p)).sum();
    Ok((total / predictions.len() as f64).sqrt())
}

/// Error summary over one test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Number of tested ratings.
    pub tested: usize,
    pub mae: f64,
    pub rmse: f64,
}

/// Scores `model` on every test rating, with predictions clamped to the
/// 1 to 5 star scale.
pub fn evaluate<P: Predictor + ?Sized>(model: &P, test: &RatingDataset) -> Result<Metrics> {
    let (predictions, truths): (Vec<f64>, Vec<f64>) = test
        .ratings()
        .iter()
        .map(|r| (model.predict(r.user, r.item).clamp(MIN_RATING, MAX_RATING), r.value))
        .unzip();
    Ok(Metrics {
        tested: truths.len(),
        mae: mae(&predictions, &truths)?,
        rmse: rmse(&predictions, &truths)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let t = [1.0, 4.0, 5.0];
        assert_eq!(mae(&t, &t).unwrap(), 0.0);
        assert_eq!(rmse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let p = [2.0, 1.0, 4.0, 3.0];
        assert_eq!(mae(&p, &t).unwrap(), 1.0);
        assert_eq!(rmse(&p, &t).unwrap(), 1.0);
    }

    #[test]
    fn hand_arithmetic() {
        let (t, p) = ([5.0, 1.0], [4.0, 3.0]);
        assert_eq!(mae(&p, &t).unwrap(), 1.5);
        assert!((rmse(&p, &t).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&p, &t).unwrap() - 1.5811).abs() < 1e-4);
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(mae(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn evaluation_clamps_predictions() {
        use crate::dataset::{Rating, RatingDataset};
        use crate::factorization::FactorModel;
        let model = FactorModel::from_parts(1, vec![3.0], vec![3.0], 0.0).unwrap();
        let test = RatingDataset::from_dense(1, 1, vec![Rating { user: 0, item: 0, value: 4.0 }]).unwrap();
        let m = evaluate(&model, &test).unwrap();
        assert_eq!(m.tested, 1);
        assert_eq!(m.mae, 1.0);
    }
}
